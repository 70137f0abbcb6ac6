//! Frame data: planes, raw frame files, and the synthetic generator.
//!
//! The raw frame file format carries no headers: each frame is the model's
//! input arrays (in declaration order), each row-major, one unsigned byte
//! per sample; frames follow each other back to back. Output files use the
//! same layout over the model's output arrays. Shapes come from the model.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::SimError;
use crate::ir::{Model, ScalarType, Shape};
use crate::tiler::{DenseArray, ScalarVec};

/// One image plane of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

impl Plane {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), rows * cols, "plane data must fill rows x cols");
        Plane { rows, cols, data }
    }

    pub fn filled(rows: usize, cols: usize, value: u8) -> Self {
        Plane {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.cols + col]
    }
}

/// A video frame: three planes (luma then two chroma planes for the 4:2:0
/// models; three equally sized planes for full-resolution variants).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub planes: Vec<Plane>,
}

/// Ordered (name, shape) layout of the u8 arrays in a raw frame file.
#[derive(Debug, Clone)]
pub struct FrameLayout {
    pub entries: Vec<(String, Shape)>,
}

impl FrameLayout {
    /// Layout of a model's input arrays. Frame files carry bytes, so every
    /// input array must be u8.
    pub fn for_inputs(model: &Model) -> Result<Self, SimError> {
        Self::from_ids(model, model.input_arrays())
    }

    /// Layout of a model's output arrays.
    pub fn for_outputs(model: &Model) -> Result<Self, SimError> {
        Self::from_ids(model, model.output_arrays())
    }

    fn from_ids(model: &Model, ids: Vec<crate::ir::ArrayId>) -> Result<Self, SimError> {
        let mut entries = Vec::new();
        for id in ids {
            let array = model.array(id);
            if array.element != ScalarType::U8 {
                return Err(SimError::FrameIo(format!(
                    "raw frame files hold u8 samples; array `{}` is {}",
                    array.name, array.element
                )));
            }
            entries.push((array.name.clone(), array.shape.clone()));
        }
        Ok(FrameLayout { entries })
    }

    /// Bytes per frame.
    pub fn frame_bytes(&self) -> usize {
        self.entries.iter().map(|(_, s)| s.len()).sum()
    }

    /// Read one frame. Returns `Ok(None)` on a clean end of stream and an
    /// error on a truncated frame.
    pub fn read_frame(
        &self,
        reader: &mut impl Read,
    ) -> Result<Option<BTreeMap<String, DenseArray>>, SimError> {
        let mut arrays = BTreeMap::new();
        for (i, (name, shape)) in self.entries.iter().enumerate() {
            let mut buf = vec![0u8; shape.len()];
            let mut filled = 0;
            while filled < buf.len() {
                let n = reader
                    .read(&mut buf[filled..])
                    .map_err(|e| SimError::FrameIo(e.to_string()))?;
                if n == 0 {
                    break;
                }
                filled += n;
            }
            if filled == 0 && i == 0 {
                return Ok(None);
            }
            if filled < buf.len() {
                return Err(SimError::FrameIo(format!(
                    "truncated frame: array `{name}` needs {} bytes, got {filled}",
                    buf.len()
                )));
            }
            arrays.insert(
                name.clone(),
                DenseArray {
                    shape: shape.clone(),
                    data: ScalarVec::U8(buf),
                },
            );
        }
        Ok(Some(arrays))
    }

    /// Append one frame.
    pub fn write_frame(
        &self,
        writer: &mut impl Write,
        arrays: &BTreeMap<String, DenseArray>,
    ) -> Result<(), SimError> {
        for (name, _) in &self.entries {
            let array = arrays
                .get(name)
                .ok_or_else(|| SimError::FrameIo(format!("frame is missing array `{name}`")))?;
            writer
                .write_all(&array.data.to_bytes())
                .map_err(|e| SimError::FrameIo(e.to_string()))?;
        }
        Ok(())
    }
}

/// Deterministic pseudo-random inputs for a model: same seed and frame
/// index, same bytes, on every platform.
pub fn synthetic_inputs(
    model: &Model,
    seed: u64,
    frame_index: u64,
) -> BTreeMap<String, DenseArray> {
    let mut out = BTreeMap::new();
    for (slot, id) in model.input_arrays().into_iter().enumerate() {
        let array = model.array(id);
        let mut state = seed
            .wrapping_mul(0x100000001B3)
            .wrapping_add(frame_index)
            .wrapping_mul(0x9E3779B97F4A7C15)
            .wrapping_add(slot as u64 + 1);
        let len = array.shape.len();
        let data = match array.element {
            ScalarType::U8 => ScalarVec::U8(
                (0..len)
                    .map(|_| (splitmix64(&mut state) >> 56) as u8)
                    .collect(),
            ),
            ScalarType::I32 => {
                ScalarVec::I32((0..len).map(|_| splitmix64(&mut state) as i32).collect())
            }
            ScalarType::F32 => ScalarVec::F32(
                (0..len)
                    .map(|_| (splitmix64(&mut state) >> 40) as f32 / (1u64 << 24) as f32)
                    .collect(),
            ),
        };
        out.insert(
            array.name.clone(),
            DenseArray {
                shape: array.shape.clone(),
                data,
            },
        );
    }
    out
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
