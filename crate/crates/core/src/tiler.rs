//! Tiler index algebra: pattern extraction, pattern writing, and coverage
//! verification.
//!
//! A tiler maps a repetition index `r` and an intra-pattern index `f` to an
//! array element index:
//!
//! ```text
//! index = (origin + paving * r + fitting * f) mod shape
//! ```
//!
//! computed componentwise with the mathematical (always non-negative) modulo,
//! so every tiler is total: indices wrap around the array torus-style and can
//! never go out of bounds. Patterns and arrays are linearized row-major and
//! the backend emits the same arithmetic, so simulator and generated code
//! agree bit-exactly.

use crate::ir::{ScalarType, Shape, Tiler};

/// Typed dense storage for array and pattern elements.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarVec {
    U8(Vec<u8>),
    I32(Vec<i32>),
    F32(Vec<f32>),
}

impl ScalarVec {
    pub fn zeros(ty: ScalarType, len: usize) -> Self {
        match ty {
            ScalarType::U8 => ScalarVec::U8(vec![0; len]),
            ScalarType::I32 => ScalarVec::I32(vec![0; len]),
            ScalarType::F32 => ScalarVec::F32(vec![0.0; len]),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ScalarVec::U8(v) => v.len(),
            ScalarVec::I32(v) => v.len(),
            ScalarVec::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scalar_type(&self) -> ScalarType {
        match self {
            ScalarVec::U8(_) => ScalarType::U8,
            ScalarVec::I32(_) => ScalarType::I32,
            ScalarVec::F32(_) => ScalarType::F32,
        }
    }

    /// Raw little-endian bytes (u8 data is returned as-is).
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            ScalarVec::U8(v) => v.clone(),
            ScalarVec::I32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            ScalarVec::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        }
    }
}

/// A dense multidimensional value: whole arrays and extracted patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseArray {
    pub shape: Shape,
    pub data: ScalarVec,
}

/// A pattern is a small dense array carved out of a larger one by a tiler.
pub type Pattern = DenseArray;

impl DenseArray {
    pub fn zeros(ty: ScalarType, shape: Shape) -> Self {
        let len = shape.len();
        DenseArray {
            shape,
            data: ScalarVec::zeros(ty, len),
        }
    }

    pub fn from_u8(shape: Shape, data: Vec<u8>) -> Result<Self, TilerError> {
        if data.len() != shape.len() {
            return Err(TilerError::ElementCount {
                expected: shape.len(),
                got: data.len(),
            });
        }
        Ok(DenseArray {
            shape,
            data: ScalarVec::U8(data),
        })
    }

    pub fn from_i32(shape: Shape, data: Vec<i32>) -> Result<Self, TilerError> {
        if data.len() != shape.len() {
            return Err(TilerError::ElementCount {
                expected: shape.len(),
                got: data.len(),
            });
        }
        Ok(DenseArray {
            shape,
            data: ScalarVec::I32(data),
        })
    }

    pub fn scalar_type(&self) -> ScalarType {
        self.data.scalar_type()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TilerError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("array shape {got} does not match tiler's array shape {expected}")]
    ArrayShape { expected: Shape, got: Shape },
    #[error("pattern shape {got} does not match tiler pattern shape {expected}")]
    PatternShape { expected: Shape, got: Shape },
    #[error("element type {got} does not match array element type {expected}")]
    ElementType {
        expected: ScalarType,
        got: ScalarType,
    },
    #[error("storage holds {got} elements, shape wants {expected}")]
    ElementCount { expected: usize, got: usize },
}

/// Result of enumerating every element a tiler touches over a repetition
/// space. Witness lists are truncated to [`MAX_WITNESSES`] entries; when a
/// tiling both overlaps and leaves gaps, overlaps are reported (they are the
/// ones that make write order observable).
#[derive(Debug, Clone, PartialEq)]
pub enum Coverage {
    /// Every array element is hit exactly once.
    Exact,
    /// Some elements are hit more than once.
    Overlaps(Vec<Vec<usize>>),
    /// Some elements are never hit (and none more than once).
    Gaps(Vec<Vec<usize>>),
}

/// Cap on witness indices reported by [`check_coverage`].
pub const MAX_WITNESSES: usize = 10;

/// Map a repetition index and pattern index to the array element index.
///
/// Errors when vector lengths disagree with the tiler's matrices; within
/// valid dimensions the result is always in bounds thanks to the modulo rule.
pub fn element_index(
    tiler: &Tiler,
    array_shape: &Shape,
    r: &[usize],
    f: &[usize],
) -> Result<Vec<usize>, TilerError> {
    let dims = array_shape.dims();
    if tiler.origin.len() != dims || tiler.paving.len() != dims || tiler.fitting.len() != dims {
        return Err(TilerError::DimMismatch(format!(
            "tiler is built for {}-dimensional arrays, got shape {array_shape}",
            tiler.origin.len()
        )));
    }
    let mut index = vec![0usize; dims];
    for d in 0..dims {
        if tiler.paving[d].len() != r.len() {
            return Err(TilerError::DimMismatch(format!(
                "paving row has {} columns, repetition index has {} coordinates",
                tiler.paving[d].len(),
                r.len()
            )));
        }
        if tiler.fitting[d].len() != f.len() {
            return Err(TilerError::DimMismatch(format!(
                "fitting row has {} columns, pattern index has {} coordinates",
                tiler.fitting[d].len(),
                f.len()
            )));
        }
        let mut coord = tiler.origin[d];
        for (k, &rk) in r.iter().enumerate() {
            coord += tiler.paving[d][k] * rk as i64;
        }
        for (j, &fj) in f.iter().enumerate() {
            coord += tiler.fitting[d][j] * fj as i64;
        }
        index[d] = coord.rem_euclid(array_shape.extents()[d] as i64) as usize;
    }
    Ok(index)
}

/// Per-tiler precomputation shared across repetition indices.
///
/// Validates the tiler against its array shape once, precomputes the fitting
/// offset of every pattern element, and then maps `(r, element)` pairs to
/// linear array indices with one modulo per dimension.
pub struct TilePlan {
    origin: Vec<i64>,
    paving: Vec<Vec<i64>>,
    /// fitting offset per (pattern element, array dim), elements row-major.
    offsets: Vec<Vec<i64>>,
    strides: Vec<usize>,
    extents: Vec<usize>,
    pattern_shape: Shape,
}

impl TilePlan {
    pub fn new(tiler: &Tiler, array_shape: &Shape) -> Result<Self, TilerError> {
        let dims = array_shape.dims();
        if tiler.origin.len() != dims || tiler.paving.len() != dims || tiler.fitting.len() != dims {
            return Err(TilerError::DimMismatch(format!(
                "tiler is built for {}-dimensional arrays, got shape {array_shape}",
                tiler.origin.len()
            )));
        }
        let pattern = &tiler.pattern_shape;
        let pat_dims = pattern.dims();
        for d in 0..dims {
            if tiler.fitting[d].len() != pat_dims {
                return Err(TilerError::DimMismatch(format!(
                    "fitting row has {} columns, pattern has {} dimensions",
                    tiler.fitting[d].len(),
                    pat_dims
                )));
            }
        }
        let mut offsets = Vec::with_capacity(pattern.len());
        for lin_f in 0..pattern.len() {
            let f = pattern.delinearize(lin_f);
            let mut off = Vec::with_capacity(dims);
            for d in 0..dims {
                let mut v = 0i64;
                for (j, &fj) in f.iter().enumerate() {
                    v += tiler.fitting[d][j] * fj as i64;
                }
                off.push(v);
            }
            offsets.push(off);
        }

        Ok(TilePlan {
            origin: tiler.origin.clone(),
            paving: tiler.paving.clone(),
            offsets,
            strides: array_shape.strides(),
            extents: array_shape.extents().to_vec(),
            pattern_shape: pattern.clone(),
        })
    }

    pub fn pattern_shape(&self) -> &Shape {
        &self.pattern_shape
    }

    /// Base coordinates `origin + paving * r` for a repetition index.
    fn base(&self, r: &[usize]) -> Result<Vec<i64>, TilerError> {
        let mut base = Vec::with_capacity(self.origin.len());
        for d in 0..self.origin.len() {
            if self.paving[d].len() != r.len() {
                return Err(TilerError::DimMismatch(format!(
                    "paving row has {} columns, repetition index has {} coordinates",
                    self.paving[d].len(),
                    r.len()
                )));
            }
            let mut coord = self.origin[d];
            for (k, &rk) in r.iter().enumerate() {
                coord += self.paving[d][k] * rk as i64;
            }
            base.push(coord);
        }
        Ok(base)
    }

    fn linear(&self, base: &[i64], element: usize) -> usize {
        let off = &self.offsets[element];
        let mut lin = 0usize;
        for d in 0..self.extents.len() {
            let coord = (base[d] + off[d]).rem_euclid(self.extents[d] as i64) as usize;
            lin += coord * self.strides[d];
        }
        lin
    }

    /// Fill `pattern` (which must match the tiler's pattern shape and the
    /// array's element type) with the tile at `r`.
    pub fn extract_into(
        &self,
        array_data: &DenseArray,
        r: &[usize],
        pattern: &mut Pattern,
    ) -> Result<(), TilerError> {
        let base = self.base(r)?;
        match (&array_data.data, &mut pattern.data) {
            (ScalarVec::U8(src), ScalarVec::U8(dst)) => {
                for (e, slot) in dst.iter_mut().enumerate() {
                    *slot = src[self.linear(&base, e)];
                }
            }
            (ScalarVec::I32(src), ScalarVec::I32(dst)) => {
                for (e, slot) in dst.iter_mut().enumerate() {
                    *slot = src[self.linear(&base, e)];
                }
            }
            (ScalarVec::F32(src), ScalarVec::F32(dst)) => {
                for (e, slot) in dst.iter_mut().enumerate() {
                    *slot = src[self.linear(&base, e)];
                }
            }
            (src, dst) => {
                return Err(TilerError::ElementType {
                    expected: src.scalar_type(),
                    got: dst.scalar_type(),
                })
            }
        }
        Ok(())
    }

    /// Write `pattern` into the tile at `r`.
    pub fn write_from(
        &self,
        array_data: &mut DenseArray,
        r: &[usize],
        pattern: &Pattern,
    ) -> Result<(), TilerError> {
        let base = self.base(r)?;
        match (&mut array_data.data, &pattern.data) {
            (ScalarVec::U8(dst), ScalarVec::U8(src)) => {
                for (e, &v) in src.iter().enumerate() {
                    dst[self.linear(&base, e)] = v;
                }
            }
            (ScalarVec::I32(dst), ScalarVec::I32(src)) => {
                for (e, &v) in src.iter().enumerate() {
                    dst[self.linear(&base, e)] = v;
                }
            }
            (ScalarVec::F32(dst), ScalarVec::F32(src)) => {
                for (e, &v) in src.iter().enumerate() {
                    dst[self.linear(&base, e)] = v;
                }
            }
            (dst, src) => {
                return Err(TilerError::ElementType {
                    expected: dst.scalar_type(),
                    got: src.scalar_type(),
                })
            }
        }
        Ok(())
    }
}

/// Read the pattern for repetition index `r` out of `array_data`.
pub fn extract_pattern(
    array_data: &DenseArray,
    tiler: &Tiler,
    r: &[usize],
) -> Result<Pattern, TilerError> {
    let plan = TilePlan::new(tiler, &array_data.shape)?;
    let mut pattern = Pattern::zeros(array_data.scalar_type(), tiler.pattern_shape.clone());
    plan.extract_into(array_data, r, &mut pattern)?;
    Ok(pattern)
}

/// Write pattern `p` into `array_data` at repetition index `r`.
///
/// Elements outside the tile are untouched. Concurrent writes at distinct
/// repetition indices are only safe when the tiler's coverage is exact
/// (disjoint tiles); that is the contract the simulator and generated
/// kernels rely on.
pub fn write_pattern(
    array_data: &mut DenseArray,
    tiler: &Tiler,
    r: &[usize],
    p: &Pattern,
) -> Result<(), TilerError> {
    if p.shape != tiler.pattern_shape {
        return Err(TilerError::PatternShape {
            expected: tiler.pattern_shape.clone(),
            got: p.shape.clone(),
        });
    }
    let plan = TilePlan::new(tiler, &array_data.shape)?;
    plan.write_from(array_data, r, p)
}

/// Enumerate every `(r, f)` pair and classify how the tiler covers its array.
///
/// Exhaustive by design (no sampling); intended for arrays up to about 10^7
/// elements at test and validation time.
pub fn check_coverage(tiler: &Tiler, array_shape: &Shape, repetition_space: &Shape) -> Coverage {
    let mut counts = vec![0u32; array_shape.len()];
    // Dimensionally invalid tilers are a validation error; treat them as
    // covering nothing rather than panicking.
    let Ok(plan) = TilePlan::new(tiler, array_shape) else {
        return Coverage::Gaps(vec![]);
    };
    let reps = repetition_space.len();
    for lin_r in 0..reps {
        let r = repetition_space.delinearize(lin_r);
        let Ok(base) = plan.base(&r) else {
            return Coverage::Gaps(vec![]);
        };
        for e in 0..tiler.pattern_shape.len() {
            counts[plan.linear(&base, e)] += 1;
        }
    }

    let mut overlaps = Vec::new();
    let mut gaps = Vec::new();
    for (lin, &count) in counts.iter().enumerate() {
        if count > 1 && overlaps.len() < MAX_WITNESSES {
            overlaps.push(array_shape.delinearize(lin));
        } else if count == 0 && gaps.len() < MAX_WITNESSES {
            gaps.push(array_shape.delinearize(lin));
        }
        if overlaps.len() == MAX_WITNESSES && gaps.len() == MAX_WITNESSES {
            break;
        }
    }

    if !overlaps.is_empty() {
        Coverage::Overlaps(overlaps)
    } else if !gaps.is_empty() {
        Coverage::Gaps(gaps)
    } else {
        Coverage::Exact
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(extents: &[usize]) -> Shape {
        Shape::new(extents.to_vec()).unwrap()
    }

    fn tiler_1d_pattern(
        origin: Vec<i64>,
        paving: Vec<Vec<i64>>,
        fitting: Vec<Vec<i64>>,
        pattern: &[usize],
    ) -> Tiler {
        Tiler {
            origin,
            paving,
            fitting,
            array: crate::ir::ArrayId(0),
            pattern_shape: shape(pattern),
        }
    }

    #[test]
    fn element_index_paper_style_case() {
        // origin (0,0), paving [[1,0],[0,8]], fitting column (0,1)^T over a
        // 288x352 array: r=(0,1), f=(3) lands on (0, 11).
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 8]],
            vec![vec![0], vec![1]],
            &[8],
        );
        let idx = element_index(&t, &shape(&[288, 352]), &[0, 1], &[3]).unwrap();
        assert_eq!(idx, vec![0, 11]);
    }

    #[test]
    fn element_index_identity() {
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![0], vec![0]],
            &[1],
        );
        let idx = element_index(&t, &shape(&[16, 16]), &[5, 7], &[0]).unwrap();
        assert_eq!(idx, vec![5, 7]);
    }

    #[test]
    fn element_index_wraps_modulo() {
        // (350 + 5) mod 352 = 3
        let t = tiler_1d_pattern(vec![350], vec![vec![0]], vec![vec![1]], &[8]);
        let idx = element_index(&t, &shape(&[352]), &[0], &[5]).unwrap();
        assert_eq!(idx, vec![3]);
    }

    #[test]
    fn element_index_negative_origin_wraps() {
        let t = tiler_1d_pattern(vec![-1], vec![vec![1]], vec![vec![0]], &[1]);
        let idx = element_index(&t, &shape(&[10]), &[0], &[0]).unwrap();
        assert_eq!(idx, vec![9]);
    }

    #[test]
    fn element_index_rejects_bad_dims() {
        let t = tiler_1d_pattern(vec![0], vec![vec![1]], vec![vec![1]], &[4]);
        assert!(element_index(&t, &shape(&[8, 8]), &[0], &[0]).is_err());
        assert!(element_index(&t, &shape(&[8]), &[0, 0], &[0]).is_err());
    }

    #[test]
    fn extract_picks_column_packet() {
        // Row 0 of a 352-wide array holds 0..352; paving step 8 with r=(0,1)
        // selects columns 8..16.
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 8]],
            vec![vec![0], vec![1]],
            &[8],
        );
        let mut data = vec![0i32; 8 * 352];
        for col in 0..352 {
            data[col] = col as i32;
        }
        let array = DenseArray::from_i32(shape(&[8, 352]), data).unwrap();
        let p = extract_pattern(&array, &t, &[0, 1]).unwrap();
        assert_eq!(p.data, ScalarVec::I32(vec![8, 9, 10, 11, 12, 13, 14, 15]));
    }

    #[test]
    fn extract_constant_array() {
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 8]],
            vec![vec![0], vec![1]],
            &[8],
        );
        let array = DenseArray::from_u8(shape(&[4, 32]), vec![42; 4 * 32]).unwrap();
        for r1 in 0..4 {
            let p = extract_pattern(&array, &t, &[2, r1]).unwrap();
            assert_eq!(p.data, ScalarVec::U8(vec![42; 8]));
        }
    }

    #[test]
    fn extract_single_element_pattern() {
        // Empty fitting (0 pattern dims is not representable; use pattern [1]
        // with zero fitting): pattern = [array[origin + paving * r]].
        let t = tiler_1d_pattern(vec![3], vec![vec![2]], vec![vec![0]], &[1]);
        let array = DenseArray::from_i32(shape(&[12]), (0..12).collect()).unwrap();
        let p = extract_pattern(&array, &t, &[2]).unwrap();
        assert_eq!(p.data, ScalarVec::I32(vec![7])); // 3 + 2*2
    }

    #[test]
    fn write_places_pattern_elements() {
        // Output tiler, paving step 3: at r=(0,1) the pattern lands in
        // columns 3,4,5 of row 0.
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 3]],
            vec![vec![0], vec![1]],
            &[3],
        );
        let mut array = DenseArray::zeros(ScalarType::I32, shape(&[2, 9]));
        let p = Pattern {
            shape: shape(&[3]),
            data: ScalarVec::I32(vec![7, 8, 9]),
        };
        write_pattern(&mut array, &t, &[0, 1], &p).unwrap();
        let ScalarVec::I32(data) = &array.data else {
            unreachable!()
        };
        assert_eq!(&data[..9], &[0, 0, 0, 7, 8, 9, 0, 0, 0]);
        assert!(data[9..].iter().all(|&x| x == 0));
    }

    #[test]
    fn write_then_extract_is_identity() {
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 3]],
            vec![vec![0], vec![1]],
            &[3],
        );
        let mut array = DenseArray::zeros(ScalarType::U8, shape(&[4, 12]));
        let p = Pattern {
            shape: shape(&[3]),
            data: ScalarVec::U8(vec![11, 22, 33]),
        };
        write_pattern(&mut array, &t, &[2, 1], &p).unwrap();
        assert_eq!(extract_pattern(&array, &t, &[2, 1]).unwrap(), p);
    }

    #[test]
    fn write_touches_exactly_pattern_len_elements() {
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 4]],
            vec![vec![0], vec![1]],
            &[4],
        );
        let mut array = DenseArray::zeros(ScalarType::U8, shape(&[8, 16]));
        let p = Pattern {
            shape: shape(&[4]),
            data: ScalarVec::U8(vec![1, 2, 3, 4]),
        };
        write_pattern(&mut array, &t, &[3, 2], &p).unwrap();
        let ScalarVec::U8(data) = &array.data else {
            unreachable!()
        };
        assert_eq!(data.iter().filter(|&&x| x != 0).count(), 4);
    }

    #[test]
    fn write_rejects_wrong_pattern_shape() {
        let t = tiler_1d_pattern(vec![0], vec![vec![1]], vec![vec![1]], &[3]);
        let mut array = DenseArray::zeros(ScalarType::U8, shape(&[8]));
        let p = Pattern {
            shape: shape(&[4]),
            data: ScalarVec::U8(vec![0; 4]),
        };
        assert!(matches!(
            write_pattern(&mut array, &t, &[0], &p),
            Err(TilerError::PatternShape { .. })
        ));
    }

    #[test]
    fn coverage_exact_partition() {
        // 44 repetitions of a 3-wide pattern with paving step 3 tile a
        // 132-wide row exactly.
        let t = tiler_1d_pattern(
            vec![0, 0],
            vec![vec![1, 0], vec![0, 3]],
            vec![vec![0], vec![1]],
            &[3],
        );
        let cov = check_coverage(&t, &shape(&[288, 132]), &shape(&[288, 44]));
        assert_eq!(cov, Coverage::Exact);
    }

    #[test]
    fn coverage_overlapping_stride() {
        // Tile of 8 advanced by 4: neighbours overlap.
        let t = tiler_1d_pattern(vec![0], vec![vec![4]], vec![vec![1]], &[8]);
        match check_coverage(&t, &shape(&[352]), &shape(&[88])) {
            Coverage::Overlaps(witnesses) => assert!(!witnesses.is_empty()),
            other => panic!("expected overlaps, got {other:?}"),
        }
    }

    #[test]
    fn coverage_gaps() {
        // Tile of 3 advanced by 4 over width 12 misses elements 3, 7, 11.
        let t = tiler_1d_pattern(vec![0], vec![vec![4]], vec![vec![1]], &[3]);
        match check_coverage(&t, &shape(&[12]), &shape(&[3])) {
            Coverage::Gaps(witnesses) => {
                assert_eq!(witnesses, vec![vec![3], vec![7], vec![11]]);
            }
            other => panic!("expected gaps, got {other:?}"),
        }
    }
}
