//! Independent downscaling oracle.
//!
//! Straightforward nested loops over plane rows and columns — no tilers, no
//! schedules, no IR. The model-driven pipeline must reproduce this output
//! bit-exactly; that equivalence is the simulator's central test.

use super::frames::{Frame, Plane};
use super::SimError;
use crate::builtins::{hfilter_8to3, vfilter_9to4};

/// Downscale a frame plane-by-plane: every row shrinks 8 pixels to 3, then
/// every column of the intermediate shrinks 9 pixels to 4. A CIF luma plane
/// (288x352) becomes 128x132; 4:2:0 chroma (144x176) becomes 64x66.
pub fn direct_downscale_oracle(frame: &Frame) -> Result<Frame, SimError> {
    let mut planes = Vec::with_capacity(frame.planes.len());
    for (i, plane) in frame.planes.iter().enumerate() {
        if plane.cols % 8 != 0 {
            return Err(SimError::PlaneNotDivisible {
                plane: i,
                what: "width",
                got: plane.cols,
                divisor: 8,
            });
        }
        if plane.rows % 9 != 0 {
            return Err(SimError::PlaneNotDivisible {
                plane: i,
                what: "height",
                got: plane.rows,
                divisor: 9,
            });
        }
        planes.push(downscale_plane(plane));
    }
    Ok(Frame { planes })
}

fn downscale_plane(plane: &Plane) -> Plane {
    let mid_cols = plane.cols / 8 * 3;
    let mut mid = vec![0u8; plane.rows * mid_cols];
    for row in 0..plane.rows {
        for packet in 0..plane.cols / 8 {
            let mut input = [0u8; 8];
            for (k, slot) in input.iter_mut().enumerate() {
                *slot = plane.at(row, packet * 8 + k);
            }
            let out = hfilter_8to3(&input);
            for (k, &v) in out.iter().enumerate() {
                mid[row * mid_cols + packet * 3 + k] = v;
            }
        }
    }

    let out_rows = plane.rows / 9 * 4;
    let mut data = vec![0u8; out_rows * mid_cols];
    for col in 0..mid_cols {
        for packet in 0..plane.rows / 9 {
            let mut input = [0u8; 9];
            for (k, slot) in input.iter_mut().enumerate() {
                *slot = mid[(packet * 9 + k) * mid_cols + col];
            }
            let out = vfilter_9to4(&input);
            for (k, &v) in out.iter().enumerate() {
                data[(packet * 4 + k) * mid_cols + col] = v;
            }
        }
    }

    Plane {
        rows: out_rows,
        cols: mid_cols,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cif_luma_shrinks_to_132x128() {
        let frame = Frame {
            planes: vec![Plane::filled(288, 352, 100)],
        };
        let out = direct_downscale_oracle(&frame).unwrap();
        assert_eq!(out.planes[0].rows, 128);
        assert_eq!(out.planes[0].cols, 132);
    }

    #[test]
    fn quarter_chroma_shrinks_to_66x64() {
        let frame = Frame {
            planes: vec![Plane::filled(144, 176, 77)],
        };
        let out = direct_downscale_oracle(&frame).unwrap();
        assert_eq!(out.planes[0].rows, 64);
        assert_eq!(out.planes[0].cols, 66);
    }

    #[test]
    fn constant_plane_stays_constant() {
        let frame = Frame {
            planes: vec![Plane::filled(288, 352, 100)],
        };
        let out = direct_downscale_oracle(&frame).unwrap();
        assert!(out.planes[0].data.iter().all(|&v| v == 100));
    }

    #[test]
    fn indivisible_shapes_error() {
        let frame = Frame {
            planes: vec![Plane::filled(288, 350, 0)],
        };
        assert!(matches!(
            direct_downscale_oracle(&frame),
            Err(SimError::PlaneNotDivisible { what: "width", .. })
        ));
        let frame = Frame {
            planes: vec![Plane::filled(287, 352, 0)],
        };
        assert!(matches!(
            direct_downscale_oracle(&frame),
            Err(SimError::PlaneNotDivisible { what: "height", .. })
        ));
    }
}
