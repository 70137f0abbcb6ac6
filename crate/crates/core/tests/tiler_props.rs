//! Property tests for the tiler index algebra.
//!
//! The coverage checker is cross-checked against an independent counter that
//! recomputes `origin + paving*r + fitting*f` with plain nested loops and
//! tallies hits in a map — no shared code with the library path it verifies.

use std::collections::BTreeMap;

use gmc_core::ir::{ArrayId, Shape};
use gmc_core::tiler::{
    check_coverage, element_index, extract_pattern, write_pattern, Coverage, DenseArray, Pattern,
    ScalarVec,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct TilerCase {
    array_shape: Shape,
    rep_space: Shape,
    tiler: gmc_core::ir::Tiler,
}

/// Arbitrary tilers over arrays of at most `max_elements` elements, with the
/// repetition/pattern enumeration capped to keep brute force quick.
fn tiler_strategy(max_elements: usize) -> impl Strategy<Value = TilerCase> {
    let dims = 1..=2usize;
    dims.prop_flat_map(move |nd| {
        let extent = 1..=((max_elements as f64).powf(1.0 / nd as f64) as usize).max(1);
        (
            prop::collection::vec(extent.clone(), nd),
            prop::collection::vec(1..=6usize, nd),
            prop::collection::vec(1..=4usize, nd),
            prop::collection::vec(-8i64..=8, nd),
            prop::collection::vec(prop::collection::vec(-4i64..=4, nd), nd),
            prop::collection::vec(prop::collection::vec(-4i64..=4, nd), nd),
        )
    })
    .prop_map(|(array, rep, pattern, origin, paving, fitting)| TilerCase {
        array_shape: Shape::new(array).unwrap(),
        rep_space: Shape::new(rep).unwrap(),
        tiler: gmc_core::ir::Tiler {
            origin,
            paving,
            fitting,
            array: ArrayId(0),
            pattern_shape: Shape::new(pattern).unwrap(),
        },
    })
}

/// Exact-partition tilers: divisor-aligned tiles with a random origin shift.
fn exact_tiler_strategy() -> impl Strategy<Value = TilerCase> {
    (1..=2usize)
        .prop_flat_map(|nd| prop::collection::vec((1..=4usize, 1..=4usize, -64i64..=64), nd))
        .prop_map(|dims| {
            let nd = dims.len();
            let mut array = Vec::new();
            let mut rep = Vec::new();
            let mut pattern = Vec::new();
            let mut origin = Vec::new();
            let mut paving = vec![vec![0i64; nd]; nd];
            let mut fitting = vec![vec![0i64; nd]; nd];
            for (d, &(r, t, o)) in dims.iter().enumerate() {
                array.push(r * t);
                rep.push(r);
                pattern.push(t);
                origin.push(o);
                paving[d][d] = t as i64;
                fitting[d][d] = 1;
            }
            TilerCase {
                array_shape: Shape::new(array).unwrap(),
                rep_space: Shape::new(rep).unwrap(),
                tiler: gmc_core::ir::Tiler {
                    origin,
                    paving,
                    fitting,
                    array: ArrayId(0),
                    pattern_shape: Shape::new(pattern).unwrap(),
                },
            }
        })
}

/// Count every (r, f) hit with loops that share nothing with TilePlan.
fn independent_hit_counts(case: &TilerCase) -> BTreeMap<Vec<usize>, u32> {
    let mut counts: BTreeMap<Vec<usize>, u32> = BTreeMap::new();
    let nd = case.array_shape.dims();
    for lin_r in 0..case.rep_space.len() {
        let r = case.rep_space.delinearize(lin_r);
        for lin_f in 0..case.tiler.pattern_shape.len() {
            let f = case.tiler.pattern_shape.delinearize(lin_f);
            let mut idx = Vec::with_capacity(nd);
            for d in 0..nd {
                let mut coord = case.tiler.origin[d];
                for k in 0..r.len() {
                    coord += case.tiler.paving[d][k] * r[k] as i64;
                }
                for j in 0..f.len() {
                    coord += case.tiler.fitting[d][j] * f[j] as i64;
                }
                let extent = case.array_shape.extents()[d] as i64;
                let mut m = coord % extent;
                if m < 0 {
                    m += extent;
                }
                idx.push(m as usize);
            }
            *counts.entry(idx).or_insert(0) += 1;
        }
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Modulo indexing keeps every computed element index in bounds.
    #[test]
    fn element_index_always_in_bounds(case in tiler_strategy(4096)) {
        for lin_r in 0..case.rep_space.len().min(64) {
            let r = case.rep_space.delinearize(lin_r);
            for lin_f in 0..case.tiler.pattern_shape.len().min(64) {
                let f = case.tiler.pattern_shape.delinearize(lin_f);
                let idx = element_index(&case.tiler, &case.array_shape, &r, &f).unwrap();
                for (d, &i) in idx.iter().enumerate() {
                    prop_assert!(i < case.array_shape.extents()[d]);
                }
            }
        }
    }

    /// element_index(t, r, f) - element_index(t, 0, f) = paving * r (mod shape).
    #[test]
    fn element_index_is_linear_in_r(case in tiler_strategy(4096)) {
        let zero = vec![0usize; case.rep_space.dims()];
        for lin_r in 0..case.rep_space.len().min(32) {
            let r = case.rep_space.delinearize(lin_r);
            for lin_f in 0..case.tiler.pattern_shape.len().min(32) {
                let f = case.tiler.pattern_shape.delinearize(lin_f);
                let at_r = element_index(&case.tiler, &case.array_shape, &r, &f).unwrap();
                let at_0 = element_index(&case.tiler, &case.array_shape, &zero, &f).unwrap();
                for d in 0..case.array_shape.dims() {
                    let extent = case.array_shape.extents()[d] as i64;
                    let diff = (at_r[d] as i64 - at_0[d] as i64).rem_euclid(extent);
                    let paving_r: i64 = case.tiler.paving[d]
                        .iter()
                        .zip(&r)
                        .map(|(&c, &rk)| c * rk as i64)
                        .sum();
                    prop_assert_eq!(diff, paving_r.rem_euclid(extent));
                }
            }
        }
    }

    /// check_coverage agrees with the independent set-based counter.
    #[test]
    fn coverage_matches_independent_counter(case in tiler_strategy(1024)) {
        let counts = independent_hit_counts(&case);
        let total = case.array_shape.len();
        let overlapping: Vec<&Vec<usize>> =
            counts.iter().filter(|(_, &c)| c > 1).map(|(i, _)| i).collect();
        let holes = total - counts.len();

        match check_coverage(&case.tiler, &case.array_shape, &case.rep_space) {
            Coverage::Exact => {
                prop_assert!(overlapping.is_empty());
                prop_assert_eq!(holes, 0);
            }
            Coverage::Overlaps(witnesses) => {
                prop_assert!(!overlapping.is_empty());
                for w in &witnesses {
                    prop_assert_eq!(counts.get(w).copied().unwrap_or(0) > 1, true);
                }
            }
            Coverage::Gaps(witnesses) => {
                prop_assert!(overlapping.is_empty());
                prop_assert!(holes > 0);
                for w in &witnesses {
                    prop_assert!(!counts.contains_key(w));
                }
            }
        }
    }

    /// On an exact partition, writing patterns at every r then extracting
    /// them returns the written data bit-exactly.
    #[test]
    fn write_then_extract_identity_on_exact_tilers(case in exact_tiler_strategy(), salt in any::<u8>()) {
        prop_assert_eq!(
            check_coverage(&case.tiler, &case.array_shape, &case.rep_space),
            Coverage::Exact
        );
        let mut array = DenseArray::zeros(gmc_core::ScalarType::U8, case.array_shape.clone());
        let n = case.tiler.pattern_shape.len();
        let reps = case.rep_space.len();
        let patterns: Vec<Pattern> = (0..reps)
            .map(|i| Pattern {
                shape: case.tiler.pattern_shape.clone(),
                data: ScalarVec::U8(
                    (0..n).map(|j| (i * 31 + j * 7 + salt as usize) as u8).collect(),
                ),
            })
            .collect();
        for (i, p) in patterns.iter().enumerate() {
            let r = case.rep_space.delinearize(i);
            write_pattern(&mut array, &case.tiler, &r, p).unwrap();
        }
        for (i, p) in patterns.iter().enumerate() {
            let r = case.rep_space.delinearize(i);
            prop_assert_eq!(&extract_pattern(&array, &case.tiler, &r).unwrap(), p);
        }
    }
}
