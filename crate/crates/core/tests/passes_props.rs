//! Property tests for the transformation chain.

use gmc_core::ir::{Processor, ProcessorKind, Shape};
use gmc_core::modelgen::{random_model, GenConfig};
use gmc_core::passes::{
    compute_topology, optimize_transfers, plan_buffers, schedule_naive, transfer_stats,
    verify_schedule, TopologyConfig,
};
use gmc_core::sim::{execute, execute_schedule, synthetic_inputs};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// Topology invariants: work-group cap, divisibility, coverage, and the
    /// padding bound, across random multiplicities and device limits.
    #[test]
    fn topology_invariants(
        extents in prop::collection::vec(1..=2048usize, 1..=4),
        max_wg_exp in 4u32..=10,
        device_dims in 1..=3usize,
        min_items in prop::sample::select(vec![0u64, 16, 64, 256]),
    ) {
        let multiplicity = Shape::new(extents).unwrap();
        let max_wg = 1u64 << max_wg_exp;
        let device = Processor {
            name: "gpu".to_string(),
            kind: ProcessorKind::Device {
                max_workgroup_size: max_wg,
                max_dims: device_dims,
            },
        };
        let cfg = TopologyConfig { min_items, max_wg: 256 };
        let t = compute_topology(&multiplicity, &device, &cfg).unwrap();

        let cap = max_wg.min(cfg.max_wg) as u128;
        prop_assert!(t.local_product() <= cap, "local {:?} exceeds cap {cap}", t.local);
        prop_assert_eq!(t.global.len(), t.local.len());
        prop_assert!(t.global.len() <= device_dims);
        for (g, l) in t.global.iter().zip(&t.local) {
            prop_assert!(*l >= 1);
            prop_assert!(*g >= 1 && g % l == 0, "global {g} not a multiple of local {l}");
        }
        let points: u128 = multiplicity.extents().iter().map(|&e| e as u128).product();
        prop_assert!(t.global_product() >= points);
        prop_assert_eq!(t.guarded, t.global_product() > points);
        if points >= min_items as u128 {
            prop_assert!(
                t.global_product() < 2 * points,
                "padding bound violated: global {:?} for multiplicity {:?}",
                t.global,
                multiplicity
            );
        }
    }

    /// The optimizer never adds transfers, its output passes the independent
    /// residency validator, and re-optimizing changes nothing.
    #[test]
    fn optimizer_is_monotone_sound_and_idempotent(seed in any::<u64>()) {
        let model = random_model(seed, &GenConfig::default());
        let cfg = TopologyConfig::default();
        let naive = schedule_naive(&model, &cfg).unwrap();
        let optimized = optimize_transfers(&naive, &model);

        verify_schedule(&model, &naive).unwrap();
        verify_schedule(&model, &optimized).unwrap();

        let plan = plan_buffers(&model).unwrap();
        let before = transfer_stats(&naive, &plan, &model).unwrap();
        let after = transfer_stats(&optimized, &plan, &model).unwrap();
        prop_assert!(after.h2d_count <= before.h2d_count);
        prop_assert!(after.d2h_count <= before.d2h_count);
        prop_assert!(after.h2d_bytes <= before.h2d_bytes);
        prop_assert!(after.d2h_bytes <= before.d2h_bytes);

        let again = optimize_transfers(&optimized, &model);
        prop_assert_eq!(again, optimized);

        // Launch order is preserved.
        let naive_launches: Vec<_> = naive.launches().map(|(t, _)| t).collect();
        let optimized = optimize_transfers(&naive, &model);
        let opt_launches: Vec<_> = optimized.launches().map(|(t, _)| t).collect();
        prop_assert_eq!(naive_launches, opt_launches);
    }

    /// Replaying naive and optimized schedules produces bit-identical
    /// outputs, both equal to direct functional execution.
    #[test]
    fn optimizer_preserves_semantics(seed in any::<u64>()) {
        let model = random_model(seed, &GenConfig::default());
        let cfg = TopologyConfig::default();
        let naive = schedule_naive(&model, &cfg).unwrap();
        let optimized = optimize_transfers(&naive, &model);

        let inputs = synthetic_inputs(&model, seed ^ 0xABCD, 0);
        let reference = execute(&model, &inputs).unwrap();
        let via_naive = execute_schedule(&model, &naive, &inputs).unwrap();
        let via_optimized = execute_schedule(&model, &optimized, &inputs).unwrap();
        prop_assert_eq!(&via_naive.outputs, &reference);
        prop_assert_eq!(&via_optimized.outputs, &reference);
    }

    /// Validation-accepted generated models execute without panicking and
    /// with every index in bounds (the modulo rule at work).
    #[test]
    fn valid_models_execute(seed in any::<u64>()) {
        let model = random_model(seed, &GenConfig::default());
        let diags = gmc_core::validate(&model);
        prop_assert!(gmc_core::ir::is_valid(&diags));
        let inputs = synthetic_inputs(&model, seed, 0);
        let outputs = execute(&model, &inputs).unwrap();
        prop_assert_eq!(outputs.len(), model.output_arrays().len());
    }

    /// toposort returns a permutation of the tasks that respects every
    /// task-level edge of the connector graph.
    #[test]
    fn toposort_is_an_edge_respecting_permutation(seed in any::<u64>()) {
        let model = random_model(seed, &GenConfig::default());
        let order = gmc_core::toposort(&model).unwrap();

        let mut sorted: Vec<usize> = order.iter().map(|t| t.0).collect();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..model.tasks.len()).collect::<Vec<_>>());

        let position: std::collections::BTreeMap<_, _> =
            order.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        for (from, to) in model.task_edges() {
            prop_assert!(
                position[&from] < position[&to],
                "edge {from:?} -> {to:?} violated"
            );
        }
    }
}
