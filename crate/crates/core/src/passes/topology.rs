//! Launch-topology derivation: from a task's multiplicity to NDRange
//! global/local work sizes.

use std::collections::BTreeMap;

use super::PassError;
use crate::ir::{Model, Processor, ProcessorKind, Shape, TaskId};

/// Threshold knobs for [`compute_topology`], settable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyConfig {
    /// Multiplicities with fewer total points than this run as a single
    /// work-group shaped like the multiplicity itself.
    pub min_items: u64,
    /// Upper bound on work-items per work-group, further capped by the
    /// device limit.
    pub max_wg: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            min_items: 64,
            max_wg: 256,
        }
    }
}

/// NDRange launch sizes for one repetitive task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaunchTopology {
    /// Work-items per dimension; each entry is a positive multiple of the
    /// matching `local` entry.
    pub global: Vec<u64>,
    /// Work-items per work-group per dimension.
    pub local: Vec<u64>,
    /// The source repetition space (before any dimension collapse).
    pub multiplicity: Shape,
    /// True when padding makes `product(global) > product(multiplicity)`;
    /// kernels then need an in-bounds guard on the linear work-item id.
    pub guarded: bool,
}

impl LaunchTopology {
    pub fn global_product(&self) -> u128 {
        self.global.iter().map(|&g| g as u128).product()
    }

    pub fn local_product(&self) -> u128 {
        self.local.iter().map(|&l| l as u128).product()
    }
}

/// Derive the launch topology for a multiplicity on a device.
///
/// The rule, deterministic in its inputs:
///
/// 1. Dimensions beyond the device's NDRange limit are collapsed by folding
///    the product of the trailing extents into the last kept dimension.
/// 2. Below the `min_items` threshold (and within the work-group cap) the
///    whole multiplicity becomes a single exactly-shaped work-group.
/// 3. Otherwise the local size grows from `[1, ...]` by repeated doubling —
///    always the dimension with the smallest local extent, ties to the
///    larger multiplicity extent — while the work-group cap is respected
///    and the padded global size stays under twice the multiplicity.
/// 4. Each global extent is the smallest multiple of the local extent that
///    covers the multiplicity.
///
/// Step 3's padding gate is what bounds over-provisioning: the returned
/// topology always satisfies `product(global) < 2 * product(multiplicity)`.
pub fn compute_topology(
    multiplicity: &Shape,
    device: &Processor,
    cfg: &TopologyConfig,
) -> Result<LaunchTopology, PassError> {
    let ProcessorKind::Device {
        max_workgroup_size,
        max_dims,
    } = device.kind
    else {
        return Err(PassError::NotDevice(device.name.clone()));
    };
    if max_workgroup_size == 0 {
        return Err(PassError::ZeroWorkgroup(device.name.clone()));
    }
    if cfg.max_wg == 0 {
        return Err(PassError::InvalidConfig(
            "max work-group threshold must be positive".to_string(),
        ));
    }

    let m = collapse(multiplicity.extents(), max_dims);
    let dims = m.len();
    let product_m: u128 = m.iter().map(|&e| e as u128).product();
    let cap = max_workgroup_size.min(cfg.max_wg) as u128;

    let local: Vec<u64> = if product_m < cfg.min_items as u128 && product_m <= cap {
        m.clone()
    } else {
        let mut local = vec![1u64; dims];
        loop {
            let product_l: u128 = local.iter().map(|&l| l as u128).product();
            let mut best: Option<usize> = None;
            for d in 0..dims {
                if local[d] >= m[d] || product_l * 2 > cap {
                    continue;
                }
                if !padding_ok(&m, &local, d, product_m) {
                    continue;
                }
                best = match best {
                    None => Some(d),
                    Some(b) => {
                        // Grow the least-grown dimension first; on ties,
                        // favour the dimension with more work.
                        let better = (local[d], std::cmp::Reverse(m[d]), d)
                            < (local[b], std::cmp::Reverse(m[b]), b);
                        Some(if better { d } else { b })
                    }
                };
            }
            match best {
                Some(d) => local[d] *= 2,
                None => break,
            }
        }
        local
    };

    let global: Vec<u64> = m
        .iter()
        .zip(&local)
        .map(|(&mi, &li)| mi.div_ceil(li) * li)
        .collect();
    let product_g: u128 = global.iter().map(|&g| g as u128).product();

    Ok(LaunchTopology {
        global,
        local,
        multiplicity: multiplicity.clone(),
        guarded: product_g > product_m,
    })
}

/// Would doubling `local[d]` keep the padded global size under twice the
/// multiplicity?
fn padding_ok(m: &[u64], local: &[u64], d: usize, product_m: u128) -> bool {
    let mut product_g: u128 = 1;
    for i in 0..m.len() {
        let li = if i == d {
            local[i] as u128 * 2
        } else {
            local[i] as u128
        };
        product_g *= (m[i] as u128).div_ceil(li) * li;
    }
    product_g < 2 * product_m
}

/// Fold extents beyond `max_dims` into the last kept dimension.
fn collapse(extents: &[usize], max_dims: usize) -> Vec<u64> {
    if extents.len() <= max_dims {
        return extents.iter().map(|&e| e as u64).collect();
    }
    let mut out: Vec<u64> = extents[..max_dims - 1].iter().map(|&e| e as u64).collect();
    out.push(extents[max_dims - 1..].iter().map(|&e| e as u64).product());
    out
}

/// Topologies for every device-allocated task of a model.
pub fn task_topologies(
    model: &Model,
    cfg: &TopologyConfig,
) -> Result<BTreeMap<TaskId, LaunchTopology>, PassError> {
    let mut out = BTreeMap::new();
    for t in model.task_ids() {
        if model.task_on_device(t) {
            let topology = compute_topology(
                &model.task(t).repetition_space,
                model.task_processor(t),
                cfg,
            )?;
            out.insert(t, topology);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device(max_wg: u64, max_dims: usize) -> Processor {
        Processor {
            name: "gpu".to_string(),
            kind: ProcessorKind::Device {
                max_workgroup_size: max_wg,
                max_dims,
            },
        }
    }

    fn shape(extents: &[usize]) -> Shape {
        Shape::new(extents.to_vec()).unwrap()
    }

    #[test]
    fn downscaler_luma_multiplicity() {
        let t = compute_topology(
            &shape(&[288, 44]),
            &device(1024, 3),
            &TopologyConfig::default(),
        )
        .unwrap();
        assert_eq!(t.local, vec![16, 16]);
        assert_eq!(t.global, vec![288, 48]);
        assert!(t.guarded);
    }

    #[test]
    fn small_multiplicity_is_one_exact_group() {
        let t =
            compute_topology(&shape(&[8]), &device(1024, 3), &TopologyConfig::default()).unwrap();
        assert_eq!(t.local, vec![8]);
        assert_eq!(t.global, vec![8]);
        assert!(!t.guarded);
    }

    #[test]
    fn small_multiplicity_exceeding_device_cap_falls_through() {
        // 63 points is below min_items but a single group of 63 would break
        // a device capped at 32.
        let t =
            compute_topology(&shape(&[63]), &device(32, 3), &TopologyConfig::default()).unwrap();
        assert!(t.local_product() <= 32);
        assert_eq!(t.global[0] % t.local[0], 0);
        assert!(t.global_product() >= 63);
    }

    #[test]
    fn trailing_dimensions_collapse() {
        let t = compute_topology(
            &shape(&[2, 3, 4, 5]),
            &device(1024, 3),
            &TopologyConfig::default(),
        )
        .unwrap();
        assert_eq!(t.global.len(), 3);
        // Collapsed multiplicity is [2, 3, 20]; global covers it.
        assert!(t.global[0] >= 2 && t.global[1] >= 3 && t.global[2] >= 20);
        assert_eq!(t.multiplicity, shape(&[2, 3, 4, 5]));
    }

    #[test]
    fn awkward_extents_respect_padding_bound() {
        // ceil(17/16)*16 = 32 per dimension would waste 3.5x; the rule must
        // stop doubling before that.
        let t = compute_topology(
            &shape(&[17, 17]),
            &device(1024, 3),
            &TopologyConfig::default(),
        )
        .unwrap();
        assert!(t.global_product() < 2 * 17 * 17);
        assert!(t.global_product() >= 17 * 17);
    }

    #[test]
    fn zero_workgroup_device_errors() {
        let err =
            compute_topology(&shape(&[8]), &device(0, 3), &TopologyConfig::default()).unwrap_err();
        assert!(matches!(err, PassError::ZeroWorkgroup(_)));
    }

    #[test]
    fn host_processor_is_rejected() {
        let host = Processor {
            name: "cpu".to_string(),
            kind: ProcessorKind::Host,
        };
        let err = compute_topology(&shape(&[8]), &host, &TopologyConfig::default()).unwrap_err();
        assert!(matches!(err, PassError::NotDevice(_)));
    }

    #[test]
    fn deterministic() {
        let a = compute_topology(
            &shape(&[100, 7]),
            &device(256, 3),
            &TopologyConfig::default(),
        )
        .unwrap();
        let b = compute_topology(
            &shape(&[100, 7]),
            &device(256, 3),
            &TopologyConfig::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
