//! The transformation chain: launch topology, buffer planning, transfer
//! scheduling, redundant-transfer elimination, and schedule metrics.
//!
//! Every pass is a pure function of a validated [`Model`]; none mutate their
//! inputs, so passes may run concurrently on different models.

mod schedule;
mod topology;

pub use schedule::{
    optimize_transfers, schedule_naive, transfer_stats, verify_schedule, ScheduleViolation, Step,
    TransferSchedule, TransferStats,
};
pub use topology::{compute_topology, task_topologies, LaunchTopology, TopologyConfig};

use crate::ir::{ArrayId, MemoryRegion, Model};

/// Which transfer schedule the pipeline should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleMode {
    Naive,
    #[default]
    Optimized,
}

impl ScheduleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleMode::Naive => "naive",
            ScheduleMode::Optimized => "optimized",
        }
    }
}

impl std::str::FromStr for ScheduleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(ScheduleMode::Naive),
            "optimized" => Ok(ScheduleMode::Optimized),
            other => Err(format!(
                "unknown schedule mode `{other}` (naive or optimized)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PassError {
    #[error("connector graph has a cycle involving: {0}")]
    Cycle(String),
    #[error("tasks are allocated across {0} devices; multi-device scheduling is not supported")]
    MultiDevice(usize),
    #[error("array `{array}` is allocated to the {region} region, which no pass can target")]
    InvalidRegion { array: String, region: MemoryRegion },
    #[error("device `{0}` has a zero max work-group size")]
    ZeroWorkgroup(String),
    #[error("`{0}` is not a device processor")]
    NotDevice(String),
    #[error("invalid topology configuration: {0}")]
    InvalidConfig(String),
    #[error("schedule references array `{0}` which the buffer plan does not cover")]
    UnplannedArray(String),
}

/// Device-buffer requirements for one array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferEntry {
    pub array: ArrayId,
    /// Device region the buffer lives in. Arrays allocated to host RAM but
    /// touched by device tasks get a global-memory shadow buffer.
    pub region: MemoryRegion,
    /// True iff no device-allocated task writes the array; such buffers can
    /// be created with a read-only flag for the kernels.
    pub read_only: bool,
    pub byte_size: u64,
}

/// One [`BufferEntry`] per array touched by any device-allocated task, in
/// array declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BufferPlan {
    pub entries: Vec<BufferEntry>,
}

impl BufferPlan {
    pub fn entry(&self, array: ArrayId) -> Option<&BufferEntry> {
        self.entries.iter().find(|e| e.array == array)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Decide which arrays need device buffers, where they live, whether kernels
/// may write them, and how many bytes they occupy.
pub fn plan_buffers(model: &Model) -> Result<BufferPlan, PassError> {
    let mut entries = Vec::new();
    for a in model.array_ids() {
        let touched = model.task_ids().any(|t| {
            model.task_on_device(t)
                && (model.task_input_arrays(t).contains(&a)
                    || model.task_output_arrays(t).contains(&a))
        });
        if !touched {
            continue;
        }
        let array = model.array(a);
        let region = match model.array_memory(a).region {
            MemoryRegion::HostRam => MemoryRegion::DeviceGlobal,
            region @ (MemoryRegion::DeviceGlobal | MemoryRegion::DeviceConstant) => region,
            region => {
                return Err(PassError::InvalidRegion {
                    array: array.name.clone(),
                    region,
                })
            }
        };
        let read_only = !model
            .task_ids()
            .any(|t| model.task_on_device(t) && model.task_output_arrays(t).contains(&a));
        entries.push(BufferEntry {
            array: a,
            region,
            read_only,
            byte_size: array.element.byte_width() * array.shape.len() as u64,
        });
    }
    Ok(BufferPlan { entries })
}
