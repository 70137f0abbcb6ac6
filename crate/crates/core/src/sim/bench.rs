//! Benchmark harness: run a schedule over many frames and report per-task
//! wall time, per-frame transfer stats, and throughput.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use super::{execute_schedule, SimError};
use crate::ir::Model;
use crate::passes::{TransferSchedule, TransferStats};
use crate::tiler::DenseArray;

/// Accumulated measurements of a [`bench()`] run.
#[derive(Debug, Clone, Default)]
pub struct ExecutionTrace {
    pub frames: u64,
    /// Wall time per task name, summed over frames.
    pub per_task: BTreeMap<String, Duration>,
    /// Per-frame transfer stats (identical every frame by construction).
    pub stats: TransferStats,
    /// End-to-end wall time of the frame loop.
    pub wall: Duration,
}

impl ExecutionTrace {
    pub fn frames_per_second(&self) -> f64 {
        if self.wall.is_zero() {
            return 0.0;
        }
        self.frames as f64 / self.wall.as_secs_f64()
    }
}

/// Frame inputs by index; `None` means the source ran dry.
pub type FrameSource<'a> =
    &'a mut dyn FnMut(u64) -> Result<Option<BTreeMap<String, DenseArray>>, SimError>;

/// Execute `frames` iterations of the per-frame schedule, accumulating
/// per-task wall time and transfer stats.
pub fn bench(
    model: &Model,
    schedule: &TransferSchedule,
    source: FrameSource,
    frames: u64,
) -> Result<ExecutionTrace, SimError> {
    let mut trace = ExecutionTrace {
        frames,
        ..Default::default()
    };
    let started = Instant::now();
    for frame in 0..frames {
        let inputs = source(frame)?.ok_or(SimError::FrameSourceExhausted(frame))?;
        let run = execute_schedule(model, schedule, &inputs)?;
        for (task, nanos) in run.task_nanos {
            *trace.per_task.entry(task).or_default() += Duration::from_nanos(nanos);
        }
        trace.stats = run.stats;
    }
    trace.wall = started.elapsed();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelgen::{random_model, GenConfig};
    use crate::passes::{schedule_naive, TopologyConfig};
    use crate::sim::synthetic_inputs;

    #[test]
    fn zero_frames_is_a_zero_trace() {
        let model = random_model(3, &GenConfig::default());
        let schedule = schedule_naive(&model, &TopologyConfig::default()).unwrap();
        let mut source = |i| Ok(Some(synthetic_inputs(&model, 1, i)));
        let trace = bench(&model, &schedule, &mut source, 0).unwrap();
        assert_eq!(trace.frames, 0);
        assert!(trace.per_task.is_empty());
        assert_eq!(trace.stats, TransferStats::default());
    }

    #[test]
    fn exhausted_source_names_the_frame() {
        let model = random_model(3, &GenConfig::default());
        let schedule = schedule_naive(&model, &TopologyConfig::default()).unwrap();
        let mut source = |i| {
            if i < 2 {
                Ok(Some(synthetic_inputs(&model, 1, i)))
            } else {
                Ok(None)
            }
        };
        let err = bench(&model, &schedule, &mut source, 5).unwrap_err();
        assert_eq!(err, SimError::FrameSourceExhausted(2));
    }
}
