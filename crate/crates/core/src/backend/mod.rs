//! Code emission: device kernels, host driver, and the schedule report.

mod host;
mod kernel;
mod report;

pub use host::emit_host;
pub use kernel::emit_kernels;
pub use report::{emit_report, parse_report, schedule_step_lines, Report};

use crate::ir::Model;
use crate::passes::{
    optimize_transfers, plan_buffers, schedule_naive, task_topologies, BufferPlan, LaunchTopology,
    PassError, ScheduleMode, TopologyConfig, TransferSchedule,
};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("nothing to generate: model has no device-allocated tasks")]
    NothingToGenerate,
    #[error("body `{body}` of task `{task}` has no kernel-dialect template")]
    MissingTemplate { task: String, body: String },
    #[error("generated identifiers collide: `{0}`")]
    NameCollision(String),
    #[error("schedule references array `{0}` outside the buffer plan")]
    UnplannedArray(String),
    #[error(transparent)]
    Pass(#[from] PassError),
}

/// Everything `compile` produces for one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedArtifact {
    /// OpenCL C source: one kernel function per device-allocated task.
    pub kernel_source: String,
    /// C host driver: buffer setup, per-frame schedule replay, byte counters.
    pub host_source: String,
    /// Machine-readable schedule/topology/buffer report.
    pub report: String,
}

/// Run the full pass chain and emit all three artifacts.
pub fn compile(
    model: &Model,
    cfg: &TopologyConfig,
    mode: ScheduleMode,
) -> Result<(GeneratedArtifact, ChainArtifacts), BackendError> {
    let chain = run_chain(model, cfg, mode)?;
    let kernel_source = emit_kernels(model, &chain.topologies, &chain.plan)?;
    let host_source = emit_host(model, &chain.schedule, &chain.plan, &chain.topologies)?;
    let report = emit_report(model, &chain, mode)?;
    Ok((
        GeneratedArtifact {
            kernel_source,
            host_source,
            report,
        },
        chain,
    ))
}

/// Intermediate pass products, kept for reporting and tests.
#[derive(Debug, Clone)]
pub struct ChainArtifacts {
    pub topologies: BTreeMap<crate::ir::TaskId, LaunchTopology>,
    pub plan: BufferPlan,
    pub naive: TransferSchedule,
    pub optimized: TransferSchedule,
    /// The schedule selected by the requested mode.
    pub schedule: TransferSchedule,
}

/// Execute the pass chain without emitting text.
pub fn run_chain(
    model: &Model,
    cfg: &TopologyConfig,
    mode: ScheduleMode,
) -> Result<ChainArtifacts, BackendError> {
    let topologies = task_topologies(model, cfg)?;
    let plan = plan_buffers(model)?;
    let naive = schedule_naive(model, cfg)?;
    let optimized = optimize_transfers(&naive, model);
    let schedule = match mode {
        ScheduleMode::Naive => naive.clone(),
        ScheduleMode::Optimized => optimized.clone(),
    };
    Ok(ChainArtifacts {
        topologies,
        plan,
        naive,
        optimized,
        schedule,
    })
}
