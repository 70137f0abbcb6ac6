//! Compiler core for the `gmc` toolchain.
//!
//! A model describes a repetitive data-parallel application: multidimensional
//! arrays, repetitive tasks whose tilers carve those arrays into patterns, a
//! host/device architecture, and an allocation of tasks and arrays onto it.
//! This crate parses the textual model format, validates it, derives kernel
//! launch topologies and buffer plans, schedules host/device transfers (with
//! redundant-transfer elimination), emits device kernel and host driver
//! source, and executes models on the CPU for reference and benchmarking.
//!
//! The pipeline, in dependency order:
//!
//! * [`frontend`] — text to [`ir::Model`], with located diagnostics
//! * [`ir`] — the model IR, validation, and topological ordering
//! * [`tiler`] — origin/paving/fitting index algebra over arrays
//! * [`builtins`] — the registry of elementary task bodies
//! * [`passes`] — launch topology, buffer planning, transfer scheduling
//! * [`backend`] — kernel source, host driver source, schedule report
//! * [`sim`] — reference executor, downscale oracle, benchmark harness
//! * [`modelgen`] — seeded generator of valid random models (test surface)

pub mod backend;
pub mod builtins;
pub mod frontend;
pub mod ir;
pub mod modelgen;
pub mod passes;
pub mod sim;
pub mod tiler;

pub use frontend::{parse, Diagnostic, Severity, SourceSpan};
pub use ir::{toposort, validate, ArrayId, MemId, Model, ProcId, ScalarType, Shape, TaskId};
pub use passes::{
    optimize_transfers, plan_buffers, schedule_naive, transfer_stats, BufferPlan, LaunchTopology,
    ScheduleMode, TopologyConfig, TransferSchedule, TransferStats,
};
pub use tiler::{DenseArray, Pattern, ScalarVec};
