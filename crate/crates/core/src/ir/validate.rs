//! Global consistency checks over a constructed [`Model`].
//!
//! Validation never fails: it returns a list of diagnostics, and an empty
//! list means every invariant holds. Diagnostic codes are stable; the full
//! catalogue is documented in `docs/dsl.md`.

use std::collections::HashSet;

use crate::builtins;
use crate::ir::{Direction, MemoryRegion, Model, ProcessorKind};
use crate::tiler::{self, Coverage};

/// How bad a diagnostic is. Errors make the model unusable by passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl std::fmt::Display for Severity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// A finding of [`validate`], located by model-element path.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationDiagnostic {
    pub severity: Severity,
    /// Slash-separated path to the offending element, e.g. `task yhfk/in src`.
    pub path: String,
    pub code: &'static str,
    pub message: String,
}

impl std::fmt::Display for ValidationDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}[{}]: {}: {}",
            self.severity, self.code, self.path, self.message
        )
    }
}

struct Checker {
    diags: Vec<ValidationDiagnostic>,
}

impl Checker {
    fn error(&mut self, code: &'static str, path: impl Into<String>, message: impl Into<String>) {
        self.diags.push(ValidationDiagnostic {
            severity: Severity::Error,
            path: path.into(),
            code,
            message: message.into(),
        });
    }

    fn warning(&mut self, code: &'static str, path: impl Into<String>, message: impl Into<String>) {
        self.diags.push(ValidationDiagnostic {
            severity: Severity::Warning,
            path: path.into(),
            code,
            message: message.into(),
        });
    }
}

/// Upper bound on `repetitions * pattern elements` for the output-coverage
/// warning check; larger tilers are skipped to keep validation fast.
const COVERAGE_CHECK_LIMIT: usize = 1 << 22;

/// Check every model invariant. Returns an empty list iff the model is
/// consistent; diagnostics carry a severity, an element path, and a message.
///
/// Pure and idempotent: the same model always yields the same diagnostics.
pub fn validate(model: &Model) -> Vec<ValidationDiagnostic> {
    let mut c = Checker { diags: Vec::new() };

    check_names(model, &mut c);
    check_architecture(model, &mut c);
    check_tasks(model, &mut c);
    check_allocation(model, &mut c);
    check_graph(model, &mut c);

    c.diags
}

fn check_names(model: &Model, c: &mut Checker) {
    // Tasks and arrays share a namespace (allocate statements resolve both),
    // as do processors and memories (allocation targets).
    let mut seen = HashSet::new();
    for t in &model.tasks {
        if !seen.insert(t.name.as_str()) {
            c.error(
                "V0117",
                format!("task {}", t.name),
                format!("duplicate model element name `{}`", t.name),
            );
        }
    }
    for a in &model.arrays {
        if !seen.insert(a.name.as_str()) {
            c.error(
                "V0117",
                format!("array {}", a.name),
                format!("duplicate model element name `{}`", a.name),
            );
        }
    }
    let mut hw = HashSet::new();
    for p in &model.processors {
        if !hw.insert(p.name.as_str()) {
            c.error(
                "V0117",
                format!("processor {}", p.name),
                format!("duplicate hardware element name `{}`", p.name),
            );
        }
    }
    for m in &model.memories {
        if !hw.insert(m.name.as_str()) {
            c.error(
                "V0117",
                format!("memory {}", m.name),
                format!("duplicate hardware element name `{}`", m.name),
            );
        }
    }
}

fn check_architecture(model: &Model, c: &mut Checker) {
    let hosts = model
        .processors
        .iter()
        .filter(|p| matches!(p.kind, ProcessorKind::Host))
        .count();
    if hosts != 1 {
        c.error(
            "V0108",
            "architecture",
            format!("model must declare exactly one host processor, found {hosts}"),
        );
    }

    for p in &model.processors {
        if let ProcessorKind::Device {
            max_workgroup_size,
            max_dims,
        } = p.kind
        {
            if max_workgroup_size == 0 {
                c.error(
                    "V0108",
                    format!("processor {}", p.name),
                    "device max work-group size must be positive",
                );
            }
            if max_dims == 0 || max_dims > 3 {
                c.error(
                    "V0108",
                    format!("processor {}", p.name),
                    format!("device NDRange dimensions must be 1 to 3, got {max_dims}"),
                );
            }
        }
    }

    for m in &model.memories {
        let owner = model.processor(m.owner);
        let ok = match m.region {
            MemoryRegion::HostRam => !owner.is_device(),
            _ => owner.is_device(),
        };
        if !ok {
            c.error(
                "V0109",
                format!("memory {}", m.name),
                format!(
                    "region {} cannot be owned by {} `{}`",
                    m.region,
                    if owner.is_device() { "device" } else { "host" },
                    owner.name
                ),
            );
        }
    }
}

fn check_tasks(model: &Model, c: &mut Checker) {
    for task in &model.tasks {
        let tpath = format!("task {}", task.name);

        if task.inputs.is_empty() || task.outputs.is_empty() {
            c.error(
                "V0110",
                &tpath,
                "a repetitive task needs at least one input and one output port",
            );
        }

        let mut port_names = HashSet::new();
        for (binding, dir) in task
            .inputs
            .iter()
            .map(|b| (b, Direction::In))
            .chain(task.outputs.iter().map(|b| (b, Direction::Out)))
        {
            let ppath = format!(
                "{}/{} {}",
                tpath,
                match dir {
                    Direction::In => "in",
                    _ => "out",
                },
                binding.port.name
            );
            if !port_names.insert(binding.port.name.clone()) {
                c.error(
                    "V0116",
                    &ppath,
                    format!("duplicate port name `{}`", binding.port.name),
                );
            }
            if binding.port.direction == Direction::InOut {
                c.error(
                    "V0118",
                    &ppath,
                    "bidirectional ports are not supported by the transformation chain",
                );
            }

            let array = model.array(binding.tiler.array);
            if binding.port.element != array.element {
                c.error(
                    "V0119",
                    &ppath,
                    format!(
                        "port element type {} does not match array `{}` element type {}",
                        binding.port.element, array.name, array.element
                    ),
                );
            }
            if binding.port.pattern_shape != binding.tiler.pattern_shape {
                c.error(
                    "V0103",
                    &ppath,
                    format!(
                        "port pattern shape {} does not match tiler pattern shape {}",
                        binding.port.pattern_shape, binding.tiler.pattern_shape
                    ),
                );
            }
            check_tiler_dims(model, c, &ppath, task, binding);
        }

        check_body(c, &tpath, task);
    }
}

fn check_tiler_dims(
    model: &Model,
    c: &mut Checker,
    ppath: &str,
    task: &crate::ir::RepetitiveTask,
    binding: &crate::ir::PortBinding,
) {
    let tiler = &binding.tiler;
    let array_dims = model.array(tiler.array).shape.dims();
    let rep_dims = task.repetition_space.dims();
    let pat_dims = tiler.pattern_shape.dims();

    if tiler.origin.len() != array_dims {
        c.error(
            "V0103",
            ppath,
            format!(
                "tiler origin has {} entries but array has {} dimensions",
                tiler.origin.len(),
                array_dims
            ),
        );
    }
    if tiler.paving.len() != array_dims || tiler.paving.iter().any(|row| row.len() != rep_dims) {
        c.error(
            "V0103",
            ppath,
            format!(
                "tiler paving must be a {array_dims}x{rep_dims} matrix (array dims x repetition dims)"
            ),
        );
    }
    if tiler.fitting.len() != array_dims || tiler.fitting.iter().any(|row| row.len() != pat_dims) {
        c.error(
            "V0103",
            ppath,
            format!(
                "tiler fitting must be a {array_dims}x{pat_dims} matrix (array dims x pattern dims)"
            ),
        );
    }
}

fn check_body(c: &mut Checker, tpath: &str, task: &crate::ir::RepetitiveTask) {
    let Some(builtin) = builtins::lookup(&task.body) else {
        c.error(
            "V0113",
            tpath,
            format!("unknown elementary body `{}`", task.body),
        );
        return;
    };
    if builtin.inputs != task.inputs.len() || builtin.outputs != task.outputs.len() {
        c.error(
            "V0102",
            tpath,
            format!(
                "body `{}` takes {} input(s) and {} output(s), task wires {} and {}",
                builtin.name,
                builtin.inputs,
                builtin.outputs,
                task.inputs.len(),
                task.outputs.len()
            ),
        );
        return;
    }
    let ins: Vec<_> = task
        .inputs
        .iter()
        .map(|b| (&b.port.pattern_shape, b.port.element))
        .collect();
    let outs: Vec<_> = task
        .outputs
        .iter()
        .map(|b| (&b.port.pattern_shape, b.port.element))
        .collect();
    if let Err(msg) = (builtin.check)(&ins, &outs) {
        c.error("V0102", tpath, format!("body `{}`: {}", builtin.name, msg));
    }
}

fn check_allocation(model: &Model, c: &mut Checker) {
    for a in model.array_ids() {
        let array = model.array(a);
        let mem = model.array_memory(a);
        if matches!(
            mem.region,
            MemoryRegion::DeviceLocal | MemoryRegion::DevicePrivate
        ) {
            c.error(
                "V0107",
                format!("array {}", array.name),
                format!(
                    "arrays cannot be allocated to the {} region; use {} or {}",
                    mem.region,
                    MemoryRegion::DeviceGlobal,
                    MemoryRegion::DeviceConstant
                ),
            );
        }
        if mem.region == MemoryRegion::DeviceConstant {
            if let Some(writer) = model.array_producer(a) {
                if model.task_on_device(writer) {
                    c.error(
                        "V0111",
                        format!("array {}", array.name),
                        format!(
                            "constant-region array is written by device task `{}`",
                            model.task(writer).name
                        ),
                    );
                }
            }
        }
    }

    // Single assignment: at most one producing task per array.
    for a in model.array_ids() {
        let writers: Vec<_> = model
            .task_ids()
            .filter(|&t| model.task_output_arrays(t).contains(&a))
            .collect();
        if writers.len() > 1 {
            let names: Vec<_> = writers
                .iter()
                .map(|&t| model.task(t).name.as_str())
                .collect();
            c.error(
                "V0105",
                format!("array {}", model.array(a).name),
                format!(
                    "array is written by more than one task: {}",
                    names.join(", ")
                ),
            );
        }
    }
}

fn check_graph(model: &Model, c: &mut Checker) {
    if let Err(cycle) = super::toposort(model) {
        let names: Vec<_> = cycle.iter().map(|&t| model.task(t).name.as_str()).collect();
        c.error(
            "V0104",
            "model",
            format!(
                "connector graph has a cycle involving: {}",
                names.join(", ")
            ),
        );
        return; // coverage warnings are meaningless on a cyclic model
    }

    // Warn on output tilers that do not partition their array exactly:
    // overlapping writes would make results depend on execution order.
    for task in &model.tasks {
        for binding in &task.outputs {
            let array = model.array(binding.tiler.array);
            let work = task
                .repetition_space
                .len()
                .saturating_mul(binding.tiler.pattern_shape.len());
            if work > COVERAGE_CHECK_LIMIT || dims_inconsistent(model, task, binding) {
                continue;
            }
            let coverage =
                tiler::check_coverage(&binding.tiler, &array.shape, &task.repetition_space);
            if !matches!(coverage, Coverage::Exact) {
                let kind = match coverage {
                    Coverage::Overlaps(_) => "overlaps itself",
                    Coverage::Gaps(_) => "leaves gaps",
                    Coverage::Exact => unreachable!(),
                };
                c.warning(
                    "V0115",
                    format!("task {}/out {}", task.name, binding.port.name),
                    format!(
                        "output tiling of array `{}` {}; results may depend on execution order",
                        array.name, kind
                    ),
                );
            }
        }
    }
}

fn dims_inconsistent(
    model: &Model,
    task: &crate::ir::RepetitiveTask,
    binding: &crate::ir::PortBinding,
) -> bool {
    let tiler = &binding.tiler;
    let array_dims = model.array(tiler.array).shape.dims();
    tiler.origin.len() != array_dims
        || tiler.paving.len() != array_dims
        || tiler
            .paving
            .iter()
            .any(|r| r.len() != task.repetition_space.dims())
        || tiler.fitting.len() != array_dims
        || tiler
            .fitting
            .iter()
            .any(|r| r.len() != tiler.pattern_shape.dims())
        || binding.port.pattern_shape != tiler.pattern_shape
}

/// True if `validate` reported no errors (warnings are fine).
pub fn is_valid(diags: &[ValidationDiagnostic]) -> bool {
    diags.iter().all(|d| d.severity != Severity::Error)
}
