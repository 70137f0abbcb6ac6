//! Device kernel emission.
//!
//! One kernel function per device-allocated task. Each work-item recovers
//! its repetition index from a row-major linear global id, applies the
//! bounds guard when the topology is padded, loads its input patterns into
//! private arrays with the tiler arithmetic inlined (origin + paving * r +
//! fitting * f, wrapped with the non-negative modulo), calls the body helper,
//! and writes the output patterns back the same way. The arithmetic matches
//! the simulator exactly, modulo included, so both produce identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::BackendError;
use crate::builtins;
use crate::ir::{MemoryRegion, Model, PortBinding, RepetitiveTask, TaskId};
use crate::passes::{BufferPlan, LaunchTopology};

/// Emit the kernel source file for every device task, in declaration order.
pub fn emit_kernels(
    model: &Model,
    topologies: &BTreeMap<TaskId, LaunchTopology>,
    plan: &BufferPlan,
) -> Result<String, BackendError> {
    let names = Names::new(model)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "/* OpenCL kernels for model '{}'. Generated; do not edit. */",
        model.name
    );
    out.push('\n');

    emit_body_helpers(
        &mut out,
        model,
        model.task_ids().filter(|&t| model.task_on_device(t)),
    )?;

    for t in model.task_ids().filter(|&t| model.task_on_device(t)) {
        let task = model.task(t);
        let topology = &topologies[&t];
        emit_one_kernel(&mut out, model, task, topology, plan, &names)?;
    }
    Ok(out)
}

/// Emit each body helper used by the given tasks exactly once.
pub(super) fn emit_body_helpers(
    out: &mut String,
    model: &Model,
    tasks: impl Iterator<Item = TaskId>,
) -> Result<(), BackendError> {
    let mut emitted = BTreeSet::new();
    for t in tasks {
        let task = model.task(t);
        let builtin =
            builtins::lookup(&task.body).ok_or_else(|| BackendError::MissingTemplate {
                task: task.name.clone(),
                body: task.body.clone(),
            })?;
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
        let name = builtins::c_function_name(builtin, &ins, &outs);
        if emitted.insert(name.clone()) {
            out.push_str(&(builtin.c_source)(&name, &ins, &outs));
            out.push('\n');
        }
    }
    Ok(())
}

fn emit_one_kernel(
    out: &mut String,
    model: &Model,
    task: &RepetitiveTask,
    topology: &LaunchTopology,
    plan: &BufferPlan,
    names: &Names,
) -> Result<(), BackendError> {
    let kernel_name = names.task(&task.name);

    // Parameter list: input arrays then output arrays, deduplicated.
    let mut params: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    for (binding, writable) in task
        .inputs
        .iter()
        .map(|b| (b, false))
        .chain(task.outputs.iter().map(|b| (b, true)))
    {
        let array = model.array(binding.tiler.array);
        if !seen.insert(binding.tiler.array) {
            continue;
        }
        let cty = builtins::c_type(array.element);
        let constant_region = plan
            .entry(binding.tiler.array)
            .map(|e| e.region == MemoryRegion::DeviceConstant)
            .unwrap_or(false);
        let qualifier = if constant_region {
            "__constant"
        } else {
            "__global"
        };
        let constness = if writable { "" } else { "const " };
        params.push(format!(
            "{qualifier} {constness}{cty} *{}",
            names.array(&array.name)
        ));
    }

    let _ = writeln!(out, "__kernel void {kernel_name}(");
    for (i, p) in params.iter().enumerate() {
        let sep = if i + 1 == params.len() { ")" } else { "," };
        let _ = writeln!(out, "\t{p}{sep}");
    }
    out.push_str("{\n");

    // Row-major linear work-item id over the padded global sizes.
    let lid = match topology.global.len() {
        1 => "get_global_id(0)".to_string(),
        2 => format!(
            "get_global_id(0) + (size_t){} * get_global_id(1)",
            topology.global[0]
        ),
        _ => format!(
            "get_global_id(0) + (size_t){} * (get_global_id(1) + (size_t){} * get_global_id(2))",
            topology.global[0], topology.global[1]
        ),
    };
    let _ = writeln!(out, "\tconst size_t lid = {lid};");
    let points: u128 = topology
        .multiplicity
        .extents()
        .iter()
        .map(|&e| e as u128)
        .product();
    if topology.guarded {
        let _ = writeln!(out, "\tif (lid >= (size_t){points}) {{\n\t\treturn;\n\t}}");
    }

    emit_elementary_step(out, model, task, names, "\t");
    out.push_str("}\n\n");
    Ok(())
}

/// Emit the body of one elementary execution: repetition-index recovery from
/// `lid`, pattern loads, the body call, and pattern stores. Shared between
/// kernels (one work-item each) and host task loops.
pub(super) fn emit_elementary_step(
    out: &mut String,
    model: &Model,
    task: &RepetitiveTask,
    names: &Names,
    indent: &str,
) {
    // Decompose lid row-major over the multiplicity: last dimension fastest.
    let rep = task.repetition_space.extents();
    if rep.len() == 1 {
        let _ = writeln!(out, "{indent}const long r0 = (long)lid;");
    } else {
        let _ = writeln!(out, "{indent}size_t rem = lid;");
        for d in (1..rep.len()).rev() {
            let _ = writeln!(
                out,
                "{indent}const long r{d} = (long)(rem % (size_t){});",
                rep[d]
            );
            let _ = writeln!(out, "{indent}rem /= (size_t){};", rep[d]);
        }
        let _ = writeln!(out, "{indent}const long r0 = (long)rem;");
    }

    for (i, binding) in task.inputs.iter().enumerate() {
        emit_pattern_load(
            out,
            model,
            binding,
            &format!("p_in{i}"),
            true,
            names,
            indent,
        );
    }
    for (i, binding) in task.outputs.iter().enumerate() {
        let cty = builtins::c_type(binding.port.element);
        let n = binding.port.pattern_shape.len();
        let _ = writeln!(out, "{indent}{cty} p_out{i}[{n}];");
    }

    let builtin = builtins::lookup(&task.body).expect("validated body");
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
    let body_fn = builtins::c_function_name(builtin, &ins, &outs);
    let mut args: Vec<String> = (0..task.inputs.len()).map(|i| format!("p_in{i}")).collect();
    args.extend((0..task.outputs.len()).map(|i| format!("p_out{i}")));
    let _ = writeln!(out, "{indent}{body_fn}({});", args.join(", "));

    for (i, binding) in task.outputs.iter().enumerate() {
        emit_pattern_load(
            out,
            model,
            binding,
            &format!("p_out{i}"),
            false,
            names,
            indent,
        );
    }
}

/// Emit the loop that moves one pattern between its private array and the
/// model array: a load when `is_load`, a store otherwise.
fn emit_pattern_load(
    out: &mut String,
    model: &Model,
    binding: &PortBinding,
    var: &str,
    is_load: bool,
    names: &Names,
    indent: &str,
) {
    let array = model.array(binding.tiler.array);
    let array_name = names.array(&array.name);
    let cty = builtins::c_type(binding.port.element);
    let pattern = &binding.port.pattern_shape;
    let n = pattern.len();

    if is_load {
        let _ = writeln!(out, "{indent}{cty} {var}[{n}];");
    }
    let _ = writeln!(out, "{indent}for (long pf = 0; pf < {n}; ++pf) {{");
    let inner = format!("{indent}\t");

    // Decompose pf row-major into pattern coordinates.
    let pat = pattern.extents();
    if pat.len() == 1 {
        let _ = writeln!(out, "{inner}const long f0 = pf;");
    } else {
        let _ = writeln!(out, "{inner}long frem = pf;");
        for d in (1..pat.len()).rev() {
            let _ = writeln!(out, "{inner}const long f{d} = frem % {};", pat[d]);
            let _ = writeln!(out, "{inner}frem /= {};", pat[d]);
        }
        let _ = writeln!(out, "{inner}const long f0 = frem;");
    }

    // Per array dimension: origin + paving*r + fitting*f, wrapped.
    let extents = array.shape.extents();
    for d in 0..extents.len() {
        let expr = index_expression(binding, d);
        let _ = writeln!(out, "{inner}long i{d} = {expr};");
        let _ = writeln!(
            out,
            "{inner}i{d} %= {ext}; if (i{d} < 0) {{ i{d} += {ext}; }}",
            ext = extents[d]
        );
    }
    let strides = array.shape.strides();
    let linear = (0..extents.len())
        .map(|d| {
            if strides[d] == 1 {
                format!("(size_t)i{d}")
            } else {
                format!("(size_t)i{d} * {}", strides[d])
            }
        })
        .collect::<Vec<_>>()
        .join(" + ");
    if is_load {
        let _ = writeln!(out, "{inner}{var}[pf] = {array_name}[{linear}];");
    } else {
        let _ = writeln!(out, "{inner}{array_name}[{linear}] = {var}[pf];");
    }
    let _ = writeln!(out, "{indent}}}");
}

/// The affine index expression for one array dimension, zero terms omitted.
fn index_expression(binding: &PortBinding, d: usize) -> String {
    let tiler = &binding.tiler;
    let mut terms = Vec::new();
    if tiler.origin[d] != 0 {
        terms.push(tiler.origin[d].to_string());
    }
    for (k, &c) in tiler.paving[d].iter().enumerate() {
        if c != 0 {
            terms.push(format!("{c} * r{k}"));
        }
    }
    for (j, &c) in tiler.fitting[d].iter().enumerate() {
        if c != 0 {
            terms.push(format!("{c} * f{j}"));
        }
    }
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

/// Sanitized, collision-checked C identifiers for tasks and arrays.
pub(super) struct Names {
    tasks: BTreeMap<String, String>,
    arrays: BTreeMap<String, String>,
}

impl Names {
    pub(super) fn new(model: &Model) -> Result<Self, BackendError> {
        let mut used = BTreeSet::new();
        let mut tasks = BTreeMap::new();
        let mut arrays = BTreeMap::new();
        for task in &model.tasks {
            let name = sanitize(&task.name);
            if !used.insert(name.clone()) {
                return Err(BackendError::NameCollision(name));
            }
            tasks.insert(task.name.clone(), name);
        }
        for array in &model.arrays {
            let name = sanitize(&array.name);
            if !used.insert(name.clone()) {
                return Err(BackendError::NameCollision(name));
            }
            arrays.insert(array.name.clone(), name);
        }
        Ok(Names { tasks, arrays })
    }

    pub(super) fn task(&self, name: &str) -> &str {
        &self.tasks[name]
    }

    pub(super) fn array(&self, name: &str) -> &str {
        &self.arrays[name]
    }
}

/// C and OpenCL C keywords plus the identifiers the emitters use internally.
const RESERVED: &[&str] = &[
    "auto", "bool", "break", "case", "char", "const", "constant", "continue", "default", "do",
    "double", "else", "enum", "extern", "float", "for", "global", "goto", "half", "if", "inline",
    "int", "kernel", "local", "long", "main", "private", "register", "restrict", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "uchar", "uint", "ulong", "union",
    "unsigned", "ushort", "void", "volatile", "while", "lid", "pf", "rem", "frem", "size_t",
];

fn sanitize(name: &str) -> String {
    let reserved = RESERVED.contains(&name)
        || name.starts_with("body_")
        || name.starts_with("run_")
        || name.starts_with("p_in")
        || name.starts_with("p_out")
        || matches!(name.as_bytes(), [b'r' | b'f' | b'i', d] if d.is_ascii_digit());
    if reserved {
        format!("id_{name}")
    } else {
        name.to_string()
    }
}
