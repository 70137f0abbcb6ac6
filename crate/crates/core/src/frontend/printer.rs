//! Canonical pretty-printer: the inverse of [`super::parse`].
//!
//! `parse(print_model(m))` reconstructs a model equal to `m`, which is the
//! round-trip contract the `dump` command exposes.

use std::fmt::Write;

use crate::ir::{Connector, MemoryRegion, Model, ProcessorKind};

/// Render a model as canonical source text.
pub fn print_model(model: &Model) -> String {
    let mut out = String::new();

    for array in &model.arrays {
        let _ = writeln!(
            out,
            "array {} : {}{}",
            array.name,
            array.element.keyword(),
            array.shape
        );
    }
    if !model.arrays.is_empty() {
        out.push('\n');
    }

    for task in &model.tasks {
        let _ = writeln!(
            out,
            "task {} repeat {} body {} {{",
            task.name, task.repetition_space, task.body
        );
        for (binding, kw) in task
            .inputs
            .iter()
            .map(|b| (b, "in"))
            .chain(task.outputs.iter().map(|b| (b, "out")))
        {
            let _ = writeln!(
                out,
                "  {} {} from {} tiler {{",
                kw,
                binding.port.name,
                model.array(binding.tiler.array).name
            );
            let _ = writeln!(out, "    origin {}", ivec(&binding.tiler.origin));
            let _ = writeln!(out, "    paving {}", imat(&binding.tiler.paving));
            let _ = writeln!(out, "    fitting {}", imat(&binding.tiler.fitting));
            let _ = writeln!(out, "    pattern {}", binding.tiler.pattern_shape);
            let _ = writeln!(out, "  }}");
        }
        let _ = writeln!(out, "}}\n");
    }

    for (pi, proc) in model.processors.iter().enumerate() {
        match proc.kind {
            ProcessorKind::Host => {
                let mems = owned_memories(model, pi);
                // The grammar gives a host exactly one memory.
                let name = mems.first().map(|m| m.0.as_str()).unwrap_or("ram");
                let _ = writeln!(out, "host {} {{ memory {} }}", proc.name, name);
            }
            ProcessorKind::Device {
                max_workgroup_size,
                max_dims,
            } => {
                let _ = write!(out, "device {} {{", proc.name);
                for (name, region) in owned_memories(model, pi) {
                    let _ = write!(out, " memory {} kind {}", name, region_keyword(region));
                }
                let _ = write!(out, " maxwg {max_workgroup_size}");
                if max_dims != 3 {
                    let _ = write!(out, " maxdims {max_dims}");
                }
                let _ = writeln!(out, " }}");
            }
        }
    }
    if !model.processors.is_empty() {
        out.push('\n');
    }

    for (i, task) in model.tasks.iter().enumerate() {
        let proc = model.processor(model.allocation.task_map[i]);
        let _ = writeln!(out, "allocate {} on {}", task.name, proc.name);
    }
    for (i, array) in model.arrays.iter().enumerate() {
        let mem = model.memory(model.allocation.array_map[i]);
        let _ = writeln!(out, "allocate {} on {}", array.name, mem.name);
    }

    let mut wrote_connect_gap = false;
    for c in &model.connectors {
        if let Connector::TaskOrder { before, after } = *c {
            if !wrote_connect_gap {
                out.push('\n');
                wrote_connect_gap = true;
            }
            let _ = writeln!(
                out,
                "connect {} -> {}",
                model.task(before).name,
                model.task(after).name
            );
        }
    }

    out
}

fn owned_memories(model: &Model, proc_index: usize) -> Vec<(String, MemoryRegion)> {
    model
        .memories
        .iter()
        .filter(|m| m.owner.0 == proc_index)
        .map(|m| (m.name.clone(), m.region))
        .collect()
}

fn region_keyword(region: MemoryRegion) -> &'static str {
    match region {
        MemoryRegion::DeviceGlobal => "global",
        MemoryRegion::DeviceConstant => "constant",
        MemoryRegion::DeviceLocal => "local",
        MemoryRegion::DevicePrivate => "private",
        MemoryRegion::HostRam => "host-ram", // never printed; hosts have fixed syntax
    }
}

fn ivec(v: &[i64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

fn imat(m: &[Vec<i64>]) -> String {
    let rows: Vec<String> = m.iter().map(|row| ivec(row)).collect();
    format!("[{}]", rows.join(","))
}
