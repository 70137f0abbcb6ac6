//! Machine-readable schedule report.
//!
//! A line-oriented key/value format with stable key order, built for
//! golden-file diffing. [`parse_report`] reads the format back so tests can
//! make structural assertions instead of string-matching.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{BackendError, ChainArtifacts};
use crate::ir::Model;
use crate::passes::{transfer_stats, ScheduleMode, Step, TransferSchedule, TransferStats};

/// Parsed form of an emitted report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub model: String,
    pub schedule_mode: String,
    pub topologies: Vec<TopologyReport>,
    pub buffers: Vec<BufferReport>,
    /// Schedule step lines, in order, as rendered.
    pub steps: Vec<String>,
    pub naive: TransferStats,
    pub optimized: TransferStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyReport {
    pub task: String,
    pub multiplicity: Vec<u64>,
    pub global: Vec<u64>,
    pub local: Vec<u64>,
    pub guarded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferReport {
    pub array: String,
    pub region: String,
    pub read_only: bool,
    pub byte_size: u64,
}

/// Emit the report for a compiled model: per-task topologies, the buffer
/// plan, the chosen schedule's steps, and transfer stats for both the naive
/// and the optimized schedule.
pub fn emit_report(
    model: &Model,
    chain: &ChainArtifacts,
    mode: ScheduleMode,
) -> Result<String, BackendError> {
    let naive_stats = transfer_stats(&chain.naive, &chain.plan, model)?;
    let optimized_stats = transfer_stats(&chain.optimized, &chain.plan, model)?;

    let mut out = String::new();
    let _ = writeln!(out, "format = 1");
    let _ = writeln!(out, "model = {}", model.name);
    let _ = writeln!(out, "schedule = {}", mode.as_str());

    for (task, topology) in &chain.topologies {
        let _ = writeln!(out, "\n[topology {}]", model.task(*task).name);
        let _ = writeln!(
            out,
            "multiplicity = {}",
            uvec(topology.multiplicity.extents())
        );
        let _ = writeln!(out, "global = {}", u64vec(&topology.global));
        let _ = writeln!(out, "local = {}", u64vec(&topology.local));
        let _ = writeln!(out, "guarded = {}", topology.guarded);
    }

    for entry in &chain.plan.entries {
        let _ = writeln!(out, "\n[buffer {}]", model.array(entry.array).name);
        let _ = writeln!(out, "region = {}", entry.region);
        let _ = writeln!(out, "read_only = {}", entry.read_only);
        let _ = writeln!(out, "byte_size = {}", entry.byte_size);
    }

    let _ = writeln!(out, "\n[steps]");
    for step in &chain.schedule.steps {
        let _ = writeln!(out, "{}", render_step(model, step));
    }

    emit_stats(&mut out, "naive", &naive_stats);
    emit_stats(&mut out, "optimized", &optimized_stats);
    Ok(out)
}

fn emit_stats(out: &mut String, label: &str, stats: &TransferStats) {
    let _ = writeln!(out, "\n[stats {label}]");
    let _ = writeln!(out, "h2d_count = {}", stats.h2d_count);
    let _ = writeln!(out, "h2d_bytes = {}", stats.h2d_bytes);
    let _ = writeln!(out, "d2h_count = {}", stats.d2h_count);
    let _ = writeln!(out, "d2h_bytes = {}", stats.d2h_bytes);
}

fn render_step(model: &Model, step: &Step) -> String {
    match *step {
        Step::HostToDevice(a) => format!("h2d {}", model.array(a).name),
        Step::DeviceToHost(a) => format!("d2h {}", model.array(a).name),
        Step::Launch { task, ref topology } => format!(
            "launch {} global={} local={}",
            model.task(task).name,
            u64vec(&topology.global),
            u64vec(&topology.local)
        ),
        Step::HostTask { task } => format!("host {}", model.task(task).name),
    }
}

fn uvec(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

fn u64vec(v: &[u64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
}

/// Parse an emitted report back into its structure.
pub fn parse_report(text: &str) -> Result<Report, ReportError> {
    let mut model = None;
    let mut schedule_mode = None;
    let mut topologies = Vec::new();
    let mut buffers = Vec::new();
    let mut steps = Vec::new();
    let mut stats: BTreeMap<String, TransferStats> = BTreeMap::new();

    #[derive(PartialEq)]
    enum Section {
        Prelude,
        Topology,
        Buffer,
        Steps,
        Stats,
    }
    let mut section = Section::Prelude;

    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let (kind, arg) = header.split_once(' ').unwrap_or((header, ""));
            section = match kind {
                "topology" => {
                    topologies.push(TopologyReport {
                        task: arg.to_string(),
                        multiplicity: vec![],
                        global: vec![],
                        local: vec![],
                        guarded: false,
                    });
                    Section::Topology
                }
                "buffer" => {
                    buffers.push(BufferReport {
                        array: arg.to_string(),
                        region: String::new(),
                        read_only: false,
                        byte_size: 0,
                    });
                    Section::Buffer
                }
                "steps" => Section::Steps,
                "stats" => {
                    stats.insert(arg.to_string(), TransferStats::default());
                    Section::Stats
                }
                other => {
                    return Err(ReportError::Malformed(
                        ln,
                        format!("unknown section `{other}`"),
                    ))
                }
            };
            continue;
        }

        if section == Section::Steps {
            steps.push(line.to_string());
            continue;
        }

        let (key, value) = line
            .split_once(" = ")
            .ok_or_else(|| ReportError::Malformed(ln, format!("expected `key = value`: {line}")))?;
        match section {
            Section::Prelude => match key {
                "format" => {}
                "model" => model = Some(value.to_string()),
                "schedule" => schedule_mode = Some(value.to_string()),
                other => return Err(ReportError::Malformed(ln, format!("unknown key `{other}`"))),
            },
            Section::Topology => {
                let t = topologies.last_mut().expect("inside [topology]");
                match key {
                    "multiplicity" => t.multiplicity = parse_vec(value, ln)?,
                    "global" => t.global = parse_vec(value, ln)?,
                    "local" => t.local = parse_vec(value, ln)?,
                    "guarded" => t.guarded = value == "true",
                    other => {
                        return Err(ReportError::Malformed(ln, format!("unknown key `{other}`")))
                    }
                }
            }
            Section::Buffer => {
                let b = buffers.last_mut().expect("inside [buffer]");
                match key {
                    "region" => b.region = value.to_string(),
                    "read_only" => b.read_only = value == "true",
                    "byte_size" => {
                        b.byte_size = value
                            .parse()
                            .map_err(|_| ReportError::Malformed(ln, "bad integer".to_string()))?
                    }
                    other => {
                        return Err(ReportError::Malformed(ln, format!("unknown key `{other}`")))
                    }
                }
            }
            Section::Stats => {
                let s = stats.last_entry().expect("inside [stats]").into_mut();
                let v: u64 = value
                    .parse()
                    .map_err(|_| ReportError::Malformed(ln, "bad integer".to_string()))?;
                match key {
                    "h2d_count" => s.h2d_count = v,
                    "h2d_bytes" => s.h2d_bytes = v,
                    "d2h_count" => s.d2h_count = v,
                    "d2h_bytes" => s.d2h_bytes = v,
                    other => {
                        return Err(ReportError::Malformed(ln, format!("unknown key `{other}`")))
                    }
                }
            }
            Section::Steps => unreachable!(),
        }
    }

    Ok(Report {
        model: model.ok_or(ReportError::MissingSection("model"))?,
        schedule_mode: schedule_mode.ok_or(ReportError::MissingSection("schedule"))?,
        topologies,
        buffers,
        steps,
        naive: *stats
            .get("naive")
            .ok_or(ReportError::MissingSection("stats naive"))?,
        optimized: *stats
            .get("optimized")
            .ok_or(ReportError::MissingSection("stats optimized"))?,
    })
}

fn parse_vec(value: &str, ln: usize) -> Result<Vec<u64>, ReportError> {
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| ReportError::Malformed(ln, format!("expected a vector: {value}")))?;
    inner
        .split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|_| ReportError::Malformed(ln, format!("bad integer `{item}`")))
        })
        .collect()
}

/// Lines describing each step of a schedule, matching the report's `[steps]`
/// section. Exposed for the CLI's summary output.
pub fn schedule_step_lines(model: &Model, schedule: &TransferSchedule) -> Vec<String> {
    schedule
        .steps
        .iter()
        .map(|s| render_step(model, s))
        .collect()
}
