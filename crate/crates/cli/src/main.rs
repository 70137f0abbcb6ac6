//! `gmc` — compile, check, simulate, and benchmark repetitive task-graph
//! models.
//!
//! Exit codes: 0 on success, 1 when the model carries error diagnostics,
//! 2 on I/O failure. Human-readable output goes to stdout, diagnostics to
//! stderr.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gmc_core::backend::{compile, run_chain};
use gmc_core::frontend::{format_diagnostics, print_model};
use gmc_core::ir::{is_valid, Model};
use gmc_core::passes::{transfer_stats, verify_schedule, ScheduleMode, TopologyConfig};
use gmc_core::sim::{bench, execute_schedule, synthetic_inputs, FrameLayout};
use gmc_core::tiler::DenseArray;
use gmc_core::TransferStats;

#[derive(Parser)]
#[command(
    name = "gmc",
    version,
    about = "Model compiler for repetitive data-parallel applications",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct TopologyArgs {
    /// Multiplicities below this run as a single exact work-group.
    #[arg(long, default_value_t = 64)]
    min_items: u64,
    /// Work-items per work-group cap (further limited by the device).
    #[arg(long, default_value_t = 256)]
    max_wg: u64,
}

impl TopologyArgs {
    fn config(&self) -> TopologyConfig {
        TopologyConfig {
            min_items: self.min_items,
            max_wg: self.max_wg,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model, printing diagnostics.
    Check {
        /// Model source file (.gm).
        model: PathBuf,
    },
    /// Run the pass chain and write kernel source, host driver, and report.
    Compile {
        model: PathBuf,
        /// Transfer schedule to generate.
        #[arg(long, default_value = "optimized")]
        schedule: ScheduleMode,
        /// Output directory for the generated files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        topology: TopologyArgs,
    },
    /// Execute a model on frames with the CPU reference simulator.
    Simulate {
        model: PathBuf,
        /// Number of frames to process.
        #[arg(long, default_value_t = 1)]
        frames: u64,
        /// Seed for synthetic input frames (used when --input is absent).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Raw input frame file; synthetic frames are generated without it.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Raw output frame file; outputs are discarded without it.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "optimized")]
        schedule: ScheduleMode,
        #[command(flatten)]
        topology: TopologyArgs,
    },
    /// Benchmark schedule execution and report throughput and stats.
    Bench {
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        frames: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Raw input frame file; synthetic frames are generated without it.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "optimized")]
        schedule: ScheduleMode,
        #[command(flatten)]
        topology: TopologyArgs,
    },
    /// Pretty-print the parsed model as canonical source.
    Dump { model: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// I/O-level failure; everything else is reported via diagnostics.
type IoError = String;

fn run(cli: Cli) -> Result<ExitCode, IoError> {
    match cli.command {
        Command::Check { model } => {
            let Some(model) = load_model(&model)? else {
                return Ok(ExitCode::from(1));
            };
            let devices = model
                .task_ids()
                .filter(|&t| model.task_on_device(t))
                .count();
            println!(
                "model {}: {} tasks ({} on device), {} arrays: ok",
                model.name,
                model.tasks.len(),
                devices,
                model.arrays.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compile {
            model,
            schedule,
            out,
            topology,
        } => {
            let Some(model) = load_model(&model)? else {
                return Ok(ExitCode::from(1));
            };
            compile_cmd(&model, schedule, &out, &topology.config())
        }
        Command::Simulate {
            model,
            frames,
            seed,
            input,
            output,
            schedule,
            topology,
        } => {
            let Some(model) = load_model(&model)? else {
                return Ok(ExitCode::from(1));
            };
            simulate_cmd(
                &model,
                frames,
                seed,
                input.as_deref(),
                output.as_deref(),
                schedule,
                &topology.config(),
            )
        }
        Command::Bench {
            model,
            frames,
            seed,
            input,
            schedule,
            topology,
        } => {
            let Some(model) = load_model(&model)? else {
                return Ok(ExitCode::from(1));
            };
            bench_cmd(
                &model,
                frames,
                seed,
                input.as_deref(),
                schedule,
                &topology.config(),
            )
        }
        Command::Dump { model } => {
            // Dump reflects the parse, so semantic diagnostics do not gate it.
            let Some(model) = load_parsed(&model)? else {
                return Ok(ExitCode::from(1));
            };
            print!("{}", print_model(&model));
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Read and parse a model file without validating it. Diagnostics go to
/// stderr; `None` means errors were reported and the caller should exit 1.
fn load_parsed(path: &Path) -> Result<Option<Model>, IoError> {
    let source =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file = path.to_string_lossy();
    match gmc_core::parse(&file, &source) {
        Ok(model) => Ok(Some(model)),
        Err(diags) => {
            eprint!("{}", format_diagnostics(&diags, &source));
            Ok(None)
        }
    }
}

/// Read, parse, and validate a model file. Diagnostics go to stderr; `None`
/// means errors were reported and the caller should exit 1.
fn load_model(path: &Path) -> Result<Option<Model>, IoError> {
    let Some(model) = load_parsed(path)? else {
        return Ok(None);
    };
    let file = path.to_string_lossy();
    let diags = gmc_core::validate(&model);
    for d in &diags {
        eprintln!("{}: {d}", file);
    }
    if !is_valid(&diags) {
        return Ok(None);
    }
    Ok(Some(model))
}

fn stats_line(stats: &TransferStats) -> String {
    format!(
        "h2d={} ({} B) d2h={} ({} B) per frame",
        stats.h2d_count, stats.h2d_bytes, stats.d2h_count, stats.d2h_bytes
    )
}

fn compile_cmd(
    model: &Model,
    mode: ScheduleMode,
    out_dir: &Path,
    cfg: &TopologyConfig,
) -> Result<ExitCode, IoError> {
    let (artifact, chain) =
        compile(model, cfg, mode).map_err(|e| format!("compilation failed: {e}"))?;
    verify_schedule(model, &chain.schedule)
        .map_err(|e| format!("internal schedule violation: {e}"))?;

    fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let write = |name: String, contents: &str| -> Result<PathBuf, IoError> {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        Ok(path)
    };
    let kernel_path = write(format!("{}.cl", model.name), &artifact.kernel_source)?;
    let host_path = write(format!("{}_host.c", model.name), &artifact.host_source)?;
    let report_path = write(format!("{}_report.txt", model.name), &artifact.report)?;

    let stats = transfer_stats(&chain.schedule, &chain.plan, model)
        .map_err(|e| format!("stats failed: {e}"))?;
    println!("wrote {}", kernel_path.display());
    println!("wrote {}", host_path.display());
    println!("wrote {}", report_path.display());
    println!("schedule={} {}", mode.as_str(), stats_line(&stats));
    Ok(ExitCode::SUCCESS)
}

fn simulate_cmd(
    model: &Model,
    frames: u64,
    seed: u64,
    input: Option<&Path>,
    output: Option<&Path>,
    mode: ScheduleMode,
    cfg: &TopologyConfig,
) -> Result<ExitCode, IoError> {
    let chain = run_chain(model, cfg, mode).map_err(|e| format!("scheduling failed: {e}"))?;

    let mut reader = match input {
        Some(path) => {
            let file =
                fs::File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
            Some((
                FrameLayout::for_inputs(model).map_err(|e| e.to_string())?,
                BufReader::new(file),
            ))
        }
        None => None,
    };
    let mut writer = match output {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
            Some((
                FrameLayout::for_outputs(model).map_err(|e| e.to_string())?,
                BufWriter::new(file),
            ))
        }
        None => None,
    };

    let mut stats = TransferStats::default();
    for frame in 0..frames {
        let inputs = next_inputs(model, &mut reader, seed, frame)?
            .ok_or_else(|| format!("frame {frame}: input exhausted"))?;
        let run = execute_schedule(model, &chain.schedule, &inputs)
            .map_err(|e| format!("frame {frame}: {e}"))?;
        stats = run.stats;
        if let Some((layout, w)) = writer.as_mut() {
            layout
                .write_frame(w, &run.outputs)
                .map_err(|e| e.to_string())?;
        }
    }
    if let Some((_, mut w)) = writer {
        w.flush().map_err(|e| e.to_string())?;
    }
    println!(
        "simulated {frames} frame(s) of {} (schedule={}) {}",
        model.name,
        mode.as_str(),
        stats_line(&stats)
    );
    Ok(ExitCode::SUCCESS)
}

type FrameReader = Option<(FrameLayout, BufReader<fs::File>)>;

/// Next frame from the file when one was given, else synthetic from the seed.
fn next_inputs(
    model: &Model,
    reader: &mut FrameReader,
    seed: u64,
    frame: u64,
) -> Result<Option<BTreeMap<String, DenseArray>>, IoError> {
    match reader {
        Some((layout, r)) => layout.read_frame(r).map_err(|e| e.to_string()),
        None => Ok(Some(synthetic_inputs(model, seed, frame))),
    }
}

fn bench_cmd(
    model: &Model,
    frames: u64,
    seed: u64,
    input: Option<&Path>,
    mode: ScheduleMode,
    cfg: &TopologyConfig,
) -> Result<ExitCode, IoError> {
    let chain = run_chain(model, cfg, mode).map_err(|e| format!("scheduling failed: {e}"))?;
    let mut reader: FrameReader = match input {
        Some(path) => {
            let file =
                fs::File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
            Some((
                FrameLayout::for_inputs(model).map_err(|e| e.to_string())?,
                BufReader::new(file),
            ))
        }
        None => None,
    };

    let mut source = |frame: u64| {
        next_inputs(model, &mut reader, seed, frame).map_err(gmc_core::sim::SimError::FrameIo)
    };
    let trace = bench(model, &chain.schedule, &mut source, frames)
        .map_err(|e| format!("bench failed: {e}"))?;

    println!(
        "benchmarked {} frame(s) of {} (schedule={}) in {:.3} s ({:.1} frames/s)",
        trace.frames,
        model.name,
        mode.as_str(),
        trace.wall.as_secs_f64(),
        trace.frames_per_second()
    );
    println!("{}", stats_line(&trace.stats));
    for (task, elapsed) in &trace.per_task {
        println!("  task {task}: {:.3} ms total", elapsed.as_secs_f64() * 1e3);
    }
    Ok(ExitCode::SUCCESS)
}
