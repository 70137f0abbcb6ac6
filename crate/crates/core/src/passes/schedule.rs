//! Transfer scheduling and redundant-transfer elimination.
//!
//! The naive schedule copies every input to the device before each launch
//! and every output back after it, unconditionally; that is the baseline a
//! model compiles to without any data-flow analysis. The optimizer replays
//! the schedule tracking which side holds the authoritative copy of each
//! array (its residency) and drops copies that cannot be observed: uploads
//! of data already resident, and downloads nothing on the host will read.

use std::collections::{BTreeMap, BTreeSet};

use super::topology::{task_topologies, LaunchTopology, TopologyConfig};
use super::{BufferPlan, PassError};
use crate::ir::{ArrayId, Model, TaskId};

/// One step of a per-frame schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Copy the host's array contents into its device buffer.
    HostToDevice(ArrayId),
    /// Copy the device buffer back into the host's array.
    DeviceToHost(ArrayId),
    /// Run a device task over its NDRange.
    Launch {
        task: TaskId,
        topology: LaunchTopology,
    },
    /// Run a host-allocated task on the host's copies.
    HostTask { task: TaskId },
}

impl Step {
    pub fn is_transfer(&self) -> bool {
        matches!(self, Step::HostToDevice(_) | Step::DeviceToHost(_))
    }

    /// The array moved by a transfer step.
    pub fn transferred_array(&self) -> Option<ArrayId> {
        match *self {
            Step::HostToDevice(a) | Step::DeviceToHost(a) => Some(a),
            _ => None,
        }
    }
}

/// An ordered list of steps, executed once per frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferSchedule {
    pub steps: Vec<Step>,
    /// The schedule repeats for every frame of the input stream.
    pub per_frame: bool,
}

impl TransferSchedule {
    pub fn transfer_count(&self) -> usize {
        self.steps.iter().filter(|s| s.is_transfer()).count()
    }

    pub fn launches(&self) -> impl Iterator<Item = (TaskId, &LaunchTopology)> {
        self.steps.iter().filter_map(|s| match s {
            Step::Launch { task, topology } => Some((*task, topology)),
            _ => None,
        })
    }
}

/// Per-frame transfer counts and byte totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransferStats {
    pub h2d_count: u64,
    pub d2h_count: u64,
    pub h2d_bytes: u64,
    pub d2h_bytes: u64,
}

/// Build the unoptimized baseline schedule: tasks in topological order, a
/// host-to-device copy of every input before each device launch and a
/// device-to-host copy of every output after it.
pub fn schedule_naive(model: &Model, cfg: &TopologyConfig) -> Result<TransferSchedule, PassError> {
    let order = crate::ir::toposort(model).map_err(|cycle| {
        PassError::Cycle(
            cycle
                .iter()
                .map(|&t| model.task(t).name.clone())
                .collect::<Vec<_>>()
                .join(", "),
        )
    })?;

    let devices: BTreeSet<_> = model
        .task_ids()
        .filter(|&t| model.task_on_device(t))
        .map(|t| model.allocation.task_map[t.0])
        .collect();
    if devices.len() > 1 {
        return Err(PassError::MultiDevice(devices.len()));
    }

    let topologies = task_topologies(model, cfg)?;
    let mut steps = Vec::new();
    for task in order {
        if model.task_on_device(task) {
            for array in model.task_input_arrays(task) {
                steps.push(Step::HostToDevice(array));
            }
            steps.push(Step::Launch {
                task,
                topology: topologies[&task].clone(),
            });
            for array in model.task_output_arrays(task) {
                steps.push(Step::DeviceToHost(array));
            }
        } else {
            steps.push(Step::HostTask { task });
        }
    }

    Ok(TransferSchedule {
        steps,
        per_frame: true,
    })
}

/// Residency state of one array during analysis or replay.
#[derive(Debug, Clone, Copy)]
struct Residency {
    /// Host copy holds the current value.
    host: bool,
    /// Device buffer holds the current value.
    device: bool,
}

impl Residency {
    /// At frame start the host owns everything: inputs are freshly loaded
    /// and untouched arrays are the host's zero-initialized staging copies.
    fn initial() -> Self {
        Residency {
            host: true,
            device: false,
        }
    }
}

/// Drop transfers the rest of the schedule cannot observe.
///
/// A forward scan tracks per-array residency. An upload is dropped when the
/// device already holds the current value; a download is dropped when the
/// array is not a model output and no later host-side task reads or writes
/// it before the array's next device-side write — which, under the one
///-producer-per-frame rule, means any later host toucher at all. Launch
/// order never changes, and the result is idempotent under re-optimization.
pub fn optimize_transfers(schedule: &TransferSchedule, model: &Model) -> TransferSchedule {
    let outputs: BTreeSet<ArrayId> = model.output_arrays().into_iter().collect();

    // For each array, positions of host-task steps touching it.
    let mut host_touch: BTreeMap<ArrayId, Vec<usize>> = BTreeMap::new();
    for (i, step) in schedule.steps.iter().enumerate() {
        if let Step::HostTask { task } = step {
            for a in model
                .task_input_arrays(*task)
                .into_iter()
                .chain(model.task_output_arrays(*task))
            {
                host_touch.entry(a).or_default().push(i);
            }
        }
    }

    let mut residency: BTreeMap<ArrayId, Residency> = model
        .array_ids()
        .map(|a| (a, Residency::initial()))
        .collect();

    let mut steps = Vec::with_capacity(schedule.steps.len());
    for (i, step) in schedule.steps.iter().enumerate() {
        match *step {
            Step::HostToDevice(a) => {
                let state = residency.get_mut(&a).expect("array in model");
                if state.device {
                    continue; // already resident and unmodified on host since
                }
                state.device = true;
                steps.push(step.clone());
            }
            Step::DeviceToHost(a) => {
                let state = residency[&a];
                if state.host {
                    continue; // host copy is already current
                }
                let host_needs_it = outputs.contains(&a)
                    || host_touch
                        .get(&a)
                        .is_some_and(|touches| touches.iter().any(|&j| j > i));
                if !host_needs_it {
                    continue;
                }
                residency.get_mut(&a).expect("array in model").host = true;
                steps.push(step.clone());
            }
            Step::Launch { task, .. } => {
                for a in model.task_output_arrays(task) {
                    let state = residency.get_mut(&a).expect("array in model");
                    state.device = true;
                    state.host = false;
                }
                steps.push(step.clone());
            }
            Step::HostTask { task } => {
                for a in model.task_output_arrays(task) {
                    let state = residency.get_mut(&a).expect("array in model");
                    state.host = true;
                    state.device = false;
                }
                steps.push(step.clone());
            }
        }
    }

    TransferSchedule {
        steps,
        per_frame: schedule.per_frame,
    }
}

/// A violation found by [`verify_schedule`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleViolation {
    #[error("step {step}: upload of `{array}` while the host copy is stale")]
    StaleUpload { step: usize, array: String },
    #[error("step {step}: download of `{array}` but the device never produced it")]
    StaleDownload { step: usize, array: String },
    #[error("step {step}: launch of `{task}` reads `{array}` which is not device-resident")]
    MissingDeviceInput {
        step: usize,
        task: String,
        array: String,
    },
    #[error("step {step}: host task `{task}` reads `{array}` which is not host-resident")]
    MissingHostInput {
        step: usize,
        task: String,
        array: String,
    },
    #[error("step {step}: `{task}` is allocated to the {expected}, scheduled as a {got} step")]
    WrongProcessor {
        step: usize,
        task: String,
        expected: &'static str,
        got: &'static str,
    },
    #[error("model output `{array}` is not host-resident when the schedule completes")]
    OutputNotOnHost { array: String },
}

/// Independently replay residency state and check every schedule invariant:
/// device launches only read device-resident data, host tasks only read
/// host-resident data, transfers never copy stale bytes, and every model
/// output ends the frame host-resident.
pub fn verify_schedule(
    model: &Model,
    schedule: &TransferSchedule,
) -> Result<(), ScheduleViolation> {
    let mut residency: BTreeMap<ArrayId, Residency> = model
        .array_ids()
        .map(|a| (a, Residency::initial()))
        .collect();

    for (i, step) in schedule.steps.iter().enumerate() {
        match *step {
            Step::HostToDevice(a) => {
                let state = residency.get_mut(&a).expect("array in model");
                if !state.host {
                    return Err(ScheduleViolation::StaleUpload {
                        step: i,
                        array: model.array(a).name.clone(),
                    });
                }
                state.device = true;
            }
            Step::DeviceToHost(a) => {
                let state = residency.get_mut(&a).expect("array in model");
                if !state.device {
                    return Err(ScheduleViolation::StaleDownload {
                        step: i,
                        array: model.array(a).name.clone(),
                    });
                }
                state.host = true;
            }
            Step::Launch { task, .. } => {
                if !model.task_on_device(task) {
                    return Err(ScheduleViolation::WrongProcessor {
                        step: i,
                        task: model.task(task).name.clone(),
                        expected: "host",
                        got: "device launch",
                    });
                }
                for a in model.task_input_arrays(task) {
                    if !residency[&a].device {
                        return Err(ScheduleViolation::MissingDeviceInput {
                            step: i,
                            task: model.task(task).name.clone(),
                            array: model.array(a).name.clone(),
                        });
                    }
                }
                for a in model.task_output_arrays(task) {
                    let state = residency.get_mut(&a).expect("array in model");
                    state.device = true;
                    state.host = false;
                }
            }
            Step::HostTask { task } => {
                if model.task_on_device(task) {
                    return Err(ScheduleViolation::WrongProcessor {
                        step: i,
                        task: model.task(task).name.clone(),
                        expected: "device",
                        got: "host",
                    });
                }
                for a in model.task_input_arrays(task) {
                    if !residency[&a].host {
                        return Err(ScheduleViolation::MissingHostInput {
                            step: i,
                            task: model.task(task).name.clone(),
                            array: model.array(a).name.clone(),
                        });
                    }
                }
                for a in model.task_output_arrays(task) {
                    let state = residency.get_mut(&a).expect("array in model");
                    state.host = true;
                    state.device = false;
                }
            }
        }
    }

    for a in model.output_arrays() {
        if !residency[&a].host {
            return Err(ScheduleViolation::OutputNotOnHost {
                array: model.array(a).name.clone(),
            });
        }
    }
    Ok(())
}

/// Exact per-frame transfer counts and byte totals for a schedule.
pub fn transfer_stats(
    schedule: &TransferSchedule,
    plan: &BufferPlan,
    model: &Model,
) -> Result<TransferStats, PassError> {
    let mut stats = TransferStats::default();
    for step in &schedule.steps {
        let Some(array) = step.transferred_array() else {
            continue;
        };
        let entry = plan
            .entry(array)
            .ok_or_else(|| PassError::UnplannedArray(model.array(array).name.clone()))?;
        match step {
            Step::HostToDevice(_) => {
                stats.h2d_count += 1;
                stats.h2d_bytes += entry.byte_size;
            }
            Step::DeviceToHost(_) => {
                stats.d2h_count += 1;
                stats.d2h_bytes += entry.byte_size;
            }
            _ => unreachable!(),
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{
        Direction, MemoryRegion, ModelBuilder, PortBinding, RepetitiveTask, ScalarType, Shape,
        Tiler,
    };

    fn binding(name: &str, dir: Direction, array: ArrayId) -> PortBinding {
        let pattern = Shape::new(vec![16]).unwrap();
        PortBinding {
            port: crate::ir::Port {
                name: name.to_string(),
                direction: dir,
                element: ScalarType::U8,
                pattern_shape: pattern.clone(),
            },
            tiler: Tiler {
                origin: vec![0],
                paving: vec![vec![0]],
                fitting: vec![vec![1]],
                array,
                pattern_shape: pattern,
            },
        }
    }

    /// dev(t1): x -> m; host(t2): m -> n; dev(t3): n -> y.
    fn mixed_model() -> Model {
        let mut b = ModelBuilder::new("mixed");
        let host = b.host("cpu");
        let ram = b.memory("ram", MemoryRegion::HostRam, host);
        let dev = b.device("gpu", 256);
        let gmem = b.memory("gmem", MemoryRegion::DeviceGlobal, dev);
        let shape = Shape::new(vec![16]).unwrap();
        let x = b.array("x", ScalarType::U8, shape.clone());
        let m = b.array("m", ScalarType::U8, shape.clone());
        let n = b.array("n", ScalarType::U8, shape.clone());
        let y = b.array("y", ScalarType::U8, shape);
        for (a, mem) in [(x, gmem), (m, gmem), (n, ram), (y, gmem)] {
            b.allocate_array(a, mem);
        }
        let rep = Shape::new(vec![1]).unwrap();
        let t1 = b.task(RepetitiveTask {
            name: "t1".to_string(),
            repetition_space: rep.clone(),
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, x)],
            outputs: vec![binding("o", Direction::Out, m)],
        });
        let t2 = b.task(RepetitiveTask {
            name: "t2".to_string(),
            repetition_space: rep.clone(),
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, m)],
            outputs: vec![binding("o", Direction::Out, n)],
        });
        let t3 = b.task(RepetitiveTask {
            name: "t3".to_string(),
            repetition_space: rep,
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, n)],
            outputs: vec![binding("o", Direction::Out, y)],
        });
        b.allocate_task(t1, dev);
        b.allocate_task(t2, host);
        b.allocate_task(t3, dev);
        b.finish().unwrap()
    }

    #[test]
    fn host_readers_keep_their_downloads() {
        let model = mixed_model();
        let cfg = TopologyConfig::default();
        let naive = schedule_naive(&model, &cfg).unwrap();
        let optimized = optimize_transfers(&naive, &model);
        verify_schedule(&model, &optimized).unwrap();

        // m is device-produced but host-read by t2: its download survives.
        let m = model.find_array("m").unwrap();
        assert!(optimized
            .steps
            .iter()
            .any(|s| matches!(s, Step::DeviceToHost(a) if *a == m)));

        // n is host-written and device-read by t3: its upload survives.
        let n = model.find_array("n").unwrap();
        assert!(optimized
            .steps
            .iter()
            .any(|s| matches!(s, Step::HostToDevice(a) if *a == n)));

        // The host task itself appears as a step between the launches.
        let kinds: Vec<_> = optimized
            .steps
            .iter()
            .map(|s| match s {
                Step::HostToDevice(_) => "h2d",
                Step::DeviceToHost(_) => "d2h",
                Step::Launch { .. } => "launch",
                Step::HostTask { .. } => "host",
            })
            .collect();
        assert_eq!(
            kinds,
            vec!["h2d", "launch", "d2h", "host", "h2d", "launch", "d2h"]
        );
    }

    #[test]
    fn stats_reject_unplanned_arrays() {
        let model = mixed_model();
        let cfg = TopologyConfig::default();
        let schedule = schedule_naive(&model, &cfg).unwrap();
        let empty = BufferPlan::default();
        assert!(matches!(
            transfer_stats(&schedule, &empty, &model),
            Err(PassError::UnplannedArray(_))
        ));
    }

    #[test]
    fn host_only_model_has_an_empty_buffer_plan() {
        let mut b = ModelBuilder::new("hostonly");
        let host = b.host("cpu");
        let ram = b.memory("ram", MemoryRegion::HostRam, host);
        let shape = Shape::new(vec![16]).unwrap();
        let x = b.array("x", ScalarType::U8, shape.clone());
        let y = b.array("y", ScalarType::U8, shape);
        b.allocate_array(x, ram);
        b.allocate_array(y, ram);
        let t = b.task(RepetitiveTask {
            name: "t".to_string(),
            repetition_space: Shape::new(vec![1]).unwrap(),
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, x)],
            outputs: vec![binding("o", Direction::Out, y)],
        });
        b.allocate_task(t, host);
        let model = b.finish().unwrap();
        assert!(crate::passes::plan_buffers(&model).unwrap().is_empty());
    }

    #[test]
    fn host_only_model_schedules_without_transfers() {
        let mut b = ModelBuilder::new("hostonly");
        let host = b.host("cpu");
        let ram = b.memory("ram", MemoryRegion::HostRam, host);
        let shape = Shape::new(vec![16]).unwrap();
        let x = b.array("x", ScalarType::U8, shape.clone());
        let y = b.array("y", ScalarType::U8, shape);
        b.allocate_array(x, ram);
        b.allocate_array(y, ram);
        let t = b.task(RepetitiveTask {
            name: "t".to_string(),
            repetition_space: Shape::new(vec![1]).unwrap(),
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, x)],
            outputs: vec![binding("o", Direction::Out, y)],
        });
        b.allocate_task(t, host);
        let model = b.finish().unwrap();

        let schedule = schedule_naive(&model, &TopologyConfig::default()).unwrap();
        assert_eq!(schedule.transfer_count(), 0);
        assert_eq!(schedule.steps.len(), 1);
        verify_schedule(&model, &schedule).unwrap();
        let stats = transfer_stats(&schedule, &BufferPlan::default(), &model).unwrap();
        assert_eq!(stats, TransferStats::default());
    }

    #[test]
    fn shared_input_is_uploaded_once_after_optimization() {
        // Two device tasks both read x: naive uploads it twice, the
        // optimizer drops the second copy.
        let mut b = ModelBuilder::new("shared");
        let host = b.host("cpu");
        b.memory("ram", MemoryRegion::HostRam, host);
        let dev = b.device("gpu", 256);
        let gmem = b.memory("gmem", MemoryRegion::DeviceGlobal, dev);
        let shape = Shape::new(vec![16]).unwrap();
        let x = b.array("x", ScalarType::U8, shape.clone());
        let y = b.array("y", ScalarType::U8, shape.clone());
        let z = b.array("z", ScalarType::U8, shape);
        for (a, mem) in [(x, gmem), (y, gmem), (z, gmem)] {
            b.allocate_array(a, mem);
        }
        let rep = Shape::new(vec![1]).unwrap();
        let t1 = b.task(RepetitiveTask {
            name: "t1".to_string(),
            repetition_space: rep.clone(),
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, x)],
            outputs: vec![binding("o", Direction::Out, y)],
        });
        let t2 = b.task(RepetitiveTask {
            name: "t2".to_string(),
            repetition_space: rep,
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, x)],
            outputs: vec![binding("o", Direction::Out, z)],
        });
        b.allocate_task(t1, dev);
        b.allocate_task(t2, dev);
        let model = b.finish().unwrap();

        let naive = schedule_naive(&model, &TopologyConfig::default()).unwrap();
        let x_id = model.find_array("x").unwrap();
        let uploads = |s: &TransferSchedule| {
            s.steps
                .iter()
                .filter(|st| matches!(st, Step::HostToDevice(a) if *a == x_id))
                .count()
        };
        assert_eq!(uploads(&naive), 2, "naive duplicates the shared upload");
        let optimized = optimize_transfers(&naive, &model);
        assert_eq!(uploads(&optimized), 1);
        verify_schedule(&model, &optimized).unwrap();
    }

    #[test]
    fn single_task_schedule_is_already_minimal() {
        let mut b = ModelBuilder::new("single");
        let host = b.host("cpu");
        b.memory("ram", MemoryRegion::HostRam, host);
        let dev = b.device("gpu", 256);
        let gmem = b.memory("gmem", MemoryRegion::DeviceGlobal, dev);
        let shape = Shape::new(vec![16]).unwrap();
        let x = b.array("x", ScalarType::U8, shape.clone());
        let y = b.array("y", ScalarType::U8, shape);
        b.allocate_array(x, gmem);
        b.allocate_array(y, gmem);
        let t = b.task(RepetitiveTask {
            name: "t".to_string(),
            repetition_space: Shape::new(vec![1]).unwrap(),
            body: "passthrough".to_string(),
            inputs: vec![binding("a", Direction::In, x)],
            outputs: vec![binding("o", Direction::Out, y)],
        });
        b.allocate_task(t, dev);
        let model = b.finish().unwrap();

        let naive = schedule_naive(&model, &TopologyConfig::default()).unwrap();
        let kinds: Vec<_> = naive
            .steps
            .iter()
            .map(|s| match s {
                Step::HostToDevice(_) => "h2d",
                Step::DeviceToHost(_) => "d2h",
                Step::Launch { .. } => "launch",
                Step::HostTask { .. } => "host",
            })
            .collect();
        assert_eq!(kinds, vec!["h2d", "launch", "d2h"]);
        let optimized = optimize_transfers(&naive, &model);
        assert_eq!(naive, optimized, "nothing to elide");
    }
}
