//! Reference CPU executor for models.
//!
//! [`execute`] runs a model's functional semantics directly (tasks in
//! topological order, repetition indices row-major), ignoring allocations.
//! [`execute_schedule`] instead replays a [`TransferSchedule`] with separate
//! host-side and device-side copies of every array, so a schedule that drops
//! a required transfer produces observably wrong output — that is the
//! surface the transfer-elimination tests bite on.

mod bench;
mod frames;
mod oracle;

pub use bench::{bench, ExecutionTrace};
pub use frames::{synthetic_inputs, Frame, FrameLayout, Plane};
pub use oracle::direct_downscale_oracle;

// The elementary filter bodies are part of this module's public surface;
// they live next to the body registry the validator and backend share.
pub use crate::builtins::{hfilter_8to3, vfilter_9to4};

use std::collections::BTreeMap;

use crate::builtins;
use crate::ir::{Model, TaskId};
use crate::passes::{Step, TransferSchedule, TransferStats};
use crate::tiler::{DenseArray, Pattern, TilePlan, TilerError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("missing input array `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not a model input array")]
    UnknownInput(String),
    #[error("input `{name}` has shape {got}, model wants {expected}")]
    InputShape {
        name: String,
        expected: crate::ir::Shape,
        got: crate::ir::Shape,
    },
    #[error("input `{name}` has element type {got}, model wants {expected}")]
    InputType {
        name: String,
        expected: crate::ir::ScalarType,
        got: crate::ir::ScalarType,
    },
    #[error("task `{task}` names unknown body `{body}`")]
    UnknownBody { task: String, body: String },
    #[error("model is not executable: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Tiler(#[from] TilerError),
    #[error("plane {plane}: {what} of {got} is not divisible by {divisor}")]
    PlaneNotDivisible {
        plane: usize,
        what: &'static str,
        got: usize,
        divisor: usize,
    },
    #[error("frame source exhausted at frame {0}")]
    FrameSourceExhausted(u64),
    #[error("frame i/o: {0}")]
    FrameIo(String),
}

/// Execute a model's functional semantics over named input arrays.
///
/// Allocation is irrelevant here: every task runs on the CPU against one
/// store. Returns the model's output arrays by name. Deterministic, and by
/// the exact-coverage contract independent of the order repetition indices
/// run in.
pub fn execute(
    model: &Model,
    inputs: &BTreeMap<String, DenseArray>,
) -> Result<BTreeMap<String, DenseArray>, SimError> {
    let mut store = init_store(model, inputs)?;
    let order = crate::ir::toposort(model)
        .map_err(|_| SimError::InvalidModel("connector graph has a cycle".to_string()))?;
    for task in order {
        run_task(model, task, &mut store)?;
    }
    Ok(collect_outputs(model, &store))
}

/// Replay a schedule with distinct host and device stores.
pub struct ScheduleRun {
    pub outputs: BTreeMap<String, DenseArray>,
    /// Transfer counts/bytes accumulated from the replayed steps (per frame).
    pub stats: TransferStats,
    /// Wall time per task name, nanoseconds.
    pub task_nanos: BTreeMap<String, u64>,
}

/// Execute one frame of a schedule, keeping host and device array copies
/// separate and honoring each step literally.
pub fn execute_schedule(
    model: &Model,
    schedule: &TransferSchedule,
    inputs: &BTreeMap<String, DenseArray>,
) -> Result<ScheduleRun, SimError> {
    let mut host = init_store(model, inputs)?;
    let mut device: Vec<DenseArray> = model
        .arrays
        .iter()
        .map(|a| DenseArray::zeros(a.element, a.shape.clone()))
        .collect();
    let mut stats = TransferStats::default();
    let mut task_nanos = BTreeMap::new();

    for step in &schedule.steps {
        match *step {
            Step::HostToDevice(a) => {
                device[a.0] = host[a.0].clone();
                stats.h2d_count += 1;
                stats.h2d_bytes += byte_size(model, a);
            }
            Step::DeviceToHost(a) => {
                host[a.0] = device[a.0].clone();
                stats.d2h_count += 1;
                stats.d2h_bytes += byte_size(model, a);
            }
            Step::Launch { task, .. } => {
                let started = std::time::Instant::now();
                run_task(model, task, &mut device)?;
                *task_nanos.entry(model.task(task).name.clone()).or_insert(0) +=
                    started.elapsed().as_nanos() as u64;
            }
            Step::HostTask { task } => {
                let started = std::time::Instant::now();
                run_task(model, task, &mut host)?;
                *task_nanos.entry(model.task(task).name.clone()).or_insert(0) +=
                    started.elapsed().as_nanos() as u64;
            }
        }
    }

    Ok(ScheduleRun {
        outputs: collect_outputs(model, &host),
        stats,
        task_nanos,
    })
}

fn byte_size(model: &Model, a: crate::ir::ArrayId) -> u64 {
    let array = model.array(a);
    array.element.byte_width() * array.shape.len() as u64
}

fn init_store(
    model: &Model,
    inputs: &BTreeMap<String, DenseArray>,
) -> Result<Vec<DenseArray>, SimError> {
    let input_ids = model.input_arrays();
    for name in inputs.keys() {
        let id = model
            .find_array(name)
            .filter(|id| input_ids.contains(id))
            .ok_or_else(|| SimError::UnknownInput(name.clone()))?;
        let declared = model.array(id);
        let given = &inputs[name];
        if given.shape != declared.shape {
            return Err(SimError::InputShape {
                name: name.clone(),
                expected: declared.shape.clone(),
                got: given.shape.clone(),
            });
        }
        if given.scalar_type() != declared.element {
            return Err(SimError::InputType {
                name: name.clone(),
                expected: declared.element,
                got: given.scalar_type(),
            });
        }
    }

    let mut store: Vec<DenseArray> = model
        .arrays
        .iter()
        .map(|a| DenseArray::zeros(a.element, a.shape.clone()))
        .collect();
    for id in input_ids {
        let name = &model.array(id).name;
        match inputs.get(name) {
            Some(value) => store[id.0] = value.clone(),
            None => return Err(SimError::MissingInput(name.clone())),
        }
    }
    Ok(store)
}

fn collect_outputs(model: &Model, store: &[DenseArray]) -> BTreeMap<String, DenseArray> {
    model
        .output_arrays()
        .into_iter()
        .map(|id| (model.array(id).name.clone(), store[id.0].clone()))
        .collect()
}

/// Apply one repetitive task to a store: for every repetition index in
/// row-major order, extract the input patterns, evaluate the body, and write
/// the output patterns.
fn run_task(model: &Model, task_id: TaskId, store: &mut [DenseArray]) -> Result<(), SimError> {
    let task = model.task(task_id);
    let builtin = builtins::lookup(&task.body).ok_or_else(|| SimError::UnknownBody {
        task: task.name.clone(),
        body: task.body.clone(),
    })?;

    let in_plans: Vec<TilePlan> = task
        .inputs
        .iter()
        .map(|b| TilePlan::new(&b.tiler, &model.array(b.tiler.array).shape))
        .collect::<Result<_, _>>()?;
    let out_plans: Vec<TilePlan> = task
        .outputs
        .iter()
        .map(|b| TilePlan::new(&b.tiler, &model.array(b.tiler.array).shape))
        .collect::<Result<_, _>>()?;

    let mut in_patterns: Vec<Pattern> = task
        .inputs
        .iter()
        .map(|b| Pattern::zeros(b.port.element, b.port.pattern_shape.clone()))
        .collect();
    let mut out_patterns: Vec<Pattern> = task
        .outputs
        .iter()
        .map(|b| Pattern::zeros(b.port.element, b.port.pattern_shape.clone()))
        .collect();

    let rep = &task.repetition_space;
    let mut r = vec![0usize; rep.dims()];
    for lin_r in 0..rep.len() {
        delinearize_into(rep, lin_r, &mut r);
        for (i, binding) in task.inputs.iter().enumerate() {
            in_plans[i].extract_into(&store[binding.tiler.array.0], &r, &mut in_patterns[i])?;
        }
        (builtin.eval)(&in_patterns, &mut out_patterns);
        for (i, binding) in task.outputs.iter().enumerate() {
            out_plans[i].write_from(&mut store[binding.tiler.array.0], &r, &out_patterns[i])?;
        }
    }
    Ok(())
}

fn delinearize_into(shape: &crate::ir::Shape, mut lin: usize, out: &mut [usize]) {
    for d in (0..out.len()).rev() {
        out[d] = lin % shape.extents()[d];
        lin /= shape.extents()[d];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{
        Direction, MemoryRegion, ModelBuilder, Port, PortBinding, RepetitiveTask, ScalarType,
        Shape, Tiler,
    };
    use crate::tiler::ScalarVec;

    /// A 1-task model that passes an 8x8 array through unchanged.
    fn identity_model() -> Model {
        let mut b = ModelBuilder::new("identity");
        let host = b.host("cpu");
        let ram = b.memory("ram", MemoryRegion::HostRam, host);
        let shape = Shape::new(vec![8, 8]).unwrap();
        let src = b.array("src", ScalarType::U8, shape.clone());
        let dst = b.array("dst", ScalarType::U8, shape);
        b.allocate_array(src, ram);
        b.allocate_array(dst, ram);
        let pattern = Shape::new(vec![1]).unwrap();
        let mk = |array| PortBinding {
            port: Port {
                name: if array == src { "a" } else { "b" }.to_string(),
                direction: if array == src {
                    Direction::In
                } else {
                    Direction::Out
                },
                element: ScalarType::U8,
                pattern_shape: pattern.clone(),
            },
            tiler: Tiler {
                origin: vec![0, 0],
                paving: vec![vec![1, 0], vec![0, 1]],
                fitting: vec![vec![0], vec![0]],
                array,
                pattern_shape: pattern.clone(),
            },
        };
        let t = b.task(RepetitiveTask {
            name: "copy".to_string(),
            repetition_space: Shape::new(vec![8, 8]).unwrap(),
            body: "passthrough".to_string(),
            inputs: vec![mk(src)],
            outputs: vec![mk(dst)],
        });
        b.allocate_task(t, host);
        b.finish().unwrap()
    }

    #[test]
    fn identity_model_passes_data_through() {
        let model = identity_model();
        let data: Vec<u8> = (0..64).map(|x| x as u8).collect();
        let input = DenseArray::from_u8(Shape::new(vec![8, 8]).unwrap(), data.clone()).unwrap();
        let mut inputs = BTreeMap::new();
        inputs.insert("src".to_string(), input);
        let outputs = execute(&model, &inputs).unwrap();
        assert_eq!(outputs["dst"].data, ScalarVec::U8(data));
    }

    #[test]
    fn missing_input_is_an_error() {
        let model = identity_model();
        let err = execute(&model, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, SimError::MissingInput("src".to_string()));
    }

    #[test]
    fn wrong_shape_is_an_error() {
        let model = identity_model();
        let mut inputs = BTreeMap::new();
        inputs.insert(
            "src".to_string(),
            DenseArray::zeros(ScalarType::U8, Shape::new(vec![4, 4]).unwrap()),
        );
        assert!(matches!(
            execute(&model, &inputs),
            Err(SimError::InputShape { .. })
        ));
    }

    #[test]
    fn reversed_repetition_order_matches_row_major() {
        // Disjoint tiles make execution order irrelevant; check it.
        let model = identity_model();
        let data: Vec<u8> = (0..64).map(|x| (x * 7 % 251) as u8).collect();
        let input = DenseArray::from_u8(Shape::new(vec![8, 8]).unwrap(), data).unwrap();
        let mut inputs = BTreeMap::new();
        inputs.insert("src".to_string(), input.clone());

        let forward = execute(&model, &inputs).unwrap();

        // Reverse-order run, inlined against the same task.
        let mut store = init_store(&model, &inputs).unwrap();
        let task = model.task(crate::ir::TaskId(0));
        let builtin = builtins::lookup(&task.body).unwrap();
        let in_plan = TilePlan::new(
            &task.inputs[0].tiler,
            &model.array(task.inputs[0].tiler.array).shape,
        )
        .unwrap();
        let out_plan = TilePlan::new(
            &task.outputs[0].tiler,
            &model.array(task.outputs[0].tiler.array).shape,
        )
        .unwrap();
        let mut in_p = vec![Pattern::zeros(
            ScalarType::U8,
            task.inputs[0].port.pattern_shape.clone(),
        )];
        let mut out_p = vec![Pattern::zeros(
            ScalarType::U8,
            task.outputs[0].port.pattern_shape.clone(),
        )];
        let rep = &task.repetition_space;
        for lin_r in (0..rep.len()).rev() {
            let r = rep.delinearize(lin_r);
            in_plan
                .extract_into(&store[task.inputs[0].tiler.array.0], &r, &mut in_p[0])
                .unwrap();
            (builtin.eval)(&in_p, &mut out_p);
            out_plan
                .write_from(&mut store[task.outputs[0].tiler.array.0], &r, &out_p[0])
                .unwrap();
        }
        assert_eq!(forward["dst"], store[1]);
    }
}
