//! Intermediate representation of application, architecture, and allocation.
//!
//! A [`Model`] is the object every pass operates on: repetitive tasks over
//! multidimensional arrays, tied together by tilers, plus the host/device
//! architecture and the allocation of tasks and arrays onto it. Models are
//! immutable after construction; [`validate`] checks global consistency and
//! [`toposort`] derives the data-flow execution order.

mod topo;
mod validate;

pub use topo::toposort;
pub use validate::{is_valid, validate, Severity, ValidationDiagnostic};

use std::fmt;

/// Extents of an array or repetition space, outermost dimension first.
///
/// Arrays are linearized row-major: the last dimension varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

/// Maximum number of dimensions a shape may have.
pub const MAX_DIMS: usize = 4;

impl Shape {
    /// Build a shape, checking the dimension-count and extent invariants.
    pub fn new(extents: impl Into<Vec<usize>>) -> Result<Self, ShapeError> {
        let extents = extents.into();
        if extents.is_empty() || extents.len() > MAX_DIMS {
            return Err(ShapeError::DimCount(extents.len()));
        }
        if let Some(&bad) = extents.iter().find(|&&e| e == 0) {
            return Err(ShapeError::ZeroExtent(bad));
        }
        Ok(Shape(extents))
    }

    pub fn extents(&self) -> &[usize] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    /// Total number of elements.
    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // extents are all >= 1
    }

    /// Row-major strides (stride of the last dimension is 1).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for d in (0..self.0.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.0[d + 1];
        }
        strides
    }

    /// Linearize a multidimensional index (row-major). Panics on rank mismatch.
    pub fn linearize(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.0.len());
        let mut lin = 0;
        for (d, &i) in index.iter().enumerate() {
            debug_assert!(i < self.0[d]);
            lin = lin * self.0[d] + i;
        }
        lin
    }

    /// Inverse of [`Shape::linearize`].
    pub fn delinearize(&self, mut lin: usize) -> Vec<usize> {
        let mut index = vec![0; self.0.len()];
        for d in (0..self.0.len()).rev() {
            index[d] = lin % self.0[d];
            lin /= self.0[d];
        }
        index
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("shape must have 1 to {MAX_DIMS} dimensions, got {0}")]
    DimCount(usize),
    #[error("shape extents must be positive, got {0}")]
    ZeroExtent(usize),
}

/// Element type of an array or pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    U8,
    I32,
    F32,
}

impl ScalarType {
    pub fn byte_width(self) -> u64 {
        match self {
            ScalarType::U8 => 1,
            ScalarType::I32 | ScalarType::F32 => 4,
        }
    }

    /// Keyword used in the model language.
    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::U8 => "u8",
            ScalarType::I32 => "i32",
            ScalarType::F32 => "f32",
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Data-flow direction of a task port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
    InOut,
}

/// Defines a `usize`-backed id newtype.
macro_rules! index_id {
    ($name:ident, $what:literal) => {
        #[doc = concat!("Index of a ", $what, " within its model.")]
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub usize);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}#{}", $what, self.0)
            }
        }
    };
}

/// A directed data port on a repetitive task.
#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub element: ScalarType,
    pub pattern_shape: Shape,
}

index_id!(TaskId, "task");
index_id!(ArrayId, "array");
index_id!(ProcId, "processor");
index_id!(MemId, "memory");

/// A model-level data object: a dense multidimensional array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayValue {
    pub name: String,
    pub element: ScalarType,
    pub shape: Shape,
}

/// The origin/paving/fitting triple mapping a repetition index and an
/// intra-pattern index to an array element index.
///
/// `origin` has one entry per array dimension; `paving` is an
/// (array dims x repetition dims) matrix stored as rows; `fitting` is an
/// (array dims x pattern dims) matrix stored as rows. See [`crate::tiler`]
/// for the index algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Tiler {
    pub origin: Vec<i64>,
    pub paving: Vec<Vec<i64>>,
    pub fitting: Vec<Vec<i64>>,
    pub array: ArrayId,
    pub pattern_shape: Shape,
}

/// A port together with the tiler that binds it to an array.
#[derive(Debug, Clone, PartialEq)]
pub struct PortBinding {
    pub port: Port,
    pub tiler: Tiler,
}

/// A task executed independently at every point of its repetition space.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitiveTask {
    pub name: String,
    /// The multiplicity: shape of the repetition space.
    pub repetition_space: Shape,
    /// Name of the registered elementary body applied at each point.
    pub body: String,
    pub inputs: Vec<PortBinding>,
    pub outputs: Vec<PortBinding>,
}

/// Kind of a processor, with device execution limits where relevant.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessorKind {
    Host,
    Device {
        max_workgroup_size: u64,
        /// Maximum NDRange dimensions the device supports.
        max_dims: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Processor {
    pub name: String,
    pub kind: ProcessorKind,
}

impl Processor {
    pub fn is_device(&self) -> bool {
        matches!(self.kind, ProcessorKind::Device { .. })
    }
}

/// Memory region a space belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryRegion {
    HostRam,
    DeviceGlobal,
    DeviceConstant,
    DeviceLocal,
    DevicePrivate,
}

impl MemoryRegion {
    pub fn keyword(self) -> &'static str {
        match self {
            MemoryRegion::HostRam => "host-ram",
            MemoryRegion::DeviceGlobal => "device-global",
            MemoryRegion::DeviceConstant => "device-constant",
            MemoryRegion::DeviceLocal => "device-local",
            MemoryRegion::DevicePrivate => "device-private",
        }
    }
}

impl fmt::Display for MemoryRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemorySpace {
    pub name: String,
    pub region: MemoryRegion,
    pub owner: ProcId,
}

/// Total mapping of tasks onto processors and arrays onto memory spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Indexed by `TaskId`.
    pub task_map: Vec<ProcId>,
    /// Indexed by `ArrayId`.
    pub array_map: Vec<MemId>,
}

/// A data-flow or ordering edge in the model graph.
///
/// Port/array edges are derived from the tiler bindings when the model is
/// built; task-order edges come from explicit `connect` declarations.
#[derive(Debug, Clone, PartialEq)]
pub enum Connector {
    /// Array feeds an input port: `array -> tasks[task].inputs[port]`.
    ArrayToPort {
        array: ArrayId,
        task: TaskId,
        port: usize,
    },
    /// Output port feeds an array: `tasks[task].outputs[port] -> array`.
    PortToArray {
        task: TaskId,
        port: usize,
        array: ArrayId,
    },
    /// Explicit precedence edge between two tasks.
    TaskOrder { before: TaskId, after: TaskId },
}

/// A validated-or-not application + architecture + allocation graph.
///
/// Construction (via [`ModelBuilder`] or the frontend) only guarantees that
/// identifiers resolve; run [`validate`] before handing a model to any pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub tasks: Vec<RepetitiveTask>,
    pub arrays: Vec<ArrayValue>,
    pub connectors: Vec<Connector>,
    pub processors: Vec<Processor>,
    pub memories: Vec<MemorySpace>,
    pub allocation: Allocation,
}

impl Model {
    pub fn task(&self, id: TaskId) -> &RepetitiveTask {
        &self.tasks[id.0]
    }

    pub fn array(&self, id: ArrayId) -> &ArrayValue {
        &self.arrays[id.0]
    }

    pub fn processor(&self, id: ProcId) -> &Processor {
        &self.processors[id.0]
    }

    pub fn memory(&self, id: MemId) -> &MemorySpace {
        &self.memories[id.0]
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> {
        (0..self.tasks.len()).map(TaskId)
    }

    pub fn array_ids(&self) -> impl Iterator<Item = ArrayId> {
        (0..self.arrays.len()).map(ArrayId)
    }

    pub fn find_task(&self, name: &str) -> Option<TaskId> {
        self.tasks.iter().position(|t| t.name == name).map(TaskId)
    }

    pub fn find_array(&self, name: &str) -> Option<ArrayId> {
        self.arrays.iter().position(|a| a.name == name).map(ArrayId)
    }

    /// Processor a task is allocated to.
    pub fn task_processor(&self, id: TaskId) -> &Processor {
        self.processor(self.allocation.task_map[id.0])
    }

    /// Memory space an array is allocated to.
    pub fn array_memory(&self, id: ArrayId) -> &MemorySpace {
        self.memory(self.allocation.array_map[id.0])
    }

    /// Whether a task runs on a device processor.
    pub fn task_on_device(&self, id: TaskId) -> bool {
        self.task_processor(id).is_device()
    }

    /// Arrays read by a task (in declaration order, without duplicates).
    pub fn task_input_arrays(&self, id: TaskId) -> Vec<ArrayId> {
        let mut out = Vec::new();
        for binding in &self.task(id).inputs {
            if !out.contains(&binding.tiler.array) {
                out.push(binding.tiler.array);
            }
        }
        out
    }

    /// Arrays written by a task (in declaration order, without duplicates).
    pub fn task_output_arrays(&self, id: TaskId) -> Vec<ArrayId> {
        let mut out = Vec::new();
        for binding in &self.task(id).outputs {
            if !out.contains(&binding.tiler.array) {
                out.push(binding.tiler.array);
            }
        }
        out
    }

    /// The task that writes an array, if any.
    pub fn array_producer(&self, id: ArrayId) -> Option<TaskId> {
        self.task_ids()
            .find(|&t| self.task_output_arrays(t).contains(&id))
    }

    /// Tasks that read an array, in declaration order.
    pub fn array_consumers(&self, id: ArrayId) -> Vec<TaskId> {
        self.task_ids()
            .filter(|&t| self.task_input_arrays(t).contains(&id))
            .collect()
    }

    /// Model inputs: arrays read by some task and produced by none.
    pub fn input_arrays(&self) -> Vec<ArrayId> {
        self.array_ids()
            .filter(|&a| self.array_producer(a).is_none() && !self.array_consumers(a).is_empty())
            .collect()
    }

    /// Model outputs: arrays produced by some task and read by none.
    pub fn output_arrays(&self) -> Vec<ArrayId> {
        self.array_ids()
            .filter(|&a| self.array_producer(a).is_some() && self.array_consumers(a).is_empty())
            .collect()
    }

    /// Task-level edges of the connector graph: array data flow plus
    /// explicit ordering edges. May contain duplicates.
    pub fn task_edges(&self) -> Vec<(TaskId, TaskId)> {
        let mut edges = Vec::new();
        for a in self.array_ids() {
            if let Some(producer) = self.array_producer(a) {
                for consumer in self.array_consumers(a) {
                    edges.push((producer, consumer));
                }
            }
        }
        for c in &self.connectors {
            if let Connector::TaskOrder { before, after } = *c {
                edges.push((before, after));
            }
        }
        edges
    }
}

/// Incremental [`Model`] constructor used by the frontend, the model
/// generator, and tests. Resolves nothing and checks nothing beyond what the
/// type structure forces; run [`validate`] on the result.
#[derive(Debug)]
pub struct ModelBuilder {
    name: String,
    tasks: Vec<RepetitiveTask>,
    arrays: Vec<ArrayValue>,
    processors: Vec<Processor>,
    memories: Vec<MemorySpace>,
    task_map: Vec<Option<ProcId>>,
    array_map: Vec<Option<MemId>>,
    order_edges: Vec<(TaskId, TaskId)>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ModelBuilder {
            name: name.into(),
            tasks: Vec::new(),
            arrays: Vec::new(),
            processors: Vec::new(),
            memories: Vec::new(),
            task_map: Vec::new(),
            array_map: Vec::new(),
            order_edges: Vec::new(),
        }
    }

    pub fn array(&mut self, name: impl Into<String>, element: ScalarType, shape: Shape) -> ArrayId {
        self.arrays.push(ArrayValue {
            name: name.into(),
            element,
            shape,
        });
        self.array_map.push(None);
        ArrayId(self.arrays.len() - 1)
    }

    pub fn task(&mut self, task: RepetitiveTask) -> TaskId {
        self.tasks.push(task);
        self.task_map.push(None);
        TaskId(self.tasks.len() - 1)
    }

    pub fn host(&mut self, name: impl Into<String>) -> ProcId {
        self.processors.push(Processor {
            name: name.into(),
            kind: ProcessorKind::Host,
        });
        ProcId(self.processors.len() - 1)
    }

    pub fn device(&mut self, name: impl Into<String>, max_workgroup_size: u64) -> ProcId {
        self.processors.push(Processor {
            name: name.into(),
            kind: ProcessorKind::Device {
                max_workgroup_size,
                max_dims: 3,
            },
        });
        ProcId(self.processors.len() - 1)
    }

    pub fn device_with_dims(
        &mut self,
        name: impl Into<String>,
        max_workgroup_size: u64,
        max_dims: usize,
    ) -> ProcId {
        self.processors.push(Processor {
            name: name.into(),
            kind: ProcessorKind::Device {
                max_workgroup_size,
                max_dims,
            },
        });
        ProcId(self.processors.len() - 1)
    }

    pub fn memory(
        &mut self,
        name: impl Into<String>,
        region: MemoryRegion,
        owner: ProcId,
    ) -> MemId {
        self.memories.push(MemorySpace {
            name: name.into(),
            region,
            owner,
        });
        MemId(self.memories.len() - 1)
    }

    pub fn allocate_task(&mut self, task: TaskId, proc: ProcId) {
        self.task_map[task.0] = Some(proc);
    }

    pub fn allocate_array(&mut self, array: ArrayId, mem: MemId) {
        self.array_map[array.0] = Some(mem);
    }

    pub fn order(&mut self, before: TaskId, after: TaskId) {
        self.order_edges.push((before, after));
    }

    /// Finish the model, deriving port/array connectors from tiler bindings.
    ///
    /// Unallocated tasks and arrays are an error here rather than in
    /// `validate` because `Allocation` maps are total by construction.
    pub fn finish(self) -> Result<Model, BuildError> {
        let mut task_map = Vec::with_capacity(self.task_map.len());
        for (i, slot) in self.task_map.iter().enumerate() {
            match slot {
                Some(p) => task_map.push(*p),
                None => return Err(BuildError::UnallocatedTask(self.tasks[i].name.clone())),
            }
        }
        let mut array_map = Vec::with_capacity(self.array_map.len());
        for (i, slot) in self.array_map.iter().enumerate() {
            match slot {
                Some(m) => array_map.push(*m),
                None => return Err(BuildError::UnallocatedArray(self.arrays[i].name.clone())),
            }
        }

        let mut connectors = Vec::new();
        for (t, task) in self.tasks.iter().enumerate() {
            for (p, binding) in task.inputs.iter().enumerate() {
                connectors.push(Connector::ArrayToPort {
                    array: binding.tiler.array,
                    task: TaskId(t),
                    port: p,
                });
            }
            for (p, binding) in task.outputs.iter().enumerate() {
                connectors.push(Connector::PortToArray {
                    task: TaskId(t),
                    port: p,
                    array: binding.tiler.array,
                });
            }
        }
        for (before, after) in self.order_edges {
            connectors.push(Connector::TaskOrder { before, after });
        }

        Ok(Model {
            name: self.name,
            tasks: self.tasks,
            arrays: self.arrays,
            connectors,
            processors: self.processors,
            memories: self.memories,
            allocation: Allocation {
                task_map,
                array_map,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("task `{0}` has no processor allocation")]
    UnallocatedTask(String),
    #[error("array `{0}` has no memory allocation")]
    UnallocatedArray(String),
}
