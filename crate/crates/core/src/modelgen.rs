//! Seeded generator of valid random models.
//!
//! Every generated model passes validation with zero errors: task graphs are
//! DAGs by construction (tasks only consume arrays that already exist), all
//! tilers partition their arrays exactly (divisor-aligned tiles, with random
//! torus-shifting origins), and bodies are wired with matching pattern
//! shapes. Used by the property tests and the acceptance suite to exercise
//! scheduling and semantics on shapes the downscaler never produces.

use crate::ir::{
    ArrayId, Direction, MemoryRegion, Model, ModelBuilder, Port, PortBinding, RepetitiveTask,
    ScalarType, Shape, Tiler,
};

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Upper bound on the number of tasks (at least one is generated).
    pub max_tasks: usize,
    /// Upper bound on each array extent.
    pub max_extent: usize,
    /// Allow tasks to be allocated on the host processor.
    pub allow_host_tasks: bool,
    /// Device work-group limit.
    pub max_wg: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_tasks: 6,
            max_extent: 64,
            allow_host_tasks: true,
            max_wg: 256,
        }
    }
}

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..bound` (bound >= 1).
    fn below(&mut self, bound: usize) -> usize {
        (self.next() % bound as u64) as usize
    }

    fn chance(&mut self, percent: u64) -> bool {
        self.next() % 100 < percent
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

/// Generate a valid model from a seed. Deterministic in `(seed, cfg)`.
pub fn random_model(seed: u64, cfg: &GenConfig) -> Model {
    let mut rng = Rng(seed.wrapping_mul(0x2545F4914F6CDD1D).wrapping_add(1));
    let mut b = ModelBuilder::new(format!("fuzz{seed}"));

    let host = b.host("cpu");
    let ram = b.memory("ram", MemoryRegion::HostRam, host);
    let device = b.device("gpu", cfg.max_wg);
    let gmem = b.memory("gmem", MemoryRegion::DeviceGlobal, device);
    let cmem = b.memory("cmem", MemoryRegion::DeviceConstant, device);

    // Extent menu rich in divisors.
    let extents: Vec<usize> = [4, 6, 8, 12, 16, 24, 32, 48, 64]
        .into_iter()
        .filter(|&e| e <= cfg.max_extent)
        .collect();

    // (array, shape, device_written) pool; tasks consume existing entries.
    let mut pool: Vec<(ArrayId, Shape)> = Vec::new();
    let fresh_input = |b: &mut ModelBuilder, rng: &mut Rng, shape: Shape, n: &mut usize| {
        let id = b.array(format!("src{n}"), ScalarType::U8, shape.clone());
        *n += 1;
        // Model inputs are only ever read; sometimes place them in constant
        // memory, sometimes leave them host-side to force shadow buffers.
        let mem = if rng.chance(15) {
            cmem
        } else if rng.chance(25) {
            ram
        } else {
            gmem
        };
        b.allocate_array(id, mem);
        (id, shape)
    };

    let mut input_count = 0usize;
    let first_shape = Shape::new(vec![*rng.pick(&extents), *rng.pick(&extents)]).unwrap();
    pool.push(fresh_input(&mut b, &mut rng, first_shape, &mut input_count));

    let n_tasks = 1 + rng.below(cfg.max_tasks);
    let mut tasks = Vec::new();
    for ti in 0..n_tasks {
        let (src, src_shape) = pool[rng.below(pool.len())].clone();
        let h = src_shape.extents()[0];
        let w = src_shape.extents()[1];
        let r0 = *rng.pick(&divisors(h));
        let r1 = *rng.pick(&divisors(w));
        let tile = Shape::new(vec![h / r0, w / r1]).unwrap();
        let rep = Shape::new(vec![r0, r1]).unwrap();

        let use_add = rng.chance(40);
        let mut inputs = vec![binding(
            &mut rng,
            "a",
            Direction::In,
            src,
            &src_shape,
            &tile,
        )];
        if use_add {
            // Second operand: an existing same-shape array or a new input.
            let candidates: Vec<(ArrayId, Shape)> = pool
                .iter()
                .filter(|(_, s)| *s == src_shape)
                .cloned()
                .collect();
            let (src2, shape2) = if rng.chance(60) && !candidates.is_empty() {
                candidates[rng.below(candidates.len())].clone()
            } else {
                fresh_input(&mut b, &mut rng, src_shape.clone(), &mut input_count)
            };
            inputs.push(binding(&mut rng, "b", Direction::In, src2, &shape2, &tile));
        }

        let dst_shape = src_shape.clone();
        let dst = b.array(format!("t{ti}_out"), ScalarType::U8, dst_shape.clone());
        b.allocate_array(dst, if rng.chance(20) { ram } else { gmem });
        let outputs = vec![binding(
            &mut rng,
            "o",
            Direction::Out,
            dst,
            &dst_shape,
            &tile,
        )];

        let task = b.task(RepetitiveTask {
            name: format!("t{ti}"),
            repetition_space: rep,
            body: if use_add { "add" } else { "passthrough" }.to_string(),
            inputs,
            outputs,
        });
        let on_host = cfg.allow_host_tasks && rng.chance(30);
        b.allocate_task(task, if on_host { host } else { device });
        tasks.push(task);
        pool.push((dst, dst_shape));
    }

    // Occasional explicit ordering edge (declaration order keeps it acyclic).
    if tasks.len() >= 2 && rng.chance(20) {
        let i = rng.below(tasks.len() - 1);
        let j = i + 1 + rng.below(tasks.len() - i - 1);
        b.order(tasks[i], tasks[j]);
    }

    b.finish().expect("generator allocates everything")
}

fn binding(
    rng: &mut Rng,
    port: &str,
    direction: Direction,
    array: ArrayId,
    array_shape: &Shape,
    tile: &Shape,
) -> PortBinding {
    let t0 = tile.extents()[0] as i64;
    let t1 = tile.extents()[1] as i64;
    // A random origin torus-shifts the tiling, which preserves exact
    // coverage while exercising the modulo arithmetic.
    let origin = vec![
        rng.below(2 * array_shape.extents()[0]) as i64 - array_shape.extents()[0] as i64,
        rng.below(2 * array_shape.extents()[1]) as i64 - array_shape.extents()[1] as i64,
    ];
    PortBinding {
        port: Port {
            name: port.to_string(),
            direction,
            element: ScalarType::U8,
            pattern_shape: tile.clone(),
        },
        tiler: Tiler {
            origin,
            paving: vec![vec![t0, 0], vec![0, t1]],
            fitting: vec![vec![1, 0], vec![0, 1]],
            array,
            pattern_shape: tile.clone(),
        },
    }
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|&d| n.is_multiple_of(d)).collect()
}
