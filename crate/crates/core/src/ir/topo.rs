//! Topological ordering of the task graph.

use std::collections::BTreeSet;

use crate::ir::{Model, TaskId};

/// Order tasks so every producer precedes its consumers.
///
/// Edges come from array data flow (producer task -> consumer task) and from
/// explicit ordering connectors. Ties are broken by declaration order, so the
/// result is deterministic. On a cycle, returns the tasks still entangled in
/// it.
pub fn toposort(model: &Model) -> Result<Vec<TaskId>, Vec<TaskId>> {
    let n = model.tasks.len();
    let mut in_degree = vec![0usize; n];
    let mut successors = vec![Vec::new(); n];

    for (from, to) in model.task_edges() {
        // Parallel edges (a task consuming two arrays of one producer) must
        // not inflate the in-degree twice for the same relation; they are
        // distinct edges, so count each.
        successors[from.0].push(to);
        in_degree[to.0] += 1;
    }

    let mut ready: BTreeSet<usize> = (0..n).filter(|&t| in_degree[t] == 0).collect();
    let mut order = Vec::with_capacity(n);

    while let Some(&t) = ready.iter().next() {
        ready.remove(&t);
        order.push(TaskId(t));
        for &succ in &successors[t] {
            in_degree[succ.0] -= 1;
            if in_degree[succ.0] == 0 {
                ready.insert(succ.0);
            }
        }
    }

    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&t| in_degree[t] > 0).map(TaskId).collect())
    }
}
