//! Exhaustive test oracles. Everything here is exponential and guarded by
//! size limits; the point is independence from the solver's shortcuts, not
//! speed.

use crate::cut_factor::CutFactor;
use crate::error::{Error, Result};
use crate::flow::{FlowFactor, FlowLabeling};
use crate::instance::{Instance, NodeId};
use crate::path_factor::PathFactor;

/// Exact optimum over all sets of node-disjoint source-sink paths, by
/// recursive enumeration. Refuses instances with more than `max_nodes`
/// inner nodes (default cap 14).
///
/// ```
/// use ldp::generate::random_instance;
/// use ldp::oracle::exact_ldp;
/// use ldp::solver::{run, SolverConfig};
///
/// let inst = random_instance(5, 2, 1);
/// let (opt, _) = exact_ldp(&inst, 14).unwrap();
/// let report = run(&inst, &SolverConfig::default());
/// assert!(report.lower_bound <= opt + 1e-9);
/// assert!(report.solution.objective >= opt - 1e-9);
/// ```
pub fn exact_ldp(inst: &Instance, max_nodes: usize) -> Result<(f64, Vec<Vec<NodeId>>)> {
    if inst.num_nodes > max_nodes {
        return Err(Error::TooLarge(format!(
            "{} inner nodes (limit {max_nodes})",
            inst.num_nodes
        )));
    }
    let order = inst.nodes_by_frame();
    let mut used = vec![false; inst.num_nodes];
    let mut paths: Vec<Vec<NodeId>> = Vec::new();
    let mut best = (0.0f64, Vec::new());
    recurse(inst, &order, 0, &mut used, &mut paths, 0.0, &mut best);
    Ok(best)
}

fn path_head_cost(inst: &Instance, v: NodeId) -> f64 {
    inst.base_edges[inst.source_edge[v]].cost + inst.node_cost[v]
}

/// Lifted and base cost of appending `w` to a path currently ending in the
/// nodes of `path`.
fn extension_cost(inst: &Instance, path: &[NodeId], w: NodeId) -> f64 {
    let tail = *path.last().unwrap();
    let base = inst
        .base_edge_id(tail, w)
        .map(|id| inst.base_edges[id].cost)
        .expect("extension follows a base edge");
    let mut lifted = 0.0;
    for &p in path {
        if let Some(id) = inst.lifted_edge_id(p, w) {
            lifted += inst.lifted_edges[id].cost;
        }
    }
    base + lifted + inst.node_cost[w]
}

fn recurse(
    inst: &Instance,
    order: &[NodeId],
    pos: usize,
    used: &mut Vec<bool>,
    paths: &mut Vec<Vec<NodeId>>,
    cost: f64,
    best: &mut (f64, Vec<Vec<NodeId>>),
) {
    // Close all open paths at the current prefix: every path ends with its
    // sink edge; evaluate.
    let closed: f64 = paths
        .iter()
        .map(|p| inst.base_edges[inst.sink_edge[*p.last().unwrap()]].cost)
        .sum();
    if cost + closed < best.0 - 1e-15 {
        *best = (cost + closed, paths.clone());
    }
    if pos == order.len() {
        return;
    }
    let v = order[pos];
    // v unused.
    recurse(inst, order, pos + 1, used, paths, cost, best);
    if used[v] {
        return;
    }
    // v starts a new path.
    used[v] = true;
    paths.push(vec![v]);
    grow(inst, order, pos, used, paths, cost + path_head_cost(inst, v), best);
    paths.pop();
    used[v] = false;
}

/// Extend the newest path through every possible continuation, then move on
/// to the next start node.
fn grow(
    inst: &Instance,
    order: &[NodeId],
    pos: usize,
    used: &mut Vec<bool>,
    paths: &mut Vec<Vec<NodeId>>,
    cost: f64,
    best: &mut (f64, Vec<Vec<NodeId>>),
) {
    // Stop extending: continue choosing starts after pos.
    recurse(inst, order, pos + 1, used, paths, cost, best);
    let tail = *paths.last().unwrap().last().unwrap();
    for &eid in &inst.out_edges[tail] {
        let w = inst.base_edges[eid].head.node().unwrap();
        if used[w] {
            continue;
        }
        let delta = extension_cost(inst, paths.last().unwrap(), w);
        used[w] = true;
        paths.last_mut().unwrap().push(w);
        grow(inst, order, pos, used, paths, cost + delta, best);
        paths.last_mut().unwrap().pop();
        used[w] = false;
    }
}

/// Objective of a given disjoint path set under the original costs.
pub fn evaluate_paths(inst: &Instance, paths: &[Vec<NodeId>]) -> f64 {
    let mut total = 0.0;
    for p in paths {
        total += path_head_cost(inst, p[0]);
        for i in 1..p.len() {
            total += extension_cost(inst, &p[..i], p[i]);
        }
        total += inst.base_edges[inst.sink_edge[*p.last().unwrap()]].cost;
    }
    total
}

/// All feasible labelings of a flow factor (size-guarded).
pub fn enumerate_flow_factor(f: &FlowFactor, max_nodes: usize) -> Result<Vec<FlowLabeling>> {
    if f.subgraph_size() > max_nodes {
        return Err(Error::TooLarge(format!(
            "flow factor subgraph has {} nodes (limit {max_nodes})",
            f.subgraph_size()
        )));
    }
    Ok(f.enumerate_labelings())
}

/// All feasible labelings of a path factor as (value, bitmask) pairs; bit
/// `i` is variable `i`, the closing edge last.
pub fn enumerate_path_factor(f: &PathFactor, max_vars: usize) -> Result<Vec<(f64, u32)>> {
    let n = f.num_vars();
    if n > max_vars {
        return Err(Error::TooLarge(format!(
            "path factor has {n} variables (limit {max_vars})"
        )));
    }
    let mut theta: Vec<f64> = f.edges.iter().map(|e| e.theta).collect();
    theta.push(f.closing_theta);
    let mut locked: Vec<bool> = f.edges.iter().map(|e| e.lifted || e.strong).collect();
    locked.push(true);
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        let zeros = n as u32 - mask.count_ones();
        let feasible = (0..n).all(|i| {
            mask >> i & 1 == 1 || !locked[i] || zeros >= 2
        });
        if !feasible {
            continue;
        }
        let value = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| theta[i])
            .sum();
        out.push((value, mask));
    }
    Ok(out)
}

/// All feasible labelings of a cut factor as (value, bitmask) pairs; bit
/// `i` is cut edge `i`, the top bit the lifted edge.
pub fn enumerate_cut_factor(f: &CutFactor, max_vars: usize) -> Result<Vec<(f64, u32)>> {
    let n = f.num_vars();
    if n > max_vars {
        return Err(Error::TooLarge(format!(
            "cut factor has {n} variables (limit {max_vars})"
        )));
    }
    let ne = f.edges.len();
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        let lifted_on = mask >> ne & 1 == 1;
        let active: Vec<usize> = (0..ne).filter(|&i| mask >> i & 1 == 1).collect();
        // Degree constraints on both sides.
        let mut ok = true;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                if f.edges[a].tail == f.edges[b].tail || f.edges[a].head == f.edges[b].head {
                    ok = false;
                }
            }
        }
        if lifted_on && active.is_empty() {
            ok = false;
        }
        if let Some(uv) = f.uv_edge {
            if mask >> uv & 1 == 1 && !lifted_on {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let mut value: f64 = active.iter().map(|&i| f.edges[i].theta).sum();
        if lifted_on {
            value += f.lifted_theta;
        }
        out.push((value, mask));
    }
    Ok(out)
}
