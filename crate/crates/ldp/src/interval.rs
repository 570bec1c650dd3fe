//! Windowed solving for long sequences. The frame range is split into
//! intervals that are solved independently (in parallel); path pieces
//! that stay clear of the interval borders are frozen, and the border
//! regions are re-solved as small stitching problems in which frozen
//! pieces appear as contracted super-nodes. With a single interval the
//! whole span is frozen and the result is exactly the direct solve.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{Endpoint, Instance, NodeId};
use crate::oracle::evaluate_paths;
use crate::primal::Solution;
use crate::solver::{run, SolverConfig};

#[derive(Debug, Clone)]
pub struct IntervalConfig {
    /// Frames per window.
    pub interval_length: usize,
    /// Upper bound on the frame span of any edge; border regions extend
    /// this far into each window.
    pub max_edge_frames: usize,
    pub solver: SolverConfig,
}

/// Sub-instance induced by a node set: all base edges among the nodes
/// (terminal edges included), and the lifted edges whose endpoints stay
/// connected inside the subgraph.
fn induced(inst: &Instance, nodes: &[NodeId]) -> (Instance, Vec<NodeId>) {
    let map: std::collections::BTreeMap<NodeId, NodeId> = nodes
        .iter()
        .enumerate()
        .map(|(l, &g)| (g, l))
        .collect();
    let mut s = String::new();
    s.push_str(&format!("nodes {}\n", nodes.len()));
    for (l, &g) in nodes.iter().enumerate() {
        s.push_str(&format!("node {} {} {}\n", l, inst.frame_of[g], inst.node_cost[g]));
    }
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); nodes.len()];
    for e in &inst.base_edges {
        match (e.tail, e.head) {
            (Endpoint::Source, Endpoint::Node(v)) => {
                if let Some(&lv) = map.get(&v) {
                    s.push_str(&format!("base S {} {}\n", lv, e.cost));
                }
            }
            (Endpoint::Node(u), Endpoint::Sink) => {
                if let Some(&lu) = map.get(&u) {
                    s.push_str(&format!("base {} T {}\n", lu, e.cost));
                }
            }
            (Endpoint::Node(u), Endpoint::Node(v)) => {
                if let (Some(&lu), Some(&lv)) = (map.get(&u), map.get(&v)) {
                    s.push_str(&format!("base {} {} {}\n", lu, lv, e.cost));
                    adj[lu].push(lv);
                }
            }
            _ => unreachable!("validated instance"),
        }
    }
    for e in &inst.lifted_edges {
        if let (Some(&lu), Some(&lv)) = (map.get(&e.tail), map.get(&e.head)) {
            if reachable(&adj, lu, lv) {
                s.push_str(&format!("lifted {} {} {}\n", lu, lv, e.cost));
            }
        }
    }
    let sub = Instance::parse(&s).expect("induced instance is valid");
    (sub, nodes.to_vec())
}

fn reachable(adj: &[Vec<NodeId>], from: NodeId, to: NodeId) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(x) = stack.pop() {
        if x == to {
            return true;
        }
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    false
}

/// A frozen path piece with its global member nodes.
#[derive(Debug, Clone)]
struct Fragment {
    members: Vec<NodeId>,
}

/// Windowed solve of a long sequence.
///
/// ```
/// use ldp::generate::generate_instance;
/// use ldp::interval::{solve_interval, IntervalConfig};
/// use ldp::solver::SolverConfig;
///
/// let (inst, _) = generate_instance(12, 3, 2, 0.1, 0);
/// let cfg = IntervalConfig {
///     interval_length: 6,
///     max_edge_frames: 2,
///     solver: SolverConfig::default(),
/// };
/// let sol = solve_interval(&inst, &cfg).unwrap();
/// assert!(sol.validate(&inst));
/// ```
pub fn solve_interval(inst: &Instance, cfg: &IntervalConfig) -> Result<Solution> {
    let l = cfg.interval_length;
    let t_max = cfg.max_edge_frames;
    if l == 0 || t_max == 0 {
        return Err(Error::Config(
            "interval length and edge span bound must be positive".into(),
        ));
    }
    if l < 3 * t_max {
        return Err(Error::Config(format!(
            "interval length {l} must be at least three times the edge span bound {t_max}"
        )));
    }
    let real_span = inst.max_edge_frame_gap() as usize;
    if real_span > t_max {
        return Err(Error::Config(format!(
            "instance has an edge spanning {real_span} frames, above the bound {t_max}"
        )));
    }

    let max_frame = inst.max_frame as usize;
    let num_windows = max_frame.div_ceil(l).max(1);

    // Window w covers frames [w*l+1, (w+1)*l]; its freeze zone keeps
    // t_max frames clear of interior borders and extends to the sequence
    // boundary on the outside.
    let window_nodes: Vec<Vec<NodeId>> = (0..num_windows)
        .map(|w| {
            let lo = w * l + 1;
            let hi = (w + 1) * l;
            (0..inst.num_nodes)
                .filter(|&v| (lo..=hi).contains(&(inst.frame_of[v] as usize)))
                .collect()
        })
        .collect();
    let freeze_zone = |w: usize| -> (usize, usize) {
        let lo = if w == 0 { 1 } else { w * l + t_max + 1 };
        let hi = if w + 1 == num_windows {
            max_frame
        } else {
            (w + 1) * l - t_max
        };
        (lo, hi)
    };

    let window_solutions: Vec<Solution> = window_nodes
        .par_iter()
        .map(|nodes| {
            if nodes.is_empty() {
                return Solution::empty();
            }
            let (sub, back) = induced(inst, nodes);
            let report = run(&sub, &cfg.solver);
            let paths = report
                .solution
                .paths
                .iter()
                .map(|p| p.iter().map(|&v| back[v]).collect())
                .collect();
            let objective = report.solution.objective;
            Solution { paths, objective }
        })
        .collect();

    // Frozen fragments: maximal runs of each window path inside the
    // window's freeze zone.
    let mut fragments: Vec<Fragment> = Vec::new();
    let mut frag_of_node: Vec<Option<usize>> = vec![None; inst.num_nodes];
    for (w, sol) in window_solutions.iter().enumerate() {
        let (lo, hi) = freeze_zone(w);
        for p in &sol.paths {
            let mut cur: Vec<NodeId> = Vec::new();
            for &v in p {
                if (lo..=hi).contains(&(inst.frame_of[v] as usize)) {
                    cur.push(v);
                } else if !cur.is_empty() {
                    push_fragment(&mut fragments, &mut frag_of_node, std::mem::take(&mut cur));
                }
            }
            if !cur.is_empty() {
                push_fragment(&mut fragments, &mut frag_of_node, cur);
            }
        }
    }

    // One stitching problem per interior border.
    let mut succ: Vec<Option<NodeId>> = vec![None; inst.num_nodes];
    for f in &fragments {
        for pair in f.members.windows(2) {
            succ[pair[0]] = Some(pair[1]);
        }
    }
    for b in 1..num_windows {
        let border = b * l;
        stitch_border(inst, cfg, &fragments, &frag_of_node, border, t_max, &mut succ);
    }

    // Assemble maximal chains.
    let mut on_chain = vec![false; inst.num_nodes];
    for f in &fragments {
        for &v in &f.members {
            on_chain[v] = true;
        }
    }
    for v in 0..inst.num_nodes {
        if succ[v].is_some() {
            on_chain[v] = true;
            on_chain[succ[v].unwrap()] = true;
        }
    }
    let mut has_pred = vec![false; inst.num_nodes];
    for v in 0..inst.num_nodes {
        if let Some(w) = succ[v] {
            has_pred[w] = true;
        }
    }
    let mut paths: Vec<Vec<NodeId>> = Vec::new();
    for v in 0..inst.num_nodes {
        if on_chain[v] && !has_pred[v] {
            let mut p = vec![v];
            let mut cur = v;
            while let Some(w) = succ[cur] {
                p.push(w);
                cur = w;
            }
            paths.push(p);
        }
    }
    paths.sort();
    let objective = evaluate_paths(inst, &paths);
    Ok(Solution { paths, objective })
}

fn push_fragment(
    fragments: &mut Vec<Fragment>,
    frag_of_node: &mut [Option<usize>],
    members: Vec<NodeId>,
) {
    let id = fragments.len();
    for &v in &members {
        frag_of_node[v] = Some(id);
    }
    fragments.push(Fragment { members });
}

/// Solves the stitching problem of one border and records the chosen
/// connections in `succ` / `starts_fresh`. Left fragments (ending within
/// reach of the border zone) and right fragments (starting within reach)
/// are contracted to super-nodes; connection costs fold in the direct
/// base edge, all lifted costs between the free node (or opposite
/// members) and the fragment members, minus the terminal cost the
/// connection saves.
fn stitch_border(
    inst: &Instance,
    cfg: &IntervalConfig,
    fragments: &[Fragment],
    frag_of_node: &[Option<usize>],
    border: usize,
    t_max: usize,
    succ: &mut [Option<NodeId>],
) {
    let zone_lo = border - t_max + 1;
    let zone_hi = border + t_max;
    let free: Vec<NodeId> = (0..inst.num_nodes)
        .filter(|&v| {
            (zone_lo..=zone_hi).contains(&(inst.frame_of[v] as usize)) && frag_of_node[v].is_none()
        })
        .collect();
    let lefts: Vec<usize> = (0..fragments.len())
        .filter(|&i| {
            let last = *fragments[i].members.last().unwrap();
            let f = inst.frame_of[last] as usize;
            f < zone_lo && f + t_max >= zone_lo
        })
        .collect();
    let rights: Vec<usize> = (0..fragments.len())
        .filter(|&i| {
            let first = fragments[i].members[0];
            let f = inst.frame_of[first] as usize;
            f > zone_hi && f <= zone_hi + t_max
        })
        .collect();
    if free.is_empty() && (lefts.is_empty() || rights.is_empty()) {
        return;
    }

    // Local ids: lefts, then free nodes, then rights. Frames: all lefts
    // at 1, free nodes shifted, rights at the far end.
    let nl = lefts.len();
    let nf = free.len();
    let shift = |f: usize| f - zone_lo + 2;
    let far = shift(zone_hi) + 1;
    let mut s = String::new();
    s.push_str(&format!("nodes {}\n", nl + nf + rights.len()));
    for k in 0..nl {
        s.push_str(&format!("node {k} 1 0\n"));
    }
    for (k, &v) in free.iter().enumerate() {
        s.push_str(&format!(
            "node {} {} {}\n",
            nl + k,
            shift(inst.frame_of[v] as usize),
            inst.node_cost[v]
        ));
    }
    for k in 0..rights.len() {
        s.push_str(&format!("node {} {far} 0\n", nl + nf + k));
    }
    // Lifted interaction of connecting node `x` after all members of a
    // left fragment, or before all members of a right one.
    let lifted_with = |members: &[NodeId], x: NodeId, after: bool| -> f64 {
        members
            .iter()
            .filter_map(|&m| {
                if after {
                    inst.lifted_edge_id(m, x)
                } else {
                    inst.lifted_edge_id(x, m)
                }
            })
            .map(|id| inst.lifted_edges[id].cost)
            .sum()
    };
    let sink_cost = |v: NodeId| inst.base_edges[inst.sink_edge[v]].cost;
    let source_cost = |v: NodeId| inst.base_edges[inst.source_edge[v]].cost;

    for (li, &fi) in lefts.iter().enumerate() {
        let last = *fragments[fi].members.last().unwrap();
        s.push_str(&format!("base S {li} 0\nbase {li} T 0\n"));
        for (k, &x) in free.iter().enumerate() {
            if let Some(id) = inst.base_edge_id(last, x) {
                let cost = inst.base_edges[id].cost + lifted_with(&fragments[fi].members, x, true)
                    - sink_cost(last);
                s.push_str(&format!("base {li} {} {cost}\n", nl + k));
            }
        }
        for (rk, &fj) in rights.iter().enumerate() {
            let first = fragments[fj].members[0];
            if let Some(id) = inst.base_edge_id(last, first) {
                let mut cost = inst.base_edges[id].cost - sink_cost(last) - source_cost(first);
                for &m in &fragments[fi].members {
                    cost += lifted_with(&fragments[fj].members, m, false);
                }
                s.push_str(&format!("base {li} {} {cost}\n", nl + nf + rk));
            }
        }
    }
    for (k, &x) in free.iter().enumerate() {
        s.push_str(&format!("base S {} {}\n", nl + k, source_cost(x)));
        s.push_str(&format!("base {} T {}\n", nl + k, sink_cost(x)));
        for (k2, &y) in free.iter().enumerate() {
            if let Some(id) = inst.base_edge_id(x, y) {
                s.push_str(&format!("base {} {} {}\n", nl + k, nl + k2, inst.base_edges[id].cost));
            }
        }
        for (rk, &fj) in rights.iter().enumerate() {
            let first = fragments[fj].members[0];
            if let Some(id) = inst.base_edge_id(x, first) {
                let cost = inst.base_edges[id].cost + lifted_with(&fragments[fj].members, x, false)
                    - source_cost(first);
                s.push_str(&format!("base {} {} {cost}\n", nl + k, nl + nf + rk));
            }
        }
    }
    for rk in 0..rights.len() {
        s.push_str(&format!("base S {} 0\nbase {} T 0\n", nl + nf + rk, nl + nf + rk));
    }
    // Lifted edges among free nodes, kept when connected locally.
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); nl + nf + rights.len()];
    for (k, &x) in free.iter().enumerate() {
        for (k2, &y) in free.iter().enumerate() {
            if inst.base_edge_id(x, y).is_some() {
                adj[nl + k].push(nl + k2);
            }
        }
    }
    for (k, &x) in free.iter().enumerate() {
        for (k2, &y) in free.iter().enumerate() {
            if let Some(id) = inst.lifted_edge_id(x, y) {
                if reachable(&adj, nl + k, nl + k2) {
                    s.push_str(&format!(
                        "lifted {} {} {}\n",
                        nl + k,
                        nl + k2,
                        inst.lifted_edges[id].cost
                    ));
                }
            }
        }
    }

    let sub = Instance::parse(&s).expect("stitch instance is valid");
    let report = run(&sub, &cfg.solver);
    for p in &report.solution.paths {
        // Translate a local path into global connections.
        let global_of = |k: NodeId| -> (bool, NodeId, NodeId) {
            // (is_super, entry node, exit node)
            if k < nl {
                let f = &fragments[lefts[k]];
                (true, f.members[0], *f.members.last().unwrap())
            } else if k < nl + nf {
                (false, free[k - nl], free[k - nl])
            } else {
                let f = &fragments[rights[k - nl - nf]];
                (true, f.members[0], *f.members.last().unwrap())
            }
        };
        for pair in p.windows(2) {
            let a = global_of(pair[0]);
            let b = global_of(pair[1]);
            succ[a.2] = Some(b.1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate_instance;

    #[test]
    fn single_window_matches_direct_solve() {
        let (inst, _) = generate_instance(6, 3, 2, 0.1, 7);
        let direct = run(&inst, &SolverConfig::default());
        let cfg = IntervalConfig {
            interval_length: 6,
            max_edge_frames: 2,
            solver: SolverConfig::default(),
        };
        let sol = solve_interval(&inst, &cfg).unwrap();
        assert_eq!(sol.paths, direct.solution.paths);
        assert_eq!(sol.objective.to_bits(), direct.solution.objective.to_bits());
    }

    #[test]
    fn windowed_solve_stays_close() {
        let (inst, _) = generate_instance(12, 3, 2, 0.1, 3);
        let direct = run(&inst, &SolverConfig::default());
        let cfg = IntervalConfig {
            interval_length: 6,
            max_edge_frames: 2,
            solver: SolverConfig::default(),
        };
        let sol = solve_interval(&inst, &cfg).unwrap();
        assert!(sol.validate(&inst));
        let rel = (sol.objective - direct.solution.objective)
            / direct.solution.objective.abs().max(1.0);
        assert!(rel <= 0.05, "windowed {} direct {}", sol.objective, direct.solution.objective);
    }

    #[test]
    fn rejects_short_intervals() {
        let (inst, _) = generate_instance(6, 2, 1, 0.1, 1);
        let cfg = IntervalConfig {
            interval_length: 3,
            max_edge_frames: 2,
            solver: SolverConfig::default(),
        };
        assert!(solve_interval(&inst, &cfg).is_err());
    }
}
