//! Primal heuristic: round the current reparametrization through a
//! min-cost flow (ignoring lifted interactions beyond what the duals
//! already absorbed), re-evaluate under the original costs, then improve
//! by local search over path splits and merges.

use crate::decomposition::Decomposition;
use crate::flow::Direction;
use crate::instance::{Instance, NodeId};
use crate::mcf::Network;
use crate::oracle::evaluate_paths;

#[derive(Debug, Clone)]
pub struct Solution {
    pub paths: Vec<Vec<NodeId>>,
    pub objective: f64,
}

impl Solution {
    pub fn empty() -> Solution {
        Solution {
            paths: Vec::new(),
            objective: 0.0,
        }
    }

    /// `objective <value>` followed by one line of node ids per path.
    pub fn serialize(&self) -> String {
        let mut out = format!("objective {}\n", self.objective);
        for p in &self.paths {
            let ids: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            out.push_str(&ids.join(" "));
            out.push('\n');
        }
        out
    }

    /// Paths must be nonempty, node-disjoint and follow base edges.
    pub fn validate(&self, inst: &Instance) -> bool {
        let mut used = vec![false; inst.num_nodes];
        for p in &self.paths {
            if p.is_empty() {
                return false;
            }
            for &v in p {
                if v >= inst.num_nodes || used[v] {
                    return false;
                }
                used[v] = true;
            }
            for w in p.windows(2) {
                if inst.base_edge_id(w[0], w[1]).is_none() {
                    return false;
                }
            }
        }
        (evaluate_paths(inst, &self.paths) - self.objective).abs() < 1e-6
    }
}

/// Flow network rounding from several cost models — the current duals,
/// the plain base costs, and a few deterministically jittered copies of
/// the base costs to escape shared rounding basins — each polished by
/// local search; the best solution wins.
pub fn compute_primal(dec: &Decomposition, tau: f64, cut_ends_budget: usize) -> Solution {
    let mut best = round_from_duals(dec, tau, cut_ends_budget);
    for seed in 0..8 {
        let b = round_from_base_costs(dec.inst, tau, cut_ends_budget, seed);
        if b.objective < best.objective {
            best = b;
        }
    }
    best
}

/// Node-split network over the original base and node costs, ignoring
/// lifted interactions until local search. A nonzero seed scales every
/// arc cost by a reproducible random factor.
fn round_from_base_costs(
    inst: &Instance,
    tau: f64,
    cut_ends_budget: usize,
    seed: u64,
) -> Solution {
    use crate::instance::Endpoint;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b9 ^ seed);
    let scale = {
        let costs = inst
            .base_edges
            .iter()
            .map(|e| e.cost.abs())
            .chain(inst.node_cost.iter().map(|c| c.abs()));
        let (sum, cnt) = costs.fold((0.0, 0usize), |(s, k), c| (s + c, k + 1));
        sum / cnt.max(1) as f64
    };
    let mut jitter = |c: f64| {
        if seed == 0 {
            c
        } else {
            c + scale * rng.gen_range(-1.0..1.0)
        }
    };
    let n = inst.num_nodes;
    let node_of_in = |v: NodeId| 2 + 2 * v;
    let node_of_out = |v: NodeId| 3 + 2 * v;
    let mut net = Network::new(2 + 2 * n, 0, 1);
    let mut split_arc: Vec<usize> = Vec::with_capacity(n);
    for v in 0..n {
        split_arc.push(net.add_arc(node_of_in(v), node_of_out(v), jitter(inst.node_cost[v])));
    }
    let mut arc_head: Vec<(usize, NodeId)> = Vec::new();
    for e in &inst.base_edges {
        match (e.tail, e.head) {
            (Endpoint::Source, Endpoint::Node(v)) => {
                net.add_arc(0, node_of_in(v), jitter(e.cost));
            }
            (Endpoint::Node(u), Endpoint::Sink) => {
                net.add_arc(node_of_out(u), 1, jitter(e.cost));
            }
            (Endpoint::Node(u), Endpoint::Node(v)) => {
                let id = net.add_arc(node_of_out(u), node_of_in(v), jitter(e.cost));
                arc_head.push((id, v));
            }
            _ => unreachable!("validated instance"),
        }
    }
    net.solve_free_flow();
    let paths = trace_paths(&net, &arc_head, &split_arc, n);
    let objective = evaluate_paths(inst, &paths);
    local_search(inst, Solution { paths, objective }, tau, cut_ends_budget)
}

/// Flow-carrying arcs stitched into node paths.
fn trace_paths(
    net: &Network,
    arc_head: &[(usize, NodeId)],
    split_arc: &[usize],
    n: usize,
) -> Vec<Vec<NodeId>> {
    let mut succ: Vec<Option<NodeId>> = vec![None; n];
    for &(id, w) in arc_head {
        if net.arc_flow(id) {
            let (from, _) = net.arc_endpoints(id);
            succ[(from - 3) / 2] = Some(w);
        }
    }
    let mut has_pred = vec![false; n];
    for v in 0..n {
        if let Some(w) = succ[v] {
            has_pred[w] = true;
        }
    }
    let mut paths = Vec::new();
    for v in 0..n {
        if net.arc_flow(split_arc[v]) && !has_pred[v] {
            let mut p = vec![v];
            let mut cur = v;
            while let Some(w) = succ[cur] {
                p.push(w);
                cur = w;
            }
            paths.push(p);
        }
    }
    paths
}

/// Node-split unit-capacity arcs with costs `alpha_out + alpha_in` per
/// base edge, so each arc carries the full activation cost both factor
/// copies assign to it.
fn round_from_duals(dec: &Decomposition, tau: f64, cut_ends_budget: usize) -> Solution {
    let inst = dec.inst;
    let n = inst.num_nodes;
    let node_of_in = |v: NodeId| 2 + 2 * v;
    let node_of_out = |v: NodeId| 3 + 2 * v;
    let mut net = Network::new(2 + 2 * n, 0, 1);

    let in_alpha: Vec<Vec<f64>> = (0..n)
        .map(|v| dec.flow(Direction::Inflow, v).optimize().alpha)
        .collect();
    let out_alpha: Vec<Vec<f64>> = (0..n)
        .map(|v| dec.flow(Direction::Outflow, v).optimize().alpha)
        .collect();

    let mut arc_head: Vec<(usize, NodeId)> = Vec::new();
    let mut split_arc: Vec<usize> = Vec::with_capacity(n);
    for v in 0..n {
        split_arc.push(net.add_arc(node_of_in(v), node_of_out(v), 0.0));
        let fin = dec.flow(Direction::Inflow, v);
        for (s, slot) in fin.base.iter().enumerate() {
            if slot.target.is_none() {
                net.add_arc(0, node_of_in(v), in_alpha[v][s]);
            }
        }
        let fout = dec.flow(Direction::Outflow, v);
        for (s, slot) in fout.base.iter().enumerate() {
            match slot.target {
                None => {
                    net.add_arc(node_of_out(v), 1, out_alpha[v][s]);
                }
                Some(t) => {
                    let w = fout.node_id(t);
                    let fin_w = dec.flow(Direction::Inflow, w);
                    let ws = fin_w.base_slot_of(slot.edge_id).unwrap() as usize;
                    let cost = out_alpha[v][s] + in_alpha[w][ws];
                    let id = net.add_arc(node_of_out(v), node_of_in(w), cost);
                    arc_head.push((id, w));
                }
            }
        }
    }
    net.solve_free_flow();
    let paths = trace_paths(&net, &arc_head, &split_arc, n);
    let objective = evaluate_paths(inst, &paths);
    let sol = Solution { paths, objective };
    local_search(inst, sol, tau, cut_ends_budget)
}

/// Objective change of cutting `path` after position `j` (0-based, keeping
/// `path[..=j]` and `path[j+1..]` as separate trajectories).
pub fn split_value(inst: &Instance, path: &[NodeId], j: usize) -> f64 {
    let mut crossing = 0.0;
    for k in 0..=j {
        for l in j + 1..path.len() {
            if let Some(id) = inst.lifted_edge_id(path[k], path[l]) {
                crossing += inst.lifted_edges[id].cost;
            }
        }
    }
    let base = inst.base_edges[inst.base_edge_id(path[j], path[j + 1]).unwrap()].cost;
    let new_source = inst.base_edges[inst.source_edge[path[j + 1]]].cost;
    let new_sink = inst.base_edges[inst.sink_edge[path[j]]].cost;
    -crossing - base + new_source + new_sink
}

/// Lifted interaction between two paths if concatenated, and its positive
/// and negative parts.
fn lifted_between(inst: &Instance, p1: &[NodeId], p2: &[NodeId]) -> (f64, f64, f64) {
    let (mut total, mut pos, mut neg) = (0.0, 0.0, 0.0);
    for &a in p1 {
        for &b in p2 {
            if let Some(id) = inst.lifted_edge_id(a, b) {
                let c = inst.lifted_edges[id].cost;
                total += c;
                if c > 0.0 {
                    pos += c;
                } else {
                    neg += c;
                }
            }
        }
    }
    (total, pos, neg)
}

/// Objective change of concatenating `p1 + p2`, or `None` when no base
/// edge bridges them.
fn merge_value(inst: &Instance, p1: &[NodeId], p2: &[NodeId]) -> Option<f64> {
    let bridge = inst.base_edge_id(*p1.last().unwrap(), p2[0])?;
    let (l, _, _) = lifted_between(inst, p1, p2);
    let old_sink = inst.base_edges[inst.sink_edge[*p1.last().unwrap()]].cost;
    let old_source = inst.base_edges[inst.source_edge[p2[0]]].cost;
    Some(inst.base_edges[bridge].cost + l - old_sink - old_source)
}

/// As `merge_value` but rejecting merges whose positive lifted interaction
/// outweighs `tau` times the negative one.
fn merge_value_tau(inst: &Instance, p1: &[NodeId], p2: &[NodeId], tau: f64) -> Option<f64> {
    let (_, pos, neg) = lifted_between(inst, p1, p2);
    if pos > tau * neg.abs() {
        return None;
    }
    merge_value(inst, p1, p2)
}

/// Local search: gradient descent over path moves, then a few basin
/// hops — forcing a path merge that costs a little and re-descending —
/// keeping only strict improvements. Never increases the objective.
pub fn local_search(inst: &Instance, sol: Solution, tau: f64, cut_ends_budget: usize) -> Solution {
    let mut best = descend(inst, sol, tau, cut_ends_budget);
    loop {
        let mut kicks: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..best.paths.len() {
            for j in 0..best.paths.len() {
                if i == j {
                    continue;
                }
                if let Some(v) = merge_value(inst, &best.paths[i], &best.paths[j]) {
                    kicks.push((v, i, j));
                }
            }
        }
        kicks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
        kicks.truncate(5);
        let mut improved = false;
        for (_, i, j) in kicks {
            let mut paths: Vec<Vec<NodeId>> = Vec::new();
            let mut merged = best.paths[i].clone();
            merged.extend_from_slice(&best.paths[j]);
            paths.push(merged);
            for (k, p) in best.paths.iter().enumerate() {
                if k != i && k != j {
                    paths.push(p.clone());
                }
            }
            paths.sort();
            let objective = evaluate_paths(inst, &paths);
            let cand = descend(inst, Solution { paths, objective }, tau, cut_ends_budget);
            if cand.objective < best.objective - 1e-12 {
                best = cand;
                improved = true;
                break;
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Cycles the move phases until none improves.
fn descend(inst: &Instance, sol: Solution, tau: f64, cut_ends_budget: usize) -> Solution {
    let mut cur = sol;
    loop {
        let next = local_search_round(inst, cur.clone(), tau, cut_ends_budget);
        if next.objective < cur.objective - 1e-12 {
            cur = next;
        } else {
            return cur;
        }
    }
}

fn local_search_round(
    inst: &Instance,
    sol: Solution,
    tau: f64,
    cut_ends_budget: usize,
) -> Solution {
    let mut paths = sol.paths;
    let eps = 1e-12;
    let eval1 = |p: &[NodeId]| {
        if p.is_empty() {
            0.0
        } else {
            evaluate_paths(inst, std::slice::from_ref(&p.to_vec()))
        }
    };

    // Replacement first: swap a path node for an unused one when that
    // pays. Running it before splits lets a replacement rescue a merged
    // path that a split would otherwise immediately take apart.
    {
        let mut used = vec![false; inst.num_nodes];
        for p in &paths {
            for &v in p {
                used[v] = true;
            }
        }
        loop {
            let mut best: Option<(f64, usize, usize, NodeId)> = None;
            for pi in 0..paths.len() {
                for k in 0..paths[pi].len() {
                    for w in 0..inst.num_nodes {
                        if used[w] {
                            continue;
                        }
                        if k > 0 && inst.base_edge_id(paths[pi][k - 1], w).is_none() {
                            continue;
                        }
                        if k + 1 < paths[pi].len()
                            && inst.base_edge_id(w, paths[pi][k + 1]).is_none()
                        {
                            continue;
                        }
                        let mut swapped = paths[pi].clone();
                        swapped[k] = w;
                        let delta = eval1(&swapped) - eval1(&paths[pi]);
                        if delta < best.map_or(-eps, |b| b.0) {
                            best = Some((delta, pi, k, w));
                        }
                    }
                }
            }
            let Some((_, pi, k, w)) = best else { break };
            used[paths[pi][k]] = false;
            used[w] = true;
            paths[pi][k] = w;
        }
    }

    // Splits: recursively cut each path at its best split while improving.
    let mut queue: Vec<Vec<NodeId>> = std::mem::take(&mut paths);
    while let Some(p) = queue.pop() {
        if p.len() < 2 {
            paths.push(p);
            continue;
        }
        let mut best = (0.0, usize::MAX);
        for j in 0..p.len() - 1 {
            let v = split_value(inst, &p, j);
            if v < best.0 {
                best = (v, j);
            }
        }
        if best.0 < -eps {
            let j = best.1;
            queue.push(p[..=j].to_vec());
            queue.push(p[j + 1..].to_vec());
        } else {
            paths.push(p);
        }
    }
    paths.sort();

    // End trimming: when a pair attracts (negative lifted interaction)
    // but no base edge bridges it, cut up to `cut_ends_budget` nodes off
    // the facing ends and merge if the exact total change is negative.
    loop {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..paths.len() {
            for j in 0..paths.len() {
                if i == j || paths[i].is_empty() || paths[j].is_empty() {
                    continue;
                }
                let (l, _, _) = lifted_between(inst, &paths[i], &paths[j]);
                if l >= 0.0 || inst.base_edge_id(*paths[i].last().unwrap(), paths[j][0]).is_some() {
                    continue;
                }
                for t1 in 0..paths[i].len().min(cut_ends_budget + 1) {
                    for t2 in 0..paths[j].len().min(cut_ends_budget + 1 - t1) {
                        if t1 == 0 && t2 == 0 {
                            continue;
                        }
                        let p1 = &paths[i][..paths[i].len() - t1];
                        let p2 = &paths[j][t2..];
                        if p1.is_empty() || p2.is_empty() {
                            continue;
                        }
                        if merge_value_tau(inst, p1, p2, tau).is_none() {
                            continue;
                        }
                        let mut delta = merge_value(inst, p1, p2).unwrap();
                        if t1 > 0 {
                            delta += split_value(inst, &paths[i], paths[i].len() - 1 - t1);
                        }
                        if t2 > 0 {
                            delta += split_value(inst, &paths[j], t2 - 1);
                        }
                        if delta < best.map_or(-eps, |b| b.0) {
                            best = Some((delta, i, j, t1, t2));
                        }
                    }
                }
            }
        }
        let Some((_, i, j, t1, t2)) = best else { break };
        let tail1: Vec<NodeId> = paths[i][paths[i].len() - t1..].to_vec();
        let head2: Vec<NodeId> = paths[j][..t2].to_vec();
        let p1: Vec<NodeId> = paths[i][..paths[i].len() - t1].to_vec();
        let mut merged = p1;
        merged.extend_from_slice(&paths[j][t2..]);
        let mut keep: Vec<Vec<NodeId>> = Vec::new();
        for (k, p) in paths.iter().enumerate() {
            if k != i && k != j {
                keep.push(p.clone());
            }
        }
        keep.push(merged);
        if !tail1.is_empty() {
            keep.push(tail1);
        }
        if !head2.is_empty() {
            keep.push(head2);
        }
        keep.sort();
        paths = keep;
    }

    // Greedy merges while the filtered merge value improves.
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..paths.len() {
            for j in 0..paths.len() {
                if i == j {
                    continue;
                }
                if let Some(v) = merge_value_tau(inst, &paths[i], &paths[j], tau) {
                    if v < best.map_or(-eps, |b| b.0) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let mut merged = paths[i].clone();
        merged.extend_from_slice(&paths[j]);
        let mut keep: Vec<Vec<NodeId>> = Vec::new();
        for (k, p) in paths.iter().enumerate() {
            if k != i && k != j {
                keep.push(p.clone());
            }
        }
        keep.push(merged);
        keep.sort();
        paths = keep;
    }

    // Relocation: move one node into another path wherever base edges
    // admit it, when the exact objective change is negative.
    loop {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for pi in 0..paths.len() {
            for k in 0..paths[pi].len() {
                let splice_ok = k == 0
                    || k == paths[pi].len() - 1
                    || inst
                        .base_edge_id(paths[pi][k - 1], paths[pi][k + 1])
                        .is_some();
                if !splice_ok {
                    continue;
                }
                let w = paths[pi][k];
                let mut removed = paths[pi].clone();
                removed.remove(k);
                let removed_delta = eval1(&removed) - eval1(&paths[pi]);
                for pj in 0..paths.len() {
                    if pj == pi {
                        continue;
                    }
                    for pos in 0..=paths[pj].len() {
                        if pos > 0 && inst.base_edge_id(paths[pj][pos - 1], w).is_none() {
                            continue;
                        }
                        if pos < paths[pj].len()
                            && inst.base_edge_id(w, paths[pj][pos]).is_none()
                        {
                            continue;
                        }
                        let mut inserted = paths[pj].clone();
                        inserted.insert(pos, w);
                        let delta = removed_delta + eval1(&inserted) - eval1(&paths[pj]);
                        if delta < best.map_or(-eps, |b| b.0) {
                            best = Some((delta, pi, k, pj, pos));
                        }
                    }
                }
            }
        }
        let Some((_, pi, k, pj, pos)) = best else { break };
        let w = paths[pi].remove(k);
        paths[pj].insert(pos, w);
        paths.retain(|p| !p.is_empty());
        paths.sort();
    }

    // Tail exchange between two paths across a pair of crossing base
    // edges, with empty tails allowed on either side.
    loop {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for pi in 0..paths.len() {
            for pj in 0..paths.len() {
                if pi == pj {
                    continue;
                }
                for i in 0..paths[pi].len() {
                    for j in 0..paths[pj].len() {
                        if i == paths[pi].len() - 1 && j == paths[pj].len() - 1 {
                            continue;
                        }
                        let tail_q = &paths[pj][j + 1..];
                        let tail_p = &paths[pi][i + 1..];
                        if !tail_q.is_empty()
                            && inst.base_edge_id(paths[pi][i], tail_q[0]).is_none()
                        {
                            continue;
                        }
                        if !tail_p.is_empty()
                            && inst.base_edge_id(paths[pj][j], tail_p[0]).is_none()
                        {
                            continue;
                        }
                        let mut new_p = paths[pi][..=i].to_vec();
                        new_p.extend_from_slice(tail_q);
                        let mut new_q = paths[pj][..=j].to_vec();
                        new_q.extend_from_slice(tail_p);
                        let delta = eval1(&new_p) + eval1(&new_q)
                            - eval1(&paths[pi])
                            - eval1(&paths[pj]);
                        if delta < best.map_or(-eps, |b| b.0) {
                            best = Some((delta, pi, i, pj, j));
                        }
                    }
                }
            }
        }
        let Some((_, pi, i, pj, j)) = best else { break };
        let tail_q: Vec<NodeId> = paths[pj][j + 1..].to_vec();
        let tail_p: Vec<NodeId> = paths[pi][i + 1..].to_vec();
        paths[pi].truncate(i + 1);
        paths[pi].extend_from_slice(&tail_q);
        paths[pj].truncate(j + 1);
        paths[pj].extend_from_slice(&tail_p);
        paths.sort();
    }

    // Node moves against the original costs: drop paths that cost more
    // than they save, pick up attractive unused nodes as singletons, and
    // grow path ends while that pays.
    let standalone = |p: &[NodeId]| evaluate_paths(inst, std::slice::from_ref(&p.to_vec()));
    paths.retain(|p| standalone(p) <= eps);
    let mut used = vec![false; inst.num_nodes];
    for p in &paths {
        for &v in p {
            used[v] = true;
        }
    }
    for v in 0..inst.num_nodes {
        if !used[v] && standalone(&[v]) < -eps {
            used[v] = true;
            paths.push(vec![v]);
        }
    }
    paths.sort();
    let lifted_to = |p: &[NodeId], w: NodeId, forward: bool| -> f64 {
        p.iter()
            .filter_map(|&x| {
                if forward {
                    inst.lifted_edge_id(x, w)
                } else {
                    inst.lifted_edge_id(w, x)
                }
            })
            .map(|id| inst.lifted_edges[id].cost)
            .sum()
    };
    let mut grew = true;
    while grew {
        grew = false;
        for i in 0..paths.len() {
            loop {
                let tail = *paths[i].last().unwrap();
                let mut best: Option<(f64, NodeId)> = None;
                for w in 0..inst.num_nodes {
                    if used[w] {
                        continue;
                    }
                    if let Some(id) = inst.base_edge_id(tail, w) {
                        let delta = inst.base_edges[id].cost + inst.node_cost[w]
                            + inst.base_edges[inst.sink_edge[w]].cost
                            - inst.base_edges[inst.sink_edge[tail]].cost
                            + lifted_to(&paths[i], w, true);
                        if delta < best.map_or(-eps, |b| b.0) {
                            best = Some((delta, w));
                        }
                    }
                }
                let Some((_, w)) = best else { break };
                used[w] = true;
                paths[i].push(w);
                grew = true;
            }
            loop {
                let head = paths[i][0];
                let mut best: Option<(f64, NodeId)> = None;
                for w in 0..inst.num_nodes {
                    if used[w] {
                        continue;
                    }
                    if let Some(id) = inst.base_edge_id(w, head) {
                        let delta = inst.base_edges[id].cost + inst.node_cost[w]
                            + inst.base_edges[inst.source_edge[w]].cost
                            - inst.base_edges[inst.source_edge[head]].cost
                            + lifted_to(&paths[i], w, false);
                        if delta < best.map_or(-eps, |b| b.0) {
                            best = Some((delta, w));
                        }
                    }
                }
                let Some((_, w)) = best else { break };
                used[w] = true;
                paths[i].insert(0, w);
                grew = true;
            }
        }
    }
    paths.sort();

    let objective = evaluate_paths(inst, &paths);
    Solution { paths, objective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::Decomposition;

    #[test]
    fn mcf_arc_cost_from_both_sides() {
        let inst = Instance::parse(
            "nodes 3\n\
             node 0 1 0\nnode 1 2 0\nnode 2 3 0\n\
             base 0 1 -1\nbase 1 2 0.5\n\
             lifted 0 2 -1\n",
        )
        .unwrap();
        let dec = Decomposition::initialize(&inst);
        // alpha_out(0->1) = -1.0, alpha_in(0->1) = -0.5.
        let out = dec.flow(Direction::Outflow, 0).optimize();
        let fin = dec.flow(Direction::Inflow, 1).optimize();
        let so = dec.flow(Direction::Outflow, 0)
            .base_slot_of(inst.base_edge_id(0, 1).unwrap())
            .unwrap() as usize;
        let si = dec.flow(Direction::Inflow, 1)
            .base_slot_of(inst.base_edge_id(0, 1).unwrap())
            .unwrap() as usize;
        assert!((out.alpha[so] + fin.alpha[si] - -1.5).abs() < 1e-12);
        // Free-flow rounding stops at [0, 1] (the 1->2 arc nets to zero
        // under the initial split); the extension move then picks up node
        // 2 for the lifted reward.
        let sol = compute_primal(&dec, 0.5, 5);
        assert!(sol.validate(&inst));
        assert_eq!(sol.paths, vec![vec![0, 1, 2]]);
        assert!((sol.objective - -1.5).abs() < 1e-9);
    }

    #[test]
    fn split_improves_bad_path() {
        // Positive bridge and positive crossing lifted cost: split wins.
        let inst = Instance::parse(
            "nodes 2\nnode 0 1 -0.5\nnode 1 2 -0.5\nbase 0 1 2\nlifted 0 1 0\n",
        )
        .unwrap();
        let sol = Solution {
            paths: vec![vec![0, 1]],
            objective: evaluate_paths(&inst, &[vec![0, 1]]),
        };
        let better = local_search(&inst, sol.clone(), 0.5, 5);
        assert!(better.objective <= sol.objective);
        assert_eq!(better.paths.len(), 2);
    }

    #[test]
    fn merge_joins_cheap_bridge() {
        let inst = Instance::parse(
            "nodes 2\nnode 0 1 0\nnode 1 2 0\nbase 0 1 -1\n",
        )
        .unwrap();
        let sol = Solution {
            paths: vec![vec![0], vec![1]],
            objective: 0.0,
        };
        let better = local_search(&inst, sol, 0.5, 5);
        assert_eq!(better.paths, vec![vec![0, 1]]);
        assert!((better.objective - -1.0).abs() < 1e-12);
    }
}
