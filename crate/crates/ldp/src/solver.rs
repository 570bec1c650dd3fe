//! Dual block-coordinate ascent over the factor decomposition, with
//! periodic primal rounding and cutting-plane rounds. Every message moves
//! a scaled min-marginal between two factors that share the variable, so
//! the certified lower bound never decreases.

use crate::decomposition::Decomposition;
use crate::flow::{Direction, FlowVar};
use crate::instance::{Instance, NodeId};
use crate::primal::{compute_primal, Solution};
use crate::separation::separate_and_install;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Cutting-plane rounds run every this many iterations.
    pub sep_interval: usize,
    /// Primal rounding runs on the first iteration and every this many.
    pub primal_interval: usize,
    pub sep_epsilon: f64,
    /// New subproblems per round are capped at `ratio * 2n`.
    pub max_new_factor_ratio: f64,
    pub damping: f64,
    pub gap_tolerance: f64,
    /// Merge filter: positive lifted interaction may not exceed `tau`
    /// times the negative one.
    pub tau: f64,
    pub cut_ends_budget: usize,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            max_iter: 51,
            sep_interval: 20,
            primal_interval: 5,
            sep_epsilon: 1e-4,
            max_new_factor_ratio: 0.5,
            damping: 1.0,
            gap_tolerance: 1e-9,
            tau: 0.5,
            cut_ends_budget: 5,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationStat {
    pub iter: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub num_factors: usize,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations: Vec<IterationStat>,
    pub solution: Solution,
    pub lower_bound: f64,
    pub gap: f64,
}

fn opposite(dir: Direction) -> Direction {
    match dir {
        Direction::Inflow => Direction::Outflow,
        Direction::Outflow => Direction::Inflow,
    }
}

/// The flow factor on the other side of an edge variable: the tail's
/// outflow and the head's inflow factor share every inner edge.
fn opposite_of(
    dec: &Decomposition,
    dir: Direction,
    v: NodeId,
    var: FlowVar,
) -> Option<(Direction, NodeId, FlowVar)> {
    let f = dec.flow(dir, v);
    let (edge_id, lifted) = match var {
        FlowVar::Node => return Some((opposite(dir), v, FlowVar::Node)),
        FlowVar::Base(s) => {
            f.base[s as usize].target?;
            (f.base[s as usize].edge_id, false)
        }
        FlowVar::Lifted(s) => (f.lifted[s as usize].edge_id, true),
    };
    let (tail, head) = if lifted {
        let e = &dec.inst.lifted_edges[edge_id];
        (e.tail, e.head)
    } else {
        let e = &dec.inst.base_edges[edge_id];
        match (e.tail, e.head) {
            (crate::instance::Endpoint::Node(t), crate::instance::Endpoint::Node(h)) => (t, h),
            _ => return None,
        }
    };
    let (od, ov) = match dir {
        Direction::Outflow => (Direction::Inflow, head),
        Direction::Inflow => (Direction::Outflow, tail),
    };
    debug_assert_eq!(if dir == Direction::Outflow { v } else { v }, v);
    let of = dec.flow(od, ov);
    let ovar = if lifted {
        FlowVar::Lifted(of.lifted_slot_of(edge_id).unwrap())
    } else {
        FlowVar::Base(of.base_slot_of(edge_id).unwrap())
    };
    Some((od, ov, ovar))
}

fn site_count(dec: &Decomposition, dir: Direction, v: NodeId, var: FlowVar) -> usize {
    dec.sites(dir, v).iter().filter(|s| s.var == var).count()
}

/// Equalizes the exact min-marginals of a variable between the two flow
/// factors that share it. Among all transfers along one coupling this is
/// the one maximizing the bound, and it never decreases it.
fn average_pair(
    dec: &mut Decomposition,
    dir: Direction,
    v: NodeId,
    var: FlowVar,
    damping: f64,
) {
    let Some((od, ov, ovar)) = opposite_of(dec, dir, v, var) else {
        return;
    };
    let here = dec.flow(dir, v).min_marginal(var);
    let there = dec.flow(od, ov).min_marginal(ovar);
    let delta = 0.5 * damping * (here - there);
    if delta != 0.0 {
        dec.add_flow_theta(dir, v, var, -delta);
        dec.add_flow_theta(od, ov, ovar, delta);
    }
}

/// One block update of a flow factor: exact marginals to every attached
/// path/cut subproblem, then pairwise marginal averaging with the
/// opposite flow factor over lifted edges, inner base edges and the node
/// variable.
fn pass_flow(dec: &mut Decomposition, dir: Direction, v: NodeId, damping: f64) {
    let sites: Vec<_> = dec.sites(dir, v).to_vec();
    for site in sites {
        let omega = 1.0 + site_count(dec, dir, v, site.var) as f64;
        let gamma = dec.flow(dir, v).min_marginal(site.var);
        let delta = damping / omega * gamma;
        if delta != 0.0 {
            dec.add_flow_theta(dir, v, site.var, -delta);
            dec.add_target_theta(site.target, delta);
        }
    }
    let nl = dec.flow(dir, v).lifted.len();
    for s in 0..nl as u32 {
        average_pair(dec, dir, v, FlowVar::Lifted(s), damping);
    }
    let nb = dec.flow(dir, v).base.len();
    for s in 0..nb as u32 {
        if dec.flow(dir, v).base[s as usize].target.is_some() {
            average_pair(dec, dir, v, FlowVar::Base(s), damping);
        }
    }
    average_pair(dec, dir, v, FlowVar::Node, damping);
}

/// One block update of a path subproblem: each variable returns a share
/// of its marginal to both flow factors covering the edge.
fn pass_path(dec: &mut Decomposition, i: usize, damping: f64) {
    let nv = dec.paths[i].num_vars();
    let omega = damping / (2.0 * nv as f64);
    for var in 0..nv {
        let gamma = {
            let f = &dec.paths[i];
            f.min_marginal(var)
        };
        let delta = omega * gamma;
        if delta == 0.0 {
            continue;
        }
        let (lifted, id, tail, head) = {
            let f = &dec.paths[i];
            if var == f.closing_var() {
                (true, f.closing_edge_id, f.endpoints.0, f.endpoints.1)
            } else {
                let e = &f.edges[var];
                (e.lifted, e.edge_id, e.tail, e.head)
            }
        };
        dec.add_target_theta(crate::decomposition::TargetVar::Path(i, var), -2.0 * delta);
        distribute_to_flows(dec, lifted, id, tail, head, delta);
    }
}

fn pass_cut(dec: &mut Decomposition, i: usize, damping: f64) {
    use crate::cut_factor::CutVar;
    let ne = dec.cuts[i].edges.len();
    let omega = damping / (2.0 * (ne + 1) as f64);
    let mut vars: Vec<CutVar> = (0..ne).map(CutVar::Edge).collect();
    vars.push(CutVar::Lifted);
    for var in vars {
        let gamma = dec.cuts[i].min_marginal(var);
        let delta = omega * gamma;
        if delta == 0.0 {
            continue;
        }
        let (lifted, id, tail, head) = {
            let f = &dec.cuts[i];
            match var {
                CutVar::Edge(k) => {
                    let e = &f.edges[k];
                    (false, e.edge_id, e.tail, e.head)
                }
                CutVar::Lifted => (true, f.lifted_edge_id, f.endpoints.0, f.endpoints.1),
            }
        };
        dec.add_target_theta(crate::decomposition::TargetVar::Cut(i, var), -2.0 * delta);
        distribute_to_flows(dec, lifted, id, tail, head, delta);
    }
}

fn distribute_to_flows(
    dec: &mut Decomposition,
    lifted: bool,
    id: usize,
    tail: NodeId,
    head: NodeId,
    delta: f64,
) {
    let (out_var, in_var) = if lifted {
        (
            FlowVar::Lifted(dec.flow(Direction::Outflow, tail).lifted_slot_of(id).unwrap()),
            FlowVar::Lifted(dec.flow(Direction::Inflow, head).lifted_slot_of(id).unwrap()),
        )
    } else {
        (
            FlowVar::Base(dec.flow(Direction::Outflow, tail).base_slot_of(id).unwrap()),
            FlowVar::Base(dec.flow(Direction::Inflow, head).base_slot_of(id).unwrap()),
        )
    };
    dec.add_flow_theta(Direction::Outflow, tail, out_var, delta);
    dec.add_flow_theta(Direction::Inflow, head, in_var, delta);
}

/// Without lifted edges the rounding network solves the whole problem
/// exactly, and feasible potentials of its residual graph certify that:
/// rewriting the factor costs from the reduced costs keeps every cost
/// split intact while the factor minima sum exactly to the flow optimum.
fn dual_fit_pure_flow(dec: &mut Decomposition) {
    use crate::instance::Endpoint;
    let inst = dec.inst;
    debug_assert!(inst.lifted_edges.is_empty());
    debug_assert!(dec.paths.is_empty() && dec.cuts.is_empty());
    let n = inst.num_nodes;
    let node_in = |v: NodeId| 2 + 2 * v;
    let node_out = |v: NodeId| 3 + 2 * v;
    let mut net = crate::mcf::Network::new(2 + 2 * n, 0, 1);
    for v in 0..n {
        net.add_arc(node_in(v), node_out(v), inst.node_cost[v]);
    }
    for e in &inst.base_edges {
        match (e.tail, e.head) {
            (Endpoint::Source, Endpoint::Node(v)) => {
                net.add_arc(0, node_in(v), e.cost);
            }
            (Endpoint::Node(u), Endpoint::Sink) => {
                net.add_arc(node_out(u), 1, e.cost);
            }
            (Endpoint::Node(u), Endpoint::Node(v)) => {
                net.add_arc(node_out(u), node_in(v), e.cost);
            }
            _ => unreachable!("validated instance"),
        }
    }
    net.solve_free_flow();
    let pi = net.potentials();
    for v in 0..n {
        dec.inflow[v].node_theta = -pi[node_in(v)];
        dec.outflow[v].node_theta = inst.node_cost[v] + pi[node_in(v)];
    }
    for (id, e) in inst.base_edges.iter().enumerate() {
        match (e.tail, e.head) {
            (Endpoint::Source, Endpoint::Node(v)) => {
                let s = dec.inflow[v].base_slot_of(id).unwrap() as usize;
                dec.inflow[v].base[s].theta = e.cost;
            }
            (Endpoint::Node(u), Endpoint::Sink) => {
                let s = dec.outflow[u].base_slot_of(id).unwrap() as usize;
                dec.outflow[u].base[s].theta = e.cost;
            }
            (Endpoint::Node(u), Endpoint::Node(v)) => {
                let so = dec.outflow[u].base_slot_of(id).unwrap() as usize;
                let si = dec.inflow[v].base_slot_of(id).unwrap() as usize;
                dec.outflow[u].base[so].theta = -pi[node_out(u)];
                dec.inflow[v].base[si].theta = e.cost + pi[node_out(u)];
            }
            _ => unreachable!("validated instance"),
        }
    }
    for v in 0..n {
        dec.invalidate_flow(Direction::Inflow, v);
        dec.invalidate_flow(Direction::Outflow, v);
    }
}

fn node_order(inst: &Instance) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..inst.num_nodes).collect();
    order.sort_by_key(|&v| (inst.frame_of[v], v));
    order
}

/// Full solve: block-coordinate dual ascent with periodic rounding and
/// separation, until the gap closes or `max_iter` is reached.
///
/// ```
/// use ldp::generate::generate_instance;
/// use ldp::solver::{run, SolverConfig};
///
/// let (inst, truth) = generate_instance(6, 3, 2, 0.0, 0);
/// let report = run(&inst, &SolverConfig::default());
/// assert_eq!(report.solution.paths, truth);
/// assert!(report.gap <= 1e-9);
/// ```
pub fn run(inst: &Instance, cfg: &SolverConfig) -> SolverReport {
    let mut dec = Decomposition::initialize(inst);
    let order = node_order(inst);
    let mut best = Solution {
        paths: Vec::new(),
        objective: 0.0,
    };
    let mut iterations = Vec::new();
    let mut lb = dec.lower_bound();
    for iter in 1..=cfg.max_iter {
        for &v in &order {
            pass_flow(&mut dec, Direction::Inflow, v, cfg.damping);
            pass_flow(&mut dec, Direction::Outflow, v, cfg.damping);
        }
        for i in 0..dec.paths.len() {
            pass_path(&mut dec, i, cfg.damping);
        }
        for i in 0..dec.cuts.len() {
            pass_cut(&mut dec, i, cfg.damping);
        }
        for &v in order.iter().rev() {
            pass_flow(&mut dec, Direction::Outflow, v, cfg.damping);
            pass_flow(&mut dec, Direction::Inflow, v, cfg.damping);
        }
        for i in (0..dec.cuts.len()).rev() {
            pass_cut(&mut dec, i, cfg.damping);
        }
        for i in (0..dec.paths.len()).rev() {
            pass_path(&mut dec, i, cfg.damping);
        }
        lb = dec.lower_bound();

        if iter == 1 || iter % cfg.primal_interval == 0 {
            let sol = compute_primal(&dec, cfg.tau, cfg.cut_ends_budget);
            if sol.objective < best.objective {
                best = sol;
            }
            if inst.lifted_edges.is_empty() && dec.paths.is_empty() && dec.cuts.is_empty() {
                dual_fit_pure_flow(&mut dec);
                lb = dec.lower_bound();
            }
        }
        let gap = best.objective - lb;
        iterations.push(IterationStat {
            iter,
            lower_bound: lb,
            upper_bound: best.objective,
            num_factors: dec.num_factors(),
        });
        if cfg.verbose {
            eprintln!(
                "iter={} lb={:.9} ub={:.9} gap={:.9} factors={}",
                iter,
                lb,
                best.objective,
                gap,
                dec.num_factors()
            );
        }
        if gap <= cfg.gap_tolerance {
            break;
        }
        if iter % cfg.sep_interval == 0 {
            separate_and_install(&mut dec, cfg.sep_epsilon, cfg.max_new_factor_ratio);
        }
    }
    let gap = best.objective - lb;
    SolverReport {
        iterations,
        solution: best,
        lower_bound: lb,
        gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_instance;
    use crate::oracle::exact_ldp;

    #[test]
    fn chain_converges() {
        let inst = Instance::parse(
            "nodes 3\n\
             node 0 1 -0.5\nnode 1 2 -0.5\nnode 2 3 0\n\
             base 0 1 -0.25\nbase 1 2 -0.25\n\
             lifted 0 2 0\n",
        )
        .unwrap();
        let report = run(&inst, &SolverConfig::default());
        assert!((report.solution.objective - -1.5).abs() < 1e-9);
        assert!(report.lower_bound <= report.solution.objective + 1e-9);
        assert!(report.gap.abs() < 1e-6, "gap {}", report.gap);
    }

    #[test]
    fn monotone_bound_and_weak_duality() {
        for seed in 0..10 {
            let inst = random_instance(4, 2, seed);
            let (opt, _) = exact_ldp(&inst, 20).unwrap();
            let report = run(
                &inst,
                &SolverConfig {
                    max_iter: 25,
                    ..SolverConfig::default()
                },
            );
            let mut prev = f64::NEG_INFINITY;
            for stat in &report.iterations {
                assert!(
                    stat.lower_bound >= prev - 1e-9,
                    "seed {seed}: bound fell from {prev} to {}",
                    stat.lower_bound
                );
                prev = stat.lower_bound;
            }
            assert!(
                report.lower_bound <= opt + 1e-9,
                "seed {seed}: lb {} above optimum {opt}",
                report.lower_bound
            );
            assert!(
                report.solution.objective >= opt - 1e-9,
                "seed {seed}: ub {} below optimum {opt}",
                report.solution.objective
            );
            assert!(report.solution.validate(&inst));
        }
    }
}
