//! Lagrange decomposition: one inflow and one outflow factor per node,
//! plus path and cut factors added by separation. Every original cost is
//! split across the factors that copy its variable, and the sum of factor
//! optima is a lower bound on the best disjoint path set.

use std::collections::BTreeSet;

use crate::cut_factor::{CutFactor, CutVar};
use crate::flow::{Direction, FlowFactor, FlowVar};
use crate::instance::{
    compute_reachability, compute_strong_edges, Instance, NodeId, Reachability, StrongBaseEdges,
};
use crate::path_factor::{PathFactor, PathVar};

/// One path- or cut-factor site attached to a flow factor variable.
#[derive(Debug, Clone, Copy)]
pub struct Site {
    pub var: FlowVar,
    pub target: TargetVar,
}

#[derive(Debug, Clone, Copy)]
pub enum TargetVar {
    Path(usize, PathVar),
    Cut(usize, CutVar),
}

#[derive(Debug)]
pub struct Decomposition<'a> {
    pub inst: &'a Instance,
    pub reach: Reachability,
    pub strong: StrongBaseEdges,
    pub inflow: Vec<FlowFactor>,
    pub outflow: Vec<FlowFactor>,
    pub paths: Vec<PathFactor>,
    pub cuts: Vec<CutFactor>,
    /// Attached path/cut sites per flow factor, in creation order.
    pub inflow_sites: Vec<Vec<Site>>,
    pub outflow_sites: Vec<Vec<Site>>,
    in_opt: Vec<Option<f64>>,
    out_opt: Vec<Option<f64>>,
    path_opt: Vec<Option<f64>>,
    cut_opt: Vec<Option<f64>>,
    /// Canonical keys of installed path/cut factors, for duplicate
    /// suppression: (kind, sorted edge ids with lifted edges offset,
    /// closing edge id).
    registry: BTreeSet<(u8, Vec<usize>, usize)>,
}

impl<'a> Decomposition<'a> {
    /// Split every cost between its factor copies: half/half for node
    /// costs, inner base edges and lifted edges; source edges go fully to
    /// the head's inflow factor, sink edges fully to the tail's outflow.
    pub fn initialize(inst: &'a Instance) -> Decomposition<'a> {
        let reach = compute_reachability(inst, u32::MAX);
        let strong = compute_strong_edges(inst, &reach);
        let n = inst.num_nodes;
        let mut inflow = Vec::with_capacity(n);
        let mut outflow = Vec::with_capacity(n);
        for v in 0..n {
            let mut fin = FlowFactor::new(inst, &reach, v, Direction::Inflow);
            let mut fout = FlowFactor::new(inst, &reach, v, Direction::Outflow);
            fin.node_theta = 0.5 * inst.node_cost[v];
            fout.node_theta = 0.5 * inst.node_cost[v];
            for slot in fin.base.iter_mut() {
                let c = inst.base_edges[slot.edge_id].cost;
                slot.theta = if slot.target.is_some() { 0.5 * c } else { c };
            }
            for slot in fout.base.iter_mut() {
                let c = inst.base_edges[slot.edge_id].cost;
                slot.theta = if slot.target.is_some() { 0.5 * c } else { c };
            }
            for slot in fin.lifted.iter_mut() {
                slot.theta = 0.5 * inst.lifted_edges[slot.edge_id].cost;
            }
            for slot in fout.lifted.iter_mut() {
                slot.theta = 0.5 * inst.lifted_edges[slot.edge_id].cost;
            }
            inflow.push(fin);
            outflow.push(fout);
        }
        Decomposition {
            inst,
            reach,
            strong,
            inflow,
            outflow,
            paths: Vec::new(),
            cuts: Vec::new(),
            inflow_sites: vec![Vec::new(); n],
            outflow_sites: vec![Vec::new(); n],
            in_opt: vec![None; n],
            out_opt: vec![None; n],
            path_opt: Vec::new(),
            cut_opt: Vec::new(),
            registry: BTreeSet::new(),
        }
    }

    pub fn num_factors(&self) -> usize {
        2 * self.inst.num_nodes + self.paths.len() + self.cuts.len()
    }

    pub fn flow(&self, dir: Direction, v: NodeId) -> &FlowFactor {
        match dir {
            Direction::Inflow => &self.inflow[v],
            Direction::Outflow => &self.outflow[v],
        }
    }

    pub fn sites(&self, dir: Direction, v: NodeId) -> &[Site] {
        match dir {
            Direction::Inflow => &self.inflow_sites[v],
            Direction::Outflow => &self.outflow_sites[v],
        }
    }

    pub fn invalidate_flow(&mut self, dir: Direction, v: NodeId) {
        match dir {
            Direction::Inflow => self.in_opt[v] = None,
            Direction::Outflow => self.out_opt[v] = None,
        }
    }

    pub fn add_flow_theta(&mut self, dir: Direction, v: NodeId, var: FlowVar, delta: f64) {
        let f = match dir {
            Direction::Inflow => &mut self.inflow[v],
            Direction::Outflow => &mut self.outflow[v],
        };
        match var {
            FlowVar::Node => f.node_theta += delta,
            FlowVar::Base(s) => f.base[s as usize].theta += delta,
            FlowVar::Lifted(s) => f.lifted[s as usize].theta += delta,
        }
        self.invalidate_flow(dir, v);
    }

    pub fn add_target_theta(&mut self, target: TargetVar, delta: f64) {
        match target {
            TargetVar::Path(i, var) => {
                self.paths[i].add_theta(var, delta);
                self.path_opt[i] = None;
            }
            TargetVar::Cut(i, var) => {
                self.cuts[i].add_theta(var, delta);
                self.cut_opt[i] = None;
            }
        }
    }

    pub fn flow_opt(&mut self, dir: Direction, v: NodeId) -> f64 {
        let (cache, factor) = match dir {
            Direction::Inflow => (&mut self.in_opt[v], &self.inflow[v]),
            Direction::Outflow => (&mut self.out_opt[v], &self.outflow[v]),
        };
        *cache.get_or_insert_with(|| factor.optimize().opt)
    }

    pub fn path_opt(&mut self, i: usize) -> f64 {
        let factor = &self.paths[i];
        *self.path_opt[i].get_or_insert_with(|| factor.optimize())
    }

    pub fn cut_opt(&mut self, i: usize) -> f64 {
        let factor = &self.cuts[i];
        *self.cut_opt[i].get_or_insert_with(|| factor.optimize())
    }

    /// Sum of all factor optima: a lower bound on the optimal objective.
    pub fn lower_bound(&mut self) -> f64 {
        let mut lb = 0.0;
        for v in 0..self.inst.num_nodes {
            lb += self.flow_opt(Direction::Inflow, v);
            lb += self.flow_opt(Direction::Outflow, v);
        }
        for i in 0..self.paths.len() {
            lb += self.path_opt(i);
        }
        for i in 0..self.cuts.len() {
            lb += self.cut_opt(i);
        }
        lb
    }

    fn path_key(factor: &PathFactor, num_base: usize) -> (u8, Vec<usize>, usize) {
        let mut ids: Vec<usize> = factor
            .edges
            .iter()
            .map(|e| if e.lifted { num_base + e.edge_id } else { e.edge_id })
            .collect();
        ids.sort_unstable();
        (0, ids, factor.closing_edge_id)
    }

    fn cut_key(factor: &CutFactor) -> (u8, Vec<usize>, usize) {
        let ids: Vec<usize> = factor.edges.iter().map(|e| e.edge_id).collect();
        (1, ids, factor.lifted_edge_id)
    }

    pub fn is_known_path(&self, factor: &PathFactor) -> bool {
        self.registry
            .contains(&Self::path_key(factor, self.inst.base_edges.len()))
    }

    pub fn is_known_cut(&self, factor: &CutFactor) -> bool {
        self.registry.contains(&Self::cut_key(factor))
    }

    /// Installs a path factor and couples its variables to the inflow and
    /// outflow copies of the same edges. Returns the factor index.
    pub fn install_path(&mut self, factor: PathFactor) -> usize {
        let key = Self::path_key(&factor, self.inst.base_edges.len());
        let idx = self.paths.len();
        for (var, e) in factor.edges.iter().enumerate() {
            self.attach(e.tail, e.head, e.edge_id, e.lifted, TargetVar::Path(idx, var));
        }
        let (v, w) = factor.endpoints;
        self.attach(v, w, factor.closing_edge_id, true, TargetVar::Path(idx, factor.closing_var()));
        self.registry.insert(key);
        self.paths.push(factor);
        self.path_opt.push(None);
        idx
    }

    pub fn install_cut(&mut self, factor: CutFactor) -> usize {
        let key = Self::cut_key(&factor);
        let idx = self.cuts.len();
        for (var, e) in factor.edges.iter().enumerate() {
            self.attach(e.tail, e.head, e.edge_id, false, TargetVar::Cut(idx, CutVar::Edge(var)));
        }
        let (u, v) = factor.endpoints;
        self.attach(u, v, factor.lifted_edge_id, true, TargetVar::Cut(idx, CutVar::Lifted));
        self.registry.insert(key);
        self.cuts.push(factor);
        self.cut_opt.push(None);
        idx
    }

    fn attach(&mut self, tail: NodeId, head: NodeId, edge_id: usize, lifted: bool, target: TargetVar) {
        let (out_var, in_var) = if lifted {
            (
                FlowVar::Lifted(self.outflow[tail].lifted_slot_of(edge_id).unwrap()),
                FlowVar::Lifted(self.inflow[head].lifted_slot_of(edge_id).unwrap()),
            )
        } else {
            (
                FlowVar::Base(self.outflow[tail].base_slot_of(edge_id).unwrap()),
                FlowVar::Base(self.inflow[head].base_slot_of(edge_id).unwrap()),
            )
        };
        self.outflow_sites[tail].push(Site { var: out_var, target });
        self.inflow_sites[head].push(Site { var: in_var, target });
    }

    /// Sum of all factor shares of every original cost; must equal the
    /// instance costs at all times (test hook).
    pub fn max_conservation_error(&self) -> f64 {
        let inst = self.inst;
        let mut err = 0.0f64;
        for v in 0..inst.num_nodes {
            let total = self.inflow[v].node_theta + self.outflow[v].node_theta;
            err = err.max((total - inst.node_cost[v]).abs());
        }
        let mut base_sum: Vec<f64> = vec![0.0; inst.base_edges.len()];
        let mut lifted_sum: Vec<f64> = vec![0.0; inst.lifted_edges.len()];
        for v in 0..inst.num_nodes {
            for f in [&self.inflow[v], &self.outflow[v]] {
                for slot in &f.base {
                    base_sum[slot.edge_id] += slot.theta;
                }
                for slot in &f.lifted {
                    lifted_sum[slot.edge_id] += slot.theta;
                }
            }
        }
        for p in &self.paths {
            for e in &p.edges {
                if e.lifted {
                    lifted_sum[e.edge_id] += e.theta;
                } else {
                    base_sum[e.edge_id] += e.theta;
                }
            }
            lifted_sum[p.closing_edge_id] += p.closing_theta;
        }
        for c in &self.cuts {
            for e in &c.edges {
                base_sum[e.edge_id] += e.theta;
            }
            lifted_sum[c.lifted_edge_id] += c.lifted_theta;
        }
        for (id, e) in inst.base_edges.iter().enumerate() {
            err = err.max((base_sum[id] - e.cost).abs());
        }
        for (id, e) in inst.lifted_edges.iter().enumerate() {
            err = err.max((lifted_sum[id] - e.cost).abs());
        }
        err
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Instance {
        Instance::parse(
            "nodes 3\n\
             node 0 1 0\nnode 1 2 0\nnode 2 3 0\n\
             base 0 1 -1\nbase 1 2 0.5\n\
             lifted 0 2 -1\n",
        )
        .unwrap()
    }

    #[test]
    fn initial_split_and_bound() {
        let inst = chain();
        let mut dec = Decomposition::initialize(&inst);
        assert!(dec.max_conservation_error() < 1e-12);
        // outflow(0): -1.0, inflow(1): -0.5, inflow(2): -0.25; rest 0.
        assert!((dec.flow_opt(Direction::Outflow, 0) - -1.0).abs() < 1e-12);
        assert!((dec.flow_opt(Direction::Inflow, 1) - -0.5).abs() < 1e-12);
        assert!((dec.flow_opt(Direction::Inflow, 2) - -0.25).abs() < 1e-12);
        let lb = dec.lower_bound();
        assert!((lb - -1.75).abs() < 1e-12);
        // Weak duality against the exhaustive optimum.
        let (opt, _) = crate::oracle::exact_ldp(&inst, 14).unwrap();
        assert!(lb <= opt + 1e-12);
    }

    #[test]
    fn duplicate_registry() {
        let inst = chain();
        let mut dec = Decomposition::initialize(&inst);
        let mk = || {
            crate::path_factor::PathFactor::new(
                (0, 2),
                vec![
                    crate::path_factor::PathEdge {
                        edge_id: inst.base_edge_id(0, 1).unwrap(),
                        tail: 0,
                        head: 1,
                        lifted: false,
                        strong: true,
                        theta: 0.0,
                    },
                    crate::path_factor::PathEdge {
                        edge_id: inst.base_edge_id(1, 2).unwrap(),
                        tail: 1,
                        head: 2,
                        lifted: false,
                        strong: true,
                        theta: 0.0,
                    },
                ],
                inst.lifted_edge_id(0, 2).unwrap(),
                0.0,
            )
        };
        assert!(!dec.is_known_path(&mk()));
        dec.install_path(mk());
        assert!(dec.is_known_path(&mk()));
        assert_eq!(dec.outflow_sites[0].len(), 2);
        assert_eq!(dec.inflow_sites[2].len(), 2);
        assert!(dec.max_conservation_error() < 1e-12);
    }
}
