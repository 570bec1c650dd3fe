//! Problem instances: a time-ordered detection graph with base edges
//! (possible direct transitions) and lifted edges (long-range pairwise
//! costs that apply whenever two detections end up on the same path).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Endpoint of a base edge. Inner nodes are detections; `Source`/`Sink`
/// are the artificial start/end of every trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Source,
    Node(NodeId),
    Sink,
}

impl Endpoint {
    pub fn node(self) -> Option<NodeId> {
        match self {
            Endpoint::Node(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BaseEdge {
    pub tail: Endpoint,
    pub head: Endpoint,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LiftedEdge {
    pub tail: NodeId,
    pub head: NodeId,
    pub cost: f64,
}

/// A flow network over detections plus long-range lifted costs.
///
/// After construction every inner node has exactly one source edge and one
/// sink edge (missing ones are synthesized at cost zero, duplicates are
/// summed), frames strictly increase along base edges, and every lifted
/// edge connects a base-reachable pair.
#[derive(Debug, Clone)]
pub struct Instance {
    pub num_nodes: usize,
    pub frame_of: Vec<u32>,
    pub node_cost: Vec<f64>,
    pub base_edges: Vec<BaseEdge>,
    pub lifted_edges: Vec<LiftedEdge>,

    /// Per-node edge id of the (unique) source edge / sink edge.
    pub source_edge: Vec<usize>,
    pub sink_edge: Vec<usize>,
    /// Inner base adjacency: edge ids, sorted by neighbor node id.
    pub out_edges: Vec<Vec<usize>>,
    pub in_edges: Vec<Vec<usize>>,
    /// Lifted adjacency, sorted by neighbor node id.
    pub lifted_out: Vec<Vec<usize>>,
    pub lifted_in: Vec<Vec<usize>>,

    base_index: BTreeMap<(NodeId, NodeId), usize>,
    lifted_index: BTreeMap<(NodeId, NodeId), usize>,
    pub max_frame: u32,
}

impl Instance {
    /// Build and validate an instance from raw parts. Normalizes source and
    /// sink edges and assigns canonical edge ids (source edges by node, then
    /// sink edges by node, then inner edges sorted by `(tail, head)`).
    pub fn new(
        frame_of: Vec<u32>,
        node_cost: Vec<f64>,
        base: Vec<BaseEdge>,
        lifted: Vec<LiftedEdge>,
    ) -> Result<Instance> {
        let n = frame_of.len();
        if node_cost.len() != n {
            return Err(Error::Invalid(format!(
                "{} node costs for {} nodes",
                node_cost.len(),
                n
            )));
        }
        if frame_of.iter().any(|&f| f == 0) {
            return Err(Error::Invalid("frames must be positive".into()));
        }
        let check = |e: Endpoint, what: &str| -> Result<()> {
            if let Endpoint::Node(v) = e {
                if v >= n {
                    return Err(Error::Invalid(format!("{what} references node {v} >= {n}")));
                }
            }
            Ok(())
        };

        let mut source_cost = vec![0.0f64; n];
        let mut sink_cost = vec![0.0f64; n];
        let mut inner: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for e in &base {
            check(e.tail, "base edge tail")?;
            check(e.head, "base edge head")?;
            match (e.tail, e.head) {
                (Endpoint::Source, Endpoint::Node(v)) => source_cost[v] += e.cost,
                (Endpoint::Node(v), Endpoint::Sink) => sink_cost[v] += e.cost,
                (Endpoint::Node(u), Endpoint::Node(v)) => {
                    if frame_of[u] >= frame_of[v] {
                        return Err(Error::Invalid(format!(
                            "base edge {u}->{v} does not advance in time"
                        )));
                    }
                    if inner.insert((u, v), e.cost).is_some() {
                        return Err(Error::Invalid(format!("duplicate base edge {u}->{v}")));
                    }
                }
                _ => {
                    return Err(Error::Invalid(
                        "base edges must be source->node, node->node or node->sink".into(),
                    ))
                }
            }
        }

        let mut lifted_map: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for e in &lifted {
            if e.tail >= n || e.head >= n {
                return Err(Error::Invalid(format!(
                    "lifted edge {}->{} references missing node",
                    e.tail, e.head
                )));
            }
            if frame_of[e.tail] >= frame_of[e.head] {
                return Err(Error::Invalid(format!(
                    "lifted edge {}->{} does not advance in time",
                    e.tail, e.head
                )));
            }
            if lifted_map.insert((e.tail, e.head), e.cost).is_some() {
                return Err(Error::Invalid(format!(
                    "duplicate lifted edge {}->{}",
                    e.tail, e.head
                )));
            }
        }

        // Canonical edge ids: source edges, sink edges, inner edges.
        let mut base_edges = Vec::with_capacity(2 * n + inner.len());
        let mut source_edge = Vec::with_capacity(n);
        let mut sink_edge = Vec::with_capacity(n);
        for v in 0..n {
            source_edge.push(base_edges.len());
            base_edges.push(BaseEdge {
                tail: Endpoint::Source,
                head: Endpoint::Node(v),
                cost: source_cost[v],
            });
        }
        for v in 0..n {
            sink_edge.push(base_edges.len());
            base_edges.push(BaseEdge {
                tail: Endpoint::Node(v),
                head: Endpoint::Sink,
                cost: sink_cost[v],
            });
        }
        let mut base_index = BTreeMap::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (&(u, v), &cost) in &inner {
            let id = base_edges.len();
            base_edges.push(BaseEdge {
                tail: Endpoint::Node(u),
                head: Endpoint::Node(v),
                cost,
            });
            base_index.insert((u, v), id);
            out_edges[u].push(id);
            in_edges[v].push(id);
        }
        for v in 0..n {
            out_edges[v].sort_by_key(|&id| base_edges[id].head);
            in_edges[v].sort_by_key(|&id| base_edges[id].tail);
        }

        let mut lifted_edges = Vec::with_capacity(lifted_map.len());
        let mut lifted_index = BTreeMap::new();
        let mut lifted_out = vec![Vec::new(); n];
        let mut lifted_in = vec![Vec::new(); n];
        for (&(u, v), &cost) in &lifted_map {
            let id = lifted_edges.len();
            lifted_edges.push(LiftedEdge {
                tail: u,
                head: v,
                cost,
            });
            lifted_index.insert((u, v), id);
            lifted_out[u].push(id);
            lifted_in[v].push(id);
        }
        for v in 0..n {
            lifted_out[v].sort_by_key(|&id| lifted_edges[id].head);
            lifted_in[v].sort_by_key(|&id| lifted_edges[id].tail);
        }

        let max_frame = frame_of.iter().copied().max().unwrap_or(0);
        let inst = Instance {
            num_nodes: n,
            frame_of,
            node_cost,
            base_edges,
            lifted_edges,
            source_edge,
            sink_edge,
            out_edges,
            in_edges,
            lifted_out,
            lifted_in,
            base_index,
            lifted_index,
            max_frame,
        };

        // Lifted edges must connect base-reachable pairs.
        let reach = compute_reachability(&inst, u32::MAX);
        for e in &inst.lifted_edges {
            if !reach.reachable(e.tail, e.head) {
                return Err(Error::Invalid(format!(
                    "lifted edge {}->{} connects a pair with no base path",
                    e.tail, e.head
                )));
            }
        }
        Ok(inst)
    }

    pub fn inner_base_edges(&self) -> impl Iterator<Item = (usize, NodeId, NodeId, f64)> + '_ {
        self.base_edges
            .iter()
            .enumerate()
            .filter_map(|(id, e)| match (e.tail, e.head) {
                (Endpoint::Node(u), Endpoint::Node(v)) => Some((id, u, v, e.cost)),
                _ => None,
            })
    }

    pub fn base_edge_id(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.base_index.get(&(u, v)).copied()
    }

    pub fn lifted_edge_id(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.lifted_index.get(&(u, v)).copied()
    }

    /// Nodes ordered by `(frame, id)`; a topological order of the base graph.
    pub fn nodes_by_frame(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = (0..self.num_nodes).collect();
        order.sort_by_key(|&v| (self.frame_of[v], v));
        order
    }

    /// Largest frame gap over all base and lifted edges.
    pub fn max_edge_frame_gap(&self) -> u32 {
        let mut gap = 0;
        for (_, u, v, _) in self.inner_base_edges() {
            gap = gap.max(self.frame_of[v] - self.frame_of[u]);
        }
        for e in &self.lifted_edges {
            gap = gap.max(self.frame_of[e.head] - self.frame_of[e.tail]);
        }
        gap
    }

    /// Parse the plain-text instance format: `nodes <n>`, `node <id> <frame>
    /// <cost>`, `base <tail|S> <head|T> <cost>`, `lifted <tail> <head> <cost>`.
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Instance> {
        let mut num_nodes: Option<usize> = None;
        let mut frames: Vec<Option<u32>> = Vec::new();
        let mut costs: Vec<f64> = Vec::new();
        let mut base = Vec::new();
        let mut lifted = Vec::new();

        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let mut it = line.split_whitespace();
            let Some(kw) = it.next() else { continue };
            let mut field = |what: &str| -> Result<String> {
                it.next()
                    .map(str::to_owned)
                    .ok_or_else(|| perr(line_no, format!("missing {what}")))
            };
            match kw {
                "nodes" => {
                    let n: usize = field("node count")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad node count: {e}")))?;
                    num_nodes = Some(n);
                    frames = vec![None; n];
                    costs = vec![0.0; n];
                }
                "node" => {
                    let id: usize = field("node id")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad node id: {e}")))?;
                    let frame: u32 = field("frame")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad frame: {e}")))?;
                    let cost: f64 = field("cost")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad cost: {e}")))?;
                    if num_nodes.is_none() {
                        return Err(perr(line_no, "node before nodes header".into()));
                    }
                    if id >= frames.len() {
                        return Err(perr(line_no, format!("node id {id} out of range")));
                    }
                    if frames[id].is_some() {
                        return Err(perr(line_no, format!("node {id} declared twice")));
                    }
                    frames[id] = Some(frame);
                    costs[id] = cost;
                }
                "base" => {
                    let parse_ep = |s: &str| -> Result<Endpoint> {
                        match s {
                            "S" => Ok(Endpoint::Source),
                            "T" => Ok(Endpoint::Sink),
                            _ => s
                                .parse::<usize>()
                                .map(Endpoint::Node)
                                .map_err(|e| perr(line_no, format!("bad endpoint {s:?}: {e}"))),
                        }
                    };
                    let tail = parse_ep(&field("tail")?)?;
                    let head = parse_ep(&field("head")?)?;
                    let cost: f64 = field("cost")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad cost: {e}")))?;
                    base.push(BaseEdge { tail, head, cost });
                }
                "lifted" => {
                    let tail: usize = field("tail")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad tail: {e}")))?;
                    let head: usize = field("head")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad head: {e}")))?;
                    let cost: f64 = field("cost")?
                        .parse()
                        .map_err(|e| perr(line_no, format!("bad cost: {e}")))?;
                    lifted.push(LiftedEdge { tail, head, cost });
                }
                _ => return Err(perr(line_no, format!("unknown keyword {kw:?}"))),
            }
            if let Some(extra) = it.next() {
                return Err(perr(line_no, format!("trailing field {extra:?}")));
            }
        }

        let Some(n) = num_nodes else {
            return Err(Error::Parse {
                line: 0,
                msg: "missing nodes header".into(),
            });
        };
        let mut frame_of = Vec::with_capacity(n);
        for (id, f) in frames.iter().enumerate() {
            match f {
                Some(f) => frame_of.push(*f),
                None => {
                    return Err(Error::Invalid(format!("node {id} never declared")));
                }
            }
        }
        Instance::new(frame_of, costs, base, lifted)
    }

    /// Serialize in canonical form; `parse(serialize(i))` reproduces `i`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", self.num_nodes);
        for v in 0..self.num_nodes {
            let _ = writeln!(out, "node {} {} {}", v, self.frame_of[v], self.node_cost[v]);
        }
        for v in 0..self.num_nodes {
            let c = self.base_edges[self.source_edge[v]].cost;
            if c != 0.0 {
                let _ = writeln!(out, "base S {} {}", v, c);
            }
        }
        for v in 0..self.num_nodes {
            let c = self.base_edges[self.sink_edge[v]].cost;
            if c != 0.0 {
                let _ = writeln!(out, "base {} T {}", v, c);
            }
        }
        for (_, u, v, c) in self.inner_base_edges() {
            let _ = writeln!(out, "base {} {} {}", u, v, c);
        }
        for e in &self.lifted_edges {
            let _ = writeln!(out, "lifted {} {} {}", e.tail, e.head, e.cost);
        }
        out
    }
}

/// Transitive closure of the inner base graph, stored as one bitset row per
/// node. The relation is reflexive. Pairs whose frame gap exceeds
/// `max_frame_gap` are dropped (paths may still pass through distant nodes).
#[derive(Debug, Clone)]
pub struct Reachability {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Reachability {
    #[inline]
    pub fn reachable(&self, v: NodeId, w: NodeId) -> bool {
        self.bits[v * self.words + w / 64] >> (w % 64) & 1 == 1
    }

    fn set(&mut self, v: NodeId, w: NodeId) {
        self.bits[v * self.words + w / 64] |= 1 << (w % 64);
    }

    fn clear(&mut self, v: NodeId, w: NodeId) {
        self.bits[v * self.words + w / 64] &= !(1 << (w % 64));
    }

    fn or_row(&mut self, v: NodeId, w: NodeId) {
        let (lo, hi) = (v * self.words, w * self.words);
        for i in 0..self.words {
            let word = self.bits[hi + i];
            self.bits[lo + i] |= word;
        }
    }

    /// Nodes reachable from `v` (excluding `v`), ascending by id.
    pub fn successors(&self, v: NodeId) -> Vec<NodeId> {
        (0..self.n).filter(|&w| w != v && self.reachable(v, w)).collect()
    }
}

/// Reflexive transitive closure over inner nodes, filtered by frame gap.
pub fn compute_reachability(inst: &Instance, max_frame_gap: u32) -> Reachability {
    let n = inst.num_nodes;
    let words = n.div_ceil(64).max(1);
    let mut r = Reachability {
        n,
        words,
        bits: vec![0; n * words],
    };
    let mut order = inst.nodes_by_frame();
    order.reverse();
    for &v in &order {
        r.set(v, v);
        for &eid in &inst.out_edges[v] {
            let w = inst.base_edges[eid].head.node().unwrap();
            r.or_row(v, w);
        }
    }
    if max_frame_gap != u32::MAX {
        for v in 0..n {
            for w in 0..n {
                if v != w
                    && r.reachable(v, w)
                    && inst.frame_of[w] - inst.frame_of[v] > max_frame_gap
                {
                    r.clear(v, w);
                }
            }
        }
    }
    r
}

/// Flags for inner base edges whose endpoints are connected by no other
/// path: on such an edge an active pair forces the edge itself active.
#[derive(Debug, Clone)]
pub struct StrongBaseEdges {
    strong: Vec<bool>,
}

impl StrongBaseEdges {
    pub fn is_strong(&self, edge_id: usize) -> bool {
        self.strong[edge_id]
    }
}

pub fn compute_strong_edges(inst: &Instance, reach: &Reachability) -> StrongBaseEdges {
    let mut strong = vec![false; inst.base_edges.len()];
    for (id, u, v, _) in inst.inner_base_edges() {
        let alternative = inst.out_edges[u].iter().any(|&eid| {
            let x = inst.base_edges[eid].head.node().unwrap();
            x != v && reach.reachable(x, v)
        });
        strong[id] = !alternative;
    }
    StrongBaseEdges { strong }
}
