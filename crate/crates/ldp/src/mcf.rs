//! Minimal successive-shortest-path min-cost flow for unit-capacity DAGs.
//! Flow is "free": augmentation continues while the cheapest source-sink
//! path has negative cost, which is exactly the optimum when sending
//! nothing costs nothing.

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: u32,
    cost: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    adj: Vec<Vec<Arc>>,
    source: usize,
    sink: usize,
    /// (node, arc index) of every forward arc, in insertion order.
    forward: Vec<(usize, usize)>,
}

impl Network {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Network {
        Network {
            adj: vec![Vec::new(); num_nodes],
            source,
            sink,
            forward: Vec::new(),
        }
    }

    /// Adds a unit-capacity arc; returns its id for flow queries.
    pub fn add_arc(&mut self, from: usize, to: usize, cost: f64) -> usize {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc {
            to,
            rev: rev_from,
            cap: 1,
            cost,
        });
        self.adj[to].push(Arc {
            to: from,
            rev: rev_to,
            cap: 0,
            cost: -cost,
        });
        self.forward.push((from, rev_to));
        self.forward.len() - 1
    }

    pub fn arc_flow(&self, id: usize) -> bool {
        let (v, i) = self.forward[id];
        self.adj[v][i].cap == 0
    }

    pub fn arc_endpoints(&self, id: usize) -> (usize, usize) {
        let (v, i) = self.forward[id];
        (v, self.adj[v][i].to)
    }

    /// Augments one unit along cheapest paths while they have negative
    /// cost. Returns (total cost, units sent). The input graph (ignoring
    /// residual arcs) must be acyclic; label-correcting search handles the
    /// negative costs, and is cheap at the sizes we solve.
    pub fn solve_free_flow(&mut self) -> (f64, u32) {
        let n = self.adj.len();
        let mut total = 0.0;
        let mut units = 0;
        loop {
            // Bellman-Ford style relaxation over the residual graph.
            let mut dist = vec![f64::INFINITY; n];
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            dist[self.source] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for v in 0..n {
                    if !dist[v].is_finite() {
                        continue;
                    }
                    for (i, a) in self.adj[v].iter().enumerate() {
                        if a.cap > 0 && dist[v] + a.cost < dist[a.to] - 1e-15 {
                            dist[a.to] = dist[v] + a.cost;
                            prev[a.to] = Some((v, i));
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[self.sink] >= -1e-12 {
                break;
            }
            total += dist[self.sink];
            units += 1;
            let mut v = self.sink;
            while v != self.source {
                let (u, i) = prev[v].expect("augmenting path is connected");
                let rev = self.adj[u][i].rev;
                self.adj[u][i].cap -= 1;
                self.adj[v][rev].cap += 1;
                v = u;
            }
        }
        (total, units)
    }

    /// Feasible potentials for the solved network: every residual arc
    /// `(x, y)` satisfies `pi[y] <= pi[x] + cost`, with source and sink
    /// pinned to zero. Relaxation starts from both terminals; at a free-
    /// flow optimum no negative residual path connects them in either
    /// direction, so the pins stay valid.
    pub fn potentials(&self) -> Vec<f64> {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[self.source] = 0.0;
        dist[self.sink] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for v in 0..n {
                if !dist[v].is_finite() {
                    continue;
                }
                for a in &self.adj[v] {
                    if a.cap > 0 && dist[v] + a.cost < dist[a.to] - 1e-12 {
                        dist[a.to] = dist[v] + a.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        debug_assert!(dist[self.source].abs() < 1e-9);
        debug_assert!(dist[self.sink].abs() < 1e-9);
        for d in dist.iter_mut() {
            if !d.is_finite() {
                *d = 0.0;
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheapest_disjoint_paths() {
        // source 0, sink 1, two parallel two-arc routes via 2 and 3.
        let mut net = Network::new(4, 0, 1);
        let a = net.add_arc(0, 2, -1.0);
        net.add_arc(2, 1, -1.0);
        let b = net.add_arc(0, 3, 0.5);
        net.add_arc(3, 1, -1.0);
        let (cost, units) = net.solve_free_flow();
        assert_eq!(units, 2);
        assert!((cost - -2.5).abs() < 1e-12);
        assert!(net.arc_flow(a) && net.arc_flow(b));
    }

    #[test]
    fn stops_at_nonnegative_paths() {
        let mut net = Network::new(3, 0, 1);
        net.add_arc(0, 2, 1.0);
        net.add_arc(2, 1, 0.5);
        let (cost, units) = net.solve_free_flow();
        assert_eq!(units, 0);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn reroutes_through_residual_arcs() {
        // Greedy first path 0-2-3-1 must be partially undone so both
        // units fit: optimum is 0-2-1 plus 0-3-1.
        let mut net = Network::new(4, 0, 1);
        net.add_arc(0, 2, 0.0);
        net.add_arc(0, 3, 0.0);
        net.add_arc(2, 1, -10.0);
        net.add_arc(3, 1, -2.0);
        net.add_arc(2, 3, -9.0);
        let (cost, units) = net.solve_free_flow();
        assert_eq!(units, 2);
        assert!((cost - -12.0).abs() < 1e-12);
    }
}
