//! Path subproblems. A factor couples a lifted edge `vw` with one concrete
//! v-w walk whose segments are base or lifted edges. Any lifted edge — and
//! any base edge whose endpoints admit no alternative route — can only be
//! inactive if at least one other edge of the walk is inactive too, so a
//! single expensive edge on an otherwise cheap walk yields a nonzero dual
//! improvement.

use crate::instance::NodeId;

#[derive(Debug, Clone)]
pub struct PathEdge {
    pub edge_id: usize,
    pub tail: NodeId,
    pub head: NodeId,
    pub lifted: bool,
    /// For base edges: no other path connects the endpoints.
    pub strong: bool,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct PathFactor {
    pub endpoints: (NodeId, NodeId),
    /// Walk segments in order; `edges[k].head == edges[k+1].tail`.
    pub edges: Vec<PathEdge>,
    pub closing_edge_id: usize,
    pub closing_theta: f64,
}

/// Variable index inside a path factor: `0..edges.len()` are the walk
/// segments, `edges.len()` is the closing lifted edge.
pub type PathVar = usize;

impl PathFactor {
    pub fn new(
        endpoints: (NodeId, NodeId),
        edges: Vec<PathEdge>,
        closing_edge_id: usize,
        closing_theta: f64,
    ) -> PathFactor {
        assert!(!edges.is_empty());
        assert_eq!(edges[0].tail, endpoints.0);
        assert_eq!(edges.last().unwrap().head, endpoints.1);
        for w in edges.windows(2) {
            assert_eq!(w[0].head, w[1].tail);
        }
        PathFactor {
            endpoints,
            edges,
            closing_edge_id,
            closing_theta,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn closing_var(&self) -> PathVar {
        self.edges.len()
    }

    /// Nodes of the walk, endpoints included.
    pub fn walk_nodes(&self) -> Vec<NodeId> {
        let mut nodes = vec![self.endpoints.0];
        nodes.extend(self.edges.iter().map(|e| e.head));
        nodes
    }

    fn thetas(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.edges.iter().map(|e| e.theta).collect();
        t.push(self.closing_theta);
        t
    }

    /// True for variables that may only switch off in company: lifted
    /// edges, strong base edges and the closing edge.
    fn constrained(&self) -> Vec<bool> {
        let mut c: Vec<bool> = self.edges.iter().map(|e| e.lifted || e.strong).collect();
        c.push(true);
        c
    }

    pub fn theta_of(&self, var: PathVar) -> f64 {
        if var == self.closing_var() {
            self.closing_theta
        } else {
            self.edges[var].theta
        }
    }

    pub fn add_theta(&mut self, var: PathVar, delta: f64) {
        if var == self.closing_var() {
            self.closing_theta += delta;
        } else {
            self.edges[var].theta += delta;
        }
    }

    fn optimize_costs(theta: &[f64], constrained: &[bool]) -> f64 {
        let mut positives = theta.iter().enumerate().filter(|(_, &t)| t > 0.0);
        let neg_sum: f64 = theta.iter().map(|&t| t.min(0.0)).sum();
        let (first_pos, second_pos) = (positives.next(), positives.next());
        match (first_pos, second_pos) {
            (Some((k, &beta)), None) if constrained[k] => {
                // All edges on except one positive locked edge: it stays
                // active unless switching off a companion is cheaper.
                let alpha = theta
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .map(|(_, &t)| t.abs())
                    .fold(f64::INFINITY, f64::min);
                if alpha < beta {
                    neg_sum + alpha
                } else {
                    neg_sum + beta
                }
            }
            _ => neg_sum,
        }
    }

    pub fn optimize(&self) -> f64 {
        Self::optimize_costs(&self.thetas(), &self.constrained())
    }

    /// Optimum with one variable clamped, via a cost surcharge larger than
    /// any achievable swing.
    pub fn optimize_constrained(&self, var: PathVar, value: bool) -> f64 {
        let mut theta = self.thetas();
        let constrained = self.constrained();
        let m = 1.0 + theta.iter().map(|t| t.abs()).sum::<f64>();
        if value {
            theta[var] -= m;
            Self::optimize_costs(&theta, &constrained) + m
        } else {
            theta[var] += m;
            Self::optimize_costs(&theta, &constrained)
        }
    }

    pub fn min_marginal(&self, var: PathVar) -> f64 {
        self.optimize_constrained(var, true) - self.optimize_constrained(var, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_edge_path(closing: f64) -> PathFactor {
        let edges = vec![
            PathEdge {
                edge_id: 10,
                tail: 0,
                head: 1,
                lifted: false,
                strong: true,
                theta: -1.0,
            },
            PathEdge {
                edge_id: 11,
                tail: 1,
                head: 2,
                lifted: false,
                strong: true,
                theta: -1.0,
            },
        ];
        PathFactor::new((0, 2), edges, 5, closing)
    }

    #[test]
    fn positive_closing_kept_when_expensive_to_drop() {
        // Dropping the +0.5 closing edge costs one |−1| companion.
        let f = two_edge_path(0.5);
        assert!((f.optimize() - -1.5).abs() < 1e-12);
    }

    #[test]
    fn positive_closing_dropped_with_companion() {
        let f = two_edge_path(2.0);
        assert!((f.optimize() - -1.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_of_closing() {
        let f = two_edge_path(0.5);
        // on: all active = -1.5; off: drop closing + one companion = -1.0.
        assert!((f.min_marginal(f.closing_var()) - -0.5).abs() < 1e-12);
    }
}
