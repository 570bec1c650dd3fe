//! Approximate solver for the lifted disjoint paths problem.
//!
//! The input is a time-ordered graph of detections with three cost layers:
//! per-node costs, base edges (direct transitions a trajectory may take) and
//! lifted edges (long-range pairwise costs paid whenever both endpoints land
//! on the same trajectory). The solver searches for node-disjoint
//! source-sink paths of minimum total cost and certifies the result with a
//! dual lower bound obtained from a Lagrange decomposition into per-node
//! inflow/outflow subproblems, optionally tightened with path and cut
//! subproblems found by separation.
//!
//! ```
//! use ldp::instance::Instance;
//! use ldp::solver::{run, SolverConfig};
//!
//! let inst = Instance::parse(
//!     "nodes 3\n\
//!      node 0 1 0\nnode 1 2 0\nnode 2 3 0\n\
//!      base 0 1 -1\nbase 1 2 0.5\n\
//!      lifted 0 2 -1\n",
//! )
//! .unwrap();
//! let report = run(&inst, &SolverConfig::default());
//! assert!((report.solution.objective - -1.5).abs() < 1e-9);
//! assert!(report.lower_bound <= report.solution.objective + 1e-9);
//! ```

pub mod cut_factor;
pub mod decomposition;
pub mod error;
pub mod instance;
pub mod interval;
pub mod flow;
pub mod generate;
pub mod mcf;
pub mod oracle;
pub mod path_factor;
pub mod primal;
pub mod separation;
pub mod solver;

pub use error::{Error, Result};
