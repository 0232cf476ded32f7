//! Joint multicast tree routing and branch-state assignment under node
//! (Group Table) and link capacity limits.

pub mod baselines;
pub mod cost;
pub mod error;
pub mod graph;
pub mod instance;
pub mod instgen;
pub mod mtrsa;
pub mod oracle;
pub mod rational;
pub mod solution;
pub mod tree;

pub use cost::{FeasibilityReport, Mode, StateAssignment, Storage};
pub use error::{GenError, MembershipError, OracleError, ParseError, SolveError};
pub use graph::{Capacity, Edge, EdgeId, Network, NodeId, Path};
pub use instance::{Instance, MulticastGroup};
pub use mtrsa::{solve, SolverConfig, Stages};
pub use rational::Rational;
pub use solution::{Solution, SolutionClaims};
pub use tree::TreeRouting;
