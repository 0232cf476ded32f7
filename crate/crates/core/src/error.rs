use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid number `{0}`")]
    Number(String),
    #[error("malformed xml: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("line {line}: {msg}")]
    Topology { line: u32, msg: String },
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("invalid solution: {0}")]
    Solution(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("cnf line {line}: {msg}")]
    Cnf { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("group {group}: destination {destination} is unreachable")]
    Unreachable { group: u32, destination: NodeId },
    #[error("group {group}: {reason}")]
    InvalidGroup { group: u32, reason: String },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

impl SolveError {
    /// The offending group, if the error concerns one.
    pub fn group(&self) -> Option<u32> {
        match self {
            SolveError::Unreachable { group, .. } | SolveError::InvalidGroup { group, .. } => Some(*group),
            SolveError::Config(_) => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what} is {actual}, above the enumeration budget of {limit}")]
    Budget { what: &'static str, limit: usize, actual: usize },
    #[error("no feasible solution exists")]
    Infeasible,
    #[error("group {0}: a destination is unreachable")]
    Unreachable(u32),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MembershipError {
    #[error("no group with id {0}")]
    UnknownGroup(u32),
    #[error("group {group}: no feasible graft path reaches node {node}")]
    JoinRejected { group: u32, node: NodeId },
    #[error("group {group}: node {node} is the source")]
    SourceMember { group: u32, node: NodeId },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("need {need} distinct nodes but the network has {have}")]
    TooFewNodes { need: usize, have: usize },
    #[error("clause {clause} has {len} literals, expected 3")]
    MalformedClause { clause: usize, len: usize },
    #[error("clause {clause} references variable {var} outside 1..={n}")]
    UnknownVariable { clause: usize, var: u32, n: u32 },
    #[error("{0}")]
    Parameter(String),
}
