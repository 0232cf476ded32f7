//! Experiment harness behind the `smte` binary: algorithm dispatch,
//! parameter sweeps, and the subcommand implementations.

pub mod commands;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smte_core::baselines::{solve_spt, solve_steiner};
use smte_core::oracle::{solve_exact, OracleBudgets};
use smte_core::{MulticastGroup, Network, OracleError, Solution, SolveError, SolverConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const MISMATCH: i32 = 3;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mtrsa,
    Spt,
    St,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mtrsa => "mtrsa",
            Algorithm::Spt => "spt",
            Algorithm::St => "st",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true).map_err(|_| format!("unknown algorithm `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl RunError {
    /// No solution exists, as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            RunError::Solve(SolveError::Unreachable { .. })
                | RunError::Oracle(OracleError::Infeasible | OracleError::Unreachable(_))
        ) || matches!(self, RunError::Oracle(OracleError::Solve(SolveError::Unreachable { .. })))
    }
}

/// Runs one algorithm. `config.seed` seeds the baselines' random choices.
pub fn run_algorithm(
    algo: Algorithm,
    net: &Network,
    groups: &[MulticastGroup],
    config: &SolverConfig,
    budgets: OracleBudgets,
) -> Result<Solution, RunError> {
    Ok(match algo {
        Algorithm::Mtrsa => smte_core::solve(net, groups, config)?,
        Algorithm::Spt => solve_spt(net, groups, config)?,
        Algorithm::St => solve_steiner(net, groups, config)?,
        Algorithm::Oracle => solve_exact(net, groups, config.mode, config.storage(), budgets)?,
    })
}

/// Worker count from `SMTE_WORKERS`; unset or invalid means all cores.
pub fn worker_count() -> usize {
    std::env::var("SMTE_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
