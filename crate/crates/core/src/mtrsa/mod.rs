//! The multi-tree routing and state assignment algorithm.
//!
//! Phase 1 builds a shortest-path tree per group and moves branches away
//! from overloaded nodes; phase 2 assigns branch states greedily and then
//! improves the result by local search.

mod assign;
mod knapsack;
mod local_search;
mod membership;
mod routing;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub use assign::{greedy_assign, greedy_extend};
pub use knapsack::{knapsack, KnapsackItem};
pub use local_search::{local_search, LocalSearchStats};
pub use membership::{member_join, member_leave, LeaveOutcome};
pub use routing::{
    build_spt, reroute_overloaded, residual_capacity, segment_below, segment_through, LoadStatus, NodeLoadLedger,
    RerouteStats, Segment,
};

use crate::cost::{self, Mode, StateAssignment, Storage};
use crate::error::SolveError;
use crate::graph::Network;
use crate::instance::MulticastGroup;
use crate::rational::{self, Rational};
use crate::solution::Solution;
use crate::tree::TreeRouting;

/// Which parts of the algorithm run; everything is on by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stages {
    pub reroute: bool,
    pub greedy: bool,
    pub reassign: bool,
    pub local_reroute: bool,
    pub link_repair: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self { reroute: true, greedy: true, reassign: true, local_reroute: true, link_repair: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: Mode,
    /// Storage accounting; `None` picks the mode's default.
    pub storage: Option<Storage>,
    pub max_reroute_passes: usize,
    /// Precision of the knapsack approximation used when exact DP is too big.
    #[serde(with = "rational::serde_text")]
    pub knapsack_epsilon: Rational,
    /// Only the baselines draw random numbers.
    pub seed: u64,
    pub stages: Stages,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SmteN,
            storage: None,
            max_reroute_passes: 8,
            knapsack_epsilon: Rational::new(1, 10),
            seed: 0,
            stages: Stages::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn storage(&self) -> Storage {
        self.storage.unwrap_or(self.mode.default_storage())
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.max_reroute_passes == 0 {
            return Err(SolveError::Config("max_reroute_passes must be at least 1".into()));
        }
        if self.knapsack_epsilon <= Rational::zero() || self.knapsack_epsilon > Rational::one() {
            return Err(SolveError::Config(format!(
                "knapsack_epsilon must lie in (0, 1], got {}",
                rational::format(&self.knapsack_epsilon)
            )));
        }
        Ok(())
    }
}

/// Phase 1 only: one tree per group, in input order.
///
/// In link mode the trees are built one at a time in ascending rate order
/// (ties by input position), each on the graph left after removing edges
/// whose remaining capacity cannot carry the group's rate.
pub fn route_groups(net: &Network, groups: &[MulticastGroup], mode: Mode) -> Result<Vec<TreeRouting>, SolveError> {
    if !mode.checks_links() {
        return groups.iter().map(|g| build_spt(net, g, None)).collect();
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| groups[a].rate.cmp(&groups[b].rate).then(a.cmp(&b)));
    let mut flow = vec![Rational::zero(); net.edge_count()];
    let mut out: Vec<Option<TreeRouting>> = vec![None; groups.len()];
    for i in order {
        let residual = residual_capacity(net, &flow);
        let tree = build_spt(net, &groups[i], Some(&residual))?;
        for (p, c) in tree.edges() {
            flow[net.find_edge(p, c).expect("tree edge").index()] += groups[i].rate;
        }
        out[i] = Some(tree);
    }
    Ok(out.into_iter().map(|t| t.expect("every group routed")).collect())
}

/// Runs both phases and returns a solution with recomputed cost and
/// feasibility report. Deterministic for a given instance and config.
pub fn solve(net: &Network, groups: &[MulticastGroup], config: &SolverConfig) -> Result<Solution, SolveError> {
    config.validate()?;
    let storage = config.storage();
    let mut trees = route_groups(net, groups, config.mode)?;
    if config.stages.reroute {
        let stats = reroute_overloaded(net, groups, &mut trees, config);
        log::debug!("phase 1: {} moves in {} passes, {} overloaded left", stats.moves, stats.passes, stats.remaining_overloaded);
    }
    let mut assignment =
        if config.stages.greedy { greedy_assign(net, groups, &trees, storage) } else { StateAssignment::empty(trees.len()) };
    let stats = local_search(net, groups, &mut trees, &mut assignment, config);
    log::debug!("phase 2: {stats:?}");
    debug_assert!(cost::node_usage(net, &trees, &assignment, storage)
        .iter()
        .zip(net.nodes())
        .all(|(&used, u)| used <= net.node_capacity(u)));
    Ok(Solution::assemble(net, "mtrsa", config.mode, storage, groups.to_vec(), trees, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Capacity, NodeId};
    use crate::rational::int;

    /// s → {d1, d2} through relay a (cost 1 each) or relay b.
    pub(crate) fn tiny1(b_a: u64) -> (Network, Vec<MulticastGroup>) {
        let mut net = Network::new();
        let s = net.add_node("s", 0).unwrap();
        let a = net.add_node("a", b_a).unwrap();
        let b = net.add_node("b", 0).unwrap();
        let d1 = net.add_node("d1", 0).unwrap();
        let d2 = net.add_node("d2", 0).unwrap();
        for (t, h) in [(s, a), (s, b), (a, d1), (a, d2), (b, d1), (b, d2)] {
            net.add_edge(t, h, int(1), Capacity::Unbounded).unwrap();
        }
        (net, vec![MulticastGroup::new(0, s, [d1, d2], int(1))])
    }

    #[test]
    fn tiny1_costs() {
        let (net, groups) = tiny1(1);
        let sol = solve(&net, &groups, &SolverConfig::default()).unwrap();
        assert_eq!(sol.total_cost, int(3));
        assert!(sol.is_feasible());
        let (net, groups) = tiny1(0);
        assert_eq!(solve(&net, &groups, &SolverConfig::default()).unwrap().total_cost, int(4));
    }

    #[test]
    fn config_is_checked() {
        let (net, groups) = tiny1(1);
        let mut c = SolverConfig::default();
        c.max_reroute_passes = 0;
        assert!(matches!(solve(&net, &groups, &c), Err(SolveError::Config(_))));
        let mut c = SolverConfig::default();
        c.knapsack_epsilon = int(2);
        assert!(matches!(solve(&net, &groups, &c), Err(SolveError::Config(_))));
    }

    #[test]
    fn link_mode_routes_low_rates_first_on_residual() {
        // Two routes s→x→d and s→y→d; s→x fits only one of the two groups.
        let mut net = Network::new();
        let s = net.add_node("s", 0).unwrap();
        let x = net.add_node("x", 0).unwrap();
        let y = net.add_node("y", 0).unwrap();
        let d = net.add_node("d", 0).unwrap();
        net.add_edge(s, x, int(1), Capacity::Finite(int(2))).unwrap();
        net.add_edge(x, d, int(1), Capacity::Unbounded).unwrap();
        net.add_edge(s, y, int(2), Capacity::Unbounded).unwrap();
        net.add_edge(y, d, int(2), Capacity::Unbounded).unwrap();
        let groups = vec![MulticastGroup::new(7, s, [d], int(2)), MulticastGroup::new(3, s, [d], int(1))];
        let trees = route_groups(&net, &groups, Mode::Smte).unwrap();
        // The rate-1 group goes first and takes the cheap route.
        assert_eq!(trees[1].parent(d), Some(x));
        assert_eq!(trees[0].parent(d), Some(y));
        let sol = solve(&net, &groups, &SolverConfig::new(Mode::Smte)).unwrap();
        assert!(sol.is_feasible());
        assert_eq!(sol.total_cost, int(2 * 4 + 2));
        // Node mode ignores the link and shares the cheap route.
        let trees = route_groups(&net, &groups, Mode::SmteN).unwrap();
        assert_eq!(trees[0].parent(d), Some(x));
    }

    #[test]
    fn residual_disconnect_names_group() {
        let mut net = Network::new();
        let s = net.add_node("s", 0).unwrap();
        let d = net.add_node("d", 0).unwrap();
        net.add_edge(s, d, int(1), Capacity::Finite(int(1))).unwrap();
        let groups = vec![MulticastGroup::new(0, s, [d], int(1)), MulticastGroup::new(5, s, [d], int(1))];
        let err = solve(&net, &groups, &SolverConfig::new(Mode::Smte)).unwrap_err();
        assert_eq!(err, SolveError::Unreachable { group: 5, destination: NodeId(1) });
    }

    #[test]
    fn deterministic() {
        let (net, groups) = tiny1(1);
        let a = solve(&net, &groups, &SolverConfig::default()).unwrap();
        let b = solve(&net, &groups, &SolverConfig::default()).unwrap();
        assert_eq!(a.to_json(&net), b.to_json(&net));
    }
}
