//! Incremental joins and leaves on an existing solution. Only the affected
//! tree is touched: a join grafts one path, a leave trims the dangling
//! chain, and the greedy stage is re-run over that tree alone.

use std::collections::BTreeSet;

use num_traits::Zero;

use super::assign::greedy_extend;
use crate::cost::{self, is_branch_node};
use crate::error::MembershipError;
use crate::graph::{self, EdgeId, Network, NodeId};
use crate::rational::Rational;
use crate::solution::Solution;
use crate::tree::TreeRouting;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeaveOutcome {
    pub solution: Solution,
    /// Set when the node was not a member and nothing changed.
    pub warning: Option<String>,
}

fn tree_of(solution: &Solution, group: u32) -> Result<usize, MembershipError> {
    solution.tree_index(group).ok_or(MembershipError::UnknownGroup(group))
}

/// Drops states at nodes that stopped being branch nodes, then tops up
/// tree `i` greedily.
fn settle(net: &Network, sol: &mut Solution, i: usize) {
    let tree = &sol.trees[i];
    let keep: BTreeSet<NodeId> = sol.assignment.tree(i).iter().copied().filter(|&u| is_branch_node(tree, u)).collect();
    sol.assignment.states[i] = keep;
    greedy_extend(net, &sol.groups, &sol.trees, sol.storage, &mut sol.assignment, Some(&[i]));
    sol.refresh(net);
}

/// Edges whose flow rose above capacity between `before` and `after`.
fn new_link_violations(net: &Network, before: &Solution, after: &Solution) -> bool {
    if !after.mode.checks_links() {
        return false;
    }
    let old: BTreeSet<EdgeId> = before.report.edge_violations.iter().map(|v| v.edge).collect();
    after.report.edge_violations.iter().any(|v| !old.contains(&v.edge)) || {
        // Already-violated edges must not get worse.
        let flow_before = cost::edge_loads(net, &before.trees, &before.groups, &before.assignment);
        let flow_after = cost::edge_loads(net, &after.trees, &after.groups, &after.assignment);
        old.iter().any(|e| flow_after[e.index()].flow > flow_before[e.index()].flow)
    }
}

/// Adds `node` to the group. An on-tree node is only marked; otherwise the
/// cheapest graft (after re-assigning the tree's states) from any on-tree
/// node over off-tree nodes is taken, ties by the attaching node's id.
pub fn member_join(net: &Network, solution: &Solution, group: u32, node: NodeId) -> Result<Solution, MembershipError> {
    let i = tree_of(solution, group)?;
    let tree = &solution.trees[i];
    if node == tree.root() {
        return Err(MembershipError::SourceMember { group, node });
    }
    if !net.contains(node) {
        return Err(MembershipError::JoinRejected { group, node });
    }
    if tree.is_destination(node) {
        return Ok(solution.clone());
    }
    let with_member = |sol: &mut Solution, t: TreeRouting| {
        sol.trees[i] = t;
        sol.groups[i].destinations.insert(node);
    };
    if tree.contains(node) {
        let mut sol = solution.clone();
        let mut t = tree.clone();
        t.add_destination(node);
        with_member(&mut sol, t);
        settle(net, &mut sol, i);
        if new_link_violations(net, solution, &sol) {
            return Err(MembershipError::JoinRejected { group, node });
        }
        return Ok(sol);
    }
    let rate = solution.groups[i].rate;
    let flow = cost::edge_loads(net, &solution.trees, &solution.groups, &solution.assignment);
    let links = solution.mode.checks_links();
    let edge_ok = |e: EdgeId| {
        !links || net.edge(e).capacity.residual(&flow[e.index()].flow).is_none_or(|r| r >= rate)
    };
    let dist = graph::costs_to(net, node, &|x| !tree.contains(x), &edge_ok);
    let mut best: Option<(Rational, NodeId, Solution)> = None;
    for w in tree.nodes() {
        if dist[w.index()].is_none() {
            continue;
        }
        let path = graph::shortest_path_filtered(net, w, node, &|x| !tree.contains(x), &edge_ok)
            .expect("reverse search found a path");
        let mut t = tree.clone();
        t.attach_path(&path.nodes);
        t.add_destination(node);
        let mut sol = solution.clone();
        with_member(&mut sol, t);
        settle(net, &mut sol, i);
        if new_link_violations(net, solution, &sol) {
            continue;
        }
        let c = sol.total_cost;
        if best.as_ref().is_none_or(|(bc, bw, _)| (c, w) < (*bc, *bw)) {
            best = Some((c, w, sol));
        }
    }
    best.map(|(_, _, s)| s).ok_or(MembershipError::JoinRejected { group, node })
}

/// Removes `node` from the group, trimming the branch that only served it.
pub fn member_leave(
    net: &Network,
    solution: &Solution,
    group: u32,
    node: NodeId,
) -> Result<LeaveOutcome, MembershipError> {
    let i = tree_of(solution, group)?;
    if !solution.trees[i].is_destination(node) {
        return Ok(LeaveOutcome {
            solution: solution.clone(),
            warning: Some(format!("node {} is not a member of group {group}", net.label(node))),
        });
    }
    let mut sol = solution.clone();
    sol.trees[i].remove_destination(node);
    sol.groups[i].destinations.remove(&node);
    settle(net, &mut sol, i);
    debug_assert!(sol.report.structural.is_empty());
    debug_assert!(sol.total_cost >= Rational::zero());
    Ok(LeaveOutcome { solution: sol, warning: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Capacity;
    use crate::instance::MulticastGroup;
    use crate::mtrsa::{solve, SolverConfig};
    use crate::rational::int;

    /// s → a → {d1, d2}; a → x → y; x is one hop from the tree.
    fn base() -> (Network, Solution) {
        let mut net = Network::new();
        let s = net.add_node("s", 0).unwrap();
        let a = net.add_node("a", 1).unwrap();
        let d1 = net.add_node("d1", 1).unwrap();
        let d2 = net.add_node("d2", 1).unwrap();
        let x = net.add_node("x", 1).unwrap();
        let y = net.add_node("y", 1).unwrap();
        net.add_edge(s, a, int(4), Capacity::Unbounded).unwrap();
        net.add_edge(a, d1, int(1), Capacity::Unbounded).unwrap();
        net.add_edge(a, d2, int(1), Capacity::Unbounded).unwrap();
        net.add_edge(d2, x, int(1), Capacity::Unbounded).unwrap();
        net.add_edge(x, y, int(1), Capacity::Unbounded).unwrap();
        let groups = vec![MulticastGroup::new(3, s, [d1, d2], int(1))];
        let sol = solve(&net, &groups, &SolverConfig::default()).unwrap();
        (net, sol)
    }

    #[test]
    fn join_existing_member_is_identity() {
        let (net, sol) = base();
        let d1 = net.node_by_label("d1").unwrap();
        assert_eq!(member_join(&net, &sol, 3, d1).unwrap(), sol);
    }

    #[test]
    fn join_grafts_exactly_the_path() {
        let (net, sol) = base();
        let y = net.node_by_label("y").unwrap();
        let after = member_join(&net, &sol, 3, y).unwrap();
        let added: BTreeSet<_> = after.trees[0].edge_set().difference(&sol.trees[0].edge_set()).copied().collect();
        let [d2, x] = ["d2", "x"].map(|l| net.node_by_label(l).unwrap());
        assert_eq!(added, BTreeSet::from([(d2, x), (x, y)]));
        assert!(after.is_feasible());
        // Graft cost 2, plus a second copy over a → d2: d2 now relays for y
        // and, not being a branch node, holds no state.
        assert_eq!(after.total_cost, sol.total_cost + int(2) + int(1));
    }

    #[test]
    fn errors() {
        let (net, sol) = base();
        let s = net.node_by_label("s").unwrap();
        assert_eq!(member_join(&net, &sol, 9, s), Err(MembershipError::UnknownGroup(9)));
        assert_eq!(member_join(&net, &sol, 3, s), Err(MembershipError::SourceMember { group: 3, node: s }));
        // Nothing leads back to s.
        let mut net2 = net.clone();
        let z = net2.add_node("z", 0).unwrap();
        assert_eq!(member_join(&net2, &sol, 3, z), Err(MembershipError::JoinRejected { group: 3, node: z }));
    }

    #[test]
    fn leave_prunes_and_round_trips() {
        let (net, sol) = base();
        let y = net.node_by_label("y").unwrap();
        let joined = member_join(&net, &sol, 3, y).unwrap();
        let left = member_leave(&net, &joined, 3, y).unwrap();
        assert_eq!(left.warning, None);
        assert_eq!(left.solution.trees, sol.trees);
        assert_eq!(left.solution.total_cost, sol.total_cost);
        let again = member_join(&net, &left.solution, 3, y).unwrap();
        assert_eq!(again.total_cost, joined.total_cost);
    }

    #[test]
    fn leave_of_non_member_warns() {
        let (net, sol) = base();
        let x = net.node_by_label("x").unwrap();
        let out = member_leave(&net, &sol, 3, x).unwrap();
        assert!(out.warning.is_some());
        assert_eq!(out.solution, sol);
    }

    #[test]
    fn leave_of_relay_keeps_edges() {
        let (net, sol) = base();
        let y = net.node_by_label("y").unwrap();
        let d2 = net.node_by_label("d2").unwrap();
        let joined = member_join(&net, &sol, 3, y).unwrap();
        let left = member_leave(&net, &joined, 3, d2).unwrap().solution;
        assert_eq!(left.trees[0].edge_set(), joined.trees[0].edge_set());
        assert!(left.total_cost <= joined.total_cost);
    }

    #[test]
    fn join_at_full_node_tunnels() {
        // a can hold one state and already holds one for group 0; group 1's
        // new member makes a a branch node without a state.
        let mut net = Network::new();
        let s = net.add_node("s", 0).unwrap();
        let a = net.add_node("a", 1).unwrap();
        let d: Vec<NodeId> = (0..3).map(|k| net.add_node(format!("d{k}"), 0).unwrap()).collect();
        net.add_edge(s, a, int(5), Capacity::Unbounded).unwrap();
        for &x in &d {
            net.add_edge(a, x, int(1), Capacity::Unbounded).unwrap();
        }
        let groups = vec![MulticastGroup::new(0, s, [d[0], d[1]], int(1)), MulticastGroup::new(1, s, [d[2]], int(1))];
        let sol = solve(&net, &groups, &SolverConfig::default()).unwrap();
        assert!(sol.assignment.contains(0, a));
        let after = member_join(&net, &sol, 1, d[0]).unwrap();
        assert!(!after.assignment.contains(1, a));
        let eps = cost::edge_transmissions(&after.trees[1], after.assignment.tree(1));
        assert_eq!(eps[&(s, a)], 2);
        // One new edge plus a second copy of the s → a segment.
        assert_eq!(after.total_cost - sol.total_cost, int(1) + int(5));
    }
}
