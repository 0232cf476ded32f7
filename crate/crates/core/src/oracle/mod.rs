//! Exact solutions for tiny instances by exhaustive search, and export of
//! the integer program for use with an external solver.

mod ip;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

pub use ip::{evaluate_lp, export_ip, incumbent_values, ip_epsilon, ip_objective, LpCheck};

use crate::cost::{self, is_branch_node, Mode, StateAssignment, Storage};
use crate::error::OracleError;
use crate::graph::{EdgeId, Network, NodeId};
use crate::instance::MulticastGroup;
use crate::rational::{int, Rational};
use crate::solution::Solution;
use crate::tree::TreeRouting;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudgets {
    /// Largest network the tree enumeration accepts.
    pub nodes: usize,
    /// Largest `Σ_i |W_i|` the assignment search accepts.
    pub states: usize,
    /// Largest number of tree combinations tried.
    pub combinations: usize,
}

impl Default for OracleBudgets {
    fn default() -> Self {
        Self { nodes: 10, states: 16, combinations: 2_000_000 }
    }
}

/// Every inclusion-minimal arborescence rooted at the source that reaches
/// all destinations (each leaf is a destination), ordered by edge set.
///
/// The smallest destination not yet in the partial tree is joined by each
/// simple path that starts on the tree and otherwise avoids it, in turn. A
/// minimal tree is the union of its root paths, so it arises from exactly
/// one sequence of such choices.
pub fn enumerate_trees(net: &Network, group: &MulticastGroup, node_budget: usize) -> Result<Vec<TreeRouting>, OracleError> {
    if net.node_count() > node_budget {
        return Err(OracleError::Budget { what: "node count", limit: node_budget, actual: net.node_count() });
    }
    let mut search = TreeSearch {
        net,
        group,
        parent: vec![None; net.node_count()],
        in_tree: vec![false; net.node_count()],
        on_path: vec![false; net.node_count()],
        found: BTreeMap::new(),
    };
    search.in_tree[group.source.index()] = true;
    search.run();
    Ok(search.found.into_values().collect())
}

struct TreeSearch<'a> {
    net: &'a Network,
    group: &'a MulticastGroup,
    parent: Vec<Option<NodeId>>,
    in_tree: Vec<bool>,
    on_path: Vec<bool>,
    found: BTreeMap<Vec<(NodeId, NodeId)>, TreeRouting>,
}

impl TreeSearch<'_> {
    fn record(&mut self) {
        let parents = self.net.nodes().filter_map(|u| self.parent[u.index()].map(|p| (u, p)));
        let t = TreeRouting::from_parents(self.group.id, self.group.source, self.group.destinations.iter().copied(), parents)
            .expect("search builds an arborescence");
        debug_assert!(t.leaves().all(|x| t.is_destination(x)));
        let key: Vec<(NodeId, NodeId)> = t.edge_set().into_iter().collect();
        self.found.entry(key).or_insert(t);
    }

    fn run(&mut self) {
        let Some(&d) = self.group.destinations.iter().find(|d| !self.in_tree[d.index()]) else {
            self.record();
            return;
        };
        self.on_path[d.index()] = true;
        let mut chain = vec![d];
        self.extend_back(&mut chain);
        self.on_path[d.index()] = false;
    }

    /// `chain` runs from an off-tree node (its first element) down to the
    /// destination being joined; grows it backwards until it meets the tree.
    fn extend_back(&mut self, chain: &mut Vec<NodeId>) {
        let head = *chain.last().unwrap();
        for &e in self.net.in_edges(head) {
            let p = self.net.edge(e).tail;
            if self.in_tree[p.index()] {
                // Attach chain (reversed) below p.
                let mut prev = p;
                for &x in chain.iter().rev() {
                    self.parent[x.index()] = Some(prev);
                    self.in_tree[x.index()] = true;
                    prev = x;
                }
                self.run();
                for &x in chain.iter() {
                    self.parent[x.index()] = None;
                    self.in_tree[x.index()] = false;
                }
            } else if !self.on_path[p.index()] {
                self.on_path[p.index()] = true;
                chain.push(p);
                self.extend_back(chain);
                chain.pop();
                self.on_path[p.index()] = false;
            }
        }
    }
}

/// Cheapest feasible state assignment on fixed trees, by trying every
/// subset of `(tree, branch node)` pairs. `None` if no subset is feasible
/// (only possible in link mode). Ties go to the first subset in
/// enumeration order, which favours fewer states on earlier trees.
pub fn optimal_assignment(
    net: &Network,
    groups: &[MulticastGroup],
    trees: &[TreeRouting],
    mode: Mode,
    storage: Storage,
    state_budget: usize,
) -> Result<Option<(StateAssignment, Rational)>, OracleError> {
    let cands: Vec<(usize, NodeId)> =
        trees.iter().enumerate().flat_map(|(i, t)| cost::branch_nodes(t).into_iter().map(move |u| (i, u))).collect();
    if cands.len() > state_budget {
        return Err(OracleError::Budget { what: "candidate state count", limit: state_budget, actual: cands.len() });
    }
    let weights: Vec<u64> = cands.iter().map(|&(i, u)| cost::storage_weight(&trees[i], u, storage)).collect();
    let mut best: Option<(StateAssignment, Rational)> = None;
    let mut usage = vec![0u64; net.node_count()];
    'mask: for mask in 0u32..(1u32 << cands.len()) {
        usage.iter_mut().for_each(|x| *x = 0);
        let mut a = StateAssignment::empty(trees.len());
        for (k, &(i, u)) in cands.iter().enumerate() {
            if mask >> k & 1 == 1 {
                usage[u.index()] += weights[k];
                if usage[u.index()] > net.node_capacity(u) {
                    continue 'mask;
                }
                a.insert(i, u);
            }
        }
        if mode.checks_links() && !links_ok(net, trees, groups, &a) {
            continue;
        }
        let c = cost::total_cost(net, trees, groups, &a);
        if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
            best = Some((a, c));
        }
    }
    Ok(best)
}

fn links_ok(net: &Network, trees: &[TreeRouting], groups: &[MulticastGroup], a: &StateAssignment) -> bool {
    cost::edge_loads(net, trees, groups, a)
        .iter()
        .zip(net.edges())
        .all(|(load, (_, e))| e.capacity.admits(&load.flow))
}

/// Optimum over every combination of minimal trees and every feasible
/// assignment. Ties go to the lexicographically smallest tuple of edge sets.
pub fn solve_exact(
    net: &Network,
    groups: &[MulticastGroup],
    mode: Mode,
    storage: Storage,
    budgets: OracleBudgets,
) -> Result<Solution, OracleError> {
    let mut options = Vec::with_capacity(groups.len());
    for g in groups {
        g.validate(net).map_err(|_| OracleError::Unreachable(g.id))?;
        let trees = enumerate_trees(net, g, budgets.nodes)?;
        if trees.is_empty() {
            return Err(OracleError::Unreachable(g.id));
        }
        options.push(trees);
    }
    let combos = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len())).unwrap_or(usize::MAX);
    if combos > budgets.combinations {
        return Err(OracleError::Budget { what: "tree combination count", limit: budgets.combinations, actual: combos });
    }
    // Assigning every branch state bounds a combination's cost from below.
    let lower: Vec<Vec<Rational>> = options
        .iter()
        .zip(groups)
        .map(|(o, g)| o.iter().map(|t| g.rate * cost::tree_cost(net, t, &cost::branch_nodes(t))).collect())
        .collect();
    let weak: Vec<Vec<BTreeMap<EdgeId, Rational>>> = options
        .iter()
        .zip(groups)
        .map(|(o, g)| {
            o.iter()
                .map(|t| t.edges().map(|(p, c)| (net.find_edge(p, c).unwrap(), g.rate)).collect())
                .collect()
        })
        .collect();
    // Visit each group's trees cheapest bound first so good incumbents come
    // early; `order[i][k]` is the index (in edge-set order) of the k-th.
    let order: Vec<Vec<usize>> = lower
        .iter()
        .map(|l| {
            let mut o: Vec<usize> = (0..l.len()).collect();
            o.sort_by(|&a, &b| l[a].cmp(&l[b]).then(a.cmp(&b)));
            o
        })
        .collect();
    if groups.is_empty() {
        return Ok(Solution::assemble(net, "oracle", mode, storage, Vec::new(), Vec::new(), StateAssignment::empty(0)));
    }
    let last = groups.len() - 1;
    let mut best: Option<(Rational, Vec<usize>, StateAssignment)> = None;
    let mut pos = vec![0usize; groups.len()];
    let mut flow = vec![Rational::zero(); net.edge_count()];
    loop {
        let pick: Vec<usize> = pos.iter().enumerate().map(|(i, &k)| order[i][k]).collect();
        let lb: Rational = pick.iter().enumerate().map(|(i, &k)| lower[i][k]).sum();
        let over = best.as_ref().is_some_and(|(bc, _, _)| lb > *bc);
        let mut viable = !over;
        if viable && mode.checks_links() {
            // Each tree edge carries at least one copy.
            flow.iter_mut().for_each(|x| *x = Rational::zero());
            for (i, &k) in pick.iter().enumerate() {
                for (e, f) in &weak[i][k] {
                    flow[e.index()] += f;
                }
            }
            viable = net.edges().all(|(id, e)| e.capacity.admits(&flow[id.index()]));
        }
        if viable {
            let trees: Vec<TreeRouting> = pick.iter().enumerate().map(|(i, &k)| options[i][k].clone()).collect();
            if let Some((a, c)) = optimal_assignment(net, groups, &trees, mode, storage, budgets.states)? {
                let better = best.as_ref().is_none_or(|(bc, bp, _)| c < *bc || (c == *bc && pick < *bp));
                if better {
                    best = Some((c, pick, a));
                }
            }
        }
        // Odometer, last group fastest. Bounds only grow along the last
        // group's order, so once over the incumbent the rest is skipped.
        let mut k = groups.len();
        if over {
            pos[last] = order[last].len() - 1;
        }
        loop {
            if k == 0 {
                let (_, pick, a) = best.ok_or(OracleError::Infeasible)?;
                let trees = pick.iter().enumerate().map(|(i, &k)| options[i][k].clone()).collect();
                return Ok(Solution::assemble(net, "oracle", mode, storage, groups.to_vec(), trees, a));
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < options[k].len() {
                break;
            }
            pos[k] = 0;
        }
    }
}

/// Pruning the non-destination leaves off `full` never raises the cost
/// under `states`, provided every state is a branch node of the pruned
/// tree. (A dangling child carries no copies yet makes its parent a branch
/// node, so states outside that set can make the padded tree cheaper.)
/// Returns `None` when a state falls outside the pruned tree's branch nodes.
pub fn pruning_never_hurts(net: &Network, full: &TreeRouting, states: &BTreeSet<NodeId>) -> Option<bool> {
    let mut pruned = full.clone();
    let dead: Vec<NodeId> = pruned.leaves().filter(|&x| !pruned.is_destination(x)).collect();
    for x in dead {
        pruned.prune_from(x);
    }
    if !states.iter().all(|&u| is_branch_node(&pruned, u)) {
        return None;
    }
    Some(cost::tree_cost(net, &pruned, states) <= cost::tree_cost(net, full, states))
}

/// `max_i |D_i|`, the ratio the solver is guaranteed to stay within.
pub fn ratio_bound(groups: &[MulticastGroup]) -> Rational {
    int(crate::instance::delta(groups) as i64)
}
