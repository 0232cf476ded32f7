//! Branch semantics, transmission counts and the bandwidth cost of a tree
//! under a state assignment.
//!
//! A member is a destination or a state node of the tree. Each member `v` is
//! served by one unicast segment `P_v` from its nearest upstream state (or
//! the source) down to `v`, so an edge carries one copy per segment through
//! it. The source is always multicast-capable and never consumes storage.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::graph::{EdgeId, Network, NodeId};
use crate::instance::MulticastGroup;
use crate::rational::{int, Rational};
use crate::tree::TreeRouting;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Node capacity only.
    #[serde(rename = "smte-n")]
    SmteN,
    /// Node and link capacity.
    Smte,
}

impl Mode {
    pub fn checks_links(self) -> bool {
        matches!(self, Mode::Smte)
    }

    pub fn default_storage(self) -> Storage {
        match self {
            Mode::SmteN => Storage::Entries,
            Mode::Smte => Storage::DegreeWeighted,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::SmteN => "smte-n",
            Mode::Smte => "smte",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "smte-n" | "smten" | "node" => Ok(Mode::SmteN),
            "smte" | "link" => Ok(Mode::Smte),
            _ => Err(format!("unknown mode `{s}` (expected smte-n or smte)")),
        }
    }
}

/// How a state consumes a node's Group Table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Storage {
    /// One unit per tree.
    Entries,
    /// One unit per incident tree edge of the node.
    DegreeWeighted,
}

impl Storage {
    pub fn name(self) -> &'static str {
        match self {
            Storage::Entries => "entries",
            Storage::DegreeWeighted => "degree",
        }
    }
}

impl std::str::FromStr for Storage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "entries" | "entry" => Ok(Storage::Entries),
            "degree" | "weighted" | "degree-weighted" => Ok(Storage::DegreeWeighted),
            _ => Err(format!("unknown storage model `{s}` (expected entries or degree)")),
        }
    }
}

/// Per-tree state sets, aligned by index with the tree list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateAssignment {
    pub states: Vec<BTreeSet<NodeId>>,
}

impl StateAssignment {
    pub fn empty(trees: usize) -> Self {
        Self { states: vec![BTreeSet::new(); trees] }
    }

    pub fn tree(&self, i: usize) -> &BTreeSet<NodeId> {
        &self.states[i]
    }

    pub fn insert(&mut self, i: usize, u: NodeId) -> bool {
        self.states[i].insert(u)
    }

    pub fn remove(&mut self, i: usize, u: NodeId) -> bool {
        self.states[i].remove(&u)
    }

    pub fn contains(&self, i: usize, u: NodeId) -> bool {
        self.states[i].contains(&u)
    }

    pub fn len(&self) -> usize {
        self.states.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every `(tree index, node)` pair in order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, NodeId)> + '_ {
        self.states.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |&u| (i, u)))
    }
}

pub fn is_branch_node(tree: &TreeRouting, u: NodeId) -> bool {
    u != tree.root() && tree.out_degree(u) >= 2
}

/// `W_i`: non-root on-tree nodes with at least two children.
pub fn branch_nodes(tree: &TreeRouting) -> BTreeSet<NodeId> {
    tree.nodes().filter(|&u| is_branch_node(tree, u)).collect()
}

/// First strict ancestor of `v` holding a state, else the root.
pub fn nearest_upstream_state(tree: &TreeRouting, states: &BTreeSet<NodeId>, v: NodeId) -> NodeId {
    let mut x = v;
    while let Some(p) = tree.parent(x) {
        if states.contains(&p) {
            return p;
        }
        x = p;
    }
    tree.root()
}

/// Copies of each packet sent on the parent edge of every non-root node
/// (`up(x)`): 1 at a state node, otherwise its own membership plus the sum
/// over its children.
pub fn upward_demand(tree: &TreeRouting, states: &BTreeSet<NodeId>) -> BTreeMap<NodeId, u64> {
    let mut up = BTreeMap::new();
    for &x in tree.preorder().iter().rev() {
        if x == tree.root() {
            continue;
        }
        let v = if states.contains(&x) {
            1
        } else {
            u64::from(tree.is_destination(x)) + tree.children(x).map(|c| up[&c]).sum::<u64>()
        };
        up.insert(x, v);
    }
    up
}

/// `ε` for every tree edge, keyed by `(parent, child)`.
pub fn edge_transmissions(tree: &TreeRouting, states: &BTreeSet<NodeId>) -> BTreeMap<(NodeId, NodeId), u64> {
    debug_assert!(states.iter().all(|&u| is_branch_node(tree, u)), "states must be branch nodes");
    let up = upward_demand(tree, states);
    tree.edges().map(|(p, c)| ((p, c), up[&c])).collect()
}

/// `Σ_{v ∈ A ∪ D} c(P_v)` by walking each segment.
pub fn segment_cost_sum(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>) -> Rational {
    let mut total = Rational::zero();
    for &v in tree.destinations().iter().chain(states.iter().filter(|u| !tree.is_destination(**u))) {
        let mut x = v;
        while let Some(p) = tree.parent(x) {
            total += net.cost(p, x);
            if states.contains(&p) {
                break;
            }
            x = p;
        }
    }
    total
}

/// `c(T_i, A_i) = Σ_e k_e ε(e)`, without the group rate.
pub fn tree_cost(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>) -> Rational {
    let up = upward_demand(tree, states);
    let by_edges: Rational = tree.edges().map(|(p, c)| net.cost(p, c) * int(up[&c] as i64)).sum();
    debug_assert_eq!(by_edges, segment_cost_sum(net, tree, states));
    by_edges
}

/// Sum of edge costs of the tree (the all-multicast cost).
pub fn tree_edge_cost(net: &Network, tree: &TreeRouting) -> Rational {
    tree.edges().map(|(p, c)| net.cost(p, c)).sum()
}

/// `Σ_i f_i · c(T_i, A_i)` with trees, groups and assignment aligned by index.
pub fn total_cost(
    net: &Network,
    trees: &[TreeRouting],
    groups: &[MulticastGroup],
    assignment: &StateAssignment,
) -> Rational {
    trees
        .iter()
        .zip(groups)
        .enumerate()
        .map(|(i, (t, g))| g.rate * tree_cost(net, t, assignment.tree(i)))
        .sum()
}

/// `L(x)`: cost from the nearest strict-upstream state (or the source) down to `x`.
pub fn segment_lengths(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>) -> BTreeMap<NodeId, Rational> {
    let root = tree.root();
    let mut len = BTreeMap::new();
    len.insert(root, Rational::zero());
    for x in tree.preorder() {
        let base = if x == root || states.contains(&x) { Rational::zero() } else { len[&x] };
        for c in tree.children(x) {
            len.insert(c, base + net.cost(x, c));
        }
    }
    len
}

/// Unscaled gain of adding each candidate `u ∈ W_i \ A_i` to the tree's
/// states: `(through(u) − 1) × L(u)`, where `through(u)` counts members
/// served through `u` and `L(u)` is the segment cost from the nearest
/// upstream state (or the source) to `u`.
pub fn tree_gains(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>) -> Vec<(NodeId, Rational)> {
    let up = upward_demand(tree, states);
    let mut seg = BTreeMap::new();
    let root = tree.root();
    let mut out = Vec::new();
    for x in tree.preorder() {
        let lx = if x == root { Rational::zero() } else { seg[&x] };
        let base = if x == root || states.contains(&x) { Rational::zero() } else { lx };
        for c in tree.children(x) {
            seg.insert(c, base + net.cost(x, c));
        }
        if is_branch_node(tree, x) && !states.contains(&x) {
            let through = u64::from(tree.is_destination(x)) + tree.children(x).map(|c| up[&c]).sum::<u64>();
            out.push((x, lx * int(through as i64 - 1)));
        }
    }
    out.sort_by_key(|(u, _)| *u);
    out
}

/// Reduction of `c(T_i, ·)` from adding `u` to `states`, without the rate.
pub fn tree_gain(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>, u: NodeId) -> Rational {
    debug_assert!(is_branch_node(tree, u) && !states.contains(&u));
    let l = tree_cost_to_upstream(net, tree, states, u);
    let up = upward_demand(tree, states);
    let through = u64::from(tree.is_destination(u)) + tree.children(u).map(|c| up[&c]).sum::<u64>();
    l * int(through as i64 - 1)
}

fn tree_cost_to_upstream(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>, u: NodeId) -> Rational {
    let mut l = Rational::zero();
    let mut x = u;
    while let Some(p) = tree.parent(x) {
        l += net.cost(p, x);
        if states.contains(&p) {
            break;
        }
        x = p;
    }
    l
}

/// Total-cost reduction from adding `(i, u)` to the assignment.
pub fn marginal_gain(
    net: &Network,
    trees: &[TreeRouting],
    groups: &[MulticastGroup],
    assignment: &StateAssignment,
    (i, u): (usize, NodeId),
) -> Rational {
    groups[i].rate * tree_gain(net, &trees[i], assignment.tree(i), u)
}

/// Storage a state at `u` consumes in `tree`.
pub fn storage_weight(tree: &TreeRouting, u: NodeId, storage: Storage) -> u64 {
    match storage {
        Storage::Entries => 1,
        Storage::DegreeWeighted => tree.degree(u) as u64,
    }
}

/// Storage used at every node.
pub fn node_usage(net: &Network, trees: &[TreeRouting], assignment: &StateAssignment, storage: Storage) -> Vec<u64> {
    let mut used = vec![0u64; net.node_count()];
    for (i, u) in assignment.pairs() {
        used[u.index()] += storage_weight(&trees[i], u, storage);
    }
    used
}

/// Number of trees in which each node is a branch node.
pub fn branch_counts(net: &Network, trees: &[TreeRouting]) -> Vec<usize> {
    let mut counts = vec![0usize; net.node_count()];
    for t in trees {
        for u in branch_nodes(t) {
            counts[u.index()] += 1;
        }
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeLoad {
    /// `(tree index, ε)` for every tree using the edge.
    pub per_tree: Vec<(usize, u64)>,
    /// `Σ_i f_i ε_i`.
    pub flow: Rational,
}

/// Loads indexed by `EdgeId`.
pub fn edge_loads(
    net: &Network,
    trees: &[TreeRouting],
    groups: &[MulticastGroup],
    assignment: &StateAssignment,
) -> Vec<EdgeLoad> {
    let mut loads = vec![EdgeLoad { per_tree: Vec::new(), flow: Rational::zero() }; net.edge_count()];
    for (i, t) in trees.iter().enumerate() {
        let up = upward_demand(t, assignment.tree(i));
        for (p, c) in t.edges() {
            let e = net.find_edge(p, c).expect("tree edge exists");
            let eps = up[&c];
            let l = &mut loads[e.index()];
            l.per_tree.push((i, eps));
            l.flow += groups[i].rate * int(eps as i64);
        }
    }
    loads
}

/// Per-edge flow counting each tree once (`ε` treated as 0/1).
pub fn weak_edge_flow(net: &Network, trees: &[TreeRouting], groups: &[MulticastGroup]) -> Vec<Rational> {
    let mut flow = vec![Rational::zero(); net.edge_count()];
    for (t, g) in trees.iter().zip(groups) {
        for (p, c) in t.edges() {
            flow[net.find_edge(p, c).expect("tree edge exists").index()] += g.rate;
        }
    }
    flow
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeViolation {
    pub node: NodeId,
    pub used: u64,
    pub capacity: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeViolation {
    pub edge: EdgeId,
    pub flow: Rational,
    pub capacity: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub mode: Mode,
    pub storage: Storage,
    pub node_violations: Vec<NodeViolation>,
    pub edge_violations: Vec<EdgeViolation>,
    /// Broken trees, states outside `W_i`, or trees not matching their group.
    pub structural: Vec<String>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.node_violations.is_empty() && self.edge_violations.is_empty() && self.structural.is_empty()
    }

    pub fn violation_count(&self) -> usize {
        self.node_violations.len() + self.edge_violations.len() + self.structural.len()
    }
}

pub fn verify_feasible(
    net: &Network,
    trees: &[TreeRouting],
    groups: &[MulticastGroup],
    assignment: &StateAssignment,
    mode: Mode,
    storage: Storage,
) -> FeasibilityReport {
    let mut structural = Vec::new();
    if trees.len() != groups.len() || assignment.states.len() != trees.len() {
        structural.push(format!(
            "{} trees, {} groups, {} state sets",
            trees.len(),
            groups.len(),
            assignment.states.len()
        ));
    }
    let mut valid = true;
    for (i, (t, g)) in trees.iter().zip(groups).enumerate() {
        if let Err(e) = t.validate(net) {
            structural.push(format!("group {}: {e}", g.id));
            valid = false;
            continue;
        }
        if t.root() != g.source || t.destinations() != &g.destinations || t.group != g.id {
            structural.push(format!("group {}: tree does not match the group's source/destinations", g.id));
        }
        if let Some(states) = assignment.states.get(i) {
            for &u in states {
                if !is_branch_node(t, u) {
                    structural.push(format!("group {}: state at {} which is not a branch node", g.id, net.label(u)));
                    valid = false;
                }
            }
        }
    }
    let mut node_violations = Vec::new();
    let mut edge_violations = Vec::new();
    if valid && structural.is_empty() {
        let used = node_usage(net, trees, assignment, storage);
        for u in net.nodes() {
            if used[u.index()] > net.node_capacity(u) {
                node_violations.push(NodeViolation { node: u, used: used[u.index()], capacity: net.node_capacity(u) });
            }
        }
        if mode.checks_links() {
            for (l, (id, e)) in edge_loads(net, trees, groups, assignment).iter().zip(net.edges()) {
                if let crate::graph::Capacity::Finite(c) = e.capacity {
                    if l.flow > c {
                        edge_violations.push(EdgeViolation { edge: id, flow: l.flow, capacity: c });
                    }
                }
            }
        }
    }
    FeasibilityReport { mode, storage, node_violations, edge_violations, structural }
}
