//! Multi-tree routing: shortest-path trees and rerouting around overloaded
//! branch nodes.

use std::collections::BTreeSet;

use super::SolverConfig;
use crate::cost::{self, is_branch_node, storage_weight, Mode, Storage};
use crate::error::SolveError;
use crate::graph::{self, Capacity, EdgeId, Network, NodeId};
use crate::instance::MulticastGroup;
use crate::rational::Rational;
use crate::tree::TreeRouting;

/// Union of canonical shortest paths from the source to each destination.
/// With `residual`, edges whose remaining capacity is below the group rate
/// are unusable (`None` entries are unbounded).
pub fn build_spt(
    net: &Network,
    group: &MulticastGroup,
    residual: Option<&[Option<Rational>]>,
) -> Result<TreeRouting, SolveError> {
    group
        .validate(net)
        .map_err(|reason| SolveError::InvalidGroup { group: group.id, reason })?;
    let rate = group.rate;
    let edge_ok = |e: EdgeId| residual.is_none_or(|r| r[e.index()].is_none_or(|c| c >= rate));
    let sp = graph::shortest_paths_from(net, &[group.source], &|_| true, &edge_ok);
    let mut tree = TreeRouting::new(group.id, group.source, group.destinations.iter().copied());
    for &d in &group.destinations {
        let path = sp.path_to(d).ok_or(SolveError::Unreachable { group: group.id, destination: d })?;
        tree.merge_root_path(&path.nodes);
    }
    debug_assert!(tree.validate(net).is_ok());
    Ok(tree)
}

/// Remaining capacity per edge after subtracting `flow`; `None` = unbounded.
pub fn residual_capacity(net: &Network, flow: &[Rational]) -> Vec<Option<Rational>> {
    net.edges().map(|(id, e)| e.capacity.residual(&flow[id.index()])).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadStatus {
    Under,
    Full,
    Overloaded,
}

/// Storage each node would need to hold a state for every tree in which it
/// is a branch node.
#[derive(Clone, Debug)]
pub struct NodeLoadLedger {
    load: Vec<u64>,
    capacity: Vec<u64>,
    storage: Storage,
}

impl NodeLoadLedger {
    pub fn new(net: &Network, trees: &[TreeRouting], storage: Storage) -> Self {
        let mut load = vec![0u64; net.node_count()];
        for t in trees {
            for u in cost::branch_nodes(t) {
                load[u.index()] += storage_weight(t, u, storage);
            }
        }
        Self { load, capacity: net.nodes().map(|u| net.node_capacity(u)).collect(), storage }
    }

    pub fn load(&self, u: NodeId) -> u64 {
        self.load[u.index()]
    }

    pub fn status(&self, u: NodeId) -> LoadStatus {
        let (l, c) = (self.load[u.index()], self.capacity[u.index()]);
        match l.cmp(&c) {
            std::cmp::Ordering::Less => LoadStatus::Under,
            std::cmp::Ordering::Equal => LoadStatus::Full,
            std::cmp::Ordering::Greater => LoadStatus::Overloaded,
        }
    }

    pub fn overload(&self, u: NodeId) -> u64 {
        self.load[u.index()].saturating_sub(self.capacity[u.index()])
    }

    /// Overloaded nodes, largest overload first, ties by node id.
    pub fn overloaded(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = (0..self.load.len() as u32)
            .map(NodeId)
            .filter(|&u| self.status(u) == LoadStatus::Overloaded)
            .collect();
        v.sort_by_key(|&u| (std::cmp::Reverse(self.overload(u)), u));
        v
    }

    /// Storage `u` would need in `tree` as a branch node (0 if it is not one).
    pub fn branch_weight(&self, tree: &TreeRouting, u: NodeId) -> u64 {
        if is_branch_node(tree, u) {
            storage_weight(tree, u, self.storage)
        } else {
            0
        }
    }

    /// Load of `w` if it gained one more child in `tree`.
    pub fn load_with_extra_child(&self, tree: &TreeRouting, w: NodeId) -> u64 {
        let before = self.branch_weight(tree, w);
        let after = if w != tree.root() && tree.out_degree(w) + 1 >= 2 {
            match self.storage {
                Storage::Entries => 1,
                Storage::DegreeWeighted => tree.degree(w) as u64 + 1,
            }
        } else {
            0
        };
        self.load[w.index()] - before + after
    }

    pub fn capacity(&self, u: NodeId) -> u64 {
        self.capacity[u.index()]
    }

    fn adjust(&mut self, u: NodeId, before: u64, after: u64) {
        self.load[u.index()] = self.load[u.index()] - before + after;
    }
}

/// A chain of tree edges `top → … → v` whose interior nodes are neither
/// branch nodes nor destinations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub nodes: Vec<NodeId>,
    pub cost: Rational,
}

impl Segment {
    pub fn top(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn bottom(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn interior(&self) -> &[NodeId] {
        &self.nodes[1..self.nodes.len() - 1]
    }
}

fn is_stop(tree: &TreeRouting, x: NodeId) -> bool {
    x == tree.root() || tree.out_degree(x) != 1 || tree.is_destination(x)
}

/// Segment starting at `top` and leaving through its child `child`.
pub fn segment_below(net: &Network, tree: &TreeRouting, top: NodeId, child: NodeId) -> Segment {
    let mut nodes = vec![top, child];
    let mut cost = net.cost(top, child);
    let mut x = child;
    while !is_stop(tree, x) {
        let next = tree.children(x).next().unwrap();
        cost += net.cost(x, next);
        nodes.push(next);
        x = next;
    }
    Segment { nodes, cost }
}

/// Segment containing the tree edge into `child`.
pub fn segment_through(net: &Network, tree: &TreeRouting, child: NodeId) -> Segment {
    let mut top = tree.parent(child).expect("edge into child exists");
    let mut first = child;
    while !is_stop(tree, top) {
        first = top;
        top = tree.parent(top).unwrap();
    }
    segment_below(net, tree, top, first)
}

/// Weak residual test: a new edge for `tree` must leave room for `rate`.
pub(crate) fn weak_edge_ok<'a>(
    net: &'a Network,
    weak_flow: Option<&'a [Rational]>,
    rate: Rational,
) -> impl Fn(EdgeId) -> bool + 'a {
    move |e| match (weak_flow, net.edge(e).capacity) {
        (Some(flow), Capacity::Finite(c)) => c - flow[e.index()] >= rate,
        _ => true,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RerouteStats {
    pub passes: usize,
    pub moves: usize,
    /// Overloaded nodes left after the last pass.
    pub remaining_overloaded: usize,
}

/// Moves branches off overloaded nodes. A segment `u → v` below an
/// overloaded branch node `u` is replaced by a path `w → v` through off-tree
/// nodes when that path costs at most the segment, `w` is not a leaf and
/// can become (or already is) a branch node without exceeding its capacity,
/// and the stateless tree cost does not increase.
pub fn reroute_overloaded(
    net: &Network,
    groups: &[MulticastGroup],
    trees: &mut [TreeRouting],
    config: &SolverConfig,
) -> RerouteStats {
    let storage = config.storage();
    let mut ledger = NodeLoadLedger::new(net, trees, storage);
    let mut branch_trees: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); net.node_count()];
    for (i, t) in trees.iter().enumerate() {
        for u in cost::branch_nodes(t) {
            branch_trees[u.index()].insert(i);
        }
    }
    let mut weak = (config.mode == Mode::Smte).then(|| cost::weak_edge_flow(net, trees, groups));
    let mut stats = RerouteStats::default();

    for _ in 0..config.max_reroute_passes {
        stats.passes += 1;
        let mut moved = 0;
        for u in ledger.overloaded() {
            let mut order: Vec<usize> = branch_trees[u.index()].iter().copied().collect();
            order.sort_by_key(|&i| groups[i].id);
            for i in order {
                if ledger.status(u) != LoadStatus::Overloaded {
                    break;
                }
                let children: Vec<NodeId> = trees[i].children(u).collect();
                for c in children {
                    let tree = &trees[i];
                    if !is_branch_node(tree, u) {
                        break;
                    }
                    if tree.parent(c) != Some(u) {
                        continue;
                    }
                    let seg = segment_below(net, tree, u, c);
                    let Some(path) = phase_one_path(net, tree, &groups[i], &seg, &ledger, weak.as_deref()) else {
                        continue;
                    };
                    let w = path[0];
                    let before_u = ledger.branch_weight(tree, u);
                    let before_w = ledger.branch_weight(tree, w);
                    let cost_before = cfg!(debug_assertions).then(|| cost::tree_cost(net, tree, &BTreeSet::new()));
                    if let Some(flow) = weak.as_mut() {
                        shift_weak_flow(net, flow, &seg.nodes, &path, groups[i].rate);
                    }
                    let tree = &mut trees[i];
                    tree.splice(&path);
                    debug_assert!(cost_before.is_none_or(|b| cost::tree_cost(net, tree, &BTreeSet::new()) <= b));
                    ledger.adjust(u, before_u, ledger.branch_weight(tree, u));
                    ledger.adjust(w, before_w, ledger.branch_weight(tree, w));
                    for x in [u, w] {
                        if is_branch_node(tree, x) {
                            branch_trees[x.index()].insert(i);
                        } else {
                            branch_trees[x.index()].remove(&i);
                        }
                    }
                    moved += 1;
                }
            }
        }
        stats.moves += moved;
        if moved == 0 {
            break;
        }
    }
    stats.remaining_overloaded = ledger.overloaded().len();
    stats
}

fn shift_weak_flow(net: &Network, flow: &mut [Rational], old: &[NodeId], new: &[NodeId], rate: Rational) {
    for p in old.windows(2) {
        flow[net.find_edge(p[0], p[1]).unwrap().index()] -= rate;
    }
    for p in new.windows(2) {
        flow[net.find_edge(p[0], p[1]).unwrap().index()] += rate;
    }
}

fn phase_one_path(
    net: &Network,
    tree: &TreeRouting,
    group: &MulticastGroup,
    seg: &Segment,
    ledger: &NodeLoadLedger,
    weak: Option<&[Rational]>,
) -> Option<Vec<NodeId>> {
    let (u, v) = (seg.top(), seg.bottom());
    let edge_ok = weak_edge_ok(net, weak, group.rate);
    let dist = graph::costs_to(net, v, &|x| !tree.contains(x), &edge_ok);
    let depth = cost::segment_lengths(net, tree, &BTreeSet::new());
    let below_v = tree.subtree(v);
    let interior: BTreeSet<NodeId> = seg.interior().iter().copied().collect();
    let mut best: Option<(Rational, NodeId)> = None;
    for w in tree.nodes() {
        let Some(d) = dist[w.index()] else { continue };
        if w == u || interior.contains(&w) || below_v.contains(&w) || tree.is_leaf(w) || d > seg.cost {
            continue;
        }
        // New depth of v must not exceed the old one.
        if depth[&w] + d > depth[&v] {
            continue;
        }
        if ledger.load_with_extra_child(tree, w) > ledger.capacity(w) {
            continue;
        }
        if best.is_none_or(|(bd, bw)| (d, w) < (bd, bw)) {
            best = Some((d, w));
        }
    }
    let (d, w) = best?;
    let path = graph::shortest_path_filtered(net, w, v, &|x| x == v || !tree.contains(x), &edge_ok)
        .expect("reverse search found a path");
    debug_assert_eq!(path.cost, d);
    Some(path.nodes)
}
