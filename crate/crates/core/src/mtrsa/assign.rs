//! Greedy assigning stage: repeatedly take the feasible (tree, node) pair with
//! the largest (storage-normalised) cost reduction.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use num_traits::Zero;

use crate::cost::{self, storage_weight, StateAssignment, Storage};
use crate::graph::{Network, NodeId};
use crate::instance::MulticastGroup;
use crate::rational::{int, Rational};
use crate::tree::TreeRouting;

#[derive(PartialEq, Eq)]
struct Candidate {
    key: Rational,
    group: u32,
    node: NodeId,
    tree: usize,
    weight: u64,
    version: u32,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.key, Reverse(self.group), Reverse(self.node)).cmp(&(&other.key, Reverse(other.group), Reverse(other.node)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy assignment from the empty set.
pub fn greedy_assign(
    net: &Network,
    groups: &[MulticastGroup],
    trees: &[TreeRouting],
    storage: Storage,
) -> StateAssignment {
    let mut a = StateAssignment::empty(trees.len());
    greedy_extend(net, groups, trees, storage, &mut a, None);
    a
}

/// Continues the greedy stage from `assignment`, optionally only over the
/// trees listed in `scope`. Returns the number of states added.
///
/// Ties on the key go to the smaller group id, then the smaller node id.
/// Stops once no feasible candidate has a positive gain.
pub fn greedy_extend(
    net: &Network,
    groups: &[MulticastGroup],
    trees: &[TreeRouting],
    storage: Storage,
    assignment: &mut StateAssignment,
    scope: Option<&[usize]>,
) -> usize {
    let used = cost::node_usage(net, trees, assignment, storage);
    let mut residual: Vec<u64> = net.nodes().map(|u| net.node_capacity(u).saturating_sub(used[u.index()])).collect();
    let mut version = vec![0u32; trees.len()];
    let mut heap = BinaryHeap::new();
    let all: Vec<usize>;
    let scope = match scope {
        Some(s) => s,
        None => {
            all = (0..trees.len()).collect();
            &all
        }
    };
    for &i in scope {
        push_tree(net, groups, trees, storage, assignment, &residual, i, 0, &mut heap);
    }
    let mut added = 0;
    while let Some(c) = heap.pop() {
        if c.key <= Rational::zero() {
            break;
        }
        if c.version != version[c.tree] || c.weight > residual[c.node.index()] {
            continue;
        }
        assignment.insert(c.tree, c.node);
        residual[c.node.index()] -= c.weight;
        version[c.tree] += 1;
        added += 1;
        push_tree(net, groups, trees, storage, assignment, &residual, c.tree, version[c.tree], &mut heap);
    }
    added
}

#[allow(clippy::too_many_arguments)]
fn push_tree(
    net: &Network,
    groups: &[MulticastGroup],
    trees: &[TreeRouting],
    storage: Storage,
    assignment: &StateAssignment,
    residual: &[u64],
    i: usize,
    version: u32,
    heap: &mut BinaryHeap<Candidate>,
) {
    let tree = &trees[i];
    let rate = groups[i].rate;
    for (u, gain) in cost::tree_gains(net, tree, assignment.tree(i)) {
        let weight = storage_weight(tree, u, storage);
        if weight > residual[u.index()] || gain <= Rational::zero() {
            continue;
        }
        let key = rate * gain / int(weight as i64);
        heap.push(Candidate { key, group: groups[i].id, node: u, tree: i, weight, version });
    }
}
