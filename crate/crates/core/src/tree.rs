//! Rooted multicast arborescence stored as a parent map.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Network, NodeId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeRouting {
    pub group: u32,
    root: NodeId,
    destinations: BTreeSet<NodeId>,
    parent: BTreeMap<NodeId, NodeId>,
    children: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl TreeRouting {
    /// A tree holding only its root.
    pub fn new(group: u32, root: NodeId, destinations: impl IntoIterator<Item = NodeId>) -> Self {
        let mut children = BTreeMap::new();
        children.insert(root, BTreeSet::new());
        Self { group, root, destinations: destinations.into_iter().collect(), parent: BTreeMap::new(), children }
    }

    /// Builds a tree from a child → parent map. Fails if the result is not
    /// rooted at `root` or contains a cycle.
    pub fn from_parents(
        group: u32,
        root: NodeId,
        destinations: impl IntoIterator<Item = NodeId>,
        parents: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, String> {
        let mut t = Self::new(group, root, destinations);
        for (c, p) in parents {
            if c == root {
                return Err("root has a parent".into());
            }
            if t.parent.insert(c, p).is_some() {
                return Err(format!("node {c} has two parents"));
            }
        }
        for (&c, &p) in &t.parent {
            t.children.entry(p).or_default().insert(c);
            t.children.entry(c).or_default();
        }
        for &c in t.parent.keys() {
            let mut x = c;
            let mut steps = 0;
            while x != root {
                x = *t.parent.get(&x).ok_or_else(|| format!("node {c} is not connected to the root"))?;
                steps += 1;
                if steps > t.parent.len() {
                    return Err(format!("cycle through {c}"));
                }
            }
        }
        Ok(t)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn destinations(&self) -> &BTreeSet<NodeId> {
        &self.destinations
    }

    pub fn is_destination(&self, u: NodeId) -> bool {
        self.destinations.contains(&u)
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.children.contains_key(&u)
    }

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        self.parent.get(&u).copied()
    }

    pub fn parents(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.parent
    }

    pub fn children(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children.get(&u).into_iter().flatten().copied()
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.children.get(&u).map_or(0, |c| c.len())
    }

    /// Incident tree edges: one parent edge (except at the root) plus children.
    pub fn degree(&self, u: NodeId) -> usize {
        self.out_degree(u) + usize::from(u != self.root && self.contains(u))
    }

    pub fn is_leaf(&self, u: NodeId) -> bool {
        self.contains(u) && self.out_degree(u) == 0
    }

    /// On-tree nodes in index order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len()
    }

    /// Tree edges `(parent, child)` ordered by child.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.parent.iter().map(|(&c, &p)| (p, c))
    }

    pub fn edge_set(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.edges().collect()
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children.iter().filter(|(_, c)| c.is_empty()).map(|(&u, _)| u)
    }

    /// Root-first order where every parent precedes its children.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.children.len());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            out.push(u);
            // Reverse so the smallest child is visited first.
            stack.extend(self.children(u).collect::<Vec<_>>().into_iter().rev());
        }
        out
    }

    pub fn subtree(&self, v: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend(self.children(u));
            }
        }
        out
    }

    /// `anc` lies on the path from the root to `v` (inclusive of both ends).
    pub fn is_ancestor(&self, anc: NodeId, v: NodeId) -> bool {
        let mut x = v;
        loop {
            if x == anc {
                return true;
            }
            match self.parent(x) {
                Some(p) => x = p,
                None => return false,
            }
        }
    }

    /// Node sequence from `from` down to `to`; `from` must be an ancestor of `to`.
    pub fn path_between(&self, from: NodeId, to: NodeId) -> Vec<NodeId> {
        let mut seq = vec![to];
        let mut x = to;
        while x != from {
            x = self.parent(x).expect("`from` is an ancestor of `to`");
            seq.push(x);
        }
        seq.reverse();
        seq
    }

    pub fn path_from_root(&self, v: NodeId) -> Vec<NodeId> {
        self.path_between(self.root, v)
    }

    /// Appends `path` (first node on-tree, the rest off-tree) as a new branch.
    pub fn attach_path(&mut self, path: &[NodeId]) {
        debug_assert!(self.contains(path[0]));
        for w in path.windows(2) {
            let (p, c) = (w[0], w[1]);
            debug_assert!(!self.contains(c), "attach target {c} already on tree");
            self.parent.insert(c, p);
            self.children.entry(p).or_default().insert(c);
            self.children.entry(c).or_default();
        }
    }

    /// Adds every node of `path` not yet on-tree; `path` starts at the root
    /// and each on-tree prefix must agree with the tree.
    pub fn merge_root_path(&mut self, path: &[NodeId]) {
        debug_assert_eq!(path[0], self.root);
        let first_new = path.iter().position(|u| !self.contains(*u)).unwrap_or(path.len());
        if first_new < path.len() {
            self.attach_path(&path[first_new - 1..]);
        }
    }

    /// Moves `v` (with its subtree) under the new branch `path`, which runs
    /// from an on-tree node outside `v`'s subtree through off-tree nodes to
    /// `v`. The abandoned chain above `v` is pruned. Returns the pruned nodes.
    pub fn splice(&mut self, path: &[NodeId]) -> Vec<NodeId> {
        let v = *path.last().expect("non-empty path");
        let w = path[0];
        debug_assert!(self.contains(w) && !self.subtree(v).contains(&w));
        let old_parent = self.parent(v).expect("splice target is not the root");
        self.children.get_mut(&old_parent).unwrap().remove(&v);
        self.parent.remove(&v);
        for x in &path[1..path.len() - 1] {
            debug_assert!(!self.contains(*x));
            self.children.entry(*x).or_default();
        }
        for pair in path.windows(2) {
            self.parent.insert(pair[1], pair[0]);
            self.children.entry(pair[0]).or_default().insert(pair[1]);
        }
        self.prune_from(old_parent)
    }

    /// Removes non-destination leaves starting at `u` and walking upward.
    pub fn prune_from(&mut self, mut u: NodeId) -> Vec<NodeId> {
        let mut removed = Vec::new();
        while u != self.root && self.is_leaf(u) && !self.is_destination(u) {
            let p = self.parent.remove(&u).expect("non-root has a parent");
            self.children.remove(&u);
            self.children.get_mut(&p).unwrap().remove(&u);
            removed.push(u);
            u = p;
        }
        removed
    }

    pub fn add_destination(&mut self, u: NodeId) -> bool {
        self.destinations.insert(u)
    }

    /// Drops the destination mark and prunes the dangling chain, if any.
    pub fn remove_destination(&mut self, u: NodeId) -> Option<Vec<NodeId>> {
        if !self.destinations.remove(&u) {
            return None;
        }
        Some(self.prune_from(u))
    }

    /// Checks every structural invariant against `net`.
    pub fn validate(&self, net: &Network) -> Result<(), String> {
        let root = self.root;
        if self.parent.contains_key(&root) {
            return Err("root has a parent".into());
        }
        for &d in &self.destinations {
            if !self.contains(d) {
                return Err(format!("destination {} is not on the tree", net.label(d)));
            }
        }
        if self.destinations.contains(&root) {
            return Err("root is a destination".into());
        }
        for (&c, &p) in &self.parent {
            if net.find_edge(p, c).is_none() {
                return Err(format!("tree edge {} -> {} is not in the network", net.label(p), net.label(c)));
            }
            if !self.children.get(&p).is_some_and(|s| s.contains(&c)) {
                return Err("children index out of sync".into());
            }
        }
        let child_total: usize = self.children.values().map(|c| c.len()).sum();
        if child_total != self.parent.len() || self.children.len() != self.parent.len() + 1 {
            return Err("children index out of sync".into());
        }
        if self.preorder().len() != self.children.len() {
            return Err("tree is not connected to its root".into());
        }
        if let Some(l) = self.leaves().find(|&l| l != root && !self.is_destination(l)) {
            return Err(format!("leaf {} is not a destination", net.label(l)));
        }
        Ok(())
    }
}
