//! Directed network with per-edge unit cost and capacity, and per-node
//! Group Table capacity.

mod graphml;
mod paths;

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Rational};

pub use graphml::{load_graphml, GraphmlOptions};
pub use paths::{
    all_pairs_shortest_paths, costs_to, shortest_path_avoiding, shortest_path_filtered, shortest_paths_from,
    DistanceTable, ShortestPaths,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Capacity {
    Finite(Rational),
    #[default]
    Unbounded,
}

impl Capacity {
    pub fn admits(&self, load: &Rational) -> bool {
        match self {
            Capacity::Finite(c) => load <= c,
            Capacity::Unbounded => true,
        }
    }

    /// Remaining headroom after `load`, `None` when unbounded.
    pub fn residual(&self, load: &Rational) -> Option<Rational> {
        match self {
            Capacity::Finite(c) => Some(c - load),
            Capacity::Unbounded => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Capacity::Finite(_))
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(c) => f.write_str(&rational::format(c)),
            Capacity::Unbounded => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: NodeId,
    pub head: NodeId,
    pub cost: Rational,
    pub capacity: Capacity,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("negative cost on edge `{0}` -> `{1}`")]
    NegativeCost(String, String),
    #[error("non-positive capacity on edge `{0}` -> `{1}`")]
    NonPositiveCapacity(String, String),
}

/// Node indices are dense (`0..node_count`) and map bijectively to labels.
#[derive(Clone, Debug, Default)]
pub struct Network {
    labels: Vec<String>,
    by_label: HashMap<String, NodeId>,
    node_capacity: Vec<u64>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    by_pair: HashMap<(NodeId, NodeId), EdgeId>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>, capacity: u64) -> Result<NodeId, GraphError> {
        let label = label.into();
        if self.by_label.contains_key(&label) {
            return Err(GraphError::DuplicateLabel(label));
        }
        let id = NodeId(self.labels.len() as u32);
        self.by_label.insert(label.clone(), id);
        self.labels.push(label);
        self.node_capacity.push(capacity);
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        Ok(id)
    }

    pub fn add_edge(
        &mut self,
        tail: NodeId,
        head: NodeId,
        cost: Rational,
        capacity: Capacity,
    ) -> Result<EdgeId, GraphError> {
        for x in [tail, head] {
            if !self.contains(x) {
                return Err(GraphError::UnknownNode(format!("#{}", x.0)));
            }
        }
        let (t, h) = (self.label(tail).to_string(), self.label(head).to_string());
        if tail == head {
            return Err(GraphError::SelfLoop(t));
        }
        if self.by_pair.contains_key(&(tail, head)) {
            return Err(GraphError::DuplicateEdge(t, h));
        }
        if cost < Rational::zero() {
            return Err(GraphError::NegativeCost(t, h));
        }
        if let Capacity::Finite(c) = capacity {
            if c <= Rational::zero() {
                return Err(GraphError::NonPositiveCapacity(t, h));
            }
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge { tail, head, cost, capacity });
        insert_sorted(&mut self.out_edges[tail.index()], id, |e| self.edges[e.index()].head);
        insert_sorted(&mut self.in_edges[head.index()], id, |e| self.edges[e.index()].tail);
        self.by_pair.insert((tail, head), id);
        Ok(id)
    }

    /// Adds `a -> b` and `b -> a` with the same cost and capacity.
    pub fn add_link(
        &mut self,
        a: NodeId,
        b: NodeId,
        cost: Rational,
        capacity: Capacity,
    ) -> Result<(EdgeId, EdgeId), GraphError> {
        let fwd = self.add_edge(a, b, cost, capacity)?;
        let back = self.add_edge(b, a, cost, capacity)?;
        Ok((fwd, back))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeId(i as u32), e))
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn find_edge(&self, tail: NodeId, head: NodeId) -> Option<EdgeId> {
        self.by_pair.get(&(tail, head)).copied()
    }

    /// Outgoing edges of `u`, ordered by head index.
    pub fn out_edges(&self, u: NodeId) -> &[EdgeId] {
        &self.out_edges[u.index()]
    }

    /// Incoming edges of `u`, ordered by tail index.
    pub fn in_edges(&self, u: NodeId) -> &[EdgeId] {
        &self.in_edges[u.index()]
    }

    pub fn out_neighbors(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out_edges(u).iter().map(|&e| self.edges[e.index()].head)
    }

    pub fn in_neighbors(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.in_edges(u).iter().map(|&e| self.edges[e.index()].tail)
    }

    pub fn label(&self, u: NodeId) -> &str {
        &self.labels[u.index()]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.by_label.get(label).copied()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        u.index() < self.labels.len()
    }

    pub fn node_capacity(&self, u: NodeId) -> u64 {
        self.node_capacity[u.index()]
    }

    pub fn set_node_capacity(&mut self, u: NodeId, capacity: u64) {
        self.node_capacity[u.index()] = capacity;
    }

    pub fn set_uniform_node_capacity(&mut self, capacity: u64) {
        self.node_capacity.iter_mut().for_each(|c| *c = capacity);
    }

    pub fn set_edge_capacity(&mut self, id: EdgeId, capacity: Capacity) {
        self.edges[id.index()].capacity = capacity;
    }

    pub fn set_uniform_edge_capacity(&mut self, capacity: Capacity) {
        self.edges.iter_mut().for_each(|e| e.capacity = capacity);
    }

    /// Cost of the edge `tail -> head`; panics if absent.
    pub fn cost(&self, tail: NodeId, head: NodeId) -> Rational {
        let id = self
            .find_edge(tail, head)
            .unwrap_or_else(|| panic!("no edge {} -> {}", self.label(tail), self.label(head)));
        self.edges[id.index()].cost
    }

    /// Same topology with every edge cost multiplied by `factor`.
    pub fn scaled_costs(&self, factor: Rational) -> Network {
        let mut out = self.clone();
        for e in &mut out.edges {
            e.cost *= factor;
        }
        out
    }

    /// Sum of edge costs along a node sequence, `None` if some hop is not an edge.
    pub fn walk_cost(&self, nodes: &[NodeId]) -> Option<Rational> {
        nodes
            .windows(2)
            .map(|w| self.find_edge(w[0], w[1]).map(|e| self.edges[e.index()].cost))
            .sum()
    }
}

fn insert_sorted(list: &mut Vec<EdgeId>, id: EdgeId, key: impl Fn(EdgeId) -> NodeId) {
    let k = key(id);
    let pos = list.partition_point(|&e| key(e) < k);
    list.insert(pos, id);
}

/// A simple directed path with its exact cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub cost: Rational,
}

impl Path {
    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("path is never empty")
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.nodes.iter().all(|n| seen.insert(*n))
    }
}
