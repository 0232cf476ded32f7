//! Deterministic shortest paths.
//!
//! Paths are ranked by (cost, hop count, node sequence): among equally cheap
//! paths the one with fewer hops wins, and any remaining tie goes to the
//! lexicographically smallest node-index sequence. The ranking has optimal
//! substructure, so a single Dijkstra pass with a predecessor array already
//! yields the canonical path to every node, and the predecessor forest is a
//! tree per source.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use num_traits::Zero;

use super::{EdgeId, Network, NodeId, Path};
use crate::rational::Rational;

#[derive(Clone, Debug)]
pub struct ShortestPaths {
    dist: Vec<Option<Rational>>,
    hops: Vec<u32>,
    pred: Vec<Option<NodeId>>,
}

impl ShortestPaths {
    pub fn dist(&self, v: NodeId) -> Option<Rational> {
        self.dist[v.index()]
    }

    pub fn hops(&self, v: NodeId) -> Option<u32> {
        self.dist[v.index()].map(|_| self.hops[v.index()])
    }

    pub fn pred(&self, v: NodeId) -> Option<NodeId> {
        self.pred[v.index()]
    }

    pub fn reached(&self, v: NodeId) -> bool {
        self.dist[v.index()].is_some()
    }

    /// Canonical path from the (nearest) source to `v`.
    pub fn path_to(&self, v: NodeId) -> Option<Path> {
        let cost = self.dist[v.index()]?;
        let mut nodes = chain(&self.pred, v);
        nodes.reverse();
        Some(Path { nodes, cost })
    }
}

fn chain(pred: &[Option<NodeId>], mut v: NodeId) -> Vec<NodeId> {
    let mut out = vec![v];
    while let Some(p) = pred[v.index()] {
        out.push(p);
        v = p;
    }
    out
}

/// Lexicographic comparison of the root-to-node sequences ending at `a` and `b`.
fn cmp_sequences(pred: &[Option<NodeId>], a: NodeId, b: NodeId) -> Ordering {
    let mut pa = chain(pred, a);
    let mut pb = chain(pred, b);
    pa.reverse();
    pb.reverse();
    pa.cmp(&pb)
}

/// Multi-source Dijkstra. Nodes failing `node_ok` are never entered (sources
/// are always admitted); edges failing `edge_ok` are ignored.
pub fn shortest_paths_from(
    net: &Network,
    sources: &[NodeId],
    node_ok: &dyn Fn(NodeId) -> bool,
    edge_ok: &dyn Fn(EdgeId) -> bool,
) -> ShortestPaths {
    let n = net.node_count();
    let mut dist: Vec<Option<Rational>> = vec![None; n];
    let mut hops = vec![0u32; n];
    let mut pred: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s.index()].is_none() {
            dist[s.index()] = Some(Rational::zero());
            heap.push(Reverse((Rational::zero(), 0u32, s)));
        }
    }
    while let Some(Reverse((d, h, u))) = heap.pop() {
        if done[u.index()] || dist[u.index()] != Some(d) || hops[u.index()] != h {
            continue;
        }
        done[u.index()] = true;
        for &eid in net.out_edges(u) {
            if !edge_ok(eid) {
                continue;
            }
            let e = net.edge(eid);
            let v = e.head;
            if done[v.index()] || !node_ok(v) {
                continue;
            }
            let cand = (d + e.cost, h + 1);
            let better = match dist[v.index()] {
                None => true,
                Some(dv) => match cand.cmp(&(dv, hops[v.index()])) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let cur = pred[v.index()].expect("non-source reached node has a predecessor");
                        cmp_sequences(&pred, u, cur) == Ordering::Less
                    }
                },
            };
            if better {
                let improved_key = dist[v.index()] != Some(cand.0) || hops[v.index()] != cand.1;
                dist[v.index()] = Some(cand.0);
                hops[v.index()] = cand.1;
                pred[v.index()] = Some(u);
                if improved_key {
                    heap.push(Reverse((cand.0, cand.1, v)));
                }
            }
        }
    }
    ShortestPaths { dist, hops, pred }
}

/// One single-source run per node.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    rows: Vec<ShortestPaths>,
}

impl DistanceTable {
    pub fn dist(&self, u: NodeId, v: NodeId) -> Option<Rational> {
        self.rows[u.index()].dist(v)
    }

    pub fn path(&self, u: NodeId, v: NodeId) -> Option<Path> {
        self.rows[u.index()].path_to(v)
    }

    pub fn from(&self, u: NodeId) -> &ShortestPaths {
        &self.rows[u.index()]
    }
}

pub fn all_pairs_shortest_paths(net: &Network) -> DistanceTable {
    let rows = net
        .nodes()
        .map(|u| shortest_paths_from(net, &[u], &|_| true, &|_| true))
        .collect();
    DistanceTable { rows }
}

/// Cheapest path `from -> to` touching no node of `forbidden`.
pub fn shortest_path_avoiding(
    net: &Network,
    from: NodeId,
    to: NodeId,
    forbidden: &BTreeSet<NodeId>,
) -> Option<Path> {
    shortest_path_filtered(net, from, to, &|x| !forbidden.contains(&x), &|_| true)
}

pub fn shortest_path_filtered(
    net: &Network,
    from: NodeId,
    to: NodeId,
    node_ok: &dyn Fn(NodeId) -> bool,
    edge_ok: &dyn Fn(EdgeId) -> bool,
) -> Option<Path> {
    if !node_ok(to) {
        return None;
    }
    shortest_paths_from(net, &[from], node_ok, edge_ok).path_to(to)
}

/// Cost of the cheapest path from every node `x` to `target` whose nodes
/// strictly between `x` and `target` all satisfy `through`.
pub fn costs_to(
    net: &Network,
    target: NodeId,
    through: &dyn Fn(NodeId) -> bool,
    edge_ok: &dyn Fn(EdgeId) -> bool,
) -> Vec<Option<Rational>> {
    let n = net.node_count();
    let mut dist: Vec<Option<Rational>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[target.index()] = Some(Rational::zero());
    heap.push(Reverse((Rational::zero(), target)));
    while let Some(Reverse((d, y))) = heap.pop() {
        if done[y.index()] || dist[y.index()] != Some(d) {
            continue;
        }
        done[y.index()] = true;
        if y != target && !through(y) {
            continue;
        }
        for &eid in net.in_edges(y) {
            if !edge_ok(eid) {
                continue;
            }
            let e = net.edge(eid);
            let x = e.tail;
            let cand = d + e.cost;
            if dist[x.index()].is_none_or(|dx| cand < dx) {
                dist[x.index()] = Some(cand);
                heap.push(Reverse((cand, x)));
            }
        }
    }
    dist
}
