//! Comparison algorithms: shortest-path trees and a Steiner insertion
//! heuristic, each followed by random state assignment at contended nodes.
//!
//! Trees are added one group at a time in input order. In link mode, an
//! edge whose remaining capacity cannot carry the next group's rate is
//! removed before that group is routed. Capacity is charged one copy per
//! tree edge, as states are only handed out once all trees are in; copies
//! tunnelled through stateless branch nodes can therefore overload a link,
//! which the solution's feasibility report then lists.

use std::collections::BTreeSet;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::{self, storage_weight, StateAssignment, Storage};
use crate::error::SolveError;
use crate::graph::{self, EdgeId, Network, NodeId};
use crate::instance::MulticastGroup;
use crate::mtrsa::{build_spt, residual_capacity, SolverConfig};
use crate::rational::Rational;
use crate::solution::Solution;
use crate::tree::TreeRouting;

pub fn solve_spt(net: &Network, groups: &[MulticastGroup], config: &SolverConfig) -> Result<Solution, SolveError> {
    solve_with(net, groups, config, "spt", build_spt)
}

pub fn solve_steiner(net: &Network, groups: &[MulticastGroup], config: &SolverConfig) -> Result<Solution, SolveError> {
    solve_with(net, groups, config, "st", steiner_tree)
}

fn solve_with(
    net: &Network,
    groups: &[MulticastGroup],
    config: &SolverConfig,
    name: &str,
    build: impl Fn(&Network, &MulticastGroup, Option<&[Option<Rational>]>) -> Result<TreeRouting, SolveError>,
) -> Result<Solution, SolveError> {
    config.validate()?;
    let links = config.mode.checks_links();
    let mut flow = vec![Rational::zero(); net.edge_count()];
    let mut trees = Vec::with_capacity(groups.len());
    for g in groups {
        let tree = if links { build(net, g, Some(&residual_capacity(net, &flow)))? } else { build(net, g, None)? };
        if links {
            for (p, c) in tree.edges() {
                flow[net.find_edge(p, c).expect("tree edge").index()] += g.rate;
            }
        }
        trees.push(tree);
    }
    let storage = config.storage();
    let assignment = random_assignment(net, &trees, storage, config.seed);
    Ok(Solution::assemble(net, name, config.mode, storage, groups.to_vec(), trees, assignment))
}

/// Every branch node holds a state for each of its trees when it has the
/// room; otherwise a seeded shuffle of those trees picks the keepers.
pub fn random_assignment(net: &Network, trees: &[TreeRouting], storage: Storage, seed: u64) -> StateAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut of_node: Vec<Vec<usize>> = vec![Vec::new(); net.node_count()];
    for (i, t) in trees.iter().enumerate() {
        for u in cost::branch_nodes(t) {
            of_node[u.index()].push(i);
        }
    }
    let mut a = StateAssignment::empty(trees.len());
    for u in net.nodes() {
        let mut list = std::mem::take(&mut of_node[u.index()]);
        let demand: u64 = list.iter().map(|&i| storage_weight(&trees[i], u, storage)).sum();
        let mut room = net.node_capacity(u);
        if demand > room {
            list.shuffle(&mut rng);
        }
        for i in list {
            let w = storage_weight(&trees[i], u, storage);
            if w <= room {
                room -= w;
                a.insert(i, u);
            }
        }
    }
    a
}

/// Cheapest-destination insertion: repeatedly connect the unconnected
/// destination nearest to the partial tree by a shortest path from it.
/// Ties go to the smaller (cost, hops, node id).
pub fn steiner_tree(
    net: &Network,
    group: &MulticastGroup,
    residual: Option<&[Option<Rational>]>,
) -> Result<TreeRouting, SolveError> {
    group.validate(net).map_err(|reason| SolveError::InvalidGroup { group: group.id, reason })?;
    let rate = group.rate;
    let edge_ok = |e: EdgeId| residual.is_none_or(|r| r[e.index()].is_none_or(|c| c >= rate));
    let mut tree = TreeRouting::new(group.id, group.source, group.destinations.iter().copied());
    let mut pending: BTreeSet<NodeId> = group.destinations.clone();
    while !pending.is_empty() {
        let sources: Vec<NodeId> = tree.nodes().collect();
        let sp = graph::shortest_paths_from(net, &sources, &|_| true, &edge_ok);
        let next = pending
            .iter()
            .filter_map(|&d| Some((sp.dist(d)?, sp.hops(d)?, d)))
            .min()
            .map(|(_, _, d)| d);
        let Some(d) = next else {
            let d = *pending.iter().next().unwrap();
            return Err(SolveError::Unreachable { group: group.id, destination: d });
        };
        let path = sp.path_to(d).expect("reached");
        tree.attach_path(&path.nodes);
        pending.retain(|x| !tree.contains(*x));
    }
    debug_assert!(tree.validate(net).is_ok());
    Ok(tree)
}
