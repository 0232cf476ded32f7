//! Local search after the greedy stage.
//!
//! 1. Reassignment: at every node that is a branch node in more trees than
//!    its storage admits, re-pick the trees holding a state there (top-b by
//!    reduction, or a knapsack under degree-weighted storage).
//! 2. Rerouting: move the segment below a branch node to a cheaper feed
//!    `w → v` when that lowers the tree's cost under the current states.
//! 3. Greedy top-up with whatever storage the first two steps freed.
//! 4. In link mode, clear edges whose aggregate flow exceeds capacity by
//!    moving states and rerouting segments. This is the only step allowed
//!    to raise the cost. Edges still over capacity are reported.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::assign::greedy_extend;
use super::knapsack::{knapsack, KnapsackItem};
use super::routing::{segment_below, segment_through, Segment};
use super::SolverConfig;
use crate::cost::{self, is_branch_node, storage_weight, StateAssignment, Storage};
use crate::graph::{self, EdgeId, Network, NodeId};
use crate::instance::MulticastGroup;
use crate::rational::{int, Rational};
use crate::tree::TreeRouting;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalSearchStats {
    pub reassigned_nodes: usize,
    pub reroutes: usize,
    pub topped_up: usize,
    pub link_repairs: usize,
    /// Edges still over capacity on exit (link mode only).
    pub link_violations_left: usize,
}

/// Mutable working state shared by the steps.
struct Work<'a> {
    net: &'a Network,
    groups: &'a [MulticastGroup],
    storage: Storage,
    links: bool,
    usage: Vec<u64>,
    flow: Vec<Rational>,
}

impl Work<'_> {
    fn node_room(&self, u: NodeId) -> u64 {
        self.net.node_capacity(u).saturating_sub(self.usage[u.index()])
    }

    /// Storage changes are within capacity wherever usage grows.
    fn storage_admits(&self, old: &BTreeMap<NodeId, u64>, new: &BTreeMap<NodeId, u64>) -> bool {
        new.iter().all(|(u, &w)| {
            let before = old.get(u).copied().unwrap_or(0);
            w <= before || self.usage[u.index()] - before + w <= self.net.node_capacity(*u)
        })
    }

    /// Link changes are within capacity wherever flow grows.
    fn links_admit(&self, old: &BTreeMap<EdgeId, Rational>, new: &BTreeMap<EdgeId, Rational>) -> bool {
        !self.links
            || new.iter().all(|(e, f)| {
                let before = old.get(e).copied().unwrap_or_else(Rational::zero);
                *f <= before || self.net.edge(*e).capacity.admits(&(self.flow[e.index()] - before + f))
            })
    }

    fn commit(
        &mut self,
        (old_s, new_s): (&BTreeMap<NodeId, u64>, &BTreeMap<NodeId, u64>),
        (old_f, new_f): (&BTreeMap<EdgeId, Rational>, &BTreeMap<EdgeId, Rational>),
    ) {
        for (u, w) in old_s {
            self.usage[u.index()] -= w;
        }
        for (u, w) in new_s {
            self.usage[u.index()] += w;
        }
        for (e, f) in old_f {
            self.flow[e.index()] -= f;
        }
        for (e, f) in new_f {
            self.flow[e.index()] += f;
        }
    }
}

fn tree_storage(tree: &TreeRouting, states: &BTreeSet<NodeId>, storage: Storage) -> BTreeMap<NodeId, u64> {
    states.iter().map(|&u| (u, storage_weight(tree, u, storage))).collect()
}

fn tree_flow(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>, rate: Rational) -> BTreeMap<EdgeId, Rational> {
    cost::edge_transmissions(tree, states)
        .into_iter()
        .map(|((p, c), eps)| (net.find_edge(p, c).expect("tree edge"), rate * int(eps as i64)))
        .collect()
}

pub fn local_search(
    net: &Network,
    groups: &[MulticastGroup],
    trees: &mut [TreeRouting],
    assignment: &mut StateAssignment,
    config: &SolverConfig,
) -> LocalSearchStats {
    let storage = config.storage();
    let links = config.mode.checks_links();
    let mut work = Work {
        net,
        groups,
        storage,
        links,
        usage: cost::node_usage(net, trees, assignment, storage),
        flow: cost::edge_loads(net, trees, groups, assignment).into_iter().map(|l| l.flow).collect(),
    };
    let mut stats = LocalSearchStats::default();
    if config.stages.reassign {
        stats.reassigned_nodes = reassign(&mut work, trees, assignment, config);
    }
    if config.stages.local_reroute {
        stats.reroutes = improve_routes(&mut work, trees, assignment, config);
    }
    if config.stages.greedy {
        stats.topped_up = greedy_extend(net, groups, trees, storage, assignment, None);
        work.flow = cost::edge_loads(net, trees, groups, assignment).into_iter().map(|l| l.flow).collect();
        work.usage = cost::node_usage(net, trees, assignment, storage);
    }
    if links && config.stages.link_repair {
        stats.link_repairs = repair_links(&mut work, trees, assignment, config);
    }
    if links {
        stats.link_violations_left =
            net.edges().filter(|(id, e)| !e.capacity.admits(&work.flow[id.index()])).count();
    }
    stats
}

/// Re-picks the state holders at every contested node. Returns the number
/// of nodes whose holder set changed.
fn reassign(work: &mut Work, trees: &[TreeRouting], assignment: &mut StateAssignment, config: &SolverConfig) -> usize {
    let net = work.net;
    let mut branch_of: Vec<Vec<usize>> = vec![Vec::new(); net.node_count()];
    for (i, t) in trees.iter().enumerate() {
        for u in cost::branch_nodes(t) {
            branch_of[u.index()].push(i);
        }
    }
    let mut changed = 0;
    for u in net.nodes() {
        let mut cands = branch_of[u.index()].clone();
        let demand: u64 = cands.iter().map(|&i| storage_weight(&trees[i], u, work.storage)).sum();
        let budget = net.node_capacity(u);
        if demand <= budget {
            continue;
        }
        cands.sort_by_key(|&i| work.groups[i].id);
        let items: Vec<KnapsackItem> = cands
            .iter()
            .map(|&i| {
                let mut s = assignment.tree(i).clone();
                s.remove(&u);
                KnapsackItem {
                    profit: work.groups[i].rate * cost::tree_gain(net, &trees[i], &s, u),
                    weight: storage_weight(&trees[i], u, work.storage),
                }
            })
            .collect();
        let chosen: BTreeSet<usize> = match work.storage {
            Storage::Entries => {
                let mut order: Vec<usize> = (0..cands.len()).filter(|&k| items[k].profit > Rational::zero()).collect();
                // Stable sort keeps smaller group ids first among equal reductions.
                order.sort_by(|&a, &b| items[b].profit.cmp(&items[a].profit));
                order.into_iter().take(budget as usize).collect()
            }
            Storage::DegreeWeighted => knapsack(&items, budget, config.knapsack_epsilon).into_iter().collect(),
        };
        let current: BTreeSet<usize> = (0..cands.len()).filter(|&k| assignment.contains(cands[k], u)).collect();
        let value = |set: &BTreeSet<usize>| set.iter().map(|&k| items[k].profit).sum::<Rational>();
        if value(&chosen) <= value(&current) {
            continue;
        }
        // Dropping a state raises that tree's upstream flow; check links.
        let mut plan = Vec::new();
        for k in current.symmetric_difference(&chosen) {
            let i = cands[*k];
            let old = assignment.tree(i).clone();
            let mut new = old.clone();
            if chosen.contains(k) {
                new.insert(u);
            } else {
                new.remove(&u);
            }
            let rate = work.groups[i].rate;
            plan.push((i, new.clone(), tree_flow(net, &trees[i], &old, rate), tree_flow(net, &trees[i], &new, rate)));
        }
        if work.links {
            let mut merged_old: BTreeMap<EdgeId, Rational> = BTreeMap::new();
            let mut merged_new: BTreeMap<EdgeId, Rational> = BTreeMap::new();
            for (_, _, of, nf) in &plan {
                for (e, f) in of {
                    *merged_old.entry(*e).or_insert_with(Rational::zero) += f;
                }
                for (e, f) in nf {
                    *merged_new.entry(*e).or_insert_with(Rational::zero) += f;
                }
            }
            if !work.links_admit(&merged_old, &merged_new) {
                continue;
            }
        }
        for (i, new, of, nf) in plan {
            let old_s = tree_storage(&trees[i], assignment.tree(i), work.storage);
            let new_s = tree_storage(&trees[i], &new, work.storage);
            work.commit((&old_s, &new_s), (&of, &nf));
            assignment.states[i] = new;
        }
        debug_assert!(work.usage[u.index()] <= budget);
        changed += 1;
    }
    changed
}

/// Eligible on-tree feeds `w` for the segment ending at `v`, with the
/// off-tree path cost to `v`, under the relaxed local-search rules.
fn feed_candidates(
    work: &Work,
    tree: &TreeRouting,
    states: &BTreeSet<NodeId>,
    seg: &Segment,
    dist: &[Option<Rational>],
) -> Vec<(NodeId, Rational)> {
    let (u, v) = (seg.top(), seg.bottom());
    let below_v = tree.subtree(v);
    let interior: BTreeSet<NodeId> = seg.interior().iter().copied().collect();
    let mut out = Vec::new();
    for w in tree.nodes() {
        let Some(d) = dist[w.index()] else { continue };
        if w == u || interior.contains(&w) || below_v.contains(&w) {
            continue;
        }
        let becomes_branch = w != tree.root() && tree.out_degree(w) == 1;
        if becomes_branch && work.node_room(w) == 0 {
            continue;
        }
        if work.storage == Storage::DegreeWeighted && states.contains(&w) && work.node_room(w) == 0 {
            continue;
        }
        out.push((w, d));
    }
    out
}

/// `tree` with `v`'s subtree fed over `path` instead, and the states that
/// are still valid afterwards.
fn spliced(tree: &TreeRouting, states: &BTreeSet<NodeId>, path: &[NodeId]) -> (TreeRouting, BTreeSet<NodeId>) {
    let mut t = tree.clone();
    t.splice(path);
    let s = states.iter().copied().filter(|&x| is_branch_node(&t, x)).collect();
    (t, s)
}

struct Move {
    tree: TreeRouting,
    states: BTreeSet<NodeId>,
    old_storage: BTreeMap<NodeId, u64>,
    new_storage: BTreeMap<NodeId, u64>,
    old_flow: BTreeMap<EdgeId, Rational>,
    new_flow: BTreeMap<EdgeId, Rational>,
}

fn evaluate(work: &Work, i: usize, tree: &TreeRouting, states: &BTreeSet<NodeId>, path: &[NodeId]) -> Option<Move> {
    let (nt, ns) = spliced(tree, states, path);
    let old_storage = tree_storage(tree, states, work.storage);
    let new_storage = tree_storage(&nt, &ns, work.storage);
    if !work.storage_admits(&old_storage, &new_storage) {
        return None;
    }
    let rate = work.groups[i].rate;
    let (old_flow, new_flow) = if work.links {
        (tree_flow(work.net, tree, states, rate), tree_flow(work.net, &nt, &ns, rate))
    } else {
        (BTreeMap::new(), BTreeMap::new())
    };
    if !work.links_admit(&old_flow, &new_flow) {
        return None;
    }
    Some(Move { tree: nt, states: ns, old_storage, new_storage, old_flow, new_flow })
}

fn apply(work: &mut Work, trees: &mut [TreeRouting], assignment: &mut StateAssignment, i: usize, mv: Move) {
    work.commit((&mv.old_storage, &mv.new_storage), (&mv.old_flow, &mv.new_flow));
    trees[i] = mv.tree;
    assignment.states[i] = mv.states;
}

/// Edges a replacement path for `tree` may use: any edge in node mode;
/// in link mode only edges with room for `need` more flow.
fn path_edge_ok<'a>(work: &'a Work, need: Rational, banned: Option<EdgeId>) -> impl Fn(EdgeId) -> bool + 'a {
    move |e| {
        Some(e) != banned
            && (!work.links || work.net.edge(e).capacity.residual(&work.flow[e.index()]).is_none_or(|r| r >= need))
    }
}

fn improve_routes(
    work: &mut Work,
    trees: &mut [TreeRouting],
    assignment: &mut StateAssignment,
    config: &SolverConfig,
) -> usize {
    let mut moves = 0;
    for i in 0..trees.len() {
        for _ in 0..config.max_reroute_passes {
            let mut moved = false;
            let tops: Vec<NodeId> = trees[i].nodes().filter(|&x| trees[i].out_degree(x) >= 2).collect();
            for u in tops {
                let children: Vec<NodeId> = trees[i].children(u).collect();
                for c in children {
                    if trees[i].out_degree(u) < 2 || trees[i].parent(c) != Some(u) {
                        continue;
                    }
                    if let Some(mv) = best_improvement(work, &trees[i], assignment.tree(i), i, u, c) {
                        apply(work, trees, assignment, i, mv);
                        moved = true;
                        moves += 1;
                    }
                }
            }
            if !moved {
                break;
            }
        }
    }
    moves
}

/// Cheapest cost-lowering move of the segment below `u` through `c`.
fn best_improvement(
    work: &Work,
    tree: &TreeRouting,
    states: &BTreeSet<NodeId>,
    i: usize,
    u: NodeId,
    c: NodeId,
) -> Option<Move> {
    let net = work.net;
    let seg = segment_below(net, tree, u, c);
    let v = seg.bottom();
    let lens = cost::segment_lengths(net, tree, states);
    let up = cost::upward_demand(tree, states);
    let edge_ok = path_edge_ok(work, work.groups[i].rate * int(up[&v] as i64), None);
    let dist = graph::costs_to(net, v, &|x| !tree.contains(x), &edge_ok);
    // A state at u that stops being valid must be re-costed in full.
    let drops_state = states.contains(&u) && tree.out_degree(u) == 2;
    let old_cost = cost::tree_cost(net, tree, states);
    let mut cands: Vec<(Rational, Rational, NodeId)> = feed_candidates(work, tree, states, &seg, &dist)
        .into_iter()
        .filter(|(_, d)| *d <= seg.cost)
        .map(|(w, d)| {
            let lw = if w == tree.root() || states.contains(&w) { Rational::zero() } else { lens[&w] };
            (lw + d, d, w)
        })
        .collect();
    cands.sort();
    for (key, d, w) in cands {
        // Δ = up(v)·(key − L(v)) plus, when u's state drops, a non-negative term.
        if key >= lens[&v] {
            break;
        }
        let path = graph::shortest_path_filtered(net, w, v, &|x| x == v || !tree.contains(x), &edge_ok)
            .expect("reverse search found a path");
        debug_assert_eq!(path.cost, d);
        let Some(mv) = evaluate(work, i, tree, states, &path.nodes) else { continue };
        let new_cost = cost::tree_cost(net, &mv.tree, &mv.states);
        if !drops_state {
            debug_assert_eq!(new_cost - old_cost, int(up[&v] as i64) * (key - lens[&v]));
        }
        if new_cost < old_cost {
            return Some(mv);
        }
    }
    None
}

/// Clears over-capacity edges, first by moving states so that trees stop
/// tunnelling copies across them, then by rerouting segments. Returns the
/// number of moves.
fn repair_links(
    work: &mut Work,
    trees: &mut [TreeRouting],
    assignment: &mut StateAssignment,
    config: &SolverConfig,
) -> usize {
    let net = work.net;
    let mut holders = Holders::new(net, assignment);
    let mut repairs = 0;
    for _ in 0..config.max_reroute_passes {
        let violated: Vec<EdgeId> =
            net.edges().filter(|(id, e)| !e.capacity.admits(&work.flow[id.index()])).map(|(id, _)| id).collect();
        if violated.is_empty() {
            break;
        }
        let mut progress = false;
        for e in violated {
            let (p, c) = (net.edge(e).tail, net.edge(e).head);
            let over = |work: &Work| !net.edge(e).capacity.admits(&work.flow[e.index()]);
            // Trees on the edge, those sending the most copies first.
            let users = |trees: &[TreeRouting], assignment: &StateAssignment| {
                let mut u: Vec<(u64, u32, usize)> = (0..trees.len())
                    .filter(|&i| trees[i].parent(c) == Some(p))
                    .map(|i| {
                        let s = assignment.tree(i);
                        let copies = if s.contains(&c) { 1 } else { stateless_demand(&trees[i], s, c) };
                        (copies, work.groups[i].id, i)
                    })
                    .collect();
                u.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                u
            };
            // Nodes where no eviction fitted; flows rarely change enough
            // within one edge's repair to make a retry worthwhile.
            let mut stuck = BTreeSet::new();
            for (copies, _, i) in users(trees, assignment) {
                if copies <= 1 || !over(work) {
                    break;
                }
                while over(work) && swap_state(work, trees, assignment, &mut holders, &mut stuck, i, c) {
                    repairs += 1;
                    progress = true;
                }
            }
            for (_, _, i) in users(trees, assignment).into_iter().take(REPAIR_TRIES) {
                if !over(work) {
                    break;
                }
                if let Some(mv) = best_repair(work, &trees[i], assignment.tree(i), i, c, e) {
                    holders.changed(i, assignment.tree(i), &mv.states);
                    apply(work, trees, assignment, i, mv);
                    repairs += 1;
                    progress = true;
                }
            }
        }
        if !progress {
            break;
        }
    }
    repairs
}

/// Trees per over-capacity edge that the reroute repair tries in one pass.
const REPAIR_TRIES: usize = 64;

/// Copies `x` would send upstream without a state of its own.
fn stateless_demand(tree: &TreeRouting, states: &BTreeSet<NodeId>, x: NodeId) -> u64 {
    u64::from(tree.is_destination(x))
        + tree.children(x).map(|y| if states.contains(&y) { 1 } else { stateless_demand(tree, states, y) }).sum::<u64>()
}

/// Edges from the nearest state (or root) above `x` down to `x`, and their
/// summed cost: where a state at `x` changes the copy count.
fn feed_path(net: &Network, tree: &TreeRouting, states: &BTreeSet<NodeId>, x: NodeId) -> (Vec<EdgeId>, Rational) {
    let a = cost::nearest_upstream_state(tree, states, x);
    let nodes = tree.path_between(a, x);
    let edges: Vec<EdgeId> = nodes.windows(2).map(|w| net.find_edge(w[0], w[1]).expect("tree edge")).collect();
    let c = edges.iter().map(|&e| net.edge(e).cost).sum();
    (edges, c)
}

/// State holders per node, with a lazily built eviction order.
struct Holders {
    of: Vec<BTreeSet<usize>>,
    /// `(loss, group id, tree)` ascending; `None` once stale.
    order: Vec<Option<Vec<(Rational, u32, usize)>>>,
}

impl Holders {
    fn new(net: &Network, assignment: &StateAssignment) -> Self {
        let mut of = vec![BTreeSet::new(); net.node_count()];
        for (i, u) in assignment.pairs() {
            of[u.index()].insert(i);
        }
        Self { of, order: vec![None; net.node_count()] }
    }

    /// Records that tree `i` changed from `old` to `new` states. Losses at
    /// every state node of the tree may have moved.
    fn changed(&mut self, i: usize, old: &BTreeSet<NodeId>, new: &BTreeSet<NodeId>) {
        for u in old.difference(new) {
            self.of[u.index()].remove(&i);
        }
        for u in new.difference(old) {
            self.of[u.index()].insert(i);
        }
        for u in old.union(new) {
            self.order[u.index()] = None;
        }
    }

    fn eviction_order(&mut self, work: &Work, trees: &[TreeRouting], assignment: &StateAssignment, x: NodeId) -> &[(Rational, u32, usize)] {
        if self.order[x.index()].is_none() {
            let mut list: Vec<(Rational, u32, usize)> = self.of[x.index()]
                .iter()
                .map(|&j| {
                    let mut rest = assignment.tree(j).clone();
                    rest.remove(&x);
                    let extra = work.groups[j].rate * int(stateless_demand(&trees[j], &rest, x) as i64 - 1);
                    (extra * feed_path(work.net, &trees[j], &rest, x).1, work.groups[j].id, j)
                })
                .collect();
            list.sort();
            self.order[x.index()] = Some(list);
        }
        self.order[x.index()].as_deref().expect("just built")
    }
}

/// Cuts the copies tree `i` sends into `c` by giving it a state at a
/// stateless branch node at or below `c` with no state in between,
/// nearest first. A full node evicts the holder whose loss costs least
/// among those whose extra copies still fit their links.
fn swap_state(
    work: &mut Work,
    trees: &[TreeRouting],
    assignment: &mut StateAssignment,
    holders: &mut Holders,
    stuck: &mut BTreeSet<NodeId>,
    i: usize,
    c: NodeId,
) -> bool {
    let net = work.net;
    let tree = &trees[i];
    let mine = assignment.tree(i).clone();
    let mut spots = Vec::new();
    let mut queue = std::collections::VecDeque::from([c]);
    while let Some(x) = queue.pop_front() {
        if mine.contains(&x) {
            continue;
        }
        if is_branch_node(tree, x) {
            spots.push(x);
        }
        queue.extend(tree.children(x));
    }
    for x in spots {
        let need = storage_weight(tree, x, work.storage);
        if need > net.node_capacity(x) || stuck.contains(&x) {
            continue;
        }
        let mine_edges = feed_path(net, tree, &mine, x).0;
        let saved = work.groups[i].rate * int(stateless_demand(tree, &mine, x) as i64 - 1);
        let mut evict = None;
        if work.node_room(x) < need {
            let room = work.node_room(x);
            for &(_, _, j) in holders.eviction_order(work, trees, assignment, x) {
                if j == i || room + storage_weight(&trees[j], x, work.storage) < need {
                    continue;
                }
                let mut rest = assignment.tree(j).clone();
                rest.remove(&x);
                let extra = work.groups[j].rate * int(stateless_demand(&trees[j], &rest, x) as i64 - 1);
                let edges = feed_path(net, &trees[j], &rest, x).0;
                if work.links && !edges.iter().all(|&e| net.edge(e).capacity.admits(&(work.flow[e.index()] + extra))) {
                    continue;
                }
                evict = Some((j, rest, edges, extra));
                break;
            }
            if evict.is_none() {
                stuck.insert(x);
                continue;
            }
        }
        if let Some((j, rest, edges, extra)) = evict {
            for e in edges {
                work.flow[e.index()] += extra;
            }
            work.usage[x.index()] -= storage_weight(&trees[j], x, work.storage);
            holders.changed(j, assignment.tree(j), &rest);
            assignment.states[j] = rest;
        }
        for e in mine_edges {
            work.flow[e.index()] -= saved;
        }
        work.usage[x.index()] += need;
        let mut new = mine.clone();
        new.insert(x);
        holders.changed(i, &mine, &new);
        assignment.states[i] = new;
        return true;
    }
    false
}

/// Cheapest link-feasible move that lowers the tree's flow on `banned`,
/// the edge into `c`: either the segment through that edge or any segment
/// below it is fed from elsewhere. Per segment, the four cheapest feeds by
/// estimated cost are tried and the first admissible one is kept.
fn best_repair(
    work: &Work,
    tree: &TreeRouting,
    states: &BTreeSet<NodeId>,
    i: usize,
    c: NodeId,
    banned: EdgeId,
) -> Option<Move> {
    let net = work.net;
    let up = cost::upward_demand(tree, states);
    let lens = cost::segment_lengths(net, tree, states);
    let old_on_banned = work.groups[i].rate * int(up[&c] as i64);
    let mut segments = vec![segment_through(net, tree, c)];
    for x in tree.subtree(c) {
        if tree.out_degree(x) >= 2 || (tree.is_destination(x) && tree.out_degree(x) == 1) {
            segments.extend(tree.children(x).map(|y| segment_below(net, tree, x, y)));
        }
    }
    let mut best: Option<(Rational, NodeId, NodeId, Move)> = None;
    for seg in segments {
        let v = seg.bottom();
        let edge_ok = path_edge_ok(work, work.groups[i].rate * int(up[&v] as i64), Some(banned));
        let dist = graph::costs_to(net, v, &|x| !tree.contains(x), &edge_ok);
        let mut cands: Vec<(Rational, NodeId)> = feed_candidates(work, tree, states, &seg, &dist)
            .into_iter()
            .map(|(w, d)| {
                let lw = if w == tree.root() || states.contains(&w) { Rational::zero() } else { lens[&w] };
                (lw + d, w)
            })
            .collect();
        cands.sort();
        for (_, w) in cands.into_iter().take(4) {
            let path = graph::shortest_path_filtered(net, w, v, &|x| x == v || !tree.contains(x), &edge_ok)
                .expect("reverse search found a path");
            let Some(mv) = evaluate(work, i, tree, states, &path.nodes) else { continue };
            if mv.new_flow.get(&banned).is_some_and(|f| *f >= old_on_banned) {
                continue;
            }
            let k = cost::tree_cost(net, &mv.tree, &mv.states);
            if best.as_ref().is_none_or(|(bk, bv, bw, _)| (&k, v, w) < (bk, *bv, *bw)) {
                best = Some((k, v, w, mv));
            }
            break;
        }
    }
    best.map(|(_, _, _, mv)| mv)
}
