//! Solutions and their JSON form.
//!
//! Nodes are written by label. Rationals are written as `"p"` or `"p/q"`
//! strings. Edge entries appear only for edges that carry traffic and are
//! ordered by (tail, head) label index.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cost::{self, FeasibilityReport, Mode, StateAssignment, Storage};
use crate::error::ParseError;
use crate::graph::{Network, NodeId};
use crate::instance::{self, MulticastGroup};
use crate::rational::{self, serde_text, Rational};
use crate::tree::TreeRouting;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub algorithm: String,
    pub mode: Mode,
    pub storage: Storage,
    pub groups: Vec<MulticastGroup>,
    pub trees: Vec<TreeRouting>,
    pub assignment: StateAssignment,
    pub total_cost: Rational,
    pub report: FeasibilityReport,
    pub delta: usize,
}

impl Solution {
    /// Recomputes cost and feasibility from scratch.
    pub fn assemble(
        net: &Network,
        algorithm: impl Into<String>,
        mode: Mode,
        storage: Storage,
        groups: Vec<MulticastGroup>,
        trees: Vec<TreeRouting>,
        assignment: StateAssignment,
    ) -> Self {
        let total_cost = cost::total_cost(net, &trees, &groups, &assignment);
        let report = cost::verify_feasible(net, &trees, &groups, &assignment, mode, storage);
        let delta = instance::delta(&groups);
        Self { algorithm: algorithm.into(), mode, storage, groups, trees, assignment, total_cost, report, delta }
    }

    pub fn refresh(&mut self, net: &Network) {
        self.total_cost = cost::total_cost(net, &self.trees, &self.groups, &self.assignment);
        self.report = cost::verify_feasible(net, &self.trees, &self.groups, &self.assignment, self.mode, self.storage);
        self.delta = instance::delta(&self.groups);
    }

    pub fn is_feasible(&self) -> bool {
        self.report.is_feasible()
    }

    pub fn tree_index(&self, group: u32) -> Option<usize> {
        self.groups.iter().position(|g| g.id == group)
    }

    /// Cost with every state dropped.
    pub fn stateless_cost(&self, net: &Network) -> Rational {
        cost::total_cost(net, &self.trees, &self.groups, &StateAssignment::empty(self.trees.len()))
    }

    /// Canonical JSON text; equal solutions give identical bytes.
    pub fn to_json(&self, net: &Network) -> String {
        serde_json::to_string_pretty(&self.to_raw(net)).expect("solution serialization is infallible")
    }

    fn to_raw(&self, net: &Network) -> RawSolution {
        let l = |u: NodeId| net.label(u).to_string();
        let trees = self
            .trees
            .iter()
            .zip(&self.groups)
            .enumerate()
            .map(|(i, (t, g))| RawTree {
                group: g.id,
                source: l(g.source),
                rate: g.rate,
                destinations: g.destinations.iter().map(|&d| l(d)).collect(),
                parent: t.parents().iter().map(|(&c, &p)| (l(c), l(p))).collect(),
                states: self.assignment.tree(i).iter().map(|&u| l(u)).collect(),
                cost: cost::tree_cost(net, t, self.assignment.tree(i)),
            })
            .collect();
        let loads = cost::edge_loads(net, &self.trees, &self.groups, &self.assignment);
        let mut edges: Vec<_> = net
            .edges()
            .zip(loads)
            .filter(|(_, ld)| !ld.per_tree.is_empty())
            .map(|((_, e), ld)| {
                (
                    (e.tail, e.head),
                    RawEdgeLoad {
                        tail: l(e.tail),
                        head: l(e.head),
                        eps: ld.per_tree.iter().map(|&(i, n)| (self.groups[i].id.to_string(), n)).collect(),
                        flow: ld.flow,
                    },
                )
            })
            .collect();
        edges.sort_by_key(|(k, _)| *k);
        let r = &self.report;
        RawSolution {
            algorithm: self.algorithm.clone(),
            mode: self.mode,
            storage: self.storage,
            delta: self.delta,
            total_cost: self.total_cost,
            feasible: r.is_feasible(),
            violations: RawViolations {
                nodes: r
                    .node_violations
                    .iter()
                    .map(|v| RawNodeViolation { node: l(v.node), used: v.used, capacity: v.capacity })
                    .collect(),
                edges: r
                    .edge_violations
                    .iter()
                    .map(|v| {
                        let e = net.edge(v.edge);
                        RawEdgeViolation { tail: l(e.tail), head: l(e.head), flow: v.flow, capacity: v.capacity }
                    })
                    .collect(),
                structural: r.structural.clone(),
            },
            trees,
            edges: edges.into_iter().map(|(_, e)| e).collect(),
        }
    }

    /// Parses a solution written by [`Solution::to_json`] against `net`.
    /// Cost and feasibility are recomputed; the file's claims are returned
    /// alongside for comparison.
    pub fn from_json(text: &str, net: &Network) -> Result<(Solution, SolutionClaims), ParseError> {
        let raw: RawSolution = serde_json::from_str(text)?;
        let node = |label: &str| {
            net.node_by_label(label).ok_or_else(|| ParseError::Solution(format!("unknown node `{label}`")))
        };
        let mut groups = Vec::new();
        let mut trees = Vec::new();
        let mut assignment = StateAssignment::default();
        let mut tree_costs = Vec::new();
        for rt in &raw.trees {
            let source = node(&rt.source)?;
            let dests = rt.destinations.iter().map(|d| node(d)).collect::<Result<BTreeSet<_>, _>>()?;
            let parents = rt
                .parent
                .iter()
                .map(|(c, p)| Ok((node(c)?, node(p)?)))
                .collect::<Result<Vec<_>, ParseError>>()?;
            let tree = TreeRouting::from_parents(rt.group, source, dests.iter().copied(), parents)
                .map_err(|e| ParseError::Solution(format!("group {}: {e}", rt.group)))?;
            let states = rt.states.iter().map(|s| node(s)).collect::<Result<BTreeSet<_>, _>>()?;
            groups.push(MulticastGroup { id: rt.group, source, destinations: dests, rate: rt.rate });
            trees.push(tree);
            assignment.states.push(states);
            tree_costs.push((rt.group, rt.cost));
        }
        let mut edge_flows = BTreeMap::new();
        for e in &raw.edges {
            edge_flows.insert((e.tail.clone(), e.head.clone()), (e.eps.clone(), e.flow));
        }
        let claims = SolutionClaims { total_cost: raw.total_cost, feasible: raw.feasible, tree_costs, edge_flows };
        let sol = Solution::assemble(net, raw.algorithm, raw.mode, raw.storage, groups, trees, assignment);
        Ok((sol, claims))
    }
}

/// Quantities stated in a solution file, kept for tamper checks.
#[derive(Clone, Debug)]
pub struct SolutionClaims {
    pub total_cost: Rational,
    pub feasible: bool,
    pub tree_costs: Vec<(u32, Rational)>,
    pub edge_flows: BTreeMap<(String, String), (BTreeMap<String, u64>, Rational)>,
}

impl SolutionClaims {
    /// First claim that disagrees with `actual`, described for humans.
    pub fn first_divergence(&self, actual: &Solution, net: &Network) -> Option<String> {
        let fmt = rational::format;
        if self.total_cost != actual.total_cost {
            return Some(format!(
                "total_cost: file says {}, recomputed {}",
                fmt(&self.total_cost),
                fmt(&actual.total_cost)
            ));
        }
        for (i, &(g, c)) in self.tree_costs.iter().enumerate() {
            let real = cost::tree_cost(net, &actual.trees[i], actual.assignment.tree(i));
            if c != real {
                return Some(format!("cost of group {g}: file says {}, recomputed {}", fmt(&c), fmt(&real)));
            }
        }
        let raw = actual.to_raw(net);
        let real: BTreeMap<_, _> =
            raw.edges.iter().map(|e| ((e.tail.clone(), e.head.clone()), (e.eps.clone(), e.flow))).collect();
        for (k, v) in &self.edge_flows {
            match real.get(k) {
                None => return Some(format!("edge {} -> {}: listed but carries no traffic", k.0, k.1)),
                Some(r) if r.0 != v.0 => return Some(format!("edge {} -> {}: per-group copies differ", k.0, k.1)),
                Some(r) if r.1 != v.1 => {
                    return Some(format!("edge {} -> {}: file flow {}, recomputed {}", k.0, k.1, fmt(&v.1), fmt(&r.1)))
                }
                _ => {}
            }
        }
        if let Some(k) = real.keys().find(|k| !self.edge_flows.contains_key(*k)) {
            return Some(format!("edge {} -> {}: carries traffic but is missing from the file", k.0, k.1));
        }
        if self.feasible != actual.is_feasible() {
            return Some(format!("feasible: file says {}, recomputed {}", self.feasible, actual.is_feasible()));
        }
        None
    }
}

#[derive(Serialize, Deserialize)]
struct RawSolution {
    algorithm: String,
    mode: Mode,
    storage: Storage,
    delta: usize,
    #[serde(with = "serde_text")]
    total_cost: Rational,
    feasible: bool,
    violations: RawViolations,
    trees: Vec<RawTree>,
    edges: Vec<RawEdgeLoad>,
}

#[derive(Serialize, Deserialize)]
struct RawViolations {
    nodes: Vec<RawNodeViolation>,
    edges: Vec<RawEdgeViolation>,
    structural: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawNodeViolation {
    node: String,
    used: u64,
    capacity: u64,
}

#[derive(Serialize, Deserialize)]
struct RawEdgeViolation {
    tail: String,
    head: String,
    #[serde(with = "serde_text")]
    flow: Rational,
    #[serde(with = "serde_text")]
    capacity: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    group: u32,
    source: String,
    #[serde(with = "serde_text")]
    rate: Rational,
    destinations: Vec<String>,
    /// child label → parent label
    parent: BTreeMap<String, String>,
    states: Vec<String>,
    #[serde(with = "serde_text")]
    cost: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawEdgeLoad {
    tail: String,
    head: String,
    /// group id → ε
    eps: BTreeMap<String, u64>,
    #[serde(with = "serde_text")]
    flow: Rational,
}
