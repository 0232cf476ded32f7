//! Instance generators: random experiment groups, link-capacity
//! calibration, the two 3-SAT reduction gadgets, and small fixed instances.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{solve_spt, solve_steiner};
use crate::cost::{edge_loads, Mode, Storage};
use crate::error::{GenError, ParseError};
use crate::graph::{Capacity, Network, NodeId};
use crate::instance::{Instance, MulticastGroup};
use crate::mtrsa::SolverConfig;
use crate::rational::{int, Rational};
use crate::tree::TreeRouting;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum RateDist {
    Constant {
        #[serde(with = "crate::rational::serde_text")]
        rate: Rational,
    },
    /// Integer rates drawn uniformly from `lo..=hi`.
    Uniform { lo: u32, hi: u32 },
}

impl Default for RateDist {
    fn default() -> Self {
        RateDist::Constant { rate: Rational::one() }
    }
}

/// `t` groups with a uniformly drawn source and `dest_count` distinct
/// destinations each. If `node_cap` is given, every node gets that many
/// entries; otherwise the network's capacities are kept.
pub fn random_instance(
    net: &Network,
    t: usize,
    dest_count: usize,
    rates: &RateDist,
    node_cap: Option<u64>,
    seed: u64,
) -> Result<Instance, GenError> {
    if dest_count == 0 || dest_count >= net.node_count() {
        return Err(GenError::TooFewNodes { need: dest_count + 1, have: net.node_count() });
    }
    if let RateDist::Uniform { lo, hi } = rates {
        if lo > hi || *lo == 0 {
            return Err(GenError::Parameter(format!("rate range {lo}..={hi} must be non-empty and positive")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<NodeId> = net.nodes().collect();
    let mut groups = Vec::with_capacity(t);
    for i in 0..t {
        let picked: Vec<NodeId> = nodes.choose_multiple(&mut rng, dest_count + 1).copied().collect();
        let rate = match rates {
            RateDist::Constant { rate } => *rate,
            RateDist::Uniform { lo, hi } => int(rng.gen_range(*lo..=*hi) as i64),
        };
        groups.push(MulticastGroup::new(i as u32, picked[0], picked[1..].iter().copied(), rate));
    }
    let mut network = net.clone();
    if let Some(b) = node_cap {
        network.set_uniform_node_capacity(b);
    }
    Ok(Instance::new(network, groups))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationBase {
    #[default]
    Spt,
    Steiner,
}

/// Sets every link capacity to the peak per-edge flow of the baseline
/// solution, solved with node capacities only, so that its busiest link
/// runs at exactly 100%. The flow counts every tunnelled copy, so it
/// depends on the storage model and on the seed of the random state
/// assignment; pass the ones the experiment will use.
pub fn calibrate_capacity(
    net: &Network,
    groups: &[MulticastGroup],
    base: CalibrationBase,
    storage: Storage,
    seed: u64,
) -> Result<Network, GenError> {
    let config = SolverConfig { storage: Some(storage), seed, ..SolverConfig::new(Mode::SmteN) };
    let sol = match base {
        CalibrationBase::Spt => solve_spt(net, groups, &config),
        CalibrationBase::Steiner => solve_steiner(net, groups, &config),
    }
    .map_err(|e| GenError::Parameter(e.to_string()))?;
    let peak = edge_loads(net, &sol.trees, &sol.groups, &sol.assignment)
        .into_iter()
        .map(|l| l.flow)
        .max()
        .unwrap_or_else(Rational::zero);
    let mut out = net.clone();
    let cap = if peak.is_zero() { Capacity::Unbounded } else { Capacity::Finite(peak) };
    out.set_uniform_edge_capacity(cap);
    Ok(out)
}

/// A 3-CNF formula; literals are non-zero, `-k` negates variable `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn new(vars: u32, clauses: Vec<Vec<i32>>) -> Result<Self, GenError> {
        let f = Cnf { vars, clauses };
        f.check()?;
        Ok(f)
    }

    fn check(&self) -> Result<(), GenError> {
        for (j, c) in self.clauses.iter().enumerate() {
            if c.len() != 3 {
                return Err(GenError::MalformedClause { clause: j + 1, len: c.len() });
            }
            for &l in c {
                if l == 0 || l.unsigned_abs() > self.vars {
                    return Err(GenError::UnknownVariable { clause: j + 1, var: l.unsigned_abs(), n: self.vars });
                }
            }
        }
        Ok(())
    }

    /// DIMACS CNF: `c` comment lines, a `p cnf <vars> <clauses>` header,
    /// then zero-terminated clauses (which may span lines).
    pub fn parse_dimacs(text: &str) -> Result<Self, ParseError> {
        let bad = |line: usize, msg: String| ParseError::Cnf { line, msg };
        let mut header: Option<(u32, usize)> = None;
        let mut clauses = Vec::new();
        let mut cur = Vec::new();
        let last = text.lines().count();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                match f.as_slice() {
                    ["cnf", v, c] => {
                        let v = v.parse().map_err(|_| bad(no + 1, "bad variable count".into()))?;
                        let c = c.parse().map_err(|_| bad(no + 1, "bad clause count".into()))?;
                        header = Some((v, c));
                    }
                    _ => return Err(bad(no + 1, "expected `p cnf <vars> <clauses>`".into())),
                }
                continue;
            }
            if header.is_none() {
                return Err(bad(no + 1, "clause before header".into()));
            }
            for tok in line.split_whitespace() {
                let l: i32 = tok.parse().map_err(|_| bad(no + 1, format!("bad literal `{tok}`")))?;
                if l == 0 {
                    clauses.push(std::mem::take(&mut cur));
                } else {
                    cur.push(l);
                }
            }
        }
        let (vars, count) = header.ok_or_else(|| bad(last, "missing header".into()))?;
        if !cur.is_empty() {
            clauses.push(cur);
        }
        if clauses.len() != count {
            return Err(bad(last, format!("header says {count} clauses, found {}", clauses.len())));
        }
        let f = Cnf { vars, clauses };
        f.check().map_err(|e| bad(last, e.to_string()))?;
        Ok(f)
    }

    pub fn eval(&self, truth: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| truth[l.unsigned_abs() as usize - 1] == (l > 0)))
    }

    /// First satisfying assignment in counting order, by truth table.
    pub fn satisfying_assignment(&self) -> Result<Option<Vec<bool>>, GenError> {
        if self.vars > 20 {
            return Err(GenError::Parameter(format!("{} variables is too many for a truth table", self.vars)));
        }
        let n = self.vars as usize;
        Ok((0u32..1 << n).map(|m| (0..n).map(|k| m >> k & 1 == 1).collect::<Vec<_>>()).find(|t| self.eval(t)))
    }

    /// Every sign pattern over the first three variables: unsatisfiable.
    pub fn all_sign_patterns() -> Self {
        let clauses = (0..8).map(|m| (0..3).map(|k| if m >> k & 1 == 1 { -(k + 1) } else { k + 1 }).collect()).collect();
        Cnf { vars: 3, clauses }
    }
}

fn literal_nodes(net: &mut Network, vars: u32, cap: u64) -> Vec<[NodeId; 2]> {
    (1..=vars)
        .map(|i| [net.add_node(format!("u{i}"), cap).unwrap(), net.add_node(format!("~u{i}"), cap).unwrap()])
        .collect()
}

fn literal_node(u: &[[NodeId; 2]], l: i32) -> NodeId {
    u[l.unsigned_abs() as usize - 1][usize::from(l < 0)]
}

/// The inapproximability gadget for the node-capacity-only problem:
/// `|D₁| = m·p^q` clause copies, `|D₂| = n·p^q` variable copies,
/// `p = max(m, n)`, source edges costing `p^q`, unit node capacities.
pub fn gadget_theorem1(f: &Cnf, q: u32) -> Result<Instance, GenError> {
    f.check()?;
    if q == 0 {
        return Err(GenError::Parameter("q must be at least 1".into()));
    }
    let (n, m) = (f.vars as u64, f.clauses.len() as u64);
    let p = n.max(m).max(1);
    let copies = p.checked_pow(q).filter(|c| c * (n + m) <= 100_000).ok_or_else(|| {
        GenError::Parameter(format!("p^q = {p}^{q} makes the gadget too large"))
    })?;
    let mut net = Network::new();
    let s = net.add_node("s", 1).unwrap();
    let u = literal_nodes(&mut net, f.vars, 1);
    let heavy = int(copies as i64);
    for pair in &u {
        for &x in pair {
            net.add_edge(s, x, heavy, Capacity::Unbounded).unwrap();
        }
    }
    let mut d1 = Vec::new();
    for (j, c) in f.clauses.iter().enumerate() {
        for k in 1..=copies {
            let d = net.add_node(format!("d{}_{k}", j + 1), 1).unwrap();
            let lits: BTreeSet<NodeId> = c.iter().map(|&l| literal_node(&u, l)).collect();
            for x in lits {
                net.add_edge(x, d, int(1), Capacity::Unbounded).unwrap();
            }
            d1.push(d);
        }
    }
    let mut d2 = Vec::new();
    for (i, pair) in u.iter().enumerate() {
        for k in 1..=copies {
            let w = net.add_node(format!("w{}_{k}", i + 1), 1).unwrap();
            for &x in pair {
                net.add_edge(x, w, int(1), Capacity::Unbounded).unwrap();
            }
            d2.push(w);
        }
    }
    let groups = vec![MulticastGroup::new(0, s, d1, int(1)), MulticastGroup::new(1, s, d2, int(1))];
    Ok(Instance::new(net, groups))
}

/// The gadget for the link-capacitated problem: unit link capacities,
/// node capacity 2, and direct source-to-`D₂` edges costing `(m+3n)·gap`.
pub fn gadget_theorem2(f: &Cnf, gap: Rational) -> Result<Instance, GenError> {
    f.check()?;
    if gap <= Rational::zero() {
        return Err(GenError::Parameter("gap must be positive".into()));
    }
    let (n, m) = (f.vars as i64, f.clauses.len() as i64);
    let unit = Capacity::Finite(int(1));
    let mut net = Network::new();
    let s = net.add_node("s", 2).unwrap();
    let u = literal_nodes(&mut net, f.vars, 2);
    for pair in &u {
        for &x in pair {
            net.add_edge(s, x, int(1), unit).unwrap();
        }
    }
    let mut d1 = Vec::new();
    for (j, c) in f.clauses.iter().enumerate() {
        let d = net.add_node(format!("d{}", j + 1), 2).unwrap();
        let lits: BTreeSet<NodeId> = c.iter().map(|&l| literal_node(&u, l)).collect();
        for x in lits {
            net.add_edge(x, d, int(1), unit).unwrap();
        }
        d1.push(d);
    }
    let far = int(m + 3 * n) * gap;
    let mut d2 = Vec::new();
    for (i, pair) in u.iter().enumerate() {
        let d = net.add_node(format!("d'{}", i + 1), 2).unwrap();
        net.add_edge(s, d, far, unit).unwrap();
        for &x in pair {
            net.add_edge(x, d, int(1), unit).unwrap();
        }
        d2.push(d);
    }
    let groups = vec![MulticastGroup::new(0, s, d1, int(1)), MulticastGroup::new(1, s, d2, int(1))];
    Ok(Instance::new(net, groups))
}

/// Five nodes, unit costs: `s → {a, b} → {d1, d2}`. Relay `a` holds `b_a`
/// entries; every other node none.
pub fn tiny1(b_a: u64) -> Instance {
    let mut net = Network::new();
    let s = net.add_node("s", 0).unwrap();
    let a = net.add_node("a", b_a).unwrap();
    let b = net.add_node("b", 0).unwrap();
    let d1 = net.add_node("d1", 0).unwrap();
    let d2 = net.add_node("d2", 0).unwrap();
    for (t, h) in [(s, a), (s, b), (a, d1), (a, d2), (b, d1), (b, d2)] {
        net.add_edge(t, h, int(1), Capacity::Unbounded).unwrap();
    }
    Instance::new(net, vec![MulticastGroup::new(0, s, [d1, d2], int(1))])
}

/// Two groups whose shortest-path trees both branch at hub `h`, which can
/// hold a single entry. Group 1's destinations are equally close through
/// `g`, which already relays for its destination `e`. Group 0 also reaches
/// `c1` and `c2`, where insertion relays through `c1` while shortest paths
/// use two direct links.
pub fn showcase_instance() -> Instance {
    let mut net = Network::new();
    let label = ["s", "h", "g", "a1", "a2", "b1", "b2", "c1", "c2", "e"];
    let id: Vec<NodeId> = label.iter().map(|l| net.add_node(*l, 1).unwrap()).collect();
    let [s, h, g, a1, a2, b1, b2, c1, c2, e] = id[..] else { unreachable!() };
    for (t, hd, c) in [
        (s, h, 4),
        (h, a1, 1),
        (h, a2, 1),
        (h, b1, 1),
        (h, b2, 1),
        (s, g, 4),
        (g, e, 1),
        (g, b1, 1),
        (g, b2, 1),
        (s, c1, 3),
        (s, c2, 3),
        (c1, c2, 1),
    ] {
        net.add_edge(t, hd, int(c), Capacity::Unbounded).unwrap();
    }
    let groups = vec![MulticastGroup::new(0, s, [a1, a2, c1, c2], int(1)), MulticastGroup::new(1, s, [e, b1, b2], int(1))];
    Instance::new(net, groups)
}

/// Random trees over a shared node set, with the network made of their
/// edges: each tree grows from a random source by attaching random new
/// nodes to random tree nodes. Leaves are destinations, as is each other
/// non-root node with probability ½. Edge costs are drawn from `1..=5`
/// and node capacities from `0..=max_cap`.
pub fn random_fixed_trees(
    nodes: usize,
    t: usize,
    tree_size: usize,
    max_cap: u64,
    seed: u64,
) -> Result<(Network, Vec<MulticastGroup>, Vec<TreeRouting>), GenError> {
    if tree_size < 2 || tree_size > nodes {
        return Err(GenError::TooFewNodes { need: tree_size.max(2), have: nodes });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new();
    let ids: Vec<NodeId> = (0..nodes).map(|k| net.add_node(format!("v{k}"), rng.gen_range(0..=max_cap)).unwrap()).collect();
    let mut groups = Vec::with_capacity(t);
    let mut trees = Vec::with_capacity(t);
    for i in 0..t {
        let mut order = ids.clone();
        order.shuffle(&mut rng);
        let root = order[0];
        let mut tree = TreeRouting::new(i as u32, root, []);
        for k in 1..tree_size {
            let parent = order[rng.gen_range(0..k)];
            let child = order[k];
            // Reverse edges already in the network would make a 2-cycle
            // only across trees, which is fine; parallel pairs are reused.
            if net.find_edge(parent, child).is_none() {
                net.add_edge(parent, child, int(rng.gen_range(1..=5)), Capacity::Unbounded).unwrap();
            }
            tree.attach_path(&[parent, child]);
        }
        let dests: Vec<NodeId> = tree
            .nodes()
            .filter(|&x| x != root && (tree.children(x).next().is_none() || rng.gen_bool(0.5)))
            .collect();
        for &d in &dests {
            tree.add_destination(d);
        }
        groups.push(MulticastGroup::new(i as u32, root, dests, int(1)));
        trees.push(tree);
    }
    Ok((net, groups, trees))
}
