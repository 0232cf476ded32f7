//! The integer program in CPLEX LP text format.
//!
//! Variable names use the group id and node indices:
//! `pi_<g>_<d>_<u>_<v>` (binary, edge `u → v` on the path to `d`),
//! `eps_<g>_<u>_<v>` (integer, copies of each packet on `u → v`),
//! `beta_<g>_<u>` (binary, `u` holds a state for group `g`).
//! The node-index-to-label map is written as comments at the top.
//!
//! Rows appear in this order, each block preceded by a `\ C<k>` comment:
//! C1 source outflow, C2 destination inflow, C3 flow conservation,
//! C4 path-to-copies coupling, C5 unicast tunneling (big-M `|D_i|²`),
//! C6 node capacity, C7 link capacity (finite capacities only). Row names
//! are `c<k>_...` with the same index suffix as the variables they bind.
//! Within a block, rows and terms follow group order, then node and edge
//! index order. Coefficients are exact decimals when the rational has a
//! terminating expansion, else rounded to 15 fractional digits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_traits::{One, Zero};

use crate::cost::StateAssignment;
use crate::error::ParseError;
use crate::graph::{Capacity, Network, NodeId};
use crate::instance::MulticastGroup;
use crate::rational::{self, int, Rational};
use crate::tree::TreeRouting;

const TERMS_PER_LINE: usize = 8;

fn lp_number(r: &Rational) -> String {
    let mut d = *r.denom();
    for p in [2, 5] {
        while d % p == 0 {
            d /= p;
        }
    }
    if d != 1 {
        return rational::format_decimal(r, 15);
    }
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut digits = 0;
    let mut x = *r;
    while !x.is_integer() {
        x *= int(10);
        digits += 1;
    }
    rational::format_decimal(r, digits)
}

fn pi(g: u32, d: NodeId, u: NodeId, v: NodeId) -> String {
    format!("pi_{g}_{}_{}_{}", d.0, u.0, v.0)
}

fn eps(g: u32, u: NodeId, v: NodeId) -> String {
    format!("eps_{g}_{}_{}", u.0, v.0)
}

fn beta(g: u32, u: NodeId) -> String {
    format!("beta_{g}_{}", u.0)
}

#[derive(Default)]
struct Lp {
    out: String,
}

impl Lp {
    fn line(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
    }

    /// Writes `name: terms op rhs`, wrapping long rows onto indented lines.
    fn row(&mut self, name: &str, terms: &[(Rational, String)], op: &str, rhs: &Rational) {
        let mut text = format!(" {name}:");
        for (k, (c, v)) in terms.iter().enumerate() {
            if k > 0 && k % TERMS_PER_LINE == 0 {
                text.push_str("\n  ");
            }
            let sign = if *c < Rational::zero() { "-" } else { "+" };
            let mag = if *c < Rational::zero() { -*c } else { *c };
            if mag.is_one() {
                write!(text, " {sign} {v}").unwrap();
            } else {
                write!(text, " {sign} {} {v}", lp_number(&mag)).unwrap();
            }
        }
        write!(text, " {op} {}", lp_number(rhs)).unwrap();
        self.line(&text);
    }
}

pub fn export_ip(net: &Network, groups: &[MulticastGroup]) -> String {
    let mut lp = Lp::default();
    let one = Rational::one();
    let zero = Rational::zero();
    lp.line(&format!("\\ multicast traffic engineering model: {} nodes, {} edges, {} groups", net.node_count(), net.edge_count(), groups.len()));
    for u in net.nodes() {
        lp.line(&format!("\\ node {} = {}", u.0, net.label(u)));
    }
    lp.line("Minimize");
    let mut obj = Vec::new();
    for g in groups {
        for (_, e) in net.edges() {
            let c = g.rate * e.cost;
            if !c.is_zero() {
                obj.push((c, eps(g.id, e.tail, e.head)));
            }
        }
    }
    lp.row("obj", &obj, "+", &zero);
    // The objective row carries no relation; strip the trailing marker.
    let trimmed = lp.out.trim_end().trim_end_matches("+ 0").trim_end().to_string();
    lp.out = trimmed + "\n";
    lp.line("Subject To");

    lp.line("\\ C1");
    for g in groups {
        let s = g.source;
        for &d in &g.destinations {
            let mut t: Vec<(Rational, String)> = net.out_edges(s).iter().map(|&e| (one, pi(g.id, d, s, net.edge(e).head))).collect();
            t.extend(net.in_edges(s).iter().map(|&e| (-one, pi(g.id, d, net.edge(e).tail, s))));
            lp.row(&format!("c1_{}_{}", g.id, d.0), &t, "=", &one);
        }
    }
    lp.line("\\ C2");
    for g in groups {
        for &d in &g.destinations {
            let mut t: Vec<(Rational, String)> = net.in_edges(d).iter().map(|&e| (one, pi(g.id, d, net.edge(e).tail, d))).collect();
            t.extend(net.out_edges(d).iter().map(|&e| (-one, pi(g.id, d, d, net.edge(e).head))));
            lp.row(&format!("c2_{}_{}", g.id, d.0), &t, "=", &one);
        }
    }
    lp.line("\\ C3");
    for g in groups {
        for &d in &g.destinations {
            for u in net.nodes() {
                if u == d || u == g.source {
                    continue;
                }
                let mut t: Vec<(Rational, String)> = net.in_edges(u).iter().map(|&e| (one, pi(g.id, d, net.edge(e).tail, u))).collect();
                t.extend(net.out_edges(u).iter().map(|&e| (-one, pi(g.id, d, u, net.edge(e).head))));
                if !t.is_empty() {
                    lp.row(&format!("c3_{}_{}_{}", g.id, d.0, u.0), &t, "=", &zero);
                }
            }
        }
    }
    lp.line("\\ C4");
    for g in groups {
        for &d in &g.destinations {
            for (_, e) in net.edges() {
                let t = vec![(one, pi(g.id, d, e.tail, e.head)), (-one, eps(g.id, e.tail, e.head))];
                lp.row(&format!("c4_{}_{}_{}_{}", g.id, d.0, e.tail.0, e.head.0), &t, "<=", &zero);
            }
        }
    }
    lp.line("\\ C5");
    for g in groups {
        let m = int((g.destinations.len() * g.destinations.len()) as i64);
        for u in net.nodes() {
            if u == g.source {
                continue;
            }
            let mut t = vec![(-m, beta(g.id, u))];
            t.extend(net.out_edges(u).iter().map(|&e| (one, eps(g.id, u, net.edge(e).head))));
            t.extend(net.in_edges(u).iter().map(|&e| (-one, eps(g.id, net.edge(e).tail, u))));
            lp.row(&format!("c5_{}_{}", g.id, u.0), &t, "<=", &zero);
        }
    }
    lp.line("\\ C6");
    for u in net.nodes() {
        let t: Vec<(Rational, String)> = groups.iter().filter(|g| g.source != u).map(|g| (one, beta(g.id, u))).collect();
        if !t.is_empty() {
            lp.row(&format!("c6_{}", u.0), &t, "<=", &int(net.node_capacity(u) as i64));
        }
    }
    lp.line("\\ C7");
    for (_, e) in net.edges() {
        let Capacity::Finite(cap) = e.capacity else { continue };
        let t: Vec<(Rational, String)> = groups.iter().map(|g| (g.rate, eps(g.id, e.tail, e.head))).collect();
        if !t.is_empty() {
            lp.row(&format!("c7_{}_{}", e.tail.0, e.head.0), &t, "<=", &cap);
        }
    }

    lp.line("General");
    for g in groups {
        for (_, e) in net.edges() {
            lp.line(&format!(" {}", eps(g.id, e.tail, e.head)));
        }
    }
    lp.line("Binary");
    for g in groups {
        for &d in &g.destinations {
            for (_, e) in net.edges() {
                lp.line(&format!(" {}", pi(g.id, d, e.tail, e.head)));
            }
        }
        for u in net.nodes() {
            if u != g.source {
                lp.line(&format!(" {}", beta(g.id, u)));
            }
        }
    }
    lp.line("End");
    lp.out
}

/// Copies per tree edge as the program counts them: a stateless node
/// forwards exactly what it receives, so a relaying destination needs no
/// copy of its own beyond those passing through it.
pub fn ip_epsilon(tree: &TreeRouting, states: &BTreeSet<NodeId>) -> BTreeMap<(NodeId, NodeId), u64> {
    let mut up: BTreeMap<NodeId, u64> = BTreeMap::new();
    for x in tree.preorder().into_iter().rev() {
        let below: u64 = tree.children(x).map(|c| up[&c]).sum();
        let v = if states.contains(&x) { 1 } else { below.max(1) };
        up.insert(x, v);
    }
    tree.edges().map(|(p, c)| ((p, c), up[&c])).collect()
}

/// Objective value of the program at the point given by trees and states.
pub fn ip_objective(net: &Network, groups: &[MulticastGroup], trees: &[TreeRouting], a: &StateAssignment) -> Rational {
    trees
        .iter()
        .zip(groups)
        .enumerate()
        .map(|(i, (t, g))| {
            ip_epsilon(t, a.tree(i)).into_iter().map(|((p, c), k)| g.rate * net.cost(p, c) * int(k as i64)).sum::<Rational>()
        })
        .sum()
}

/// Non-zero variable values encoding trees and states for the program.
pub fn incumbent_values(groups: &[MulticastGroup], trees: &[TreeRouting], a: &StateAssignment) -> BTreeMap<String, Rational> {
    let mut vals = BTreeMap::new();
    for (i, (t, g)) in trees.iter().zip(groups).enumerate() {
        for &d in &g.destinations {
            for w in t.path_from_root(d).windows(2) {
                vals.insert(pi(g.id, d, w[0], w[1]), int(1));
            }
        }
        for ((p, c), k) in ip_epsilon(t, a.tree(i)) {
            vals.insert(eps(g.id, p, c), int(k as i64));
        }
        for &u in a.tree(i) {
            vals.insert(beta(g.id, u), int(1));
        }
    }
    vals
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpCheck {
    pub objective: Rational,
    pub rows: usize,
    /// Names of rows (or variables, for type violations) that fail.
    pub violated: Vec<String>,
    /// Row count per `C<k>` block.
    pub block_rows: BTreeMap<String, usize>,
}

/// Evaluates an exported model at `values` (absent variables are 0).
/// Only the subset of LP syntax that `export_ip` writes is understood.
pub fn evaluate_lp(text: &str, values: &BTreeMap<String, Rational>) -> Result<LpCheck, ParseError> {
    #[derive(PartialEq)]
    enum Section {
        Head,
        Objective,
        Rows,
        General,
        Binary,
        Done,
    }
    let bad = |msg: String| ParseError::Solution(format!("lp: {msg}"));
    let val = |v: &str| values.get(v).copied().unwrap_or_else(Rational::zero);
    let mut section = Section::Head;
    let mut objective = Rational::zero();
    let mut block = String::new();
    let mut check = LpCheck { objective: Rational::zero(), rows: 0, violated: Vec::new(), block_rows: BTreeMap::new() };
    let mut pending: Vec<String> = Vec::new();
    let mut name = String::new();
    let close_row = |name: &str, toks: &[String], block: &str, check: &mut LpCheck| -> Result<(), ParseError> {
        let op_at = toks.iter().position(|t| t == "<=" || t == ">=" || t == "=").ok_or_else(|| bad(format!("row {name} has no relation")))?;
        let lhs = sum_terms(&toks[..op_at], &val).map_err(|m| bad(format!("row {name}: {m}")))?;
        let rhs = rational::parse(toks.get(op_at + 1).ok_or_else(|| bad(format!("row {name} has no rhs")))?)?;
        let ok = match toks[op_at].as_str() {
            "<=" => lhs <= rhs,
            ">=" => lhs >= rhs,
            _ => lhs == rhs,
        };
        check.rows += 1;
        *check.block_rows.entry(block.to_string()).or_insert(0) += 1;
        if !ok {
            check.violated.push(name.to_string());
        }
        Ok(())
    };
    for raw in text.lines() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('\\') {
            let c = c.trim();
            if c.len() <= 3 && c.starts_with('C') {
                block = c.to_string();
            }
            continue;
        }
        match line {
            "Minimize" => {
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Rows;
                continue;
            }
            "General" => {
                section = Section::General;
                continue;
            }
            "Binary" => {
                section = Section::Binary;
                continue;
            }
            "End" => {
                section = Section::Done;
                continue;
            }
            "" => continue,
            _ => {}
        }
        match section {
            Section::Objective => {
                let body = line.split_once(':').map_or(line, |(_, b)| b);
                let toks: Vec<String> = body.split_whitespace().map(str::to_string).collect();
                objective += sum_terms(&toks, &val).map_err(|m| bad(format!("objective: {m}")))?;
            }
            Section::Rows => {
                let body = match line.split_once(':') {
                    Some((n, b)) if !raw.starts_with("  ") => {
                        name = n.trim().to_string();
                        pending.clear();
                        b
                    }
                    _ => line,
                };
                pending.extend(body.split_whitespace().map(str::to_string));
                if pending.iter().any(|t| t == "<=" || t == ">=" || t == "=") {
                    close_row(&name, &pending, &block, &mut check)?;
                    pending.clear();
                }
            }
            Section::General => {
                let v = val(line);
                if !v.is_integer() || v < Rational::zero() {
                    check.violated.push(line.to_string());
                }
            }
            Section::Binary => {
                let v = val(line);
                if v != Rational::zero() && v != Rational::one() {
                    check.violated.push(line.to_string());
                }
            }
            Section::Head | Section::Done => return Err(bad(format!("unexpected line `{line}`"))),
        }
    }
    if section != Section::Done {
        return Err(bad("missing End".into()));
    }
    check.objective = objective;
    Ok(check)
}

fn sum_terms(toks: &[String], val: &dyn Fn(&str) -> Rational) -> Result<Rational, String> {
    let mut total = Rational::zero();
    let mut sign = Rational::one();
    let mut coef: Option<Rational> = None;
    for t in toks {
        match t.as_str() {
            "+" => sign = Rational::one(),
            "-" => sign = -Rational::one(),
            _ => {
                if let Ok(c) = rational::parse(t) {
                    coef = Some(c);
                } else {
                    total += sign * coef.take().unwrap_or_else(Rational::one) * val(t);
                    sign = Rational::one();
                }
            }
        }
    }
    if coef.is_some() {
        return Err("dangling coefficient".into());
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{self, Mode, Storage};
    use crate::graph::Capacity;
    use crate::mtrsa::{solve, SolverConfig};
    use crate::oracle::{solve_exact, OracleBudgets};

    fn tiny1() -> (Network, Vec<MulticastGroup>) {
        let mut net = Network::new();
        let s = net.add_node("s", 0).unwrap();
        let a = net.add_node("a", 1).unwrap();
        let b = net.add_node("b", 0).unwrap();
        let d1 = net.add_node("d1", 0).unwrap();
        let d2 = net.add_node("d2", 0).unwrap();
        for (t, h) in [(s, a), (s, b), (a, d1), (a, d2), (b, d1), (b, d2)] {
            net.add_edge(t, h, int(1), Capacity::Finite(int(3))).unwrap();
        }
        (net, vec![MulticastGroup::new(0, s, [d1, d2], Rational::new(3, 2))])
    }

    #[test]
    fn numbers() {
        assert_eq!(lp_number(&int(4)), "4");
        assert_eq!(lp_number(&Rational::new(3, 2)), "1.5");
        assert_eq!(lp_number(&Rational::new(1, 3)), "0.333333333333333");
    }

    #[test]
    fn structure_and_big_m() {
        let (net, groups) = tiny1();
        let text = export_ip(&net, &groups);
        let check = evaluate_lp(&text, &BTreeMap::new()).unwrap();
        let d = groups[0].destinations.len();
        assert_eq!(check.block_rows["C1"], d);
        assert_eq!(check.block_rows["C2"], d);
        assert_eq!(check.block_rows["C5"], net.node_count() - 1);
        assert_eq!(check.block_rows["C7"], net.edge_count());
        // Big-M coefficient is |D|² = 4.
        assert!(text.contains(" c5_0_1: - 4 beta_0_1 + eps_0_1_3 + eps_0_1_4 - eps_0_0_1 <= 0"), "{text}");
        let order: Vec<usize> = ["\\ C1", "\\ C2", "\\ C3", "\\ C4", "\\ C5", "\\ C6", "\\ C7"].iter().map(|t| text.find(t).unwrap()).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn incumbent_is_feasible_and_objective_matches() {
        let (net, groups) = tiny1();
        let text = export_ip(&net, &groups);
        let exact = solve_exact(&net, &groups, Mode::Smte, Storage::Entries, OracleBudgets::default()).unwrap();
        let sol = solve(&net, &groups, &SolverConfig { storage: Some(Storage::Entries), ..SolverConfig::new(Mode::Smte) }).unwrap();
        for s in [&exact, &sol] {
            let vals = incumbent_values(&s.groups, &s.trees, &s.assignment);
            let check = evaluate_lp(&text, &vals).unwrap();
            assert!(check.violated.is_empty(), "{:?}", check.violated);
            assert_eq!(check.objective, s.total_cost);
            assert_eq!(ip_objective(&net, &s.groups, &s.trees, &s.assignment), s.total_cost);
        }
        assert_eq!(exact.total_cost, Rational::new(9, 2));
        // Without the state at a the model needs two copies on s → a, which
        // the link admits (2 × 1.5 ≤ 3).
        let vals = incumbent_values(&groups, &exact.trees, &StateAssignment::empty(1));
        let check = evaluate_lp(&text, &vals).unwrap();
        assert!(check.violated.is_empty());
        assert_eq!(check.objective, cost::total_cost(&net, &exact.trees, &groups, &StateAssignment::empty(1)));
    }

    #[test]
    fn broken_point_is_rejected() {
        let (net, groups) = tiny1();
        let text = export_ip(&net, &groups);
        let sol = solve_exact(&net, &groups, Mode::SmteN, Storage::Entries, OracleBudgets::default()).unwrap();
        let mut vals = incumbent_values(&sol.groups, &sol.trees, &sol.assignment);
        // Drop the state: the copies on the edge into a no longer suffice.
        let key = vals.keys().find(|k| k.starts_with("beta_")).unwrap().clone();
        vals.remove(&key);
        let check = evaluate_lp(&text, &vals).unwrap();
        assert_eq!(check.violated, vec!["c5_0_1".to_string()]);
    }
}
