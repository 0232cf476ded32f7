//! Subcommand parsing and implementations. Each command returns its exit
//! code; diagnostics go to stderr, summaries to stdout.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use smte_core::cost::FeasibilityReport;
use smte_core::instgen::{self, CalibrationBase, Cnf, RateDist};
use smte_core::mtrsa::{member_join, member_leave};
use smte_core::oracle::{export_ip, OracleBudgets};
use smte_core::rational::{self, Rational};
use smte_core::{Capacity, Instance, Mode, Network, Solution, SolverConfig, Storage};

use crate::sweep::{self, SweepConfig};
use crate::{exit, run_algorithm, worker_count, Algorithm};

#[derive(Parser, Debug)]
#[command(name = "smte", version, about = "Multicast tree routing and branch-state assignment")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve an instance and write the solution.
    Solve(SolveArgs),
    /// Run a parameter sweep described by a TOML file and print CSV.
    Sweep(SweepArgs),
    /// Re-check a solution file against its instance.
    Verify(VerifyArgs),
    /// Apply join/leave events to a solution.
    Membership(MembershipArgs),
    /// Generate an instance.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Set uniform link capacity to the peak flow of a baseline solution.
    Calibrate(CalibrateArgs),
    /// Write the integer program in LP format.
    ExportIp(ExportIpArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON.
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Mtrsa)]
    algo: Algorithm,
    /// smte-n (node capacity only) or smte (node and link capacity).
    #[arg(long, default_value = "smte-n")]
    mode: Mode,
    /// entries or degree; defaults to the mode's model.
    #[arg(long)]
    storage: Option<Storage>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solution output path; omitted means no file.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Largest network the oracle accepts.
    #[arg(long)]
    oracle_nodes: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    config: PathBuf,
    /// CSV output path; stdout if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Leave `mean_ms` empty so that reruns give identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    solution: PathBuf,
    instance: PathBuf,
    /// Check feasibility in this mode instead of the file's.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    storage: Option<Storage>,
}

#[derive(Args, Debug)]
struct MembershipArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// One event per line: `join <group> <node>` or `leave <group> <node>`;
    /// `#` starts a comment.
    events: PathBuf,
    /// Directory for `step-NNNN.json` snapshots (step 0 is the input).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GenCmd {
    /// Random groups on a topology.
    Random(RandomArgs),
    /// Reduction gadget with node capacity 1 from a DIMACS 3-CNF file.
    Gadget1 {
        cnf: PathBuf,
        #[arg(long, default_value_t = 1)]
        q: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Reduction gadget with node capacity 2 and unit links.
    Gadget2 {
        cnf: PathBuf,
        #[arg(long, default_value = "10")]
        gap: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Two groups on which joint routing and state assignment pays off.
    Showcase {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Five nodes, one group, relay `a` with `b_a` entries.
    Tiny1 {
        #[arg(long, default_value_t = 1)]
        b_a: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RandomArgs {
    /// GraphML topology or instance JSON.
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    t: usize,
    #[arg(long)]
    dest: usize,
    /// Entries per node; keeps the topology's capacities if omitted.
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Constant group rate.
    #[arg(long, conflicts_with = "rate_range")]
    rate: Option<String>,
    /// Integer rates drawn uniformly from `LO..=HI`, written `LO..HI`.
    #[arg(long)]
    rate_range: Option<String>,
    /// Calibrate link capacity on the spt or st baseline.
    #[arg(long)]
    calibrate: Option<String>,
    /// Storage model of the calibrating baseline; defaults to smte's.
    #[arg(long)]
    storage: Option<Storage>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    instance: PathBuf,
    /// spt or st.
    #[arg(long, default_value = "spt")]
    base: String,
    /// Storage model of the calibrating baseline; defaults to smte's.
    #[arg(long)]
    storage: Option<Storage>,
    /// Seed of the baseline's random state assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportIpArgs {
    instance: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Parses arguments and runs the command. Usage errors print clap's help.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Solve(a) => solve(a),
        Cmd::Sweep(a) => run_sweep(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Membership(a) => membership(a),
        Cmd::Gen(g) => generate(g),
        Cmd::Calibrate(a) => calibrate(a),
        Cmd::ExportIp(a) => export(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        exit::USAGE
    })
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    Instance::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn write_out(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                o.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn print_violations(net: &Network, report: &FeasibilityReport) {
    for s in &report.structural {
        eprintln!("violation: {s}");
    }
    for v in &report.node_violations {
        eprintln!("violation: node {} stores {} entries, capacity {}", net.label(v.node), v.used, v.capacity);
    }
    for v in &report.edge_violations {
        let e = net.edge(v.edge);
        eprintln!(
            "violation: link {} -> {} carries {}, capacity {}",
            net.label(e.tail),
            net.label(e.head),
            rational::format(&v.flow),
            rational::format(&v.capacity)
        );
    }
}

fn solve(a: SolveArgs) -> anyhow::Result<i32> {
    let inst = load_instance(&a.instance)?;
    let config = SolverConfig { mode: a.mode, storage: a.storage, seed: a.seed, ..SolverConfig::default() };
    let mut budgets = OracleBudgets::default();
    if let Some(n) = a.oracle_nodes {
        budgets.nodes = n;
    }
    let start = Instant::now();
    let res = run_algorithm(a.algo, &inst.network, &inst.groups, &config, budgets);
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let sol = match res {
        Ok(s) => s,
        Err(e) if e.is_infeasible() => {
            eprintln!("infeasible: {e}");
            println!("algo={} cost= feasible=false violations=0 ms={ms:.3}", a.algo);
            return Ok(exit::INFEASIBLE);
        }
        Err(e) => bail!(e),
    };
    if let Some(p) = &a.out {
        write_out(Some(p), &sol.to_json(&inst.network))?;
    }
    print_violations(&inst.network, &sol.report);
    println!(
        "algo={} cost={} feasible={} violations={} ms={ms:.3}",
        a.algo,
        rational::format(&sol.total_cost),
        sol.is_feasible(),
        sol.report.violation_count()
    );
    Ok(if sol.is_feasible() { exit::OK } else { exit::INFEASIBLE })
}

fn run_sweep(a: SweepArgs) -> anyhow::Result<i32> {
    let cfg = SweepConfig::load(&a.config)?;
    let rows = sweep::run_sweep(&cfg, worker_count())?;
    for r in &rows {
        for o in &r.outcomes {
            if let Err(e) = &o.result {
                eprintln!("sample failed: t={} dest={} cap={} algo={} seed={}: {e}", r.t, r.dest, r.cap, r.algo, o.seed);
            }
        }
    }
    let timing = cfg.timing && !a.no_timing;
    match &a.out {
        Some(p) => {
            let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            sweep::write_csv(&rows, timing, f)?;
        }
        None => sweep::write_csv(&rows, timing, std::io::stdout().lock())?,
    }
    Ok(exit::OK)
}

/// Outcome of checking a solution file, shared by the CLI and tests.
#[derive(Debug)]
pub enum Verdict {
    Ok(Solution),
    Infeasible(Solution),
    /// A stated quantity disagrees with the recomputation.
    Mismatch(String),
}

impl Verdict {
    pub fn code(&self) -> i32 {
        match self {
            Verdict::Ok(_) => exit::OK,
            Verdict::Infeasible(_) => exit::INFEASIBLE,
            Verdict::Mismatch(_) => exit::MISMATCH,
        }
    }
}

/// Recomputes cost and feasibility of a serialized solution from scratch.
/// Claims are compared in the file's own mode; `mode`/`storage` then pick
/// the model feasibility is judged in.
pub fn verify_text(
    solution: &str,
    inst: &Instance,
    mode: Option<Mode>,
    storage: Option<Storage>,
) -> anyhow::Result<Verdict> {
    let net = &inst.network;
    let (mut sol, claims) = Solution::from_json(solution, net)?;
    if let Some(d) = claims.first_divergence(&sol, net) {
        return Ok(Verdict::Mismatch(d));
    }
    if sol.groups.len() != inst.groups.len() {
        return Ok(Verdict::Mismatch(format!(
            "groups: file has {}, instance has {}",
            sol.groups.len(),
            inst.groups.len()
        )));
    }
    for (g, h) in sol.groups.iter().zip(&inst.groups) {
        if g != h {
            return Ok(Verdict::Mismatch(format!("group {}: source, destinations or rate differ from the instance", h.id)));
        }
    }
    if mode.is_some() || storage.is_some() {
        sol.mode = mode.unwrap_or(sol.mode);
        sol.storage = storage.unwrap_or(sol.storage);
        sol.refresh(net);
    }
    Ok(if sol.is_feasible() { Verdict::Ok(sol) } else { Verdict::Infeasible(sol) })
}

fn verify(a: VerifyArgs) -> anyhow::Result<i32> {
    let inst = load_instance(&a.instance)?;
    let verdict = verify_text(&read(&a.solution)?, &inst, a.mode, a.storage)?;
    match &verdict {
        Verdict::Ok(s) => println!("ok: cost {} feasible in {} mode", rational::format(&s.total_cost), s.mode.name()),
        Verdict::Infeasible(s) => {
            print_violations(&inst.network, &s.report);
            println!(
                "infeasible: {} violation(s) in {} mode, cost {}",
                s.report.violation_count(),
                s.mode.name(),
                rational::format(&s.total_cost)
            );
        }
        Verdict::Mismatch(d) => println!("mismatch: {d}"),
    }
    Ok(verdict.code())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Join { group: u32, node: String },
    Leave { group: u32, node: String },
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Event::Join { group, node } => write!(f, "join {group} {node}"),
            Event::Leave { group, node } => write!(f, "leave {group} {node}"),
        }
    }
}

pub fn parse_events(text: &str) -> anyhow::Result<Vec<Event>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [kind, group, node] = parts[..] else {
            bail!("events line {}: expected `join|leave <group> <node>`", n + 1);
        };
        let group: u32 = group.parse().map_err(|_| anyhow!("events line {}: bad group id `{group}`", n + 1))?;
        let node = node.to_string();
        out.push(match kind {
            "join" => Event::Join { group, node },
            "leave" => Event::Leave { group, node },
            _ => bail!("events line {}: unknown event `{kind}`", n + 1),
        });
    }
    Ok(out)
}

/// One step of a membership run.
#[derive(Debug)]
pub struct Step {
    pub event: Option<Event>,
    pub solution: Solution,
    /// Warning or rejection; the solution is then unchanged.
    pub note: Option<String>,
}

/// Applies events in order. Rejected joins and leaves of non-members leave
/// the solution unchanged and are noted.
pub fn apply_events(net: &Network, start: Solution, events: &[Event]) -> anyhow::Result<Vec<Step>> {
    let mut steps = vec![Step { event: None, solution: start, note: None }];
    for ev in events {
        let current = &steps.last().expect("non-empty").solution;
        let (group, label) = match ev {
            Event::Join { group, node } | Event::Leave { group, node } => (*group, node),
        };
        let node = net.node_by_label(label).ok_or_else(|| anyhow!("event `{ev}`: unknown node"))?;
        let (solution, note) = match ev {
            Event::Join { .. } => match member_join(net, current, group, node) {
                Ok(s) => (s, None),
                Err(e @ smte_core::MembershipError::UnknownGroup(_)) => bail!("event `{ev}`: {e}"),
                Err(e) => (current.clone(), Some(e.to_string())),
            },
            Event::Leave { .. } => {
                let o = member_leave(net, current, group, node).map_err(|e| anyhow!("event `{ev}`: {e}"))?;
                (o.solution, o.warning)
            }
        };
        steps.push(Step { event: Some(ev.clone()), solution, note });
    }
    Ok(steps)
}

fn membership(a: MembershipArgs) -> anyhow::Result<i32> {
    let inst = load_instance(&a.instance)?;
    let net = &inst.network;
    let (start, claims) = Solution::from_json(&read(&a.solution)?, net)?;
    if let Some(d) = claims.first_divergence(&start, net) {
        eprintln!("mismatch: {d}");
        return Ok(exit::MISMATCH);
    }
    let events = parse_events(&read(&a.events)?)?;
    let steps = apply_events(net, start, &events)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut all_feasible = true;
    let mut rejected = false;
    for (k, s) in steps.iter().enumerate() {
        if let Some(n) = &s.note {
            eprintln!("warning: step {k}: {n}");
            rejected |= matches!(s.event, Some(Event::Join { .. }));
        }
        all_feasible &= s.solution.is_feasible();
        let ev = s.event.as_ref().map(|e| e.to_string()).unwrap_or_else(|| "start".into());
        println!(
            "step={k} event=\"{ev}\" cost={} feasible={}",
            rational::format(&s.solution.total_cost),
            s.solution.is_feasible()
        );
        if let Some(dir) = &a.out_dir {
            std::fs::write(dir.join(format!("step-{k:04}.json")), s.solution.to_json(net))?;
        }
    }
    Ok(if all_feasible && !rejected { exit::OK } else { exit::INFEASIBLE })
}

fn calibration_base(s: &str) -> anyhow::Result<CalibrationBase> {
    match s.to_ascii_lowercase().as_str() {
        "spt" => Ok(CalibrationBase::Spt),
        "st" | "steiner" => Ok(CalibrationBase::Steiner),
        _ => bail!("unknown calibration base `{s}` (expected spt or st)"),
    }
}

fn parse_rates(rate: Option<&str>, range: Option<&str>) -> anyhow::Result<RateDist> {
    if let Some(r) = range {
        let (lo, hi) = r.split_once("..").ok_or_else(|| anyhow!("rate range `{r}` must look like LO..HI"))?;
        return Ok(RateDist::Uniform { lo: lo.trim().parse()?, hi: hi.trim().trim_start_matches('=').parse()? });
    }
    Ok(match rate {
        Some(r) => RateDist::Constant { rate: rational::parse(r)? },
        None => RateDist::default(),
    })
}

fn generate(g: GenCmd) -> anyhow::Result<i32> {
    let (inst, out) = match g {
        GenCmd::Random(a) => {
            let net = sweep::load_topology(&a.topology)?;
            let rates = parse_rates(a.rate.as_deref(), a.rate_range.as_deref())?;
            let mut inst = instgen::random_instance(&net, a.t, a.dest, &rates, a.cap, a.seed)?;
            if let Some(b) = &a.calibrate {
                let storage = a.storage.unwrap_or(Mode::Smte.default_storage());
                inst.network =
                    instgen::calibrate_capacity(&inst.network, &inst.groups, calibration_base(b)?, storage, a.seed)?;
            }
            (inst, a.out)
        }
        GenCmd::Gadget1 { cnf, q, out } => (instgen::gadget_theorem1(&Cnf::parse_dimacs(&read(&cnf)?)?, q)?, out),
        GenCmd::Gadget2 { cnf, gap, out } => {
            let gap: Rational = rational::parse(&gap)?;
            (instgen::gadget_theorem2(&Cnf::parse_dimacs(&read(&cnf)?)?, gap)?, out)
        }
        GenCmd::Showcase { out } => (instgen::showcase_instance(), out),
        GenCmd::Tiny1 { b_a, out } => (instgen::tiny1(b_a), out),
    };
    write_out(out.as_deref(), &inst.to_json())?;
    Ok(exit::OK)
}

fn calibrate(a: CalibrateArgs) -> anyhow::Result<i32> {
    let mut inst = load_instance(&a.instance)?;
    let storage = a.storage.unwrap_or(Mode::Smte.default_storage());
    inst.network = instgen::calibrate_capacity(&inst.network, &inst.groups, calibration_base(&a.base)?, storage, a.seed)?;
    let cap = inst.network.edges().next().map(|(_, e)| e.capacity);
    match cap {
        Some(Capacity::Finite(c)) => eprintln!("link capacity {}", rational::format(&c)),
        _ => eprintln!("link capacity unbounded (no traffic)"),
    }
    write_out(a.out.as_deref(), &inst.to_json())?;
    Ok(exit::OK)
}

fn export(a: ExportIpArgs) -> anyhow::Result<i32> {
    let inst = load_instance(&a.instance)?;
    write_out(a.out.as_deref(), &export_ip(&inst.network, &inst.groups))?;
    Ok(exit::OK)
}

#[cfg(test)]
mod tests {
    use smte_core::instgen::tiny1;

    use super::*;

    #[test]
    fn events_parse() {
        let ev = parse_events("join 0 a\n\n  # skip\nleave 3 d1 # trailing\n").unwrap();
        assert_eq!(
            ev,
            [Event::Join { group: 0, node: "a".into() }, Event::Leave { group: 3, node: "d1".into() }]
        );
        assert_eq!(ev[1].to_string(), "leave 3 d1");
        assert!(parse_events("join 0\n").is_err());
        assert!(parse_events("join x a\n").is_err());
        assert!(parse_events("move 0 a\n").is_err());
    }

    #[test]
    fn verdicts() {
        let inst = tiny1(1);
        let sol = run_algorithm(Algorithm::Mtrsa, &inst.network, &inst.groups, &SolverConfig::default(), OracleBudgets::default())
            .unwrap();
        let text = sol.to_json(&inst.network);
        assert_eq!(verify_text(&text, &inst, None, None).unwrap().code(), exit::OK);
        // Entries at a become three storage units under degree weighting.
        let v = verify_text(&text, &inst, None, Some(Storage::DegreeWeighted)).unwrap();
        assert_eq!(v.code(), exit::INFEASIBLE);
        let mut other = inst.clone();
        other.groups[0].rate = Rational::from_integer(2);
        assert!(matches!(verify_text(&text, &other, None, None).unwrap(), Verdict::Mismatch(_)));
    }

    #[test]
    fn rejected_join_is_noted() {
        let inst = tiny1(1);
        let net = &inst.network;
        let sol = run_algorithm(Algorithm::Mtrsa, net, &inst.groups, &SolverConfig::default(), OracleBudgets::default())
            .unwrap();
        // The source cannot join its own group.
        let steps = apply_events(net, sol.clone(), &[Event::Join { group: 0, node: "s".into() }]).unwrap();
        assert_eq!(steps.len(), 2);
        assert!(steps[1].note.is_some());
        assert_eq!(steps[1].solution, sol);
        assert!(apply_events(net, sol, &[Event::Join { group: 9, node: "a".into() }]).is_err());
    }
}
