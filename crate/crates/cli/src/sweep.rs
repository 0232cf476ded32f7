//! Parameter sweeps: every `(t, dest, cap)` grid point is sampled
//! `samples` times, each sample drawing a fresh random instance from seed
//! `seed_base + index` and running every configured algorithm on it.
//!
//! Samples run in parallel; results are kept in sample order, so the CSV
//! depends only on the config (timing aside).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Deserialize;
use smte_core::graph::{load_graphml, GraphmlOptions};
use smte_core::instgen::{calibrate_capacity, random_instance, CalibrationBase, RateDist};
use smte_core::oracle::OracleBudgets;
use smte_core::rational::{self, to_f64};
use smte_core::{Instance, Mode, Network, Rational, Solution, SolverConfig, Storage};

use crate::{run_algorithm, Algorithm};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibration {
    /// Link capacity from the shortest-path trees' peak load.
    #[default]
    Spt,
    /// Link capacity from the Steiner trees' peak load.
    St,
    /// Keep the topology's link capacities.
    None,
}

impl Calibration {
    fn base(self) -> Option<CalibrationBase> {
        match self {
            Calibration::Spt => Some(CalibrationBase::Spt),
            Calibration::St => Some(CalibrationBase::Steiner),
            Calibration::None => None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// GraphML file or instance JSON (whose groups are ignored). Relative
    /// paths resolve against the config file's directory.
    pub topology: PathBuf,
    /// Label for the `topology` column; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub storage: Option<Storage>,
    pub t: Vec<usize>,
    pub dest: Vec<usize>,
    pub cap: Vec<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed_base: u64,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub calibrate: Calibration,
    #[serde(default)]
    pub rates: RateDist,
    /// Write `mean_ms`; turn off for byte-reproducible files.
    #[serde(default = "default_timing")]
    pub timing: bool,
    /// Largest network the oracle accepts.
    #[serde(default)]
    pub oracle_nodes: Option<usize>,
}

fn default_mode() -> Mode {
    Mode::Smte
}

fn default_samples() -> usize {
    1
}

fn default_timing() -> bool {
    true
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).context("invalid sweep config")?;
        if cfg.samples == 0 {
            bail!("samples must be at least 1");
        }
        if cfg.t.is_empty() || cfg.dest.is_empty() || cfg.cap.is_empty() || cfg.algorithms.is_empty() {
            bail!("t, dest, cap and algorithms must each list at least one value");
        }
        Ok(cfg)
    }

    /// Reads a config file; its `topology` is made absolute.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.topology.is_relative() {
            cfg.topology = path.parent().unwrap_or(Path::new(".")).join(&cfg.topology);
        }
        Ok(cfg)
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.topology.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
    }
}

/// Loads a topology: GraphML with unit costs and unbounded links, or the
/// network of an instance file.
pub fn load_topology(path: &Path) -> anyhow::Result<Network> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let is_graphml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("graphml") || e.eq_ignore_ascii_case("xml"));
    if is_graphml {
        Ok(load_graphml(&bytes, &GraphmlOptions::default()).with_context(|| format!("parsing {}", path.display()))?)
    } else {
        let text = String::from_utf8(bytes).context("instance file is not UTF-8")?;
        Ok(Instance::from_json(&text).with_context(|| format!("parsing {}", path.display()))?.network)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub seed: u64,
    /// Cost, or why the sample produced no solution.
    pub result: Result<Rational, String>,
    pub feasible: bool,
    pub ms: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub topology: String,
    pub t: usize,
    pub dest: usize,
    pub cap: u64,
    pub algo: Algorithm,
    pub seed_base: u64,
    pub outcomes: Vec<SampleOutcome>,
}

impl SweepRow {
    pub fn costs(&self) -> Vec<Rational> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok().copied()).collect()
    }

    /// Exact mean over samples that produced a solution.
    pub fn mean_cost(&self) -> Option<Rational> {
        let c = self.costs();
        (!c.is_empty()).then(|| c.iter().sum::<Rational>() / Rational::from_integer(c.len() as i64))
    }

    /// Population standard deviation.
    pub fn std_cost(&self) -> Option<f64> {
        let mean = to_f64(&self.mean_cost()?);
        let c = self.costs();
        let var = c.iter().map(|x| (to_f64(x) - mean).powi(2)).sum::<f64>() / c.len() as f64;
        Some(var.sqrt())
    }

    pub fn mean_ms(&self) -> f64 {
        self.outcomes.iter().map(|o| o.ms).sum::<f64>() / self.outcomes.len().max(1) as f64
    }

    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }

    /// Samples whose solution carries violations.
    pub fn infeasible(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_ok() && !o.feasible).count()
    }
}

/// Where a solution produced during a sweep came from.
#[derive(Clone, Copy, Debug)]
pub struct SampleContext {
    pub t: usize,
    pub dest: usize,
    pub cap: u64,
    pub algo: Algorithm,
    pub seed: u64,
}

pub type Inspector<'a> = dyn Fn(&SampleContext, &Instance, &Solution) + Sync + 'a;

pub fn run_sweep(cfg: &SweepConfig, workers: usize) -> anyhow::Result<Vec<SweepRow>> {
    run_sweep_inspect(cfg, workers, &|_, _, _| {})
}

/// Like [`run_sweep`], handing every solution to `inspect` as it is made.
pub fn run_sweep_inspect(cfg: &SweepConfig, workers: usize, inspect: &Inspector) -> anyhow::Result<Vec<SweepRow>> {
    let net = load_topology(&cfg.topology)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let label = cfg.label();
    let mut rows = Vec::new();
    for &t in &cfg.t {
        for &dest in &cfg.dest {
            for &cap in &cfg.cap {
                let per_sample: Vec<Vec<SampleOutcome>> = pool.install(|| {
                    (0..cfg.samples as u64)
                        .into_par_iter()
                        .map(|k| run_sample(cfg, &net, t, dest, cap, cfg.seed_base + k, inspect))
                        .collect()
                });
                for (a, &algo) in cfg.algorithms.iter().enumerate() {
                    rows.push(SweepRow {
                        topology: label.clone(),
                        t,
                        dest,
                        cap,
                        algo,
                        seed_base: cfg.seed_base,
                        outcomes: per_sample.iter().map(|s| s[a].clone()).collect(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// One instance, every algorithm. All algorithms see the same instance.
fn run_sample(
    cfg: &SweepConfig,
    net: &Network,
    t: usize,
    dest: usize,
    cap: u64,
    seed: u64,
    inspect: &Inspector,
) -> Vec<SampleOutcome> {
    let fail = |msg: String| {
        cfg.algorithms.iter().map(|_| SampleOutcome { seed, result: Err(msg.clone()), feasible: false, ms: 0.0 }).collect()
    };
    let mut inst = match random_instance(net, t, dest, &cfg.rates, Some(cap), seed) {
        Ok(i) => i,
        Err(e) => return fail(e.to_string()),
    };
    if let Some(base) = cfg.calibrate.base() {
        let storage = cfg.storage.unwrap_or(cfg.mode.default_storage());
        match calibrate_capacity(&inst.network, &inst.groups, base, storage, seed) {
            Ok(n) => inst.network = n,
            Err(e) => return fail(e.to_string()),
        }
    }
    let solver = SolverConfig { mode: cfg.mode, storage: cfg.storage, seed, ..SolverConfig::default() };
    let mut budgets = OracleBudgets::default();
    if let Some(n) = cfg.oracle_nodes {
        budgets.nodes = n;
    }
    cfg.algorithms
        .iter()
        .map(|&algo| {
            let start = Instant::now();
            let res = run_algorithm(algo, &inst.network, &inst.groups, &solver, budgets);
            let ms = start.elapsed().as_secs_f64() * 1e3;
            match res {
                Ok(sol) => {
                    inspect(&SampleContext { t, dest, cap, algo, seed }, &inst, &sol);
                    SampleOutcome { seed, result: Ok(sol.total_cost), feasible: sol.is_feasible(), ms }
                }
                Err(e) => SampleOutcome { seed, result: Err(e.to_string()), feasible: false, ms },
            }
        })
        .collect()
}

pub const CSV_HEADER: [&str; 12] = [
    "topology",
    "t",
    "dest",
    "cap",
    "algo",
    "seed_base",
    "mean_cost",
    "std_cost",
    "mean_ms",
    "samples",
    "failed",
    "infeasible",
];

/// Costs are written with six decimals; `mean_ms` is left empty when
/// timing is off. `samples` counts the samples that produced a solution.
pub fn write_csv(rows: &[SweepRow], timing: bool, out: impl Write) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let ok = r.outcomes.len() - r.failed();
        w.write_record([
            r.topology.clone(),
            r.t.to_string(),
            r.dest.to_string(),
            r.cap.to_string(),
            r.algo.to_string(),
            r.seed_base.to_string(),
            r.mean_cost().map(|m| rational::format_decimal(&m, 6)).unwrap_or_default(),
            r.std_cost().map(|s| format!("{s:.6}")).unwrap_or_default(),
            if timing { format!("{:.3}", r.mean_ms()) } else { String::new() },
            ok.to_string(),
            r.failed().to_string(),
            r.infeasible().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Mutex;

    use smte_core::rational::int;

    use super::*;

    const MINIMAL: &str = "topology = \"net.json\"\nt = [5]\ndest = [2]\ncap = [1]\nalgorithms = [\"mtrsa\"]\n";

    #[test]
    fn config_defaults_and_rejections() {
        let cfg = SweepConfig::from_toml(MINIMAL).unwrap();
        assert_eq!((cfg.mode, cfg.samples, cfg.seed_base, cfg.timing), (Mode::Smte, 1, 0, true));
        assert_eq!(cfg.calibrate, Calibration::Spt);
        assert_eq!(cfg.rates, RateDist::default());
        assert_eq!(cfg.label(), "net");
        assert!(SweepConfig::from_toml(&format!("{MINIMAL}samples = 0\n")).is_err());
        assert!(SweepConfig::from_toml(&format!("{MINIMAL}colour = 1\n")).is_err());
        assert!(SweepConfig::from_toml(&MINIMAL.replace("[5]", "[]")).is_err());
        let cfg = SweepConfig::from_toml(&format!(
            "{MINIMAL}rates = {{ kind = \"uniform\", lo = 1, hi = 3 }}\ncalibrate = \"none\"\nstorage = \"entries\"\n"
        ))
        .unwrap();
        assert_eq!(cfg.rates, RateDist::Uniform { lo: 1, hi: 3 });
        assert_eq!((cfg.calibrate, cfg.storage), (Calibration::None, Some(Storage::Entries)));
    }

    fn row(costs: &[i64]) -> SweepRow {
        SweepRow {
            topology: "x".into(),
            t: 1,
            dest: 1,
            cap: 1,
            algo: Algorithm::Mtrsa,
            seed_base: 0,
            outcomes: costs
                .iter()
                .enumerate()
                .map(|(k, &c)| SampleOutcome { seed: k as u64, result: Ok(int(c)), feasible: true, ms: 2.0 })
                .collect(),
        }
    }

    #[test]
    fn row_statistics() {
        let one = row(&[7]);
        assert_eq!((one.mean_cost(), one.std_cost()), (Some(int(7)), Some(0.0)));
        // Population deviation of {2, 4, 4, 4, 5, 5, 7, 9} is exactly 2.
        let r = row(&[2, 4, 4, 4, 5, 5, 7, 9]);
        assert_eq!(r.mean_cost(), Some(int(5)));
        assert_eq!(r.std_cost(), Some(2.0));
        let mut r = row(&[1, 2]);
        r.outcomes.push(SampleOutcome { seed: 9, result: Err("no".into()), feasible: false, ms: 0.0 });
        r.outcomes[0].feasible = false;
        assert_eq!((r.failed(), r.infeasible()), (1, 1));
        assert_eq!(r.mean_cost(), Some(Rational::new(3, 2)));
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_csv(&[row(&[1, 2])], false, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, format!("{}\nx,1,1,1,mtrsa,0,1.500000,0.500000,,2,0,0\n", CSV_HEADER.join(",")));
        let mut out = Vec::new();
        write_csv(&[row(&[1])], true, &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().ends_with(",0.000000,2.000,1,0,0\n"));
    }

    #[test]
    fn algorithms_share_each_samples_instance() {
        let mut cfg = SweepConfig::from_toml(&MINIMAL.replace("[\"mtrsa\"]", "[\"mtrsa\", \"spt\", \"st\"]")).unwrap();
        cfg.topology = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/Columbus.graphml");
        cfg.samples = 4;
        cfg.seed_base = 10;
        let seen = Mutex::new(BTreeMap::<(u64, String), Vec<String>>::new());
        let inspect = |ctx: &SampleContext, inst: &Instance, _: &Solution| {
            seen.lock().unwrap().entry((ctx.seed, inst.to_json())).or_default().push(ctx.algo.to_string());
        };
        let rows = run_sweep_inspect(&cfg, 2, &inspect).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.outcomes.iter().map(|o| o.seed).eq(10..14)));
        // One instance per seed, seen by all three algorithms.
        let seen = seen.into_inner().unwrap();
        assert_eq!(seen.len(), 4);
        assert!(seen.values().all(|v| v.len() == 3));
    }
}
