//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use smte_core::graph::load_graphml;
use smte_core::instgen::{calibrate_capacity, random_instance, CalibrationBase, RateDist};
use smte_core::{Instance, Mode, Network};

pub fn topology(name: &str) -> Network {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(format!("{name}.graphml"));
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    load_graphml(&bytes, &Default::default()).expect("topology parses")
}

/// Random groups with node capacity `cap` and links calibrated on the
/// shortest-path baseline, as in the large-scale experiments.
pub fn experiment(name: &str, t: usize, dest: usize, cap: u64, seed: u64) -> Instance {
    let inst = random_instance(&topology(name), t, dest, &RateDist::default(), Some(cap), seed).expect("instance");
    let storage = Mode::Smte.default_storage();
    let network = calibrate_capacity(&inst.network, &inst.groups, CalibrationBase::Spt, storage, seed).expect("calibrates");
    Instance::new(network, inst.groups)
}
