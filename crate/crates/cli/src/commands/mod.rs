pub mod analyze;
pub mod evaluate;
pub mod fit;
pub mod pairwise;
pub mod select;
pub mod simulate;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rgm_core::inference::{effective_sample_size, AcceptanceStats, SampleStore};
use rgm_core::sem::intragenic_columns;

use crate::error::{CliError, CliResult};

pub const DATA_FILE: &str = "data.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const TRUTH_GRAPH_FILE: &str = "truth_graph.json";
pub const TRUTH_DOT_FILE: &str = "truth.dot";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const FIT_SUMMARY_FILE: &str = "fit_summary.json";
pub const EDGE_PROBS_FILE: &str = "edge_probs.csv";
pub const ESTIMATE_FILE: &str = "estimate.json";
pub const ESTIMATE_DOT_FILE: &str = "estimate.dot";

pub fn replicate_dir(out_dir: &Path, r: usize) -> PathBuf {
    out_dir.join(format!("rep_{r:03}"))
}

/// Replicate directories under `out_dir` that contain `needed`, sorted.
pub fn discover_replicates(out_dir: &Path, needed: &str) -> CliResult<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    let entries = fs::read_dir(out_dir)
        .map_err(|e| CliError::Io(format!("cannot list {}: {e}", out_dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::Io(e.to_string()))?;
        let path = entry.path();
        if path.is_dir()
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("rep_"))
            && path.join(needed).is_file()
        {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Io(format!(
            "no replicate directories with {needed} under {}",
            out_dir.display()
        )));
    }
    Ok(dirs)
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Per-fit diagnostics persisted alongside the sample bundle.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub p: usize,
    pub n: usize,
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub standardized: bool,
    pub candidate_edges: usize,
    pub retained_draws: usize,
    pub acceptance: Vec<AcceptanceStats>,
    pub lu_determinants: u64,
    pub matrix_inversions: u64,
    /// Effective sample size per parameter, summed over chains.
    pub ess: BTreeMap<String, f64>,
}

/// Per-parameter ESS over the retained draws, summed across chains.
pub fn parameter_ess(store: &SampleStore) -> BTreeMap<String, f64> {
    let p = store.p;
    let mut names: Vec<(String, Box<dyn Fn(&rgm_core::inference::PriorState) -> f64>)> = Vec::new();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                let name = format!("at_{}_{}", i + 1, j + 1);
                names.push((name, Box::new(move |d| d.a_tilde[i][j])));
            }
        }
    }
    for i in 0..p {
        for k in intragenic_columns(i) {
            let name = format!("bt_{}_{}", i + 1, k + 1);
            names.push((name, Box::new(move |d| d.b_tilde[i][k])));
        }
    }
    for i in 0..p {
        names.push((format!("t_{}", i + 1), Box::new(move |d| d.t[i])));
    }
    for i in 0..p {
        names.push((format!("sigma_{}", i + 1), Box::new(move |d| d.sigma[i])));
    }

    let mut out = BTreeMap::new();
    for (name, extract) in names {
        let mut total = 0.0;
        for c in 0..store.chains() {
            let series: Vec<f64> = store.chain_draws(c).iter().map(&extract).collect();
            total += effective_sample_size(&series);
        }
        out.insert(name, total);
    }
    out
}
