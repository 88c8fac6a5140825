//! `rgm evaluate`: recovery metrics per replicate plus aggregate summary
//! and the cutoff-averaged ROC on a common FPR grid.

use rgm_core::evaluation::{confusion, metrics, roc, RocCurve};
use rgm_core::io::{
    read_samples_csv, roc_tpr_at, write_average_roc_csv, write_metrics_csv,
    write_metrics_summary_csv, write_roc_csv,
};
use rgm_core::selection::{edge_probabilities, GraphEstimate};
use rgm_core::sem::SemParameters;

use super::{discover_replicates, ESTIMATE_FILE, SAMPLES_FILE, TRUTH_FILE};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let out_dir = cfg.out_dir();
    let dirs = discover_replicates(&out_dir, ESTIMATE_FILE)?;
    let scenario = cfg.scenario.unwrap_or(0);

    let mut rows = Vec::new();
    let mut curves: Vec<RocCurve> = Vec::new();
    for (r, dir) in dirs.iter().enumerate() {
        let truth_path = dir.join(TRUTH_FILE);
        let truth_text = std::fs::read_to_string(&truth_path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", truth_path.display())))?;
        let truth: SemParameters = serde_json::from_str(&truth_text)
            .map_err(|e| CliError::Validation(format!("bad truth JSON: {e}")))?;
        let estimate_text = std::fs::read_to_string(dir.join(ESTIMATE_FILE))
            .map_err(|e| CliError::Io(e.to_string()))?;
        let estimate = GraphEstimate::from_json(&estimate_text)?;

        let m = metrics(&confusion(&estimate, &truth)?);
        let store = read_samples_csv(&dir.join(SAMPLES_FILE))?;
        let table = edge_probabilities(&store)?;
        let curve = roc(&table, &truth)?;
        write_roc_csv(&dir.join("roc.csv"), &curve)?;
        rows.push((scenario, r, m, curve.auc));
        curves.push(curve);
    }

    write_metrics_csv(&out_dir.join("metrics.csv"), &rows)?;
    write_metrics_summary_csv(&out_dir.join("metrics_summary.csv"), &rows)?;

    // average ROC: pointwise mean TPR over a common FPR grid
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let mean_tpr: Vec<f64> = grid
        .iter()
        .map(|&f| curves.iter().map(|c| roc_tpr_at(c, f)).sum::<f64>() / curves.len() as f64)
        .collect();
    write_average_roc_csv(&out_dir.join("roc_average.csv"), &grid, &mean_tpr)?;

    eprintln!(
        "evaluate: {} replicates -> {}",
        rows.len(),
        out_dir.display()
    );
    Ok(())
}
