//! `rgm analyze`: network analytics of a fitted model — motifs, degree
//! posteriors, ordering scores, and (optionally) the Kendall distance of
//! the score ranking against a reference cascade ordering.

use std::path::{Path, PathBuf};

use serde::Serialize;

use rgm_core::evaluation::{
    average_ranks, degree_posterior, find_motifs, kendall_distance, ordering_score,
};
use rgm_core::io::{
    parse_reference_ordering, read_samples_csv, write_degree_summary_csv,
    write_ordering_scores_csv,
};
use rgm_core::selection::GraphEstimate;

use super::{discover_replicates, write_text, ESTIMATE_FILE, SAMPLES_FILE};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct KendallReport {
    distance: f64,
    cross_group_pairs: usize,
    groups: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct AnalyzeSummary {
    ordering_scores: Vec<i64>,
    ranks: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kendall: Option<KendallReport>,
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let jobs: Vec<PathBuf> = match (&cfg.samples, &cfg.estimate) {
        (Some(samples), Some(_)) => {
            let dir = match &cfg.out_dir {
                Some(d) => d.clone(),
                None => samples
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            vec![dir]
        }
        _ => discover_replicates(&cfg.out_dir(), ESTIMATE_FILE)?,
    };

    for dir in jobs {
        let samples_path = cfg
            .samples
            .clone()
            .unwrap_or_else(|| dir.join(SAMPLES_FILE));
        let estimate_path = cfg
            .estimate
            .clone()
            .unwrap_or_else(|| dir.join(ESTIMATE_FILE));
        analyze_one(cfg, &samples_path, &estimate_path, &dir)?;
    }
    Ok(())
}

fn analyze_one(
    cfg: &RunConfig,
    samples_path: &Path,
    estimate_path: &Path,
    dir: &Path,
) -> CliResult<()> {
    let store = read_samples_csv(samples_path)?;
    let estimate_text = std::fs::read_to_string(estimate_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", estimate_path.display())))?;
    let estimate = GraphEstimate::from_json(&estimate_text)?;
    if estimate.p != store.p {
        return Err(CliError::Validation(format!(
            "estimate has p={} but samples have p={}",
            estimate.p, store.p
        )));
    }

    let motifs = find_motifs(&estimate);
    let motif_text =
        serde_json::to_string_pretty(&motifs).map_err(|e| CliError::Validation(e.to_string()))?;
    write_text(&dir.join("motifs.json"), &motif_text)?;

    let degrees = degree_posterior(&store)?;
    write_degree_summary_csv(&dir.join("degree_posterior.csv"), &degrees.summaries())?;

    let scores = ordering_score(&estimate);
    let ranks = average_ranks(&scores);
    write_ordering_scores_csv(&dir.join("ordering_scores.csv"), &scores, &ranks)?;

    let kendall = match &cfg.reference_ordering {
        Some(ref_path) => {
            let text = std::fs::read_to_string(ref_path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", ref_path.display())))?;
            let groups = parse_reference_ordering(&text);
            Some(kendall_against_reference(&ranks, &groups, store.p)?)
        }
        None => None,
    };

    let summary = AnalyzeSummary {
        ordering_scores: scores,
        ranks,
        kendall,
    };
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Validation(e.to_string()))?;
    write_text(&dir.join("analyze_summary.json"), &text)?;
    eprintln!("analyze: wrote motifs/degrees/scores -> {}", dir.display());
    Ok(())
}

/// Maps reference tie groups (labels `Y1..Yp`) to per-gene group indices and
/// computes the normalized Kendall distance of the rank vector against them.
fn kendall_against_reference(
    ranks: &[f64],
    groups: &[Vec<String>],
    p: usize,
) -> CliResult<KendallReport> {
    let mut group_of = vec![usize::MAX; p];
    for (g, group) in groups.iter().enumerate() {
        for label in group {
            let idx = parse_gene_label(label, p)?;
            if group_of[idx] != usize::MAX {
                return Err(CliError::Validation(format!(
                    "gene {label} appears twice in the reference ordering"
                )));
            }
            group_of[idx] = g;
        }
    }
    if let Some(missing) = group_of.iter().position(|&g| g == usize::MAX) {
        return Err(CliError::Validation(format!(
            "reference ordering does not cover gene Y{}",
            missing + 1
        )));
    }
    let distance = kendall_distance(ranks, &group_of)?;
    let mut cross = 0usize;
    for a in 0..p {
        for b in (a + 1)..p {
            if group_of[a] != group_of[b] {
                cross += 1;
            }
        }
    }
    Ok(KendallReport {
        distance,
        cross_group_pairs: cross,
        groups: groups.to_vec(),
    })
}

fn parse_gene_label(label: &str, p: usize) -> CliResult<usize> {
    let idx: Option<usize> = label
        .strip_prefix('Y')
        .and_then(|rest| rest.parse::<usize>().ok());
    match idx {
        Some(i) if i >= 1 && i <= p => Ok(i - 1),
        _ => Err(CliError::Validation(format!(
            "reference label {label:?} does not match any data column (expected Y1..Y{p})"
        ))),
    }
}
