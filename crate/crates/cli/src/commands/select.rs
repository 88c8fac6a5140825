//! `rgm select`: turn sample bundles into graph estimates under the chosen
//! rule (mpm | fdr | hpm).

use std::path::{Path, PathBuf};

use rgm_core::io::read_samples_csv;
use rgm_core::selection::{edge_probabilities, select_fdr, select_hpm, select_mpm, GraphEstimate};

use super::{discover_replicates, write_text, ESTIMATE_DOT_FILE, ESTIMATE_FILE, SAMPLES_FILE};
use crate::config::{RuleChoice, RunConfig};
use crate::error::{CliError, CliResult};

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let jobs: Vec<(PathBuf, PathBuf)> = match &cfg.samples {
        Some(samples) => {
            let dir = match &cfg.out_dir {
                Some(d) => d.clone(),
                None => samples
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            vec![(samples.clone(), dir)]
        }
        None => discover_replicates(&cfg.out_dir(), SAMPLES_FILE)?
            .into_iter()
            .map(|dir| (dir.join(SAMPLES_FILE), dir))
            .collect(),
    };
    let rule = cfg.rule_choice()?;
    for (samples_path, dir) in jobs {
        let estimate = select_one(&samples_path, rule)?;
        write_text(&dir.join(ESTIMATE_FILE), &estimate.to_json())?;
        write_text(&dir.join(ESTIMATE_DOT_FILE), &estimate.to_dot("estimate"))?;
        eprintln!(
            "select: {} edges ({:?}) -> {}",
            estimate.edges.len(),
            estimate.rule,
            dir.display()
        );
    }
    Ok(())
}

pub fn select_one(samples_path: &Path, rule: RuleChoice) -> CliResult<GraphEstimate> {
    let store = read_samples_csv(samples_path)?;
    let estimate = match rule {
        RuleChoice::Mpm => select_mpm(&edge_probabilities(&store)?),
        RuleChoice::Fdr(alpha) => select_fdr(&edge_probabilities(&store)?, alpha)?,
        RuleChoice::Hpm => select_hpm(&store)?,
    };
    Ok(estimate)
}
