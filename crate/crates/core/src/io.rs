//! CSV and JSON readers/writers: datasets, sample bundles, edge-probability
//! tables, metrics and ROC exports, and reference-ordering files.
//!
//! Float columns use the shortest round-trip decimal form, so writing and
//! re-reading a bundle reproduces it exactly and identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, RgmError};
use crate::evaluation::{DegreeSummary, Metrics, RocCurve};
use crate::inference::{AcceptanceStats, PriorState, SampleStore, SamplerStats};
use crate::selection::{EdgeKind, EdgeProbabilityTable, SignSummary};
use crate::sem::{intragenic_columns, DataSet};

/// Optional mapping from real column names to the positional convention
/// (`y[i]` is gene `i+1`, `x[2i]`/`x[2i+1]` its copy number/methylation).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ColumnMapping {
    pub y: Vec<String>,
    pub x: Vec<String>,
}

/// Writes `Y1..Yp,X1..X2p` with one row per observation.
pub fn write_dataset_csv(path: &Path, data: &DataSet) -> Result<()> {
    let p = data.p();
    let mut out = String::new();
    let mut header: Vec<String> = (1..=p).map(|i| format!("Y{i}")).collect();
    header.extend((1..=2 * p).map(|k| format!("X{k}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..data.n() {
        let mut row: Vec<String> = data.y_row(r).iter().map(|v| v.to_string()).collect();
        row.extend(data.x_row(r).iter().map(|v| v.to_string()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a dataset CSV. Without a mapping, the header must contain columns
/// named `Y1..Yp` and `X1..X2p` (any order); with one, the named columns
/// are pulled in the order given. Parse failures report file and line.
pub fn read_dataset_csv(path: &Path, mapping: Option<&ColumnMapping>) -> Result<DataSet> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or_else(|| RgmError::Parse {
        location: format!("{display}:1"),
        message: "empty file".into(),
    })?;
    let header: Vec<&str> = header_line.split(',').map(str::trim).collect();

    let (y_cols, x_cols) = match mapping {
        Some(m) => {
            if m.x.len() != 2 * m.y.len() {
                return Err(RgmError::InvalidConfig(format!(
                    "column mapping must list 2 X columns per Y column ({} vs {})",
                    m.y.len(),
                    m.x.len()
                )));
            }
            let find = |name: &String| -> Result<usize> {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| RgmError::Parse {
                        location: format!("{display}:1"),
                        message: format!("column {name:?} not found in header"),
                    })
            };
            (
                m.y.iter().map(find).collect::<Result<Vec<_>>>()?,
                m.x.iter().map(find).collect::<Result<Vec<_>>>()?,
            )
        }
        None => {
            let p = header.iter().filter(|h| h.starts_with('Y')).count();
            let x_count = header.iter().filter(|h| h.starts_with('X')).count();
            if p == 0 || x_count != 2 * p {
                return Err(RgmError::Parse {
                    location: format!("{display}:1"),
                    message: format!(
                        "expected Y1..Yp and X1..X2p columns, found {p} Y and {x_count} X"
                    ),
                });
            }
            let find = |name: String| -> Result<usize> {
                header
                    .iter()
                    .position(|h| **h == name)
                    .ok_or_else(|| RgmError::Parse {
                        location: format!("{display}:1"),
                        message: format!("column {name:?} not found in header"),
                    })
            };
            (
                (1..=p).map(|i| find(format!("Y{i}"))).collect::<Result<Vec<_>>>()?,
                (1..=2 * p).map(|k| find(format!("X{k}"))).collect::<Result<Vec<_>>>()?,
            )
        }
    };

    let mut y = Vec::new();
    let mut x = Vec::new();
    for (line_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let line_no = line_idx + 1;
        let parse = |col: usize| -> Result<f64> {
            let field = fields.get(col).ok_or_else(|| RgmError::Parse {
                location: format!("{display}:{line_no}"),
                message: format!("row has {} fields, needs column {}", fields.len(), col + 1),
            })?;
            field.parse::<f64>().map_err(|e| RgmError::Parse {
                location: format!("{display}:{line_no}"),
                message: format!("bad number {field:?}: {e}"),
            })
        };
        let yr = y_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?;
        let xr = x_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?;
        if let Some(v) = yr.iter().chain(xr.iter()).find(|v| !v.is_finite()) {
            return Err(RgmError::Parse {
                location: format!("{display}:{line_no}"),
                message: format!("non-finite value {v}"),
            });
        }
        y.push(yr);
        x.push(xr);
    }
    DataSet::new(y, x)
}

/// Header of the flattened sample bundle for gene count `p`:
/// `chain,draw` then `at_i_j`, `bt_i_k`, `t_i`, `tau_i_j`, `nu_i_k`,
/// `sigma_i` (indices 1-based, masked positions only).
fn samples_header(p: usize) -> Vec<String> {
    let mut cols = vec!["chain".to_string(), "draw".to_string()];
    for i in 1..=p {
        for j in 1..=p {
            if i != j {
                cols.push(format!("at_{i}_{j}"));
            }
        }
    }
    for i in 1..=p {
        for k in intragenic_columns(i - 1) {
            cols.push(format!("bt_{i}_{}", k + 1));
        }
    }
    for i in 1..=p {
        cols.push(format!("t_{i}"));
    }
    for i in 1..=p {
        for j in 1..=p {
            if i != j {
                cols.push(format!("tau_{i}_{j}"));
            }
        }
    }
    for i in 1..=p {
        for k in intragenic_columns(i - 1) {
            cols.push(format!("nu_{i}_{}", k + 1));
        }
    }
    for i in 1..=p {
        cols.push(format!("sigma_{i}"));
    }
    cols
}

/// Writes the retained draws, one CSV row per draw.
pub fn write_samples_csv(path: &Path, store: &SampleStore) -> Result<()> {
    let p = store.p;
    let mut out = String::new();
    out.push_str(&samples_header(p).join(","));
    out.push('\n');
    for (chain, _) in store.chain_lengths.iter().enumerate() {
        for (draw_idx, draw) in store.chain_draws(chain).iter().enumerate() {
            let mut row: Vec<String> = vec![chain.to_string(), draw_idx.to_string()];
            for i in 0..p {
                for j in 0..p {
                    if i != j {
                        row.push(draw.a_tilde[i][j].to_string());
                    }
                }
            }
            for i in 0..p {
                for k in intragenic_columns(i) {
                    row.push(draw.b_tilde[i][k].to_string());
                }
            }
            for i in 0..p {
                row.push(draw.t[i].to_string());
            }
            for i in 0..p {
                for j in 0..p {
                    if i != j {
                        row.push(draw.tau[i][j].to_string());
                    }
                }
            }
            for i in 0..p {
                for k in intragenic_columns(i) {
                    row.push(draw.nu[i][k].to_string());
                }
            }
            for i in 0..p {
                row.push(draw.sigma[i].to_string());
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a sample bundle back. Acceptance statistics live in the summary
/// JSON, not the CSV, so the returned store carries empty counters.
pub fn read_samples_csv(path: &Path) -> Result<SampleStore> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or_else(|| RgmError::Parse {
        location: format!("{display}:1"),
        message: "empty file".into(),
    })?;
    let header: Vec<&str> = header_line.split(',').collect();
    let p = header.iter().filter(|h| h.starts_with("sigma_")).count();
    if p == 0 {
        return Err(RgmError::Parse {
            location: format!("{display}:1"),
            message: "no sigma_* columns; not a sample bundle".into(),
        });
    }
    let expected = samples_header(p);
    if header != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(RgmError::Parse {
            location: format!("{display}:1"),
            message: format!("unexpected column layout for p={p}"),
        });
    }

    let mut draws: Vec<PriorState> = Vec::new();
    let mut chain_ids: Vec<usize> = Vec::new();
    for (line_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = line_idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(RgmError::Parse {
                location: format!("{display}:{line_no}"),
                message: format!("row has {} fields, expected {}", fields.len(), expected.len()),
            });
        }
        let mut cursor = 0usize;
        let mut next = |what: &str| -> Result<f64> {
            let field = fields[cursor];
            cursor += 1;
            field.parse::<f64>().map_err(|e| RgmError::Parse {
                location: format!("{display}:{line_no}"),
                message: format!("bad {what} value {field:?}: {e}"),
            })
        };
        let chain = next("chain")? as usize;
        let _draw = next("draw")?;
        let mut st = PriorState::initial(p, 1.0, vec![1.0; p]);
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    st.a_tilde[i][j] = next("a_tilde")?;
                }
            }
        }
        for i in 0..p {
            for k in intragenic_columns(i) {
                st.b_tilde[i][k] = next("b_tilde")?;
            }
        }
        for i in 0..p {
            st.t[i] = next("t")?;
        }
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    st.tau[i][j] = next("tau")?;
                }
            }
        }
        for i in 0..p {
            for k in intragenic_columns(i) {
                st.nu[i][k] = next("nu")?;
            }
        }
        for i in 0..p {
            st.sigma[i] = next("sigma")?;
        }
        chain_ids.push(chain);
        draws.push(st);
    }
    if draws.is_empty() {
        return Err(RgmError::EmptyStore);
    }
    let chains = chain_ids.iter().max().unwrap() + 1;
    let mut chain_lengths = vec![0usize; chains];
    for &c in &chain_ids {
        chain_lengths[c] += 1;
    }
    // rows must be grouped by chain in ascending order
    let mut sorted_ids = chain_ids.clone();
    sorted_ids.sort_unstable();
    if sorted_ids != chain_ids {
        return Err(RgmError::Parse {
            location: display,
            message: "sample rows are not grouped by chain".into(),
        });
    }
    Ok(SampleStore {
        p,
        n_obs: 0,
        draws,
        chain_lengths,
        acceptance: vec![AcceptanceStats::default(); chains],
        stats: SamplerStats::default(),
    })
}

fn sign_str(sign: SignSummary) -> &'static str {
    match sign {
        SignSummary::Positive => "positive",
        SignSummary::Negative => "negative",
        SignSummary::Ambiguous => "ambiguous",
    }
}

/// `kind,from,to,probability,conditional_mean,sign` per candidate edge.
pub fn write_edge_probabilities_csv(path: &Path, table: &EdgeProbabilityTable) -> Result<()> {
    let mut out = String::from("kind,from,to,probability,conditional_mean,sign\n");
    for e in &table.entries {
        let kind = match e.edge.kind {
            EdgeKind::GeneGene => "gene",
            EdgeKind::DnaGene => "dna",
        };
        let mean = e.conditional_mean.map(|m| m.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{kind},{},{},{},{mean},{}",
            e.edge.from,
            e.edge.to,
            e.probability,
            sign_str(e.sign)
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// One metrics row per replicate: `scenario,replicate,mcc,tpr,fdr,auc`.
pub fn write_metrics_csv(path: &Path, rows: &[(u32, usize, Metrics, f64)]) -> Result<()> {
    let mut out = String::from("scenario,replicate,mcc,tpr,fdr,auc\n");
    for (scenario, replicate, m, auc) in rows {
        writeln!(out, "{scenario},{replicate},{},{},{},{auc}", m.mcc, m.tpr, m.fdr).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Aggregate metrics: one row per statistic with mean and sd (sd empty for
/// a single replicate).
pub fn write_metrics_summary_csv(path: &Path, rows: &[(u32, usize, Metrics, f64)]) -> Result<()> {
    let mut out = String::from("scenario,metric,mean,sd\n");
    let mut scenarios: Vec<u32> = rows.iter().map(|r| r.0).collect();
    scenarios.sort_unstable();
    scenarios.dedup();
    for scenario in scenarios {
        let subset: Vec<&(u32, usize, Metrics, f64)> =
            rows.iter().filter(|r| r.0 == scenario).collect();
        for (name, values) in [
            ("mcc", subset.iter().map(|r| r.2.mcc).collect::<Vec<_>>()),
            ("tpr", subset.iter().map(|r| r.2.tpr).collect()),
            ("fdr", subset.iter().map(|r| r.2.fdr).collect()),
            ("auc", subset.iter().map(|r| r.3).collect()),
        ] {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let sd = if values.len() > 1 {
                let var =
                    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                var.sqrt().to_string()
            } else {
                String::new()
            };
            writeln!(out, "{scenario},{name},{mean},{sd}").unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// ROC points as `cutoff,fpr,tpr` (plot-ready).
pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> Result<()> {
    let mut out = String::from("cutoff,fpr,tpr\n");
    for pt in &curve.points {
        writeln!(out, "{},{},{}", pt.cutoff, pt.fpr, pt.tpr).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Averaged ROC on a common FPR grid: `fpr,mean_tpr`.
pub fn write_average_roc_csv(path: &Path, grid: &[f64], mean_tpr: &[f64]) -> Result<()> {
    let mut out = String::from("fpr,mean_tpr\n");
    for (f, t) in grid.iter().zip(mean_tpr) {
        writeln!(out, "{f},{t}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Degree box-plot summaries: `gene,min,q1,median,q3,max,mean`.
pub fn write_degree_summary_csv(path: &Path, summaries: &[DegreeSummary]) -> Result<()> {
    let mut out = String::from("gene,min,q1,median,q3,max,mean\n");
    for s in summaries {
        writeln!(
            out,
            "Y{},{},{},{},{},{},{}",
            s.gene, s.min, s.q1, s.median, s.q3, s.max, s.mean
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Ordering scores with average ranks: `gene,score,rank`.
pub fn write_ordering_scores_csv(path: &Path, scores: &[i64], ranks: &[f64]) -> Result<()> {
    let mut out = String::from("gene,score,rank\n");
    for (g, (s, r)) in scores.iter().zip(ranks).enumerate() {
        writeln!(out, "Y{},{s},{r}", g + 1).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses a reference-ordering file: one tie group per line, labels
/// separated by commas or whitespace, groups ordered along the cascade.
pub fn parse_reference_ordering(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|line| {
            line.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect::<Vec<String>>()
        })
        .filter(|group| !group.is_empty())
        .collect()
}

/// Interpolates a piecewise-linear ROC curve at one FPR value.
pub fn roc_tpr_at(curve: &RocCurve, fpr: f64) -> f64 {
    let pts = &curve.points;
    if pts.is_empty() {
        return 0.0;
    }
    // points are sorted by fpr; find the bracketing pair
    let mut best = 0.0f64;
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if fpr >= a.fpr && fpr <= b.fpr {
            let t = if b.fpr > a.fpr {
                a.tpr + (b.tpr - a.tpr) * (fpr - a.fpr) / (b.fpr - a.fpr)
            } else {
                // vertical segment: take the highest tpr reached at this fpr
                b.tpr
            };
            best = best.max(t);
        }
    }
    if fpr >= pts.last().unwrap().fpr {
        best = best.max(pts.last().unwrap().tpr);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::RocPoint;
    use crate::inference::{run_chains, Hyperparameters, McmcConfig};
    use crate::sim::{simulate, Scenario, ScenarioSpec};
    use approx::assert_relative_eq;
    use std::path::PathBuf;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("rgm-core-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn dataset_csv_round_trip_and_determinism() {
        let mut spec = ScenarioSpec::new(Scenario::One, 5);
        spec.n = 7;
        spec.p = 3;
        let (data, _) = simulate(&spec).unwrap();
        let path = tmp("data.csv");
        write_dataset_csv(&path, &data).unwrap();
        let back = read_dataset_csv(&path, None).unwrap();
        assert_eq!(data, back);

        let bytes1 = fs::read(&path).unwrap();
        write_dataset_csv(&path, &data).unwrap();
        assert_eq!(bytes1, fs::read(&path).unwrap());
    }

    #[test]
    fn dataset_csv_reports_offending_row() {
        let path = tmp("bad.csv");
        fs::write(&path, "Y1,X1,X2\n1.0,2.0,3.0\n1.0,oops,3.0\n").unwrap();
        let err = read_dataset_csv(&path, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3"), "missing line number: {msg}");
        assert!(msg.contains("oops"));
    }

    #[test]
    fn dataset_csv_rejects_nan() {
        let path = tmp("nan.csv");
        fs::write(&path, "Y1,X1,X2\nNaN,2.0,3.0\n").unwrap();
        assert!(read_dataset_csv(&path, None).is_err());
    }

    #[test]
    fn dataset_csv_with_mapping() {
        let path = tmp("named.csv");
        fs::write(
            &path,
            "expr_KRAS,cn_KRAS,me_KRAS\n0.5,1.0,2.0\n-0.5,0.0,1.0\n",
        )
        .unwrap();
        let mapping = ColumnMapping {
            y: vec!["expr_KRAS".into()],
            x: vec!["cn_KRAS".into(), "me_KRAS".into()],
        };
        let data = read_dataset_csv(&path, Some(&mapping)).unwrap();
        assert_eq!(data.p(), 1);
        assert_eq!(data.y_row(1)[0], -0.5);
    }

    #[test]
    fn samples_bundle_round_trip() {
        let mut spec = ScenarioSpec::new(Scenario::One, 9);
        spec.n = 15;
        spec.p = 2;
        let (data, _) = simulate(&spec).unwrap();
        let config = McmcConfig {
            iterations: 60,
            burn_in: 20,
            thin: 4,
            chains: 2,
            seed: 11,
            ..McmcConfig::default()
        };
        let store = run_chains(&data, &Hyperparameters::default(), &config).unwrap();
        let path = tmp("samples.csv");
        write_samples_csv(&path, &store).unwrap();
        let back = read_samples_csv(&path).unwrap();
        assert_eq!(store.draws, back.draws);
        assert_eq!(store.chain_lengths, back.chain_lengths);
        assert_eq!(back.p, 2);
    }

    #[test]
    fn reference_ordering_parse() {
        let groups = parse_reference_ordering("Y1, Y2 Y3\nY4\n\nY5,Y6\n");
        assert_eq!(
            groups,
            vec![
                vec!["Y1".to_string(), "Y2".into(), "Y3".into()],
                vec!["Y4".into()],
                vec!["Y5".into(), "Y6".into()],
            ]
        );
    }

    #[test]
    fn roc_interpolation_handles_vertical_segments() {
        let curve = RocCurve {
            points: vec![
                RocPoint { cutoff: f64::INFINITY, fpr: 0.0, tpr: 0.0 },
                RocPoint { cutoff: 0.9, fpr: 0.0, tpr: 0.6 },
                RocPoint { cutoff: 0.5, fpr: 0.5, tpr: 0.8 },
                RocPoint { cutoff: 0.0, fpr: 1.0, tpr: 1.0 },
            ],
            auc: 0.0,
        };
        assert_relative_eq!(roc_tpr_at(&curve, 0.0), 0.6);
        assert_relative_eq!(roc_tpr_at(&curve, 0.25), 0.7);
        assert_relative_eq!(roc_tpr_at(&curve, 1.0), 1.0);
    }
}
