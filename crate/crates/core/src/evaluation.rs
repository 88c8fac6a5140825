//! Recovery metrics against a simulation truth (confusion counts, TPR/FDR/
//! MCC, ROC curves) and network analytics for fitted graphs (motifs, degree
//! posteriors, ordering scores, Kendall distance to a reference cascade).

use serde::{Deserialize, Serialize};

use crate::error::{Result, RgmError};
use crate::inference::SampleStore;
use crate::selection::{candidate_edges, EdgeId, EdgeKind, EdgeProbabilityTable, GraphEstimate, SignSummary};
use crate::sem::SemParameters;

/// Entrywise confusion counts over all candidate edges (off-diagonal `A`
/// plus masked `B`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionSummary {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// TPR, FDR and MCC with the degenerate-denominator conventions:
/// TPR is 1 when there are no positives, FDR is 0 when nothing is selected,
/// MCC is 0 when any marginal vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: f64,
    pub fdr: f64,
    pub mcc: f64,
}

/// Compares a selected edge set against the support of the generating
/// parameters.
pub fn confusion(estimate: &GraphEstimate, truth: &SemParameters) -> Result<ConfusionSummary> {
    if estimate.p != truth.p {
        return Err(RgmError::DimensionMismatch(format!(
            "estimate has p={} but truth has p={}",
            estimate.p, truth.p
        )));
    }
    let mut summary = ConfusionSummary {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (edge, true_in) in candidate_edges(truth.p).into_iter().zip(truth_support(truth)) {
        let selected = estimate.contains(&edge);
        match (selected, true_in) {
            (true, true) => summary.tp += 1,
            (true, false) => summary.fp += 1,
            (false, false) => summary.tn += 1,
            (false, true) => summary.fn_ += 1,
        }
    }
    Ok(summary)
}

/// Truth indicators in candidate-edge order.
fn truth_support(truth: &SemParameters) -> Vec<bool> {
    let (ga, gb) = truth.support();
    let p = truth.p;
    let mut out = Vec::with_capacity(p * (p - 1) + 2 * p);
    for i in 0..p {
        for j in 0..p {
            if i != j {
                out.push(ga[i][j]);
            }
        }
    }
    for i in 0..p {
        for k in crate::sem::intragenic_columns(i) {
            out.push(gb[i][k]);
        }
    }
    out
}

pub fn metrics(c: &ConfusionSummary) -> Metrics {
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let tpr = if tp + fn_ == 0.0 { 1.0 } else { tp / (tp + fn_) };
    let fdr = if tp + fp == 0.0 { 0.0 } else { fp / (tp + fp) };
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if denom == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / denom.sqrt()
    };
    Metrics { tpr, fdr, mcc }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub cutoff: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve over probability cutoffs, with trapezoidal AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps cutoffs over the distinct probabilities plus {0, 1}; at cutoff
/// `c` an edge is predicted positive when its probability is at least `c`.
/// Errors when the truth has no positives or no negatives (AUC undefined).
pub fn roc(table: &EdgeProbabilityTable, truth: &SemParameters) -> Result<RocCurve> {
    if table.p != truth.p {
        return Err(RgmError::DimensionMismatch(format!(
            "table has p={} but truth has p={}",
            table.p, truth.p
        )));
    }
    let support = truth_support(truth);
    let n_pos = support.iter().filter(|v| **v).count();
    let n_neg = support.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(RgmError::DegenerateTruth(format!(
            "{n_pos} positives and {n_neg} negatives among candidates"
        )));
    }

    let mut cutoffs: Vec<f64> = vec![0.0, 1.0];
    cutoffs.extend(table.entries.iter().map(|e| e.probability));
    cutoffs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    cutoffs.dedup();

    let mut points = vec![RocPoint {
        cutoff: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    for &c in &cutoffs {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (e, &is_pos) in table.entries.iter().zip(support.iter()) {
            if e.probability >= c {
                if is_pos {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let point = RocPoint {
            cutoff: c,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        };
        if points.last().map(|l| (l.fpr, l.tpr)) != Some((point.fpr, point.tpr)) {
            points.push(point);
        }
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

/// Directed signed gene-gene adjacency extracted from an estimate.
fn gene_adjacency(estimate: &GraphEstimate) -> Vec<Vec<Option<SignSummary>>> {
    let p = estimate.p;
    let mut adj = vec![vec![None; p + 1]; p + 1];
    for e in &estimate.edges {
        if e.edge.kind == EdgeKind::GeneGene {
            adj[e.edge.from][e.edge.to] = Some(e.sign);
        }
    }
    adj
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardLoop {
    /// `source → middle`, `middle → sink`, `source → sink`.
    pub source: usize,
    pub middle: usize,
    pub sink: usize,
    pub signs: [SignSummary; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackKind {
    Positive,
    Negative,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLoop {
    pub a: usize,
    pub b: usize,
    pub kind: FeedbackKind,
    pub signs: [SignSummary; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    /// Vertex sequence of a maximal simple directed path (length >= 2 edges).
    pub genes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifReport {
    pub feed_forward_loops: Vec<FeedForwardLoop>,
    pub feedback_loops: Vec<FeedbackLoop>,
    pub cascades: Vec<Cascade>,
}

/// Cascade paths stop extending at this many edges.
pub const CASCADE_CAP: usize = 6;

/// Enumerates feed-forward loops, two-node feedback loops with sign labels,
/// and cascades (maximal simple directed paths of length >= 2, capped at
/// [`CASCADE_CAP`] edges) over the gene-gene subgraph.
pub fn find_motifs(estimate: &GraphEstimate) -> MotifReport {
    let p = estimate.p;
    let adj = gene_adjacency(estimate);

    let mut ffl = Vec::new();
    for source in 1..=p {
        for middle in 1..=p {
            if middle == source || adj[source][middle].is_none() {
                continue;
            }
            for sink in 1..=p {
                if sink == source || sink == middle {
                    continue;
                }
                if let (Some(s1), Some(s2), Some(s3)) =
                    (adj[source][middle], adj[middle][sink], adj[source][sink])
                {
                    ffl.push(FeedForwardLoop {
                        source,
                        middle,
                        sink,
                        signs: [s1, s2, s3],
                    });
                }
            }
        }
    }

    let mut feedback = Vec::new();
    for a in 1..=p {
        for b in (a + 1)..=p {
            if let (Some(sa), Some(sb)) = (adj[a][b], adj[b][a]) {
                let kind = match (sa, sb) {
                    (SignSummary::Positive, SignSummary::Positive)
                    | (SignSummary::Negative, SignSummary::Negative) => FeedbackKind::Positive,
                    (SignSummary::Positive, SignSummary::Negative)
                    | (SignSummary::Negative, SignSummary::Positive) => FeedbackKind::Negative,
                    _ => FeedbackKind::Ambiguous,
                };
                feedback.push(FeedbackLoop {
                    a,
                    b,
                    kind,
                    signs: [sa, sb],
                });
            }
        }
    }

    let mut cascades = Vec::new();
    let mut path = Vec::new();
    for start in 1..=p {
        path.clear();
        path.push(start);
        extend_cascades(&adj, p, &mut path, &mut cascades);
    }
    MotifReport {
        feed_forward_loops: ffl,
        feedback_loops: feedback,
        cascades,
    }
}

fn extend_cascades(
    adj: &[Vec<Option<SignSummary>>],
    p: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Cascade>,
) {
    let tail = *path.last().unwrap();
    let at_cap = path.len() > CASCADE_CAP;
    let mut extended = false;
    if !at_cap {
        for next in 1..=p {
            if adj[tail][next].is_some() && !path.contains(&next) {
                extended = true;
                path.push(next);
                extend_cascades(adj, p, path, out);
                path.pop();
            }
        }
    }
    if !extended && path.len() >= 3 {
        // maximal forward; keep it only if it cannot be prepended either
        // (or the extension would exceed the cap)
        let head = path[0];
        let prependable = path.len() <= CASCADE_CAP
            && (1..=p).any(|prev| adj[prev][head].is_some() && !path.contains(&prev));
        if !prependable {
            out.push(Cascade { genes: path.clone() });
        }
    }
}

/// Per-gene distribution of the number of included gene-gene edges incident
/// to the gene, over retained draws. Both edges of a two-cycle count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreePosterior {
    pub p: usize,
    /// `degrees[g]` holds one degree value per retained draw (gene `g+1`).
    pub degrees: Vec<Vec<u32>>,
}

/// Five-number summary plus mean for box plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub gene: usize,
    pub min: u32,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: u32,
    pub mean: f64,
}

pub fn degree_posterior(store: &SampleStore) -> Result<DegreePosterior> {
    if store.is_empty() {
        return Err(RgmError::EmptyStore);
    }
    let p = store.p;
    let mut degrees = vec![Vec::with_capacity(store.len()); p];
    for draw in &store.draws {
        let ga = draw.gamma_a();
        let mut deg = vec![0u32; p];
        for i in 0..p {
            for j in 0..p {
                if i != j && ga[i][j] {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        for g in 0..p {
            degrees[g].push(deg[g]);
        }
    }
    Ok(DegreePosterior { p, degrees })
}

impl DegreePosterior {
    pub fn summaries(&self) -> Vec<DegreeSummary> {
        (0..self.p)
            .map(|g| {
                let mut v = self.degrees[g].clone();
                v.sort_unstable();
                let quantile = |q: f64| -> f64 {
                    // linear interpolation between closest ranks
                    let idx = q * (v.len() - 1) as f64;
                    let lo = idx.floor() as usize;
                    let hi = idx.ceil() as usize;
                    let frac = idx - lo as f64;
                    v[lo] as f64 * (1.0 - frac) + v[hi] as f64 * frac
                };
                DegreeSummary {
                    gene: g + 1,
                    min: v[0],
                    q1: quantile(0.25),
                    median: quantile(0.5),
                    q3: quantile(0.75),
                    max: *v.last().unwrap(),
                    mean: v.iter().map(|d| *d as f64).sum::<f64>() / v.len() as f64,
                }
            })
            .collect()
    }
}

/// Indegree minus outdegree per gene over the selected gene-gene edges:
/// sinks score high, sources score low.
pub fn ordering_score(estimate: &GraphEstimate) -> Vec<i64> {
    let mut score = vec![0i64; estimate.p];
    for e in &estimate.edges {
        if e.edge.kind == EdgeKind::GeneGene {
            score[e.edge.to - 1] += 1;
            score[e.edge.from - 1] -= 1;
        }
    }
    score
}

/// Average ranks (1-based) with ties sharing the mean rank.
pub fn average_ranks(scores: &[i64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| scores[i]);
    let mut ranks = vec![0.0; n];
    let mut idx = 0;
    while idx < n {
        let mut end = idx;
        while end + 1 < n && scores[order[end + 1]] == scores[order[idx]] {
            end += 1;
        }
        let avg = (idx + end) as f64 / 2.0 + 1.0;
        for &pos in &order[idx..=end] {
            ranks[pos] = avg;
        }
        idx = end + 1;
    }
    ranks
}

/// Normalized Kendall distance between a ranking and a reference ordering
/// with tied groups: the fraction of discordant pairs among pairs whose
/// reference groups differ (within-group pairs are excluded from both the
/// numerator and the denominator). Ties in the ranking count as concordant.
pub fn kendall_distance(ranking: &[f64], reference_groups: &[usize]) -> Result<f64> {
    if ranking.len() != reference_groups.len() {
        return Err(RgmError::DimensionMismatch(format!(
            "ranking has {} items but reference has {}",
            ranking.len(),
            reference_groups.len()
        )));
    }
    let n = ranking.len();
    let mut discordant = 0usize;
    let mut total = 0usize;
    for g in 0..n {
        for h in (g + 1)..n {
            if reference_groups[g] == reference_groups[h] {
                continue;
            }
            total += 1;
            let rank_diff = ranking[g] - ranking[h];
            let ref_diff = reference_groups[g] as f64 - reference_groups[h] as f64;
            if rank_diff * ref_diff < 0.0 {
                discordant += 1;
            }
        }
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(discordant as f64 / total as f64)
}
