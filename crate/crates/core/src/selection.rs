//! From posterior draws to graph estimates: per-edge inclusion
//! probabilities, the median-probability model, cutoff selection under
//! posterior-expected-FDR control, and the highest-posterior-probability
//! model for small candidate spaces.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RgmError};
use crate::inference::SampleStore;
use crate::sem::intragenic_columns;

/// Candidate edges for HPM must not exceed this many, or visit frequencies
/// are meaningless.
pub const HPM_CANDIDATE_CAP: usize = 20;

/// Conditional means closer to zero than this are reported as ambiguous.
pub const SIGN_TOLERANCE: f64 = 1e-6;

/// A candidate edge. Endpoints are 1-based: gene indices for both ends of a
/// `GeneGene` edge, an X column index and a gene index for `DnaGene`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId {
    pub kind: EdgeKind,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// `Y_from → Y_to` (a nonzero `a[to][from]`).
    GeneGene,
    /// `X_from → Y_to` (a nonzero `b[to][from]`).
    DnaGene,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignSummary {
    Positive,
    Negative,
    /// Never included, or conditional mean within [`SIGN_TOLERANCE`] of zero.
    Ambiguous,
}

/// Inclusion probability and signed-effect summary of one candidate edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbability {
    pub edge: EdgeId,
    /// Fraction of retained draws whose indicator is 1.
    pub probability: f64,
    /// Mean of the effective coefficient over draws that include the edge.
    pub conditional_mean: Option<f64>,
    pub sign: SignSummary,
}

/// All candidate edges in a fixed order: the off-diagonal of `A` row-major,
/// then the masked entries of `B` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbabilityTable {
    pub p: usize,
    pub draws: usize,
    pub entries: Vec<EdgeProbability>,
}

/// Candidate edges in table order for gene count `p`.
pub fn candidate_edges(p: usize) -> Vec<EdgeId> {
    let mut out = Vec::with_capacity(p * (p - 1) + 2 * p);
    for i in 0..p {
        for j in 0..p {
            if i != j {
                out.push(EdgeId {
                    kind: EdgeKind::GeneGene,
                    from: j + 1,
                    to: i + 1,
                });
            }
        }
    }
    for i in 0..p {
        for k in intragenic_columns(i) {
            out.push(EdgeId {
                kind: EdgeKind::DnaGene,
                from: k + 1,
                to: i + 1,
            });
        }
    }
    out
}

/// Empirical inclusion frequencies pooled over all retained draws of all
/// chains, with conditional-sign summaries.
pub fn edge_probabilities(store: &SampleStore) -> Result<EdgeProbabilityTable> {
    if store.is_empty() {
        return Err(RgmError::EmptyStore);
    }
    let p = store.p;
    let edges = candidate_edges(p);
    let m = edges.len();
    let mut counts = vec![0usize; m];
    let mut sums = vec![0.0f64; m];

    for draw in &store.draws {
        let eff_a = draw.effective_a();
        let eff_b = draw.effective_b();
        let mut idx = 0;
        for i in 0..p {
            for j in 0..p {
                if i == j {
                    continue;
                }
                if eff_a[i][j] != 0.0 {
                    counts[idx] += 1;
                    sums[idx] += eff_a[i][j];
                }
                idx += 1;
            }
        }
        for i in 0..p {
            for k in intragenic_columns(i) {
                if eff_b[i][k] != 0.0 {
                    counts[idx] += 1;
                    sums[idx] += eff_b[i][k];
                }
                idx += 1;
            }
        }
    }

    let n_draws = store.len();
    let entries = edges
        .into_iter()
        .enumerate()
        .map(|(idx, edge)| {
            let probability = counts[idx] as f64 / n_draws as f64;
            let conditional_mean = if counts[idx] > 0 {
                Some(sums[idx] / counts[idx] as f64)
            } else {
                None
            };
            let sign = match conditional_mean {
                Some(mean) if mean > SIGN_TOLERANCE => SignSummary::Positive,
                Some(mean) if mean < -SIGN_TOLERANCE => SignSummary::Negative,
                _ => SignSummary::Ambiguous,
            };
            EdgeProbability {
                edge,
                probability,
                conditional_mean,
                sign,
            }
        })
        .collect();
    Ok(EdgeProbabilityTable {
        p,
        draws: n_draws,
        entries,
    })
}

/// How a graph estimate was selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SelectionRule {
    Mpm,
    Fdr { alpha: f64 },
    Hpm,
}

/// One selected edge, carrying its inclusion probability and sign summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedEdge {
    pub edge: EdgeId,
    pub probability: f64,
    pub sign: SignSummary,
}

/// A selected edge set with the rule, cutoff and achieved error level that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEstimate {
    pub p: usize,
    pub rule: SelectionRule,
    /// Probability cutoff for MPM/FDR; absent for HPM.
    pub cutoff: Option<f64>,
    /// Posterior expected FDR of the selected set (cutoff rules only).
    pub achieved_fdr: Option<f64>,
    /// Visit share of the selected configuration (HPM only).
    pub visit_share: Option<f64>,
    /// Set when FDR control admits no nonempty selection.
    pub empty_selection_flag: bool,
    pub edges: Vec<SelectedEdge>,
}

impl GraphEstimate {
    pub fn contains(&self, edge: &EdgeId) -> bool {
        self.edges.iter().any(|e| e.edge == *edge)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// DOT export with the figure styling: solid arrowheads for stimulatory
    /// (positive) edges, dashed tee-bars for inhibitory (negative) ones, and
    /// pen width proportional to the inclusion probability.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        writeln!(out, "digraph {name} {{").unwrap();
        writeln!(out, "  node [shape=ellipse];").unwrap();
        for g in 1..=self.p {
            writeln!(out, "  Y{g};").unwrap();
        }
        let mut x_nodes: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.edge.kind == EdgeKind::DnaGene)
            .map(|e| e.edge.from)
            .collect();
        x_nodes.sort_unstable();
        x_nodes.dedup();
        for k in x_nodes {
            writeln!(out, "  X{k} [shape=box];").unwrap();
        }
        for e in &self.edges {
            let from = match e.edge.kind {
                EdgeKind::GeneGene => format!("Y{}", e.edge.from),
                EdgeKind::DnaGene => format!("X{}", e.edge.from),
            };
            let width = 0.5 + 4.0 * e.probability;
            let style = match e.sign {
                SignSummary::Negative => ", style=dashed, arrowhead=tee",
                _ => "",
            };
            writeln!(
                out,
                "  {from} -> Y{} [penwidth={width:.3}{style}];",
                e.edge.to
            )
            .unwrap();
        }
        out.push_str("}\n");
        out
    }
}

fn select_by_cutoff(table: &EdgeProbabilityTable, cutoff: f64) -> Vec<SelectedEdge> {
    table
        .entries
        .iter()
        .filter(|e| e.probability > cutoff)
        .map(|e| SelectedEdge {
            edge: e.edge,
            probability: e.probability,
            sign: e.sign,
        })
        .collect()
}

/// Posterior expected FDR of the strict-cutoff selection: mean exclusion
/// probability among selected edges (0 for an empty selection).
pub fn expected_fdr(table: &EdgeProbabilityTable, cutoff: f64) -> f64 {
    let mut miss = 0.0;
    let mut count = 0usize;
    for e in &table.entries {
        if e.probability > cutoff {
            miss += 1.0 - e.probability;
            count += 1;
        }
    }
    miss / (count.max(1) as f64)
}

/// Median probability model: edges with inclusion probability strictly
/// above 1/2.
pub fn select_mpm(table: &EdgeProbabilityTable) -> GraphEstimate {
    let edges = select_by_cutoff(table, 0.5);
    GraphEstimate {
        p: table.p,
        rule: SelectionRule::Mpm,
        cutoff: Some(0.5),
        achieved_fdr: Some(expected_fdr(table, 0.5)),
        visit_share: None,
        empty_selection_flag: false,
        edges,
    }
}

/// Chooses the smallest cutoff (largest selected set) whose posterior
/// expected FDR is at most `alpha`. Candidate cutoffs are zero plus the
/// distinct observed probabilities. When no nonempty selection qualifies,
/// the estimate is empty and flagged.
pub fn select_fdr(table: &EdgeProbabilityTable, alpha: f64) -> Result<GraphEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RgmError::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let mut cutoffs: Vec<f64> = vec![0.0];
    cutoffs.extend(table.entries.iter().map(|e| e.probability));
    cutoffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cutoffs.dedup();

    for &c in &cutoffs {
        let edges = select_by_cutoff(table, c);
        if edges.is_empty() {
            continue;
        }
        let fdr = expected_fdr(table, c);
        if fdr <= alpha {
            return Ok(GraphEstimate {
                p: table.p,
                rule: SelectionRule::Fdr { alpha },
                cutoff: Some(c),
                achieved_fdr: Some(fdr),
                visit_share: None,
                empty_selection_flag: false,
                edges,
            });
        }
    }
    Ok(GraphEstimate {
        p: table.p,
        rule: SelectionRule::Fdr { alpha },
        cutoff: None,
        achieved_fdr: None,
        visit_share: None,
        empty_selection_flag: true,
        edges: Vec::new(),
    })
}

/// Highest posterior probability model: the indicator configuration visited
/// most often. Ties break toward fewer edges, then lexicographically on the
/// sorted candidate-index sets. Guarded to at most [`HPM_CANDIDATE_CAP`]
/// candidate edges.
pub fn select_hpm(store: &SampleStore) -> Result<GraphEstimate> {
    if store.is_empty() {
        return Err(RgmError::EmptyStore);
    }
    let p = store.p;
    let candidates = candidate_edges(p);
    if candidates.len() > HPM_CANDIDATE_CAP {
        return Err(RgmError::HpmGuard {
            candidates: candidates.len(),
            cap: HPM_CANDIDATE_CAP,
        });
    }

    let mut visits: HashMap<u32, usize> = HashMap::new();
    for draw in &store.draws {
        let ga = draw.gamma_a();
        let gb = draw.gamma_b();
        let mut key = 0u32;
        let mut bit = 0;
        for i in 0..p {
            for j in 0..p {
                if i == j {
                    continue;
                }
                if ga[i][j] {
                    key |= 1 << bit;
                }
                bit += 1;
            }
        }
        for i in 0..p {
            for k in intragenic_columns(i) {
                if gb[i][k] {
                    key |= 1 << bit;
                }
                bit += 1;
            }
        }
        *visits.entry(key).or_insert(0) += 1;
    }
    debug_assert_eq!(visits.values().sum::<usize>(), store.len());

    let indices = |key: u32| -> Vec<usize> {
        (0..candidates.len()).filter(|b| key >> b & 1 == 1).collect()
    };
    let best = visits
        .iter()
        .map(|(&key, &count)| (key, count))
        .min_by(|(ka, ca), (kb, cb)| {
            cb.cmp(ca) // more visits first
                .then(ka.count_ones().cmp(&kb.count_ones())) // then sparser
                .then_with(|| indices(*ka).cmp(&indices(*kb))) // then lexicographic
        })
        .map(|(key, count)| (key, count))
        .expect("nonempty store");

    let table = edge_probabilities(store)?;
    let edges = indices(best.0)
        .into_iter()
        .map(|b| SelectedEdge {
            edge: candidates[b],
            probability: table.entries[b].probability,
            sign: table.entries[b].sign,
        })
        .collect();
    Ok(GraphEstimate {
        p,
        rule: SelectionRule::Hpm,
        cutoff: None,
        achieved_fdr: None,
        visit_share: Some(best.1 as f64 / store.len() as f64),
        empty_selection_flag: false,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{PriorState, SampleStore, SamplerStats};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Builds a store whose draws have prescribed inclusion patterns for
    /// the p=2 candidate layout (2 gene-gene + 4 DNA-gene edges).
    fn store_from_patterns(patterns: &[[bool; 6]]) -> SampleStore {
        let draws: Vec<PriorState> = patterns
            .iter()
            .map(|pat| {
                let mut st = PriorState::initial(2, 1.0, vec![1.0, 1.0]);
                st.t = vec![0.5, 0.5];
                // candidate order: a(0,1), a(1,0), b(0,0), b(0,1), b(1,2), b(1,3)
                st.a_tilde[0][1] = if pat[0] { 0.8 } else { 0.1 };
                st.a_tilde[1][0] = if pat[1] { -0.8 } else { 0.0 };
                st.b_tilde[0][0] = if pat[2] { 0.9 } else { 0.0 };
                st.b_tilde[0][1] = if pat[3] { 0.7 } else { 0.2 };
                st.b_tilde[1][2] = if pat[4] { -0.6 } else { 0.0 };
                st.b_tilde[1][3] = if pat[5] { 0.6 } else { 0.0 };
                st
            })
            .collect();
        SampleStore {
            p: 2,
            n_obs: 0,
            chain_lengths: vec![draws.len()],
            acceptance: vec![Default::default()],
            stats: SamplerStats::default(),
            draws,
        }
    }

    fn table_from_probs(probs: &[f64]) -> EdgeProbabilityTable {
        let edges = candidate_edges(2);
        EdgeProbabilityTable {
            p: 2,
            draws: 100,
            entries: probs
                .iter()
                .zip(edges)
                .map(|(&probability, edge)| EdgeProbability {
                    edge,
                    probability,
                    conditional_mean: Some(0.5),
                    sign: SignSummary::Positive,
                })
                .collect(),
        }
    }

    #[test]
    fn probabilities_count_indicators() {
        let store = store_from_patterns(&[
            [true, true, false, false, true, false],
            [true, false, false, true, true, false],
            [false, false, false, true, true, false],
            [false, false, false, false, true, false],
        ]);
        let table = edge_probabilities(&store).unwrap();
        let probs: Vec<f64> = table.entries.iter().map(|e| e.probability).collect();
        assert_eq!(probs, vec![0.5, 0.25, 0.0, 0.5, 1.0, 0.0]);
        assert_eq!(table.entries[4].sign, SignSummary::Negative);
        assert_eq!(table.entries[2].conditional_mean, None);
        assert_eq!(table.entries[2].sign, SignSummary::Ambiguous);
    }

    #[test]
    fn pooled_table_is_weighted_average_of_chains() {
        let pat_a: Vec<[bool; 6]> = vec![[true, false, false, false, false, false]; 3];
        let pat_b: Vec<[bool; 6]> = vec![[false, false, false, false, false, true]; 1];
        let store_a = store_from_patterns(&pat_a);
        let store_b = store_from_patterns(&pat_b);
        let mut pooled = store_from_patterns(&[pat_a.clone(), pat_b.clone()].concat());
        pooled.chain_lengths = vec![3, 1];
        pooled.acceptance = vec![Default::default(), Default::default()];

        let ta = edge_probabilities(&store_a).unwrap();
        let tb = edge_probabilities(&store_b).unwrap();
        let tp = edge_probabilities(&pooled).unwrap();
        for idx in 0..6 {
            let expect =
                (3.0 * ta.entries[idx].probability + 1.0 * tb.entries[idx].probability) / 4.0;
            assert_relative_eq!(tp.entries[idx].probability, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn mpm_uses_strict_half_cutoff() {
        let table = table_from_probs(&[0.9, 0.51, 0.5, 0.1, 0.0, 0.0]);
        let est = select_mpm(&table);
        let probs: Vec<f64> = est.edges.iter().map(|e| e.probability).collect();
        assert_eq!(probs, vec![0.9, 0.51]);
        assert_eq!(est.cutoff, Some(0.5));
    }

    #[test]
    fn mpm_empty_table_gives_empty_graph() {
        let table = EdgeProbabilityTable {
            p: 2,
            draws: 10,
            entries: Vec::new(),
        };
        assert!(select_mpm(&table).edges.is_empty());
    }

    #[test]
    fn fdr_worked_example() {
        let table = table_from_probs(&[0.9, 0.8, 0.6, 0.3, 0.0, 0.0]);
        let est = select_fdr(&table, 0.10).unwrap();
        assert_eq!(est.edges.len(), 1);
        assert_relative_eq!(est.edges[0].probability, 0.9);
        assert_relative_eq!(est.achieved_fdr.unwrap(), 0.10, epsilon = 1e-12);
        assert!(!est.empty_selection_flag);
    }

    #[test]
    fn fdr_all_ones_selects_everything() {
        let table = table_from_probs(&[1.0; 6]);
        let est = select_fdr(&table, 0.05).unwrap();
        assert_eq!(est.edges.len(), 6);
        assert_relative_eq!(est.achieved_fdr.unwrap(), 0.0);
    }

    #[test]
    fn fdr_half_alpha_takes_all_above_half() {
        let table = table_from_probs(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.55]);
        let est = select_fdr(&table, 0.5).unwrap();
        // mean complement of all six is (0.1+0.2+0.3+0.4+0.5+0.45)/6 = 0.325 <= 0.5
        assert_eq!(est.edges.len(), 6);
    }

    #[test]
    fn fdr_flags_when_nothing_qualifies() {
        let table = table_from_probs(&[0.5, 0.4, 0.3, 0.2, 0.1, 0.05]);
        let est = select_fdr(&table, 0.01).unwrap();
        assert!(est.empty_selection_flag);
        assert!(est.edges.is_empty());
    }

    #[test]
    fn hpm_majority_configuration_wins() {
        let mut patterns = vec![[true, false, true, false, false, false]; 7];
        patterns.extend(vec![[false, true, false, false, true, true]; 3]);
        let store = store_from_patterns(&patterns);
        let est = select_hpm(&store).unwrap();
        assert_relative_eq!(est.visit_share.unwrap(), 0.7);
        let kinds: Vec<(EdgeKind, usize, usize)> = est
            .edges
            .iter()
            .map(|e| (e.edge.kind, e.edge.from, e.edge.to))
            .collect();
        assert_eq!(
            kinds,
            vec![
                (EdgeKind::GeneGene, 2, 1),
                (EdgeKind::DnaGene, 1, 1)
            ]
        );
    }

    #[test]
    fn hpm_tie_prefers_sparser_configuration() {
        let mut patterns = vec![[true, true, false, false, false, false]; 2];
        patterns.extend(vec![[true, false, false, false, false, false]; 2]);
        let store = store_from_patterns(&patterns);
        let est = select_hpm(&store).unwrap();
        assert_eq!(est.edges.len(), 1);
    }

    #[test]
    fn hpm_guard_rejects_large_candidate_spaces() {
        // p = 10 has 110 candidates; build a store directly.
        let store = SampleStore {
            p: 10,
            n_obs: 0,
            draws: vec![PriorState::initial(10, 1.0, vec![1.0; 10])],
            chain_lengths: vec![1],
            acceptance: vec![Default::default()],
            stats: SamplerStats::default(),
        };
        assert!(matches!(
            select_hpm(&store),
            Err(RgmError::HpmGuard { candidates: 110, cap: 20 })
        ));
    }

    #[test]
    fn estimate_json_round_trip_and_dot_styling() {
        let table = table_from_probs(&[0.9, 0.0, 0.0, 0.0, 0.8, 0.0]);
        let mut est = select_mpm(&table);
        est.edges[1].sign = SignSummary::Negative;
        let back = GraphEstimate::from_json(&est.to_json()).unwrap();
        assert_eq!(est, back);

        let dot = est.to_dot("estimate");
        assert!(dot.contains("Y2 -> Y1 [penwidth=4.100];"));
        assert!(dot.contains("X3 -> Y2 [penwidth=3.700, style=dashed, arrowhead=tee];"));
    }

    proptest! {
        /// FDR selection grows with alpha.
        #[test]
        fn fdr_monotone_in_alpha(
            probs in proptest::collection::vec(0.0f64..=1.0, 6),
            a1 in 0.01f64..0.99,
            a2 in 0.01f64..0.99,
        ) {
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let table = table_from_probs(&probs);
            let e_lo = select_fdr(&table, lo).unwrap();
            let e_hi = select_fdr(&table, hi).unwrap();
            for e in &e_lo.edges {
                prop_assert!(e_hi.contains(&e.edge));
            }
            // Achieved FDR never exceeds alpha unless flagged empty.
            if !e_lo.empty_selection_flag {
                prop_assert!(e_lo.achieved_fdr.unwrap() <= lo + 1e-12);
            }
        }
    }
}
