//! The Gaussian simultaneous equation model `Y = AY + BX + E`.
//!
//! `A` couples the `p` gene expressions (zero diagonal, cycles allowed),
//! `B` carries the DNA-level anchors with `b_{ik} = 0` unless
//! `k ∈ {2i−1, 2i}` (copy number and methylation of gene `i`), and
//! `E ~ N(0, Σ)` with diagonal `Σ`. Conditional on `X`, the density of `Y`
//! is evaluated in determinant/residual form — no matrix inversion — while
//! [`SemParameters::conditional_moments`] provides the inverted form as a
//! reporting and oracle path.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RgmError};
use crate::graph::ReciprocalGraph;

/// `|det(I−A)|` below this is treated as singular and the log-density
/// reports the `-inf` sentinel.
pub const DET_TOLERANCE: f64 = 1e-12;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Columns of `X` that may carry a nonzero coefficient in row `i` of `B`
/// (0-based row, 0-based columns): the copy-number and methylation columns
/// of gene `i`.
pub fn intragenic_columns(i: usize) -> [usize; 2] {
    [2 * i, 2 * i + 1]
}

/// Parameters of the SEM: `A` (p×p, zero diagonal), `B` (p×2p on the
/// intragenic mask) and the diagonal of `Σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemParameters {
    pub p: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
}

impl SemParameters {
    /// Zero coupling, unit noise.
    pub fn zeros(p: usize) -> Self {
        Self {
            p,
            a: vec![vec![0.0; p]; p],
            b: vec![vec![0.0; 2 * p]; p],
            sigma: vec![1.0; p],
        }
    }

    /// Validates shapes, the zero diagonal of `A`, the intragenic mask of
    /// `B`, positive `σ` and finiteness.
    pub fn validate(&self) -> Result<()> {
        let p = self.p;
        if self.a.len() != p || self.a.iter().any(|row| row.len() != p) {
            return Err(RgmError::DimensionMismatch(format!("A must be {p}x{p}")));
        }
        if self.b.len() != p || self.b.iter().any(|row| row.len() != 2 * p) {
            return Err(RgmError::DimensionMismatch(format!("B must be {p}x{}", 2 * p)));
        }
        if self.sigma.len() != p {
            return Err(RgmError::DimensionMismatch(format!("sigma must have length {p}")));
        }
        for i in 0..p {
            if self.a[i][i] != 0.0 {
                return Err(RgmError::InvalidParameters(format!(
                    "diag(A) must be zero; a[{i}][{i}] = {}",
                    self.a[i][i]
                )));
            }
            let allowed = intragenic_columns(i);
            for (k, &v) in self.b[i].iter().enumerate() {
                if v != 0.0 && !allowed.contains(&k) {
                    return Err(RgmError::InvalidParameters(format!(
                        "B violates the intragenic mask at ({i}, {k})"
                    )));
                }
            }
            if !(self.sigma[i] > 0.0) {
                return Err(RgmError::InvalidParameters(format!(
                    "sigma[{i}] must be positive, got {}",
                    self.sigma[i]
                )));
            }
        }
        let finite = self.a.iter().chain(self.b.iter()).flatten().all(|v| v.is_finite())
            && self.sigma.iter().all(|v| v.is_finite());
        if !finite {
            return Err(RgmError::NonFinite("SEM parameters".into()));
        }
        Ok(())
    }

    /// `I − A` as a dense matrix.
    pub fn i_minus_a(&self) -> DMatrix<f64> {
        let p = self.p;
        DMatrix::from_fn(p, p, |r, c| {
            let d = if r == c { 1.0 } else { 0.0 };
            d - self.a[r][c]
        })
    }

    /// `log|det(I−A)|` via LU factorization; `-inf` when the pivot product
    /// falls below [`DET_TOLERANCE`].
    pub fn log_abs_det(&self) -> f64 {
        log_abs_det_lu(&self.i_minus_a())
    }

    /// Log-density of one observation `(y, x)` in determinant/residual form:
    /// `log|det(I−A)| − ½ Σ_i [log(2π σ_i) + ε_i²/σ_i]` with
    /// `ε = (I−A)y − Bx`. No inversion is performed.
    pub fn log_density(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        let p = self.p;
        if y.len() != p || x.len() != 2 * p {
            return Err(RgmError::DimensionMismatch(format!(
                "expected y of length {p} and x of length {}",
                2 * p
            )));
        }
        if !y.iter().chain(x.iter()).all(|v| v.is_finite()) {
            return Err(RgmError::NonFinite("observation passed to log_density".into()));
        }
        let log_det = self.log_abs_det();
        if log_det == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let mut quad = 0.0;
        for i in 0..p {
            let mut eps = y[i];
            for (j, &a) in self.a[i].iter().enumerate() {
                if a != 0.0 {
                    eps -= a * y[j];
                }
            }
            for k in intragenic_columns(i) {
                eps -= self.b[i][k] * x[k];
            }
            quad += (LN_2PI + self.sigma[i].ln()) + eps * eps / self.sigma[i];
        }
        Ok(log_det - 0.5 * quad)
    }

    /// Mean `(I−A)⁻¹ B x` and covariance `(I−A)⁻¹ Σ (I−A)⁻ᵀ` of `Y | X = x`.
    ///
    /// This is the reporting/oracle path; inversion is allowed here.
    pub fn conditional_moments(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = self.p;
        if x.len() != 2 * p {
            return Err(RgmError::DimensionMismatch(format!(
                "expected x of length {}",
                2 * p
            )));
        }
        let inv = self
            .i_minus_a()
            .try_inverse()
            .ok_or_else(|| RgmError::Singular("I - A is not invertible".into()))?;
        let bx = DVector::from_fn(p, |i, _| {
            intragenic_columns(i).iter().map(|&k| self.b[i][k] * x[k]).sum()
        });
        let mean = &inv * bx;
        let sigma = DMatrix::from_diagonal(&DVector::from_row_slice(&self.sigma));
        let cov = &inv * sigma * inv.transpose();
        Ok((mean, cov))
    }

    /// Path diagram on `3p` vertices: nodes `1..=p` are `Y`, `p+1..=3p` are
    /// `X`. Nonzero `a_{ij}` draws `j → i`; nonzero `b_{ik}` draws
    /// `(p+k) → i`; `psi_blocks` (a partition of the X indices `1..=2p`)
    /// joins X nodes of the same block by undirected edges.
    pub fn path_diagram(&self, psi_blocks: &[Vec<usize>]) -> Result<ReciprocalGraph> {
        let p = self.p;
        let mut g = ReciprocalGraph::new(3 * p);
        for i in 0..p {
            for j in 0..p {
                if self.a[i][j] != 0.0 {
                    g.add_directed(j + 1, i + 1)?;
                }
            }
            for k in intragenic_columns(i) {
                if self.b[i][k] != 0.0 {
                    g.add_directed(p + k + 1, i + 1)?;
                }
            }
        }
        for block in psi_blocks {
            for (idx, &a) in block.iter().enumerate() {
                for &b in &block[idx + 1..] {
                    if a == 0 || b == 0 || a > 2 * p || b > 2 * p {
                        return Err(RgmError::VertexOutOfRange {
                            vertex: a.max(b),
                            max: 2 * p,
                        });
                    }
                    g.add_undirected(p + a, p + b)?;
                }
            }
        }
        Ok(g)
    }

    /// Candidate-edge support of the ground truth: `(gamma_a, gamma_b)`
    /// booleans over the off-diagonal of `A` and the intragenic mask of `B`.
    pub fn support(&self) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
        let p = self.p;
        let gamma_a = (0..p)
            .map(|i| (0..p).map(|j| i != j && self.a[i][j] != 0.0).collect())
            .collect();
        let gamma_b = (0..p)
            .map(|i| {
                (0..2 * p)
                    .map(|k| intragenic_columns(i).contains(&k) && self.b[i][k] != 0.0)
                    .collect()
            })
            .collect();
        (gamma_a, gamma_b)
    }
}

/// `log|det(M)|` from an LU factorization; `-inf` when the pivot product
/// magnitude is below [`DET_TOLERANCE`].
pub fn log_abs_det_lu(m: &DMatrix<f64>) -> f64 {
    let lu = m.clone().lu();
    let mut log_det = 0.0;
    for v in lu.u().diagonal().iter() {
        let a = v.abs();
        if a == 0.0 {
            return f64::NEG_INFINITY;
        }
        log_det += a.ln();
    }
    if log_det < DET_TOLERANCE.ln() {
        f64::NEG_INFINITY
    } else {
        log_det
    }
}

/// Observations: `Y` is n×p (expression), `X` is n×2p (DNA-level), with
/// column `2i−1` the copy number and `2i` the methylation of gene `i`
/// (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    n: usize,
    p: usize,
    /// Row-major n×p.
    y: Vec<Vec<f64>>,
    /// Row-major n×2p.
    x: Vec<Vec<f64>>,
}

impl DataSet {
    pub fn new(y: Vec<Vec<f64>>, x: Vec<Vec<f64>>) -> Result<Self> {
        if y.len() != x.len() {
            return Err(RgmError::DimensionMismatch(format!(
                "Y has {} rows but X has {}",
                y.len(),
                x.len()
            )));
        }
        let n = y.len();
        if n == 0 {
            return Err(RgmError::DimensionMismatch(
                "dataset must contain at least one observation; use DataSet::empty for prior-only runs"
                    .into(),
            ));
        }
        let p = y[0].len();
        Self::build(n, p, y, x)
    }

    /// A dataset with no observations, used for prior-recovery runs.
    pub fn empty(p: usize) -> Self {
        Self {
            n: 0,
            p,
            y: Vec::new(),
            x: Vec::new(),
        }
    }

    fn build(n: usize, p: usize, y: Vec<Vec<f64>>, x: Vec<Vec<f64>>) -> Result<Self> {
        if p == 0 {
            return Err(RgmError::DimensionMismatch("p must be positive".into()));
        }
        for (r, row) in y.iter().enumerate() {
            if row.len() != p {
                return Err(RgmError::DimensionMismatch(format!(
                    "Y row {r} has {} columns, expected {p}",
                    row.len()
                )));
            }
        }
        for (r, row) in x.iter().enumerate() {
            if row.len() != 2 * p {
                return Err(RgmError::DimensionMismatch(format!(
                    "X row {r} has {} columns, expected {}",
                    row.len(),
                    2 * p
                )));
            }
        }
        if let Some((r, c)) = find_non_finite(&y) {
            return Err(RgmError::NonFinite(format!("Y[{r}][{c}]")));
        }
        if let Some((r, c)) = find_non_finite(&x) {
            return Err(RgmError::NonFinite(format!("X[{r}][{c}]")));
        }
        Ok(Self { n, p, y, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[Vec<f64>] {
        &self.y
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y_row(&self, r: usize) -> &[f64] {
        &self.y[r]
    }

    pub fn x_row(&self, r: usize) -> &[f64] {
        &self.x[r]
    }

    /// Sample variance of `Y` column `i` (1.0 when fewer than two rows).
    pub fn y_column_variance(&self, i: usize) -> f64 {
        if self.n < 2 {
            return 1.0;
        }
        let mean: f64 = self.y.iter().map(|r| r[i]).sum::<f64>() / self.n as f64;
        self.y.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (self.n as f64 - 1.0)
    }

    /// Centers and scales every column of `Y` and `X` to zero mean and unit
    /// sample variance (columns with zero variance are only centered).
    pub fn standardized(&self) -> DataSet {
        let mut out = self.clone();
        standardize_columns(&mut out.y);
        standardize_columns(&mut out.x);
        out
    }
}

fn find_non_finite(rows: &[Vec<f64>]) -> Option<(usize, usize)> {
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

fn standardize_columns(rows: &mut [Vec<f64>]) {
    let n = rows.len();
    if n < 2 {
        return;
    }
    let cols = rows[0].len();
    for c in 0..cols {
        let mean: f64 = rows.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var: f64 =
            rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        for row in rows.iter_mut() {
            row[c] -= mean;
            if sd > 0.0 {
                row[c] /= sd;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Oracle: evaluate the conditional Gaussian density directly from the
    /// inverted-form moments.
    fn oracle_log_density(params: &SemParameters, y: &[f64], x: &[f64]) -> f64 {
        let (mean, cov) = params.conditional_moments(x).unwrap();
        let p = params.p;
        let diff = DVector::from_row_slice(y) - mean;
        let chol = cov.clone().cholesky().expect("oracle covariance must be PD");
        let solved = chol.solve(&diff);
        let log_det_cov = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        -0.5 * (p as f64 * LN_2PI + log_det_cov + diff.dot(&solved))
    }

    fn random_params(p: usize, rng: &mut ChaCha20Rng) -> SemParameters {
        // Keep the spectral radius of A small so I−A stays well conditioned.
        let mut params = SemParameters::zeros(p);
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    params.a[i][j] = 0.8 * (rng.random::<f64>() - 0.5) / p as f64;
                }
            }
            for k in intragenic_columns(i) {
                params.b[i][k] = 2.0 * (rng.random::<f64>() - 0.5);
            }
            params.sigma[i] = 0.2 + rng.random::<f64>();
        }
        params
    }

    #[test]
    fn standard_normal_case() {
        let params = SemParameters::zeros(1);
        let ld = params.log_density(&[0.0], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(ld, -0.5 * LN_2PI, epsilon = 1e-12);
    }

    #[test]
    fn singular_i_minus_a_returns_sentinel() {
        let mut params = SemParameters::zeros(2);
        params.a[0][1] = 1.0;
        params.a[1][0] = 1.0; // det(I-A) = 1 - 1 = 0
        let ld = params.log_density(&[0.3, -0.2], &[0.0; 4]).unwrap();
        assert_eq!(ld, f64::NEG_INFINITY);
    }

    #[test]
    fn log_density_matches_inverted_form_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for p in 1..=6 {
            for _ in 0..40 {
                let params = random_params(p, &mut rng);
                let y: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                let x: Vec<f64> =
                    (0..2 * p).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                let fast = params.log_density(&y, &x).unwrap();
                let slow = oracle_log_density(&params, &y, &x);
                assert_relative_eq!(fast, slow, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn log_density_integrates_to_one_p1() {
        // Quadrature over y for p=1 with nontrivial b and sigma.
        let mut params = SemParameters::zeros(1);
        params.b[0][0] = 0.7;
        params.b[0][1] = -0.3;
        params.sigma[0] = 0.5;
        let x = [1.2, -0.4];
        let (lo, hi, steps) = (-12.0f64, 12.0f64, 40001usize);
        let h = (hi - lo) / (steps - 1) as f64;
        let mut total = 0.0;
        for s in 0..steps {
            let y = lo + s as f64 * h;
            let w = if s == 0 || s == steps - 1 { 0.5 } else { 1.0 };
            total += w * params.log_density(&[y], &x).unwrap().exp();
        }
        total *= h;
        assert!((total - 1.0).abs() < 1e-6, "integral = {total}");
    }

    #[test]
    fn conditional_moments_identity_coupling() {
        let mut params = SemParameters::zeros(2);
        params.b[0][0] = 0.5;
        params.b[1][3] = -1.0;
        params.sigma = vec![0.3, 0.7];
        let x = [2.0, 0.0, 0.0, 1.0];
        let (mean, cov) = params.conditional_moments(&x).unwrap();
        assert_relative_eq!(mean[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(mean[1], -1.0, epsilon = 1e-12);
        assert_relative_eq!(cov[(0, 0)], 0.3, epsilon = 1e-12);
        assert_relative_eq!(cov[(1, 1)], 0.7, epsilon = 1e-12);
        assert_relative_eq!(cov[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_moments_triangular_case() {
        // a_{12} = 0.5 (gene 2 drives gene 1), hand-inverted 2x2.
        let mut params = SemParameters::zeros(2);
        params.a[0][1] = 0.5;
        params.b[0][0] = 1.0;
        params.b[1][2] = 1.0;
        params.sigma = vec![1.0, 1.0];
        let x = [1.0, 0.0, 2.0, 0.0];
        let (mean, cov) = params.conditional_moments(&x).unwrap();
        // (I-A)^{-1} = [[1, 0.5], [0, 1]]; Bx = (1, 2)
        assert_relative_eq!(mean[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(mean[1], 2.0, epsilon = 1e-12);
        // cov = [[1.25, 0.5], [0.5, 1]]
        assert_relative_eq!(cov[(0, 0)], 1.25, epsilon = 1e-12);
        assert_relative_eq!(cov[(0, 1)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(cov[(1, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_covariance_symmetric_positive_definite() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            let params = random_params(4, &mut rng);
            let (_, cov) = params.conditional_moments(&[0.0; 8]).unwrap();
            assert_relative_eq!(cov.clone(), cov.transpose(), epsilon = 1e-10);
            assert!(cov.cholesky().is_some());
        }
    }

    #[test]
    fn path_diagram_matches_figure_two() {
        // p=2: full feedback in A, gene 1 anchored by both X1 and X2,
        // gene 2 by X3 only; Psi joins X1–X2.
        let mut params = SemParameters::zeros(2);
        params.a[0][1] = 0.4;
        params.a[1][0] = -0.6;
        params.b[0][0] = 0.5;
        params.b[0][1] = 0.5;
        params.b[1][2] = 0.5;
        let g = params.path_diagram(&[vec![1, 2], vec![3], vec![4]]).unwrap();
        assert_eq!(g.vertex_count(), 6);
        let directed: Vec<(usize, usize)> = g.directed_edges().collect();
        assert_eq!(directed, vec![(1, 2), (2, 1), (3, 1), (4, 1), (5, 2)]);
        let undirected: Vec<(usize, usize)> = g.undirected_edges().collect();
        assert_eq!(undirected, vec![(3, 4)]);
    }

    #[test]
    fn path_diagram_edgeless_and_dense() {
        let params = SemParameters::zeros(3);
        let g = params.path_diagram(&[]).unwrap();
        assert_eq!(g.directed_edges().count() + g.undirected_edges().count(), 0);

        let mut dense = SemParameters::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    dense.a[i][j] = 0.1;
                }
            }
        }
        let g = dense
            .path_diagram(&[vec![1], vec![2], vec![3], vec![4], vec![5], vec![6]])
            .unwrap();
        assert_eq!(g.directed_edges().count(), 6);
        assert_eq!(g.undirected_edges().count(), 0);
    }

    #[test]
    fn validate_rejects_mask_and_diagonal_violations() {
        let mut params = SemParameters::zeros(2);
        params.a[0][0] = 0.1;
        assert!(params.validate().is_err());

        let mut params = SemParameters::zeros(2);
        params.b[0][2] = 0.1; // column 3 belongs to gene 2
        assert!(params.validate().is_err());

        let mut params = SemParameters::zeros(2);
        params.sigma[1] = 0.0;
        assert!(params.validate().is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(DataSet::new(vec![vec![1.0, 2.0]], vec![vec![0.0; 4]]).is_ok());
        assert!(DataSet::new(vec![vec![1.0]], vec![vec![0.0; 4]]).is_err());
        assert!(DataSet::new(vec![vec![f64::NAN]], vec![vec![0.0; 2]]).is_err());
        assert!(DataSet::new(Vec::new(), Vec::new()).is_err());
        assert_eq!(DataSet::empty(3).n(), 0);
    }

    #[test]
    fn standardization_centers_and_scales() {
        let y = vec![vec![1.0], vec![3.0], vec![5.0]];
        let x = vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]];
        let d = DataSet::new(y, x).unwrap().standardized();
        let mean: f64 = d.y().iter().map(|r| r[0]).sum::<f64>() / 3.0;
        assert_relative_eq!(mean, 0.0, epsilon = 1e-12);
        let var: f64 = d.y().iter().map(|r| r[0] * r[0]).sum::<f64>() / 2.0;
        assert_relative_eq!(var, 1.0, epsilon = 1e-12);
        // zero-variance column stays centered at zero
        assert!(d.x().iter().all(|r| r[0] == 0.0));
    }
}
