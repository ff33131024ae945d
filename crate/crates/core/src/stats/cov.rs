//! Long-run covariance estimation and small symmetric positive-definite solves.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const PD_TOL: f64 = 1e-12;

/// Symmetric covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    /// Wraps a square matrix after checking symmetry; the lower triangle is
    /// mirrored from the upper one so the stored matrix is exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Argument(format!(
                "covariance must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let mut m = m;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Argument(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
                m[(j, i)] = m[(i, j)];
            }
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("covariance has non-finite entries".into()));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.len();
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::Argument("covariance rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(q, q, |i, j| rows[i][j]))
    }

    pub fn identity(q: usize) -> Self {
        Self(DMatrix::identity(q, q))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// Eigenvalues in ascending order with matching eigenvectors (as columns).
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, idx[c])]);
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0[0]
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL * self.trace().abs().max(f64::MIN_POSITIVE)
    }

    /// Clips negative eigenvalues to zero. Returns the repaired matrix and
    /// whether any clipping happened.
    pub fn clip_to_psd(&self) -> (CovMatrix, bool) {
        if self.is_psd() {
            return (self.clone(), false);
        }
        let (values, vectors) = self.eigen();
        let clipped = DMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|v| v.max(0.0)),
        ));
        let m = &vectors * clipped * vectors.transpose();
        let m = (&m + m.transpose()) * 0.5;
        (CovMatrix(m), true)
    }

    pub fn scaled(&self, c: f64) -> CovMatrix {
        CovMatrix(&self.0 * c)
    }
}

impl Serialize for CovMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CovMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        CovMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Lag weights for the HAC estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HacWeights {
    /// w_h = 1 - h / (m + 1)
    Bartlett,
    Uniform,
    /// Explicit weights for lags 1..=m.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HacConfig {
    pub bandwidth: usize,
    pub weights: HacWeights,
}

impl HacConfig {
    /// Upper bound on |w_h| accepted for custom weights.
    pub const WEIGHT_BOUND: f64 = 1.0;

    pub fn outer_product() -> Self {
        Self { bandwidth: 0, weights: HacWeights::Bartlett }
    }

    pub fn bartlett(bandwidth: usize) -> Self {
        Self { bandwidth, weights: HacWeights::Bartlett }
    }

    /// Bartlett with `m = horizon - 1`; reduces to the outer product for
    /// one-step forecasts.
    pub fn for_horizon(horizon: usize) -> Self {
        Self::bartlett(horizon.saturating_sub(1))
    }

    pub fn weight(&self, h: usize) -> f64 {
        match &self.weights {
            HacWeights::Bartlett => 1.0 - h as f64 / (self.bandwidth as f64 + 1.0),
            HacWeights::Uniform => 1.0,
            HacWeights::Custom(w) => w[h - 1],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.bandwidth >= n {
            return Err(Error::Argument(format!(
                "HAC bandwidth {} must be smaller than the sample size {n}",
                self.bandwidth
            )));
        }
        if let HacWeights::Custom(w) = &self.weights {
            if w.len() != self.bandwidth {
                return Err(Error::Argument(format!(
                    "{} custom HAC weights supplied for bandwidth {}",
                    w.len(),
                    self.bandwidth
                )));
            }
            if let Some(bad) = w.iter().find(|v| !v.is_finite() || v.abs() > Self::WEIGHT_BOUND) {
                return Err(Error::Argument(format!(
                    "custom HAC weight {bad} outside [-{b}, {b}]",
                    b = Self::WEIGHT_BOUND
                )));
            }
        }
        Ok(())
    }
}

/// HAC estimate together with the eigen-clipping flag.
#[derive(Debug, Clone, PartialEq)]
pub struct HacEstimate {
    pub covariance: CovMatrix,
    pub psd_repaired: bool,
}

fn lag_cross(z: &DMatrix<f64>, lag: usize, i: usize, j: usize) -> f64 {
    // Σ_{t=lag}^{n-1} z[t,i] z[t-lag,j]
    let n = z.nrows();
    let ci = z.column(i);
    let cj = z.column(j);
    let mut s = 0.0;
    for t in lag..n {
        s += ci[t] * cj[t - lag];
    }
    s
}

fn gram(z: &DMatrix<f64>) -> DMatrix<f64> {
    let q = z.ncols();
    let n = z.nrows() as f64;
    let mut m = DMatrix::zeros(q, q);
    for i in 0..q {
        for j in i..q {
            let v = lag_cross(z, 0, i, j) / n;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// (1/n) Σ_t Z_t Z_t' for an n×q matrix of moment observations.
pub fn outer_covariance(z: &DMatrix<f64>) -> Result<CovMatrix> {
    if z.nrows() == 0 || z.ncols() == 0 {
        return Err(Error::Argument("moment matrix is empty".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("moment matrix has non-finite entries".into()));
    }
    Ok(CovMatrix(gram(z)))
}

/// Weighted lag-sum (Newey–West type) long-run covariance of an n×q moment
/// matrix. An indefinite result is eigen-clipped and flagged.
pub fn hac_covariance(z: &DMatrix<f64>, cfg: &HacConfig) -> Result<HacEstimate> {
    let base = outer_covariance(z)?;
    cfg.validate(z.nrows())?;
    if cfg.bandwidth == 0 {
        return Ok(HacEstimate { covariance: base, psd_repaired: false });
    }
    let q = z.ncols();
    let n = z.nrows() as f64;
    let mut m = base.0;
    for h in 1..=cfg.bandwidth {
        let w = cfg.weight(h);
        if w == 0.0 {
            continue;
        }
        for i in 0..q {
            for j in i..q {
                // (Z_t Z_{t-h}' + Z_{t-h} Z_t')_{ij}
                let s = lag_cross(z, h, i, j) + lag_cross(z, h, j, i);
                let add = w * s / n;
                m[(i, j)] += add;
                if i != j {
                    m[(j, i)] += add;
                }
            }
        }
    }
    let raw = CovMatrix(m);
    let (covariance, psd_repaired) = raw.clip_to_psd();
    if psd_repaired {
        log::warn!("HAC covariance was indefinite; negative eigenvalues clipped to zero");
    }
    Ok(HacEstimate { covariance, psd_repaired })
}

fn condition_estimate(values: &[f64]) -> f64 {
    let max = values.last().copied().unwrap_or(0.0).abs();
    let min = values.first().copied().unwrap_or(0.0);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Checks positive definiteness (smallest eigenvalue above 1e-12 · trace).
/// On failure the error carries the condition estimate and the eigenvector of
/// the smallest eigenvalue, which callers use to name collinear inputs.
pub fn check_positive_definite(a: &CovMatrix) -> std::result::Result<(), (f64, Vec<f64>)> {
    let (values, vectors) = a.eigen();
    let trace = a.trace();
    if !(trace > 0.0) || values[0] <= PD_TOL * trace {
        let v = vectors.column(0).iter().copied().collect();
        return Err((condition_estimate(&values), v));
    }
    Ok(())
}

fn cholesky(a: &CovMatrix) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Err((condition, _)) = check_positive_definite(a) {
        return Err(Error::Singular {
            condition,
            detail: "matrix is not positive definite".into(),
        });
    }
    a.0.clone().cholesky().ok_or_else(|| Error::Singular {
        condition: f64::INFINITY,
        detail: "Cholesky factorization failed".into(),
    })
}

/// A⁻¹ v for positive definite A.
pub fn solve_spd(a: &CovMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.dim() {
        return Err(Error::Argument(format!(
            "vector length {} does not match matrix dimension {}",
            v.len(),
            a.dim()
        )));
    }
    let chol = cholesky(a)?;
    Ok(chol.solve(&DVector::from_column_slice(v)).iter().copied().collect())
}

/// v' A⁻¹ v for positive definite A.
pub fn quad_form(a: &CovMatrix, v: &[f64]) -> Result<f64> {
    if v.len() != a.dim() {
        return Err(Error::Argument(format!(
            "vector length {} does not match matrix dimension {}",
            v.len(),
            a.dim()
        )));
    }
    let chol = cholesky(a)?;
    let mut y = DVector::from_column_slice(v);
    chol.l_dirty().solve_lower_triangular_mut(&mut y);
    Ok(y.norm_squared())
}
