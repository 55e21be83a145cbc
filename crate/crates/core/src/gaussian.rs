//! Covariance matrices of centered Gaussian vectors.
//!
//! [`CovarianceMatrix`] is validated once at construction (finite, symmetric
//! up to `1e-8 * scale`, PSD up to `1e-10 * scale`) and is immutable afterwards.
//! Its Cholesky factor is computed on first use and cached. `scale` is
//! `1 + max |entry|` throughout, which keeps every tolerance unit-free.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the smallest eigenvalue for PSD validation.
pub const PSD_TOL: f64 = 1e-10;
/// Relative asymmetry tolerated (and averaged away) at construction.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Relative threshold on the smallest eigenvalue below which Cholesky refuses.
pub const STRICT_PD_TOL: f64 = 1e-12;
/// Relative tolerance for `L Lᵀ` reproducing the matrix.
pub const CHOLESKY_TOL: f64 = 1e-10;

/// Wire format: `{"k": <int>, "data": [k*k reals, row-major]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceJson {
    pub k: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CovarianceJson", into = "CovarianceJson")]
pub struct CovarianceMatrix {
    k: usize,
    entries: Vec<f64>,
    min_eigenvalue: f64,
    chol: OnceLock<std::result::Result<Vec<f64>, Error>>,
}

impl PartialEq for CovarianceMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.entries == other.entries
    }
}

impl TryFrom<CovarianceJson> for CovarianceMatrix {
    type Error = Error;

    fn try_from(raw: CovarianceJson) -> Result<Self> {
        Self::new(raw.k, raw.data)
    }
}

impl From<CovarianceMatrix> for CovarianceJson {
    fn from(c: CovarianceMatrix) -> Self {
        CovarianceJson {
            k: c.k,
            data: c.entries,
        }
    }
}

impl CovarianceMatrix {
    /// Validate a row-major `k x k` matrix, symmetrizing it as `(A + Aᵀ)/2`.
    pub fn new(k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Dimension("dimension must be positive".into()));
        }
        if data.len() != k * k {
            return Err(Error::Dimension(format!(
                "expected {} entries for k = {k}, got {}",
                k * k,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / k,
                col: pos % k,
            });
        }
        let scale = 1.0 + data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let mut entries = data;
        for i in 0..k {
            for j in (i + 1)..k {
                let (a, b) = (entries[i * k + j], entries[j * k + i]);
                let gap = (a - b).abs();
                if gap > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, gap });
                }
                let avg = 0.5 * (a + b);
                entries[i * k + j] = avg;
                entries[j * k + i] = avg;
            }
        }
        let min_eigenvalue = if k == 1 {
            entries[0]
        } else {
            DMatrix::from_row_slice(k, k, &entries).symmetric_eigenvalues().min()
        };
        if min_eigenvalue < -PSD_TOL * scale {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        if let Some(i) = (0..k).find(|&i| entries[i * k + i] < 0.0) {
            return Err(Error::NotPsd {
                min_eigenvalue: entries[i * k + i],
            });
        }
        Ok(Self {
            k,
            entries,
            min_eigenvalue,
            chol: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("matrix is not square".into()));
        }
        Self::new(k, rows.concat())
    }

    pub fn identity(k: usize) -> Self {
        Self::diagonal(&vec![1.0; k]).expect("identity is a valid covariance")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let k = diag.len();
        let mut data = vec![0.0; k * k];
        for (i, &d) in diag.iter().enumerate() {
            data[i * k + i] = d;
        }
        Self::new(k, data)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.k).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `1 + max |entry|`.
    pub fn scale(&self) -> f64 {
        1.0 + self.max_abs()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_strictly_pd(&self) -> bool {
        self.min_eigenvalue > STRICT_PD_TOL * self.scale()
    }

    /// Lower-triangular Cholesky factor, row-major, cached after the first call.
    pub fn cholesky(&self) -> Result<&[f64]> {
        self.chol
            .get_or_init(|| self.compute_cholesky())
            .as_deref()
            .map_err(Clone::clone)
    }

    fn compute_cholesky(&self) -> Result<Vec<f64>> {
        if !self.is_strictly_pd() {
            return Err(Error::SingularMatrix {
                min_eigenvalue: self.min_eigenvalue,
            });
        }
        let k = self.k;
        let mut l = vec![0.0; k * k];
        for j in 0..k {
            let mut d = self.get(j, j);
            for p in 0..j {
                d -= l[j * k + p] * l[j * k + p];
            }
            if d <= 0.0 {
                return Err(Error::SingularMatrix {
                    min_eigenvalue: self.min_eigenvalue,
                });
            }
            let ljj = d.sqrt();
            l[j * k + j] = ljj;
            for i in (j + 1)..k {
                let mut s = self.get(i, j);
                for p in 0..j {
                    s -= l[i * k + p] * l[j * k + p];
                }
                l[i * k + j] = s / ljj;
            }
        }
        Ok(l)
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.k || j >= self.k {
            Err(Error::Index { i, j, k: self.k })
        } else {
            Ok(())
        }
    }

    /// `E[(X_i - X_j)^2] = Σ_ii + Σ_jj - 2 Σ_ij`.
    pub fn increment_variance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i, j)?;
        if i == j {
            return Ok(0.0);
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Ok((self.get(a, a) + self.get(b, b) - 2.0 * self.get(a, b)).max(0.0))
    }

    pub fn correlation(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i, j)?;
        for idx in [i, j] {
            if self.get(idx, idx) <= 0.0 {
                return Err(Error::ZeroVariance { index: idx });
            }
        }
        let r = self.get(i, j) / (self.get(i, i) * self.get(j, j)).sqrt();
        Ok(r.clamp(-1.0, 1.0))
    }

    /// Entrywise `a * self + b * other`, revalidated.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.k != other.k {
            return Err(Error::DimensionMismatch {
                left: self.k,
                right: other.k,
            });
        }
        let data = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(self.k, data)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.k, self.entries.iter().map(|v| lambda * v).collect())
    }

    /// Adds `value` to every diagonal entry.
    pub fn add_to_diagonal(&self, value: f64) -> Result<Self> {
        let mut data = self.entries.clone();
        for i in 0..self.k {
            data[i * self.k + i] += value;
        }
        Self::new(self.k, data)
    }

    /// Adds `value` to every entry (covariance of `X + sqrt(value) g` for a shared scalar `g`).
    pub fn add_constant(&self, value: f64) -> Result<Self> {
        Self::new(self.k, self.entries.iter().map(|v| v + value).collect())
    }

    /// 2x2 covariance of coordinates `(i, j)`.
    pub fn slice2(&self, i: usize, j: usize) -> Result<Self> {
        self.check_index(i, j)?;
        Self::new(
            2,
            vec![self.get(i, i), self.get(i, j), self.get(j, i), self.get(j, j)],
        )
    }

    /// `x = L z` for the cached Cholesky factor; `z.len() == out.len() == k`.
    #[inline]
    pub fn transform(chol: &[f64], z: &[f64], out: &mut [f64]) {
        let k = z.len();
        for i in 0..k {
            let row = &chol[i * k..i * k + i + 1];
            out[i] = row.iter().zip(&z[..=i]).map(|(l, z)| l * z).sum();
        }
    }
}

/// Noise scale for the shared-noise reduction `X + εξ`, `Y + εξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationParams {
    epsilon: f64,
}

impl RegularizationParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }

    /// `1e-6 * sqrt(max diagonal)` over both matrices (or `1e-6` if every variance is zero).
    pub fn auto(pair: &GaussianPair) -> Self {
        let max_diag = pair
            .sigma_x()
            .diag()
            .into_iter()
            .chain(pair.sigma_y().diag())
            .fold(0.0_f64, f64::max);
        let epsilon = if max_diag > 0.0 { 1e-6 * max_diag.sqrt() } else { 1e-6 };
        Self { epsilon }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Covariances of `X` and `Y`.
///
/// Regularization adds the same `ε² I` to both sides. The pair remembers the
/// unregularized matrices so that `Δ = Σ^Y - Σ^X` is bit-for-bit unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    sigma_x: CovarianceMatrix,
    sigma_y: CovarianceMatrix,
    base_x: CovarianceMatrix,
    base_y: CovarianceMatrix,
    noise_variance: f64,
}

impl GaussianPair {
    pub fn new(sigma_x: CovarianceMatrix, sigma_y: CovarianceMatrix) -> Result<Self> {
        if sigma_x.k() != sigma_y.k() {
            return Err(Error::DimensionMismatch {
                left: sigma_x.k(),
                right: sigma_y.k(),
            });
        }
        Ok(Self {
            base_x: sigma_x.clone(),
            base_y: sigma_y.clone(),
            sigma_x,
            sigma_y,
            noise_variance: 0.0,
        })
    }

    pub fn k(&self) -> usize {
        self.sigma_x.k()
    }

    pub fn sigma_x(&self) -> &CovarianceMatrix {
        &self.sigma_x
    }

    pub fn sigma_y(&self) -> &CovarianceMatrix {
        &self.sigma_y
    }

    /// Total shared noise variance added so far (sum of `ε²`).
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// `Δ_ij = Σ^Y_ij - Σ^X_ij`, row-major, computed before any shared noise.
    pub fn delta(&self) -> Vec<f64> {
        self.base_y
            .entries()
            .iter()
            .zip(self.base_x.entries())
            .map(|(y, x)| y - x)
            .collect()
    }

    /// The pair with `X` and `Y` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            sigma_x: self.sigma_y.clone(),
            sigma_y: self.sigma_x.clone(),
            base_x: self.base_y.clone(),
            base_y: self.base_x.clone(),
            noise_variance: self.noise_variance,
        }
    }

    /// Largest entry scale over both matrices.
    pub fn scale(&self) -> f64 {
        self.sigma_x.scale().max(self.sigma_y.scale())
    }

    pub fn is_strictly_pd(&self) -> bool {
        self.sigma_x.is_strictly_pd() && self.sigma_y.is_strictly_pd()
    }
}

/// `X_ε = X + εξ`, `Y_ε = Y + εξ` with one `ξ ~ N(0, I)` shared by both.
pub fn regularize(pair: &GaussianPair, params: RegularizationParams) -> Result<GaussianPair> {
    let e2 = params.epsilon() * params.epsilon();
    Ok(GaussianPair {
        sigma_x: pair.sigma_x.add_to_diagonal(e2)?,
        sigma_y: pair.sigma_y.add_to_diagonal(e2)?,
        base_x: pair.base_x.clone(),
        base_y: pair.base_y.clone(),
        noise_variance: pair.noise_variance + e2,
    })
}

/// Regularize with the automatic ε, growing it tenfold until both matrices
/// admit a Cholesky factor. Returns the pair unchanged if it already does.
pub fn regularize_until_pd(pair: &GaussianPair) -> Result<GaussianPair> {
    if pair.is_strictly_pd() {
        return Ok(pair.clone());
    }
    let mut eps = RegularizationParams::auto(pair).epsilon();
    for _ in 0..12 {
        let candidate = regularize(pair, RegularizationParams::new(eps)?)?;
        if candidate.sigma_x.cholesky().is_ok() && candidate.sigma_y.cholesky().is_ok() {
            return Ok(candidate);
        }
        eps *= 10.0;
    }
    Err(Error::SingularAfterRegularize)
}

/// Single-matrix form of [`regularize_until_pd`]; returns the matrix and the `ε²` added.
pub fn regularize_matrix_until_pd(c: &CovarianceMatrix) -> Result<(CovarianceMatrix, f64)> {
    if c.cholesky().is_ok() {
        return Ok((c.clone(), 0.0));
    }
    let pair = GaussianPair::new(c.clone(), c.clone())?;
    let reg = regularize_until_pd(&pair)?;
    let added = reg.noise_variance();
    Ok((reg.sigma_x, added))
}
