//! SVD-based inversion: exact pseudo-inverse, damped least squares, and
//! damped least squares with numerical filtering of the smallest singular
//! direction only.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DlsMode {
    /// Moore–Penrose pseudo-inverse.
    Exact,
    /// `σ/(σ²+κ²)` on every direction.
    ConstantDamping,
    /// Exact on all directions except the smallest, which is damped.
    Filtered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlsConfig {
    pub kappa: f64,
    pub sigma_threshold: f64,
    pub mode: DlsMode,
    /// Damp the smallest direction with the full `kappa` regardless of
    /// `sigma_threshold`.
    pub always_on: bool,
}

impl Default for DlsConfig {
    fn default() -> Self {
        Self {
            kappa: 0.01,
            sigma_threshold: 0.05,
            mode: DlsMode::Filtered,
            always_on: false,
        }
    }
}

impl DlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("dls.kappa must be >= 0, got {}", self.kappa)));
        }
        if !(self.sigma_threshold > 0.0 && self.sigma_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "dls.sigma_threshold must be > 0, got {}",
                self.sigma_threshold
            )));
        }
        Ok(())
    }

    /// Squared damping applied to a smallest singular value `sigma_k`.
    ///
    /// Below the threshold the damping ramps in quadratically,
    /// `κ²(1 − (σ_k/σ_th)²)`, reaching `κ²` at `σ_k = 0`.
    pub fn effective_damping_sq(&self, sigma_k: f64) -> f64 {
        if self.always_on {
            return self.kappa * self.kappa;
        }
        if sigma_k >= self.sigma_threshold {
            return 0.0;
        }
        let ratio = sigma_k / self.sigma_threshold;
        self.kappa * self.kappa * (1.0 - ratio * ratio)
    }

    /// Whether the filter changes anything at this smallest singular value.
    pub fn is_active(&self, sigma_k: f64) -> bool {
        match self.mode {
            DlsMode::Exact => false,
            DlsMode::ConstantDamping => self.kappa > 0.0,
            DlsMode::Filtered => self.effective_damping_sq(sigma_k) > 0.0,
        }
    }
}

/// Thin SVD `J = U Σ Vᵀ` with singular values sorted in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdDecomposition {
    /// rows × k
    pub u: DMatrix<f64>,
    /// k values, descending.
    pub sigma: DVector<f64>,
    /// cols × k
    pub v: DMatrix<f64>,
    /// Position (in sorted order) of the direction the filter damps.
    pub damped: usize,
}

impl SvdDecomposition {
    pub fn new(j: &DMatrix<f64>) -> Result<Self> {
        if !j.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("matrix passed to svd"));
        }
        let (rows, cols) = j.shape();
        let k = rows.min(cols);
        if k == 0 {
            return Ok(Self {
                u: DMatrix::zeros(rows, 0),
                sigma: DVector::zeros(0),
                v: DMatrix::zeros(cols, 0),
                damped: 0,
            });
        }
        let a = faer::Mat::<f64>::from_fn(rows, cols, |i, c| j[(i, c)]);
        let svd = a
            .thin_svd()
            .map_err(|_| Error::NonFinite("svd did not converge"))?;
        let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
        let u_raw = DMatrix::from_fn(rows, k, |i, c| fu[(i, c)]);
        let vt_raw = DMatrix::from_fn(k, cols, |r, c| fv[(c, r)]);
        let s_raw = DVector::from_fn(k, |i, _| fs[i]);

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| s_raw[b].total_cmp(&s_raw[a]));

        let mut u = DMatrix::zeros(rows, k);
        let mut v = DMatrix::zeros(cols, k);
        let mut sigma = DVector::zeros(k);
        for (dst, &src) in order.iter().enumerate() {
            u.set_column(dst, &u_raw.column(src));
            v.set_column(dst, &vt_raw.row(src).transpose());
            sigma[dst] = s_raw[src].max(0.0);
        }
        let smallest = sigma[k - 1];
        let damped = (0..k).find(|&i| sigma[i] == smallest).unwrap_or(k - 1);
        Ok(Self { u, sigma, v, damped })
    }

    pub fn rank_count(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::INFINITY, f64::min).min(self.sigma_max())
    }

    /// Values at or below this are treated as zero by the exact inverse.
    pub fn rank_tolerance(&self) -> f64 {
        let n = self.u.nrows().max(self.v.nrows()) as f64;
        n * f64::EPSILON * self.sigma_max()
    }

    pub fn rank(&self) -> usize {
        let tol = self.rank_tolerance();
        self.sigma.iter().filter(|&&s| s > tol).count()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.sigma) * self.v.transpose()
    }

    fn exact_gain(&self, s: f64) -> f64 {
        if s > self.rank_tolerance() {
            1.0 / s
        } else {
            0.0
        }
    }

    /// Inverse gain applied to each singular direction under `cfg`.
    pub fn gains(&self, cfg: &DlsConfig) -> DVector<f64> {
        let k = self.sigma.len();
        DVector::from_fn(k, |i, _| {
            let s = self.sigma[i];
            match cfg.mode {
                DlsMode::Exact => self.exact_gain(s),
                DlsMode::ConstantDamping => damped_gain(s, cfg.kappa * cfg.kappa),
                DlsMode::Filtered => {
                    if i == self.damped {
                        let k2 = cfg.effective_damping_sq(s);
                        if k2 > 0.0 {
                            damped_gain(s, k2)
                        } else {
                            self.exact_gain(s)
                        }
                    } else {
                        self.exact_gain(s)
                    }
                }
            }
        })
    }

    /// `Σ gᵢ vᵢ uᵢᵀ`.
    pub fn inverse_with_gains(&self, g: &DVector<f64>) -> DMatrix<f64> {
        &self.v * DMatrix::from_diagonal(g) * self.u.transpose()
    }

    pub fn inverse(&self, cfg: &DlsConfig) -> DMatrix<f64> {
        self.inverse_with_gains(&self.gains(cfg))
    }

    /// Applies the configured inverse to `b` without forming the matrix.
    pub fn solve(&self, cfg: &DlsConfig, b: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("right-hand side", self.u.nrows(), b.len())?;
        let g = self.gains(cfg);
        let coeffs = self.u.transpose() * b;
        Ok(&self.v * coeffs.component_mul(&g))
    }

    pub fn pseudo_inverse(&self) -> DMatrix<f64> {
        self.inverse(&DlsConfig { mode: DlsMode::Exact, ..DlsConfig::default() })
    }
}

/// `σ/(σ²+κ²)`, with the `σ = κ = 0` limit taken as 0.
pub fn damped_gain(sigma: f64, kappa_sq: f64) -> f64 {
    let d = sigma * sigma + kappa_sq;
    if d > 0.0 {
        sigma / d
    } else {
        0.0
    }
}

/// Damped least-squares inverse `Σ σᵢ/(σᵢ²+κ²) vᵢuᵢᵀ`.
pub fn dls_inverse(j: &DMatrix<f64>, kappa: f64) -> Result<DMatrix<f64>> {
    if !(kappa >= 0.0) {
        return Err(Error::Config(format!("kappa must be >= 0, got {kappa}")));
    }
    let svd = SvdDecomposition::new(j)?;
    let g = DVector::from_fn(svd.sigma.len(), |i, _| damped_gain(svd.sigma[i], kappa * kappa));
    Ok(svd.inverse_with_gains(&g))
}

/// Inverse under `cfg`; with the default filtered mode only the smallest
/// singular direction is ever damped.
pub fn filtered_dls_inverse(j: &DMatrix<f64>, cfg: &DlsConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    Ok(SvdDecomposition::new(j)?.inverse(cfg))
}

pub fn pseudo_inverse(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(SvdDecomposition::new(j)?.pseudo_inverse())
}
