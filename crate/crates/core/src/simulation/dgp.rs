//! Data-generating processes for the simulation study.
//!
//! ```text
//! Y = b0 + b1 X + eps
//! X = pi0 + sum_j z_j pi_j + eta,   (eps, eta) ~ N(0, Sigma)
//! ```
//! The instruments `z_j` are IID with mean zero and unit variance; the first
//! column of `Z` is the intercept, which is also the only exogenous regressor.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::seeded_rng;
use crate::dataset::{check_positive, IvDataset, StructuralError};
use crate::error::{IvError, Result};

/// Sample size used by the four preset models.
pub const PRESET_N: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstrumentDistribution {
    #[default]
    Normal,
    /// Uniform on `(-sqrt 3, sqrt 3)`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub beta0: f64,
    pub beta1: f64,
    pub pi0: f64,
    /// First-stage coefficients on the K - 1 non-constant instruments.
    pub pi_excluded: Vec<f64>,
    /// Covariance of `(eps, eta)`.
    pub sigma: [[f64; 2]; 2],
    pub n: usize,
    #[serde(default)]
    pub instruments: InstrumentDistribution,
}

impl DgpConfig {
    /// Design with `k - 1` equal first-stage coefficients.
    pub fn with_equal_pi(k: usize, pi: f64, sigma: [[f64; 2]; 2], n: usize) -> Result<Self> {
        if k < 2 {
            return Err(IvError::InvalidConfig(format!(
                "k must be at least 2, got {k}"
            )));
        }
        let cfg = Self {
            beta0: 1.0,
            beta1: 1.0,
            pi0: 0.0,
            pi_excluded: vec![pi; k - 1],
            sigma,
            n,
            instruments: InstrumentDistribution::Normal,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Design indexed by the limiting reduced-form R^2 and the error
    /// correlation, with `sigma_eps^2 = 1` and `sigma_eta^2 + ||pi||^2 = 1`.
    pub fn from_r2_rho(k: usize, r2: f64, rho: f64, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(IvError::InvalidConfig(format!(
                "k must be at least 2, got {k}"
            )));
        }
        let nf = normalize(r2, k)?;
        if !(rho > -1.0 && rho < 1.0) {
            return Err(IvError::InvalidParameter {
                name: "rho",
                value: rho,
            });
        }
        let err = StructuralError::from_correlation(1.0, nf.sigma_eta2, rho)?;
        Self::with_equal_pi(k, nf.pi_component, err.covariance(), n)
    }

    /// Total instrument count including the intercept.
    pub fn k(&self) -> usize {
        self.pi_excluded.len() + 1
    }

    pub fn sigma_eps_eta(&self) -> f64 {
        self.sigma[0][1]
    }

    pub fn sigma_eta2(&self) -> f64 {
        self.sigma[1][1]
    }

    /// `E[pi'Z'Z pi] = n (pi0^2 + ||pi||^2)` for unit-variance instruments.
    pub fn expected_first_stage_signal(&self) -> f64 {
        let pi2: f64 = self.pi_excluded.iter().map(|p| p * p).sum();
        self.n as f64 * (self.pi0 * self.pi0 + pi2)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k < 2 {
            return Err(IvError::InvalidConfig(
                "need at least one excluded instrument".into(),
            ));
        }
        if self.n <= k {
            return Err(IvError::InvalidConfig(format!(
                "need n > k, got n = {}, k = {k}",
                self.n
            )));
        }
        let finite = [self.beta0, self.beta1, self.pi0]
            .iter()
            .chain(self.pi_excluded.iter())
            .chain(self.sigma.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(IvError::InvalidConfig("non-finite parameter".into()));
        }
        let [[s11, s12], [s21, s22]] = self.sigma;
        if (s12 - s21).abs() > 1e-12 {
            return Err(IvError::InvalidCovariance("matrix is not symmetric".into()));
        }
        if s11 < 0.0 || s22 < 0.0 || s11 * s22 - s12 * s12 < -1e-12 {
            return Err(IvError::InvalidCovariance(
                "matrix is not positive semidefinite".into(),
            ));
        }
        Ok(())
    }

    /// Lower-triangular factor `[[a, 0], [b, c]]` of `sigma`.
    fn error_factor(&self) -> [f64; 3] {
        let [[s11, s12], [_, s22]] = self.sigma;
        let a = s11.sqrt();
        let b = if a > 0.0 { s12 / a } else { 0.0 };
        let c = (s22 - b * b).max(0.0).sqrt();
        [a, b, c]
    }
}

/// Limiting first-stage R^2, `1 / (1 + sigma_eta^2 / ||pi||^2)`.
pub fn r2_limit(pi_excluded: &[f64], sigma_eta2: f64) -> Result<f64> {
    check_positive("sigma_eta2", sigma_eta2)?;
    let pi2: f64 = pi_excluded.iter().map(|p| p * p).sum();
    Ok(pi2 / (pi2 + sigma_eta2))
}

/// First stage implied by a target R^2 under `sigma_eta^2 + ||pi||^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedFirstStage {
    pub pi_norm2: f64,
    pub sigma_eta2: f64,
    /// Common value of each of the `k - 1` coefficients.
    pub pi_component: f64,
}

pub fn normalize(r2: f64, k: usize) -> Result<NormalizedFirstStage> {
    if !(r2 > 0.0 && r2 < 1.0) {
        return Err(IvError::InvalidParameter {
            name: "r2",
            value: r2,
        });
    }
    if k < 2 {
        return Err(IvError::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    Ok(NormalizedFirstStage {
        pi_norm2: r2,
        sigma_eta2: 1.0 - r2,
        pi_component: (r2 / (k - 1) as f64).sqrt(),
    })
}

/// The four preset designs (N = 200): just-identified strong / weak and
/// over-identified (K = 16) strong / weak.
pub fn model_preset(id: u8) -> Result<DgpConfig> {
    let (k, pi, sigma) = match id {
        1 => (2, 0.3, [[0.25, 0.20], [0.20, 0.25]]),
        2 => (2, 0.2, [[1.0, 0.9], [0.9, 1.0]]),
        3 => (16, 0.3, [[0.25, 0.10], [0.10, 0.25]]),
        4 => (16, 0.1, [[0.25, 0.20], [0.20, 0.25]]),
        other => {
            return Err(IvError::InvalidConfig(format!(
                "unknown model {other}; expected 1-4"
            )))
        }
    };
    DgpConfig::with_equal_pi(k, pi, sigma, PRESET_N)
}

/// Draws one sample. All instrument draws come first (row-major), then one
/// pair of standard normals per row for `(eps, eta)`.
pub fn generate_with<R: Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Result<IvDataset> {
    cfg.validate()?;
    let (n, k) = (cfg.n, cfg.k());
    let mut z = DMatrix::from_element(n, k, 1.0);
    let sqrt3 = 3.0_f64.sqrt();
    for i in 0..n {
        for j in 1..k {
            z[(i, j)] = match cfg.instruments {
                InstrumentDistribution::Normal => rng.sample(StandardNormal),
                InstrumentDistribution::Uniform => rng.random_range(-sqrt3..sqrt3),
            };
        }
    }
    let [a, b, c] = cfg.error_factor();
    let mut x = DMatrix::from_element(n, 2, 1.0);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let u1: f64 = rng.sample(StandardNormal);
        let u2: f64 = rng.sample(StandardNormal);
        let eps = a * u1;
        let eta = b * u1 + c * u2;
        let mut xi = cfg.pi0 + eta;
        for (j, p) in cfg.pi_excluded.iter().enumerate() {
            xi += z[(i, j + 1)] * p;
        }
        x[(i, 1)] = xi;
        y[i] = cfg.beta0 + cfg.beta1 * xi + eps;
    }
    IvDataset::new(y, x, z, 1)
}

/// Sample fully determined by `(cfg, seed)`.
pub fn generate(cfg: &DgpConfig, seed: u64) -> Result<IvDataset> {
    generate_with(cfg, &mut seeded_rng(seed))
}
