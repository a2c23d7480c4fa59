//! OLS, 2SLS, JIVE and LIML point estimates with conventional standard errors.
//!
//! All four share the k-class form `(X'(I - k M_Z) X)^{-1} X'(I - k M_Z) Y`
//! except JIVE, which swaps the first-stage fit for leave-one-out fits.
//! Residual variances use structural residuals `Y - X b` over `N - L`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::IvDataset;
use crate::error::{IvError, Result};
use crate::linalg::{self, QrFactor};

/// Leverage at or above `1 - LEVERAGE_TOL` makes a leave-one-out fit undefined.
pub const LEVERAGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "OLS")]
    Ols,
    #[serde(rename = "2SLS")]
    Tsls,
    #[serde(rename = "LIML")]
    Liml,
    #[serde(rename = "JIVE")]
    Jive,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::Ols,
        Estimator::Tsls,
        Estimator::Liml,
        Estimator::Jive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::Ols => "OLS",
            Estimator::Tsls => "2SLS",
            Estimator::Liml => "LIML",
            Estimator::Jive => "JIVE",
        }
    }

    /// Parses a comma-separated list such as `ols,2sls`.
    pub fn parse_list(s: &str) -> std::result::Result<Vec<Estimator>, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let e: Estimator = part.parse()?;
            if !out.contains(&e) {
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err("empty estimator list".into());
        }
        Ok(out)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(Estimator::Ols),
            "2sls" | "tsls" => Ok(Estimator::Tsls),
            "liml" => Ok(Estimator::Liml),
            "jive" => Ok(Estimator::Jive),
            other => Err(format!(
                "unknown estimator '{other}' (expected ols, 2sls, liml, jive)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JiveMethod {
    /// Refit the first stage N times with row i removed.
    Naive,
    /// Leave-one-out fits from the full-sample fit and the leverages.
    #[default]
    Accelerated,
}

#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub estimator: Estimator,
    pub beta: DVector<f64>,
    pub std_errors: DVector<f64>,
    /// Minimized variance ratio; `Some` only for LIML.
    pub kappa: Option<f64>,
    pub sigma2_hat: f64,
    /// First-stage fit used as instrument (2SLS: `P_Z X`, JIVE: leave-one-out fit).
    pub fitted_instrument: Option<DMatrix<f64>>,
}

/// k-class parameter: 0 gives OLS, 1 gives 2SLS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KClassSpec {
    kappa: f64,
}

impl KClassSpec {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa >= 0.0 && kappa.is_finite() {
            Ok(Self { kappa })
        } else {
            Err(IvError::InvalidParameter {
                name: "kappa",
                value: kappa,
            })
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Fits `estimator` with default options (accelerated JIVE).
pub fn fit(d: &IvDataset, estimator: Estimator) -> Result<EstimateResult> {
    match estimator {
        Estimator::Ols => fit_ols(d),
        Estimator::Tsls => fit_2sls(d),
        Estimator::Liml => fit_liml(d),
        Estimator::Jive => fit_jive(d, JiveMethod::Accelerated),
    }
}

pub fn fit_ols(d: &IvDataset) -> Result<EstimateResult> {
    let qr = QrFactor::new(d.x()).map_err(|_| IvError::RankDeficientDesign)?;
    let beta = qr.solve(d.y());
    let sigma2_hat = structural_sigma2(d, &beta);
    let std_errors = std_errors(&qr.inverse_gram(), sigma2_hat);
    Ok(EstimateResult {
        estimator: Estimator::Ols,
        beta,
        std_errors,
        kappa: None,
        sigma2_hat,
        fitted_instrument: None,
    })
}

/// `b = (X'P_Z X)^{-1} X'P_Z Y`, solved as least squares of `Y` on `P_Z X`.
pub fn fit_2sls(d: &IvDataset) -> Result<EstimateResult> {
    let x_hat = d.z_factor().project(d.x());
    let qr = QrFactor::new(&x_hat).map_err(|_| IvError::WeakRankFailure)?;
    let beta = qr.solve(d.y());
    let sigma2_hat = structural_sigma2(d, &beta);
    let std_errors = std_errors(&qr.inverse_gram(), sigma2_hat);
    Ok(EstimateResult {
        estimator: Estimator::Tsls,
        beta,
        std_errors,
        kappa: None,
        sigma2_hat,
        fitted_instrument: Some(x_hat),
    })
}

pub fn fit_kclass(d: &IvDataset, spec: KClassSpec) -> Result<EstimateResult> {
    let (beta, inv) = kclass_solve(d, spec.kappa)?;
    let sigma2_hat = structural_sigma2(d, &beta);
    let std_errors = std_errors(&inv, sigma2_hat);
    let estimator = if spec.kappa == 0.0 {
        Estimator::Ols
    } else if spec.kappa == 1.0 {
        Estimator::Tsls
    } else {
        Estimator::Liml
    };
    Ok(EstimateResult {
        estimator,
        beta,
        std_errors,
        kappa: (estimator == Estimator::Liml).then_some(spec.kappa),
        sigma2_hat,
        fitted_instrument: None,
    })
}

fn kclass_solve(d: &IvDataset, kappa: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let x = d.x();
    let px = d.z_factor().project(x);
    // (I - k M_Z) X = (1 - k) X + k P_Z X
    let w = x * (1.0 - kappa) + &px * kappa;
    let a = w.tr_mul(x);
    let a = (&a + a.transpose()) * 0.5;
    let rhs = w.tr_mul(d.y());
    let beta = linalg::solve_small(&a, &rhs).ok_or(IvError::RankDeficientDesign)?;
    let inv = linalg::inverse_small(&a).ok_or(IvError::RankDeficientDesign)?;
    Ok((beta, inv))
}

/// Smallest root of `det(Y*'M_{X0} Y* - k Y*'M_Z Y*) = 0` with `Y* = [Y X_1]`,
/// computed on the symmetric form `B^{-1/2} A B^{-1/2}`.
pub fn liml_kappa(d: &IvDataset) -> Result<f64> {
    let n = d.n();
    let l1 = d.n_endog();
    let mut ystar = DMatrix::zeros(n, 1 + l1);
    ystar.set_column(0, d.y());
    for j in 0..l1 {
        ystar.set_column(1 + j, &d.x().column(d.n_exog() + j));
    }
    let mz = d.z_factor().annihilate(&ystar);
    let denom = mz.tr_mul(&mz);
    let mx0 = if d.n_exog() > 0 {
        let x0 = QrFactor::new(&d.x_exog()).map_err(|_| IvError::RankDeficientDesign)?;
        x0.annihilate(&ystar)
    } else {
        ystar
    };
    let numer = mx0.tr_mul(&mx0);
    // Y* inside the column space of Z: every k-class member coincides.
    if denom.trace() <= 1e-20 * numer.trace().max(f64::MIN_POSITIVE) {
        return Ok(1.0);
    }
    let h = linalg::inv_sqrt_spd(&denom).map_err(|min| IvError::SingularGram {
        min_eigenvalue: min,
    })?;
    let s = &h * numer * &h;
    Ok(linalg::min_eigenvalue_sym(&s))
}

pub fn fit_liml(d: &IvDataset) -> Result<EstimateResult> {
    let kappa = liml_kappa(d)?;
    debug_assert!(kappa >= 1.0 - 1e-8, "kappa = {kappa}");
    let (beta, inv) = kclass_solve(d, kappa)?;
    let sigma2_hat = structural_sigma2(d, &beta);
    let std_errors = std_errors(&inv, sigma2_hat);
    Ok(EstimateResult {
        estimator: Estimator::Liml,
        beta,
        std_errors,
        kappa: Some(kappa),
        sigma2_hat,
        fitted_instrument: None,
    })
}

/// `b = (X_hat'X)^{-1} X_hat'Y` where the endogenous columns of `X_hat` are
/// leave-one-out first-stage fits and the exogenous columns are copied from `X`.
/// The standard errors use the sandwich `s2 (X_hat'X)^{-1} X_hat'X_hat (X'X_hat)^{-1}`.
pub fn fit_jive(d: &IvDataset, method: JiveMethod) -> Result<EstimateResult> {
    let x_hat = jive_instrument(d, method)?;
    let x = d.x();
    let a = x_hat.tr_mul(x);
    let beta = linalg::solve_small(&a, &x_hat.tr_mul(d.y())).ok_or(IvError::RankDeficientDesign)?;
    let a_inv = linalg::inverse_small(&a).ok_or(IvError::RankDeficientDesign)?;
    let meat = x_hat.tr_mul(&x_hat);
    let cov = &a_inv * meat * a_inv.transpose();
    let sigma2_hat = structural_sigma2(d, &beta);
    let std_errors = std_errors(&cov, sigma2_hat);
    Ok(EstimateResult {
        estimator: Estimator::Jive,
        beta,
        std_errors,
        kappa: None,
        sigma2_hat,
        fitted_instrument: Some(x_hat),
    })
}

/// Builds the JIVE instrument matrix (N x L).
pub fn jive_instrument(d: &IvDataset, method: JiveMethod) -> Result<DMatrix<f64>> {
    let m = d.n_exog();
    let mut x_hat = d.x().clone();
    if d.n_endog() == 0 {
        return Ok(x_hat);
    }
    let zf = d.z_factor();
    let h = zf.leverages();
    if let Some((row, &lev)) = h.iter().enumerate().find(|(_, &v)| v >= 1.0 - LEVERAGE_TOL) {
        return Err(IvError::LeverageOne { row, leverage: lev });
    }
    let x1 = d.x_endog();
    match method {
        JiveMethod::Accelerated => {
            let fit = zf.project(&x1);
            for i in 0..d.n() {
                let scale = 1.0 / (1.0 - h[i]);
                for j in 0..x1.ncols() {
                    x_hat[(i, m + j)] = (fit[(i, j)] - h[i] * x1[(i, j)]) * scale;
                }
            }
        }
        JiveMethod::Naive => {
            let z = d.z();
            for i in 0..d.n() {
                let z_i = linalg::without_row(z, i);
                let x_i = linalg::without_row(&x1, i);
                let qr = QrFactor::new(&z_i).map_err(|_| IvError::LeverageOne {
                    row: i,
                    leverage: h[i],
                })?;
                let pi_tilde = qr.solve_mat(&x_i);
                let row_fit = z.row(i) * pi_tilde;
                for j in 0..x1.ncols() {
                    x_hat[(i, m + j)] = row_fit[(0, j)];
                }
            }
        }
    }
    Ok(x_hat)
}

fn structural_sigma2(d: &IvDataset, beta: &DVector<f64>) -> f64 {
    let resid = d.y() - d.x() * beta;
    resid.norm_squared() / (d.n() - d.l()) as f64
}

fn std_errors(cov_unscaled: &DMatrix<f64>, sigma2: f64) -> DVector<f64> {
    DVector::from_iterator(
        cov_unscaled.nrows(),
        (0..cov_unscaled.nrows()).map(|i| (sigma2 * cov_unscaled[(i, i)]).sqrt()),
    )
}
