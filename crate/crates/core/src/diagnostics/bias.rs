//! Concentration parameter and analytic bias / inconsistency predictors.

use nalgebra::{DMatrix, DVector};

use crate::dataset::check_positive;
use crate::error::{IvError, Result};

fn signal(pi: &DVector<f64>, z: &DMatrix<f64>) -> Result<f64> {
    if z.ncols() != pi.len() {
        return Err(IvError::DimensionMismatch(format!(
            "pi has {} entries, z has {} columns",
            pi.len(),
            z.ncols()
        )));
    }
    Ok((z * pi).norm_squared())
}

/// `mu^2 = pi'Z'Z pi / sigma_eta^2`.
pub fn concentration_parameter(
    pi: &DVector<f64>,
    z: &DMatrix<f64>,
    sigma_eta2: f64,
) -> Result<f64> {
    check_positive("sigma_eta2", sigma_eta2)?;
    Ok(signal(pi, z)? / sigma_eta2)
}

/// Power-series approximation to the 2SLS bias relative to OLS:
/// `sigma_eps_eta (K - 2) / pi'Z'Z pi`, with `K` the excluded-instrument count.
pub fn predict_bias_buse(
    sigma_eps_eta: f64,
    pi: &DVector<f64>,
    z: &DMatrix<f64>,
    k_excluded: usize,
) -> Result<f64> {
    if k_excluded == 0 {
        return Err(IvError::NoExcludedInstruments);
    }
    let s = signal(pi, z)?;
    if s <= 0.0 {
        return Err(IvError::DegenerateFirstStage);
    }
    Ok(sigma_eps_eta * (k_excluded as f64 - 2.0) / s)
}

/// Group-asymptotic 2SLS bias `(sigma_eps_eta / sigma_eta^2) / (F + 1)`.
pub fn predict_bias_group_asym(sigma_eps_eta: f64, sigma_eta2: f64, f_pop: f64) -> Result<f64> {
    check_positive("sigma_eta2", sigma_eta2)?;
    if !(f_pop >= 0.0) {
        return Err(IvError::InvalidParameter {
            name: "f_pop",
            value: f_pop,
        });
    }
    Ok(sigma_eps_eta / sigma_eta2 / (f_pop + 1.0))
}

/// Population first-stage F, `E(pi'Z'Z pi) / Q / sigma_eta^2`, where `Q` is the
/// rank of the instrument projection.
pub fn population_first_stage_f(expected_signal: f64, rank: usize, sigma_eta2: f64) -> Result<f64> {
    check_positive("sigma_eta2", sigma_eta2)?;
    if rank == 0 {
        return Err(IvError::NoExcludedInstruments);
    }
    if !(expected_signal >= 0.0) {
        return Err(IvError::InvalidParameter {
            name: "expected_signal",
            value: expected_signal,
        });
    }
    Ok(expected_signal / rank as f64 / sigma_eta2)
}

/// Probability-limit deviation of 2SLS, `sigma_{Xhat,eps} / sigma^2_{Xhat}`.
pub fn predict_inconsistency(sigma_xhat_eps: f64, var_xhat: f64) -> Result<f64> {
    check_positive("var_xhat", var_xhat)?;
    Ok(sigma_xhat_eps / var_xhat)
}
