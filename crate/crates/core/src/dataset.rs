//! Core data objects: the `(Y, X, Z)` triple and the structural error block.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{IvError, Result};
use crate::linalg::{self, QrFactor};

/// Optional labels for the columns of `x` and `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnNames {
    pub x: Vec<String>,
    pub z: Vec<String>,
}

/// Validated instrumental-variables sample.
///
/// `x` is ordered exogenous-then-endogenous and its first `n_exog` columns are
/// bit-identical to the first `n_exog` columns of `z`. The intercept is never
/// implicit; include a column of ones where one is wanted.
#[derive(Debug, Clone)]
pub struct IvDataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    n_exog: usize,
    column_names: Option<ColumnNames>,
    z_qr: QrFactor,
}

impl IvDataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, z: DMatrix<f64>, n_exog: usize) -> Result<Self> {
        let n = y.len();
        let (xn, l) = x.shape();
        let (zn, k) = z.shape();
        if xn != n || zn != n {
            return Err(IvError::DimensionMismatch(format!(
                "y has {n} rows, x has {xn}, z has {zn}"
            )));
        }
        if l == 0 {
            return Err(IvError::DimensionMismatch("x has no columns".into()));
        }
        if k < l {
            return Err(IvError::DimensionMismatch(format!(
                "K = {k} instruments is fewer than L = {l} regressors"
            )));
        }
        if n <= k {
            return Err(IvError::DimensionMismatch(format!(
                "need N > K, got N = {n}, K = {k}"
            )));
        }
        if n_exog > l.min(k) {
            return Err(IvError::DimensionMismatch(format!(
                "n_exog = {n_exog} exceeds min(L, K) = {}",
                l.min(k)
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(IvError::DimensionMismatch(
                "y or x contains non-finite values".into(),
            ));
        }
        for c in 0..n_exog {
            let same = x
                .column(c)
                .iter()
                .zip(z.column(c).iter())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                return Err(IvError::ExogenousMismatch { column: c, n_exog });
            }
        }
        let z_qr = QrFactor::new(&z).map_err(|d| IvError::RankDeficientInstruments {
            rank: d.rank,
            cols: d.cols,
        })?;
        Ok(Self {
            y,
            x,
            z,
            n_exog,
            column_names: None,
            z_qr,
        })
    }

    /// Attaches column labels; lengths must match L and K.
    pub fn with_column_names(mut self, names: ColumnNames) -> Result<Self> {
        if names.x.len() != self.l() || names.z.len() != self.k() {
            return Err(IvError::DimensionMismatch(format!(
                "{} x labels / {} z labels for L = {}, K = {}",
                names.x.len(),
                names.z.len(),
                self.l(),
                self.k()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of regressors.
    pub fn l(&self) -> usize {
        self.x.ncols()
    }

    /// Number of instruments, including the included exogenous columns.
    pub fn k(&self) -> usize {
        self.z.ncols()
    }

    /// Number of included exogenous columns shared by `x` and `z`.
    pub fn n_exog(&self) -> usize {
        self.n_exog
    }

    pub fn n_endog(&self) -> usize {
        self.l() - self.n_exog
    }

    pub fn k_excluded(&self) -> usize {
        self.k() - self.n_exog
    }

    pub fn column_names(&self) -> Option<&ColumnNames> {
        self.column_names.as_ref()
    }

    /// Factorization of `z`, computed once at construction.
    pub fn z_factor(&self) -> &QrFactor {
        &self.z_qr
    }

    /// Included exogenous block `X_0` (N x M).
    pub fn x_exog(&self) -> DMatrix<f64> {
        linalg::columns(&self.x, 0..self.n_exog)
    }

    /// Endogenous block `X_1` (N x (L - M)).
    pub fn x_endog(&self) -> DMatrix<f64> {
        linalg::columns(&self.x, self.n_exog..self.l())
    }

    /// Excluded instruments `Z_1` (N x (K - M)).
    pub fn z_excluded(&self) -> DMatrix<f64> {
        linalg::columns(&self.z, self.n_exog..self.k())
    }
}

/// Applies `P_Z` to every column of `v` without forming the N x N matrix.
pub fn projection_apply(z: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if z.nrows() != v.nrows() {
        return Err(IvError::DimensionMismatch(format!(
            "z has {} rows, v has {}",
            z.nrows(),
            v.nrows()
        )));
    }
    let qr = QrFactor::new(z).map_err(|d| IvError::RankDeficientInstruments {
        rank: d.rank,
        cols: d.cols,
    })?;
    Ok(qr.project(v))
}

/// Scalar-endogenous error structure of `(epsilon, eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralError {
    pub sigma_eps2: f64,
    pub sigma_eta2: f64,
    pub sigma_eps_eta: f64,
    pub rho: f64,
}

impl StructuralError {
    pub fn from_correlation(sigma_eps2: f64, sigma_eta2: f64, rho: f64) -> Result<Self> {
        check_positive("sigma_eps2", sigma_eps2)?;
        check_positive("sigma_eta2", sigma_eta2)?;
        if !(-1.0..=1.0).contains(&rho) {
            return Err(IvError::InvalidParameter {
                name: "rho",
                value: rho,
            });
        }
        Ok(Self {
            sigma_eps2,
            sigma_eta2,
            sigma_eps_eta: rho * (sigma_eps2 * sigma_eta2).sqrt(),
            rho,
        })
    }

    pub fn from_covariance(sigma_eps2: f64, sigma_eta2: f64, sigma_eps_eta: f64) -> Result<Self> {
        check_positive("sigma_eps2", sigma_eps2)?;
        check_positive("sigma_eta2", sigma_eta2)?;
        let rho = sigma_eps_eta / (sigma_eps2 * sigma_eta2).sqrt();
        if !(-1.0..=1.0).contains(&rho) {
            return Err(IvError::InvalidCovariance(format!(
                "implied correlation {rho} outside [-1, 1]"
            )));
        }
        Ok(Self {
            sigma_eps2,
            sigma_eta2,
            sigma_eps_eta,
            rho,
        })
    }

    /// The 2 x 2 covariance of `(epsilon, eta)`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        [
            [self.sigma_eps2, self.sigma_eps_eta],
            [self.sigma_eps_eta, self.sigma_eta2],
        ]
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(IvError::NonpositiveVariance { name, value })
    }
}
