use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by estimation, diagnostics, simulation and ingestion.
#[derive(Debug, Error)]
pub enum IvError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("instrument matrix is rank deficient (effective rank {rank} < {cols} columns)")]
    RankDeficientInstruments { rank: usize, cols: usize },

    #[error("column {column} of x differs from column {column} of z; the first {n_exog} columns must be identical")]
    ExogenousMismatch { column: usize, n_exog: usize },

    #[error("regressor design is rank deficient")]
    RankDeficientDesign,

    #[error("X'P_Z X is numerically singular: the 2SLS estimator does not exist for this sample")]
    WeakRankFailure,

    #[error(
        "observation {row} has leverage {leverage} >= 1; leave-one-out first stage is undefined"
    )]
    LeverageOne { row: usize, leverage: f64 },

    #[error("Y*'M_Z Y* is not positive definite (min eigenvalue {min_eigenvalue})")]
    SingularGram { min_eigenvalue: f64 },

    #[error("{count} endogenous regressors; only a single endogenous regressor is supported here")]
    MultipleEndogenous { count: usize },

    #[error("dataset has no endogenous regressor")]
    NoEndogenous,

    #[error("no excluded instruments (K - M = 0)")]
    NoExcludedInstruments,

    #[error("{name} must be positive, got {value}")]
    NonpositiveVariance { name: &'static str, value: f64 },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("first-stage signal pi'Z'Z pi is zero")]
    DegenerateFirstStage,

    #[error("residual has no component outside the instrument span")]
    DegenerateResidual,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("invalid sweep value {value} for axis {axis}")]
    InvalidSweepValue { axis: String, value: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at data row {row}, column '{column}': {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    #[error("categorical column '{0}' has fewer than two observed levels")]
    SingleLevelCategorical(String),

    #[error("table is empty")]
    EmptyAfterFiltering,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IvError>;
