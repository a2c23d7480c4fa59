//! Instrumental-variables estimation under weak instruments.
//!
//! The crate provides OLS, 2SLS, JIVE and LIML estimators, first-stage and
//! Anderson-Rubin diagnostics, analytic bias predictors, a deterministic
//! parallel Monte-Carlo harness, and CSV ingestion with dummy/interaction
//! design construction.

pub mod cli;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod ingestion;
pub mod linalg;
pub mod report;
pub mod simulation;

pub use dataset::{projection_apply, ColumnNames, IvDataset, StructuralError};
pub use error::{IvError, Result};
pub use estimators::{
    fit, fit_2sls, fit_jive, fit_kclass, fit_liml, fit_ols, EstimateResult, Estimator, JiveMethod,
    KClassSpec,
};
