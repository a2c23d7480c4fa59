//! Weak-instrument diagnostics: first-stage F, critical values, the
//! Anderson-Rubin test, and analytic bias predictors.

pub mod anderson_rubin;
pub mod bias;
pub mod critical_values;
pub mod fdist;
pub mod first_stage;

pub use anderson_rubin::{
    ar_confidence_set, ar_statistic, ar_statistic_concentrated, ArConfidenceSet, ArGrid, ArInterval,
};
pub use bias::{
    concentration_parameter, population_first_stage_f, predict_bias_buse, predict_bias_group_asym,
    predict_inconsistency,
};
pub use critical_values::{critical_value_lookup, CriticalValueRow, CRITICAL_VALUES};
pub use fdist::{f_cdf, f_quantile, f_sf};
pub use first_stage::{
    classify, first_stage_f, first_stage_f_with, DiagnosticsReport, FirstStageOptions,
    ThresholdSource, Verdict, RULE_OF_THUMB_F,
};
