use serde::Serialize;

use super::critical_values::{critical_value_lookup, CriticalValueRow};
use crate::dataset::IvDataset;
use crate::error::{IvError, Result};
use crate::linalg::QrFactor;

/// Rule-of-thumb cutoff on the first-stage F for a single endogenous regressor.
pub const RULE_OF_THUMB_F: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Strong,
    Weak,
    Indeterminate,
}

/// Where the threshold behind a verdict came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    CriticalValueTable,
    RuleOfThumb,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstStageOptions {
    /// Fallback F cutoff when the table has no row; `None` disables it.
    pub rule_of_thumb: Option<f64>,
}

impl Default for FirstStageOptions {
    fn default() -> Self {
        Self {
            rule_of_thumb: Some(RULE_OF_THUMB_F),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub f_stat: f64,
    /// Partial R^2 of the excluded instruments in the first stage.
    pub r2: f64,
    pub adj_r2: f64,
    /// `max(F - 1, 0)`, an estimate of mu^2 / K.
    pub mu2_over_k_hat: f64,
    pub k_excluded: usize,
    pub n_obs: usize,
    pub verdict: Verdict,
    pub threshold_used: Option<f64>,
    pub threshold_source: ThresholdSource,
    pub table_row: Option<CriticalValueRow>,
}

/// Classifies an F statistic: the table row when one exists, else the rule of
/// thumb when enabled, else indeterminate.
pub fn classify(
    f_stat: f64,
    k_excluded: usize,
    options: FirstStageOptions,
) -> (
    Verdict,
    Option<f64>,
    ThresholdSource,
    Option<CriticalValueRow>,
) {
    let verdict_for = |t: f64| {
        if f_stat > t {
            Verdict::Strong
        } else {
            Verdict::Weak
        }
    };
    if let Some(row) = critical_value_lookup(k_excluded) {
        return (
            verdict_for(row.f_critical),
            Some(row.f_critical),
            ThresholdSource::CriticalValueTable,
            Some(row),
        );
    }
    match options.rule_of_thumb {
        Some(t) => (verdict_for(t), Some(t), ThresholdSource::RuleOfThumb, None),
        None => (Verdict::Indeterminate, None, ThresholdSource::None, None),
    }
}

pub fn first_stage_f(d: &IvDataset) -> Result<DiagnosticsReport> {
    first_stage_f_with(d, FirstStageOptions::default())
}

/// Joint F test of the excluded instruments in the regression of the single
/// endogenous column on `Z`, from restricted (on `X_0`) and unrestricted RSS.
pub fn first_stage_f_with(d: &IvDataset, options: FirstStageOptions) -> Result<DiagnosticsReport> {
    match d.n_endog() {
        0 => return Err(IvError::NoEndogenous),
        1 => {}
        count => return Err(IvError::MultipleEndogenous { count }),
    }
    let q = d.k_excluded();
    if q == 0 {
        return Err(IvError::NoExcludedInstruments);
    }
    let n = d.n();
    let m = d.n_exog();
    let x1 = d.x().column(m).into_owned();
    let rss_u = d.z_factor().annihilate_vec(&x1).norm_squared();
    let rss_r = if m > 0 {
        let x0 = QrFactor::new(&d.x_exog()).map_err(|_| IvError::RankDeficientDesign)?;
        x0.annihilate_vec(&x1).norm_squared()
    } else {
        x1.norm_squared()
    };
    let df_den = (n - d.k()) as f64;
    let explained = (rss_r - rss_u).max(0.0);
    let f_stat = if explained == 0.0 {
        0.0
    } else {
        (explained / q as f64) / (rss_u / df_den)
    };
    let r2 = if rss_r > 0.0 {
        (explained / rss_r).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let adj_r2 = 1.0 - (1.0 - r2) * (n - m) as f64 / df_den;
    let (verdict, threshold_used, threshold_source, table_row) = classify(f_stat, q, options);
    Ok(DiagnosticsReport {
        f_stat,
        r2,
        adj_r2,
        mu2_over_k_hat: (f_stat - 1.0).max(0.0),
        k_excluded: q,
        n_obs: n,
        verdict,
        threshold_used,
        threshold_source,
        table_row,
    })
}
