//! Tabular and JSON output.
//!
//! Every floating-point value is written with six significant digits in the
//! style of C's `%.6g`, so a value read back from a CSV and printed again
//! gives the same text. JSON documents carry a `schema_version` field.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::dataset::IvDataset;
use crate::diagnostics::{ArConfidenceSet, DiagnosticsReport};
use crate::error::Result;
use crate::estimators::{EstimateResult, Estimator};
use crate::ingestion::SpecificationReport;
use crate::simulation::{McSummary, ReplicationDraw, SweepRow};

pub const SCHEMA_VERSION: u32 = 1;

pub const MC_SUMMARY_HEADER: [&str; 18] = [
    "model",
    "n",
    "k",
    "reps",
    "seed",
    "estimator",
    "successes",
    "failures",
    "q000",
    "q025",
    "q050",
    "q075",
    "q100",
    "median_bias",
    "mean_bias",
    "coverage95",
    "mean_first_stage_f",
    "mean_concentration",
];
pub const SWEEP_HEADER: [&str; 7] = [
    "axis",
    "value",
    "n",
    "estimator",
    "median_bias",
    "successes",
    "failures",
];
pub const DRAWS_HEADER: [&str; 7] = [
    "replication",
    "seed",
    "first_stage_f",
    "concentration",
    "estimator",
    "beta1_hat",
    "se",
];
pub const ESTIMATES_HEADER: [&str; 6] = [
    "estimator",
    "term",
    "coefficient",
    "std_error",
    "kappa",
    "sigma2_hat",
];
pub const DIAGNOSTICS_HEADER: [&str; 13] = [
    "f_stat",
    "df_num",
    "df_den",
    "r2",
    "adj_r2",
    "mu2_over_k_hat",
    "verdict",
    "threshold",
    "threshold_source",
    "table_k_excluded",
    "table_mu2_over_k",
    "table_f_critical",
    "n_obs",
];
pub const AR_HEADER: [&str; 9] = [
    "alpha",
    "critical_value",
    "df_num",
    "df_den",
    "interval",
    "lo",
    "hi",
    "accepted_nodes",
    "unbounded",
];
pub const SPECIFICATION_HEADER: [&str; 10] = [
    "outcome",
    "regressor",
    "estimator",
    "coefficient",
    "std_error",
    "n_obs",
    "n_instruments",
    "first_stage_f",
    "first_stage_r2_x100",
    "first_stage_adj_r2_x100",
];

/// `%.6g`-style formatting: six significant digits, trailing zeros removed,
/// scientific notation for exponents below -4 or at least 6.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        strip_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value `fmt_sig6` prints, as a number.
pub fn round_sig6(x: f64) -> f64 {
    if x.is_finite() {
        fmt_sig6(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig6).unwrap_or_default()
}

/// A header plus pre-formatted rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

/// One row per (model, estimator).
pub fn mc_summary_table(runs: &[(String, &McSummary)]) -> Table {
    let mut t = Table::new(&MC_SUMMARY_HEADER);
    for (label, s) in runs {
        for e in &s.estimators {
            let q = |i: usize| opt(e.quantiles.map(|q| q[i]));
            t.rows.push(vec![
                label.clone(),
                s.config.n.to_string(),
                s.config.k().to_string(),
                s.reps.to_string(),
                s.master_seed.to_string(),
                e.estimator.to_string(),
                e.successes.to_string(),
                e.failures.to_string(),
                q(0),
                q(1),
                q(2),
                q(3),
                q(4),
                opt(e.median_bias),
                opt(e.mean_bias),
                opt(e.coverage95),
                opt(s.mean_first_stage_f),
                fmt_sig6(s.mean_concentration),
            ]);
        }
    }
    t
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_HEADER);
    for r in rows {
        t.rows.push(vec![
            r.axis.label().to_string(),
            fmt_sig6(r.value),
            r.n.to_string(),
            r.estimator.to_string(),
            opt(r.median_bias),
            r.successes.to_string(),
            r.failures.to_string(),
        ]);
    }
    t
}

/// Long format: one row per (replication, estimator); failed fits leave the
/// estimate cells empty.
pub fn draws_table(draws: &[ReplicationDraw], estimators: &[Estimator]) -> Table {
    let mut t = Table::new(&DRAWS_HEADER);
    for d in draws {
        for (e, est) in estimators.iter().zip(&d.estimates) {
            t.rows.push(vec![
                d.replication.to_string(),
                d.seed.to_string(),
                opt(d.first_stage_f),
                fmt_sig6(d.concentration),
                e.to_string(),
                opt(est.map(|s| s.beta1)),
                opt(est.map(|s| s.se)),
            ]);
        }
    }
    t
}

fn term_names(d: &IvDataset) -> Vec<String> {
    match d.column_names() {
        Some(names) => names.x.clone(),
        None => (0..d.l()).map(|j| format!("x{j}")).collect(),
    }
}

/// Serializable view of an [`EstimateResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub estimator: Estimator,
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub kappa: Option<f64>,
    pub sigma2_hat: f64,
}

impl EstimateRecord {
    pub fn new(d: &IvDataset, r: &EstimateResult) -> Self {
        Self {
            estimator: r.estimator,
            terms: term_names(d),
            coefficients: r.beta.iter().copied().collect(),
            std_errors: r.std_errors.iter().copied().collect(),
            kappa: r.kappa,
            sigma2_hat: r.sigma2_hat,
        }
    }
}

pub fn estimates_table(records: &[EstimateRecord]) -> Table {
    let mut t = Table::new(&ESTIMATES_HEADER);
    for r in records {
        for (j, term) in r.terms.iter().enumerate() {
            t.rows.push(vec![
                r.estimator.to_string(),
                term.clone(),
                fmt_sig6(r.coefficients[j]),
                fmt_sig6(r.std_errors[j]),
                opt(r.kappa),
                fmt_sig6(r.sigma2_hat),
            ]);
        }
    }
    t
}

/// First-stage report with its F degrees of freedom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    #[serde(flatten)]
    pub report: DiagnosticsReport,
    pub df_num: usize,
    pub df_den: usize,
}

impl DiagnosticsRecord {
    pub fn new(d: &IvDataset, report: DiagnosticsReport) -> Self {
        Self {
            df_num: report.k_excluded,
            df_den: d.n() - d.k(),
            report,
        }
    }
}

pub fn diagnostics_table(rec: &DiagnosticsRecord) -> Table {
    let r = &rec.report;
    let mut t = Table::new(&DIAGNOSTICS_HEADER);
    let source = serde_json::to_value(r.threshold_source)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let verdict = serde_json::to_value(r.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    t.rows.push(vec![
        fmt_sig6(r.f_stat),
        rec.df_num.to_string(),
        rec.df_den.to_string(),
        fmt_sig6(r.r2),
        fmt_sig6(r.adj_r2),
        fmt_sig6(r.mu2_over_k_hat),
        verdict,
        opt(r.threshold_used),
        source,
        r.table_row
            .map(|row| row.k_excluded.to_string())
            .unwrap_or_default(),
        opt(r.table_row.map(|row| row.threshold)),
        opt(r.table_row.map(|row| row.f_critical)),
        r.n_obs.to_string(),
    ]);
    t
}

/// One row per accepted interval; an empty set gives one row with blank bounds.
pub fn ar_table(set: &ArConfidenceSet) -> Table {
    let mut t = Table::new(&AR_HEADER);
    let base = |i: String, lo: String, hi: String| {
        vec![
            fmt_sig6(set.alpha),
            fmt_sig6(set.critical_value),
            set.df_num.to_string(),
            set.df_den.to_string(),
            i,
            lo,
            hi,
            set.accepted_nodes.to_string(),
            set.unbounded.to_string(),
        ]
    };
    if set.intervals.is_empty() {
        t.rows
            .push(base(String::new(), String::new(), String::new()));
    }
    for (i, iv) in set.intervals.iter().enumerate() {
        t.rows
            .push(base((i + 1).to_string(), fmt_sig6(iv.lo), fmt_sig6(iv.hi)));
    }
    t
}

pub fn specification_table(rep: &SpecificationReport) -> Table {
    let mut t = Table::new(&SPECIFICATION_HEADER);
    for e in &rep.estimates {
        t.rows.push(vec![
            rep.outcome.clone(),
            rep.regressor.clone(),
            e.estimator.to_string(),
            fmt_sig6(e.coefficient),
            fmt_sig6(e.std_error),
            rep.n_obs.to_string(),
            rep.n_instruments.to_string(),
            opt(rep.first_stage.as_ref().map(|f| f.f_stat)),
            opt(rep.first_stage_r2_x100),
            opt(rep.first_stage_adj_r2_x100),
        ]);
    }
    t
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig6)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// `{"schema_version": .., "kind": .., "data": ..}` with floats rounded to
/// six significant digits.
pub fn json_document<T: Serialize>(kind: &str, data: &T) -> Result<String> {
    let mut data = serde_json::to_value(data)?;
    round_floats(&mut data);
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "data": data,
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5870001, "0.587"),
            (-0.0234567891, "-0.0234568"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (999999.6, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234567, "1.23457e-05"),
            (-242.30456, "-242.305"),
            (3.8888529328918806, "3.88885"),
            (1e300, "1e+300"),
            (f64::NAN, "NaN"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_sig6(x), want, "{x}");
        }
    }

    proptest! {
        #[test]
        fn sig6_round_trips(x in prop::num::f64::NORMAL) {
            let s = fmt_sig6(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(fmt_sig6(back), s);
            prop_assert!(((back - x) / x).abs() <= 5e-6);
        }
    }

    #[test]
    fn json_rounds_floats_and_keeps_integers() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            seed: u64,
        }
        let doc = json_document(
            "t",
            &S {
                a: 0.123456789,
                seed: u64::MAX,
            },
        )
        .unwrap();
        let v: Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["data"]["a"].as_f64(), Some(0.123457));
        assert_eq!(v["data"]["seed"].as_u64(), Some(u64::MAX));
    }
}
