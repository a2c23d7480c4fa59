use serde::Serialize;

/// One row of the weak-instrument critical-value table (2SLS relative bias
/// above 10%, 5% test based on the first-stage F).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalValueRow {
    pub k_excluded: usize,
    /// Threshold on mu^2 / K.
    pub threshold: f64,
    /// 5% critical value of the first-stage F statistic.
    pub f_critical: f64,
}

/// Relative-bias target the table is built for.
pub const RELATIVE_BIAS_TARGET: f64 = 0.10;

pub const CRITICAL_VALUES: [CriticalValueRow; 4] = [
    CriticalValueRow {
        k_excluded: 3,
        threshold: 3.71,
        f_critical: 9.08,
    },
    CriticalValueRow {
        k_excluded: 5,
        threshold: 5.82,
        f_critical: 10.83,
    },
    CriticalValueRow {
        k_excluded: 10,
        threshold: 7.41,
        f_critical: 11.49,
    },
    CriticalValueRow {
        k_excluded: 15,
        threshold: 7.94,
        f_critical: 11.51,
    },
];

/// Exact row for `k_excluded`; no interpolation between shipped rows.
pub fn critical_value_lookup(k_excluded: usize) -> Option<CriticalValueRow> {
    CRITICAL_VALUES
        .iter()
        .copied()
        .find(|r| r.k_excluded == k_excluded)
}
