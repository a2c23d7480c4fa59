//! CSV ingestion and design-matrix construction for applied IV work.
//!
//! A JSON [`ColumnSpec`] assigns each used CSV column a role. Categorical
//! columns expand to one dummy per level except a dropped reference level
//! (the first level in sorted order unless overridden). Interactions of two
//! categoricals are products of their retained dummies. The built design is
//!
//! ```text
//! X = [1, controls, endogenous]
//! Z = [1, controls, instruments, instrument interactions]
//! ```
//!
//! Wages are expected already in logs; no transform is applied here.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnNames, IvDataset};
use crate::diagnostics::{first_stage_f, DiagnosticsReport};
use crate::error::{IvError, Result};
use crate::estimators::{fit, Estimator};
use crate::simulation::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Outcome,
    Endogenous,
    ControlCategorical,
    ControlContinuous,
    InstrumentCategorical,
    InstrumentContinuous,
}

impl Role {
    fn is_categorical(self) -> bool {
        matches!(self, Role::ControlCategorical | Role::InstrumentCategorical)
    }

    fn is_instrument(self) -> bool {
        matches!(
            self,
            Role::InstrumentCategorical | Role::InstrumentContinuous
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRole {
    pub name: String,
    pub role: Role,
    /// Level to drop instead of the first sorted level (categoricals only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: String,
    pub b: String,
}

/// Role assignment for the columns of an input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub columns: Vec<ColumnRole>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
}

impl ColumnSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(IvError::FileNotFound(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn role_of(&self, name: &str) -> Option<&ColumnRole> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(IvError::SchemaMismatch(format!(
                    "column '{}' declared twice",
                    c.name
                )));
            }
            if c.reference.is_some() && !c.role.is_categorical() {
                return Err(IvError::SchemaMismatch(format!(
                    "reference level given for non-categorical column '{}'",
                    c.name
                )));
            }
        }
        let outcomes = self
            .columns
            .iter()
            .filter(|c| c.role == Role::Outcome)
            .count();
        if outcomes != 1 {
            return Err(IvError::SchemaMismatch(format!(
                "expected exactly one outcome column, found {outcomes}"
            )));
        }
        if !self.columns.iter().any(|c| c.role == Role::Endogenous) {
            return Err(IvError::SchemaMismatch(
                "no endogenous column declared".into(),
            ));
        }
        for it in &self.interactions {
            for side in [&it.a, &it.b] {
                match self.role_of(side) {
                    Some(c) if c.role.is_categorical() => {}
                    Some(_) => {
                        return Err(IvError::SchemaMismatch(format!(
                            "interaction term '{side}' is not categorical"
                        )))
                    }
                    None => {
                        return Err(IvError::SchemaMismatch(format!(
                            "interaction term '{side}' is not a declared column"
                        )))
                    }
                }
            }
            if it.a == it.b {
                return Err(IvError::SchemaMismatch(format!(
                    "'{}' interacted with itself",
                    it.a
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

/// Declared columns of a CSV, typed by role.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: HashMap<String, ColumnData>,
    n_rows: usize,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.columns.get(name)
    }
}

pub fn read_csv(path: &Path, spec: &ColumnSpec) -> Result<RawTable> {
    if !path.exists() {
        return Err(IvError::FileNotFound(path.to_path_buf()));
    }
    read_csv_from(std::fs::File::open(path)?, spec)
}

/// Reads comma-separated UTF-8 with a header row. Row numbers in errors count
/// data rows from 1.
pub fn read_csv_from<R: Read>(reader: R, spec: &ColumnSpec) -> Result<RawTable> {
    spec.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = Vec::with_capacity(spec.columns.len());
    for c in &spec.columns {
        let pos = headers
            .iter()
            .position(|h| h.trim() == c.name)
            .ok_or_else(|| {
                IvError::SchemaMismatch(format!("declared column '{}' not in header", c.name))
            })?;
        index.push(pos);
    }
    let mut data: Vec<ColumnData> = spec
        .columns
        .iter()
        .map(|c| {
            if c.role.is_categorical() {
                ColumnData::Categorical(Vec::new())
            } else {
                ColumnData::Numeric(Vec::new())
            }
        })
        .collect();
    let mut n_rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        for ((c, &pos), col) in spec.columns.iter().zip(&index).zip(data.iter_mut()) {
            let cell = record.get(pos).map(str::trim).unwrap_or("");
            let parse_err = |message: String| IvError::ParseError {
                row,
                column: c.name.clone(),
                message,
            };
            match col {
                ColumnData::Numeric(v) => {
                    let x: f64 = cell
                        .parse()
                        .map_err(|_| parse_err(format!("'{cell}' is not a number")))?;
                    if !x.is_finite() {
                        return Err(parse_err(format!("'{cell}' is not finite")));
                    }
                    v.push(x);
                }
                ColumnData::Categorical(v) => {
                    if cell.is_empty() {
                        return Err(parse_err("empty level".into()));
                    }
                    v.push(cell.to_string());
                }
            }
        }
        n_rows += 1;
    }
    let columns = spec
        .columns
        .iter()
        .map(|c| c.name.clone())
        .zip(data)
        .collect();
    Ok(RawTable { columns, n_rows })
}

/// Meaning of one generated design column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnLabel {
    Intercept,
    Continuous {
        variable: String,
    },
    Dummy {
        variable: String,
        level: String,
    },
    Interaction {
        variable_a: String,
        level_a: String,
        variable_b: String,
        level_b: String,
    },
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::Intercept => f.write_str("(intercept)"),
            ColumnLabel::Continuous { variable } => f.write_str(variable),
            ColumnLabel::Dummy { variable, level } => write!(f, "{variable}={level}"),
            ColumnLabel::Interaction {
                variable_a,
                level_a,
                variable_b,
                level_b,
            } => write!(f, "{variable_a}={level_a}:{variable_b}={level_b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceLevel {
    pub variable: String,
    pub level: String,
}

#[derive(Debug, Clone)]
pub struct BuiltDesign {
    pub dataset: IvDataset,
    pub outcome: String,
    pub x_labels: Vec<ColumnLabel>,
    pub z_labels: Vec<ColumnLabel>,
    pub references: Vec<ReferenceLevel>,
}

impl BuiltDesign {
    /// Label of the first endogenous regressor.
    pub fn regressor_of_interest(&self) -> &ColumnLabel {
        &self.x_labels[self.dataset.n_exog()]
    }
}

struct Encoded {
    name: String,
    codes: Vec<usize>,
    // levels[j] for j >= 1 are retained; levels[0] is the reference
    levels: Vec<String>,
}

fn sorted_levels(values: &[String]) -> Vec<String> {
    let set: BTreeSet<&str> = values.iter().map(String::as_str).collect();
    let mut levels: Vec<String> = set.into_iter().map(str::to_string).collect();
    let numeric: Option<Vec<f64>> = levels.iter().map(|l| l.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut paired: Vec<(f64, String)> = nums.into_iter().zip(levels).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        levels = paired.into_iter().map(|p| p.1).collect();
    }
    levels
}

fn encode(role: &ColumnRole, values: &[String]) -> Result<Encoded> {
    let mut levels = sorted_levels(values);
    if levels.len() < 2 {
        return Err(IvError::SingleLevelCategorical(role.name.clone()));
    }
    if let Some(r) = &role.reference {
        let pos = levels.iter().position(|l| l == r).ok_or_else(|| {
            IvError::SchemaMismatch(format!(
                "reference level '{r}' not observed in '{}'",
                role.name
            ))
        })?;
        let lvl = levels.remove(pos);
        levels.insert(0, lvl);
    }
    let lookup: HashMap<&str, usize> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let codes = values.iter().map(|v| lookup[v.as_str()]).collect();
    Ok(Encoded {
        name: role.name.clone(),
        codes,
        levels,
    })
}

#[derive(Default)]
struct Block {
    cols: Vec<Vec<f64>>,
    labels: Vec<ColumnLabel>,
}

impl Block {
    fn push_dummies(&mut self, e: &Encoded) {
        for j in 1..e.levels.len() {
            self.cols.push(
                e.codes
                    .iter()
                    .map(|&c| if c == j { 1.0 } else { 0.0 })
                    .collect(),
            );
            self.labels.push(ColumnLabel::Dummy {
                variable: e.name.clone(),
                level: e.levels[j].clone(),
            });
        }
    }

    fn push_interaction(&mut self, a: &Encoded, b: &Encoded) {
        for ja in 1..a.levels.len() {
            for jb in 1..b.levels.len() {
                self.cols.push(
                    a.codes
                        .iter()
                        .zip(&b.codes)
                        .map(|(&ca, &cb)| if ca == ja && cb == jb { 1.0 } else { 0.0 })
                        .collect(),
                );
                self.labels.push(ColumnLabel::Interaction {
                    variable_a: a.name.clone(),
                    level_a: a.levels[ja].clone(),
                    variable_b: b.name.clone(),
                    level_b: b.levels[jb].clone(),
                });
            }
        }
    }
}

fn to_matrix(n: usize, blocks: &[&Block]) -> DMatrix<f64> {
    let cols: Vec<&Vec<f64>> = blocks.iter().flat_map(|b| b.cols.iter()).collect();
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub fn build_design(table: &RawTable, spec: &ColumnSpec) -> Result<BuiltDesign> {
    spec.validate()?;
    let n = table.n_rows();
    if n == 0 {
        return Err(IvError::EmptyAfterFiltering);
    }
    let numeric = |name: &str| -> Result<&Vec<f64>> {
        match table.column(name) {
            Some(ColumnData::Numeric(v)) if v.len() == n => Ok(v),
            _ => Err(IvError::SchemaMismatch(format!(
                "numeric column '{name}' missing from table"
            ))),
        }
    };
    let mut encoded: HashMap<&str, Encoded> = HashMap::new();
    for c in spec.columns.iter().filter(|c| c.role.is_categorical()) {
        match table.column(&c.name) {
            Some(ColumnData::Categorical(v)) if v.len() == n => {
                encoded.insert(c.name.as_str(), encode(c, v)?);
            }
            _ => {
                return Err(IvError::SchemaMismatch(format!(
                    "categorical column '{}' missing from table",
                    c.name
                )))
            }
        }
    }

    let mut intercept = Block::default();
    intercept.cols.push(vec![1.0; n]);
    intercept.labels.push(ColumnLabel::Intercept);
    let mut controls = Block::default();
    let mut instruments = Block::default();
    let mut endogenous = Block::default();
    let mut outcome = None;
    let mut references = Vec::new();
    for c in &spec.columns {
        match c.role {
            Role::Outcome => outcome = Some((c.name.clone(), numeric(&c.name)?.clone())),
            Role::Endogenous | Role::ControlContinuous | Role::InstrumentContinuous => {
                let block = match c.role {
                    Role::Endogenous => &mut endogenous,
                    Role::ControlContinuous => &mut controls,
                    _ => &mut instruments,
                };
                block.cols.push(numeric(&c.name)?.clone());
                block.labels.push(ColumnLabel::Continuous {
                    variable: c.name.clone(),
                });
            }
            Role::ControlCategorical | Role::InstrumentCategorical => {
                let e = &encoded[c.name.as_str()];
                references.push(ReferenceLevel {
                    variable: c.name.clone(),
                    level: e.levels[0].clone(),
                });
                let block = if c.role.is_instrument() {
                    &mut instruments
                } else {
                    &mut controls
                };
                block.push_dummies(e);
            }
        }
    }
    for it in &spec.interactions {
        let (a, b) = (&encoded[it.a.as_str()], &encoded[it.b.as_str()]);
        let is_instrument = [&it.a, &it.b]
            .iter()
            .any(|s| spec.role_of(s).is_some_and(|r| r.role.is_instrument()));
        let block = if is_instrument {
            &mut instruments
        } else {
            &mut controls
        };
        block.push_interaction(a, b);
    }
    if instruments.cols.is_empty() {
        return Err(IvError::NoExcludedInstruments);
    }
    let (outcome, y) = outcome.expect("validated: one outcome");
    let x = to_matrix(n, &[&intercept, &controls, &endogenous]);
    let z = to_matrix(n, &[&intercept, &controls, &instruments]);
    let n_exog = 1 + controls.cols.len();
    let x_labels: Vec<ColumnLabel> = [&intercept, &controls, &endogenous]
        .iter()
        .flat_map(|b| b.labels.iter().cloned())
        .collect();
    let z_labels: Vec<ColumnLabel> = [&intercept, &controls, &instruments]
        .iter()
        .flat_map(|b| b.labels.iter().cloned())
        .collect();
    let names = ColumnNames {
        x: x_labels.iter().map(ToString::to_string).collect(),
        z: z_labels.iter().map(ToString::to_string).collect(),
    };
    let dataset = IvDataset::new(DVector::from_vec(y), x, z, n_exog)?.with_column_names(names)?;
    Ok(BuiltDesign {
        dataset,
        outcome,
        x_labels,
        z_labels,
        references,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecificationEstimate {
    pub estimator: Estimator,
    pub coefficient: f64,
    pub std_error: f64,
}

/// Estimates of the first endogenous coefficient with first-stage summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecificationReport {
    pub outcome: String,
    pub regressor: String,
    pub n_obs: usize,
    pub n_instruments: usize,
    pub first_stage: Option<DiagnosticsReport>,
    pub first_stage_r2_x100: Option<f64>,
    pub first_stage_adj_r2_x100: Option<f64>,
    pub estimates: Vec<SpecificationEstimate>,
}

pub fn run_specification(
    design: &BuiltDesign,
    estimators: &[Estimator],
) -> Result<SpecificationReport> {
    let d = &design.dataset;
    let slot = d.n_exog();
    let mut estimates = Vec::with_capacity(estimators.len());
    for &e in estimators {
        let r = fit(d, e)?;
        estimates.push(SpecificationEstimate {
            estimator: e,
            coefficient: r.beta[slot],
            std_error: r.std_errors[slot],
        });
    }
    let first_stage = match first_stage_f(d) {
        Ok(r) => Some(r),
        Err(IvError::MultipleEndogenous { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SpecificationReport {
        outcome: design.outcome.clone(),
        regressor: design.regressor_of_interest().to_string(),
        n_obs: d.n(),
        n_instruments: d.k_excluded(),
        first_stage_r2_x100: first_stage.as_ref().map(|f| 100.0 * f.r2),
        first_stage_adj_r2_x100: first_stage.as_ref().map(|f| 100.0 * f.adj_r2),
        first_stage,
        estimates,
    })
}

/// Settings for a synthetic census-style extract with a planted return to
/// schooling. Schooling rises with quarter of birth; unobserved ability
/// raises schooling one for one and wages by `ability_wage_effect`, which
/// biases OLS upward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticCensus {
    pub n: usize,
    pub return_to_schooling: f64,
    /// Schooling gain per quarter of birth.
    pub quarter_effect: f64,
    pub ability_wage_effect: f64,
    pub n_years: usize,
    /// 0 omits the state column.
    pub n_states: usize,
}

impl SyntheticCensus {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            return_to_schooling: 0.08,
            quarter_effect: 0.5,
            ability_wage_effect: 0.01,
            n_years: 10,
            n_states: 0,
        }
    }

    pub fn write_csv<W: Write>(&self, seed: u64, out: W) -> Result<()> {
        let mut rng = seeded_rng(seed);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["lwage", "educ", "qob", "yob"];
        if self.n_states > 0 {
            header.push("sob");
        }
        w.write_record(&header)?;
        for _ in 0..self.n {
            let qob = rng.random_range(1..=4u32);
            let yob = 1930 + rng.random_range(0..self.n_years.max(1)) as u32;
            let sob = if self.n_states > 0 {
                rng.random_range(1..=self.n_states)
            } else {
                0
            };
            let ability: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            let cohort = (yob - 1930) as f64;
            let educ = 12.0
                + self.quarter_effect * (qob - 1) as f64
                + 0.05 * cohort
                + 0.1 * (sob % 3) as f64
                + ability
                + v;
            let lwage = 5.0
                + self.return_to_schooling * educ
                + 0.01 * cohort
                + self.ability_wage_effect * ability
                + 0.3 * e;
            let mut rec = vec![
                lwage.to_string(),
                educ.to_string(),
                qob.to_string(),
                yob.to_string(),
            ];
            if self.n_states > 0 {
                rec.push(sob.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, seed: u64) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(seed, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

/// Schema for [`SyntheticCensus`] output: quarter-of-birth instruments, year
/// (and optionally state) controls, and quarter interactions with each
/// control listed in `interact_with`.
pub fn census_spec(with_state: bool, interact_with: &[&str]) -> ColumnSpec {
    let col = |name: &str, role| ColumnRole {
        name: name.to_string(),
        role,
        reference: None,
    };
    let mut columns = vec![
        col("lwage", Role::Outcome),
        col("educ", Role::Endogenous),
        col("qob", Role::InstrumentCategorical),
        col("yob", Role::ControlCategorical),
    ];
    if with_state {
        columns.push(col("sob", Role::ControlCategorical));
    }
    ColumnSpec {
        columns,
        interactions: interact_with
            .iter()
            .map(|b| Interaction {
                a: "qob".into(),
                b: b.to_string(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str =
        "lwage,educ,qob,yob\n5.1,12,1,1930\n5.3,14,2,1931\n5.0,11,3,1930\n5.6,16,4,1931\n";

    fn toy_spec() -> ColumnSpec {
        census_spec(false, &[])
    }

    #[test]
    fn reads_toy_file() {
        let t = read_csv_from(TOY.as_bytes(), &toy_spec()).unwrap();
        assert_eq!(t.n_rows(), 4);
        assert_eq!(
            t.column("educ"),
            Some(&ColumnData::Numeric(vec![12.0, 14.0, 11.0, 16.0]))
        );
    }

    #[test]
    fn missing_column_is_schema_mismatch() {
        let text = "lwage,educ,qob\n5.1,12,1\n";
        assert!(matches!(
            read_csv_from(text.as_bytes(), &toy_spec()),
            Err(IvError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn bad_numeric_cell_reports_row() {
        let text = "lwage,educ,qob,yob\n5.1,12,1,1930\n5.3,14,2,1931\nabc,11,3,1930\n";
        match read_csv_from(text.as_bytes(), &toy_spec()) {
            Err(IvError::ParseError { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "lwage");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file() {
        let p = Path::new("/nonexistent/ivkit/input.csv");
        assert!(matches!(
            read_csv(p, &toy_spec()),
            Err(IvError::FileNotFound(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let bad = r#"{"columns":[{"name":"y","role":"outcome"}]}"#;
        assert!(matches!(
            ColumnSpec::from_json(bad),
            Err(IvError::SchemaMismatch(_))
        ));
        let bad = r#"{"columns":[{"name":"y","role":"outcome"},{"name":"y","role":"endogenous"}]}"#;
        assert!(matches!(
            ColumnSpec::from_json(bad),
            Err(IvError::SchemaMismatch(_))
        ));
        let unknown = r#"{"columns":[], "extra": 1}"#;
        assert!(ColumnSpec::from_json(unknown).is_err());
    }

    #[test]
    fn single_level_categorical() {
        let text = "lwage,educ,qob,yob\n5.1,12,1,1930\n5.3,14,2,1930\n5.0,11,3,1930\n5.6,16,4,1930\n5.2,13,1,1930\n";
        let t = read_csv_from(text.as_bytes(), &toy_spec()).unwrap();
        assert!(
            matches!(build_design(&t, &toy_spec()), Err(IvError::SingleLevelCategorical(c)) if c == "yob")
        );
    }

    #[test]
    fn numeric_levels_sort_numerically() {
        let v: Vec<String> = ["10", "9", "100", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(sorted_levels(&v), vec!["9", "10", "100"]);
        let v: Vec<String> = ["b", "a", "10"].iter().map(|s| s.to_string()).collect();
        assert_eq!(sorted_levels(&v), vec!["10", "a", "b"]);
    }

    #[test]
    fn interaction_counts() {
        let cfg = SyntheticCensus::new(3000);
        let text = cfg.to_csv_string(4).unwrap();
        let spec = census_spec(false, &["yob"]);
        let t = read_csv_from(text.as_bytes(), &spec).unwrap();
        let d = build_design(&t, &spec).unwrap();
        assert_eq!(d.dataset.k_excluded(), 30);
        assert_eq!(d.dataset.n_exog(), 10);
        let labels: BTreeSet<String> = d.z_labels.iter().map(ToString::to_string).collect();
        assert_eq!(labels.len(), d.z_labels.len());
        assert!(labels.contains("qob=2:yob=1931"));
        assert_eq!(
            d.references,
            vec![
                ReferenceLevel {
                    variable: "qob".into(),
                    level: "1".into()
                },
                ReferenceLevel {
                    variable: "yob".into(),
                    level: "1930".into()
                },
            ]
        );
    }
}
