//! Command-line front end.
//!
//! Settings resolve as command-line flag, then `--config` TOML file, then
//! built-in default. Results go to `--output` or standard output; warnings
//! and errors go to standard error.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or numerical error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    ar_confidence_set, first_stage_f_with, ArGrid, FirstStageOptions, RULE_OF_THUMB_F,
};
use crate::error::IvError;
use crate::estimators::{fit, fit_jive, Estimator, JiveMethod};
use crate::ingestion::{build_design, read_csv, run_specification, BuiltDesign, ColumnSpec};
use crate::report::{
    ar_table, diagnostics_table, draws_table, estimates_table, json_document, mc_summary_table,
    specification_table, sweep_table, DiagnosticsRecord, EstimateRecord, Table,
};
use crate::simulation::{
    model_preset, run_sweep, simulate_replications, summarize, DgpConfig, InstrumentDistribution,
    McOptions, McSummary, ReplicationDraw, SweepAxis, SweepBase, SweepSpec, DEFAULT_SWEEP_REPS,
};

pub const DEFAULT_SEED: u64 = 12345;
pub const DEFAULT_MC_REPS: usize = 5000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JiveArg {
    Accelerated,
    Naive,
}

#[derive(Debug, Parser)]
#[command(
    name = "ivkit",
    version,
    about = "Instrumental-variables estimation, weak-instrument diagnostics and Monte-Carlo studies"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write results here instead of standard output.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for simulations (0 = all cores). Never changes results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Master seed (64-bit unsigned).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON column specification.
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit estimators to a CSV data set.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated subset of ols,2sls,liml,jive.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<Estimator>>,
        /// Leave-one-out algorithm for JIVE.
        #[arg(long, value_enum, default_value_t = JiveArg::Accelerated)]
        jive: JiveArg,
        /// Report every coefficient instead of the endogenous one only.
        #[arg(long)]
        all_terms: bool,
    },
    /// First-stage F, partial R^2 and weak-instrument verdict.
    Diagnose {
        #[command(flatten)]
        data: DataArgs,
        /// Disable the F > 10 fallback when no critical-value row exists.
        #[arg(long)]
        no_rule_of_thumb: bool,
    },
    /// Anderson-Rubin confidence set by grid inversion.
    ArCi {
        #[command(flatten)]
        data: DataArgs,
        /// Significance level.
        #[arg(long)]
        alpha: Option<f64>,
        /// Lower end of the slope grid (defaults to a window around 2SLS).
        #[arg(long, requires_all = ["grid_hi", "grid_step"])]
        grid_lo: Option<f64>,
        /// Upper end of the slope grid.
        #[arg(long, requires_all = ["grid_lo", "grid_step"])]
        grid_hi: Option<f64>,
        /// Grid spacing.
        #[arg(long, requires_all = ["grid_lo", "grid_hi"])]
        grid_step: Option<f64>,
    },
    /// Monte-Carlo study of a preset model or a custom design.
    Simulate {
        /// Preset model 1-4.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4), conflicts_with_all = ["k", "r2", "rho"])]
        model: Option<u8>,
        /// Custom design: instrument count including the intercept.
        #[arg(long, requires_all = ["r2", "rho"])]
        k: Option<usize>,
        /// Custom design: limiting first-stage R^2.
        #[arg(long, requires_all = ["k", "rho"])]
        r2: Option<f64>,
        /// Custom design: correlation of the structural errors.
        #[arg(long, requires_all = ["k", "r2"])]
        rho: Option<f64>,
        /// Sample size (defaults to 200).
        #[arg(long)]
        n: Option<usize>,
        /// Monte-Carlo replications.
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated subset of ols,2sls,liml,jive.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<Estimator>>,
        /// Draw instruments uniformly on (-sqrt 3, sqrt 3).
        #[arg(long)]
        uniform_instruments: bool,
        /// Also write per-replication estimates (CSV) to this path.
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Median bias over a one-dimensional design grid and sample sizes.
    Sweep {
        /// Swept parameter: rho, r2_limit or k.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values (default grid per axis).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Monte-Carlo replications.
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated subset of ols,2sls,liml,jive.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<Estimator>>,
        #[arg(long, default_value_t = 7)]
        base_k: usize,
        #[arg(long, default_value_t = 0.1)]
        base_r2: f64,
        #[arg(long, default_value_t = 0.9)]
        base_rho: f64,
    },
    /// All four preset models in one summary table.
    Replicate {
        /// Monte-Carlo replications.
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated subset of ols,2sls,liml,jive.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<Estimator>>,
    },
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub reps: Option<usize>,
    pub estimators: Option<String>,
    pub alpha: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub sizes: Option<Vec<usize>>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<IvError> for Failure {
    fn from(e: IvError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

struct Settings {
    format: Format,
    output: Option<PathBuf>,
    workers: usize,
    seed: u64,
    file: FileConfig,
}

impl Settings {
    fn resolve(common: &Common) -> Result<Self, Failure> {
        let file = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
                toml::from_str(&text)
                    .map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        Ok(Self {
            format: common.format.or(file.format).unwrap_or_default(),
            output: common.output.clone(),
            workers: common.workers.or(file.workers).unwrap_or(0),
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            file,
        })
    }

    fn reps(&self, flag: Option<usize>, default: usize) -> Result<usize, Failure> {
        let reps = flag.or(self.file.reps).unwrap_or(default);
        if reps == 0 {
            return Err(Failure::Usage("--reps must be at least 1".into()));
        }
        Ok(reps)
    }

    fn estimators(&self, flag: Option<Vec<Estimator>>) -> Result<Vec<Estimator>, Failure> {
        match (flag, &self.file.estimators) {
            (Some(v), _) => {
                let mut out: Vec<Estimator> = Vec::with_capacity(v.len());
                for e in v {
                    if !out.contains(&e) {
                        out.push(e);
                    }
                }
                Ok(out)
            }
            (None, Some(s)) => Estimator::parse_list(s)
                .map_err(|e| Failure::Usage(format!("config estimators: {e}"))),
            (None, None) => Ok(Estimator::ALL.to_vec()),
        }
    }
}

fn load_design(data: &DataArgs) -> Result<BuiltDesign, Failure> {
    let spec = ColumnSpec::from_path(&data.schema)?;
    let table = read_csv(&data.input, &spec)?;
    Ok(build_design(&table, &spec)?)
}

fn emit<T: Serialize>(
    settings: &Settings,
    kind: &str,
    table: &Table,
    data: &T,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let text = match settings.format {
        Format::Csv => table.to_csv_string()?,
        Format::Json => json_document(kind, data)?,
    };
    match &settings.output {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_file(path: &Path, table: &Table) -> Result<(), Failure> {
    std::fs::write(path, table.to_csv_string()?)?;
    Ok(())
}

fn warn_failures(
    label: &str,
    estimators: &[Estimator],
    draws: &[ReplicationDraw],
    stderr: &mut dyn Write,
) {
    for (slot, e) in estimators.iter().enumerate() {
        let failed: Vec<u64> = draws
            .iter()
            .filter(|d| d.estimates[slot].is_none())
            .map(|d| d.replication)
            .collect();
        if let Some(first) = failed.first() {
            let _ = writeln!(
                stderr,
                "warning: {label}: {e} failed in {} of {} replications (first at replication {first})",
                failed.len(),
                draws.len()
            );
        }
    }
}

#[derive(Serialize)]
struct LabeledSummary<'a> {
    model: &'a str,
    summary: &'a McSummary,
}

fn run_mc_labeled(
    settings: &Settings,
    runs: Vec<(String, DgpConfig)>,
    reps: usize,
    estimators: &[Estimator],
    draws_path: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let opts = McOptions {
        reps,
        estimators: estimators.to_vec(),
        master_seed: settings.seed,
        workers: settings.workers,
    };
    let mut summaries = Vec::with_capacity(runs.len());
    for (label, cfg) in &runs {
        let draws = simulate_replications(cfg, &opts)?;
        warn_failures(label, estimators, &draws, stderr);
        if let Some(path) = draws_path {
            write_file(path, &draws_table(&draws, estimators))?;
        }
        summaries.push((label.clone(), summarize(cfg, &opts, &draws)));
    }
    let refs: Vec<(String, &McSummary)> = summaries.iter().map(|(l, s)| (l.clone(), s)).collect();
    let json: Vec<LabeledSummary> = summaries
        .iter()
        .map(|(l, s)| LabeledSummary {
            model: l,
            summary: s,
        })
        .collect();
    emit(
        settings,
        "mc_summary",
        &mc_summary_table(&refs),
        &json,
        stdout,
    )
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let settings = Settings::resolve(&cli.common)?;
    match cli.command {
        Command::Estimate {
            data,
            estimators,
            jive,
            all_terms,
        } => {
            let estimators = settings.estimators(estimators)?;
            let design = load_design(&data)?;
            let method = match jive {
                JiveArg::Accelerated => JiveMethod::Accelerated,
                JiveArg::Naive => JiveMethod::Naive,
            };
            if all_terms || method == JiveMethod::Naive {
                let d = &design.dataset;
                let mut records = Vec::new();
                for &e in &estimators {
                    let r = match e {
                        Estimator::Jive => fit_jive(d, method),
                        _ => fit(d, e),
                    }
                    .map_err(|err| Failure::Data(format!("{e}: {err}")))?;
                    records.push(EstimateRecord::new(d, &r));
                }
                emit(
                    &settings,
                    "estimates",
                    &estimates_table(&records),
                    &records,
                    stdout,
                )
            } else {
                let rep = run_specification(&design, &estimators)?;
                emit(
                    &settings,
                    "specification",
                    &specification_table(&rep),
                    &rep,
                    stdout,
                )
            }
        }
        Command::Diagnose {
            data,
            no_rule_of_thumb,
        } => {
            let design = load_design(&data)?;
            let opts = FirstStageOptions {
                rule_of_thumb: if no_rule_of_thumb {
                    None
                } else {
                    Some(RULE_OF_THUMB_F)
                },
            };
            let d = &design.dataset;
            let rec = DiagnosticsRecord::new(d, first_stage_f_with(d, opts)?);
            emit(
                &settings,
                "diagnostics",
                &diagnostics_table(&rec),
                &rec,
                stdout,
            )
        }
        Command::ArCi {
            data,
            alpha,
            grid_lo,
            grid_hi,
            grid_step,
        } => {
            let alpha = alpha.or(settings.file.alpha).unwrap_or(DEFAULT_ALPHA);
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Failure::Usage(format!(
                    "--alpha must lie in (0, 1), got {alpha}"
                )));
            }
            let design = load_design(&data)?;
            let d = &design.dataset;
            let grid = match (grid_lo, grid_hi, grid_step) {
                (Some(lo), Some(hi), Some(step)) => ArGrid::new(lo, hi, step)?,
                _ => ArGrid::around_2sls(d)?,
            };
            let set = ar_confidence_set(d, alpha, grid)?;
            if set.unbounded {
                let _ = writeln!(
                    stderr,
                    "warning: both grid endpoints accepted; the set may extend past the grid"
                );
            }
            emit(
                &settings,
                "ar_confidence_set",
                &ar_table(&set),
                &set,
                stdout,
            )
        }
        Command::Simulate {
            model,
            k,
            r2,
            rho,
            n,
            reps,
            estimators,
            uniform_instruments,
            draws,
        } => {
            let reps = settings.reps(reps, DEFAULT_MC_REPS)?;
            let estimators = settings.estimators(estimators)?;
            let (label, mut cfg) = match (model, k, r2, rho) {
                (Some(id), ..) => (format!("model{id}"), model_preset(id)?),
                (None, Some(k), Some(r2), Some(rho)) => (
                    "custom".to_string(),
                    DgpConfig::from_r2_rho(k, r2, rho, n.unwrap_or(crate::simulation::PRESET_N))?,
                ),
                _ => {
                    return Err(Failure::Usage(
                        "give --model, or all of --k, --r2 and --rho".into(),
                    ))
                }
            };
            if let Some(n) = n {
                cfg.n = n;
            }
            if uniform_instruments {
                cfg.instruments = InstrumentDistribution::Uniform;
            }
            run_mc_labeled(
                &settings,
                vec![(label, cfg)],
                reps,
                &estimators,
                draws.as_deref(),
                stdout,
                stderr,
            )
        }
        Command::Sweep {
            axis,
            values,
            sizes,
            reps,
            estimators,
            base_k,
            base_r2,
            base_rho,
        } => {
            let mut spec = SweepSpec::new(axis, settings.seed);
            if let Some(v) = values.or_else(|| settings.file.values.clone()) {
                spec.values = v;
            }
            if let Some(s) = sizes.or_else(|| settings.file.sizes.clone()) {
                spec.sizes = s;
            }
            spec.reps = settings.reps(reps, DEFAULT_SWEEP_REPS)?;
            spec.estimators = settings.estimators(estimators)?;
            spec.base = SweepBase {
                k: base_k,
                r2_limit: base_r2,
                rho: base_rho,
            };
            spec.workers = settings.workers;
            let rows = run_sweep(&spec)?;
            emit(&settings, "sweep", &sweep_table(&rows), &rows, stdout)
        }
        Command::Replicate { reps, estimators } => {
            let reps = settings.reps(reps, DEFAULT_MC_REPS)?;
            let estimators = settings.estimators(estimators)?;
            let runs = (1..=4u8)
                .map(|id| Ok((format!("model{id}"), model_preset(id)?)))
                .collect::<Result<Vec<_>, IvError>>()?;
            run_mc_labeled(&settings, runs, reps, &estimators, None, stdout, stderr)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}

pub fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code)
}
