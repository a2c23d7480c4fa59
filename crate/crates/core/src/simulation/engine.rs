//! Parallel Monte-Carlo driver.
//!
//! Replications are mapped over a dedicated rayon pool and collected in
//! replication order, so every summary is bit-identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use super::dgp::{generate, DgpConfig};
use super::rng::derive_seed;
use crate::diagnostics::{concentration_parameter, first_stage_f};
use crate::error::{IvError, Result};
use crate::estimators::{fit, Estimator};

/// Two-sided normal critical value used for the coverage intervals.
pub const Z_975: f64 = 1.96;

/// Probabilities of the reported quantiles.
pub const QUANTILE_PROBS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct McOptions {
    pub reps: usize,
    pub estimators: Vec<Estimator>,
    pub master_seed: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl McOptions {
    pub fn new(reps: usize, estimators: &[Estimator], master_seed: u64) -> Self {
        Self {
            reps,
            estimators: estimators.to_vec(),
            master_seed,
            workers: 0,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Slope estimate and its standard error from one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub beta1: f64,
    pub se: f64,
}

/// Everything recorded for a single replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationDraw {
    pub replication: u64,
    pub seed: u64,
    pub first_stage_f: Option<f64>,
    pub concentration: f64,
    /// One entry per requested estimator, `None` when the fit failed.
    pub estimates: Vec<Option<SlopeEstimate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub successes: usize,
    pub failures: usize,
    /// Quantiles of `beta1_hat - beta1` at [`QUANTILE_PROBS`].
    pub quantiles: Option<[f64; 5]>,
    pub median_bias: Option<f64>,
    pub mean_bias: Option<f64>,
    pub coverage95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub config: DgpConfig,
    pub reps: usize,
    pub master_seed: u64,
    pub estimators: Vec<EstimatorSummary>,
    pub mean_first_stage_f: Option<f64>,
    pub mean_concentration: f64,
}

impl McSummary {
    pub fn get(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|s| s.estimator == estimator)
    }
}

/// Order-statistic quantile of sorted data: the `ceil(p n)`-th smallest value
/// (the minimum for `p = 0`). For even `n` the median is the lower middle value.
pub fn quantile_type1(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let n = sorted.len();
    let idx = ((p * n as f64).ceil() as usize)
        .saturating_sub(1)
        .min(n - 1);
    Some(sorted[idx])
}

pub(crate) fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| IvError::InvalidConfig(format!("cannot start worker pool: {e}")))
}

fn one_replication(
    cfg: &DgpConfig,
    estimators: &[Estimator],
    master_seed: u64,
    r: u64,
) -> Result<ReplicationDraw> {
    let seed = derive_seed(master_seed, r);
    let d = generate(cfg, seed)?;
    // Noiseless designs have no defined concentration; report zero there.
    let concentration = if cfg.sigma_eta2() > 0.0 {
        let pi = nalgebra::DVector::from_column_slice(&cfg.pi_excluded);
        concentration_parameter(&pi, &d.z_excluded(), cfg.sigma_eta2())?
    } else {
        0.0
    };
    let first_stage = first_stage_f(&d).ok().map(|r| r.f_stat);
    let estimates = estimators
        .iter()
        .map(|&e| {
            fit(&d, e).ok().map(|res| SlopeEstimate {
                beta1: res.beta[1],
                se: res.std_errors[1],
            })
        })
        .collect();
    Ok(ReplicationDraw {
        replication: r,
        seed,
        first_stage_f: first_stage,
        concentration,
        estimates,
    })
}

/// Runs every replication and returns the per-replication records in order.
pub fn simulate_replications(cfg: &DgpConfig, opts: &McOptions) -> Result<Vec<ReplicationDraw>> {
    if opts.reps == 0 {
        return Err(IvError::InvalidConfig("reps must be at least 1".into()));
    }
    if opts.estimators.is_empty() {
        return Err(IvError::InvalidConfig("no estimators requested".into()));
    }
    cfg.validate()?;
    let pool = build_pool(opts.workers)?;
    pool.install(|| replications_in_current_pool(cfg, opts))
}

pub(crate) fn replications_in_current_pool(
    cfg: &DgpConfig,
    opts: &McOptions,
) -> Result<Vec<ReplicationDraw>> {
    (0..opts.reps as u64)
        .into_par_iter()
        .map(|r| one_replication(cfg, &opts.estimators, opts.master_seed, r))
        .collect()
}

/// Aggregates replication records. Failed fits are excluded from the
/// statistics and counted.
pub fn summarize(cfg: &DgpConfig, opts: &McOptions, draws: &[ReplicationDraw]) -> McSummary {
    let estimators = opts
        .estimators
        .iter()
        .enumerate()
        .map(|(slot, &estimator)| {
            let ok: Vec<SlopeEstimate> = draws.iter().filter_map(|d| d.estimates[slot]).collect();
            let mut errors: Vec<f64> = ok.iter().map(|s| s.beta1 - cfg.beta1).collect();
            errors.sort_by(f64::total_cmp);
            let quantiles = if errors.is_empty() {
                None
            } else {
                let mut q = [0.0; 5];
                for (slot, p) in q.iter_mut().zip(QUANTILE_PROBS) {
                    *slot = quantile_type1(&errors, p).expect("non-empty");
                }
                Some(q)
            };
            let n_ok = ok.len() as f64;
            let (mean_bias, coverage95) = if ok.is_empty() {
                (None, None)
            } else {
                let covered = ok
                    .iter()
                    .filter(|s| (s.beta1 - cfg.beta1).abs() <= Z_975 * s.se)
                    .count() as f64;
                (
                    Some(errors.iter().sum::<f64>() / n_ok),
                    Some(covered / n_ok),
                )
            };
            EstimatorSummary {
                estimator,
                successes: ok.len(),
                failures: draws.len() - ok.len(),
                quantiles,
                median_bias: quantiles.map(|q| q[2]),
                mean_bias,
                coverage95,
            }
        })
        .collect();
    let fs: Vec<f64> = draws.iter().filter_map(|d| d.first_stage_f).collect();
    let mean_first_stage_f = if fs.is_empty() {
        None
    } else {
        Some(fs.iter().sum::<f64>() / fs.len() as f64)
    };
    let mean_concentration =
        draws.iter().map(|d| d.concentration).sum::<f64>() / draws.len().max(1) as f64;
    McSummary {
        config: cfg.clone(),
        reps: opts.reps,
        master_seed: opts.master_seed,
        estimators,
        mean_first_stage_f,
        mean_concentration,
    }
}

pub fn run_mc_with(cfg: &DgpConfig, opts: &McOptions) -> Result<McSummary> {
    let draws = simulate_replications(cfg, opts)?;
    Ok(summarize(cfg, opts, &draws))
}

/// Monte-Carlo study on all available cores.
pub fn run_mc(
    cfg: &DgpConfig,
    reps: usize,
    estimators: &[Estimator],
    master_seed: u64,
) -> Result<McSummary> {
    run_mc_with(cfg, &McOptions::new(reps, estimators, master_seed))
}
