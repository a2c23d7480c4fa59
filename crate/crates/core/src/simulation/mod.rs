//! Data-generating processes and the Monte-Carlo harness.

mod dgp;
mod engine;
mod rng;
mod sweep;

pub use dgp::{
    generate, generate_with, model_preset, normalize, r2_limit, DgpConfig, InstrumentDistribution,
    NormalizedFirstStage, PRESET_N,
};
pub use engine::{
    quantile_type1, run_mc, run_mc_with, simulate_replications, summarize, EstimatorSummary,
    McOptions, McSummary, ReplicationDraw, SlopeEstimate, QUANTILE_PROBS, Z_975,
};
pub use rng::{derive_seed, replication_rng, seeded_rng, splitmix64};
pub use sweep::{
    run_sweep, SweepAxis, SweepBase, SweepRow, SweepSpec, DEFAULT_SWEEP_REPS, DEFAULT_SWEEP_SIZES,
};
