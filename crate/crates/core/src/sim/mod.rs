//! Reproducible Monte Carlo tournaments.
//!
//! Every replicate owns a counter-based random stream keyed by the run seed
//! and the replicate index, so a replicate can be regenerated in isolation
//! and the report does not depend on how replicates are scheduled.

mod experiment;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use experiment::{
    exceedance_count, run_experiment, ExceedanceSummary, HuberSummary, OrderStatSummary, SimConfig, SimReport,
    CHUNK_REPLICATES, ORDER_HIST_HI, ORDER_HIST_LO, ORDER_HIST_WIDTH,
};
pub use rng::Stream;
pub use sampler::{simulate_tournament, AliasTable, TournamentSampler};
pub use stats::{empirical_tv, BinnedHistogram, CountHistogram, W_K_MAX};
