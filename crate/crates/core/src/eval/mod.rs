//! Score collection, verification metrics, unlinkability and timing.

mod bench;
mod experiment;
mod metrics;
mod scores;
mod unlinkability;

pub use bench::{timing_benchmark, BenchReport, BenchRow};
pub use experiment::{
    run_verification_experiment, run_verification_experiment_with, TmrReport, TrialOutcome,
    DEFAULT_TARGET_FMR,
};
pub use metrics::{fmr_at_threshold, mean_std, threshold_at_fmr, tmr_at_threshold};
pub use scores::{collect_linkage_scores, collect_scores, linkage_key, ScoreSet};
pub use unlinkability::{unlinkability_report, UnlinkabilityReport, DEFAULT_BINS};
