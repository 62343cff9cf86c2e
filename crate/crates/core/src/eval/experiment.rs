use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{mean_std, threshold_at_fmr, tmr_at_threshold};
use crate::eval::scores::{collect_scores, ScoreSet};
use crate::protocol::{build_protocol, IdentityDataset, Scenario};
use crate::randortho::UserKey;
use crate::scalar::Scalar;
use crate::schemes::SchemeConfig;

pub const DEFAULT_TARGET_FMR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub key_seed: UserKey,
    pub threshold: f64,
    pub tmr: f64,
    pub genuine_count: usize,
    pub impostor_count: usize,
}

/// TMR at a fixed FMR over repeated trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmrReport {
    pub scheme: String,
    pub scenario: Scenario,
    pub target_fmr: f64,
    pub trials: Vec<TrialOutcome>,
    pub tmr_mean: f64,
    pub tmr_std: f64,
}

pub fn run_verification_experiment<T: Scalar>(
    ds: &IdentityDataset<T>,
    scheme: &SchemeConfig,
    scenario: Scenario,
    n_trials: usize,
    base_seed: UserKey,
    target_fmr: f64,
) -> Result<TmrReport> {
    run_verification_experiment_with(ds, scheme, scenario, n_trials, base_seed, target_fmr, |_, _| {})
}

/// Trial `i` builds the protocol with key seed `base_seed.derive(i)`, collects
/// scores, and picks its own threshold at `target_fmr` from its impostor
/// scores. `sink` sees each trial's scores.
pub fn run_verification_experiment_with<T: Scalar>(
    ds: &IdentityDataset<T>,
    scheme: &SchemeConfig,
    scenario: Scenario,
    n_trials: usize,
    base_seed: UserKey,
    target_fmr: f64,
    mut sink: impl FnMut(usize, &ScoreSet),
) -> Result<TmrReport> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be >= 1".into()));
    }
    let mut trials = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let key_seed = base_seed.derive(trial as u64);
        let protocol = build_protocol(ds, scenario, key_seed)?;
        let scores = collect_scores(ds, &protocol, scheme)?;
        let threshold = threshold_at_fmr(&scores.impostor, target_fmr)?;
        let tmr = tmr_at_threshold(&scores.genuine, threshold)?;
        log::info!(
            "{} {:?} trial {trial}: threshold {threshold:.4}, TMR {tmr:.4}",
            scheme.name(),
            scenario
        );
        sink(trial, &scores);
        trials.push(TrialOutcome {
            trial,
            key_seed,
            threshold,
            tmr,
            genuine_count: scores.genuine.len(),
            impostor_count: scores.impostor.len(),
        });
    }
    let tmrs: Vec<f64> = trials.iter().map(|t| t.tmr).collect();
    let (tmr_mean, tmr_std) = mean_std(&tmrs);
    Ok(TmrReport {
        scheme: scheme.name().to_string(),
        scenario,
        target_fmr,
        trials,
        tmr_mean,
        tmr_std,
    })
}
