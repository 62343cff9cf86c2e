use crate::error::{Error, Result};

/// Smallest threshold `t` with `#{s > t} / n <= target_fmr`.
///
/// The result is always one of the impostor scores (empirical quantile, no
/// interpolation). Warns when there are too few scores to resolve the target.
pub fn threshold_at_fmr(impostor: &[f64], target_fmr: f64) -> Result<f64> {
    if impostor.is_empty() {
        return Err(Error::EmptyDistribution("impostor"));
    }
    if !(target_fmr > 0.0 && target_fmr < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target FMR must lie in (0, 1), got {target_fmr}"
        )));
    }
    let n = impostor.len();
    if (n as f64) * target_fmr < 1.0 {
        log::warn!(
            "{n} impostor scores cannot resolve FMR {target_fmr}; threshold is the maximum score"
        );
    }
    let mut sorted = impostor.to_vec();
    sorted.sort_by(f64::total_cmp);
    // largest k with k / n <= target_fmr: the count allowed strictly above
    let frac = |k: usize| k as f64 / n as f64;
    let mut allowed = ((target_fmr * n as f64).floor() as usize).min(n - 1);
    while allowed + 1 < n && frac(allowed + 1) <= target_fmr {
        allowed += 1;
    }
    while allowed > 0 && frac(allowed) > target_fmr {
        allowed -= 1;
    }
    Ok(sorted[n - 1 - allowed])
}

/// Fraction of scores strictly above `t`.
fn fraction_above(scores: &[f64], t: f64, what: &'static str) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyDistribution(what));
    }
    Ok(scores.iter().filter(|&&s| s > t).count() as f64 / scores.len() as f64)
}

pub fn tmr_at_threshold(genuine: &[f64], t: f64) -> Result<f64> {
    fraction_above(genuine, t, "genuine")
}

pub fn fmr_at_threshold(impostor: &[f64], t: f64) -> Result<f64> {
    fraction_above(impostor, t, "impostor")
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
