use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::scores::ScoreSet;

pub const DEFAULT_BINS: usize = 100;

/// Local and global linkability of mated vs non-mated score distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlinkabilityReport {
    /// Bin centres.
    pub score_grid: Vec<f64>,
    pub local_measure: Vec<f64>,
    pub global_measure: f64,
    pub omega: f64,
    pub bins: usize,
    pub mated_density: Vec<f64>,
    pub non_mated_density: Vec<f64>,
    pub mated_count: usize,
    pub non_mated_count: usize,
}

/// Histogram densities of both populations on one shared grid spanning the
/// pooled score range. The local measure is
/// `D(s) = 2 w LR(s) / (1 + w LR(s)) - 1` where `w LR(s) > 1`, else 0, with
/// `LR = p(s|mated) / p(s|non-mated)`; a bin holding mated mass but no
/// non-mated mass has `D(s) = 1`. The global measure weights `D(s)` by the
/// mated density.
pub fn unlinkability_report(s: &ScoreSet, omega: f64, bins: usize) -> Result<UnlinkabilityReport> {
    if s.mated.is_empty() {
        return Err(Error::EmptyDistribution("mated"));
    }
    if s.non_mated.is_empty() {
        return Err(Error::EmptyDistribution("non-mated"));
    }
    if bins < 10 {
        return Err(Error::InvalidParameter(format!("need >= 10 bins, got {bins}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")));
    }
    let all = s.mated.iter().chain(&s.non_mated);
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
        (a.min(x), b.max(x))
    });
    if hi - lo <= 0.0 {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let bin_of = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let hist = |xs: &[f64]| {
        let mut h = vec![0.0; bins];
        for &x in xs {
            h[bin_of(x)] += 1.0;
        }
        let n = xs.len() as f64;
        h.iter_mut().for_each(|c| *c /= n * width);
        h
    };
    let pm = hist(&s.mated);
    let pn = hist(&s.non_mated);
    let local: Vec<f64> = pm
        .iter()
        .zip(&pn)
        .map(|(&m, &n)| {
            if m == 0.0 {
                0.0
            } else if n == 0.0 {
                1.0
            } else {
                let wlr = omega * m / n;
                if wlr > 1.0 {
                    2.0 * wlr / (1.0 + wlr) - 1.0
                } else {
                    0.0
                }
            }
        })
        .collect();
    let global = local
        .iter()
        .zip(&pm)
        .map(|(d, m)| d * m * width)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Ok(UnlinkabilityReport {
        score_grid: (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        local_measure: local,
        global_measure: global,
        omega,
        bins,
        mated_density: pm,
        non_mated_density: pn,
        mated_count: s.mated.len(),
        non_mated_count: s.non_mated.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randortho::{KeyStream, UserKey};

    fn set(mated: Vec<f64>, non_mated: Vec<f64>) -> ScoreSet {
        ScoreSet {
            mated,
            non_mated,
            ..ScoreSet::default()
        }
    }

    #[test]
    fn identical_lists_are_unlinkable() {
        let mut st = KeyStream::new(UserKey(1), 0);
        let xs: Vec<f64> = (0..2000).map(|_| st.next_normal()).collect();
        let r = unlinkability_report(&set(xs.clone(), xs), 1.0, 100).unwrap();
        assert!(r.global_measure < 0.02);
        assert_eq!(r.local_measure.len(), 100);
    }

    #[test]
    fn disjoint_supports_are_fully_linkable() {
        let mated: Vec<f64> = (0..500).map(|i| 0.9 + i as f64 * 1e-4).collect();
        let non: Vec<f64> = (0..500).map(|i| 0.1 + i as f64 * 1e-4).collect();
        let r = unlinkability_report(&set(mated, non), 1.0, 100).unwrap();
        assert_eq!(r.global_measure, 1.0);
    }

    #[test]
    fn constant_scores_do_not_divide_by_zero() {
        let r = unlinkability_report(&set(vec![0.5; 10], vec![0.5; 10]), 1.0, 10).unwrap();
        assert_eq!(r.global_measure, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            unlinkability_report(&set(vec![], vec![1.0]), 1.0, 100),
            Err(Error::EmptyDistribution("mated"))
        ));
        assert!(unlinkability_report(&set(vec![1.0], vec![1.0]), 1.0, 5).is_err());
        assert!(unlinkability_report(&set(vec![1.0], vec![1.0]), 0.0, 50).is_err());
    }

    #[test]
    fn higher_prior_never_lowers_linkability() {
        let mut st = KeyStream::new(UserKey(2), 0);
        let mated: Vec<f64> = (0..3000).map(|_| 0.3 + st.next_normal()).collect();
        let non: Vec<f64> = (0..3000).map(|_| st.next_normal()).collect();
        let s = set(mated, non);
        let a = unlinkability_report(&s, 1.0, 50).unwrap().global_measure;
        let b = unlinkability_report(&s, 4.0, 50).unwrap().global_measure;
        assert!(b >= a && a > 0.0);
    }
}
