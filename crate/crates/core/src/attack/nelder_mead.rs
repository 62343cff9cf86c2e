//! Nelder-Mead simplex minimizer with the dimension-adaptive coefficients of
//! Gao and Han (2012): reflection 1, expansion `1 + 2/n`, contraction
//! `0.75 - 1/(2n)`, shrink `1 - 1/n`.
//!
//! When the simplex collapses (value spread and diameter both below their
//! tolerances) without reaching `target`, the search restarts around the best
//! point with the initial step, at most `max_restarts` times and only while
//! the previous restart improved the best value.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop as soon as a value `<= target` is found.
    pub target: f64,
    pub initial_step: f64,
    pub ftol: f64,
    pub xtol: f64,
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 10_000,
            target: f64::NEG_INFINITY,
            initial_step: 0.05,
            ftol: 1e-14,
            xtol: 1e-10,
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub restarts: usize,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadOutcome {
    let n = x0.len();
    assert!(n >= 1, "nelder-mead needs at least one variable");
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (
        1.0,
        1.0 + 2.0 / nf,
        (0.75 - 1.0 / (2.0 * nf)).max(0.25),
        (1.0 - 1.0 / nf).max(0.5),
    );
    let mut f = Counted { f, evals: 0 };
    let mut best_x = x0.to_vec();
    let mut best_f = f.call(x0);
    let mut restarts = 0;

    'outer: loop {
        if best_f <= opts.target || f.evals >= opts.max_evals {
            break;
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_f));
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += opts.initial_step;
            let fx = f.call(&x);
            simplex.push((x, fx));
        }
        let start_f = best_f;
        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (fb, fw) = (simplex[0].1, simplex[n].1);
            if fb < best_f {
                best_f = fb;
                best_x.clone_from(&simplex[0].0);
            }
            if fb <= opts.target || f.evals >= opts.max_evals {
                break 'outer;
            }
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                })
                .fold(0.0, f64::max);
            if fw - fb <= opts.ftol * (1.0 + fb.abs()) && diameter <= opts.xtol {
                break;
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / nf;
                }
            }
            let worst = simplex[n].0.clone();
            let along = |t: &mut Vec<f64>, coef: f64, from: &[f64]| {
                for ((ti, ci), wi) in t.iter_mut().zip(&centroid).zip(from) {
                    *ti = ci + coef * (wi - ci);
                }
            };
            along(&mut trial, -alpha, &worst);
            let fr = f.call(&trial);
            if fr < fb {
                let reflected = trial.clone();
                let mut expanded = vec![0.0; n];
                along(&mut expanded, -alpha * beta, &worst);
                let fe = f.call(&expanded);
                simplex[n] = if fe < fr {
                    (expanded, fe)
                } else {
                    (reflected, fr)
                };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (trial.clone(), fr);
                continue;
            }
            let accepted = if fr < fw {
                // outside contraction
                along(&mut trial, -alpha * gamma, &worst);
                let fc = f.call(&trial);
                (fc <= fr).then_some(fc)
            } else {
                along(&mut trial, gamma, &worst);
                let fc = f.call(&trial);
                (fc < fw).then_some(fc)
            };
            if let Some(fc) = accepted {
                simplex[n] = (trial.clone(), fc);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for (x, fx) in simplex[1..].iter_mut() {
                for (xi, ai) in x.iter_mut().zip(&anchor) {
                    *xi = ai + delta * (*xi - ai);
                }
                *fx = f.call(x);
                if f.evals >= opts.max_evals {
                    break;
                }
            }
        }
        if restarts >= opts.max_restarts || !(best_f < start_f) && restarts > 0 {
            break;
        }
        restarts += 1;
    }
    NelderMeadOutcome {
        x: best_x,
        fx: best_f,
        evals: f.evals,
        restarts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_2d() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = minimize(
            rosen,
            &[-1.2, 1.0],
            &NelderMeadOptions {
                max_evals: 5000,
                initial_step: 0.5,
                ..Default::default()
            },
        );
        assert!((out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5, "{out:?}");
    }

    #[test]
    fn shifted_sphere_10d() {
        let c: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let out = minimize(
            f,
            &[0.0; 10],
            &NelderMeadOptions {
                max_evals: 20_000,
                initial_step: 0.3,
                ..Default::default()
            },
        );
        assert!(out.fx < 1e-12, "{out:?}");
    }

    #[test]
    fn stops_at_target_and_budget() {
        let f = |x: &[f64]| x[0].abs();
        let out = minimize(
            f,
            &[1.0],
            &NelderMeadOptions {
                target: 0.5,
                initial_step: 0.1,
                ..Default::default()
            },
        );
        assert!(out.fx <= 0.5 && out.evals < 20, "{out:?}");
        let g = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let out = minimize(
            g,
            &[1.0; 5],
            &NelderMeadOptions {
                max_evals: 40,
                ..Default::default()
            },
        );
        assert!(out.evals <= 40 + 2);
    }

    #[test]
    fn nan_is_treated_as_worse() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) };
        let out = minimize(f, &[0.1], &NelderMeadOptions::default());
        assert!((out.x[0] - 0.5).abs() < 1e-5);
    }
}
