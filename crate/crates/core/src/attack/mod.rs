//! Full-disclosure inversion attack and Success Attack Rate.
//!
//! The attacker holds the key and every parameter. For each victim it
//! minimizes a hinge surrogate whose zero set is exactly the set of inputs
//! that reproduce the protected template, starting from guesses drawn from
//! the known embedding distribution. A start counts as converged only when
//! re-protecting the inverted vector gives back the target bit for bit.

mod loss;
pub mod nelder_mead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use loss::{inversion_loss, linear_loss, LinearTarget, DEFAULT_MARGIN};
pub use nelder_mead::{minimize, NelderMeadOptions, NelderMeadOutcome};

use crate::embedding::{cosine_score, EmbeddingVector};
use crate::error::{Error, Result};
use crate::eval::threshold_at_fmr;
use crate::protocol::{identity_key, noisy_unit_sample, unit_sphere_draw, IdentityDataset, SampleRef};
use crate::randortho::{KeyStream, UserKey};
use crate::scalar::Scalar;
use crate::schemes::{KeyedScheme, ProtectedTemplate, SchemeConfig};

/// Evaluations per start and per embedding coordinate.
pub const EVALS_PER_DIM: usize = 2000;

/// How the attacker samples initial guesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackDistribution {
    /// The synthetic generator: a random unit class mean plus Gaussian noise
    /// of scale `within_sigma`, renormalized.
    Synthetic { within_sigma: f64 },
    /// Independent Gaussians per coordinate with the dataset's mean and
    /// standard deviation.
    Moments,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackMode {
    /// Invert the configured scheme's protected template.
    Protected,
    /// Solver sanity check: a single square orthonormal layer, no activation
    /// and no binarization; the real-valued output is the target.
    LinearSanity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub n_starts: usize,
    /// Evaluation budget per start; `None` means `EVALS_PER_DIM * d`.
    pub max_evals: Option<usize>,
    /// A start converges when its loss is `<= loss_tolerance` and the
    /// re-protected vector matches the target.
    pub loss_tolerance: f64,
    pub margin: f64,
    pub initial_step: f64,
    pub max_restarts: usize,
    pub distribution: AttackDistribution,
    pub fmr_operating_points: Vec<f64>,
    /// Seed for the initial guesses.
    pub seed: u64,
    /// Seed of the per-identity keys of the attacked templates.
    pub key_seed: u64,
    /// Attack the first `n_victims` identities (all when `None`).
    pub n_victims: Option<usize>,
    pub mode: AttackMode,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            n_starts: 10,
            max_evals: None,
            loss_tolerance: 0.0,
            margin: DEFAULT_MARGIN,
            initial_step: 0.05,
            max_restarts: 3,
            distribution: AttackDistribution::Synthetic { within_sigma: 0.05 },
            fmr_operating_points: vec![1e-2, 1e-3],
            seed: 7,
            key_seed: 11,
            n_victims: None,
            mode: AttackMode::Protected,
        }
    }
}

impl AttackConfig {
    /// Linear sanity mode with a relative residual tolerance of `1e-10`.
    pub fn linear_sanity() -> Self {
        AttackConfig {
            mode: AttackMode::LinearSanity,
            loss_tolerance: 1e-10,
            ..AttackConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidParameter("n_starts must be >= 1".into()));
        }
        if self
            .fmr_operating_points
            .iter()
            .any(|&f| !(f > 0.0 && f < 1.0))
        {
            return Err(Error::InvalidParameter("FMR points must lie in (0, 1)".into()));
        }
        if !(self.margin >= 0.0) || !(self.initial_step > 0.0) {
            return Err(Error::InvalidParameter(
                "margin must be >= 0 and initial_step > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn evals_for(&self, d: usize) -> usize {
        self.max_evals.unwrap_or(EVALS_PER_DIM * d)
    }

    fn nm_options(&self, d: usize) -> NelderMeadOptions {
        NelderMeadOptions {
            max_evals: self.evals_for(d),
            target: self.loss_tolerance,
            initial_step: self.initial_step,
            max_restarts: self.max_restarts,
            ..NelderMeadOptions::default()
        }
    }
}

/// Resolved sampler for initial guesses.
#[derive(Debug, Clone)]
pub enum GuessSampler {
    Synthetic { within_sigma: f64 },
    Moments { mean: Vec<f64>, std: Vec<f64> },
}

impl GuessSampler {
    pub fn for_dataset<T: Scalar>(dist: &AttackDistribution, ds: &IdentityDataset<T>) -> Self {
        match dist {
            AttackDistribution::Synthetic { within_sigma } => GuessSampler::Synthetic {
                within_sigma: *within_sigma,
            },
            AttackDistribution::Moments => {
                let (mean, std) = ds.moments();
                GuessSampler::Moments { mean, std }
            }
        }
    }

    pub fn draw(&self, stream: &mut KeyStream, d: usize) -> Vec<f64> {
        match self {
            GuessSampler::Synthetic { within_sigma } => {
                let centre = unit_sphere_draw(stream, d);
                noisy_unit_sample(stream, &centre, *within_sigma)
            }
            GuessSampler::Moments { mean, std } => mean
                .iter()
                .zip(std)
                .map(|(m, s)| m + s * stream.next_normal())
                .collect(),
        }
    }
}

/// What is being inverted.
#[derive(Debug, Clone)]
pub enum InversionTarget<T> {
    Template(ProtectedTemplate),
    Linear(LinearTarget<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub converged: bool,
    pub loss: f64,
    pub evals: usize,
    pub restarts: usize,
    /// Cosine to the victim's true embedding, for converged starts.
    pub similarity: Option<f64>,
}

/// Result of running every start against one target.
#[derive(Debug, Clone)]
pub struct Inversion<T> {
    pub starts: Vec<StartOutcome>,
    /// Final point of each start.
    pub points: Vec<EmbeddingVector<T>>,
    /// Starts whose loss reached the tolerance but whose re-protection
    /// differed from the target.
    pub certificate_failures: usize,
}

fn to_embedding<T: Scalar>(x: &[f64]) -> Option<EmbeddingVector<T>> {
    EmbeddingVector::new(x.iter().map(|&v| T::of(v)).collect()).ok()
}

/// Minimize the inversion loss from each of `starts`.
pub fn invert_from_starts<T: Scalar>(
    target: &InversionTarget<T>,
    keyed: &KeyedScheme<T>,
    cfg: &AttackConfig,
    starts: &[EmbeddingVector<T>],
) -> Result<Inversion<T>> {
    cfg.validate()?;
    let mut out = Inversion {
        starts: Vec::with_capacity(starts.len()),
        points: Vec::with_capacity(starts.len()),
        certificate_failures: 0,
    };
    for s in starts {
        let d = s.dim();
        let x0: Vec<f64> = s.iter().map(|v| v.as_f64()).collect();
        let opts = cfg.nm_options(d);
        let res = match target {
            InversionTarget::Template(t) => {
                let mut buf = vec![T::zero(); d];
                minimize(
                    |x| {
                        for (b, &v) in buf.iter_mut().zip(x) {
                            *b = T::of(v);
                        }
                        loss::template_loss(&buf, t, keyed, cfg.margin)
                    },
                    &x0,
                    &opts,
                )
            }
            InversionTarget::Linear(lt) => {
                let mut buf = vec![T::zero(); d];
                minimize(
                    |x| {
                        for (b, &v) in buf.iter_mut().zip(x) {
                            *b = T::of(v);
                        }
                        lt.loss(&buf)
                    },
                    &x0,
                    &opts,
                )
            }
        };
        let point = to_embedding::<T>(&res.x).unwrap_or_else(|| s.clone());
        let within = res.fx <= cfg.loss_tolerance;
        let reproduces = match target {
            InversionTarget::Template(t) => keyed.protect_template(&point).ok().as_ref() == Some(t),
            InversionTarget::Linear(_) => true,
        };
        if within && !reproduces {
            out.certificate_failures += 1;
        }
        out.starts.push(StartOutcome {
            converged: within && reproduces,
            loss: res.fx,
            evals: res.evals,
            restarts: res.restarts,
            similarity: None,
        });
        out.points.push(point);
    }
    Ok(out)
}

/// Draw `cfg.n_starts` guesses and invert `target`.
pub fn invert_template<T: Scalar>(
    target: &InversionTarget<T>,
    keyed: &KeyedScheme<T>,
    cfg: &AttackConfig,
    sampler: &GuessSampler,
    d: usize,
    guess_seed: UserKey,
) -> Result<Inversion<T>> {
    let mut stream = KeyStream::new(guess_seed, 0);
    let starts = (0..cfg.n_starts)
        .map(|_| EmbeddingVector::new(sampler.draw(&mut stream, d).into_iter().map(T::of).collect()))
        .collect::<Result<Vec<_>>>()?;
    invert_from_starts(target, keyed, cfg, &starts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub victim_id: String,
    pub starts: Vec<StartOutcome>,
    pub converged: Vec<bool>,
    pub best_inverted: Option<Vec<f64>>,
    pub unprotected_similarity: Option<f64>,
    /// One flag per FMR operating point.
    pub success: Vec<bool>,
    pub certificate_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub fmr: f64,
    pub threshold: f64,
    pub sar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scheme: SchemeConfig,
    pub config: AttackConfig,
    pub max_evals_per_start: usize,
    pub unprotected_impostor_count: usize,
    pub operating_points: Vec<OperatingPoint>,
    pub victims: Vec<AttackResult>,
}

impl AttackReport {
    pub fn sar(&self, fmr: f64) -> Option<f64> {
        self.operating_points
            .iter()
            .find(|p| p.fmr == fmr)
            .map(|p| p.sar)
    }
}

/// Cosine scores between samples of different identities.
pub fn unprotected_impostor_scores<T: Scalar>(ds: &IdentityDataset<T>) -> Result<Vec<f64>> {
    let refs: Vec<SampleRef> = ds.sample_refs().collect();
    let mut out = Vec::new();
    for (i, a) in refs.iter().enumerate() {
        for b in &refs[i + 1..] {
            if a.identity != b.identity {
                out.push(cosine_score(ds.embedding(*a), ds.embedding(*b))?);
            }
        }
    }
    Ok(out)
}

/// Attack sample 0 of each victim and report the fraction of victims whose
/// inverted vector passes the unprotected cosine matcher at each FMR point.
pub fn success_attack_rate<T: Scalar>(
    ds: &IdentityDataset<T>,
    scheme: &SchemeConfig,
    cfg: &AttackConfig,
) -> Result<AttackReport> {
    cfg.validate()?;
    if !scheme.uses_key() && cfg.mode == AttackMode::Protected {
        return Err(Error::InvalidParameter(
            "the unprotected baseline has nothing to invert".into(),
        ));
    }
    let d = ds.dim();
    if scheme.input_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: scheme.input_dim(),
            found: d,
        });
    }
    let impostor = unprotected_impostor_scores(ds)?;
    let thresholds = cfg
        .fmr_operating_points
        .iter()
        .map(|&f| threshold_at_fmr(&impostor, f))
        .collect::<Result<Vec<_>>>()?;
    let sampler = GuessSampler::for_dataset(&cfg.distribution, ds);
    let n_victims = cfg.n_victims.unwrap_or(ds.len()).min(ds.len());
    let key_seed = UserKey(cfg.key_seed);

    let victims = (0..n_victims)
        .into_par_iter()
        .map(|v| {
            let ident = &ds.identities()[v];
            let key = identity_key(key_seed, &ident.id);
            let truth = ds.embedding(SampleRef {
                identity: v,
                sample: 0,
            });
            let (keyed, target) = match cfg.mode {
                AttackMode::Protected => {
                    let keyed = scheme.keyed::<T>(key)?;
                    let t = keyed.protect_template(truth)?;
                    (keyed, InversionTarget::Template(t))
                }
                AttackMode::LinearSanity => (
                    KeyedScheme::Unprotected { dim: d },
                    InversionTarget::Linear(LinearTarget::new(key, truth)?),
                ),
            };
            let guess_seed = UserKey(cfg.seed).derive(v as u64);
            let mut inv = invert_template(&target, &keyed, cfg, &sampler, d, guess_seed)?;
            let mut best: Option<(f64, usize)> = None;
            for (i, s) in inv.starts.iter_mut().enumerate() {
                if s.converged {
                    let sim = cosine_score(&inv.points[i], truth).unwrap_or(-1.0);
                    s.similarity = Some(sim);
                    if best.is_none_or(|(b, _)| sim > b) {
                        best = Some((sim, i));
                    }
                }
            }
            let success = thresholds
                .iter()
                .map(|&t| best.is_some_and(|(sim, _)| sim > t))
                .collect();
            Ok(AttackResult {
                victim_id: ident.id.clone(),
                converged: inv.starts.iter().map(|s| s.converged).collect(),
                best_inverted: best
                    .map(|(_, i)| inv.points[i].iter().map(|v| v.as_f64()).collect()),
                unprotected_similarity: best.map(|(s, _)| s),
                success,
                certificate_failures: inv.certificate_failures,
                starts: inv.starts,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let operating_points = cfg
        .fmr_operating_points
        .iter()
        .zip(&thresholds)
        .enumerate()
        .map(|(k, (&fmr, &threshold))| OperatingPoint {
            fmr,
            threshold,
            sar: if victims.is_empty() {
                0.0
            } else {
                victims.iter().filter(|r| r.success[k]).count() as f64 / victims.len() as f64
            },
        })
        .collect();
    Ok(AttackReport {
        scheme: scheme.clone(),
        config: cfg.clone(),
        max_evals_per_start: cfg.evals_for(d),
        unprotected_impostor_count: impostor.len(),
        operating_points,
        victims,
    })
}
