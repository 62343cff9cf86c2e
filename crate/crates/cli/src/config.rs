//! Run configuration: one TOML file plus command-line overrides (flags win).
//!
//! ```toml
//! out_dir = "runs/mlp"
//! scenario = "normal"
//!
//! [scheme]
//! kind = "mlp-hash"        # unprotected | mlp-hash | biohash | iom-grp | iom-urp
//! layers = [128, 256, 256, 256, 128]
//!
//! [dataset]
//! source = "synthetic"     # or: source = "csv", path = "embeddings.csv"
//! identities = 100
//! samples_per_identity = 10
//! dim = 128
//! within_sigma = 0.05
//! seed = 1
//!
//! [seeds]
//! key_seed = 42
//! attack_seed = 7
//!
//! [eval]
//! trials = 10
//! target_fmr = 0.001
//!
//! [attack]
//! n_starts = 10
//! fmr_points = [0.01, 0.001]
//! ```
//!
//! Every report is accompanied by the resolved configuration so that a run can
//! be repeated from its echo.

use std::path::{Path, PathBuf};

use mlphash::attack::{AttackConfig, AttackDistribution, AttackMode, DEFAULT_MARGIN};
use mlphash::dataio::load_embeddings_csv;
use mlphash::eval::{DEFAULT_BINS, DEFAULT_TARGET_FMR};
use mlphash::protocol::{synth_generate, Scenario, SynthParams};
use mlphash::{Dataset, MlpHashParams, SchemeConfig, SchemeKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub scenario: Scenario,
    pub scheme: SchemeSpec,
    pub dataset: DatasetSource,
    pub seeds: Seeds,
    pub eval: EvalKnobs,
    pub attack: AttackKnobs,
    pub verify: VerifyKnobs,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("mlphash-out"),
            scenario: Scenario::Normal,
            scheme: SchemeSpec::default(),
            dataset: DatasetSource::Synthetic(SynthParams::default()),
            seeds: Seeds::default(),
            eval: EvalKnobs::default(),
            attack: AttackKnobs::default(),
            verify: VerifyKnobs::default(),
        }
    }
}

/// Scheme choice; unset parameters take the scheme's defaults for the
/// embedding dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSpec {
    pub kind: String,
    /// Expected embedding dimension; taken from the data when unset.
    pub dim: Option<usize>,
    pub layers: Option<Vec<usize>>,
    pub activation_on_output: bool,
    pub out_len: Option<usize>,
    pub m: Option<usize>,
    pub q: Option<usize>,
    pub window: Option<usize>,
}

impl Default for SchemeSpec {
    fn default() -> Self {
        SchemeSpec {
            kind: SchemeKind::MlpHash.to_string(),
            dim: None,
            layers: None,
            activation_on_output: true,
            out_len: None,
            m: None,
            q: None,
            window: None,
        }
    }
}

pub const UNPROTECTED: &str = "unprotected";

impl SchemeSpec {
    pub fn named(kind: &str) -> Self {
        SchemeSpec {
            kind: kind.to_string(),
            ..SchemeSpec::default()
        }
    }

    /// Concrete scheme for embeddings of dimension `d`.
    pub fn resolve(&self, d: usize) -> Result<SchemeConfig, CliError> {
        if let Some(want) = self.dim {
            if want != d {
                return Err(CliError::Data(format!(
                    "scheme expects dimension {want}, data has {d}"
                )));
            }
        }
        let cfg = if self.kind == UNPROTECTED {
            SchemeConfig::Unprotected { dim: d }
        } else {
            let kind: SchemeKind = self
                .kind
                .parse()
                .map_err(|_| CliError::Config(format!("unknown scheme '{}'", self.kind)))?;
            match SchemeConfig::default_for(kind, d) {
                SchemeConfig::MlpHash(p) => {
                    let layers = self.layers.clone().unwrap_or(p.layer_lengths);
                    let mut params = MlpHashParams::new(layers).map_err(config_err)?;
                    params.activation_on_output = self.activation_on_output;
                    SchemeConfig::MlpHash(params)
                }
                SchemeConfig::BioHash { dim, out_len } => SchemeConfig::BioHash {
                    dim,
                    out_len: self.out_len.unwrap_or(out_len),
                },
                SchemeConfig::IomGrp { dim, m, q } => SchemeConfig::IomGrp {
                    dim,
                    m: self.m.unwrap_or(m),
                    q: self.q.unwrap_or(q),
                },
                SchemeConfig::IomUrp { dim, m, window } => SchemeConfig::IomUrp {
                    dim,
                    m: self.m.unwrap_or(m),
                    window: self.window.unwrap_or(window),
                },
                other => other,
            }
        };
        if cfg.input_dim() != d {
            return Err(CliError::Data(format!(
                "scheme input width {} does not match data dimension {d}",
                cfg.input_dim()
            )));
        }
        // instantiating once validates every parameter
        cfg.keyed::<f64>(mlphash::UserKey(0)).map_err(config_err)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SynthParams),
    Csv { path: PathBuf },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset, CliError> {
        match self {
            DatasetSource::Synthetic(p) => synth_generate(p).map_err(config_err),
            DatasetSource::Csv { path } => Ok(load_embeddings_csv(path)?),
        }
    }

    pub fn synthetic_mut(&mut self) -> Option<&mut SynthParams> {
        match self {
            DatasetSource::Synthetic(p) => Some(p),
            DatasetSource::Csv { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Seed from which per-identity keys are derived.
    pub key_seed: u64,
    /// Seed of the attacker's initial guesses.
    pub attack_seed: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            key_seed: 42,
            attack_seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalKnobs {
    pub trials: usize,
    pub target_fmr: f64,
    pub bins: usize,
    pub omega: f64,
    pub keys_per_subject: usize,
    pub write_scores: bool,
    pub bench_trials: usize,
    pub bench_schemes: Vec<String>,
}

impl Default for EvalKnobs {
    fn default() -> Self {
        EvalKnobs {
            trials: 10,
            target_fmr: DEFAULT_TARGET_FMR,
            bins: DEFAULT_BINS,
            omega: 1.0,
            keys_per_subject: 10,
            write_scores: true,
            bench_trials: 100,
            bench_schemes: SchemeKind::ALL.iter().map(ToString::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackKnobs {
    pub mode: AttackMode,
    pub n_starts: usize,
    /// Evaluation budget per start; 2000·d when unset.
    pub max_evals: Option<usize>,
    /// 0 for protected mode and 1e-10 (relative residual) for linear mode
    /// when unset.
    pub loss_tolerance: Option<f64>,
    pub margin: f64,
    pub initial_step: f64,
    pub max_restarts: usize,
    pub distribution: AttackDistribution,
    pub fmr_points: Vec<f64>,
    pub n_victims: Option<usize>,
}

impl Default for AttackKnobs {
    fn default() -> Self {
        let d = AttackConfig::default();
        AttackKnobs {
            mode: AttackMode::Protected,
            n_starts: d.n_starts,
            max_evals: None,
            loss_tolerance: None,
            margin: DEFAULT_MARGIN,
            initial_step: d.initial_step,
            max_restarts: d.max_restarts,
            distribution: d.distribution,
            fmr_points: d.fmr_operating_points,
            n_victims: Some(20),
        }
    }
}

impl RunConfig {
    pub fn attack_config(&self) -> AttackConfig {
        let a = &self.attack;
        let base = match a.mode {
            AttackMode::Protected => AttackConfig::default(),
            AttackMode::LinearSanity => AttackConfig::linear_sanity(),
        };
        AttackConfig {
            n_starts: a.n_starts,
            max_evals: a.max_evals,
            loss_tolerance: a.loss_tolerance.unwrap_or(base.loss_tolerance),
            margin: a.margin,
            initial_step: a.initial_step,
            max_restarts: a.max_restarts,
            distribution: a.distribution.clone(),
            fmr_operating_points: a.fmr_points.clone(),
            seed: self.seeds.attack_seed,
            key_seed: self.seeds.key_seed,
            n_victims: a.n_victims,
            mode: a.mode,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyKnobs {
    /// Accept when the similarity is strictly above this value.
    pub threshold: f64,
}

impl Default for VerifyKnobs {
    fn default() -> Self {
        VerifyKnobs { threshold: 0.75 }
    }
}

fn config_err(e: mlphash::Error) -> CliError {
    CliError::Config(e.to_string())
}
