//! `mlphash`: protect, verify and evaluate cancelable face templates.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O or parse error,
//! 4 template/configuration digest mismatch.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mlphash::attack::AttackMode;
use mlphash::protocol::Scenario;

use config::{DatasetSource, RunConfig, SchemeSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Data(String),
    #[error("digest mismatch: {0}")]
    Digest(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Data(_) => 3,
            CliError::Digest(_) => 4,
        }
    }
}

impl From<mlphash::Error> for CliError {
    fn from(e: mlphash::Error) -> Self {
        use mlphash::Error as E;
        match e {
            E::Io(_) => CliError::Io(e.to_string()),
            E::Parse { .. }
            | E::RowDimension { .. }
            | E::DimensionMismatch { .. }
            | E::LengthMismatch(..)
            | E::NonFiniteInput
            | E::KeyCollision(..)
            | E::InsufficientSamples(_)
            | E::ZeroVector => CliError::Data(e.to_string()),
            E::SchemeMismatch => CliError::Digest(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mlphash", version, about = "Cancelable face-template protection toolkit")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Log progress to standard error.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic embedding dataset as CSV.
    Synth {
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Protect every row of an embedding CSV with its identity's key.
    Protect {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Score probe embeddings against enrolled templates of their identity.
    Verify {
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        probes: PathBuf,
    },
    /// Run an evaluation and write its reports to the output directory.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum EvalCommand {
    /// TMR at the target FMR over repeated key draws.
    Accuracy,
    /// Mated vs non-mated linkage analysis.
    Unlinkability,
    /// Full-disclosure inversion attack and Success Attack Rate.
    Irreversibility,
    /// Per-scheme protection timing.
    Bench,
}

#[derive(Debug, Default, Args)]
struct Overrides {
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// unprotected, mlp-hash, biohash, iom-grp or iom-urp.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Comma-separated MLP-Hash layer widths, input first.
    #[arg(long, global = true, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[arg(long, global = true, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Use an embedding CSV instead of the synthetic generator.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    identities: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    data_seed: Option<u64>,
    #[arg(long, global = true)]
    key_seed: Option<u64>,
    #[arg(long, global = true)]
    attack_seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    fmr: Option<f64>,
    #[arg(long, global = true)]
    bins: Option<usize>,
    #[arg(long, global = true)]
    omega: Option<f64>,
    #[arg(long, global = true)]
    keys_per_subject: Option<usize>,
    #[arg(long, global = true)]
    no_scores: bool,
    #[arg(long, global = true)]
    bench_trials: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    bench_schemes: Option<Vec<String>>,
    #[arg(long, global = true, value_parser = parse_attack_mode)]
    attack_mode: Option<AttackMode>,
    #[arg(long, global = true)]
    n_starts: Option<usize>,
    #[arg(long, global = true)]
    max_evals: Option<usize>,
    #[arg(long, global = true)]
    n_victims: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    attack_fmr: Option<Vec<f64>>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    match s {
        "normal" => Ok(Scenario::Normal),
        "stolen" => Ok(Scenario::Stolen),
        _ => Err(format!("expected normal or stolen, got '{s}'")),
    }
}

fn parse_attack_mode(s: &str) -> Result<AttackMode, String> {
    match s {
        "protected" => Ok(AttackMode::Protected),
        "linear-sanity" => Ok(AttackMode::LinearSanity),
        _ => Err(format!("expected protected or linear-sanity, got '{s}'")),
    }
}

impl Overrides {
    fn apply(self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(v) = self.out_dir {
            cfg.out_dir = v;
        }
        if let Some(v) = self.scheme {
            cfg.scheme = SchemeSpec {
                dim: cfg.scheme.dim,
                ..SchemeSpec::named(&v)
            };
        }
        if let Some(v) = self.layers {
            cfg.scheme.layers = Some(v);
        }
        if let Some(v) = self.scenario {
            cfg.scenario = v;
        }
        if let Some(path) = self.dataset {
            cfg.dataset = DatasetSource::Csv { path };
        }
        let synth_flags = [
            self.identities.is_some(),
            self.samples.is_some(),
            self.dim.is_some(),
            self.sigma.is_some(),
            self.data_seed.is_some(),
        ];
        if synth_flags.iter().any(|&b| b) {
            let p = cfg.dataset.synthetic_mut().ok_or_else(|| {
                CliError::Config("synthetic dataset flags conflict with a CSV dataset".into())
            })?;
            if let Some(v) = self.identities {
                p.identities = v;
            }
            if let Some(v) = self.samples {
                p.samples_per_identity = v;
            }
            if let Some(v) = self.dim {
                p.dim = v;
            }
            if let Some(v) = self.sigma {
                p.within_sigma = v;
            }
            if let Some(v) = self.data_seed {
                p.seed = v;
            }
        }
        if let Some(v) = self.key_seed {
            cfg.seeds.key_seed = v;
        }
        if let Some(v) = self.attack_seed {
            cfg.seeds.attack_seed = v;
        }
        let e = &mut cfg.eval;
        if let Some(v) = self.trials {
            e.trials = v;
        }
        if let Some(v) = self.fmr {
            e.target_fmr = v;
        }
        if let Some(v) = self.bins {
            e.bins = v;
        }
        if let Some(v) = self.omega {
            e.omega = v;
        }
        if let Some(v) = self.keys_per_subject {
            e.keys_per_subject = v;
        }
        if self.no_scores {
            e.write_scores = false;
        }
        if let Some(v) = self.bench_trials {
            e.bench_trials = v;
        }
        if let Some(v) = self.bench_schemes {
            e.bench_schemes = v;
        }
        let a = &mut cfg.attack;
        if let Some(v) = self.attack_mode {
            a.mode = v;
        }
        if let Some(v) = self.n_starts {
            a.n_starts = v;
        }
        if let Some(v) = self.max_evals {
            a.max_evals = Some(v);
        }
        if let Some(v) = self.n_victims {
            a.n_victims = Some(v);
        }
        if let Some(v) = self.attack_fmr {
            a.fmr_points = v;
        }
        if let Some(v) = self.threshold {
            cfg.verify.threshold = v;
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg)?;
    match cli.command {
        Command::Synth { output } => commands::synth(&cfg, &output),
        Command::Protect { input, output } => commands::protect(&cfg, &input, &output),
        Command::Verify { templates, probes } => {
            let out = commands::verify(&cfg, &templates, &probes)?;
            print!("{out}");
            Ok(())
        }
        Command::Eval(EvalCommand::Accuracy) => commands::eval_accuracy(&cfg),
        Command::Eval(EvalCommand::Unlinkability) => commands::eval_unlinkability(&cfg),
        Command::Eval(EvalCommand::Irreversibility) => commands::eval_irreversibility(&cfg),
        Command::Eval(EvalCommand::Bench) => commands::eval_bench(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mlphash: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
