use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use mlphash::attack::success_attack_rate;
use mlphash::dataio::{
    create_new, load_embeddings_csv, save_embeddings_csv, ScoreCsvWriter, ScoreLabel,
    TemplateFile, TemplateRecord,
};
use mlphash::eval::{
    collect_linkage_scores, run_verification_experiment_with, timing_benchmark,
    unlinkability_report,
};
use mlphash::protocol::{identity_key, SampleRef};
use mlphash::{hamming_score, Dataset, SchemeConfig, UserKey};
use serde::Serialize;

use crate::config::{DatasetSource, RunConfig, SchemeSpec};
use crate::CliError;

/// Report files are created together and never overwritten.
fn open_outputs<const N: usize>(dir: &Path, names: [&str; N]) -> Result<[File; N], CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for name in names {
        let p = dir.join(name);
        if p.exists() {
            return Err(CliError::Io(format!("{} already exists", p.display())));
        }
    }
    let mut files = Vec::with_capacity(N);
    for name in names {
        let p = dir.join(name);
        files.push(create_new(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?);
    }
    Ok(files.try_into().expect("one file per name"))
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    config: &'a RunConfig,
    scheme: &'a SchemeConfig,
    report: &'a R,
}

fn write_json<R: Serialize>(
    file: File,
    cfg: &RunConfig,
    scheme: &SchemeConfig,
    report: &R,
) -> Result<(), CliError> {
    let env = Envelope {
        config: cfg,
        scheme,
        report,
    };
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &env).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err)
}

fn write_echo(mut file: File, cfg: &RunConfig) -> Result<(), CliError> {
    file.write_all(cfg.to_toml().as_bytes()).map_err(io_err)
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn load_scheme(cfg: &RunConfig) -> Result<(Dataset, SchemeConfig), CliError> {
    let ds = cfg.dataset.load()?;
    let scheme = cfg.scheme.resolve(ds.dim())?;
    Ok((ds, scheme))
}

pub fn synth(cfg: &RunConfig, output: &Path) -> Result<(), CliError> {
    if let DatasetSource::Csv { .. } = cfg.dataset {
        return Err(CliError::Config("synth needs a synthetic dataset source".into()));
    }
    let ds = cfg.dataset.load()?;
    save_embeddings_csv(&ds, output)?;
    Ok(())
}

pub fn protect(cfg: &RunConfig, input: &Path, output: &Path) -> Result<(), CliError> {
    let ds: Dataset = load_embeddings_csv(input)?;
    let scheme = cfg.scheme.resolve(ds.dim())?;
    if !scheme.uses_key() {
        return Err(CliError::Config("the unprotected scheme has no templates".into()));
    }
    let seed = UserKey(cfg.seeds.key_seed);
    let mut records = Vec::with_capacity(ds.sample_count());
    for (i, ident) in ds.identities().iter().enumerate() {
        let keyed = scheme.keyed::<f64>(identity_key(seed, &ident.id))?;
        for (s, sample) in ident.samples.iter().enumerate() {
            let u = ds.embedding(SampleRef {
                identity: i,
                sample: s,
            });
            records.push(TemplateRecord {
                identity_id: ident.id.clone(),
                sample_id: sample.id.clone(),
                template: keyed.protect_template(u)?,
            });
        }
    }
    let file = TemplateFile {
        scheme: scheme.kind().expect("keyed scheme has a kind"),
        length: scheme.output_len(),
        digest: scheme.digest(),
        records,
    };
    let out = create_new(output).map_err(|e| CliError::Io(format!("{}: {e}", output.display())))?;
    file.write(out)?;
    Ok(())
}

/// Scores as `identity_id,sample_id,score,decision` lines. Each probe claims
/// its own identity and is protected with that identity's key.
pub fn verify(cfg: &RunConfig, templates: &Path, probes: &Path) -> Result<String, CliError> {
    let enrolled = TemplateFile::load(templates)?;
    let ds: Dataset = load_embeddings_csv(probes)?;
    let d = cfg
        .scheme
        .dim
        .or_else(|| cfg.scheme.layers.as_ref().and_then(|l| l.first().copied()))
        .unwrap_or(ds.dim());
    if ds.dim() != d {
        return Err(CliError::Data(format!(
            "{}: row 2: expected {d} features, found {}",
            probes.display(),
            ds.dim()
        )));
    }
    let spec = SchemeSpec {
        dim: Some(d),
        ..cfg.scheme.clone()
    };
    let scheme = spec.resolve(d)?;
    if scheme.kind() != Some(enrolled.scheme)
        || scheme.digest() != enrolled.digest
        || scheme.output_len() != enrolled.length
    {
        return Err(CliError::Digest(format!(
            "templates are {} digest={}, configuration gives {} digest={}",
            enrolled.scheme,
            enrolled.digest,
            scheme.name(),
            scheme.digest()
        )));
    }
    let mut reference = HashMap::new();
    for r in &enrolled.records {
        reference.entry(r.identity_id.as_str()).or_insert(&r.template);
    }
    let seed = UserKey(cfg.seeds.key_seed);
    let mut out = String::from("identity_id,sample_id,score,decision\n");
    for (i, ident) in ds.identities().iter().enumerate() {
        let Some(&enrolled_t) = reference.get(ident.id.as_str()) else {
            return Err(CliError::Data(format!(
                "identity '{}' has no enrolled template",
                ident.id
            )));
        };
        let keyed = scheme.keyed::<f64>(identity_key(seed, &ident.id))?;
        for (s, sample) in ident.samples.iter().enumerate() {
            let t = keyed.protect_template(ds.embedding(SampleRef {
                identity: i,
                sample: s,
            }))?;
            let score = hamming_score(enrolled_t, &t)?;
            let decision = if score > cfg.verify.threshold {
                "accept"
            } else {
                "reject"
            };
            writeln!(out, "{},{},{score:.6},{decision}", ident.id, sample.id).unwrap();
        }
    }
    Ok(out)
}

pub fn eval_accuracy(cfg: &RunConfig) -> Result<(), CliError> {
    let (ds, scheme) = load_scheme(cfg)?;
    let [json, echo, scores] =
        open_outputs(&cfg.out_dir, ["accuracy.json", "accuracy.config.toml", "scores.csv"])?;
    let mut writer = ScoreCsvWriter::new(scores)?;
    let mut write_err = None;
    let report = run_verification_experiment_with(
        &ds,
        &scheme,
        cfg.scenario,
        cfg.eval.trials,
        UserKey(cfg.seeds.key_seed),
        cfg.eval.target_fmr,
        |trial, s| {
            if cfg.eval.write_scores && write_err.is_none() {
                write_err = writer
                    .write_all(trial, ScoreLabel::Genuine, &s.genuine)
                    .and_then(|_| writer.write_all(trial, ScoreLabel::Impostor, &s.impostor))
                    .err();
            }
        },
    )?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    writer.finish()?;
    write_json(json, cfg, &scheme, &report)?;
    write_echo(echo, cfg)?;
    println!(
        "{} {:?}: TMR {:.4} ± {:.4} at FMR {}",
        scheme.name(),
        cfg.scenario,
        report.tmr_mean,
        report.tmr_std,
        cfg.eval.target_fmr
    );
    Ok(())
}

pub fn eval_unlinkability(cfg: &RunConfig) -> Result<(), CliError> {
    let (ds, scheme) = load_scheme(cfg)?;
    let [json, echo, scores] = open_outputs(
        &cfg.out_dir,
        ["unlinkability.json", "unlinkability.config.toml", "linkage_scores.csv"],
    )?;
    let s = collect_linkage_scores(
        &ds,
        &scheme,
        cfg.eval.keys_per_subject,
        UserKey(cfg.seeds.key_seed),
    )?;
    let report = unlinkability_report(&s, cfg.eval.omega, cfg.eval.bins)?;
    let mut writer = ScoreCsvWriter::new(scores)?;
    if cfg.eval.write_scores {
        writer.write_all(0, ScoreLabel::Mated, &s.mated)?;
        writer.write_all(0, ScoreLabel::NonMated, &s.non_mated)?;
    }
    writer.finish()?;
    write_json(json, cfg, &scheme, &report)?;
    write_echo(echo, cfg)?;
    println!("{}: D_sys {:.4}", scheme.name(), report.global_measure);
    Ok(())
}

pub fn eval_irreversibility(cfg: &RunConfig) -> Result<(), CliError> {
    let (ds, scheme) = load_scheme(cfg)?;
    let [json, echo] = open_outputs(&cfg.out_dir, ["attack.json", "attack.config.toml"])?;
    let report = success_attack_rate(&ds, &scheme, &cfg.attack_config())?;
    write_json(json, cfg, &scheme, &report)?;
    write_echo(echo, cfg)?;
    for p in &report.operating_points {
        println!(
            "{}: SAR {:.2}% at FMR {} (threshold {:.4})",
            scheme.name(),
            100.0 * p.sar,
            p.fmr,
            p.threshold
        );
    }
    Ok(())
}

pub fn eval_bench(cfg: &RunConfig) -> Result<(), CliError> {
    let d = match (&cfg.scheme.dim, &cfg.dataset) {
        (Some(d), _) => *d,
        (None, DatasetSource::Synthetic(p)) => p.dim,
        (None, DatasetSource::Csv { .. }) => cfg.dataset.load()?.dim(),
    };
    let configs = cfg
        .eval
        .bench_schemes
        .iter()
        .map(|name| {
            if *name == cfg.scheme.kind {
                cfg.scheme.resolve(d)
            } else {
                SchemeSpec::named(name).resolve(d)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let [csv, json, echo] =
        open_outputs(&cfg.out_dir, ["bench.csv", "bench.json", "bench.config.toml"])?;
    let report = timing_benchmark(&configs, cfg.eval.bench_trials, cfg.seeds.key_seed)?;
    let text = report.to_csv();
    let mut csv = csv;
    csv.write_all(text.as_bytes()).map_err(io_err)?;
    let env = serde_json::json!({ "config": cfg, "schemes": configs, "report": report });
    let mut w = std::io::BufWriter::new(json);
    serde_json::to_writer_pretty(&mut w, &env).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err)?;
    write_echo(echo, cfg)?;
    print!("{text}");
    Ok(())
}
