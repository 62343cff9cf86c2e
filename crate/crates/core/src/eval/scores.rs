use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::ScoreLabel;
use crate::error::{Error, Result};
use crate::protocol::{identity_key, IdentityDataset, SampleRef, VerificationProtocol};
use crate::randortho::UserKey;
use crate::scalar::Scalar;
use crate::schemes::{Encoded, SchemeConfig};

/// Comparison scores, "higher = more similar".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
    pub mated: Vec<f64>,
    pub non_mated: Vec<f64>,
}

impl ScoreSet {
    fn list_mut(&mut self, label: ScoreLabel) -> &mut Vec<f64> {
        match label {
            ScoreLabel::Genuine => &mut self.genuine,
            ScoreLabel::Impostor => &mut self.impostor,
            ScoreLabel::Mated => &mut self.mated,
            ScoreLabel::NonMated => &mut self.non_mated,
        }
    }

    pub fn get(&self, label: ScoreLabel) -> &[f64] {
        match label {
            ScoreLabel::Genuine => &self.genuine,
            ScoreLabel::Impostor => &self.impostor,
            ScoreLabel::Mated => &self.mated,
            ScoreLabel::NonMated => &self.non_mated,
        }
    }

    /// Add a similarity score.
    pub fn push(&mut self, label: ScoreLabel, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        self.list_mut(label).push(score);
        Ok(())
    }

    /// Add a distance; stored negated so that higher stays more similar.
    pub fn push_distance(&mut self, label: ScoreLabel, distance: f64) -> Result<()> {
        self.push(label, -distance)
    }
}

/// Encode every `(sample, key)` pair once, grouping by key so each key's
/// material is generated a single time.
fn encode_pairs<T: Scalar>(
    ds: &IdentityDataset<T>,
    scheme: &SchemeConfig,
    pairs: impl IntoIterator<Item = (SampleRef, UserKey)>,
) -> Result<HashMap<(SampleRef, UserKey), Encoded<T>>> {
    let mut by_key: BTreeMap<UserKey, Vec<SampleRef>> = BTreeMap::new();
    for (s, k) in pairs {
        by_key.entry(k).or_default().push(s);
    }
    let groups: Vec<(UserKey, Vec<SampleRef>)> = by_key
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_unstable();
            v.dedup();
            (k, v)
        })
        .collect();
    let encoded: Vec<Vec<((SampleRef, UserKey), Encoded<T>)>> = groups
        .par_iter()
        .map(|(key, samples)| {
            let keyed = scheme.keyed::<T>(*key)?;
            samples
                .iter()
                .map(|&s| Ok(((s, *key), keyed.protect(ds.embedding(s))?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(encoded.into_iter().flatten().collect())
}

/// Protect enrollments and probes with their assigned keys and score every
/// probe against the enrolled template of its claimed identity.
pub fn collect_scores<T: Scalar>(
    ds: &IdentityDataset<T>,
    protocol: &VerificationProtocol,
    scheme: &SchemeConfig,
) -> Result<ScoreSet> {
    if ds.dim() != scheme.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: scheme.input_dim(),
            found: ds.dim(),
        });
    }
    // keys are irrelevant to the unprotected baseline
    let eff = |k: UserKey| if scheme.uses_key() { k } else { UserKey(0) };
    let pairs = protocol
        .enrollments
        .iter()
        .map(|e| (e.sample, eff(e.key)))
        .chain(protocol.probes.iter().map(|p| (p.sample, eff(p.key))));
    let enc = encode_pairs(ds, scheme, pairs)?;
    let mut enrolled = vec![None; ds.len()];
    for e in &protocol.enrollments {
        enrolled[e.identity] = Some(&enc[&(e.sample, eff(e.key))]);
    }
    let mut out = ScoreSet::default();
    for p in &protocol.probes {
        let reference = enrolled[p.claimed].ok_or_else(|| {
            Error::InvalidParameter(format!("identity {} is not enrolled", p.claimed))
        })?;
        let s = reference.score(&enc[&(p.sample, eff(p.key))])?;
        let label = if p.is_genuine() {
            ScoreLabel::Genuine
        } else {
            ScoreLabel::Impostor
        };
        out.push(label, s)?;
    }
    Ok(out)
}

/// Key number `k` of the identity `identity_id` in linkage experiments.
pub fn linkage_key(key_seed: UserKey, identity_id: &str, k: usize) -> UserKey {
    identity_key(key_seed, identity_id).derive(k as u64 + 1)
}

/// Mated and non-mated scores for the unlinkability analysis.
///
/// Sample 0 of every identity is protected under `keys_per_subject` different
/// keys. Mated scores compare two templates of the same sample under different
/// keys (all pairs). Non-mated scores compare identity `i` under key `k` with
/// identity `j > i` under key `(k + 1) mod K`.
pub fn collect_linkage_scores<T: Scalar>(
    ds: &IdentityDataset<T>,
    scheme: &SchemeConfig,
    keys_per_subject: usize,
    key_seed: UserKey,
) -> Result<ScoreSet> {
    if keys_per_subject < 2 {
        return Err(Error::InvalidParameter(format!(
            "keys_per_subject must be >= 2, got {keys_per_subject}"
        )));
    }
    if ds.dim() != scheme.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: scheme.input_dim(),
            found: ds.dim(),
        });
    }
    let kps = keys_per_subject;
    let templates: Vec<Vec<Encoded<T>>> = ds
        .identities()
        .par_iter()
        .enumerate()
        .map(|(i, ident)| {
            let u = ds.embedding(SampleRef {
                identity: i,
                sample: 0,
            });
            (0..kps)
                .map(|k| scheme.protect(u, linkage_key(key_seed, &ident.id, k)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = ScoreSet::default();
    for per_id in &templates {
        for k in 0..kps {
            for l in k + 1..kps {
                out.push(ScoreLabel::Mated, per_id[k].score(&per_id[l])?)?;
            }
        }
    }
    for i in 0..templates.len() {
        for j in i + 1..templates.len() {
            for k in 0..kps {
                let s = templates[i][k].score(&templates[j][(k + 1) % kps])?;
                out.push(ScoreLabel::NonMated, s)?;
            }
        }
    }
    Ok(out)
}
