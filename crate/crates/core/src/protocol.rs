//! Identity datasets, key assignment and verification protocols.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::randortho::{KeyStream, UserKey};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub id: String,
    pub embedding: EmbeddingVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identity<T> {
    pub id: String,
    pub samples: Vec<Sample<T>>,
}

/// Labeled embeddings, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityDataset<T> {
    dim: usize,
    identities: Vec<Identity<T>>,
}

impl<T: Scalar> IdentityDataset<T> {
    pub fn new(dim: usize, identities: Vec<Identity<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        let mut seen = HashMap::new();
        for ident in &identities {
            if ident.samples.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "identity {} has no samples",
                    ident.id
                )));
            }
            if seen.insert(ident.id.as_str(), ()).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate identity id {}",
                    ident.id
                )));
            }
            for s in &ident.samples {
                s.embedding.check_dim(dim)?;
            }
        }
        Ok(IdentityDataset { dim, identities })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn identities(&self) -> &[Identity<T>] {
        &self.identities
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn embedding(&self, r: SampleRef) -> &EmbeddingVector<T> {
        &self.identities[r.identity].samples[r.sample].embedding
    }

    pub fn sample_count(&self) -> usize {
        self.identities.iter().map(|i| i.samples.len()).sum()
    }

    /// Every `(identity, sample)` position in dataset order.
    pub fn sample_refs(&self) -> impl Iterator<Item = SampleRef> + '_ {
        self.identities.iter().enumerate().flat_map(|(i, ident)| {
            (0..ident.samples.len()).map(move |s| SampleRef {
                identity: i,
                sample: s,
            })
        })
    }

    /// Per-coordinate mean and standard deviation over all samples.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.sample_count() as f64;
        let mut mean = vec![0.0; self.dim];
        for r in self.sample_refs() {
            for (m, v) in mean.iter_mut().zip(self.embedding(r).iter()) {
                *m += v.as_f64() / n;
            }
        }
        let mut var = vec![0.0; self.dim];
        for r in self.sample_refs() {
            for ((s, m), v) in var.iter_mut().zip(&mean).zip(self.embedding(r).iter()) {
                *s += (v.as_f64() - m).powi(2);
            }
        }
        let denom = (n - 1.0).max(1.0);
        (mean, var.into_iter().map(|s| (s / denom).sqrt()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleRef {
    pub identity: usize,
    pub sample: usize,
}

/// Parameters of the synthetic identity generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub identities: usize,
    pub samples_per_identity: usize,
    pub dim: usize,
    pub within_sigma: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            identities: 100,
            samples_per_identity: 10,
            dim: 128,
            within_sigma: 0.05,
            seed: 1,
        }
    }
}

/// Direction drawn uniformly from the unit sphere in `dim` dimensions.
pub fn unit_sphere_draw(stream: &mut KeyStream, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| stream.next_normal()).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// One sample around `mean`: Gaussian noise of scale `sigma`, renormalized.
pub fn noisy_unit_sample(stream: &mut KeyStream, mean: &[f64], sigma: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = mean.iter().map(|m| m + sigma * stream.next_normal()).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Synthetic stand-in for face embeddings: one unit-sphere class mean per
/// identity, samples at Gaussian distance `within_sigma`, all unit norm.
///
/// Identity `i` uses stream `i` of the seed, so adding identities does not
/// change earlier ones.
pub fn synth_generate<T: Scalar>(p: &SynthParams) -> Result<IdentityDataset<T>> {
    if p.identities < 2 || p.samples_per_identity < 1 || p.dim < 2 || !(p.within_sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "synthetic dataset needs >= 2 identities, >= 1 sample, d >= 2, sigma > 0; got {p:?}"
        )));
    }
    let seed = UserKey(p.seed);
    let identities = (0..p.identities)
        .map(|i| {
            let mut stream = KeyStream::new(seed, i as u64);
            let mean = unit_sphere_draw(&mut stream, p.dim);
            let samples = (0..p.samples_per_identity)
                .map(|s| {
                    let v = noisy_unit_sample(&mut stream, &mean, p.within_sigma);
                    Ok(Sample {
                        id: format!("s{s:03}"),
                        embedding: EmbeddingVector::new(v.into_iter().map(T::of).collect())?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Identity {
                id: format!("id{i:05}"),
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    IdentityDataset::new(p.dim, identities)
}

/// First 8 bytes (little-endian) of SHA-256 of the identity id.
pub fn stable_hash(identity_id: &str) -> u64 {
    let h = Sha256::digest(identity_id.as_bytes());
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

/// Per-identity key: `key_seed XOR stable_hash(identity_id)`.
pub fn identity_key(key_seed: UserKey, identity_id: &str) -> UserKey {
    UserKey(key_seed.0 ^ stable_hash(identity_id))
}

/// Keys for every identity of `ds`, checked for collisions.
pub fn identity_keys<T: Scalar>(ds: &IdentityDataset<T>, key_seed: UserKey) -> Result<Vec<UserKey>> {
    let keys: Vec<UserKey> = ds
        .identities()
        .iter()
        .map(|i| identity_key(key_seed, &i.id))
        .collect();
    let mut owner: HashMap<UserKey, usize> = HashMap::with_capacity(keys.len());
    for (i, k) in keys.iter().enumerate() {
        if let Some(j) = owner.insert(*k, i) {
            return Err(Error::KeyCollision(
                ds.identities()[j].id.clone(),
                ds.identities()[i].id.clone(),
            ));
        }
    }
    Ok(keys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Every user's key is secret.
    Normal,
    /// Impostors present the victim's key with their own biometric.
    Stolen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enrollment {
    pub identity: usize,
    pub sample: SampleRef,
    pub key: UserKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub claimed: usize,
    pub true_identity: usize,
    pub sample: SampleRef,
    pub key: UserKey,
}

impl Probe {
    pub fn is_genuine(&self) -> bool {
        self.claimed == self.true_identity
    }
}

/// Enrollment and probe trials with their assigned keys.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationProtocol {
    pub scenario: Scenario,
    pub key_seed: UserKey,
    pub enrollments: Vec<Enrollment>,
    pub probes: Vec<Probe>,
}

impl VerificationProtocol {
    pub fn genuine_count(&self) -> usize {
        self.probes.iter().filter(|p| p.is_genuine()).count()
    }

    pub fn impostor_count(&self) -> usize {
        self.probes.len() - self.genuine_count()
    }
}

/// Sample 0 of each identity enrolls; every other sample probes every
/// enrolled identity.
pub fn build_protocol<T: Scalar>(
    ds: &IdentityDataset<T>,
    scenario: Scenario,
    key_seed: UserKey,
) -> Result<VerificationProtocol> {
    if let Some(ident) = ds.identities().iter().find(|i| i.samples.len() < 2) {
        return Err(Error::InsufficientSamples(ident.id.clone()));
    }
    let keys = identity_keys(ds, key_seed)?;
    let enrollments = (0..ds.len())
        .map(|i| Enrollment {
            identity: i,
            sample: SampleRef {
                identity: i,
                sample: 0,
            },
            key: keys[i],
        })
        .collect();
    let mut probes = Vec::new();
    for (t, ident) in ds.identities().iter().enumerate() {
        for s in 1..ident.samples.len() {
            for claimed in 0..ds.len() {
                let key = match scenario {
                    Scenario::Normal => keys[t],
                    Scenario::Stolen => keys[claimed],
                };
                probes.push(Probe {
                    claimed,
                    true_identity: t,
                    sample: SampleRef {
                        identity: t,
                        sample: s,
                    },
                    key,
                });
            }
        }
    }
    Ok(VerificationProtocol {
        scenario,
        key_seed,
        enrollments,
        probes,
    })
}
