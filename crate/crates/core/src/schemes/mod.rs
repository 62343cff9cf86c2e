//! The protection schemes behind one interface.

mod biohash;
mod iom;
mod mlp;
mod template;

use serde::{Deserialize, Serialize};

pub use biohash::{biohash, biohash_digest, BioHasher, BIOHASH_STREAM};
pub use iom::{
    argmax, grp_digest, iom_grp, iom_urp, urp_digest, IomGrpHasher, IomUrpHasher, GRP_STREAM_BASE,
    URP_STREAM_BASE,
};
pub use mlp::{mlp_hash, Activation, MlpForwardTrace, MlpHashParams, MlpHasher};
pub use template::{
    hamming_score, BitVector, ParamsDigest, Payload, ProtectedTemplate, SchemeKind,
};

use crate::embedding::{cosine_score, EmbeddingVector};
use crate::error::{Error, Result};
use crate::randortho::UserKey;
use crate::scalar::Scalar;

/// Default IoM-GRP projection count per hash position.
pub const DEFAULT_IOM_Q: usize = 16;
/// Default IoM-URP window.
pub const DEFAULT_IOM_WINDOW: usize = 16;

/// A fully resolved scheme choice, including the embedding dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum SchemeConfig {
    /// Raw embeddings compared by cosine; ignores keys.
    Unprotected { dim: usize },
    MlpHash(MlpHashParams),
    BioHash { dim: usize, out_len: usize },
    IomGrp { dim: usize, m: usize, q: usize },
    IomUrp { dim: usize, m: usize, window: usize },
}

impl SchemeConfig {
    /// Defaults for embedding dimension `d`: every template has length `d`,
    /// MLP-Hash uses three hidden layers of width `2d`.
    pub fn default_for(kind: SchemeKind, d: usize) -> Self {
        match kind {
            SchemeKind::MlpHash => SchemeConfig::MlpHash(MlpHashParams::for_embedding_dim(d)),
            SchemeKind::BioHash => SchemeConfig::BioHash { dim: d, out_len: d },
            SchemeKind::IomGrp => SchemeConfig::IomGrp {
                dim: d,
                m: d,
                q: DEFAULT_IOM_Q,
            },
            SchemeKind::IomUrp => SchemeConfig::IomUrp {
                dim: d,
                m: d,
                window: DEFAULT_IOM_WINDOW.min(d),
            },
        }
    }

    pub fn kind(&self) -> Option<SchemeKind> {
        match self {
            SchemeConfig::Unprotected { .. } => None,
            SchemeConfig::MlpHash(_) => Some(SchemeKind::MlpHash),
            SchemeConfig::BioHash { .. } => Some(SchemeKind::BioHash),
            SchemeConfig::IomGrp { .. } => Some(SchemeKind::IomGrp),
            SchemeConfig::IomUrp { .. } => Some(SchemeKind::IomUrp),
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().map_or("unprotected", SchemeKind::name)
    }

    pub fn input_dim(&self) -> usize {
        match self {
            SchemeConfig::Unprotected { dim }
            | SchemeConfig::BioHash { dim, .. }
            | SchemeConfig::IomGrp { dim, .. }
            | SchemeConfig::IomUrp { dim, .. } => *dim,
            SchemeConfig::MlpHash(p) => p.input_dim(),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            SchemeConfig::Unprotected { dim } => *dim,
            SchemeConfig::MlpHash(p) => p.output_len(),
            SchemeConfig::BioHash { out_len, .. } => *out_len,
            SchemeConfig::IomGrp { m, .. } | SchemeConfig::IomUrp { m, .. } => *m,
        }
    }

    pub fn uses_key(&self) -> bool {
        !matches!(self, SchemeConfig::Unprotected { .. })
    }

    pub fn digest(&self) -> ParamsDigest {
        match self {
            SchemeConfig::Unprotected { dim } => ParamsDigest::of(&format!("unprotected;d={dim}")),
            SchemeConfig::MlpHash(p) => p.digest(),
            SchemeConfig::BioHash { dim, out_len } => biohash_digest(*dim, *out_len),
            SchemeConfig::IomGrp { dim, m, q } => grp_digest(*dim, *m, *q),
            SchemeConfig::IomUrp { dim, m, window } => urp_digest(*dim, *m, *window),
        }
    }

    /// Generate the key-dependent material.
    pub fn keyed<T: Scalar>(&self, key: UserKey) -> Result<KeyedScheme<T>> {
        Ok(match self {
            SchemeConfig::Unprotected { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("dim must be >= 1".into()));
                }
                KeyedScheme::Unprotected { dim: *dim }
            }
            SchemeConfig::MlpHash(p) => KeyedScheme::MlpHash(MlpHasher::new(key, p)?),
            SchemeConfig::BioHash { dim, out_len } => {
                KeyedScheme::BioHash(BioHasher::new(key, *dim, *out_len)?)
            }
            SchemeConfig::IomGrp { dim, m, q } => {
                KeyedScheme::IomGrp(IomGrpHasher::new(key, *dim, *m, *q)?)
            }
            SchemeConfig::IomUrp { dim, m, window } => {
                KeyedScheme::IomUrp(IomUrpHasher::new(key, *dim, *m, *window)?)
            }
        })
    }

    /// One-shot protection: derive the key material and apply it.
    pub fn protect<T: Scalar>(&self, u: &EmbeddingVector<T>, key: UserKey) -> Result<Encoded<T>> {
        u.check_dim(self.input_dim())?;
        self.keyed(key)?.protect(u)
    }
}

/// A scheme instantiated for one key.
#[derive(Debug, Clone)]
pub enum KeyedScheme<T> {
    Unprotected { dim: usize },
    MlpHash(MlpHasher<T>),
    BioHash(BioHasher<T>),
    IomGrp(IomGrpHasher<T>),
    IomUrp(IomUrpHasher),
}

impl<T: Scalar> KeyedScheme<T> {
    pub fn protect(&self, u: &EmbeddingVector<T>) -> Result<Encoded<T>> {
        Ok(match self {
            KeyedScheme::Unprotected { dim } => {
                u.check_dim(*dim)?;
                Encoded::Plain(u.clone())
            }
            KeyedScheme::MlpHash(h) => Encoded::Protected(h.hash(u)?),
            KeyedScheme::BioHash(h) => Encoded::Protected(h.hash(u)?),
            KeyedScheme::IomGrp(h) => Encoded::Protected(h.hash(u)?),
            KeyedScheme::IomUrp(h) => Encoded::Protected(h.hash(u)?),
        })
    }

    /// Protect, expecting a protected template (fails for the unprotected scheme).
    pub fn protect_template(&self, u: &EmbeddingVector<T>) -> Result<ProtectedTemplate> {
        match self.protect(u)? {
            Encoded::Protected(t) => Ok(t),
            Encoded::Plain(_) => Err(Error::SchemeMismatch),
        }
    }
}

/// What the database stores: a protected template, or the raw embedding for
/// the unprotected baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoded<T> {
    Protected(ProtectedTemplate),
    Plain(EmbeddingVector<T>),
}

impl<T: Scalar> Encoded<T> {
    /// Similarity, higher is more similar: Hamming similarity for protected
    /// templates, cosine for raw embeddings.
    pub fn score(&self, other: &Encoded<T>) -> Result<f64> {
        match (self, other) {
            (Encoded::Protected(a), Encoded::Protected(b)) => hamming_score(a, b),
            (Encoded::Plain(a), Encoded::Plain(b)) => cosine_score(a, b),
            _ => Err(Error::SchemeMismatch),
        }
    }
}
