//! Index-of-Maximum hashing: Gaussian random projections (GRP) and uniformly
//! random permutations (URP).

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::randortho::{KeyStream, Matrix, UserKey};
use crate::scalar::Scalar;
use crate::schemes::template::{ParamsDigest, Payload, ProtectedTemplate, SchemeKind};

/// Stream `GRP_STREAM_BASE + j` holds the `j`-th GRP projection (j from 1).
pub const GRP_STREAM_BASE: u64 = 1 << 32;
/// Stream `URP_STREAM_BASE + j` holds the `j`-th URP permutation (j from 1).
pub const URP_STREAM_BASE: u64 = 2 << 32;

/// Position of the largest value, lowest position on ties.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn grp_digest(d: usize, m: usize, q: usize) -> ParamsDigest {
    ParamsDigest::of(&format!("iom-grp;d={d};m={m};q={q}"))
}

pub fn urp_digest(d: usize, m: usize, window: usize) -> ParamsDigest {
    ParamsDigest::of(&format!("iom-urp;d={d};m={m};window={window}"))
}

#[derive(Debug, Clone)]
pub struct IomGrpHasher<T> {
    projections: Vec<Matrix<T>>,
    digest: ParamsDigest,
}

impl<T: Scalar> IomGrpHasher<T> {
    pub fn new(key: UserKey, d: usize, m: usize, q: usize) -> Result<Self> {
        if m == 0 || q < 2 || d == 0 {
            return Err(Error::InvalidParameter(format!(
                "iom-grp needs m >= 1, q >= 2, d >= 1; got m={m}, q={q}, d={d}"
            )));
        }
        let projections = (1..=m as u64)
            .map(|j| Matrix::gaussian(q, d, &mut KeyStream::new(key, GRP_STREAM_BASE + j)))
            .collect();
        Ok(IomGrpHasher {
            projections,
            digest: grp_digest(d, m, q),
        })
    }

    pub fn projections(&self) -> &[Matrix<T>] {
        &self.projections
    }

    pub fn digest(&self) -> ParamsDigest {
        self.digest
    }

    pub fn hash(&self, u: &EmbeddingVector<T>) -> Result<ProtectedTemplate> {
        u.check_dim(self.projections[0].cols())?;
        let mut buf = Vec::new();
        let indices = self
            .projections
            .iter()
            .map(|w| {
                w.right_mul(u, &mut buf);
                argmax(&buf) as u32
            })
            .collect();
        Ok(ProtectedTemplate {
            scheme: SchemeKind::IomGrp,
            payload: Payload::Indices(indices),
            params_digest: self.digest,
        })
    }
}

#[derive(Debug, Clone)]
pub struct IomUrpHasher {
    permutations: Vec<Vec<usize>>,
    window: usize,
    digest: ParamsDigest,
}

impl IomUrpHasher {
    pub fn new(key: UserKey, d: usize, m: usize, window: usize) -> Result<Self> {
        if m == 0 || window < 2 || window > d {
            return Err(Error::InvalidParameter(format!(
                "iom-urp needs m >= 1 and 2 <= window <= d; got m={m}, window={window}, d={d}"
            )));
        }
        let permutations = (1..=m as u64)
            .map(|j| KeyStream::new(key, URP_STREAM_BASE + j).permutation(d))
            .collect();
        Ok(IomUrpHasher {
            permutations,
            window,
            digest: urp_digest(d, m, window),
        })
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn digest(&self) -> ParamsDigest {
        self.digest
    }

    pub fn hash<T: Scalar>(&self, u: &EmbeddingVector<T>) -> Result<ProtectedTemplate> {
        u.check_dim(self.permutations[0].len())?;
        let mut buf = Vec::with_capacity(self.window);
        let indices = self
            .permutations
            .iter()
            .map(|p| {
                buf.clear();
                buf.extend(p[..self.window].iter().map(|&i| u[i]));
                argmax(&buf) as u32
            })
            .collect();
        Ok(ProtectedTemplate {
            scheme: SchemeKind::IomUrp,
            payload: Payload::Indices(indices),
            params_digest: self.digest,
        })
    }
}

pub fn iom_grp<T: Scalar>(
    u: &EmbeddingVector<T>,
    key: UserKey,
    m: usize,
    q: usize,
) -> Result<ProtectedTemplate> {
    IomGrpHasher::new(key, u.dim(), m, q)?.hash(u)
}

pub fn iom_urp<T: Scalar>(
    u: &EmbeddingVector<T>,
    key: UserKey,
    m: usize,
    window: usize,
) -> Result<ProtectedTemplate> {
    IomUrpHasher::new(key, u.dim(), m, window)?.hash(u)
}
