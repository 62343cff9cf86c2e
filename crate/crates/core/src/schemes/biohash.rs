use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::randortho::{orthonormal_from_stream, KeyStream, Matrix, UserKey};
use crate::scalar::Scalar;
use crate::schemes::template::{BitVector, ParamsDigest, Payload, ProtectedTemplate, SchemeKind};

/// Stream id reserved for the BioHash projection.
pub const BIOHASH_STREAM: u64 = 3 << 32;

pub fn biohash_digest(d: usize, out_len: usize) -> ParamsDigest {
    ParamsDigest::of(&format!("biohash;d={d};out={out_len}"))
}

/// BioHashing: orthonormal random projection, thresholded at zero.
#[derive(Debug, Clone)]
pub struct BioHasher<T> {
    projection: Matrix<T>,
    digest: ParamsDigest,
}

impl<T: Scalar> BioHasher<T> {
    pub fn new(key: UserKey, d: usize, out_len: usize) -> Result<Self> {
        if out_len == 0 || out_len > d {
            return Err(Error::InvalidParameter(format!(
                "biohash needs 1 <= out_len <= d, got out_len={out_len}, d={d}"
            )));
        }
        let mut stream = KeyStream::new(key, BIOHASH_STREAM);
        Ok(BioHasher {
            projection: orthonormal_from_stream(&mut stream, out_len, d)?,
            digest: biohash_digest(d, out_len),
        })
    }

    pub fn projection(&self) -> &Matrix<T> {
        &self.projection
    }

    pub fn digest(&self) -> ParamsDigest {
        self.digest
    }

    pub(crate) fn project_raw(&self, x: &[T], out: &mut Vec<T>) {
        self.projection.right_mul(x, out);
    }

    pub fn hash(&self, u: &EmbeddingVector<T>) -> Result<ProtectedTemplate> {
        u.check_dim(self.projection.cols())?;
        let mut proj = Vec::new();
        self.project_raw(u, &mut proj);
        Ok(ProtectedTemplate {
            scheme: SchemeKind::BioHash,
            payload: Payload::Bits(BitVector::from_bools(proj.iter().map(|&p| p > T::zero()))),
            params_digest: self.digest,
        })
    }
}

pub fn biohash<T: Scalar>(
    u: &EmbeddingVector<T>,
    key: UserKey,
    out_len: usize,
) -> Result<ProtectedTemplate> {
    if out_len > u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: out_len,
        });
    }
    BioHasher::new(key, u.dim(), out_len)?.hash(u)
}
