use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

/// An unprotected, real-valued biometric template.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T>(Vec<T>);

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("embedding must have d >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn zeros(d: usize) -> Self {
        EmbeddingVector(vec![T::zero(); d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn norm(&self) -> T {
        norm(&self.0)
    }

    pub fn scaled(&self, c: T) -> Self {
        EmbeddingVector(self.0.iter().map(|&v| v * c).collect())
    }

    /// Unit-norm copy; fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::ZeroVector);
        }
        Ok(self.scaled(T::one() / n))
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl<T> Deref for EmbeddingVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Cosine similarity of two unprotected embeddings, in `[-1, 1]`.
pub fn cosine_score<T: Scalar>(u: &EmbeddingVector<T>, v: &EmbeddingVector<T>) -> Result<f64> {
    v.check_dim(u.dim())?;
    let (nu, nv) = (u.norm().as_f64(), v.norm().as_f64());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let c = dot(u.values(), v.values()).as_f64() / (nu * nv);
    Ok(c.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> EmbeddingVector<f64> {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_score(&e(&[0.3, -2.0]), &e(&[0.3, -2.0])).unwrap(), 1.0);
        assert_eq!(cosine_score(&e(&[1.0, 0.0]), &e(&[0.0, 4.0])).unwrap(), 0.0);
        let c = cosine_score(&e(&[1.0, 0.0]), &e(&[1.0, 1.0])).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_score(&e(&[0.0, 0.0]), &e(&[1.0, 1.0])),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            cosine_score(&e(&[1.0]), &e(&[1.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(EmbeddingVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(EmbeddingVector::<f32>::new(vec![]).is_err());
    }
}
