use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::randortho::{gen_orthonormal_layer, Matrix, UserKey};
use crate::scalar::Scalar;
use crate::schemes::{KeyedScheme, Payload, ProtectedTemplate};

pub const DEFAULT_MARGIN: f64 = 1e-3;

#[inline]
fn hinge(margin: f64, signed_gap: f64) -> f64 {
    (margin - signed_gap).max(0.0)
}

/// Hinge surrogate that is zero exactly when protecting `x` reproduces every
/// bit (or index) of `target` with at least `margin` to spare.
///
/// Binary schemes sum `max(0, margin - s_i (v_i - t))` where `s_i = ±1` is the
/// target bit and `v_i - t` the value's gap to the binarization threshold.
/// IoM schemes sum `max(0, margin - (p_t - p_k))` over every competitor `k` of
/// the target index `t` in each group.
pub fn inversion_loss<T: Scalar>(
    x: &EmbeddingVector<T>,
    target: &ProtectedTemplate,
    keyed: &KeyedScheme<T>,
    margin: f64,
) -> Result<f64> {
    let d = match keyed {
        KeyedScheme::Unprotected { .. } => return Err(Error::SchemeMismatch),
        KeyedScheme::MlpHash(h) => h.params().input_dim(),
        KeyedScheme::BioHash(h) => h.projection().cols(),
        KeyedScheme::IomGrp(h) => h.projections()[0].cols(),
        KeyedScheme::IomUrp(h) => h.permutations()[0].len(),
    };
    x.check_dim(d)?;
    let probe = keyed.protect_template(x)?;
    if probe.scheme != target.scheme || probe.params_digest != target.params_digest {
        return Err(Error::SchemeMismatch);
    }
    if probe.len() != target.len() {
        return Err(Error::LengthMismatch(probe.len(), target.len()));
    }
    Ok(template_loss(x, target, keyed, margin))
}

/// Unchecked form of [`inversion_loss`] used inside the optimizer loop.
pub(crate) fn template_loss<T: Scalar>(
    x: &[T],
    target: &ProtectedTemplate,
    keyed: &KeyedScheme<T>,
    margin: f64,
) -> f64 {
    match (keyed, &target.payload) {
        (KeyedScheme::MlpHash(h), Payload::Bits(bits)) => {
            let trace = h.forward_raw(x);
            let tau = trace.tau.as_f64();
            trace
                .gamma
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let gap = g.as_f64() - tau;
                    hinge(margin, if bits.get(i) { gap } else { -gap })
                })
                .sum()
        }
        (KeyedScheme::BioHash(h), Payload::Bits(bits)) => {
            let mut proj = Vec::new();
            h.project_raw(x, &mut proj);
            proj.iter()
                .enumerate()
                .map(|(i, p)| {
                    let v = p.as_f64();
                    hinge(margin, if bits.get(i) { v } else { -v })
                })
                .sum()
        }
        (KeyedScheme::IomGrp(h), Payload::Indices(idx)) => {
            let mut buf = Vec::new();
            h.projections()
                .iter()
                .zip(idx)
                .map(|(w, &t)| {
                    w.right_mul(x, &mut buf);
                    group_loss(buf.iter().map(|v| v.as_f64()), t as usize, margin)
                })
                .sum()
        }
        (KeyedScheme::IomUrp(h), Payload::Indices(idx)) => h
            .permutations()
            .iter()
            .zip(idx)
            .map(|(p, &t)| {
                group_loss(
                    p[..h.window()].iter().map(|&i| x[i].as_f64()),
                    t as usize,
                    margin,
                )
            })
            .sum(),
        _ => f64::INFINITY,
    }
}

fn group_loss(values: impl Iterator<Item = f64> + Clone, t: usize, margin: f64) -> f64 {
    let Some(pt) = values.clone().nth(t) else {
        return f64::INFINITY;
    };
    values
        .enumerate()
        .filter(|&(k, _)| k != t)
        .map(|(_, pk)| hinge(margin, pt - pk))
        .sum()
}

/// Solver sanity target: one square orthonormal layer with no activation and
/// no binarization, so the unique pre-image is `y Mᵀ`.
#[derive(Debug, Clone)]
pub struct LinearTarget<T> {
    matrix: Matrix<T>,
    y: Vec<T>,
    y_norm2: f64,
}

impl<T: Scalar> LinearTarget<T> {
    pub fn new(key: UserKey, truth: &EmbeddingVector<T>) -> Result<Self> {
        let d = truth.dim();
        let matrix = gen_orthonormal_layer::<T>(key, 1, d, d)?;
        let mut y = Vec::new();
        matrix.left_mul(truth, &mut y);
        let y_norm2: f64 = y.iter().map(|v| v.as_f64().powi(2)).sum();
        if y_norm2 == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(LinearTarget { matrix, y, y_norm2 })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn output(&self) -> &[T] {
        &self.y
    }

    /// Relative squared residual `‖xM - y‖² / ‖y‖²`.
    pub fn loss(&self, x: &[T]) -> f64 {
        let mut out = Vec::with_capacity(self.y.len());
        self.matrix.left_mul(x, &mut out);
        out.iter()
            .zip(&self.y)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
            .sum::<f64>()
            / self.y_norm2
    }
}

/// [`LinearTarget::loss`] with a dimension check.
pub fn linear_loss<T: Scalar>(x: &EmbeddingVector<T>, target: &LinearTarget<T>) -> Result<f64> {
    x.check_dim(target.matrix.rows())?;
    Ok(target.loss(x))
}
