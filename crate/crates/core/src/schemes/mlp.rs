use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::randortho::{OrthonormalStack, UserKey};
use crate::scalar::Scalar;
use crate::schemes::template::{BitVector, ParamsDigest, Payload, ProtectedTemplate, SchemeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Relu => v.max(T::zero()),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
        }
    }
}

/// Shape of the keyed MLP: `layer_lengths = [d, hidden.., out]`, so there are
/// `layer_lengths.len() - 2` hidden layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpHashParams {
    pub layer_lengths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    /// Apply the activation after the output layer too, before binarizing.
    #[serde(default = "yes")]
    pub activation_on_output: bool,
}

fn yes() -> bool {
    true
}

impl MlpHashParams {
    pub fn new(layer_lengths: Vec<usize>) -> Result<Self> {
        let p = MlpHashParams {
            layer_lengths,
            activation: Activation::Relu,
            activation_on_output: true,
        };
        p.validate()?;
        Ok(p)
    }

    /// Three hidden layers of width `2d`, output width `d`.
    pub fn for_embedding_dim(d: usize) -> Self {
        Self::with_shape(d, 3, 2 * d, d)
    }

    pub fn with_shape(d: usize, hidden_layers: usize, hidden_width: usize, out: usize) -> Self {
        let mut layer_lengths = vec![d];
        layer_lengths.extend(std::iter::repeat_n(hidden_width, hidden_layers));
        layer_lengths.push(out);
        MlpHashParams {
            layer_lengths,
            activation: Activation::Relu,
            activation_on_output: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_lengths.len() < 2 {
            return Err(Error::InvalidParameter(
                "layer_lengths needs input and output widths".into(),
            ));
        }
        if self.layer_lengths.contains(&0) {
            return Err(Error::InvalidParameter("layer widths must be >= 1".into()));
        }
        Ok(())
    }

    pub fn hidden_layers(&self) -> usize {
        self.layer_lengths.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.layer_lengths[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_lengths.last().expect("validated")
    }

    pub fn digest(&self) -> ParamsDigest {
        let widths: Vec<String> = self.layer_lengths.iter().map(usize::to_string).collect();
        ParamsDigest::of(&format!(
            "mlp-hash;layers={};act={};out_act={}",
            widths.join(","),
            self.activation.name(),
            self.activation_on_output
        ))
    }
}

/// Final-layer activations and their mean threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpForwardTrace<T> {
    pub gamma: Vec<T>,
    pub tau: T,
}

impl<T: Scalar> MlpForwardTrace<T> {
    /// `p_i = 1` iff `gamma_i > tau`.
    pub fn binarize(&self) -> BitVector {
        BitVector::from_bools(self.gamma.iter().map(|&g| g > self.tau))
    }
}

/// MLP-Hash with the weights for one key already generated.
#[derive(Debug, Clone)]
pub struct MlpHasher<T> {
    params: MlpHashParams,
    stack: OrthonormalStack<T>,
    digest: ParamsDigest,
}

impl<T: Scalar> MlpHasher<T> {
    pub fn new(key: UserKey, params: &MlpHashParams) -> Result<Self> {
        params.validate()?;
        Ok(MlpHasher {
            params: params.clone(),
            stack: OrthonormalStack::generate(key, &params.layer_lengths)?,
            digest: params.digest(),
        })
    }

    pub fn params(&self) -> &MlpHashParams {
        &self.params
    }

    pub fn stack(&self) -> &OrthonormalStack<T> {
        &self.stack
    }

    pub fn digest(&self) -> ParamsDigest {
        self.digest
    }

    /// Forward pass without input validation; `x.len()` must equal the input width.
    pub(crate) fn forward_raw(&self, x: &[T]) -> MlpForwardTrace<T> {
        let layers = self.stack.layers();
        let last = layers.len() - 1;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (l, m) in layers.iter().enumerate() {
            m.left_mul(&cur, &mut next);
            if l < last || self.params.activation_on_output {
                for v in next.iter_mut() {
                    *v = self.params.activation.apply(*v);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let tau = cur.iter().copied().sum::<T>() / T::of(cur.len() as f64);
        MlpForwardTrace { gamma: cur, tau }
    }

    pub fn forward(&self, u: &EmbeddingVector<T>) -> Result<MlpForwardTrace<T>> {
        u.check_dim(self.params.input_dim())?;
        Ok(self.forward_raw(u))
    }

    pub fn hash(&self, u: &EmbeddingVector<T>) -> Result<ProtectedTemplate> {
        let trace = self.forward(u)?;
        Ok(ProtectedTemplate {
            scheme: SchemeKind::MlpHash,
            payload: Payload::Bits(trace.binarize()),
            params_digest: self.digest,
        })
    }
}

/// Protect `u` with MLP-Hash under `key`.
pub fn mlp_hash<T: Scalar>(
    u: &EmbeddingVector<T>,
    key: UserKey,
    params: &MlpHashParams,
) -> Result<ProtectedTemplate> {
    u.check_dim(params.input_dim())?;
    MlpHasher::new(key, params)?.hash(u)
}
