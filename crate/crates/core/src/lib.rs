//! Cancelable face-template protection by hashing a key-seeded random MLP,
//! with BioHashing and Index-of-Maximum baselines, and the tooling to evaluate
//! unlinkability, irreversibility, accuracy and cost.

pub mod attack;
pub mod dataio;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod protocol;
pub mod randortho;
pub mod scalar;
pub mod schemes;

pub use embedding::{cosine_score, EmbeddingVector};
pub use error::{Error, Result};
pub use randortho::{
    gen_orthonormal_layer, gram_schmidt_rows, seeded_prng, KeyStream, Matrix, OrthonormalStack,
    UserKey,
};
pub use scalar::Scalar;
pub use schemes::{
    biohash, hamming_score, iom_grp, iom_urp, mlp_hash, Encoded, KeyedScheme, MlpHashParams,
    ProtectedTemplate, SchemeConfig, SchemeKind,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Embedding = EmbeddingVector<f64>;
pub type Embedding32 = EmbeddingVector<f32>;
pub type Stack = OrthonormalStack<f64>;
pub type Dataset = protocol::IdentityDataset<f64>;
