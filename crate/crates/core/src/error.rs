use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate draw: residual of row {row} vanished after {retries} redraws")]
    DegenerateDraw { row: usize, retries: usize },

    #[error("templates come from different schemes or parameter sets")]
    SchemeMismatch,

    #[error("template length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("empty score distribution: {0}")]
    EmptyDistribution(&'static str),

    #[error("identity {0} has fewer than 2 samples")]
    InsufficientSamples(String),

    #[error("derived keys collide for identities {0} and {1}")]
    KeyCollision(String, String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: expected {expected} features, found {found}")]
    RowDimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
