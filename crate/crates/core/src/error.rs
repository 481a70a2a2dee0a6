use thiserror::Error;

use crate::sampler::Slot;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error(
        "invalid block layout: dim {dim} with {scalars} scalar blocks (dim - scalars must be even and non-negative)"
    )]
    InvalidLayout { dim: usize, scalars: usize },
    #[error("complex embeddings need an even dimension, got {0}")]
    OddComplexDim(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("cannot corrupt the {slot:?} slot of a vocabulary with {size} symbols")]
    CannotCorrupt { slot: Slot, size: usize },
    #[error("no admissible negative for the {slot:?} slot: every candidate is a known triple")]
    NoAdmissibleNegative { slot: Slot },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite gradient encountered")]
    NonFinite,
    #[error("reference proportion must lie strictly inside (0, 1), got {0}")]
    DegenerateProportion(f64),
}
