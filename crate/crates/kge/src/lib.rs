//! Training, evaluation, spectral verification and file formats for
//! ANALOGY-family knowledge-graph embeddings, built on `analogy-core`.

pub mod bench;
pub mod cli;
pub mod data;
pub mod error;
pub mod evaluator;
pub mod kv;
pub mod model;
pub mod spectral;
pub mod synthetic;
pub mod trainer;

pub use error::{KgeError, Result};
