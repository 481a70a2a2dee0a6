//! Allocation-only kernels for bilinear knowledge-graph embeddings.
//!
//! Everything in this crate is pure computation over slices: the ANALOGY
//! score with almost-diagonal relation maps, its DistMult, ComplEx and HolE
//! special cases, analytic gradients, the logistic loss, the AdaGrad step,
//! negative sampling and rank metrics. IO, threading and linear-algebra
//! heavy tooling live in the `analogy-kge` crate.

#![no_std]

extern crate alloc;

pub mod adagrad;
pub mod error;
pub mod grad;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod score;

pub use adagrad::{adagrad_step, AdaGradParams};
pub use error::CoreError;
pub use grad::{grad_triple, grad_triple_into, object_query, subject_query, TripleGradient};
pub use loss::{logistic_loss, loss_grad_scale};
pub use matrix::DenseMatrix;
pub use metrics::{proportion_test, rank_against, Direction, MetricReport, ProportionTest, RankRecord};
pub use model::{init_params, ModelConfig, ModelKind, ParamTable, INIT_BOUND};
pub use sampler::{corrupt, EpochStream, KnownTriples, Label, LabeledTriple, SamplerConfig, Slot, Triple};
pub use score::{expand_block_diag, make_circulant, score, score_analogy, score_complex, score_distmult, score_hole};
