//! Analytic gradients of the bilinear scores.
//!
//! Every score is linear in each of `s`, `r` and `o` separately, so
//! `∂φ/∂o` depends only on `(s, r)` and `∂φ/∂s` only on `(r, o)`. The
//! evaluator reuses these "query vectors" to score all candidate entities
//! with one dot product each.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::model::{ModelConfig, ModelKind};
use crate::score::{check_layout, check_len, circulant_entry};

#[derive(Debug, Clone, PartialEq)]
pub struct TripleGradient {
    pub d_subject: Vec<f64>,
    pub d_object: Vec<f64>,
    pub d_relation: Vec<f64>,
}

impl TripleGradient {
    pub fn zeros(dim: usize) -> Self {
        Self { d_subject: vec![0.0; dim], d_object: vec![0.0; dim], d_relation: vec![0.0; dim] }
    }

    pub fn is_finite(&self) -> bool {
        self.d_subject.iter().chain(&self.d_object).chain(&self.d_relation).all(|v| v.is_finite())
    }
}

fn check_config(config: &ModelConfig, a: &[f64], b: &[f64]) -> Result<(), CoreError> {
    check_len(config.dim, a.len())?;
    check_len(config.dim, b.len())?;
    match config.kind {
        ModelKind::Analogy => check_layout(config.dim, config.scalars),
        ModelKind::ComplEx if !config.dim.is_multiple_of(2) => Err(CoreError::OddComplexDim(config.dim)),
        _ => Ok(()),
    }
}

/// Writes `∂φ/∂s` (that is `W_r o`) into `out`.
pub fn subject_query_into(config: &ModelConfig, r: &[f64], o: &[f64], out: &mut [f64]) -> Result<(), CoreError> {
    check_config(config, r, o)?;
    check_len(config.dim, out.len())?;
    let m = config.dim;
    match config.kind {
        ModelKind::Analogy => {
            let n = config.scalars;
            for i in 0..n {
                out[i] = r[i] * o[i];
            }
            for p in (n..m).step_by(2) {
                let (x, y) = (r[p], r[p + 1]);
                out[p] = x * o[p] - y * o[p + 1];
                out[p + 1] = y * o[p] + x * o[p + 1];
            }
        }
        ModelKind::DistMult => {
            for i in 0..m {
                out[i] = r[i] * o[i];
            }
        }
        ModelKind::ComplEx => {
            for k in 0..m / 2 {
                let (r_im, r_re) = (r[2 * k], r[2 * k + 1]);
                let (o_im, o_re) = (o[2 * k], o[2 * k + 1]);
                out[2 * k] = r_re * o_im - r_im * o_re;
                out[2 * k + 1] = r_re * o_re + r_im * o_im;
            }
        }
        ModelKind::HolE => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = (0..m).map(|j| circulant_entry(r, i, j) * o[j]).sum();
            }
        }
    }
    Ok(())
}

/// Writes `∂φ/∂o` (that is `W_rᵀ s`) into `out`.
pub fn object_query_into(config: &ModelConfig, s: &[f64], r: &[f64], out: &mut [f64]) -> Result<(), CoreError> {
    check_config(config, s, r)?;
    check_len(config.dim, out.len())?;
    let m = config.dim;
    match config.kind {
        ModelKind::Analogy => {
            let n = config.scalars;
            for i in 0..n {
                out[i] = r[i] * s[i];
            }
            for p in (n..m).step_by(2) {
                let (x, y) = (r[p], r[p + 1]);
                out[p] = x * s[p] + y * s[p + 1];
                out[p + 1] = x * s[p + 1] - y * s[p];
            }
        }
        ModelKind::DistMult => {
            for i in 0..m {
                out[i] = r[i] * s[i];
            }
        }
        ModelKind::ComplEx => {
            for k in 0..m / 2 {
                let (s_im, s_re) = (s[2 * k], s[2 * k + 1]);
                let (r_im, r_re) = (r[2 * k], r[2 * k + 1]);
                out[2 * k] = s_re * r_im + s_im * r_re;
                out[2 * k + 1] = s_re * r_re - s_im * r_im;
            }
        }
        ModelKind::HolE => {
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = (0..m).map(|i| s[i] * circulant_entry(r, i, j)).sum();
            }
        }
    }
    Ok(())
}

/// Writes `∂φ/∂r` into `out`.
pub fn relation_grad_into(config: &ModelConfig, s: &[f64], o: &[f64], out: &mut [f64]) -> Result<(), CoreError> {
    check_config(config, s, o)?;
    check_len(config.dim, out.len())?;
    let m = config.dim;
    match config.kind {
        ModelKind::Analogy => {
            let n = config.scalars;
            for i in 0..n {
                out[i] = s[i] * o[i];
            }
            for p in (n..m).step_by(2) {
                out[p] = s[p] * o[p] + s[p + 1] * o[p + 1];
                out[p + 1] = s[p + 1] * o[p] - s[p] * o[p + 1];
            }
        }
        ModelKind::DistMult => {
            for i in 0..m {
                out[i] = s[i] * o[i];
            }
        }
        ModelKind::ComplEx => {
            for k in 0..m / 2 {
                let (s_im, s_re) = (s[2 * k], s[2 * k + 1]);
                let (o_im, o_re) = (o[2 * k], o[2 * k + 1]);
                out[2 * k] = s_re * o_im - s_im * o_re;
                out[2 * k + 1] = s_re * o_re + s_im * o_im;
            }
        }
        ModelKind::HolE => {
            // entry k collects s_i o_j over all i - j ≡ k (mod m)
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = (0..m).map(|j| s[(j + k) % m] * o[j]).sum();
            }
        }
    }
    Ok(())
}

pub fn subject_query(config: &ModelConfig, r: &[f64], o: &[f64]) -> Result<Vec<f64>, CoreError> {
    let mut out = vec![0.0; config.dim];
    subject_query_into(config, r, o, &mut out)?;
    Ok(out)
}

pub fn object_query(config: &ModelConfig, s: &[f64], r: &[f64]) -> Result<Vec<f64>, CoreError> {
    let mut out = vec![0.0; config.dim];
    object_query_into(config, s, r, &mut out)?;
    Ok(out)
}

/// All three partial derivatives of φ at `(s, r, o)`, written into `grad`.
pub fn grad_triple_into(
    config: &ModelConfig,
    s: &[f64],
    r: &[f64],
    o: &[f64],
    grad: &mut TripleGradient,
) -> Result<(), CoreError> {
    subject_query_into(config, r, o, &mut grad.d_subject)?;
    object_query_into(config, s, r, &mut grad.d_object)?;
    relation_grad_into(config, s, o, &mut grad.d_relation)
}

pub fn grad_triple(config: &ModelConfig, s: &[f64], r: &[f64], o: &[f64]) -> Result<TripleGradient, CoreError> {
    let mut grad = TripleGradient::zeros(config.dim);
    grad_triple_into(config, s, r, o, &mut grad)?;
    Ok(grad)
}
