//! Score functions φ(s, r, o) for the four bilinear model families.
//!
//! Relation rows are packed per model kind:
//! - ANALOGY: `[d_1..d_n, x_1, y_1, ..., x_p, y_p]`, each `(x, y)` pair being
//!   the 2x2 block `[[x, -y], [y, x]]`.
//! - DistMult: the diagonal of the relation matrix.
//! - ComplEx: `dim / 2` complex coefficients stored as `(Im, Re)` pairs, the
//!   same interleaving used for entity vectors.
//! - HolE: the generator of a circulant matrix.

use crate::error::CoreError;
use crate::matrix::DenseMatrix;
use crate::model::{ModelConfig, ModelKind};

pub(crate) fn check_len(expected: usize, found: usize) -> Result<(), CoreError> {
    if expected != found {
        return Err(CoreError::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_triple(s: &[f64], r: &[f64], o: &[f64]) -> Result<(), CoreError> {
    check_len(s.len(), r.len())?;
    check_len(s.len(), o.len())
}

pub(crate) fn check_layout(dim: usize, scalars: usize) -> Result<(), CoreError> {
    if scalars > dim || !(dim - scalars).is_multiple_of(2) {
        return Err(CoreError::InvalidLayout { dim, scalars });
    }
    Ok(())
}

/// `u_sᵀ B_r u_o` for an almost-diagonal `B_r`, in O(m) without expanding it.
pub fn score_analogy(s: &[f64], r: &[f64], o: &[f64], scalars: usize) -> Result<f64, CoreError> {
    check_triple(s, r, o)?;
    check_layout(s.len(), scalars)?;
    let mut acc = 0.0;
    for i in 0..scalars {
        acc += r[i] * (s[i] * o[i]);
    }
    let mut p = scalars;
    while p < s.len() {
        let (x, y) = (r[p], r[p + 1]);
        let (s1, s2) = (s[p], s[p + 1]);
        let (o1, o2) = (o[p], o[p + 1]);
        acc += x * (s1 * o1 + s2 * o2) + y * (s2 * o1 - s1 * o2);
        p += 2;
    }
    Ok(acc)
}

/// Trilinear product `Σ_i s_i r_i o_i`.
pub fn score_distmult(s: &[f64], r: &[f64], o: &[f64]) -> Result<f64, CoreError> {
    check_triple(s, r, o)?;
    Ok(s.iter().zip(r).zip(o).map(|((a, b), c)| b * (a * c)).sum())
}

/// `Re(⟨s, r, conj(o)⟩)` over `dim / 2` complex coordinates stored `(Im, Re)`.
pub fn score_complex(s: &[f64], r: &[f64], o: &[f64]) -> Result<f64, CoreError> {
    check_triple(s, r, o)?;
    if !s.len().is_multiple_of(2) {
        return Err(CoreError::OddComplexDim(s.len()));
    }
    let mut acc = 0.0;
    for k in 0..s.len() / 2 {
        let (s_im, s_re) = (s[2 * k], s[2 * k + 1]);
        let (r_im, r_re) = (r[2 * k], r[2 * k + 1]);
        let (o_im, o_re) = (o[2 * k], o[2 * k + 1]);
        // (s * r) * conj(o), real part
        let sr_re = s_re * r_re - s_im * r_im;
        let sr_im = s_re * r_im + s_im * r_re;
        acc += sr_re * o_re + sr_im * o_im;
    }
    Ok(acc)
}

/// Entry `(row, col)` of the circulant matrix generated by `x`.
#[inline]
pub(crate) fn circulant_entry(x: &[f64], row: usize, col: usize) -> f64 {
    let m = x.len();
    x[(row + m - col) % m]
}

/// `sᵀ C(r) o` with `C` the circulant matrix of [`make_circulant`], O(m²).
pub fn score_hole(s: &[f64], r: &[f64], o: &[f64]) -> Result<f64, CoreError> {
    check_triple(s, r, o)?;
    let m = s.len();
    let mut acc = 0.0;
    for i in 0..m {
        if s[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..m {
            row += circulant_entry(r, i, j) * o[j];
        }
        acc += s[i] * row;
    }
    Ok(acc)
}

/// Dispatches to the score function of `config.kind`.
pub fn score(config: &ModelConfig, s: &[f64], r: &[f64], o: &[f64]) -> Result<f64, CoreError> {
    check_len(config.dim, s.len())?;
    match config.kind {
        ModelKind::Analogy => score_analogy(s, r, o, config.scalars),
        ModelKind::DistMult => score_distmult(s, r, o),
        ModelKind::ComplEx => score_complex(s, r, o),
        ModelKind::HolE => score_hole(s, r, o),
    }
}

/// Circulant matrix with first column `x`: `C[i][j] = x[(i - j) mod m]`.
pub fn make_circulant(x: &[f64]) -> Result<DenseMatrix, CoreError> {
    if x.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let m = x.len();
    let mut c = DenseMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            c.set(i, j, circulant_entry(x, i, j));
        }
    }
    Ok(c)
}

/// Dense almost-diagonal matrix for a packed ANALOGY relation row.
pub fn expand_block_diag(r: &[f64], dim: usize, scalars: usize) -> Result<DenseMatrix, CoreError> {
    check_layout(dim, scalars)?;
    check_len(dim, r.len())?;
    let mut b = DenseMatrix::zeros(dim);
    for i in 0..scalars {
        b.set(i, i, r[i]);
    }
    let mut p = scalars;
    while p < dim {
        let (x, y) = (r[p], r[p + 1]);
        b.set(p, p, x);
        b.set(p, p + 1, -y);
        b.set(p + 1, p, y);
        b.set(p + 1, p + 1, x);
        p += 2;
    }
    Ok(b)
}
