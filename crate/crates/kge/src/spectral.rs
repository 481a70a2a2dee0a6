//! Commuting normal families and their simultaneous real block-diagonalization.
//!
//! A family of pairwise-commuting real normal matrices shares one real
//! orthogonal basis `Q` in which every member is almost-diagonal: scalar
//! 1x1 blocks followed by 2x2 rotation-scaling blocks `[[x, -y], [y, x]]`.
//! [`simul_block_diagonalize`] constructs that basis numerically and
//! [`verify_corollary_equivalence`] checks that dense bilinear scores
//! `v_sᵀ W_r v_o` equal the packed scores `u_sᵀ B_r u_o` with `u = vQ`.

use std::fmt::Write as _;
use std::path::Path;

use analogy_core::rng::stream_rng;
use analogy_core::{expand_block_diag, score_analogy, DenseMatrix, ParamTable, Triple};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{KgeError, Result};

/// Dense real square matrix `W_r`.
pub type DenseRelation = DMatrix<f64>;

const MAX_ATTEMPTS: usize = 5;

/// Real orthogonal basis shared by a commuting family.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalBasis(DMatrix<f64>);

impl OrthogonalBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `‖QᵀQ − I‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.dim();
        (self.0.transpose() * &self.0 - DMatrix::identity(n, n)).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Scalar,
    Pair,
}

/// Block partition shared by every member of a decomposed family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub blocks: Vec<Block>,
}

impl BlockLayout {
    pub fn new(scalars: usize, pairs: usize) -> Self {
        let mut blocks = vec![Block::Scalar; scalars];
        blocks.extend(std::iter::repeat_n(Block::Pair, pairs));
        Self { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| if *b == Block::Scalar { 1 } else { 2 }).sum()
    }

    pub fn scalars(&self) -> usize {
        self.blocks.iter().filter(|b| **b == Block::Scalar).count()
    }
}

/// Norm facts for one conjugate eigenvector pair `q = a + ib`, measured on
/// the raw unit eigenvector before realification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDiagnostics {
    pub a_norm_sq: f64,
    pub b_norm_sq: f64,
    pub a_dot_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub basis: OrthogonalBasis,
    /// Packed almost-diagonal parameters, one row per family member.
    pub blocks: Vec<Vec<f64>>,
    pub layout: BlockLayout,
    /// `‖A_i − Q expand(B_i) Qᵀ‖_F` per member.
    pub reconstruction_residuals: Vec<f64>,
    /// `‖QᵀA_iQ − expand(B_i)‖_F` per member: the mass discarded when
    /// projecting onto the block pattern.
    pub projection_residuals: Vec<f64>,
    pub conjugate_pairs: Vec<PairDiagnostics>,
    pub attempts: usize,
}

impl Decomposition {
    pub fn max_reconstruction_residual(&self) -> f64 {
        self.reconstruction_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn expanded(&self, i: usize) -> DMatrix<f64> {
        let m = self.layout.dim();
        to_nalgebra(&expand_block_diag(&self.blocks[i], m, self.layout.scalars()).expect("layout is consistent"))
    }
}

pub fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(KgeError::Precondition {
            what: format!("matrix is {}x{}, not square", a.nrows(), a.ncols()),
            residual: f64::NAN,
        });
    }
    Ok(())
}

/// `‖AAᵀ − AᵀA‖_F / max(1, ‖A‖_F²)`.
pub fn normality_residual(a: &DMatrix<f64>) -> Result<f64> {
    check_square(a)?;
    let at = a.transpose();
    Ok((a * &at - &at * a).norm() / a.norm_squared().max(1.0))
}

/// `‖AB − BA‖_F / max(1, ‖A‖_F ‖B‖_F)`.
pub fn commutator_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check_square(a)?;
    check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(KgeError::Precondition {
            what: format!("dimension mismatch {} vs {}", a.nrows(), b.nrows()),
            residual: f64::NAN,
        });
    }
    Ok((a * b - b * a).norm() / (a.norm() * b.norm()).max(1.0))
}

pub fn is_normal(a: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(normality_residual(a)? <= tol)
}

pub fn commutes(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(commutator_residual(a, b)? <= tol)
}

/// Fails unless every member is normal and every pair commutes at `tol`.
pub fn check_commuting_normal(family: &[DMatrix<f64>], tol: f64) -> Result<()> {
    let Some(first) = family.first() else {
        return Err(KgeError::Precondition { what: "empty family".into(), residual: f64::NAN });
    };
    for (i, a) in family.iter().enumerate() {
        if a.nrows() != first.nrows() {
            return Err(KgeError::Precondition {
                what: format!("member {i} has dimension {} (expected {})", a.nrows(), first.nrows()),
                residual: f64::NAN,
            });
        }
        let res = normality_residual(a)?;
        if res > tol {
            return Err(KgeError::Precondition { what: format!("member {i} is not normal"), residual: res });
        }
    }
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let res = commutator_residual(&family[i], &family[j])?;
            if res > tol {
                return Err(KgeError::Precondition {
                    what: format!("members {i} and {j} do not commute"),
                    residual: res,
                });
            }
        }
    }
    Ok(())
}

/// Unit eigenvectors of a real normal matrix, with their eigenvalues.
///
/// For normal `M`, the symmetric part `S` and skew part `K` share `M`'s
/// eigenvectors, with `Sq = αq` and `Kq = iβq` when `Mq = (α + iβ)q`. The
/// Hermitian matrix `S + i·t·K` then has the same eigenvectors with real
/// eigenvalues `α − tβ`; a generic `t` keeps `q` and `conj(q)` apart.
fn normal_eigen(m: &DMatrix<f64>, t: f64) -> (Vec<Complex64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let mt = m.transpose();
    let herm = DMatrix::from_fn(n, n, |i, j| {
        let sym = 0.5 * (m[(i, j)] + mt[(i, j)]);
        let skew = 0.5 * (m[(i, j)] - mt[(i, j)]);
        Complex64::new(sym, t * skew)
    });
    let eig = herm.symmetric_eigen();
    let vectors = eig.eigenvectors;
    let mc = m.map(|v| Complex64::new(v, 0.0));
    let values = (0..n)
        .map(|j| {
            let q = vectors.column(j);
            // Rayleigh quotient q^H M q with unit q
            (q.adjoint() * &mc * q)[(0, 0)]
        })
        .collect();
    (values, vectors)
}

/// Greedy pivoted Gram-Schmidt: picks `count` orthonormal vectors spanning
/// as much of `pool` as possible, always taking the largest residual next.
fn pivoted_orthonormal(pool: Vec<DVector<f64>>, basis: &[DVector<f64>], count: usize) -> Option<Vec<DVector<f64>>> {
    let mut residuals: Vec<DVector<f64>> = pool
        .into_iter()
        .map(|mut v| {
            for b in basis {
                v -= b * b.dot(&v);
            }
            v
        })
        .collect();
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let (best, norm) =
            residuals.iter().enumerate().map(|(i, v)| (i, v.norm())).max_by(|a, b| a.1.total_cmp(&b.1))?;
        if norm < 1e-6 {
            return None;
        }
        let unit = residuals.swap_remove(best) / norm;
        for v in residuals.iter_mut() {
            *v -= &unit * unit.dot(v);
        }
        chosen.push(unit);
    }
    Some(chosen)
}

/// Modified Gram-Schmidt over the columns, in order.
fn reorthonormalize(q: &mut DMatrix<f64>) {
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let ck = q.column(k).clone_owned();
                q.column_mut(j).axpy(-proj, &ck, 1.0);
            }
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
}

struct Attempt {
    basis: DMatrix<f64>,
    scalars: usize,
    pairs: usize,
    diagnostics: Vec<PairDiagnostics>,
}

fn attempt_basis(family: &[DMatrix<f64>], seed: u64, attempt: u64) -> Option<Attempt> {
    let n = family[0].nrows();
    let mut rng = stream_rng(seed, attempt);
    let mut combo = DMatrix::zeros(n, n);
    for a in family {
        combo += a * rng.random_range(0.5..1.5);
    }
    let (values, vectors) = normal_eigen(&combo, rng.random_range(0.5..1.5));
    let radius = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let threshold = 1e-8 * radius.max(f64::MIN_POSITIVE);

    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (j, v) in values.iter().enumerate() {
        if v.im.abs() <= threshold {
            real.push(j);
        } else if v.im > 0.0 {
            upper.push(j);
        } else {
            lower.push(j);
        }
    }
    // every eigenvalue in the upper half-plane needs a conjugate partner
    if upper.len() != lower.len() {
        return None;
    }
    let mut unmatched = lower.clone();
    for &j in &upper {
        let target = values[j].conj();
        let (pos, dist) = unmatched
            .iter()
            .enumerate()
            .map(|(p, &k)| (p, (values[k] - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if dist > 1e-6 * radius.max(1.0) {
            return None;
        }
        unmatched.swap_remove(pos);
    }

    // real eigenvalues: real and imaginary parts both lie in the real
    // eigenspace; keep an orthonormal selection of the right size
    let pool: Vec<DVector<f64>> = real
        .iter()
        .flat_map(|&j| {
            let q = vectors.column(j);
            let re = q.map(|c| c.re);
            let im = q.map(|c| c.im);
            if re.norm() >= im.norm() {
                [re, im]
            } else {
                [im, re]
            }
        })
        .collect();
    let real_basis = pivoted_orthonormal(pool, &[], real.len())?;

    let mut columns = real_basis;
    let mut diagnostics = Vec::with_capacity(upper.len());
    for &j in &upper {
        let q = vectors.column(j);
        let a = q.map(|c| c.re);
        let b = q.map(|c| c.im);
        diagnostics.push(PairDiagnostics {
            a_norm_sq: a.norm_squared(),
            b_norm_sq: b.norm_squared(),
            a_dot_b: a.dot(&b),
        });
        columns.push(a * std::f64::consts::SQRT_2);
        columns.push(b * std::f64::consts::SQRT_2);
    }
    let mut basis = DMatrix::from_columns(&columns);
    reorthonormalize(&mut basis);
    Some(Attempt { basis, scalars: real.len(), pairs: upper.len(), diagnostics })
}

/// Reads packed block parameters off `C = QᵀAQ`, averaging the two
/// diagonal entries and antisymmetrizing the off-diagonals of each 2x2 block.
fn project_blocks(c: &DMatrix<f64>, scalars: usize) -> Vec<f64> {
    let m = c.nrows();
    let mut packed = Vec::with_capacity(m);
    for i in 0..scalars {
        packed.push(c[(i, i)]);
    }
    for p in (scalars..m).step_by(2) {
        packed.push(0.5 * (c[(p, p)] + c[(p + 1, p + 1)]));
        packed.push(0.5 * (c[(p + 1, p)] - c[(p, p + 1)]));
    }
    packed
}

/// Finds a real orthogonal `Q` that block-diagonalizes every member of a
/// commuting normal family into one shared scalars-then-pairs layout.
///
/// A random combination of the family is eigendecomposed; conjugate
/// eigenvector pairs `a ± ib` become the columns `√2a, √2b` and real
/// eigenvectors contribute their real or imaginary part. Up to five random
/// combinations are tried until every reconstruction residual is within
/// `10·tol·‖A_i‖_F`.
pub fn simul_block_diagonalize(family: &[DMatrix<f64>], tol: f64, seed: u64) -> Result<Decomposition> {
    check_commuting_normal(family, tol)?;
    let mut worst = f64::INFINITY;
    for attempt in 0..MAX_ATTEMPTS {
        let Some(found) = attempt_basis(family, seed, attempt as u64) else { continue };
        let q = &found.basis;
        let layout = BlockLayout::new(found.scalars, found.pairs);
        let mut blocks = Vec::with_capacity(family.len());
        let mut reconstruction = Vec::with_capacity(family.len());
        let mut projection = Vec::with_capacity(family.len());
        let mut ok = true;
        let mut attempt_worst: f64 = 0.0;
        for a in family {
            let c = q.transpose() * a * q;
            let packed = project_blocks(&c, found.scalars);
            let b = to_nalgebra(&expand_block_diag(&packed, layout.dim(), found.scalars)?);
            let rec = (a - q * &b * q.transpose()).norm();
            reconstruction.push(rec);
            projection.push((&c - &b).norm());
            blocks.push(packed);
            ok &= rec <= 10.0 * tol * a.norm().max(f64::MIN_POSITIVE);
            attempt_worst = attempt_worst.max(rec);
        }
        if ok {
            return Ok(Decomposition {
                basis: OrthogonalBasis(found.basis),
                blocks,
                layout,
                reconstruction_residuals: reconstruction,
                projection_residuals: projection,
                conjugate_pairs: found.diagnostics,
                attempts: attempt + 1,
            });
        }
        log::debug!("block-diagonalization attempt {attempt} rejected, residual {attempt_worst:.3e}");
        worst = worst.min(attempt_worst);
    }
    Err(KgeError::Decomposition { attempts: MAX_ATTEMPTS, residual: worst })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub decomposition: Decomposition,
    pub max_deviation: f64,
    pub n_triples: usize,
    pub passed: bool,
}

/// Compares dense scores `v_sᵀ W_r v_o` with packed scores `u_sᵀ B_r u_o`
/// where `(Q, B)` block-diagonalizes `W` and `u = vQ`.
pub fn verify_corollary_equivalence(
    entities: &ParamTable,
    family: &[DMatrix<f64>],
    triples: &[Triple],
    tol: f64,
    seed: u64,
) -> Result<EquivalenceReport> {
    let decomposition = simul_block_diagonalize(family, tol, seed)?;
    let m = decomposition.basis.dim();
    if entities.dim() != m {
        return Err(analogy_core::CoreError::DimensionMismatch { expected: m, found: entities.dim() }.into());
    }
    let v = DMatrix::from_row_slice(entities.rows(), m, entities.values());
    let u = &v * decomposition.basis.matrix();
    let scalars = decomposition.layout.scalars();
    let mut max_deviation: f64 = 0.0;
    for t in triples {
        let vs = v.row(t.s).transpose();
        let vo = v.row(t.o).transpose();
        let dense = vs.dot(&(&family[t.r] * vo));
        let us: Vec<f64> = u.row(t.s).iter().copied().collect();
        let uo: Vec<f64> = u.row(t.o).iter().copied().collect();
        let packed = score_analogy(&us, &decomposition.blocks[t.r], &uo, scalars)?;
        max_deviation = max_deviation.max((dense - packed).abs());
    }
    Ok(EquivalenceReport { passed: max_deviation <= tol, max_deviation, n_triples: triples.len(), decomposition })
}

/// HolE score evaluated in the Fourier domain:
/// `(1/m) Re Σ_k conj(ŝ_k) r̂_k ô_k` with `x̂ = DFT(x)`.
pub fn dft_complex_score_oracle(s: &[f64], r: &[f64], o: &[f64]) -> f64 {
    let m = s.len();
    assert!(r.len() == m && o.len() == m, "vectors must have equal length");
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let transform = |x: &[f64]| {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        buf
    };
    let (sh, rh, oh) = (transform(s), transform(r), transform(o));
    let total: Complex64 = (0..m).map(|k| sh[k].conj() * rh[k] * oh[k]).sum();
    total.re / m as f64
}

/// Reads the plain-text family format: first line `m k`, then `k·m` rows of
/// `m` whitespace-separated numbers.
pub fn parse_matrix_family(text: &str, path: &Path) -> Result<Vec<DMatrix<f64>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, message: String| KgeError::Parse { path: path.to_owned(), line, message };
    let (hl, header) = lines.next().ok_or_else(|| err(1, "missing 'm k' header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(hl + 1, format!("bad header token '{t}'"))))
        .collect::<Result<_>>()?;
    let [m, k] = dims[..] else {
        return Err(err(hl + 1, "header must be 'm k'".into()));
    };
    if m == 0 || k == 0 {
        return Err(err(hl + 1, "m and k must be positive".into()));
    }
    let mut family = Vec::with_capacity(k);
    for _ in 0..k {
        let mut rows = Vec::with_capacity(m * m);
        for _ in 0..m {
            let (ln, line) = lines.next().ok_or_else(|| err(0, format!("expected {} matrix rows", k * m)))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(ln + 1, format!("bad number '{t}'"))))
                .collect::<Result<_>>()?;
            if row.len() != m {
                return Err(err(ln + 1, format!("expected {m} columns, found {}", row.len())));
            }
            rows.extend(row);
        }
        family.push(DMatrix::from_row_slice(m, m, &rows));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln + 1, "trailing data after the last matrix".into()));
    }
    Ok(family)
}

pub fn format_matrix_family(family: &[DMatrix<f64>]) -> String {
    let m = family.first().map_or(0, |a| a.nrows());
    let mut out = format!("{m} {}\n", family.len());
    for a in family {
        for i in 0..m {
            let row: Vec<String> = (0..m).map(|j| format!("{:e}", a[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

/// Random real orthogonal matrix (QR of a Gaussian-ish matrix).
pub fn random_orthogonal<R: Rng>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q()
}

/// Family `{Q₀ B_i Q₀ᵀ}` with random same-layout almost-diagonal `B_i`.
/// Returns the family together with `Q₀` and the packed `B_i`.
pub fn planted_family<R: Rng>(
    m: usize,
    scalars: usize,
    k: usize,
    rng: &mut R,
) -> Result<(Vec<DMatrix<f64>>, DMatrix<f64>, Vec<Vec<f64>>)> {
    let q0 = random_orthogonal(m, rng);
    let mut family = Vec::with_capacity(k);
    let mut packed = Vec::with_capacity(k);
    for _ in 0..k {
        let params: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = to_nalgebra(&expand_block_diag(&params, m, scalars)?);
        family.push(&q0 * b * q0.transpose());
        packed.push(params);
    }
    Ok((family, q0, packed))
}
