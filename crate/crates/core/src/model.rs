use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;

/// Half-width of the uniform initialization interval.
pub const INIT_BOUND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Analogy,
    DistMult,
    ComplEx,
    HolE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Analogy, ModelKind::DistMult, ModelKind::ComplEx, ModelKind::HolE];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Analogy => "analogy",
            ModelKind::DistMult => "distmult",
            ModelKind::ComplEx => "complex",
            ModelKind::HolE => "hole",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::Analogy => 0,
            ModelKind::DistMult => 1,
            ModelKind::ComplEx => 2,
            ModelKind::HolE => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "analogy" => Ok(ModelKind::Analogy),
            "distmult" => Ok(ModelKind::DistMult),
            "complex" => Ok(ModelKind::ComplEx),
            "hole" => Ok(ModelKind::HolE),
            _ => Err(CoreError::InvalidConfig("unknown model kind")),
        }
    }
}

/// Embedding shape shared by all entities and relations of one model.
///
/// `scalars` is the number of 1x1 blocks at the head of an ANALOGY relation
/// layout; the remaining `dim - scalars` coordinates pair into 2x2
/// rotation-scaling blocks. Other model kinds ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub dim: usize,
    pub scalars: usize,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, dim: usize, scalars: usize) -> Result<Self, CoreError> {
        if dim == 0 {
            return Err(CoreError::ZeroDimension);
        }
        match kind {
            ModelKind::Analogy => {
                if scalars > dim || !(dim - scalars).is_multiple_of(2) {
                    return Err(CoreError::InvalidLayout { dim, scalars });
                }
            }
            ModelKind::ComplEx if !dim.is_multiple_of(2) => return Err(CoreError::OddComplexDim(dim)),
            _ => {}
        }
        let scalars = if kind == ModelKind::Analogy { scalars } else { 0 };
        Ok(Self { kind, dim, scalars })
    }

    /// ANALOGY layout with half of the coordinates as scalar blocks.
    pub fn analogy(dim: usize) -> Result<Self, CoreError> {
        Self::new(ModelKind::Analogy, dim, scalars_for_fraction(dim, 0.5))
    }

    pub fn pairs(&self) -> usize {
        (self.dim - self.scalars) / 2
    }
}

/// Scalar-block count closest to `fraction * dim` that leaves an even
/// remainder for 2x2 blocks. Ties round down.
pub fn scalars_for_fraction(dim: usize, fraction: f64) -> usize {
    let target = libm::round(fraction.clamp(0.0, 1.0) * dim as f64) as usize;
    if (dim - target).is_multiple_of(2) {
        target
    } else if target == 0 {
        1
    } else {
        target - 1
    }
}

/// Dense `rows x dim` parameter table, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTable {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl ParamTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self { rows, dim, values: vec![0.0; rows * dim] }
    }

    pub fn from_values(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self, CoreError> {
        if values.len() != rows * dim {
            return Err(CoreError::DimensionMismatch { expected: rows * dim, found: values.len() });
        }
        Ok(Self { rows, dim, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Draws entity and relation tables i.i.d. uniform on `[-INIT_BOUND, INIT_BOUND]`.
pub fn init_params(
    config: &ModelConfig,
    n_entities: usize,
    n_relations: usize,
    seed: u64,
) -> Result<(ParamTable, ParamTable), CoreError> {
    if config.dim == 0 {
        return Err(CoreError::ZeroDimension);
    }
    if n_entities == 0 || n_relations == 0 {
        return Err(CoreError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize| {
        let values = (0..rows * config.dim).map(|_| rng.random_range(-INIT_BOUND..=INIT_BOUND)).collect();
        ParamTable { rows, dim: config.dim, values }
    };
    let entities = draw(n_entities);
    let relations = draw(n_relations);
    Ok((entities, relations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_per_seed() {
        let cfg = ModelConfig::new(ModelKind::Analogy, 4, 2).unwrap();
        let a = init_params(&cfg, 2, 3, 7).unwrap();
        let b = init_params(&cfg, 2, 3, 7).unwrap();
        assert_eq!(a, b);
        let c = init_params(&cfg, 2, 3, 8).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn init_shape_and_bound() {
        let cfg = ModelConfig::new(ModelKind::DistMult, 4, 0).unwrap();
        let (e, r) = init_params(&cfg, 2, 1, 1).unwrap();
        assert_eq!((e.rows(), e.dim()), (2, 4));
        assert_eq!((r.rows(), r.dim()), (1, 4));
        assert!(e.values().iter().chain(r.values()).all(|v| v.abs() <= INIT_BOUND));
    }

    #[test]
    fn config_validation() {
        assert_eq!(ModelConfig::new(ModelKind::Analogy, 0, 0), Err(CoreError::ZeroDimension));
        assert!(matches!(ModelConfig::new(ModelKind::Analogy, 5, 2), Err(CoreError::InvalidLayout { .. })));
        assert!(matches!(ModelConfig::new(ModelKind::Analogy, 4, 6), Err(CoreError::InvalidLayout { .. })));
        assert_eq!(ModelConfig::new(ModelKind::ComplEx, 3, 0), Err(CoreError::OddComplexDim(3)));
        assert_eq!(ModelConfig::new(ModelKind::HolE, 3, 2).unwrap().scalars, 0);
        assert_eq!(ModelConfig::analogy(200).unwrap().scalars, 100);
        assert_eq!(ModelConfig::analogy(16).unwrap().scalars, 8);
    }

    #[test]
    fn scalar_fraction_keeps_parity() {
        for dim in 1..40 {
            for frac in [0.0, 0.25, 0.5, 0.9, 1.0] {
                let n = scalars_for_fraction(dim, frac);
                assert!(n <= dim);
                assert_eq!((dim - n) % 2, 0, "dim {dim} frac {frac}");
            }
        }
        assert_eq!(scalars_for_fraction(6, 0.5), 2);
    }

    #[test]
    fn kind_round_trips() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::from_code(k.code()), Some(k));
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
    }
}
