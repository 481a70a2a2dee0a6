//! Synthetic knowledge graphs with planted analogical structure.
//!
//! Entities get unit vectors scattered around a few random prototypes
//! (entity "types"), relations get random almost-diagonal maps sharing one
//! block layout, and the positives for each `(s, r)` query
//! are the `answers_per_query` highest-scoring objects. A fraction of the
//! triples is held out for testing.

use std::f64::consts::PI;

use analogy_core::rng::stream_rng;
use analogy_core::{score_analogy, ParamTable, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{Split, Symbols, TripleStore, Vocab};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_relations: usize,
    pub dim: usize,
    pub scalars: usize,
    pub answers_per_query: usize,
    pub holdout: f64,
    /// Rotation angles of the planted 2x2 blocks are drawn from
    /// `[min_angle, π - min_angle]`; larger values make relations more
    /// asymmetric.
    pub min_angle: f64,
    /// Number of prototypes; entity `i` belongs to prototype `i % clusters`.
    /// Zero draws every entity independently.
    pub clusters: usize,
    /// Relative size of the per-entity perturbation around its prototype.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_entities: 200,
            n_relations: 4,
            dim: 16,
            scalars: 8,
            answers_per_query: 10,
            holdout: 0.1,
            min_angle: PI / 3.0,
            clusters: 20,
            noise: 0.02,
            seed: 2017,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticKg {
    pub vocab: Vocab,
    pub train: TripleStore,
    pub test: TripleStore,
    pub planted_entities: ParamTable,
    pub planted_relations: ParamTable,
}

impl SyntheticKg {
    pub fn generate(spec: &SyntheticSpec) -> Result<Self> {
        let mut rng = stream_rng(spec.seed, 0);
        let m = spec.dim;
        let unit = |v: Vec<f64>| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm).collect::<Vec<f64>>()
        };
        let prototypes: Vec<Vec<f64>> =
            (0..spec.clusters).map(|_| unit((0..m).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
        let mut ent = Vec::with_capacity(spec.n_entities * m);
        for i in 0..spec.n_entities {
            let v: Vec<f64> = match prototypes.get(i % spec.clusters.max(1)) {
                Some(p) => p.iter().map(|x| x + spec.noise * rng.random_range(-1.0..1.0)).collect(),
                None => (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            ent.extend(unit(v));
        }
        let entities = ParamTable::from_values(spec.n_entities, m, ent)?;

        let mut rel = Vec::with_capacity(spec.n_relations * m);
        for _ in 0..spec.n_relations {
            for _ in 0..spec.scalars {
                rel.push(rng.random_range(-1.0..1.0));
            }
            for _ in 0..(m - spec.scalars) / 2 {
                let angle = rng.random_range(spec.min_angle..=PI - spec.min_angle);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                rel.push(angle.cos());
                rel.push(sign * angle.sin());
            }
        }
        let relations = ParamTable::from_values(spec.n_relations, m, rel)?;

        let mut triples = Vec::new();
        let mut scored: Vec<(f64, usize)> = Vec::with_capacity(spec.n_entities);
        for s in 0..spec.n_entities {
            for r in 0..spec.n_relations {
                scored.clear();
                for o in (0..spec.n_entities).filter(|&o| o != s) {
                    let phi = score_analogy(entities.row(s), relations.row(r), entities.row(o), spec.scalars)?;
                    scored.push((phi, o));
                }
                scored.sort_by(|a, b| b.0.total_cmp(&a.0));
                triples.extend(scored.iter().take(spec.answers_per_query).map(|&(_, o)| Triple::new(s, r, o)));
            }
        }
        triples.shuffle(&mut rng);
        let n_test = (spec.holdout * triples.len() as f64).round() as usize;
        let train = triples.split_off(n_test);
        let vocab = Vocab {
            entities: Symbols::from_names((0..spec.n_entities).map(|i| format!("e{i}")))?,
            relations: Symbols::from_names((0..spec.n_relations).map(|i| format!("r{i}")))?,
        };
        Ok(Self {
            vocab,
            train: TripleStore::new(Split::Train, train),
            test: TripleStore::new(Split::Test, triples),
            planted_entities: entities,
            planted_relations: relations,
        })
    }
}
