//! Seconds-per-epoch measurements over thread counts and embedding sizes.

use std::fmt::Write as _;

use analogy_core::{ModelConfig, ModelKind, Triple};

use crate::error::Result;
use crate::model::Model;
use crate::trainer::{train, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub threads: usize,
    pub dim: usize,
    pub secs_per_epoch: f64,
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub kind: ModelKind,
    pub scalar_fraction: f64,
    pub threads: Vec<usize>,
    pub dims: Vec<usize>,
    pub epochs: usize,
    pub base: TrainConfig,
}

/// Mean wall-clock seconds per epoch for one configuration.
pub fn time_epochs(
    config: ModelConfig,
    data: &[Triple],
    n_entities: usize,
    n_relations: usize,
    train_cfg: &TrainConfig,
) -> Result<f64> {
    let model = Model::init(config, n_entities, n_relations, train_cfg.seed)?;
    let (_, report) = train(&model, data, None, train_cfg)?;
    Ok(report.epochs.iter().map(|e| e.secs).sum::<f64>() / report.epochs.len() as f64)
}

/// Runs the thread sweep at the largest dimension and the dimension sweep
/// at the largest thread count.
pub fn run(plan: &BenchPlan, data: &[Triple], n_entities: usize, n_relations: usize) -> Result<Vec<BenchRow>> {
    let max_dim = plan.dims.iter().copied().max().unwrap_or(16);
    let max_threads = plan.threads.iter().copied().max().unwrap_or(1);
    let mut rows = Vec::new();
    let mut measure = |threads: usize, dim: usize| -> Result<()> {
        let scalars = analogy_core::model::scalars_for_fraction(dim, plan.scalar_fraction);
        let config = ModelConfig::new(plan.kind, dim, scalars)?;
        let cfg = TrainConfig { threads, epochs: plan.epochs, ..plan.base.clone() };
        let secs_per_epoch = time_epochs(config, data, n_entities, n_relations, &cfg)?;
        rows.push(BenchRow { threads, dim, secs_per_epoch });
        Ok(())
    };
    for &t in &plan.threads {
        measure(t, max_dim)?;
    }
    for &d in plan.dims.iter().filter(|&&d| d != max_dim) {
        measure(max_threads, d)?;
    }
    Ok(rows)
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:>8} {:>6} {:>14}\n", "threads", "dim", "secs/epoch");
    for r in rows {
        let _ = writeln!(out, "{:>8} {:>6} {:>14.6}", r.threads, r.dim, r.secs_per_epoch);
    }
    out
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
