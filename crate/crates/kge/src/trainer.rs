//! Asynchronous AdaGrad over the logistic loss.
//!
//! Workers share the parameter and accumulator tables without locks. Cells
//! are `AtomicU64` holding `f64` bits and every access is `Relaxed`, so a
//! row read may interleave with another worker's write and updates may be
//! lost. Only rows touched by the current sample are read or written, and
//! L2 decay is applied to those rows only.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use analogy_core::rng::{derive_seed, stream_rng};
use analogy_core::{
    adagrad_step, grad_triple_into, logistic_loss, loss_grad_scale, score, AdaGradParams, EpochStream, LabeledTriple,
    ModelConfig, ParamTable, SamplerConfig, Slot, Triple, TripleGradient,
};
use rand::seq::SliceRandom;

use crate::data::FilterIndex;
use crate::error::{KgeError, Result};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub threads: usize,
    pub neg_ratio: usize,
    pub seed: u64,
    pub adagrad_epsilon: f64,
    pub corrupt_modes: Vec<Slot>,
    pub filter_false_negatives: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2: 1e-3,
            epochs: 500,
            threads: 1,
            neg_ratio: 3,
            seed: 0,
            adagrad_epsilon: 1e-8,
            corrupt_modes: Slot::ALL.to_vec(),
            filter_false_negatives: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &'static str| Err(analogy_core::CoreError::InvalidConfig(msg).into());
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if !(self.adagrad_epsilon > 0.0) {
            return bad("adagrad epsilon must be positive");
        }
        Ok(())
    }

    fn adagrad(&self) -> AdaGradParams {
        AdaGradParams { learning_rate: self.learning_rate, l2: self.l2, epsilon: self.adagrad_epsilon }
    }

    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            neg_ratio: self.neg_ratio,
            modes: self.corrupt_modes.clone(),
            filter_false_negatives: self.filter_false_negatives,
            seed: self.seed,
        }
    }
}

/// Lock-free `rows x dim` table of `f64` cells.
pub struct SharedTable {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedTable {
    pub fn from_table(t: &ParamTable) -> Self {
        Self { dim: t.dim(), cells: t.values().iter().map(|v| AtomicU64::new(v.to_bits())).collect() }
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self { dim, cells: (0..rows * dim).map(|_| AtomicU64::new(0f64.to_bits())).collect() }
    }

    pub fn rows(&self) -> usize {
        self.cells.len() / self.dim
    }

    #[inline]
    pub fn load_row(&self, row: usize, out: &mut [f64]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }

    #[inline]
    pub fn store_row(&self, row: usize, values: &[f64]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (c, v) in cells.iter().zip(values) {
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    pub fn snapshot(&self) -> ParamTable {
        let values = self.cells.iter().map(|c| f64::from_bits(c.load(Ordering::Relaxed))).collect();
        ParamTable::from_values(self.rows(), self.dim, values).expect("shape is preserved")
    }
}

/// AdaGrad accumulators, one cell per model parameter.
pub struct AdaGradState {
    pub entities: SharedTable,
    pub relations: SharedTable,
}

impl AdaGradState {
    pub fn new(n_entities: usize, n_relations: usize, dim: usize) -> Self {
        Self { entities: SharedTable::zeros(n_entities, dim), relations: SharedTable::zeros(n_relations, dim) }
    }
}

/// Parameters and optimizer state shared by all workers.
pub struct SharedModel {
    pub config: ModelConfig,
    pub entities: SharedTable,
    pub relations: SharedTable,
    pub state: AdaGradState,
}

impl SharedModel {
    pub fn new(model: &Model) -> Self {
        Self {
            config: model.config,
            entities: SharedTable::from_table(&model.entities),
            relations: SharedTable::from_table(&model.relations),
            state: AdaGradState::new(model.n_entities(), model.n_relations(), model.config.dim),
        }
    }

    pub fn snapshot(&self) -> Model {
        Model { config: self.config, entities: self.entities.snapshot(), relations: self.relations.snapshot() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub secs: f64,
}

impl std::fmt::Display for EpochStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "epoch {} loss {:.6} secs {:.3}", self.epoch, self.mean_loss, self.secs)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

/// Scratch buffers for one worker.
struct Worker {
    s: Vec<f64>,
    r: Vec<f64>,
    o: Vec<f64>,
    acc_s: Vec<f64>,
    acc_r: Vec<f64>,
    acc_o: Vec<f64>,
    grad: TripleGradient,
}

impl Worker {
    fn new(dim: usize) -> Self {
        Self {
            s: vec![0.0; dim],
            r: vec![0.0; dim],
            o: vec![0.0; dim],
            acc_s: vec![0.0; dim],
            acc_r: vec![0.0; dim],
            acc_o: vec![0.0; dim],
            grad: TripleGradient::zeros(dim),
        }
    }

    /// One SGD update; returns the sample's loss.
    fn step(&mut self, shared: &SharedModel, sample: &LabeledTriple, hp: &AdaGradParams) -> Result<f64, String> {
        let Triple { s, r, o } = sample.triple;
        let cfg = &shared.config;
        shared.entities.load_row(s, &mut self.s);
        shared.relations.load_row(r, &mut self.r);
        shared.entities.load_row(o, &mut self.o);
        let phi = score(cfg, &self.s, &self.r, &self.o).map_err(|e| e.to_string())?;
        let loss = logistic_loss(phi, sample.label);
        if !loss.is_finite() {
            return Err(format!("non-finite loss at {:?}", sample.triple));
        }
        let scale = loss_grad_scale(phi, sample.label);
        grad_triple_into(cfg, &self.s, &self.r, &self.o, &mut self.grad).map_err(|e| e.to_string())?;

        let fail = |e: analogy_core::CoreError| format!("{e} at {:?}", sample.triple);
        shared.state.relations.load_row(r, &mut self.acc_r);
        adagrad_step(&mut self.r, &self.grad.d_relation, scale, hp, &mut self.acc_r).map_err(fail)?;
        shared.relations.store_row(r, &self.r);
        shared.state.relations.store_row(r, &self.acc_r);

        if s == o {
            // subject and object share one row: apply the summed gradient once
            for (a, b) in self.grad.d_subject.iter_mut().zip(&self.grad.d_object) {
                *a += b;
            }
            shared.state.entities.load_row(s, &mut self.acc_s);
            adagrad_step(&mut self.s, &self.grad.d_subject, scale, hp, &mut self.acc_s).map_err(fail)?;
            shared.entities.store_row(s, &self.s);
            shared.state.entities.store_row(s, &self.acc_s);
        } else {
            shared.state.entities.load_row(s, &mut self.acc_s);
            shared.state.entities.load_row(o, &mut self.acc_o);
            adagrad_step(&mut self.s, &self.grad.d_subject, scale, hp, &mut self.acc_s).map_err(fail)?;
            adagrad_step(&mut self.o, &self.grad.d_object, scale, hp, &mut self.acc_o).map_err(fail)?;
            shared.entities.store_row(s, &self.s);
            shared.state.entities.store_row(s, &self.acc_s);
            shared.entities.store_row(o, &self.o);
            shared.state.entities.store_row(o, &self.acc_o);
        }
        Ok(loss)
    }
}

fn run_shard(
    shared: &SharedModel,
    shard: &[Triple],
    sampler: &SamplerConfig,
    known: Option<&FilterIndex>,
    hp: &AdaGradParams,
    seed: u64,
) -> Result<(f64, usize), String> {
    if shard.is_empty() {
        return Ok((0.0, 0));
    }
    let n_entities = shared.entities.rows();
    let n_relations = shared.relations.rows();
    let stream = EpochStream::new(shard, sampler, n_entities, n_relations, known, stream_rng(seed, 0))
        .map_err(|e| e.to_string())?;
    let mut worker = Worker::new(shared.config.dim);
    let (mut total, mut count) = (0.0, 0usize);
    for sample in stream {
        total += worker.step(shared, &sample, hp)?;
        count += 1;
    }
    Ok((total, count))
}

/// Trains `shared` in place for `cfg.epochs` epochs.
///
/// `on_epoch` runs at each epoch barrier with the epoch's statistics and
/// may inspect or checkpoint the shared model. Returning an error stops
/// training.
pub fn train_shared<F>(
    shared: &SharedModel,
    data: &[Triple],
    known: Option<&FilterIndex>,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainReport>
where
    F: FnMut(&EpochStats, &SharedModel) -> Result<()>,
{
    cfg.validate()?;
    if data.is_empty() {
        return Err(analogy_core::CoreError::EmptyInput.into());
    }
    let sampler = cfg.sampler();
    sampler.validate()?;
    let hp = cfg.adagrad();
    let mut report = TrainReport::default();
    let mut order: Vec<Triple> = data.to_vec();
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let epoch_seed = derive_seed(cfg.seed, epoch as u64);
        let results: Vec<Result<(f64, usize), String>> = if cfg.threads == 1 {
            vec![run_shard(shared, data, &sampler, known, &hp, derive_seed(epoch_seed, 0))]
        } else {
            order.shuffle(&mut stream_rng(epoch_seed, u64::MAX));
            let chunk = order.len().div_ceil(cfg.threads);
            std::thread::scope(|scope| {
                let handles: Vec<_> = order
                    .chunks(chunk)
                    .enumerate()
                    .map(|(w, shard)| {
                        let (sampler, hp) = (&sampler, &hp);
                        scope.spawn(move || {
                            run_shard(shared, shard, sampler, known, hp, derive_seed(epoch_seed, w as u64))
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
            })
        };
        let (mut total, mut count) = (0.0, 0usize);
        for r in results {
            let (t, c) = r.map_err(|message| KgeError::Diverged { epoch, message })?;
            total += t;
            count += c;
        }
        let stats = EpochStats { epoch, mean_loss: total / count.max(1) as f64, secs: start.elapsed().as_secs_f64() };
        log::info!("{stats}");
        report.epochs.push(stats);
        on_epoch(&stats, shared)?;
    }
    Ok(report)
}

/// Trains a copy of `model` and returns the result with the per-epoch report.
pub fn train(
    model: &Model,
    data: &[Triple],
    known: Option<&FilterIndex>,
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    let shared = SharedModel::new(model);
    let report = train_shared(&shared, data, known, cfg, |_, _| Ok(()))?;
    Ok((shared.snapshot(), report))
}
