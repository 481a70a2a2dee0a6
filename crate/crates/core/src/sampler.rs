//! Positive/negative stream that defines the training distribution.
//!
//! Each positive triple is emitted with label +1 and followed by `neg_ratio`
//! corruptions labeled -1. Corruption slots cycle round-robin over the
//! configured modes, restarting at the first mode for every positive.

use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub s: usize,
    pub r: usize,
    pub o: usize,
}

impl Triple {
    pub const fn new(s: usize, r: usize, o: usize) -> Self {
        Self { s, r, o }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledTriple {
    pub triple: Triple,
    pub label: Label,
}

impl LabeledTriple {
    pub const fn positive(triple: Triple) -> Self {
        Self { triple, label: Label::Positive }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Subject,
    Relation,
    Object,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::Subject, Slot::Relation, Slot::Object];
}

/// Membership oracle for known-true triples.
pub trait KnownTriples {
    fn contains(&self, triple: &Triple) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    pub neg_ratio: usize,
    pub modes: Vec<Slot>,
    pub filter_false_negatives: bool,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(neg_ratio: usize, seed: u64) -> Self {
        Self { neg_ratio, modes: Slot::ALL.to_vec(), filter_false_negatives: false, seed }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.neg_ratio == 0 {
            return Err(CoreError::InvalidConfig("negative ratio must be at least 1"));
        }
        if self.modes.is_empty() {
            return Err(CoreError::InvalidConfig("at least one corruption mode is required"));
        }
        Ok(())
    }
}

fn slot_size(slot: Slot, n_entities: usize, n_relations: usize) -> usize {
    match slot {
        Slot::Subject | Slot::Object => n_entities,
        Slot::Relation => n_relations,
    }
}

fn with_slot(t: Triple, slot: Slot, value: usize) -> Triple {
    match slot {
        Slot::Subject => Triple { s: value, ..t },
        Slot::Relation => Triple { r: value, ..t },
        Slot::Object => Triple { o: value, ..t },
    }
}

fn slot_value(t: &Triple, slot: Slot) -> usize {
    match slot {
        Slot::Subject => t.s,
        Slot::Relation => t.r,
        Slot::Object => t.o,
    }
}

/// Replaces one slot of `positive` with a uniformly drawn different symbol.
///
/// The replacement is uniform over the `size - 1` symbols other than the
/// original, so the result never equals the input.
pub fn corrupt<R: Rng + ?Sized>(
    positive: &LabeledTriple,
    slot: Slot,
    n_entities: usize,
    n_relations: usize,
    rng: &mut R,
) -> Result<LabeledTriple, CoreError> {
    let size = slot_size(slot, n_entities, n_relations);
    if size < 2 {
        return Err(CoreError::CannotCorrupt { slot, size });
    }
    let original = slot_value(&positive.triple, slot);
    let mut value = rng.random_range(0..size - 1);
    if value >= original {
        value += 1;
    }
    Ok(LabeledTriple { triple: with_slot(positive.triple, slot, value), label: Label::Negative })
}

/// Corruption that avoids every triple in `known`.
///
/// Tries rejection sampling first and falls back to a uniform draw over the
/// admissible symbols, so the result is never a known triple.
fn corrupt_filtered<R: Rng + ?Sized, K: KnownTriples + ?Sized>(
    positive: &LabeledTriple,
    slot: Slot,
    n_entities: usize,
    n_relations: usize,
    known: &K,
    rng: &mut R,
) -> Result<LabeledTriple, CoreError> {
    const REJECTION_TRIES: usize = 32;
    for _ in 0..REJECTION_TRIES {
        let neg = corrupt(positive, slot, n_entities, n_relations, rng)?;
        if !known.contains(&neg.triple) {
            return Ok(neg);
        }
    }
    let size = slot_size(slot, n_entities, n_relations);
    let admissible: Vec<usize> = (0..size)
        .filter(|&v| !known.contains(&with_slot(positive.triple, slot, v)))
        .filter(|&v| v != slot_value(&positive.triple, slot))
        .collect();
    let value = *admissible.choose(rng).ok_or(CoreError::NoAdmissibleNegative { slot })?;
    Ok(LabeledTriple { triple: with_slot(positive.triple, slot, value), label: Label::Negative })
}

/// One epoch of labeled samples over a (shard of the) training set.
pub struct EpochStream<'a, R, K: ?Sized> {
    positives: &'a [Triple],
    order: Vec<usize>,
    cfg: &'a SamplerConfig,
    n_entities: usize,
    n_relations: usize,
    known: Option<&'a K>,
    rng: R,
    cursor: usize,
    emitted_for_current: usize,
}

impl<'a, R: Rng, K: KnownTriples + ?Sized> EpochStream<'a, R, K> {
    /// Visits `positives` in a fresh random order drawn from `rng`.
    ///
    /// `known` is consulted only when `cfg.filter_false_negatives` is set and
    /// must then be provided.
    pub fn new(
        positives: &'a [Triple],
        cfg: &'a SamplerConfig,
        n_entities: usize,
        n_relations: usize,
        known: Option<&'a K>,
        mut rng: R,
    ) -> Result<Self, CoreError> {
        cfg.validate()?;
        if positives.is_empty() {
            return Err(CoreError::EmptyInput);
        }
        for &slot in &cfg.modes {
            let size = slot_size(slot, n_entities, n_relations);
            if size < 2 {
                return Err(CoreError::CannotCorrupt { slot, size });
            }
        }
        if cfg.filter_false_negatives && known.is_none() {
            return Err(CoreError::InvalidConfig("false-negative filtering needs a known-triple index"));
        }
        let mut order: Vec<usize> = (0..positives.len()).collect();
        order.shuffle(&mut rng);
        Ok(Self {
            positives,
            order,
            cfg,
            n_entities,
            n_relations,
            known: if cfg.filter_false_negatives { known } else { None },
            rng,
            cursor: 0,
            emitted_for_current: 0,
        })
    }

    /// Exact number of samples this epoch yields.
    pub fn epoch_len(&self) -> usize {
        self.positives.len() * (1 + self.cfg.neg_ratio)
    }
}

impl<R: Rng, K: KnownTriples + ?Sized> Iterator for EpochStream<'_, R, K> {
    type Item = LabeledTriple;

    fn next(&mut self) -> Option<LabeledTriple> {
        let idx = *self.order.get(self.cursor)?;
        let positive = LabeledTriple::positive(self.positives[idx]);
        let k = self.emitted_for_current;
        self.emitted_for_current += 1;
        if self.emitted_for_current > self.cfg.neg_ratio {
            self.emitted_for_current = 0;
            self.cursor += 1;
        }
        if k == 0 {
            return Some(positive);
        }
        let slot = self.cfg.modes[(k - 1) % self.cfg.modes.len()];
        // slot sizes were validated in `new`, so only the filtered path can fail
        let sample = match self.known {
            Some(known) => corrupt_filtered(&positive, slot, self.n_entities, self.n_relations, known, &mut self.rng),
            None => corrupt(&positive, slot, self.n_entities, self.n_relations, &mut self.rng),
        };
        match sample {
            Ok(neg) => Some(neg),
            // every corruption of this slot is a known triple; emit the
            // unfiltered draw rather than stalling the stream
            Err(_) => corrupt(&positive, slot, self.n_entities, self.n_relations, &mut self.rng).ok(),
        }
    }
}
