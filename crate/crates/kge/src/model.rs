//! Trained model container and its binary file format.
//!
//! Layout (all integers and floats little-endian):
//!
//! | field              | type                  |
//! |--------------------|-----------------------|
//! | magic              | `b"KGEM"`             |
//! | format version     | `u32` (currently 1)   |
//! | model kind         | `u8` (0 analogy, 1 distmult, 2 complex, 3 hole) |
//! | m (dimension)      | `u32`                 |
//! | n (scalar blocks)  | `u32`                 |
//! | entity count       | `u64`                 |
//! | relation count     | `u64`                 |
//! | entity table       | `|E|·m` × `f64`, row-major |
//! | relation table     | `|R|·m` × `f64`, row-major |
//! | entity vocabulary  | `u64` byte length, then UTF-8 `<index>\t<name>\n` lines |
//! | relation vocabulary| `u64` byte length, then UTF-8 `<index>\t<name>\n` lines |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use analogy_core::{init_params, score, ModelConfig, ModelKind, ParamTable, Triple};

use crate::data::{Symbols, Vocab};
use crate::error::{KgeError, Result};

pub const MAGIC: &[u8; 4] = b"KGEM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub entities: ParamTable,
    pub relations: ParamTable,
}

impl Model {
    pub fn new(config: ModelConfig, entities: ParamTable, relations: ParamTable) -> Result<Self> {
        if entities.dim() != config.dim || relations.dim() != config.dim {
            return Err(KgeError::Format(format!(
                "table dimensions ({}, {}) disagree with config dimension {}",
                entities.dim(),
                relations.dim(),
                config.dim
            )));
        }
        Ok(Self { config, entities, relations })
    }

    pub fn init(config: ModelConfig, n_entities: usize, n_relations: usize, seed: u64) -> Result<Self> {
        let (entities, relations) = init_params(&config, n_entities, n_relations, seed)?;
        Ok(Self { config, entities, relations })
    }

    pub fn n_entities(&self) -> usize {
        self.entities.rows()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.rows()
    }

    pub fn score(&self, t: Triple) -> f64 {
        score(&self.config, self.entities.row(t.s), self.relations.row(t.r), self.entities.row(t.o))
            .expect("model tables have the configured dimension")
    }
}

/// A model bundled with the vocabulary its row indices refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: Model,
    pub vocab: Vocab,
}

impl SavedModel {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = &self.model;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[m.config.kind.code()])?;
        w.write_all(&(m.config.dim as u32).to_le_bytes())?;
        w.write_all(&(m.config.scalars as u32).to_le_bytes())?;
        w.write_all(&(m.n_entities() as u64).to_le_bytes())?;
        w.write_all(&(m.n_relations() as u64).to_le_bytes())?;
        for v in m.entities.values().iter().chain(m.relations.values()) {
            w.write_all(&v.to_le_bytes())?;
        }
        for syms in [&self.vocab.entities, &self.vocab.relations] {
            let mut dump = Vec::new();
            syms.write_dump(&mut dump)?;
            w.write_all(&(dump.len() as u64).to_le_bytes())?;
            w.write_all(&dump)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let fmt_err = |e: std::io::Error| KgeError::Format(format!("truncated or unreadable model: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(fmt_err)?;
        if &magic != MAGIC {
            return Err(KgeError::Format("bad magic, not a KGEM model file".into()));
        }
        let version = read_u32(&mut r).map_err(fmt_err)?;
        if version != FORMAT_VERSION {
            return Err(KgeError::Format(format!("unsupported format version {version}")));
        }
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind).map_err(fmt_err)?;
        let kind =
            ModelKind::from_code(kind[0]).ok_or_else(|| KgeError::Format(format!("unknown model kind {}", kind[0])))?;
        let dim = read_u32(&mut r).map_err(fmt_err)? as usize;
        let scalars = read_u32(&mut r).map_err(fmt_err)? as usize;
        let n_entities = read_u64(&mut r).map_err(fmt_err)? as usize;
        let n_relations = read_u64(&mut r).map_err(fmt_err)? as usize;
        let config = ModelConfig::new(kind, dim, scalars)?;
        let mut read_table = |rows: usize| -> Result<ParamTable> {
            let mut values = Vec::with_capacity(rows * dim);
            let mut buf = [0u8; 8];
            for _ in 0..rows * dim {
                r.read_exact(&mut buf).map_err(fmt_err)?;
                values.push(f64::from_le_bytes(buf));
            }
            Ok(ParamTable::from_values(rows, dim, values)?)
        };
        let entities = read_table(n_entities)?;
        let relations = read_table(n_relations)?;
        let mut read_syms = || -> Result<Symbols> {
            let len = read_u64(&mut r).map_err(fmt_err)? as usize;
            let mut bytes = vec![0u8; len];
            r.read_exact(&mut bytes).map_err(fmt_err)?;
            let text = String::from_utf8(bytes).map_err(|_| KgeError::Format("vocabulary is not UTF-8".into()))?;
            Symbols::parse_dump(&text)
        };
        let vocab = Vocab { entities: read_syms()?, relations: read_syms()? };
        if vocab.n_entities() != n_entities || vocab.n_relations() != n_relations {
            return Err(KgeError::Format(format!(
                "vocabulary sizes ({}, {}) disagree with table sizes ({n_entities}, {n_relations})",
                vocab.n_entities(),
                vocab.n_relations()
            )));
        }
        Ok(SavedModel { model: Model { config, entities, relations }, vocab })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| KgeError::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| KgeError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| KgeError::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
