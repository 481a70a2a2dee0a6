//! Triple files, vocabularies and the known-triple filter index.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use analogy_core::{KnownTriples, Triple};

use crate::error::{KgeError, Result};

/// Ordered symbol table with dense 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Symbols {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Symbols {
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Symbols::default();
        for name in names {
            let name = name.into();
            if out.index.contains_key(&name) {
                return Err(KgeError::Format(format!("duplicate symbol '{name}'")));
            }
            out.intern(&name);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> Option<&str> {
        self.names.get(idx).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        i
    }

    /// `<index>\t<name>\n` per symbol.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, name) in self.names.iter().enumerate() {
            writeln!(w, "{i}\t{name}")?;
        }
        Ok(())
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut names = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| KgeError::Parse {
                path: PathBuf::from("<vocabulary>"),
                line: lineno + 1,
                message: message.to_owned(),
            };
            let (idx, name) = line.split_once('\t').ok_or_else(|| bad("expected '<index>\\t<name>'"))?;
            let idx: usize = idx.parse().map_err(|_| bad("bad index"))?;
            if idx != names.len() {
                return Err(bad("indices must be dense and in order"));
            }
            names.push(name.to_owned());
        }
        Self::from_names(names)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    pub entities: Symbols,
    pub relations: Symbols,
}

impl Vocab {
    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn write_dumps(&self, entities: &Path, relations: &Path) -> Result<()> {
        let write = |path: &Path, syms: &Symbols| {
            let mut f = std::io::BufWriter::new(File::create(path).map_err(|e| KgeError::io(path, e))?);
            syms.write_dump(&mut f).and_then(|_| f.flush()).map_err(|e| KgeError::io(path, e))
        };
        write(entities, &self.entities)?;
        write(relations, &self.relations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}' (expected train, valid or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleStore {
    pub split: Split,
    pub triples: Vec<Triple>,
}

impl TripleStore {
    pub fn new(split: Split, triples: Vec<Triple>) -> Self {
        Self { split, triples }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Writes the store back out as `<s>\t<r>\t<o>` lines.
    pub fn write_tsv<W: Write>(&self, vocab: &Vocab, mut w: W) -> std::io::Result<()> {
        for t in &self.triples {
            let name = |syms: &Symbols, i| syms.name(i).unwrap_or("?").to_owned();
            writeln!(
                w,
                "{}\t{}\t{}",
                name(&vocab.entities, t.s),
                name(&vocab.relations, t.r),
                name(&vocab.entities, t.o)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabMode {
    /// Unseen names receive fresh indices.
    Build,
    /// Unseen names are an error.
    Frozen,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Drop repeated triples with a warning instead of failing.
    pub allow_duplicates: bool,
}

/// Reads a `<subject>\t<relation>\t<object>` file.
pub fn load_triples(
    path: impl AsRef<Path>,
    vocab: Vocab,
    mode: VocabMode,
    split: Split,
    opts: LoadOptions,
) -> Result<(TripleStore, Vocab)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| KgeError::io(path, e))?;
    parse_triples(BufReader::new(file), path, vocab, mode, split, opts)
}

/// [`load_triples`] over any buffered reader; `path` is only used in errors.
pub fn parse_triples<R: BufRead>(
    reader: R,
    path: &Path,
    mut vocab: Vocab,
    mode: VocabMode,
    split: Split,
    opts: LoadOptions,
) -> Result<(TripleStore, Vocab)> {
    let mut triples = Vec::new();
    let mut seen: HashMap<Triple, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| KgeError::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(KgeError::Parse {
                path: path.to_owned(),
                line: lineno,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let resolve = |syms: &mut Symbols, kind: &'static str, name: &str| match mode {
            VocabMode::Build => Ok(syms.intern(name)),
            VocabMode::Frozen => syms.lookup(name).ok_or_else(|| KgeError::UnknownSymbol {
                path: path.to_owned(),
                line: lineno,
                kind,
                name: name.to_owned(),
            }),
        };
        let s = resolve(&mut vocab.entities, "entity", fields[0])?;
        let r = resolve(&mut vocab.relations, "relation", fields[1])?;
        let o = resolve(&mut vocab.entities, "entity", fields[2])?;
        let t = Triple::new(s, r, o);
        if let Some(&first_line) = seen.get(&t) {
            if opts.allow_duplicates {
                log::warn!("{}:{lineno}: dropping duplicate of line {first_line}", path.display());
                continue;
            }
            return Err(KgeError::DuplicateTriple { path: path.to_owned(), line: lineno, first_line });
        }
        seen.insert(t, lineno);
        triples.push(t);
    }
    Ok((TripleStore::new(split, triples), vocab))
}

/// Known-true triples keyed for both ranking directions.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    known_tails: HashMap<(usize, usize), HashSet<usize>>,
    known_heads: HashMap<(usize, usize), HashSet<usize>>,
    source_splits: Vec<Split>,
}

impl FilterIndex {
    pub fn build<'a, I>(stores: I) -> Self
    where
        I: IntoIterator<Item = &'a TripleStore>,
    {
        let mut idx = FilterIndex::default();
        for store in stores {
            idx.add(store);
        }
        idx
    }

    pub fn add(&mut self, store: &TripleStore) {
        for t in &store.triples {
            self.known_tails.entry((t.s, t.r)).or_default().insert(t.o);
            self.known_heads.entry((t.r, t.o)).or_default().insert(t.s);
        }
        if !self.source_splits.contains(&store.split) {
            self.source_splits.push(store.split);
        }
    }

    pub fn known_tails(&self, s: usize, r: usize) -> Option<&HashSet<usize>> {
        self.known_tails.get(&(s, r))
    }

    pub fn known_heads(&self, r: usize, o: usize) -> Option<&HashSet<usize>> {
        self.known_heads.get(&(r, o))
    }

    pub fn source_splits(&self) -> &[Split] {
        &self.source_splits
    }

    pub fn is_empty(&self) -> bool {
        self.known_tails.is_empty()
    }
}

impl KnownTriples for FilterIndex {
    fn contains(&self, t: &Triple) -> bool {
        self.known_tails.get(&(t.s, t.r)).is_some_and(|set| set.contains(&t.o))
    }
}
