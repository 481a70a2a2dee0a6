//! Command-line interface: `train`, `eval`, `verify-spectral`, `bench` and
//! `gen-synthetic`.
//!
//! Exit codes: 0 success, 1 data or numeric failure, 2 usage error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use analogy_core::model::scalars_for_fraction;
use analogy_core::rng::stream_rng;
use analogy_core::{MetricReport, ModelConfig, ModelKind, ParamTable, Triple};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::bench::{self, BenchPlan};
use crate::data::{load_triples, FilterIndex, LoadOptions, Split, TripleStore, Vocab, VocabMode};
use crate::evaluator::{evaluate, format_table, to_key_values};
use crate::kv;
use crate::model::{Model, SavedModel};
use crate::spectral::{parse_matrix_family, verify_corollary_equivalence};
use crate::synthetic::{SyntheticKg, SyntheticSpec};
use crate::trainer::{train_shared, SharedModel, TrainConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "kge", version, about = "ANALOGY knowledge-graph embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it with a run manifest.
    Train(TrainArgs),
    /// Rank test triples and report raw/filtered MRR and Hits@k.
    Eval(EvalArgs),
    /// Block-diagonalize a commuting normal family and check score equivalence.
    VerifySpectral(VerifyArgs),
    /// Measure seconds per epoch across thread counts and dimensions.
    Bench(BenchArgs),
    /// Write a synthetic analogical knowledge graph as train/test files.
    GenSynthetic(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelFlags {
    /// analogy, distmult, complex or hole.
    #[arg(long, default_value = "analogy")]
    pub model: ModelKind,
    /// Embedding dimension m.
    #[arg(long, default_value_t = 200)]
    pub dim: usize,
    /// Fraction n/m of scalar blocks in ANALOGY relation maps.
    #[arg(long, default_value_t = 0.5)]
    pub scalar_frac: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, required_unless_present = "from_manifest")]
    pub train: Option<PathBuf>,
    /// Validation split; enables final (and periodic) validation metrics.
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// L2 weight decay λ.
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    /// Negatives per positive α.
    #[arg(long, default_value_t = 3)]
    pub neg_ratio: usize,
    /// Initial AdaGrad learning rate η.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, env = "KGE_NUM_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub adagrad_epsilon: f64,
    /// Never emit negatives that are known training triples.
    #[arg(long)]
    pub filter_negatives: bool,
    /// Drop duplicate triples with a warning instead of failing.
    #[arg(long)]
    pub allow_duplicates: bool,
    /// Write `<out>.ckpt` every k epochs (0 disables).
    #[arg(long, default_value_t = 50)]
    pub checkpoint_every: usize,
    /// Report validation MRR every k epochs (0 disables; needs --valid).
    #[arg(long, default_value_t = 0)]
    pub eval_every: usize,
    #[arg(long, default_value = "model.kgem")]
    pub out: PathBuf,
    /// Manifest path (default `<out>.manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Re-run the configuration recorded in a previous manifest; other
    /// configuration flags are ignored.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// Splits folded into the filter index.
    #[arg(long, value_delimiter = ',', default_value = "train,valid,test")]
    pub filter_splits: Vec<Split>,
    /// key=value report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub allow_duplicates: bool,
    #[arg(long, env = "KGE_NUM_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Family file: first line `m k`, then k·m rows of m numbers.
    #[arg(long)]
    pub matrices: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Random triples used for the score-equivalence check.
    #[arg(long, default_value_t = 1000)]
    pub triples: usize,
    /// Random entity vectors drawn for the check.
    #[arg(long, default_value_t = 100)]
    pub entities: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Training triples; a synthetic graph is used when omitted.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long, default_value = "analogy")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0.5)]
    pub scalar_frac: f64,
    #[arg(long, env = "KGE_NUM_THREADS", default_value_t = 1)]
    pub threads_max: usize,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3)]
    pub neg_ratio: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub entities: usize,
    #[arg(long, default_value_t = 4)]
    pub relations: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub answers: usize,
    /// Entity prototypes (0 = independent entities).
    #[arg(long, default_value_t = 20)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,
    #[arg(long, default_value_t = 2017)]
    pub seed: u64,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::VerifySpectral(a) => cmd_verify_spectral(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::GenSynthetic(a) => cmd_gen_synthetic(&a),
    }
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Fully resolved training run, as recorded in a manifest.
#[derive(Debug, Clone, PartialEq)]
struct TrainPlan {
    config: ModelConfig,
    train_cfg: TrainConfig,
    train: PathBuf,
    valid: Option<PathBuf>,
    allow_duplicates: bool,
}

impl TrainPlan {
    fn from_args(a: &TrainArgs) -> anyhow::Result<Self> {
        let config =
            ModelConfig::new(a.model.model, a.model.dim, scalars_for_fraction(a.model.dim, a.model.scalar_frac))?;
        Ok(Self {
            config,
            train_cfg: TrainConfig {
                learning_rate: a.lr,
                l2: a.l2,
                epochs: a.epochs,
                threads: a.threads,
                neg_ratio: a.neg_ratio,
                seed: a.seed,
                adagrad_epsilon: a.adagrad_epsilon,
                filter_false_negatives: a.filter_negatives,
                ..TrainConfig::default()
            },
            train: a.train.clone().context("--train is required")?,
            valid: a.valid.clone(),
            allow_duplicates: a.allow_duplicates,
        })
    }

    fn to_pairs(&self) -> Vec<(String, String)> {
        let c = &self.train_cfg;
        let mut kv: Vec<(String, String)> = [
            ("model", self.config.kind.to_string()),
            ("dim", self.config.dim.to_string()),
            ("scalars", self.config.scalars.to_string()),
            ("l2", c.l2.to_string()),
            ("lr", c.learning_rate.to_string()),
            ("epochs", c.epochs.to_string()),
            ("threads", c.threads.to_string()),
            ("neg_ratio", c.neg_ratio.to_string()),
            ("seed", c.seed.to_string()),
            ("adagrad_epsilon", c.adagrad_epsilon.to_string()),
            ("filter_negatives", c.filter_false_negatives.to_string()),
            ("allow_duplicates", self.allow_duplicates.to_string()),
            ("train", self.train.display().to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
        if let Some(v) = &self.valid {
            kv.push(("valid".into(), v.display().to_string()));
        }
        kv
    }

    fn from_pairs(kv: &[(String, String)]) -> anyhow::Result<Self> {
        fn field<T: std::str::FromStr>(kv: &[(String, String)], key: &str) -> anyhow::Result<T> {
            let raw = kv::get(kv, key).with_context(|| format!("manifest is missing '{key}'"))?;
            raw.parse().map_err(|_| anyhow::anyhow!("manifest has a malformed '{key}': {raw}"))
        }
        let kind: ModelKind = field(kv, "model")?;
        let config = ModelConfig::new(kind, field(kv, "dim")?, field(kv, "scalars")?)?;
        Ok(Self {
            config,
            train_cfg: TrainConfig {
                learning_rate: field(kv, "lr")?,
                l2: field(kv, "l2")?,
                epochs: field(kv, "epochs")?,
                threads: field(kv, "threads")?,
                neg_ratio: field(kv, "neg_ratio")?,
                seed: field(kv, "seed")?,
                adagrad_epsilon: field(kv, "adagrad_epsilon")?,
                filter_false_negatives: field(kv, "filter_negatives")?,
                ..TrainConfig::default()
            },
            train: field(kv, "train")?,
            valid: kv::get(kv, "valid").map(PathBuf::from),
            allow_duplicates: field(kv, "allow_duplicates")?,
        })
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_train(a: &TrainArgs) -> anyhow::Result<u8> {
    let plan = match &a.from_manifest {
        Some(path) => TrainPlan::from_pairs(&kv::read(path)?)?,
        None => TrainPlan::from_args(a)?,
    };
    let started = Instant::now();
    let opts = LoadOptions { allow_duplicates: plan.allow_duplicates };
    let (train_store, vocab) = load_triples(&plan.train, Vocab::default(), VocabMode::Build, Split::Train, opts)?;
    let valid_store = match &plan.valid {
        Some(p) => Some(load_triples(p, vocab.clone(), VocabMode::Frozen, Split::Valid, opts)?.0),
        None => None,
    };
    let known = FilterIndex::build([&train_store]);
    let model = Model::init(plan.config, vocab.n_entities(), vocab.n_relations(), plan.train_cfg.seed)?;
    let shared = SharedModel::new(&model);

    let valid_filter = valid_store.as_ref().map(|v| FilterIndex::build([&train_store, v]));
    let mut stdout = std::io::stdout();
    let report = train_shared(&shared, &train_store.triples, Some(&known), &plan.train_cfg, |stats, shared| {
        let _ = writeln!(stdout, "{stats}");
        if a.checkpoint_every > 0 && stats.epoch % a.checkpoint_every == 0 {
            SavedModel { model: shared.snapshot(), vocab: vocab.clone() }.save(with_suffix(&a.out, ".ckpt"))?;
        }
        if let (Some(v), Some(f)) = (&valid_store, &valid_filter) {
            if a.eval_every > 0 && stats.epoch % a.eval_every == 0 {
                let m = evaluate(&shared.snapshot(), &v.triples, Some(f), &MetricReport::DEFAULT_KS);
                let _ = writeln!(stdout, "epoch {} valid_mrr_filt {:.6}", stats.epoch, m.mrr_filtered);
            }
        }
        Ok(())
    })?;
    let train_secs = started.elapsed().as_secs_f64();
    let saved = SavedModel { model: shared.snapshot(), vocab };
    saved.save(&a.out)?;
    saved.vocab.write_dumps(&with_suffix(&a.out, ".entities.tsv"), &with_suffix(&a.out, ".relations.tsv"))?;

    let mut manifest = plan.to_pairs();
    manifest.push(("train_sha256".into(), sha256_file(&plan.train)?));
    if let Some(v) = &plan.valid {
        manifest.push(("valid_sha256".into(), sha256_file(v)?));
    }
    manifest.push(("n_entities".into(), saved.vocab.n_entities().to_string()));
    manifest.push(("n_relations".into(), saved.vocab.n_relations().to_string()));
    manifest.push(("n_train".into(), train_store.len().to_string()));
    if let Some(last) = report.epochs.last() {
        manifest.push(("final_loss".into(), last.mean_loss.to_string()));
    }
    manifest.push(("train_secs".into(), format!("{train_secs:.3}")));
    if let (Some(v), Some(f)) = (&valid_store, &valid_filter) {
        let m = evaluate(&saved.model, &v.triples, Some(f), &MetricReport::DEFAULT_KS);
        print!("{}", format_table(&m));
        manifest.extend(to_key_values(&m).into_iter().map(|(k, v)| (format!("valid_{k}"), v)));
    }
    let manifest_path = a.manifest.clone().unwrap_or_else(|| with_suffix(&a.out, ".manifest"));
    kv::write(&manifest_path, &manifest)?;
    Ok(EXIT_OK)
}

pub fn cmd_eval(a: &EvalArgs) -> anyhow::Result<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.threads.max(1)).build()?;
    let saved = SavedModel::load(&a.model_file)?;
    let opts = LoadOptions { allow_duplicates: a.allow_duplicates };
    let load = |path: &Path, split| -> anyhow::Result<TripleStore> {
        load_triples(path, saved.vocab.clone(), VocabMode::Frozen, split, opts)
            .map(|(store, _)| store)
            .with_context(|| "data does not match the model vocabulary".to_string())
    };
    let test = load(&a.test, Split::Test)?;
    if test.is_empty() {
        bail!("test file {} has no triples", a.test.display());
    }
    let mut filter = FilterIndex::default();
    for split in &a.filter_splits {
        let path = match split {
            Split::Train => a.train.as_deref(),
            Split::Valid => a.valid.as_deref(),
            Split::Test => Some(a.test.as_path()),
        };
        match path {
            Some(_) if *split == Split::Test => filter.add(&TripleStore::new(Split::Test, test.triples.clone())),
            Some(p) => filter.add(&load(p, *split)?),
            None => log::warn!("filter split '{split}' requested but no file was given; skipping"),
        }
    }
    log::info!("filter built from splits {:?}", filter.source_splits());
    let report = pool.install(|| evaluate(&saved.model, &test.triples, Some(&filter), &MetricReport::DEFAULT_KS));
    print!("{}", format_table(&report));
    if let Some(path) = &a.report {
        kv::write(path, &to_key_values(&report))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify_spectral(a: &VerifyArgs) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&a.matrices).with_context(|| format!("reading {}", a.matrices.display()))?;
    let family = parse_matrix_family(&text, &a.matrices)?;
    let m = family[0].nrows();
    let mut rng = stream_rng(a.seed, 1);
    let entities =
        ParamTable::from_values(a.entities, m, (0..a.entities * m).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let triples: Vec<Triple> = (0..a.triples)
        .map(|_| {
            Triple::new(
                rng.random_range(0..a.entities),
                rng.random_range(0..family.len()),
                rng.random_range(0..a.entities),
            )
        })
        .collect();
    let report = match verify_corollary_equivalence(&entities, &family, &triples, a.tol, a.seed) {
        Ok(r) => r,
        Err(e) => {
            println!("status=fail");
            println!("reason={e}");
            return Ok(EXIT_FAILURE);
        }
    };
    let d = &report.decomposition;
    let orth = d.basis.orthogonality_residual();
    let recon = d.max_reconstruction_residual();
    let proj = d.projection_residuals.iter().copied().fold(0.0, f64::max);
    let ok = report.passed && orth <= 1e-10 * m as f64;
    println!("status={}", if ok { "ok" } else { "fail" });
    println!("dim={m}");
    println!("family_size={}", family.len());
    println!("scalar_blocks={}", d.layout.scalars());
    println!("pair_blocks={}", d.layout.blocks.len() - d.layout.scalars());
    println!("orthogonality_residual={orth:e}");
    println!("max_reconstruction_residual={recon:e}");
    println!("max_projection_residual={proj:e}");
    println!("max_score_deviation={:e}", report.max_deviation);
    println!("triples={}", report.n_triples);
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

pub fn cmd_bench(a: &BenchArgs) -> anyhow::Result<u8> {
    let (triples, n_entities, n_relations) = match &a.train {
        Some(p) => {
            let (store, vocab) =
                load_triples(p, Vocab::default(), VocabMode::Build, Split::Train, LoadOptions::default())?;
            (store.triples, vocab.n_entities(), vocab.n_relations())
        }
        None => {
            let kg = SyntheticKg::generate(&SyntheticSpec { seed: a.seed, ..SyntheticSpec::default() })?;
            (kg.train.triples, kg.vocab.n_entities(), kg.vocab.n_relations())
        }
    };
    let plan = BenchPlan {
        kind: a.model,
        scalar_fraction: a.scalar_frac,
        threads: (1..=a.threads_max.max(1)).collect(),
        dims: a.dims.clone(),
        epochs: a.epochs,
        base: TrainConfig { neg_ratio: a.neg_ratio, seed: a.seed, ..TrainConfig::default() },
    };
    let rows = bench::run(&plan, &triples, n_entities, n_relations)?;
    print!("{}", bench::format_table(&rows));
    Ok(EXIT_OK)
}

pub fn cmd_gen_synthetic(a: &SynthArgs) -> anyhow::Result<u8> {
    let spec = SyntheticSpec {
        n_entities: a.entities,
        n_relations: a.relations,
        dim: a.dim,
        scalars: scalars_for_fraction(a.dim, 0.5),
        answers_per_query: a.answers,
        clusters: a.clusters,
        noise: a.noise,
        seed: a.seed,
        ..SyntheticSpec::default()
    };
    let kg = SyntheticKg::generate(&spec)?;
    std::fs::create_dir_all(&a.out_dir)?;
    for (name, store) in [("train.txt", &kg.train), ("test.txt", &kg.test)] {
        let path = a.out_dir.join(name);
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        store.write_tsv(&kg.vocab, &mut f)?;
        f.flush()?;
    }
    println!("wrote {} train and {} test triples to {}", kg.train.len(), kg.test.len(), a.out_dir.display());
    Ok(EXIT_OK)
}
