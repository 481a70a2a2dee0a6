//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.
//!
//! Criterion 10 (benchmark-scale WN18/FB15K reproduction) only runs when
//! `KGE_EXTENDED_DATA` points at a directory holding `wn18/` and/or
//! `fb15k/` subdirectories with `train.txt`, `valid.txt` and `test.txt`.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use analogy_core::model::scalars_for_fraction;
use analogy_core::rng::stream_rng;
use analogy_core::{
    expand_block_diag, grad_triple, proportion_test, rank_against, score, score_analogy, score_complex, score_distmult,
    score_hole, Direction, MetricReport, ModelConfig, ModelKind, ParamTable, Triple,
};
use kge::data::{load_triples, FilterIndex, LoadOptions, Split, TripleStore, Vocab, VocabMode};
use kge::evaluator::{candidate_scores, evaluate, rank_all};
use kge::model::Model;
use kge::spectral::{dft_complex_score_oracle, planted_family, verify_corollary_equivalence};
use kge::synthetic::{SyntheticKg, SyntheticSpec};
use kge::trainer::{train, TrainConfig};
use nalgebra::DMatrix;
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn uniform(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = stream_rng(1, 0);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut checks = 0usize;
    for kind in ModelKind::ALL {
        for m in [4, 16, 50] {
            let cfg = ModelConfig::new(kind, m, scalars_for_fraction(m, 0.5)).unwrap();
            for _ in 0..100 {
                let v = [uniform(&mut rng, m), uniform(&mut rng, m), uniform(&mut rng, m)];
                let g = grad_triple(&cfg, &v[0], &v[1], &v[2]).unwrap();
                for (slot, analytic) in [&g.d_subject, &g.d_relation, &g.d_object].into_iter().enumerate() {
                    for i in 0..m {
                        let (mut plus, mut minus) = (v.clone(), v.clone());
                        plus[slot][i] += h;
                        minus[slot][i] -= h;
                        let fd = (score(&cfg, &plus[0], &plus[1], &plus[2]).unwrap()
                            - score(&cfg, &minus[0], &minus[1], &minus[2]).unwrap())
                            / (2.0 * h);
                        let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1.0);
                        worst = worst.max(rel);
                        checks += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-5 && secs < 5.0, format!("{checks} partials, max rel err {worst:.2e}, {secs:.2}s"))
}

fn distmult_recovery() -> Outcome {
    let mut rng = stream_rng(2, 0);
    let mut mismatches = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let m = rng.random_range(1..=64);
        let (s, r, o) = (uniform(&mut rng, m), uniform(&mut rng, m), uniform(&mut rng, m));
        let a = score_analogy(&s, &r, &o, m).unwrap();
        let d = score_distmult(&s, &r, &o).unwrap();
        mismatches += (a.to_bits() != d.to_bits()) as usize;
        worst = worst.max((a - d).abs());
    }
    check(worst <= 1e-15, format!("10000 inputs, {mismatches} not bitwise equal, max |diff| {worst:.1e}"))
}

/// ComplEx storage `(Im, Re)` per coordinate → ANALOGY block `(x, y) = (Re, Im)`.
fn complex_relation_to_blocks(r: &[f64]) -> Vec<f64> {
    r.chunks(2).flat_map(|c| [c[1], c[0]]).collect()
}

fn complex_recovery() -> Outcome {
    let mut rng = stream_rng(3, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let m = 2 * rng.random_range(1..=32);
        let (s, r, o) = (uniform(&mut rng, m), uniform(&mut rng, m), uniform(&mut rng, m));
        let c = score_complex(&s, &r, &o).unwrap();
        let a = score_analogy(&s, &complex_relation_to_blocks(&r), &o, 0).unwrap();
        worst = worst.max((a - c).abs());
    }
    let (s, r, o) = ([2.0, 1.0], [4.0, 3.0], [6.0, 5.0]);
    let direct = score_complex(&s, &r, &o).unwrap();
    let mapped = score_analogy(&s, &complex_relation_to_blocks(&r), &o, 0).unwrap();
    check(
        worst <= 1e-12 && direct == 35.0 && mapped == 35.0,
        format!("10000 inputs, max |diff| {worst:.1e}; worked example {direct} / {mapped}"),
    )
}

fn hole_fourier() -> Outcome {
    let mut rng = stream_rng(4, 0);
    let mut worst: f64 = 0.0;
    for m in [3, 8, 16] {
        for _ in 0..1000 {
            let (s, r, o) = (uniform(&mut rng, m), uniform(&mut rng, m), uniform(&mut rng, m));
            worst = worst.max((score_hole(&s, &r, &o).unwrap() - dft_complex_score_oracle(&s, &r, &o)).abs());
        }
    }
    check(worst <= 1e-9, format!("3000 triples, max |diff| {worst:.1e}"))
}

fn in_block_form(c: &DMatrix<f64>, scalars: usize, tol: f64) -> bool {
    let m = c.nrows();
    let block_of = |i: usize| if i < scalars { i } else { scalars + (i - scalars) / 2 * 2 };
    let outside_ok = (0..m)
        .all(|i| (0..m).all(|j| (block_of(i) == block_of(j) && (i >= scalars || i == j)) || c[(i, j)].abs() <= tol));
    outside_ok
        && (scalars..m)
            .step_by(2)
            .all(|p| (c[(p, p)] - c[(p + 1, p + 1)]).abs() <= tol && (c[(p, p + 1)] + c[(p + 1, p)]).abs() <= tol)
}

fn block_algebra() -> Outcome {
    let (m, n) = (16, 8);
    let mut rng = stream_rng(5, 0);
    let expand = |p: &[f64]| {
        let d = expand_block_diag(p, m, n).unwrap();
        DMatrix::from_row_slice(m, m, d.as_slice())
    };
    let (mut normal, mut commute, mut closed) = (0.0f64, 0.0f64, true);
    for _ in 0..100 {
        let a = expand(&uniform(&mut rng, m));
        let b = expand(&uniform(&mut rng, m));
        for x in [&a, &b] {
            normal = normal.max((x.transpose() * x - x * x.transpose()).abs().max());
        }
        let (ab, ba) = (&a * &b, &b * &a);
        commute = commute.max((&ab - &ba).abs().max());
        closed &= in_block_form(&ab, n, 1e-12);
    }
    check(
        normal <= 1e-12 && commute <= 1e-12 && closed,
        format!("100 pairs, normality {normal:.1e}, commutator {commute:.1e}, products closed: {closed}"),
    )
}

fn spectral_round_trip() -> Outcome {
    let (m, n, k) = (8, 4, 5);
    let (mut recon, mut orth, mut dev, mut norms) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut pairs_seen = 0usize;
    for seed in 0..20u64 {
        let mut rng = stream_rng(600 + seed, 0);
        let (family, _, _) = planted_family(m, n, k, &mut rng).unwrap();
        let entities = ParamTable::from_values(100, m, uniform(&mut rng, 100 * m)).unwrap();
        let triples: Vec<Triple> = (0..1000)
            .map(|_| Triple::new(rng.random_range(0..100), rng.random_range(0..k), rng.random_range(0..100)))
            .collect();
        let report = match verify_corollary_equivalence(&entities, &family, &triples, 1e-8, seed) {
            Ok(r) => r,
            Err(e) => return Outcome::Fail(format!("seed {seed}: {e}")),
        };
        let d = &report.decomposition;
        recon = recon.max(d.max_reconstruction_residual());
        orth = orth.max(d.basis.orthogonality_residual());
        dev = dev.max(report.max_deviation);
        for p in &d.conjugate_pairs {
            norms = norms.max((p.a_norm_sq - 0.5).abs()).max((p.b_norm_sq - 0.5).abs()).max(p.a_dot_b.abs());
            pairs_seen += 1;
        }
    }
    check(
        recon <= 1e-8 && orth <= 1e-10 && dev <= 1e-8 && norms <= 1e-8 && pairs_seen > 0,
        format!(
            "20 seeds, reconstruction {recon:.1e}, orthogonality {orth:.1e}, score deviation {dev:.1e}, \
             norm facts {norms:.1e} over {pairs_seen} pairs"
        ),
    )
}

/// Ranks from per-triple scores and a linear scan over the known triples.
fn brute_force_report(model: &Model, test: &[Triple], known: &[Triple], phi: impl Fn(f64) -> f64) -> MetricReport {
    let n = model.n_entities();
    let mut ranks = Vec::new();
    for &t in test {
        for direction in [Direction::Head, Direction::Tail] {
            let with = |c: usize| match direction {
                Direction::Head => Triple::new(c, t.r, t.o),
                Direction::Tail => Triple::new(t.s, t.r, c),
            };
            let truth = match direction {
                Direction::Head => t.s,
                Direction::Tail => t.o,
            };
            let target = phi(model.score(t));
            let (mut raw, mut filtered) = (1, 1);
            for c in (0..n).filter(|&c| c != truth) {
                if phi(model.score(with(c))) >= target {
                    raw += 1;
                    if !known.contains(&with(c)) {
                        filtered += 1;
                    }
                }
            }
            ranks.push((raw, filtered));
        }
    }
    MetricReport::from_ranks(ranks, &MetricReport::DEFAULT_KS)
}

fn evaluator_oracle() -> Outcome {
    let mut rng = stream_rng(7, 0);
    let (n_e, n_r) = (50, 3);
    let mut seen = HashSet::new();
    let mut all = Vec::new();
    while all.len() < 300 {
        let t = Triple::new(rng.random_range(0..n_e), rng.random_range(0..n_r), rng.random_range(0..n_e));
        if seen.insert(t) {
            all.push(t);
        }
    }
    let test = all.split_off(240);
    let train_store = TripleStore::new(Split::Train, all.clone());
    let test_store = TripleStore::new(Split::Test, test.clone());
    let filter = FilterIndex::build([&train_store, &test_store]);
    let known: Vec<Triple> = all.iter().chain(&test).copied().collect();

    let mut mismatches = Vec::new();
    for kind in ModelKind::ALL {
        let cfg = ModelConfig::new(kind, 8, 4).unwrap();
        let model = Model::new(
            cfg,
            ParamTable::from_values(n_e, 8, uniform(&mut rng, n_e * 8)).unwrap(),
            ParamTable::from_values(n_r, 8, uniform(&mut rng, n_r * 8)).unwrap(),
        )
        .unwrap();
        let report = evaluate(&model, &test, Some(&filter), &MetricReport::DEFAULT_KS);
        if report != brute_force_report(&model, &test, &known, |x| x) {
            mismatches.push(format!("{kind} vs brute force"));
        }
        // strictly increasing transforms of the score
        let transforms: [(&str, fn(f64) -> f64); 3] =
            [("affine", |x| 3.0 * x + 1.0), ("cube", |x| x * x * x), ("logistic", |x| 1.0 / (1.0 + (-x).exp()))];
        for (name, f) in transforms {
            let ranks = rank_all(&model, &test, Some(&filter)).into_iter().map(|rec| {
                let scores: Vec<f64> = candidate_scores(&model, rec.triple, rec.direction).into_iter().map(f).collect();
                let (truth, set) = match rec.direction {
                    Direction::Head => (rec.triple.s, filter.known_heads(rec.triple.r, rec.triple.o)),
                    Direction::Tail => (rec.triple.o, filter.known_tails(rec.triple.s, rec.triple.r)),
                };
                rank_against(&scores, truth, |c| set.is_some_and(|s| s.contains(&c)))
            });
            if MetricReport::from_ranks(ranks, &MetricReport::DEFAULT_KS) != report {
                mismatches.push(format!("{kind} under {name} transform"));
            }
        }
        let mut scaled = model.clone();
        scaled.entities.values_mut().iter_mut().for_each(|x| *x *= 2.0);
        if evaluate(&scaled, &test, Some(&filter), &MetricReport::DEFAULT_KS) != report {
            mismatches.push(format!("{kind} under entity rescaling"));
        }
    }
    check(mismatches.is_empty(), format!("4 models x 60 test triples; mismatches: {mismatches:?}"))
}

fn synthetic_config(kind: ModelKind) -> ModelConfig {
    match kind {
        ModelKind::DistMult => ModelConfig::new(kind, 16, 16).unwrap(),
        _ => ModelConfig::new(kind, 16, 8).unwrap(),
    }
}

fn synthetic_train_config(threads: usize, seed: u64) -> TrainConfig {
    TrainConfig { learning_rate: 0.1, l2: 1e-3, neg_ratio: 3, epochs: 200, threads, seed, ..TrainConfig::default() }
}

fn fit_synthetic(kg: &SyntheticKg, kind: ModelKind, threads: usize, seed: u64) -> (MetricReport, f64) {
    let filter = FilterIndex::build([&kg.train, &kg.test]);
    let model = Model::init(synthetic_config(kind), kg.vocab.n_entities(), kg.vocab.n_relations(), seed).unwrap();
    let start = Instant::now();
    let (trained, _) = train(&model, &kg.train.triples, None, &synthetic_train_config(threads, seed)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    (evaluate(&trained, &kg.test.triples, Some(&filter), &MetricReport::DEFAULT_KS), secs)
}

fn end_to_end(kg: &SyntheticKg) -> Outcome {
    let (analogy, secs) = fit_synthetic(kg, ModelKind::Analogy, 1, 5);
    let (distmult, _) = fit_synthetic(kg, ModelKind::DistMult, 1, 5);
    let (a10, d10) = (analogy.hits_filtered[&10], distmult.hits_filtered[&10]);
    check(
        a10 >= 0.90 && secs < 60.0 && d10 < a10,
        format!("ANALOGY filtered Hits@10 {a10:.3} in {secs:.1}s; DistMult {d10:.3}"),
    )
}

/// Compares mean filtered MRR over paired seeds so that seed-to-seed spread
/// does not mask (or fake) the effect of lock-free updates.
fn hogwild(kg: &SyntheticKg) -> Outcome {
    let seeds = 0..5u64;
    let mean_mrr = |threads| {
        seeds.clone().map(|seed| fit_synthetic(kg, ModelKind::Analogy, threads, seed).0.mrr_filtered).sum::<f64>()
            / seeds.clone().count() as f64
    };
    let (single, multi) = (mean_mrr(1), mean_mrr(8));
    let diff = (multi - single).abs();
    let cores = std::thread::available_parallelism().map(usize::from).unwrap_or(1);
    let mut detail =
        format!("mean filtered MRR over 5 seeds: 1 worker {single:.4}, 8 workers {multi:.4} (|diff| {diff:.4})");
    if cores < 8 {
        detail.push_str(&format!("; speedup check SKIP(environment): {cores} core(s) available, needs 8"));
        return check(diff <= 0.02, detail);
    }
    let epoch_secs = |threads| {
        let model = Model::init(synthetic_config(ModelKind::Analogy), kg.vocab.n_entities(), kg.vocab.n_relations(), 5)
            .unwrap();
        let cfg = TrainConfig { epochs: 5, ..synthetic_train_config(threads, 5) };
        let (_, report) = train(&model, &kg.train.triples, None, &cfg).unwrap();
        report.epochs.iter().map(|e| e.secs).sum::<f64>() / report.epochs.len() as f64
    };
    let (t1, t8) = (epoch_secs(1), epoch_secs(8));
    detail.push_str(&format!("; secs/epoch 1 worker {t1:.4}, 8 workers {t8:.4}"));
    check(diff <= 0.02 && t8 <= 0.5 * t1, detail)
}

struct PublishedTarget {
    name: &'static str,
    hits10: f64,
    mrr: Option<f64>,
    published_hits10: f64,
}

fn benchmark_scale() -> Outcome {
    let Some(root) = std::env::var_os("KGE_EXTENDED_DATA") else {
        return Outcome::Skip("extended; set KGE_EXTENDED_DATA to run".into());
    };
    let targets = [
        PublishedTarget { name: "wn18", hits10: 0.935, mrr: Some(0.93), published_hits10: 0.947 },
        PublishedTarget { name: "fb15k", hits10: 0.84, mrr: None, published_hits10: 0.854 },
    ];
    let threads = std::thread::available_parallelism().map(usize::from).unwrap_or(1);
    let mut details = Vec::new();
    let mut ok = true;
    for target in targets {
        let dir = Path::new(&root).join(target.name);
        if !dir.join("train.txt").exists() {
            details.push(format!("{} missing", target.name));
            continue;
        }
        let opts = LoadOptions { allow_duplicates: true };
        let (train_s, vocab) =
            load_triples(dir.join("train.txt"), Vocab::default(), VocabMode::Build, Split::Train, opts).unwrap();
        let (valid_s, vocab) =
            load_triples(dir.join("valid.txt"), vocab, VocabMode::Build, Split::Valid, opts).unwrap();
        let (test_s, vocab) = load_triples(dir.join("test.txt"), vocab, VocabMode::Build, Split::Test, opts).unwrap();
        let cfg = ModelConfig::new(ModelKind::Analogy, 200, 100).unwrap();
        let model = Model::init(cfg, vocab.n_entities(), vocab.n_relations(), 0).unwrap();
        let tc = TrainConfig { l2: 1e-2, epochs: 500, threads, ..TrainConfig::default() };
        let (trained, _) = train(&model, &train_s.triples, None, &tc).unwrap();
        let filter = FilterIndex::build([&train_s, &valid_s, &test_s]);
        let r = evaluate(&trained, &test_s.triples, Some(&filter), &MetricReport::DEFAULT_KS);
        let h10 = r.hits_filtered[&10];
        let z = proportion_test(h10, target.published_hits10, r.n_queries).unwrap();
        let shortfall = target.published_hits10 - h10;
        ok &= h10 >= target.hits10
            && target.mrr.is_none_or(|m| r.mrr_filtered >= m)
            && !(z.significant_at_5pct && shortfall > 0.012);
        details.push(format!("{} Hits@10 {h10:.4} MRR {:.4} z {:.2}", target.name, r.mrr_filtered, z.z));
    }
    check(ok, details.join("; "))
}

fn main() {
    let kg = SyntheticKg::generate(&SyntheticSpec::default()).unwrap();
    let mut failed = 0usize;
    let mut report = |id: u32, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {id:>2} {name:<32} {tag}  {detail}");
    };
    report(1, "gradient correctness", gradients());
    report(2, "DistMult recovery", distmult_recovery());
    report(3, "ComplEx recovery", complex_recovery());
    report(4, "HolE Fourier equivalence", hole_fourier());
    report(5, "block-family algebra", block_algebra());
    report(6, "block-diagonalization round trip", spectral_round_trip());
    report(7, "evaluator oracle equivalence", evaluator_oracle());
    report(8, "end-to-end synthetic learning", end_to_end(&kg));
    report(9, "hogwild tolerance", hogwild(&kg));
    report(10, "benchmark-scale reproduction", benchmark_scale());
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
