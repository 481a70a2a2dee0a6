//! Entity-ranking evaluation: raw and filtered MRR and Hits@k.

use std::fmt::Write as _;

use analogy_core::grad::{object_query_into, subject_query_into};
use analogy_core::{proportion_test, rank_against, Direction, MetricReport, ProportionTest, RankRecord, Triple};
use rayon::prelude::*;

use crate::data::FilterIndex;
use crate::model::Model;

/// Scores of every entity placed in the `direction` slot of `triple`.
pub fn candidate_scores(model: &Model, triple: Triple, direction: Direction) -> Vec<f64> {
    let cfg = &model.config;
    let mut query = vec![0.0; cfg.dim];
    let rel = model.relations.row(triple.r);
    match direction {
        Direction::Tail => object_query_into(cfg, model.entities.row(triple.s), rel, &mut query),
        Direction::Head => subject_query_into(cfg, rel, model.entities.row(triple.o), &mut query),
    }
    .expect("model tables have the configured dimension");
    (0..model.n_entities()).map(|c| model.entities.row(c).iter().zip(&query).map(|(a, b)| a * b).sum()).collect()
}

pub fn rank_entities(model: &Model, triple: Triple, direction: Direction, filter: Option<&FilterIndex>) -> RankRecord {
    let scores = candidate_scores(model, triple, direction);
    let (truth, known) = match direction {
        Direction::Tail => (triple.o, filter.and_then(|f| f.known_tails(triple.s, triple.r))),
        Direction::Head => (triple.s, filter.and_then(|f| f.known_heads(triple.r, triple.o))),
    };
    let (raw_rank, filtered_rank) = rank_against(&scores, truth, |c| known.is_some_and(|set| set.contains(&c)));
    RankRecord { triple, direction, raw_rank, filtered_rank }
}

/// Head and tail rank records for every test triple, in input order.
pub fn rank_all(model: &Model, test: &[Triple], filter: Option<&FilterIndex>) -> Vec<RankRecord> {
    test.par_iter()
        .flat_map_iter(|&t| [Direction::Head, Direction::Tail].map(|d| rank_entities(model, t, d, filter)))
        .collect()
}

/// MRR and Hits@k over both ranking directions of every test triple.
pub fn evaluate(model: &Model, test: &[Triple], filter: Option<&FilterIndex>, ks: &[usize]) -> MetricReport {
    MetricReport::from_records(&rank_all(model, test, filter), ks)
}

/// Aligned human-readable table.
pub fn format_table(report: &MetricReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>10} {:>10}", "metric", "raw", "filtered");
    let _ = writeln!(out, "{:<10} {:>10.4} {:>10.4}", "MRR", report.mrr_raw, report.mrr_filtered);
    for (k, raw) in &report.hits_raw {
        let filt = report.hits_filtered.get(k).copied().unwrap_or(f64::NAN);
        let _ = writeln!(out, "{:<10} {:>10.4} {:>10.4}", format!("Hits@{k}"), raw, filt);
    }
    let _ = writeln!(out, "{:<10} {:>10}", "queries", report.n_queries);
    out
}

/// Flat `key=value` lines.
pub fn to_key_values(report: &MetricReport) -> Vec<(String, String)> {
    let mut kv = vec![
        ("mrr_raw".to_owned(), format!("{}", report.mrr_raw)),
        ("mrr_filt".to_owned(), format!("{}", report.mrr_filtered)),
    ];
    for (k, v) in &report.hits_raw {
        kv.push((format!("hits{k}_raw"), format!("{v}")));
    }
    for (k, v) in &report.hits_filtered {
        kv.push((format!("hits{k}_filt"), format!("{v}")));
    }
    kv.push(("n_queries".to_owned(), report.n_queries.to_string()));
    kv
}

/// Inverse of [`to_key_values`].
pub fn from_key_values(kv: &[(String, String)]) -> Option<MetricReport> {
    let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let mut report = MetricReport {
        mrr_raw: get("mrr_raw")?.parse().ok()?,
        mrr_filtered: get("mrr_filt")?.parse().ok()?,
        hits_raw: Default::default(),
        hits_filtered: Default::default(),
        n_queries: get("n_queries")?.parse().ok()?,
    };
    for (key, value) in kv {
        let Some(rest) = key.strip_prefix("hits") else { continue };
        let (k, kind) = rest.split_once('_')?;
        let k: usize = k.parse().ok()?;
        let v: f64 = value.parse().ok()?;
        match kind {
            "raw" => report.hits_raw.insert(k, v),
            "filt" => report.hits_filtered.insert(k, v),
            _ => return None,
        };
    }
    Some(report)
}

/// One-sample proportion test of an observed Hits@k against a reference value.
pub fn compare_to_reference(observed: f64, reference: f64, n_queries: usize) -> Option<ProportionTest> {
    proportion_test(observed, reference, n_queries).ok()
}
