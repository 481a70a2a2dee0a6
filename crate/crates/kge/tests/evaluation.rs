use analogy_core::{MetricReport, ModelConfig, ModelKind, ParamTable, Triple};
use kge::data::{FilterIndex, Split, TripleStore};
use kge::evaluator::{evaluate, from_key_values, rank_all, to_key_values};
use kge::model::Model;

/// DistMult with one-hot entities and a diagonal relation: every triple
/// `(i, 0, i)` is the unique argmax of its queries.
fn one_hot_model(n: usize) -> Model {
    let mut e = ParamTable::zeros(n, n);
    for i in 0..n {
        e.row_mut(i)[i] = 1.0;
    }
    let r = ParamTable::from_values(1, n, vec![1.0; n]).unwrap();
    Model::new(ModelConfig::new(ModelKind::DistMult, n, n).unwrap(), e, r).unwrap()
}

#[test]
fn perfect_model_scores_one() {
    let model = one_hot_model(3);
    let test: Vec<Triple> = (0..3).map(|i| Triple::new(i, 0, i)).collect();
    let filter = FilterIndex::build([&TripleStore::new(Split::Test, test.clone())]);
    let report = evaluate(&model, &test, Some(&filter), &MetricReport::DEFAULT_KS);
    assert_eq!(report.mrr_filtered, 1.0);
    assert_eq!(report.mrr_raw, 1.0);
    assert_eq!(report.n_queries, 6);
    assert!(report.hits_filtered.values().all(|&h| h == 1.0));
}

#[test]
fn key_values_parse_back_to_the_same_numbers() {
    let model = Model::init(ModelConfig::new(ModelKind::Analogy, 6, 2).unwrap(), 12, 2, 4).unwrap();
    let test = vec![Triple::new(0, 0, 1), Triple::new(3, 1, 7), Triple::new(5, 0, 5)];
    let report = evaluate(&model, &test, None, &MetricReport::DEFAULT_KS);
    let kv = to_key_values(&report);
    let text = kge::kv::format(&kv);
    assert_eq!(from_key_values(&kge::kv::parse(&text)).unwrap(), report);
}

#[test]
fn test_split_in_filter_matters_only_for_shared_keys() {
    let model = Model::init(ModelConfig::new(ModelKind::Analogy, 6, 2).unwrap(), 20, 2, 8).unwrap();
    let train = TripleStore::new(Split::Train, vec![Triple::new(0, 0, 1), Triple::new(2, 1, 3)]);
    let valid = TripleStore::new(Split::Valid, vec![Triple::new(4, 0, 5)]);
    let without_test = FilterIndex::build([&train, &valid]);

    // no two test triples share an (s, r) or (r, o) key
    let disjoint = TripleStore::new(Split::Test, vec![Triple::new(6, 0, 7), Triple::new(8, 1, 9)]);
    let with_test = FilterIndex::build([&train, &valid, &disjoint]);
    assert_eq!(
        evaluate(&model, &disjoint.triples, Some(&without_test), &[1, 3, 10]),
        evaluate(&model, &disjoint.triples, Some(&with_test), &[1, 3, 10]),
    );

    // test triples sharing (s, r): each may filter the other
    let shared = TripleStore::new(Split::Test, vec![Triple::new(10, 0, 11), Triple::new(10, 0, 12)]);
    let with_test = FilterIndex::build([&train, &valid, &shared]);
    let a = rank_all(&model, &shared.triples, Some(&without_test));
    let b = rank_all(&model, &shared.triples, Some(&with_test));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.raw_rank, y.raw_rank);
        assert!(y.filtered_rank <= x.filtered_rank);
    }
    let tail_ranks = |recs: &[analogy_core::RankRecord]| -> Vec<usize> {
        recs.iter().filter(|r| r.direction == analogy_core::Direction::Tail).map(|r| r.filtered_rank).collect()
    };
    // the lower-scored of the two tails gains exactly one position
    let gained: usize = tail_ranks(&a).iter().zip(tail_ranks(&b)).map(|(x, y)| x - y).sum();
    assert_eq!(gained, 1);
}

#[test]
fn evaluation_leaves_the_model_untouched() {
    let model = Model::init(ModelConfig::new(ModelKind::HolE, 5, 0).unwrap(), 9, 2, 1).unwrap();
    let before = model.clone();
    let test = vec![Triple::new(0, 1, 2), Triple::new(8, 0, 8)];
    let _ = evaluate(&model, &test, None, &MetricReport::DEFAULT_KS);
    assert_eq!(model, before);
}
