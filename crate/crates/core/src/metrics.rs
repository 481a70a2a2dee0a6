//! Rank-based link-prediction metrics.

use alloc::collections::BTreeMap;

use crate::error::CoreError;
use crate::sampler::Triple;

/// Which slot of the triple is replaced by candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Head,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankRecord {
    pub triple: Triple,
    pub direction: Direction,
    pub raw_rank: usize,
    pub filtered_rank: usize,
}

/// Pessimistic raw and filtered rank of `truth` among `scores`.
///
/// A candidate is ranked above the truth when its score is strictly higher
/// or equal (ties count against the truth). Candidates for which
/// `is_known(c)` holds are dropped from the filtered count; the truth itself
/// is never dropped.
pub fn rank_against(scores: &[f64], truth: usize, mut is_known: impl FnMut(usize) -> bool) -> (usize, usize) {
    let target = scores[truth];
    let mut raw = 1;
    let mut filtered = 1;
    for (c, &score) in scores.iter().enumerate() {
        if c == truth || !(score >= target || score.is_nan()) {
            continue;
        }
        raw += 1;
        if !is_known(c) {
            filtered += 1;
        }
    }
    (raw, filtered)
}

/// Aggregate MRR and Hits@k over a set of rank records.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub mrr_raw: f64,
    pub mrr_filtered: f64,
    pub hits_raw: BTreeMap<usize, f64>,
    pub hits_filtered: BTreeMap<usize, f64>,
    pub n_queries: usize,
}

impl MetricReport {
    pub const DEFAULT_KS: [usize; 3] = [1, 3, 10];

    pub fn from_ranks<I>(ranks: I, ks: &[usize]) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut n = 0usize;
        let (mut rr_raw, mut rr_filt) = (0.0, 0.0);
        let mut hits_raw: BTreeMap<usize, usize> = ks.iter().map(|&k| (k, 0)).collect();
        let mut hits_filt = hits_raw.clone();
        for (raw, filt) in ranks {
            n += 1;
            rr_raw += 1.0 / raw as f64;
            rr_filt += 1.0 / filt as f64;
            for (&k, count) in hits_raw.iter_mut() {
                *count += (raw <= k) as usize;
            }
            for (&k, count) in hits_filt.iter_mut() {
                *count += (filt <= k) as usize;
            }
        }
        let denom = n.max(1) as f64;
        let to_prop = |m: BTreeMap<usize, usize>| m.into_iter().map(|(k, c)| (k, c as f64 / denom)).collect();
        Self {
            mrr_raw: rr_raw / denom,
            mrr_filtered: rr_filt / denom,
            hits_raw: to_prop(hits_raw),
            hits_filtered: to_prop(hits_filt),
            n_queries: n,
        }
    }

    pub fn from_records<'a, I>(records: I, ks: &[usize]) -> Self
    where
        I: IntoIterator<Item = &'a RankRecord>,
    {
        Self::from_ranks(records.into_iter().map(|r| (r.raw_rank, r.filtered_rank)), ks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionTest {
    pub z: f64,
    pub significant_at_5pct: bool,
}

/// Two-sided one-sample z-test of an observed proportion against `p0`.
pub fn proportion_test(p_hat: f64, p0: f64, num: usize) -> Result<ProportionTest, CoreError> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(CoreError::DegenerateProportion(p0));
    }
    if num == 0 {
        return Err(CoreError::EmptyInput);
    }
    let z = (p_hat - p0) / libm::sqrt(p0 * (1.0 - p0) / num as f64);
    Ok(ProportionTest { z, significant_at_5pct: libm::fabs(z) > 1.96 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_max_ranks_first() {
        assert_eq!(rank_against(&[0.1, 5.0, 2.0], 1, |_| false), (1, 1));
    }

    #[test]
    fn ties_count_against_truth() {
        // scores [9, 7, 7, 3, 1], truth is the first 7
        assert_eq!(rank_against(&[9.0, 7.0, 7.0, 3.0, 1.0], 1, |_| false), (3, 3));
        assert_eq!(rank_against(&[9.0, 7.0, 6.0, 3.0, 1.0], 1, |_| false), (2, 2));
    }

    #[test]
    fn filter_drops_known_candidates() {
        let (raw, filt) = rank_against(&[9.0, 7.0, 3.0], 1, |c| c == 0);
        assert_eq!((raw, filt), (2, 1));
        // the truth itself is never filtered
        assert_eq!(rank_against(&[9.0, 7.0, 3.0], 1, |_| true), (2, 1));
    }

    #[test]
    fn report_hand_values() {
        let r = MetricReport::from_ranks([(1, 1), (2, 2), (4, 4)], &MetricReport::DEFAULT_KS);
        assert!((r.mrr_raw - 1.75 / 3.0).abs() < 1e-15);
        assert_eq!(r.hits_raw[&1], 1.0 / 3.0);
        assert_eq!(r.hits_raw[&3], 2.0 / 3.0);
        assert_eq!(r.hits_raw[&10], 1.0);
        assert_eq!(r.n_queries, 3);
    }

    #[test]
    fn perfect_ranks() {
        let r = MetricReport::from_ranks([(1, 1); 5], &[1, 3, 10]);
        assert_eq!(r.mrr_filtered, 1.0);
        assert!(r.hits_filtered.values().all(|v| *v == 1.0));
    }

    #[test]
    fn proportion_test_values() {
        let null = proportion_test(0.3, 0.3, 100).unwrap();
        assert_eq!(null.z, 0.0);
        assert!(!null.significant_at_5pct);
        let t = proportion_test(0.947, 0.94, 5000).unwrap();
        assert!((t.z - 2.0843).abs() < 1e-3, "{}", t.z);
        assert!(t.significant_at_5pct);
        let small = proportion_test(0.95, 0.94, 100).unwrap().z;
        let big = proportion_test(0.95, 0.94, 1_000_000).unwrap().z;
        assert!(big > 50.0 * small);
        assert!(proportion_test(0.5, 0.0, 10).is_err());
        assert!(proportion_test(0.5, 1.0, 10).is_err());
    }
}
