//! Krippendorff's alpha for nominal data, and per-item reliability
//! filtering.
//!
//! Corpus-level alpha is `1 - D_o / D_e`: observed disagreement is the
//! fraction of disagreeing unordered rating pairs within items, expected
//! disagreement comes from the pooled label distribution (sampling without
//! replacement). Per-item reliability uses `1 - D_o(item) / D_e(pooled)`,
//! which aggregates back to the corpus value under pair-count weights.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sentiments::{CoarseLabel, Sentiment};

use super::{coarsen, RatingRecord};

fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

fn disagreeing_pairs(labels: &[CoarseLabel]) -> usize {
    let mut d = 0;
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] != labels[j] {
                d += 1;
            }
        }
    }
    d
}

/// Expected disagreement of the pooled label counts: the probability two
/// ratings drawn without replacement disagree.
fn expected_disagreement(pooled: &BTreeMap<CoarseLabel, usize>) -> f64 {
    let n: usize = pooled.values().sum();
    if n < 2 {
        return 0.0;
    }
    let same: usize = pooled.values().map(|&c| c * (c - 1)).sum();
    1.0 - same as f64 / (n * (n - 1)) as f64
}

/// Nominal-data alpha over items (each item is the multiset of coarse labels
/// it received). Items with fewer than two ratings are not rateable; if no
/// item is rateable this is an error. When expected disagreement is zero
/// (every pooled rating identical) alpha is 1 by convention.
pub fn krippendorff_alpha(items: &[Vec<CoarseLabel>]) -> Result<f64> {
    let rateable: Vec<&Vec<CoarseLabel>> = items.iter().filter(|i| i.len() >= 2).collect();
    if rateable.is_empty() {
        return Err(Error::NoPairs);
    }
    let mut pooled: BTreeMap<CoarseLabel, usize> = BTreeMap::new();
    let mut pairs = 0usize;
    let mut disagreements = 0usize;
    for item in &rateable {
        pairs += pair_count(item.len());
        disagreements += disagreeing_pairs(item);
        for &l in item.iter() {
            *pooled.entry(l).or_insert(0) += 1;
        }
    }
    let d_e = expected_disagreement(&pooled);
    if d_e == 0.0 {
        return Ok(1.0);
    }
    let d_o = disagreements as f64 / pairs as f64;
    Ok(1.0 - d_o / d_e)
}

/// Reliability outcome for one (comment, sentiment) item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityItem {
    pub comment_id: String,
    pub sentiment: Sentiment,
    pub rater_count: usize,
    /// Coarse label distribution among this item's ratings.
    pub label_counts: BTreeMap<CoarseLabel, usize>,
    /// Per-item alpha against the sentiment-wide pooled distribution; absent
    /// when the item is not rateable (single rating).
    pub alpha: Option<f64>,
    pub kept: bool,
    /// Majority coarse label, present iff kept.
    pub consensus: Option<CoarseLabel>,
}

/// All per-item outcomes plus the parameters that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub threshold: f64,
    pub min_raters: usize,
    pub items: Vec<ReliabilityItem>,
    /// Pooled expected disagreement per sentiment.
    pub expected_disagreement: BTreeMap<String, f64>,
}

impl ReliabilityReport {
    /// Consensus labels of the kept items.
    pub fn consensus_labels(&self) -> Vec<(String, Sentiment, CoarseLabel)> {
        self.items
            .iter()
            .filter(|i| i.kept)
            .map(|i| (i.comment_id.clone(), i.sentiment, i.consensus.expect("kept item")))
            .collect()
    }

    pub fn kept_count(&self) -> usize {
        self.items.iter().filter(|i| i.kept).count()
    }
}

/// Group records by (comment, sentiment), compute per-item alpha against the
/// sentiment-wide pooled distribution, and keep items at or above the
/// threshold with at least `min_raters` ratings and a unique majority label.
pub fn filter_reliable(
    records: &[RatingRecord],
    threshold: f64,
    min_raters: usize,
) -> Result<ReliabilityReport> {
    let mut groups: BTreeMap<(String, Sentiment), Vec<CoarseLabel>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.comment_id.clone(), r.sentiment))
            .or_default()
            .push(coarsen(r));
    }

    // Pooled distributions per sentiment over rateable items.
    let mut pooled: BTreeMap<Sentiment, BTreeMap<CoarseLabel, usize>> = BTreeMap::new();
    for ((_, sentiment), labels) in &groups {
        if labels.len() >= 2 {
            let slot = pooled.entry(*sentiment).or_default();
            for &l in labels {
                *slot.entry(l).or_insert(0) += 1;
            }
        }
    }
    let d_e: BTreeMap<Sentiment, f64> =
        pooled.iter().map(|(s, counts)| (*s, expected_disagreement(counts))).collect();

    let mut items = Vec::with_capacity(groups.len());
    for ((comment_id, sentiment), labels) in groups {
        let mut label_counts: BTreeMap<CoarseLabel, usize> = BTreeMap::new();
        for &l in &labels {
            *label_counts.entry(l).or_insert(0) += 1;
        }
        let alpha = if labels.len() >= 2 {
            let de = d_e.get(&sentiment).copied().unwrap_or(0.0);
            let d_o = disagreeing_pairs(&labels) as f64 / pair_count(labels.len()) as f64;
            Some(if de == 0.0 {
                // Zero expected disagreement means every pooled rating was
                // identical, so observed disagreement is zero too.
                1.0
            } else {
                1.0 - d_o / de
            })
        } else {
            None
        };
        // Unique majority label; ties drop the item.
        let max = label_counts.values().copied().max().unwrap_or(0);
        let majority: Vec<CoarseLabel> = label_counts
            .iter()
            .filter(|(_, &c)| c == max)
            .map(|(&l, _)| l)
            .collect();
        let consensus = (majority.len() == 1).then(|| majority[0]);
        let kept = labels.len() >= min_raters
            && alpha.map(|a| a >= threshold).unwrap_or(false)
            && consensus.is_some();
        items.push(ReliabilityItem {
            comment_id,
            sentiment,
            rater_count: labels.len(),
            label_counts,
            alpha,
            kept,
            consensus: if kept { consensus } else { None },
        });
    }

    Ok(ReliabilityReport {
        threshold,
        min_raters,
        items,
        expected_disagreement: d_e.iter().map(|(s, v)| (s.name().to_string(), *v)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentiments::Emotion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use CoarseLabel::{Expressed as E, NotExpressed as N};

    #[test]
    fn perfect_agreement_is_one() {
        let items = vec![vec![E, E, E], vec![N, N], vec![E, E]];
        assert_eq!(krippendorff_alpha(&items).unwrap(), 1.0);
    }

    #[test]
    fn alpha_is_one_iff_no_observed_disagreement() {
        let agree = vec![vec![E, E], vec![N, N, N]];
        assert_eq!(krippendorff_alpha(&agree).unwrap(), 1.0);
        let disagree = vec![vec![E, E], vec![E, N]];
        assert!(krippendorff_alpha(&disagree).unwrap() < 1.0);
    }

    #[test]
    fn two_item_fixture_matches_direct_formula() {
        // Items {A,A} and {A,B}; pooled counts A=3, B=1.
        // D_o = (0 + 1) / (1 + 1) = 0.5
        // D_e = 1 - (3*2 + 1*0) / (4*3) = 0.5
        // alpha = 1 - 0.5/0.5 = 0.
        let items = vec![vec![E, E], vec![E, N]];
        let direct = {
            let d_o = (0.0 + 1.0) / 2.0;
            let d_e = 1.0 - (3.0 * 2.0 + 0.0) / (4.0 * 3.0);
            1.0 - d_o / d_e
        };
        let alpha = krippendorff_alpha(&items).unwrap();
        assert!((alpha - direct).abs() < 1e-9);
        assert!((alpha - 0.0).abs() < 1e-9);
    }

    #[test]
    fn hand_computed_three_item_fixture() {
        // Items {A,A,B}, {A,A}, {B,B}; pooled A=4, B=3, n=7.
        // pairs = 3 + 1 + 1 = 5; disagreements = 2 + 0 + 0 = 2; D_o = 0.4.
        // D_e = 1 - (4*3 + 3*2)/(7*6) = 1 - 18/42 = 4/7.
        // alpha = 1 - 0.4/(4/7) = 1 - 0.7 = 0.3.
        let items = vec![vec![E, E, N], vec![E, E], vec![N, N]];
        let alpha = krippendorff_alpha(&items).unwrap();
        assert!((alpha - 0.3).abs() < 1e-9, "alpha {alpha}");
    }

    #[test]
    fn random_ratings_give_alpha_near_zero() {
        // 10^4 two-rating items with labels independent of items.
        let mut rng = ChaCha8Rng::seed_from_u64(271828);
        let labels = [E, N, CoarseLabel::Neutral];
        let items: Vec<Vec<CoarseLabel>> = (0..10_000)
            .map(|_| {
                vec![labels[rng.gen_range(0..3)], labels[rng.gen_range(0..3)]]
            })
            .collect();
        let alpha = krippendorff_alpha(&items).unwrap();
        assert!(alpha.abs() < 0.05, "alpha {alpha}");
    }

    #[test]
    fn single_rated_items_error() {
        let items = vec![vec![E], vec![N]];
        assert!(matches!(krippendorff_alpha(&items), Err(Error::NoPairs)));
    }

    #[test]
    fn corpus_alpha_equals_pair_weighted_item_alphas() {
        let records = fixture_records();
        let report = filter_reliable(&records, 0.75, 2).unwrap();
        // Reconstruct corpus alpha for anger from per-item alphas with
        // pair-count weights.
        let anger = Sentiment::Emotion(Emotion::Anger);
        let mut weighted = 0.0;
        let mut weight = 0.0;
        let mut items_for_alpha: Vec<Vec<CoarseLabel>> = Vec::new();
        for item in report.items.iter().filter(|i| i.sentiment == anger) {
            let labels: Vec<CoarseLabel> = item
                .label_counts
                .iter()
                .flat_map(|(&l, &c)| std::iter::repeat_n(l, c))
                .collect();
            if labels.len() >= 2 {
                let w = pair_count(labels.len()) as f64;
                weighted += item.alpha.unwrap() * w;
                weight += w;
                items_for_alpha.push(labels);
            }
        }
        let corpus = krippendorff_alpha(&items_for_alpha).unwrap();
        assert!((corpus - weighted / weight).abs() < 1e-9);
    }

    fn fixture_records() -> Vec<RatingRecord> {
        let anger = Sentiment::Emotion(Emotion::Anger);
        let mut out = Vec::new();
        let data = [
            ("c1", vec![2, 1, 2]), // unanimous expressed
            ("c2", vec![0, 0, 0]), // unanimous not expressed
            ("c3", vec![2, 1, 0]), // split 2-1
            ("c4", vec![0, 2, 0]), // split 1-2
        ];
        for (cid, ratings) in data {
            for (i, &r) in ratings.iter().enumerate() {
                out.push(RatingRecord::new(cid, format!("r{i}"), anger, r).unwrap());
            }
        }
        out
    }

    #[test]
    fn filter_keeps_unanimous_and_drops_split_items() {
        let records = fixture_records();
        let report = filter_reliable(&records, 0.75, 3).unwrap();
        let by_id: BTreeMap<&str, &ReliabilityItem> =
            report.items.iter().map(|i| (i.comment_id.as_str(), i)).collect();
        assert!(by_id["c1"].kept);
        assert_eq!(by_id["c1"].consensus, Some(E));
        assert!(by_id["c2"].kept);
        assert_eq!(by_id["c2"].consensus, Some(N));
        // Split 2-1 items: D_o(item) = 2/3. Pooled counts: E=6, N=6, n=12.
        // D_e = 1 - (30+30)/132 = 6/11. alpha = 1 - (2/3)/(6/11) = -2/9.
        assert!(!by_id["c3"].kept);
        let expect = 1.0 - (2.0 / 3.0) / (6.0 / 11.0);
        assert!((by_id["c3"].alpha.unwrap() - expect).abs() < 1e-9);
        assert!(!by_id["c4"].kept);
    }

    #[test]
    fn min_raters_drops_thin_items() {
        let anger = Sentiment::Emotion(Emotion::Anger);
        let records = vec![
            RatingRecord::new("c1", "r1", anger, 2).unwrap(),
            RatingRecord::new("c1", "r2", anger, 2).unwrap(),
            RatingRecord::new("c2", "r1", anger, 2).unwrap(),
            RatingRecord::new("c2", "r2", anger, 2).unwrap(),
            RatingRecord::new("c2", "r3", anger, 1).unwrap(),
        ];
        let report = filter_reliable(&records, 0.75, 3).unwrap();
        let by_id: BTreeMap<&str, &ReliabilityItem> =
            report.items.iter().map(|i| (i.comment_id.as_str(), i)).collect();
        assert!(!by_id["c1"].kept, "two raters < min_raters");
        assert!(by_id["c1"].alpha.is_some());
        assert!(by_id["c2"].kept);
    }

    #[test]
    fn raising_threshold_never_keeps_more() {
        let records = fixture_records();
        let low = filter_reliable(&records, 0.2, 2).unwrap();
        let high = filter_reliable(&records, 0.9, 2).unwrap();
        assert!(high.kept_count() <= low.kept_count());
        // Every item kept at the high threshold is kept at the low one.
        for (l, h) in low.items.iter().zip(high.items.iter()) {
            if h.kept {
                assert!(l.kept);
            }
        }
    }

    #[test]
    fn polarity_three_way_tie_is_dropped() {
        let records = vec![
            RatingRecord::new("c1", "r1", Sentiment::Polarity, -2).unwrap(),
            RatingRecord::new("c1", "r2", Sentiment::Polarity, 0).unwrap(),
            RatingRecord::new("c1", "r3", Sentiment::Polarity, 2).unwrap(),
            // A second item so the pooled distribution is not degenerate.
            RatingRecord::new("c2", "r1", Sentiment::Polarity, 2).unwrap(),
            RatingRecord::new("c2", "r2", Sentiment::Polarity, 1).unwrap(),
            RatingRecord::new("c2", "r3", Sentiment::Polarity, 2).unwrap(),
        ];
        let report = filter_reliable(&records, 0.0, 3).unwrap();
        let c1 = report.items.iter().find(|i| i.comment_id == "c1").unwrap();
        assert!(!c1.kept, "three-way tie has no consensus");
        let c2 = report.items.iter().find(|i| i.comment_id == "c2").unwrap();
        assert!(c2.kept);
        assert_eq!(c2.consensus, Some(CoarseLabel::Positive));
    }
}
