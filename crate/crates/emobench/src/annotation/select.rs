//! Extreme-score selection: the candidate set for the next annotation batch.

use std::collections::{BTreeMap, BTreeSet};

use crate::lexicon::SentimentScoreVector;
use crate::sentiments::{Emotion, LexiconCategory};

/// Per-document selection scores: either lexicon scores (iteration 0) or
/// classifier probabilities (later iterations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionScores {
    pub positive: f64,
    pub negative: f64,
    /// Indexed in [`Emotion::ALL`] order.
    pub emotions: [f64; 8],
}

impl From<&SentimentScoreVector> for SelectionScores {
    fn from(v: &SentimentScoreVector) -> SelectionScores {
        let mut emotions = [0.0; 8];
        for (i, e) in Emotion::ALL.iter().enumerate() {
            emotions[i] = v.score(LexiconCategory::Emotion(*e));
        }
        SelectionScores {
            positive: v.score(LexiconCategory::Positive),
            negative: v.score(LexiconCategory::Negative),
            emotions,
        }
    }
}

/// Result of one selection round.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    /// Deduplicated candidate ids, sorted.
    pub candidates: Vec<String>,
    /// Candidate multiset size before deduplication (2 * k * 9 when the pool
    /// is large enough).
    pub pre_dedup_count: usize,
    /// True when some ranking ran out of pool before reaching k.
    pub pool_exhausted: bool,
}

/// Select extreme-scored documents for annotation.
///
/// Two rankings per sentiment: polarity takes the top k by positive score
/// and the top k by negative score; each emotion takes its top k (highly
/// expressed) and bottom k (clearly not expressed). Already-labeled ids are
/// excluded, ties break on document id, and the deduplicated union is
/// returned. A pool smaller than a ranking's k returns everything available
/// and flags `pool_exhausted`.
pub fn select_for_annotation(
    scores: &BTreeMap<String, SelectionScores>,
    k: usize,
    already_labeled: &BTreeSet<String>,
) -> SelectionOutcome {
    let pool: Vec<(&String, &SelectionScores)> =
        scores.iter().filter(|(id, _)| !already_labeled.contains(*id)).collect();

    let mut chosen: BTreeSet<String> = BTreeSet::new();
    let mut pre_dedup = 0usize;
    let mut exhausted = false;

    let mut take = |key: &dyn Fn(&SelectionScores) -> f64, descending: bool| {
        let mut ranked: Vec<(&String, f64)> =
            pool.iter().map(|(id, s)| (*id, key(s))).collect();
        ranked.sort_by(|a, b| {
            let ord = a.1.partial_cmp(&b.1).expect("scores are finite");
            let ord = if descending { ord.reverse() } else { ord };
            ord.then_with(|| a.0.cmp(b.0))
        });
        if ranked.len() < k {
            exhausted = true;
        }
        for (id, _) in ranked.into_iter().take(k) {
            pre_dedup += 1;
            chosen.insert(id.clone());
        }
    };

    take(&|s: &SelectionScores| s.positive, true);
    take(&|s: &SelectionScores| s.negative, true);
    for i in 0..Emotion::ALL.len() {
        take(&|s: &SelectionScores| s.emotions[i], true);
        take(&|s: &SelectionScores| s.emotions[i], false);
    }

    SelectionOutcome {
        candidates: chosen.into_iter().collect(),
        pre_dedup_count: pre_dedup,
        pool_exhausted: exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scores(n: usize, seed: u64) -> BTreeMap<String, SelectionScores> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut emotions = [0.0; 8];
                for e in emotions.iter_mut() {
                    *e = rng.gen();
                }
                (
                    format!("doc{i:05}"),
                    SelectionScores { positive: rng.gen(), negative: rng.gen(), emotions },
                )
            })
            .collect()
    }

    #[test]
    fn pre_dedup_is_two_k_times_nine_on_a_large_pool() {
        let scores = random_scores(600, 1);
        let outcome = select_for_annotation(&scores, 75, &BTreeSet::new());
        assert_eq!(outcome.pre_dedup_count, 2 * 75 * 9);
        assert!(outcome.candidates.len() <= 1350);
        assert!(!outcome.pool_exhausted);
    }

    #[test]
    fn k_zero_selects_nothing() {
        let scores = random_scores(50, 2);
        let outcome = select_for_annotation(&scores, 0, &BTreeSet::new());
        assert!(outcome.candidates.is_empty());
        assert_eq!(outcome.pre_dedup_count, 0);
    }

    #[test]
    fn small_pool_returns_everything_with_warning() {
        let scores = random_scores(20, 3);
        let outcome = select_for_annotation(&scores, 75, &BTreeSet::new());
        assert_eq!(outcome.candidates.len(), 20);
        assert!(outcome.pool_exhausted);
    }

    #[test]
    fn already_labeled_ids_are_excluded() {
        let scores = random_scores(40, 4);
        let labeled: BTreeSet<String> =
            scores.keys().take(10).cloned().collect();
        let outcome = select_for_annotation(&scores, 75, &labeled);
        for id in &outcome.candidates {
            assert!(!labeled.contains(id));
        }
        assert_eq!(outcome.candidates.len(), 30);
    }

    #[test]
    fn selection_is_deterministic_under_ties() {
        let mut scores = random_scores(30, 5);
        // Force a large tie plateau.
        for s in scores.values_mut() {
            s.positive = 0.5;
        }
        let a = select_for_annotation(&scores, 5, &BTreeSet::new());
        let b = select_for_annotation(&scores, 5, &BTreeSet::new());
        assert_eq!(a.candidates, b.candidates);
        assert_eq!(a.pre_dedup_count, b.pre_dedup_count);
    }

    #[test]
    fn extremes_are_actually_selected() {
        let mut scores = random_scores(100, 6);
        scores.insert(
            "hot".into(),
            SelectionScores { positive: 10.0, negative: 0.0, emotions: [0.5; 8] },
        );
        scores.insert(
            "cold".into(),
            SelectionScores { positive: 0.0, negative: 10.0, emotions: [0.5; 8] },
        );
        let outcome = select_for_annotation(&scores, 3, &BTreeSet::new());
        assert!(outcome.candidates.iter().any(|c| c == "hot"));
        assert!(outcome.candidates.iter().any(|c| c == "cold"));
    }
}
