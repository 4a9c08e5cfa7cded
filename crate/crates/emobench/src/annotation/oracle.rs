//! Rater oracles: where annotations come from.
//!
//! Annotations arrive as files (recorded oracle) or from a synthetic rater
//! pool reading planted ground truth off the documents (with optional
//! seeded label-flip noise). The synthetic oracle is stateless per decision:
//! every rating is a pure function of (seed, comment, sentiment, rater), so
//! an interrupted loop resumes with identical annotations.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{stable_hash, Document};
use crate::error::{Error, Result};
use crate::sentiments::{CoarseLabel, Sentiment};

use super::RatingRecord;

/// Source of ratings for the annotation loop.
pub trait RaterOracle {
    /// Ratings from at least `min_raters` distinct raters for every listed
    /// sentiment of one comment.
    fn rate_comment(
        &mut self,
        doc: &Document,
        sentiments: &[Sentiment],
        min_raters: usize,
    ) -> Result<Vec<RatingRecord>>;
}

/// Replays rating records loaded from a file.
pub struct RecordedOracle {
    by_comment: BTreeMap<String, Vec<RatingRecord>>,
}

impl RecordedOracle {
    pub fn new(records: Vec<RatingRecord>) -> RecordedOracle {
        let mut by_comment: BTreeMap<String, Vec<RatingRecord>> = BTreeMap::new();
        for r in records {
            by_comment.entry(r.comment_id.clone()).or_default().push(r);
        }
        RecordedOracle { by_comment }
    }

    pub fn from_csv(path: &std::path::Path) -> Result<RecordedOracle> {
        Ok(RecordedOracle::new(super::read_ratings_csv(path)?))
    }
}

impl RaterOracle for RecordedOracle {
    fn rate_comment(
        &mut self,
        doc: &Document,
        sentiments: &[Sentiment],
        min_raters: usize,
    ) -> Result<Vec<RatingRecord>> {
        let records = self.by_comment.get(&doc.id).ok_or_else(|| {
            Error::OracleFailure(format!("no recorded ratings for comment {}", doc.id))
        })?;
        let mut out = Vec::new();
        for &sentiment in sentiments {
            let matching: Vec<RatingRecord> =
                records.iter().filter(|r| r.sentiment == sentiment).cloned().collect();
            if matching.len() < min_raters {
                return Err(Error::OracleFailure(format!(
                    "comment {} has {} recorded ratings for {sentiment}, need {min_raters}",
                    doc.id,
                    matching.len()
                )));
            }
            out.extend(matching);
        }
        Ok(out)
    }
}

/// Simulated rater pool over planted ground truth.
///
/// Each rater annotates at most `max_comments_per_rater` comments; a comment
/// is rated by `min_raters` consecutive raters from the active window. Each
/// rating flips to a different coarse label with probability `flip_prob`
/// and maps back to the raw scale with a seeded intensity choice.
pub struct SyntheticOracle {
    pub flip_prob: f64,
    pub seed: u64,
    pub max_comments_per_rater: usize,
    load: HashMap<usize, usize>,
    next_rater: usize,
}

impl SyntheticOracle {
    pub fn new(flip_prob: f64, seed: u64) -> SyntheticOracle {
        SyntheticOracle {
            flip_prob,
            seed,
            max_comments_per_rater: 20,
            load: HashMap::new(),
            next_rater: 0,
        }
    }

    fn truth(doc: &Document, sentiment: Sentiment) -> Result<CoarseLabel> {
        let name = sentiment.name();
        let value = doc.labels.get(name).ok_or_else(|| {
            Error::OracleFailure(format!("document {} has no planted {name} label", doc.id))
        })?;
        let label = CoarseLabel::parse(value)?;
        if !label.valid_for(sentiment) {
            return Err(Error::OracleFailure(format!(
                "planted label {value} invalid for {name}"
            )));
        }
        Ok(label)
    }

    /// `min_raters` distinct rater ids for one comment, respecting the
    /// per-rater comment budget.
    fn assign_raters(&mut self, min_raters: usize) -> Vec<String> {
        let mut raters = Vec::with_capacity(min_raters);
        let mut cursor = self.next_rater;
        while raters.len() < min_raters {
            let count = self.load.entry(cursor).or_insert(0);
            if *count < self.max_comments_per_rater {
                *count += 1;
                raters.push(format!("rater{cursor:04}"));
            }
            cursor += 1;
        }
        // Rotate the window start so load spreads across the pool.
        self.next_rater = if self.load.get(&self.next_rater).copied().unwrap_or(0)
            >= self.max_comments_per_rater
        {
            self.next_rater + 1
        } else {
            self.next_rater
        };
        raters
    }

    fn rate_one(
        &self,
        doc: &Document,
        sentiment: Sentiment,
        rater: &str,
    ) -> Result<RatingRecord> {
        let truth = Self::truth(doc, sentiment)?;
        let key = format!("{}|{}|{}", doc.id, sentiment.name(), rater);
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(self.seed, &key));

        let label = if rng.gen::<f64>() < self.flip_prob {
            let others: Vec<CoarseLabel> = match sentiment {
                Sentiment::Polarity => {
                    [CoarseLabel::Positive, CoarseLabel::Neutral, CoarseLabel::Negative]
                        .into_iter()
                        .filter(|l| *l != truth)
                        .collect()
                }
                Sentiment::Emotion(_) => {
                    [CoarseLabel::Expressed, CoarseLabel::NotExpressed]
                        .into_iter()
                        .filter(|l| *l != truth)
                        .collect()
                }
            };
            others[rng.gen_range(0..others.len())]
        } else {
            truth
        };

        // Map the coarse label to a raw intensity.
        let raw = match label {
            CoarseLabel::Positive => 1 + rng.gen_range(0..2),
            CoarseLabel::Negative => -1 - rng.gen_range(0..2),
            CoarseLabel::Neutral => 0,
            CoarseLabel::Expressed => 1 + rng.gen_range(0..2),
            CoarseLabel::NotExpressed => 0,
        };
        RatingRecord::new(&doc.id, rater, sentiment, raw)
    }
}

impl RaterOracle for SyntheticOracle {
    fn rate_comment(
        &mut self,
        doc: &Document,
        sentiments: &[Sentiment],
        min_raters: usize,
    ) -> Result<Vec<RatingRecord>> {
        let raters = self.assign_raters(min_raters);
        let mut out = Vec::with_capacity(sentiments.len() * raters.len());
        for &sentiment in sentiments {
            for rater in &raters {
                out.push(self.rate_one(doc, sentiment, rater)?);
            }
        }
        Ok(out)
    }
}
