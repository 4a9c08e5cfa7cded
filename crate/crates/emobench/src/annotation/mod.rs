//! The iterative annotation pipeline: rating records, label coarsening,
//! reliability filtering, extreme-score selection, rater oracles, emotion
//! correlation, and the annotate-train-predict loop driver.

mod alpha;
mod correlation;
mod oracle;
mod runloop;
mod select;

pub use alpha::{filter_reliable, krippendorff_alpha, ReliabilityItem, ReliabilityReport};
pub use correlation::{emotion_correlation, CorrelationMatrix};
pub use oracle::{RaterOracle, RecordedOracle, SyntheticOracle};
pub use runloop::{
    emotion_label_space, polarity_label_space, resume_loop, run_loop, IterationRecord,
    LabeledItem, LoopConfig, LoopOutcome, LoopState,
};
pub use select::{select_for_annotation, SelectionOutcome, SelectionScores};

use std::path::Path;

use crate::error::{Error, Result};
use crate::sentiments::{CoarseLabel, Sentiment};

/// One rater's raw rating of one sentiment in one comment. Polarity uses the
/// symmetric 5-point scale -2..=+2, emotions the 3-point scale 0..=2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRecord {
    pub comment_id: String,
    pub rater_id: String,
    pub sentiment: Sentiment,
    pub raw_rating: i8,
}

impl RatingRecord {
    pub fn new(
        comment_id: impl Into<String>,
        rater_id: impl Into<String>,
        sentiment: Sentiment,
        raw_rating: i8,
    ) -> Result<RatingRecord> {
        if !sentiment.rating_in_scale(raw_rating) {
            return Err(Error::InvalidConfig(format!(
                "rating {raw_rating} outside the {sentiment} scale"
            )));
        }
        Ok(RatingRecord {
            comment_id: comment_id.into(),
            rater_id: rater_id.into(),
            sentiment,
            raw_rating,
        })
    }
}

/// Collapse a raw rating to the coarse scale used for agreement and
/// training: polarity {-2,-1} -> negative, {0} -> neutral, {+1,+2} ->
/// positive; emotions {1,2} -> expressed, {0} -> not expressed.
pub fn coarsen(record: &RatingRecord) -> CoarseLabel {
    match record.sentiment {
        Sentiment::Polarity => match record.raw_rating {
            i8::MIN..=-1 => CoarseLabel::Negative,
            0 => CoarseLabel::Neutral,
            _ => CoarseLabel::Positive,
        },
        Sentiment::Emotion(_) => {
            if record.raw_rating >= 1 {
                CoarseLabel::Expressed
            } else {
                CoarseLabel::NotExpressed
            }
        }
    }
}

/// Read rating records from CSV `comment_id,rater_id,sentiment,raw_rating`.
pub fn read_ratings_csv(path: &Path) -> Result<Vec<RatingRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 4 {
            return Err(Error::Parse {
                line: i + 2,
                message: "expected comment_id,rater_id,sentiment,raw_rating".into(),
            });
        }
        let sentiment = Sentiment::parse(&record[2])?;
        let raw: i8 = record[3].parse().map_err(|e| Error::Parse {
            line: i + 2,
            message: format!("bad rating: {e}"),
        })?;
        out.push(RatingRecord::new(&record[0], &record[1], sentiment, raw)?);
    }
    Ok(out)
}

pub fn write_ratings_csv(path: &Path, records: &[RatingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["comment_id", "rater_id", "sentiment", "raw_rating"])?;
    for r in records {
        w.write_record([
            r.comment_id.as_str(),
            r.rater_id.as_str(),
            r.sentiment.name(),
            &r.raw_rating.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentiments::Emotion;

    fn rec(sentiment: Sentiment, raw: i8) -> RatingRecord {
        RatingRecord::new("c1", "r1", sentiment, raw).unwrap()
    }

    #[test]
    fn polarity_coarsening() {
        assert_eq!(coarsen(&rec(Sentiment::Polarity, 2)), CoarseLabel::Positive);
        assert_eq!(coarsen(&rec(Sentiment::Polarity, 1)), CoarseLabel::Positive);
        assert_eq!(coarsen(&rec(Sentiment::Polarity, 0)), CoarseLabel::Neutral);
        assert_eq!(coarsen(&rec(Sentiment::Polarity, -1)), CoarseLabel::Negative);
        assert_eq!(coarsen(&rec(Sentiment::Polarity, -2)), CoarseLabel::Negative);
    }

    #[test]
    fn emotion_coarsening_and_pair_agreement() {
        let anger = Sentiment::Emotion(Emotion::Anger);
        // Ratings (2,1): both coarsen to expressed -> agreement (delta 0).
        let a = coarsen(&rec(anger, 2));
        let b = coarsen(&rec(anger, 1));
        assert_eq!(a, CoarseLabel::Expressed);
        assert_eq!(b, CoarseLabel::Expressed);
        assert_eq!(u8::from(a != b), 0);
        // Ratings (1,0): expressed vs not expressed -> disagreement (delta 1).
        let c = coarsen(&rec(anger, 0));
        assert_eq!(c, CoarseLabel::NotExpressed);
        assert_eq!(u8::from(b != c), 1);
    }

    #[test]
    fn out_of_scale_ratings_rejected() {
        assert!(RatingRecord::new("c", "r", Sentiment::Polarity, 3).is_err());
        assert!(RatingRecord::new("c", "r", Sentiment::Emotion(Emotion::Joy), -1).is_err());
        assert!(RatingRecord::new("c", "r", Sentiment::Emotion(Emotion::Joy), 3).is_err());
    }

    #[test]
    fn ratings_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ratings.csv");
        let records = vec![
            rec(Sentiment::Polarity, -2),
            rec(Sentiment::Emotion(Emotion::Fear), 1),
        ];
        write_ratings_csv(&path, &records).unwrap();
        let back = read_ratings_csv(&path).unwrap();
        assert_eq!(back, records);
    }
}
