//! Shared sentiment, emotion, and label inventories.
//!
//! The annotation pipeline works over nine sentiments (polarity plus eight
//! basic emotions); the lexicon uses ten categories (the eight emotions plus
//! the positive and negative polarity flags).

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// The eight basic emotions, arranged as four opposing pairs:
/// joy-sadness, anger-fear, trust-disgust, surprise-anticipation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emotion {
    Anger,
    Disgust,
    Anticipation,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Trust,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Anticipation,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Trust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Anticipation => "anticipation",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Trust => "trust",
        }
    }

    pub fn parse(s: &str) -> Option<Emotion> {
        Emotion::ALL.iter().copied().find(|e| e.name() == s)
    }

    /// The opposing emotion on the wheel.
    pub fn opposite(self) -> Emotion {
        match self {
            Emotion::Joy => Emotion::Sadness,
            Emotion::Sadness => Emotion::Joy,
            Emotion::Anger => Emotion::Fear,
            Emotion::Fear => Emotion::Anger,
            Emotion::Trust => Emotion::Disgust,
            Emotion::Disgust => Emotion::Trust,
            Emotion::Surprise => Emotion::Anticipation,
            Emotion::Anticipation => Emotion::Surprise,
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// One of the nine annotated sentiments: 3-way polarity or a binary emotion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Polarity,
    Emotion(Emotion),
}

impl Sentiment {
    /// Polarity followed by the eight emotions, in a fixed order.
    pub fn all() -> [Sentiment; 9] {
        let mut out = [Sentiment::Polarity; 9];
        for (i, e) in Emotion::ALL.iter().enumerate() {
            out[i + 1] = Sentiment::Emotion(*e);
        }
        out
    }

    pub fn name(self) -> &'static str {
        match self {
            Sentiment::Polarity => "polarity",
            Sentiment::Emotion(e) => e.name(),
        }
    }

    pub fn parse(s: &str) -> Result<Sentiment> {
        if s == "polarity" {
            return Ok(Sentiment::Polarity);
        }
        Emotion::parse(s)
            .map(Sentiment::Emotion)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown sentiment: {s}")))
    }

    /// Validate a raw rating against this sentiment's scale:
    /// polarity uses the symmetric 5-point scale -2..=+2, emotions the
    /// 3-point scale 0..=2.
    pub fn rating_in_scale(self, raw: i8) -> bool {
        match self {
            Sentiment::Polarity => (-2..=2).contains(&raw),
            Sentiment::Emotion(_) => (0..=2).contains(&raw),
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Lexicon category: eight emotions plus the two polarity flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconCategory {
    Emotion(Emotion),
    Positive,
    Negative,
}

impl LexiconCategory {
    pub fn all() -> [LexiconCategory; 10] {
        let mut out = [LexiconCategory::Positive; 10];
        for (i, e) in Emotion::ALL.iter().enumerate() {
            out[i] = LexiconCategory::Emotion(*e);
        }
        out[8] = LexiconCategory::Positive;
        out[9] = LexiconCategory::Negative;
        out
    }

    pub fn name(self) -> &'static str {
        match self {
            LexiconCategory::Emotion(e) => e.name(),
            LexiconCategory::Positive => "positive",
            LexiconCategory::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Result<LexiconCategory> {
        match s {
            "positive" => Ok(LexiconCategory::Positive),
            "negative" => Ok(LexiconCategory::Negative),
            other => Emotion::parse(other)
                .map(LexiconCategory::Emotion)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown lexicon category: {other}"))),
        }
    }

    /// Index into a 10-slot score vector (emotions 0..8, positive 8, negative 9).
    pub fn index(self) -> usize {
        match self {
            LexiconCategory::Emotion(e) => {
                Emotion::ALL.iter().position(|x| *x == e).expect("emotion in ALL")
            }
            LexiconCategory::Positive => 8,
            LexiconCategory::Negative => 9,
        }
    }
}

impl fmt::Display for LexiconCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Coarsened label: the 5-point polarity scale collapses to 3 classes, the
/// 3-point emotion scale to 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseLabel {
    Positive,
    Neutral,
    Negative,
    Expressed,
    NotExpressed,
}

impl CoarseLabel {
    pub fn name(self) -> &'static str {
        match self {
            CoarseLabel::Positive => "positive",
            CoarseLabel::Neutral => "neutral",
            CoarseLabel::Negative => "negative",
            CoarseLabel::Expressed => "expressed",
            CoarseLabel::NotExpressed => "not_expressed",
        }
    }

    pub fn parse(s: &str) -> Result<CoarseLabel> {
        match s {
            "positive" => Ok(CoarseLabel::Positive),
            "neutral" => Ok(CoarseLabel::Neutral),
            "negative" => Ok(CoarseLabel::Negative),
            "expressed" => Ok(CoarseLabel::Expressed),
            "not_expressed" => Ok(CoarseLabel::NotExpressed),
            other => Err(Error::InvalidConfig(format!("unknown label: {other}"))),
        }
    }

    /// Whether this label belongs to the sentiment's label space.
    pub fn valid_for(self, sentiment: Sentiment) -> bool {
        match sentiment {
            Sentiment::Polarity => matches!(
                self,
                CoarseLabel::Positive | CoarseLabel::Neutral | CoarseLabel::Negative
            ),
            Sentiment::Emotion(_) => {
                matches!(self, CoarseLabel::Expressed | CoarseLabel::NotExpressed)
            }
        }
    }

    /// Numeric encoding used for correlation analysis: emotions as 0/1,
    /// polarity as -1/0/+1.
    pub fn numeric(self) -> f64 {
        match self {
            CoarseLabel::Positive => 1.0,
            CoarseLabel::Neutral => 0.0,
            CoarseLabel::Negative => -1.0,
            CoarseLabel::Expressed => 1.0,
            CoarseLabel::NotExpressed => 0.0,
        }
    }
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}
