//! Word-list sentiment scoring: lexicon ingestion, pluggable lemmatization,
//! and unsupervised per-document category scores.
//!
//! Scores are count-based and token-normalized so documents of different
//! lengths are comparable, which the extreme-score selection step relies on.
//! Negation, intensifiers, and multi-word expressions are deliberately not
//! handled; this is the naive unsupervised stage of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::sentiments::LexiconCategory;
use crate::tokenizers::MorphRuleTable;

/// Term -> category-flag map. Terms are lowercased lemma forms; every entry
/// carries at least one flag.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, BTreeSet<LexiconCategory>>,
}

/// Warnings accumulated while loading a lexicon file.
#[derive(Debug, Clone, Default)]
pub struct LexiconWarnings {
    /// Number of duplicate (term, category) rows resolved last-wins.
    pub duplicate_rows: usize,
}

impl SentimentLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn flags(&self, term: &str) -> Option<&BTreeSet<LexiconCategory>> {
        self.entries.get(term)
    }

    pub fn insert(&mut self, term: &str, category: LexiconCategory) {
        self.entries.entry(term.to_lowercase()).or_default().insert(category);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&String, &BTreeSet<LexiconCategory>)> {
        self.entries.iter()
    }

    /// Load from TSV rows `term<TAB>category<TAB>flag` with flag in {0, 1}.
    ///
    /// Duplicate (term, category) rows resolve last-wins with a warning;
    /// terms whose flags are all zero are dropped. Malformed rows abort with
    /// their line number.
    pub fn load(path: &Path) -> Result<(SentimentLexicon, LexiconWarnings)> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut flags: BTreeMap<(String, LexiconCategory), bool> = BTreeMap::new();
        let mut warnings = LexiconWarnings::default();
        let mut bad_lines: Vec<usize> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let parsed = (|| -> Option<(String, LexiconCategory, bool)> {
                let term = parts.next()?.trim().to_lowercase();
                if term.is_empty() {
                    return None;
                }
                let category = LexiconCategory::parse(parts.next()?.trim()).ok()?;
                let flag = match parts.next()?.trim() {
                    "0" => false,
                    "1" => true,
                    _ => return None,
                };
                Some((term, category, flag))
            })();
            match parsed {
                Some((term, category, flag)) => {
                    if flags.insert((term, category), flag).is_some() {
                        warnings.duplicate_rows += 1;
                    }
                }
                None => bad_lines.push(lineno + 1),
            }
        }
        if !bad_lines.is_empty() {
            let list =
                bad_lines.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ");
            return Err(Error::Parse {
                line: bad_lines[0],
                message: format!("malformed lexicon rows at lines {list}"),
            });
        }
        let mut lexicon = SentimentLexicon::default();
        for ((term, category), flag) in flags {
            if flag {
                lexicon.entries.entry(term).or_default().insert(category);
            }
        }
        Ok((lexicon, warnings))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for (term, cats) in &self.entries {
            for c in cats {
                writeln!(f, "{term}\t{c}\t1")?;
            }
        }
        Ok(())
    }
}

/// Pluggable token-to-lemma reduction.
pub trait Lemmatizer {
    fn lemma(&self, token: &str) -> String;
}

/// Identity lemmatizer: every token is its own lemma.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityLemmatizer;

impl Lemmatizer for IdentityLemmatizer {
    fn lemma(&self, token: &str) -> String {
        token.to_string()
    }
}

/// Default rule lemmatizer: strips rule-table suffixes repeatedly (longest
/// first, stem kept at or above the table's minimum length) until no suffix
/// matches. Running to the fixed point makes lemmatization idempotent for
/// every input.
#[derive(Debug, Clone)]
pub struct RuleLemmatizer {
    rules: MorphRuleTable,
}

impl RuleLemmatizer {
    pub fn new(rules: MorphRuleTable) -> Self {
        RuleLemmatizer { rules }
    }
}

impl Lemmatizer for RuleLemmatizer {
    fn lemma(&self, token: &str) -> String {
        let min = self.rules.min_stem_length();
        let mut stem = token;
        'outer: loop {
            for s in self.rules.suffixes() {
                if let Some(rest) = stem.strip_suffix(s.as_str()) {
                    if rest.chars().count() >= min {
                        stem = rest;
                        continue 'outer;
                    }
                }
            }
            break;
        }
        stem.to_string()
    }
}

/// Per-document category scores: eight emotions plus positive and negative,
/// each normalized by token count into [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentScoreVector {
    scores: [f64; 10],
    pub token_count: usize,
}

impl SentimentScoreVector {
    pub fn score(&self, category: LexiconCategory) -> f64 {
        self.scores[category.index()]
    }

    pub fn scores(&self) -> &[f64; 10] {
        &self.scores
    }

    /// Signed polarity scalar: positive score minus negative score.
    pub fn polarity(&self) -> f64 {
        self.score(LexiconCategory::Positive) - self.score(LexiconCategory::Negative)
    }
}

/// Score one cleaned document against the lexicon.
///
/// Each whitespace token is lowercased and lemmatized; for every category
/// flagged on the lemma's lexicon entry, the category count increments. The
/// final score per category is count / token_count.
pub fn score_document(
    doc: &Document,
    lexicon: &SentimentLexicon,
    lemmatizer: &dyn Lemmatizer,
) -> Result<SentimentScoreVector> {
    let tokens: Vec<&str> = doc.text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::InsufficientData(format!("document {} has no tokens", doc.id)));
    }
    let mut counts = [0usize; 10];
    for tok in &tokens {
        let lemma = lemmatizer.lemma(&tok.to_lowercase());
        if let Some(flags) = lexicon.flags(&lemma) {
            for c in flags {
                counts[c.index()] += 1;
            }
        }
    }
    let n = tokens.len() as f64;
    let mut scores = [0.0f64; 10];
    for (s, c) in scores.iter_mut().zip(counts.iter()) {
        *s = *c as f64 / n;
    }
    Ok(SentimentScoreVector { scores, token_count: tokens.len() })
}
