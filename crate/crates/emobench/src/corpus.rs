//! Corpus ingestion: cleaning rules, deduplication, and deterministic splits.
//!
//! Cleaning applies three rules to every raw comment: link tokens are
//! removed, runs of three or more identical characters are collapsed to a
//! single occurrence, and whitespace is normalized to single spaces.
//! Comments with fewer than `min_words` words, or without a word in the
//! target script, are rejected (rejection is a normal outcome, not an
//! error). Splits are a pure function of `(seed, document ids)`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dataset split assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
    Unassigned,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

/// One cleaned text unit with source metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub section: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(default)]
    pub word_count: usize,
    /// Optional sentiment-name -> label-name map (consensus labels).
    #[serde(default, skip_serializing_if = "HashMap::is_empty")]
    pub labels: HashMap<String, String>,
    #[serde(default = "default_split")]
    pub split: Split,
}

fn default_split() -> Split {
    Split::Unassigned
}

/// Raw input record, one JSON object per line. `labels` is optional:
/// pre-labeled corpora (synthetic or exported) carry gold labels through
/// ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub section: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
    #[serde(default)]
    pub date: Option<String>,
    #[serde(default)]
    pub labels: HashMap<String, String>,
}

/// Why a raw comment was rejected during cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooShort,
    NoTargetScript,
}

/// Outcome of [`clean_comment`]: a cleaned string or a rejection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CleanOutcome {
    Cleaned(String),
    Rejected(RejectReason),
}

/// Character-class predicate deciding whether a comment is in the target
/// script. The default accepts a comment when at least one word has a
/// majority of its characters inside one of the configured ranges.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ScriptPredicate {
    /// Inclusive unicode code-point ranges; empty means "accept anything".
    pub ranges: Vec<(u32, u32)>,
}

impl ScriptPredicate {
    /// Accept all comments regardless of script.
    pub fn any() -> Self {
        ScriptPredicate { ranges: vec![] }
    }

    pub fn from_ranges(ranges: Vec<(u32, u32)>) -> Self {
        ScriptPredicate { ranges }
    }

    /// Named presets for common scripts, or an explicit `XXXX-YYYY` hex range.
    pub fn named(name: &str) -> Result<Self> {
        let ranges = match name {
            "any" => vec![],
            "latin" => vec![(0x41, 0x5A), (0x61, 0x7A)],
            "hebrew" => vec![(0x0590, 0x05FF)],
            "arabic" => vec![(0x0600, 0x06FF)],
            "cyrillic" => vec![(0x0400, 0x04FF)],
            "greek" => vec![(0x0370, 0x03FF)],
            spec => {
                let (a, b) = spec.split_once('-').ok_or_else(|| {
                    Error::InvalidConfig(format!("unknown script preset: {spec}"))
                })?;
                let lo = u32::from_str_radix(a, 16)
                    .map_err(|_| Error::InvalidConfig(format!("bad script range: {spec}")))?;
                let hi = u32::from_str_radix(b, 16)
                    .map_err(|_| Error::InvalidConfig(format!("bad script range: {spec}")))?;
                vec![(lo, hi)]
            }
        };
        Ok(ScriptPredicate { ranges })
    }

    fn char_in_range(&self, c: char) -> bool {
        let cp = c as u32;
        self.ranges.iter().any(|&(lo, hi)| cp >= lo && cp <= hi)
    }

    /// True when the text contains at least one word whose characters are
    /// majority in-range.
    pub fn accepts(&self, text: &str) -> bool {
        if self.ranges.is_empty() {
            return true;
        }
        words(text).any(|w| {
            let total = w.chars().count();
            let inside = w.chars().filter(|&c| self.char_in_range(c)).count();
            2 * inside > total
        })
    }
}

/// Whitespace-delimited tokens that contain at least one alphanumeric
/// character; punctuation-only runs do not count as words.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace().filter(|t| t.chars().any(|c| c.is_alphanumeric()))
}

/// Number of words in `text` under the counting rule above.
pub fn word_count(text: &str) -> usize {
    words(text).count()
}

fn is_link_token(tok: &str) -> bool {
    tok.starts_with("http://") || tok.starts_with("https://") || tok.starts_with("www.")
}

/// Collapse any run of three or more identical characters to one occurrence.
fn collapse_runs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run < 3 {
            out.push(c);
        } else if run == 3 {
            // Drop this and any further repeats, and also the previous copy:
            // a run of >=3 collapses to a single occurrence.
            out.pop();
        }
    }
    out
}

/// Apply the cleaning rules to one raw comment.
///
/// Rules, in order: whitespace is unified to single spaces, link tokens are
/// dropped, runs of three or more identical characters collapse to one, then
/// the word-count and script checks decide acceptance. Accepted output
/// contains no URL substrings, no character runs of length three or more,
/// and no double spaces; cleaning is idempotent on accepted output.
pub fn clean_comment(
    raw: &str,
    script_check: &ScriptPredicate,
    min_words: usize,
) -> CleanOutcome {
    let no_links: Vec<&str> =
        raw.split_whitespace().filter(|t| !is_link_token(t)).collect();
    let joined = no_links.join(" ");
    let collapsed = collapse_runs(&joined);
    // Collapsing runs can merge space runs; renormalize.
    let cleaned = collapsed.split_whitespace().collect::<Vec<_>>().join(" ");

    if word_count(&cleaned) < min_words {
        return CleanOutcome::Rejected(RejectReason::TooShort);
    }
    if !script_check.accepts(&cleaned) {
        return CleanOutcome::Rejected(RejectReason::NoTargetScript);
    }
    CleanOutcome::Cleaned(cleaned)
}

/// Ingestion counters. The identity `ingested == documents + rejected_short
/// + rejected_no_target_script + deduplicated` holds after every stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub ingested: usize,
    pub rejected_short: usize,
    pub rejected_no_target_script: usize,
    pub deduplicated: usize,
}

impl Provenance {
    pub fn consistent_with(&self, num_documents: usize) -> bool {
        self.ingested
            == num_documents
                + self.rejected_short
                + self.rejected_no_target_script
                + self.deduplicated
    }
}

/// An ordered collection of cleaned documents plus ingestion counters.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub provenance: Provenance,
}

/// Options for [`Corpus::ingest`].
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub script: ScriptPredicate,
    pub min_words: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { script: ScriptPredicate::any(), min_words: 3 }
    }
}

impl Corpus {
    /// Clean raw records into a corpus. Duplicate ids are a data defect and
    /// abort; duplicate texts survive until [`Corpus::dedup`].
    pub fn ingest(records: Vec<RawRecord>, opts: &IngestOptions) -> Result<Corpus> {
        let mut corpus = Corpus::default();
        let mut seen_ids = HashSet::new();
        for rec in records {
            corpus.provenance.ingested += 1;
            if !seen_ids.insert(rec.id.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate document id: {}", rec.id)));
            }
            match clean_comment(&rec.text, &opts.script, opts.min_words) {
                CleanOutcome::Rejected(RejectReason::TooShort) => {
                    corpus.provenance.rejected_short += 1;
                }
                CleanOutcome::Rejected(RejectReason::NoTargetScript) => {
                    corpus.provenance.rejected_no_target_script += 1;
                }
                CleanOutcome::Cleaned(text) => {
                    let wc = word_count(&text);
                    corpus.documents.push(Document {
                        id: rec.id,
                        source: rec.source,
                        section: rec.section,
                        title: rec.title,
                        text,
                        date: rec.date,
                        word_count: wc,
                        labels: rec.labels,
                        split: Split::Unassigned,
                    });
                }
            }
        }
        Ok(corpus)
    }

    /// Remove exact duplicate texts, keeping the first occurrence. Output
    /// order is the input order restricted to survivors.
    pub fn dedup(mut self) -> Corpus {
        let mut seen = HashSet::new();
        let before = self.documents.len();
        self.documents.retain(|d| seen.insert(d.text.clone()));
        self.provenance.deduplicated += before - self.documents.len();
        self
    }

    /// Assign every document to exactly one split, deterministically from
    /// `(seed, document ids)`.
    ///
    /// Documents are ordered by a seeded stable hash of their id, then cut by
    /// the fractions. Validation and test sizes are `round(fraction * n)` but
    /// at least 1 whenever their fraction is positive; the remainder goes to
    /// train.
    pub fn assign_splits(&mut self, fractions: (f64, f64, f64), seed: u64) -> Result<()> {
        let (f_train, f_val, f_test) = fractions;
        let sum = f_train + f_val + f_test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split fractions sum to {sum}, not 1.0")));
        }
        if f_train < 0.0 || f_val < 0.0 || f_test < 0.0 {
            return Err(Error::InvalidConfig("split fractions must be non-negative".into()));
        }
        let n = self.documents.len();
        if n < 3 {
            return Err(Error::InsufficientData(format!(
                "need at least 3 documents to split, have {n}"
            )));
        }
        let sized = |f: f64| -> usize {
            if f <= 0.0 {
                0
            } else {
                ((f * n as f64).round() as usize).max(1)
            }
        };
        let n_val = sized(f_val);
        let n_test = sized(f_test);
        if n_val + n_test >= n {
            return Err(Error::InsufficientData(format!(
                "validation+test sizes {n_val}+{n_test} leave no training documents out of {n}"
            )));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| {
            let d = &self.documents[i];
            (stable_hash(seed, &d.id), d.id.clone())
        });
        for (rank, &i) in order.iter().enumerate() {
            self.documents[i].split = if rank < n_val {
                Split::Validation
            } else if rank < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            };
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn by_split(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(move |d| d.split == split)
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// SHA-256 digest over the document texts, in order. Used to tag trained
    /// vocabularies with the corpus they were induced from.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for d in &self.documents {
            hasher.update(d.text.as_bytes());
            hasher.update([0u8]);
        }
        to_hex(&hasher.finalize())
    }

    /// Read raw records from JSONL (one object per line).
    pub fn read_raw_jsonl(path: &Path) -> Result<Vec<RawRecord>> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut out = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }

    /// Read a cleaned corpus back from JSONL written by [`Corpus::write_jsonl`].
    pub fn read_jsonl(path: &Path) -> Result<Corpus> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut documents = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            documents.push(doc);
        }
        Ok(Corpus { documents, provenance: Provenance::default() })
    }

    /// Write the corpus as JSONL, one document per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        for d in &self.documents {
            serde_json::to_writer(&mut file, d)?;
            file.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Seeded stable 64-bit hash: FNV-1a over the seed bytes then the key,
/// followed by a 64-bit mix finalizer. Plain FNV-1a leaves the high bits of
/// near-identical keys correlated, which breaks hash-ORDER uses like the
/// split shuffle; the finalizer restores avalanche. Stable across platforms
/// and Rust versions.
pub fn stable_hash(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in seed.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    for b in key.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51afd7ed558ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ceb9fe1a85ec53);
    h ^= h >> 33;
    h
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
