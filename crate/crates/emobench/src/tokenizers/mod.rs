//! Five vocabulary schemes over one encode/decode surface.
//!
//! - `char`: one token per distinct character (optionally with word-internal
//!   marked variants).
//! - `subword_ngram`: greedy likelihood-gain merges from the character
//!   alphabet (see [`subword`]), at any target size.
//! - `subword_morpheme`: affix-rule segmentation with a character fallback
//!   alphabet (see [`morph`]).
//! - `word`: whole words above a term-frequency quantile; everything else
//!   maps to `[UNK]`.
//!
//! Encoding is deterministic: sub-word schemes use per-word greedy
//! longest-match-first with character fallback, so `[UNK]` appears only for
//! unseen characters. `decode(encode(x))` reproduces whitespace-normalized
//! `x` whenever every character of `x` is in the alphabet.

pub mod morph;
pub mod subword;

pub use morph::{morpheme_segment, train_morpheme_vocab, MorphRuleTable};
pub use subword::train_subword_vocab;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

/// The five special tokens, in id order 0..5.
pub const SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

/// Default continuation marker for non-initial sub-word pieces.
pub const CONTINUATION_MARKER: &str = "##";

/// Tokenization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Char,
    SubwordNgram,
    SubwordMorpheme,
    Word,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Char => "char",
            Scheme::SubwordNgram => "subword_ngram",
            Scheme::SubwordMorpheme => "subword_morpheme",
            Scheme::Word => "word",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        match s {
            "char" => Ok(Scheme::Char),
            "subword_ngram" | "subword" => Ok(Scheme::SubwordNgram),
            "subword_morpheme" | "morpheme" => Ok(Scheme::SubwordMorpheme),
            "word" => Ok(Scheme::Word),
            other => Err(Error::InvalidConfig(format!("unknown scheme: {other}"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Ids of the five special tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialIds {
    pub pad: u32,
    pub unk: u32,
    pub cls: u32,
    pub sep: u32,
    pub mask: u32,
}

/// An induced token inventory with encode/decode state.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub scheme: Scheme,
    tokens: Vec<String>,
    token_to_id: HashMap<String, u32>,
    pub continuation_marker: String,
    /// Digest of the training corpus, recorded in the vocabulary file header.
    pub corpus_digest: String,
    specials: SpecialIds,
    /// Affix rules for the morpheme scheme; deterministic whole-word
    /// segmentation is used when absent.
    pub morph_rules: Option<MorphRuleTable>,
}

/// Result of training a size-targeted vocabulary. `target_reached` is false
/// when the corpus could not support the requested size.
#[derive(Debug, Clone)]
pub struct TrainedVocab {
    pub vocabulary: Vocabulary,
    pub target_reached: bool,
}

impl Vocabulary {
    /// Build a vocabulary from non-special tokens (specials are prepended).
    pub(crate) fn from_tokens(
        scheme: Scheme,
        non_special: Vec<String>,
        corpus_digest: String,
    ) -> Result<Vocabulary> {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(non_special);
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::InvalidConfig("empty token in vocabulary".into()));
            }
            if token_to_id.insert(t.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate token in vocabulary: {t:?}")));
            }
        }
        let id = |s: &str| token_to_id[s];
        let specials =
            SpecialIds { pad: id(PAD), unk: id(UNK), cls: id(CLS), sep: id(SEP), mask: id(MASK) };
        Ok(Vocabulary {
            scheme,
            tokens,
            token_to_id,
            continuation_marker: CONTINUATION_MARKER.to_string(),
            corpus_digest,
            specials,
            morph_rules: None,
        })
    }

    pub fn with_rules(mut self, rules: MorphRuleTable) -> Vocabulary {
        self.morph_rules = Some(rules);
        self
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token_of(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    pub fn specials(&self) -> SpecialIds {
        self.specials
    }

    pub fn pad_id(&self) -> u32 {
        self.specials.pad
    }
    pub fn unk_id(&self) -> u32 {
        self.specials.unk
    }
    pub fn cls_id(&self) -> u32 {
        self.specials.cls
    }
    pub fn sep_id(&self) -> u32 {
        self.specials.sep
    }
    pub fn mask_id(&self) -> u32 {
        self.specials.mask
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.specials.pad
            || id == self.specials.unk
            || id == self.specials.cls
            || id == self.specials.sep
            || id == self.specials.mask
    }

    /// Characters representable by this vocabulary: every character of every
    /// non-special token, markers stripped.
    pub fn char_coverage(&self) -> BTreeSet<char> {
        let mut set = BTreeSet::new();
        let marker = self.continuation_marker.as_str();
        for (i, tok) in self.tokens.iter().enumerate() {
            if self.is_special(i as u32) {
                continue;
            }
            let mut core = tok.as_str();
            if let Some(s) = core.strip_prefix(marker) {
                core = s;
            }
            if let Some(s) = core.strip_suffix(marker) {
                if !s.is_empty() {
                    core = s;
                }
            }
            set.extend(core.chars());
        }
        set
    }

    /// Whether the char scheme was trained with word-internal marked variants.
    fn char_marked_mode(&self) -> bool {
        self.scheme == Scheme::Char
            && self.tokens.iter().any(|t| t.starts_with(&self.continuation_marker))
    }

    /// Encode text into token ids.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        match self.scheme {
            Scheme::Char => {
                if self.char_marked_mode() {
                    let mut out = Vec::new();
                    for word in text.split_whitespace() {
                        self.encode_word_chars(word, &mut out);
                    }
                    out
                } else {
                    text.chars()
                        .map(|c| self.id_of(&c.to_string()).unwrap_or(self.specials.unk))
                        .collect()
                }
            }
            Scheme::Word => text
                .split_whitespace()
                .map(|w| self.id_of(w).unwrap_or(self.specials.unk))
                .collect(),
            Scheme::SubwordNgram => {
                let mut out = Vec::new();
                for word in text.split_whitespace() {
                    self.encode_word_greedy(word, &mut out);
                }
                out
            }
            Scheme::SubwordMorpheme => {
                let empty = MorphRuleTable::default();
                let rules = self.morph_rules.as_ref().unwrap_or(&empty);
                let mut out = Vec::new();
                for word in text.split_whitespace() {
                    let segments = morpheme_segment(word, rules);
                    let ids: Option<Vec<u32>> =
                        segments.iter().map(|s| self.id_of(s)).collect();
                    match ids {
                        Some(mut ids) => out.append(&mut ids),
                        // A word with any out-of-vocabulary segment falls
                        // back to character pieces for the whole word.
                        None => self.encode_word_chars(word, &mut out),
                    }
                }
                out
            }
        }
    }

    /// Greedy longest-match-first over one word, character fallback built in
    /// (a single marked/unmarked character is the shortest match; `[UNK]`
    /// appears only when even the character is unseen).
    fn encode_word_greedy(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        let marker = &self.continuation_marker;
        let mut pos = 0;
        while pos < chars.len() {
            let mut matched = None;
            for end in (pos + 1..=chars.len()).rev() {
                let core: String = chars[pos..end].iter().collect();
                let candidate =
                    if pos == 0 { core } else { format!("{marker}{core}") };
                if let Some(id) = self.id_of(&candidate) {
                    matched = Some((id, end));
                    break;
                }
            }
            match matched {
                Some((id, end)) => {
                    out.push(id);
                    pos = end;
                }
                None => {
                    out.push(self.specials.unk);
                    pos += 1;
                }
            }
        }
    }

    /// One piece per character: first plain, the rest marked.
    fn encode_word_chars(&self, word: &str, out: &mut Vec<u32>) {
        let marker = &self.continuation_marker;
        for (i, c) in word.chars().enumerate() {
            let candidate =
                if i == 0 { c.to_string() } else { format!("{marker}{c}") };
            out.push(self.id_of(&candidate).unwrap_or(self.specials.unk));
        }
    }

    /// Decode ids back to text. `[PAD]`, `[CLS]`, `[SEP]`, and `[MASK]` are
    /// skipped; `[UNK]` renders literally.
    pub fn decode(&self, ids: &[u32]) -> String {
        let marker = self.continuation_marker.as_str();
        match self.scheme {
            Scheme::Char if !self.char_marked_mode() => ids
                .iter()
                .filter_map(|&id| {
                    if id == self.specials.pad
                        || id == self.specials.cls
                        || id == self.specials.sep
                        || id == self.specials.mask
                    {
                        None
                    } else {
                        self.token_of(id)
                    }
                })
                .collect(),
            Scheme::Word => {
                let mut parts = Vec::new();
                for &id in ids {
                    if id == self.specials.pad
                        || id == self.specials.cls
                        || id == self.specials.sep
                        || id == self.specials.mask
                    {
                        continue;
                    }
                    if let Some(tok) = self.token_of(id) {
                        parts.push(tok);
                    }
                }
                parts.join(" ")
            }
            _ => {
                // Marker-joined pieces: a leading marker joins to the
                // previous piece, a trailing marker joins to the next one.
                let mut out = String::new();
                let mut join_next = false;
                for &id in ids {
                    if id == self.specials.pad
                        || id == self.specials.cls
                        || id == self.specials.sep
                        || id == self.specials.mask
                    {
                        continue;
                    }
                    let Some(tok) = self.token_of(id) else { continue };
                    let (joins_prev, rest) = match tok.strip_prefix(marker) {
                        Some(r) => (true, r),
                        None => (false, tok),
                    };
                    let (joins_next, core) = match rest.strip_suffix(marker) {
                        Some(r) if !r.is_empty() => (true, r),
                        _ => (false, rest),
                    };
                    if !out.is_empty() && !joins_prev && !join_next {
                        out.push(' ');
                    }
                    out.push_str(core);
                    join_next = joins_next;
                }
                out
            }
        }
    }

    /// Write the vocabulary file: header comments, then one token per line
    /// (line number = id).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# scheme: {}", self.scheme)?;
        writeln!(f, "# size: {}", self.size())?;
        writeln!(f, "# marker: {}", self.continuation_marker)?;
        writeln!(f, "# corpus_digest: {}", self.corpus_digest)?;
        for t in &self.tokens {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }

    /// Load a vocabulary file written by [`Vocabulary::save`]. Lines are
    /// taken verbatim (tokens may be whitespace, e.g. the space character).
    pub fn load(path: &Path) -> Result<Vocabulary> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut scheme = None;
        let mut marker = CONTINUATION_MARKER.to_string();
        let mut digest = String::new();
        let mut declared_size = None;
        let mut tokens: Vec<String> = Vec::new();
        let mut in_header = true;
        for (lineno, line) in reader.split(b'\n').enumerate() {
            let mut bytes = line?;
            if bytes.last() == Some(&b'\r') {
                bytes.pop();
            }
            let line = String::from_utf8(bytes).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            if in_header && line.starts_with("# ") {
                if let Some((key, value)) = line[2..].split_once(": ") {
                    match key {
                        "scheme" => scheme = Some(Scheme::parse(value)?),
                        "marker" => marker = value.to_string(),
                        "corpus_digest" => digest = value.to_string(),
                        "size" => {
                            declared_size =
                                Some(value.parse::<usize>().map_err(|e| Error::Parse {
                                    line: lineno + 1,
                                    message: e.to_string(),
                                })?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            in_header = false;
            tokens.push(line);
        }
        // A trailing newline yields one empty final entry; drop it.
        if tokens.last().is_some_and(|t| t.is_empty()) {
            tokens.pop();
        }
        let scheme = scheme
            .ok_or_else(|| Error::Checkpoint("vocabulary file missing scheme header".into()))?;
        if let Some(size) = declared_size {
            if size != tokens.len() {
                return Err(Error::Checkpoint(format!(
                    "vocabulary declares {size} tokens but contains {}",
                    tokens.len()
                )));
            }
        }
        if tokens.len() < SPECIALS.len()
            || SPECIALS.iter().zip(tokens.iter()).any(|(s, t)| s != t)
        {
            return Err(Error::Checkpoint(
                "vocabulary file must start with the five special tokens".into(),
            ));
        }
        let non_special = tokens[SPECIALS.len()..].to_vec();
        let mut vocab = Vocabulary::from_tokens(scheme, non_special, digest)?;
        vocab.continuation_marker = marker;
        Ok(vocab)
    }
}

/// Whitespace tokens of a document text (the unit of the word scheme and of
/// OOV measurement).
fn word_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

/// Train a character vocabulary: every distinct character of the corpus text
/// becomes a token. With `marked_variants`, word-internal occurrences get an
/// additional marked token.
pub fn train_char_vocab(corpus: &Corpus, marked_variants: bool) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut plain: BTreeSet<char> = BTreeSet::new();
    let mut marked: BTreeSet<char> = BTreeSet::new();
    for doc in &corpus.documents {
        if marked_variants {
            for word in doc.text.split_whitespace() {
                for (i, c) in word.chars().enumerate() {
                    if i == 0 {
                        plain.insert(c);
                    } else {
                        marked.insert(c);
                    }
                }
            }
        } else {
            plain.extend(doc.text.chars());
        }
    }
    let mut tokens: Vec<String> = plain.iter().map(|c| c.to_string()).collect();
    tokens.extend(marked.iter().map(|c| format!("{CONTINUATION_MARKER}{c}")));
    Vocabulary::from_tokens(Scheme::Char, tokens, corpus.digest())
}

/// Train a word vocabulary, trimming terms at or below the `trim_quantile`
/// term-frequency threshold (nearest-rank quantile over type frequencies).
/// A quantile of 0 keeps every distinct word.
pub fn train_word_vocab(corpus: &Corpus, trim_quantile: f64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(0.0..1.0).contains(&trim_quantile) {
        return Err(Error::InvalidConfig(format!(
            "trim_quantile must be in [0,1), got {trim_quantile}"
        )));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for doc in &corpus.documents {
        for w in word_tokens(&doc.text) {
            *freq.entry(w).or_insert(0) += 1;
        }
    }
    if freq.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let kept: Vec<(&str, usize)> = if trim_quantile == 0.0 {
        freq.iter().map(|(w, c)| (*w, *c)).collect()
    } else {
        let mut sorted: Vec<usize> = freq.values().copied().collect();
        sorted.sort_unstable();
        let rank = ((trim_quantile * sorted.len() as f64).ceil() as usize).max(1) - 1;
        let threshold = sorted[rank];
        freq.iter().filter(|(_, c)| **c > threshold).map(|(w, c)| (*w, *c)).collect()
    };
    let mut kept = kept;
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens: Vec<String> = kept.into_iter().map(|(w, _)| w.to_string()).collect();
    Vocabulary::from_tokens(Scheme::Word, tokens, corpus.digest())
}

/// Fraction of word tokens in `test` the vocabulary cannot represent.
///
/// For the word scheme this is the fraction of tokens mapping to `[UNK]`;
/// for character-based schemes it is the fraction of words containing at
/// least one unseen character (the only true OOV source there).
pub fn oov_rate(vocab: &Vocabulary, test: &Corpus) -> Result<f64> {
    let mut total = 0usize;
    let mut oov = 0usize;
    match vocab.scheme {
        Scheme::Word => {
            for doc in &test.documents {
                for w in word_tokens(&doc.text) {
                    total += 1;
                    if vocab.id_of(w).is_none() {
                        oov += 1;
                    }
                }
            }
        }
        _ => {
            let coverage = vocab.char_coverage();
            for doc in &test.documents {
                for w in word_tokens(&doc.text) {
                    total += 1;
                    if w.chars().any(|c| !coverage.contains(&c)) {
                        oov += 1;
                    }
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(oov as f64 / total as f64)
}
