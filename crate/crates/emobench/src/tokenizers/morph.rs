//! Affix-rule morphological segmentation.
//!
//! A rule table of prefixes and suffixes stands in for a full morphological
//! parser: a word is split into at most one prefix, a stem, and at most one
//! suffix, longest affix first, and only while the stem keeps at least
//! `min_stem_length` characters. Prefix pieces carry a trailing continuation
//! marker (`"ha##"`), suffix pieces a leading one (`"##o"`), so piece
//! concatenation with markers stripped always reproduces the word.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

use super::{Scheme, TrainedVocab, Vocabulary, CONTINUATION_MARKER, SPECIALS};

/// Affix rule table: the pluggable stand-in for an external morphological
/// analyzer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MorphRuleTable {
    prefixes: Vec<String>,
    suffixes: Vec<String>,
    min_stem_length: usize,
}

impl MorphRuleTable {
    /// Build a table; affixes are deduplicated and ordered longest-first.
    pub fn new<S: Into<String>>(
        prefixes: Vec<S>,
        suffixes: Vec<S>,
        min_stem_length: usize,
    ) -> Result<MorphRuleTable> {
        if min_stem_length == 0 {
            return Err(Error::InvalidConfig("min_stem_length must be >= 1".into()));
        }
        let normalize = |v: Vec<S>| -> Result<Vec<String>> {
            let mut out: Vec<String> = Vec::new();
            for a in v {
                let a = a.into();
                if a.is_empty() {
                    return Err(Error::InvalidConfig("empty affix".into()));
                }
                if !out.contains(&a) {
                    out.push(a);
                }
            }
            out.sort_by(|a, b| {
                b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b))
            });
            Ok(out)
        };
        Ok(MorphRuleTable {
            prefixes: normalize(prefixes)?,
            suffixes: normalize(suffixes)?,
            min_stem_length,
        })
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn min_stem_length(&self) -> usize {
        self.min_stem_length
    }

    /// Load from TSV with columns `kind<TAB>affix`, kind in {prefix, suffix}.
    pub fn load(path: &Path, min_stem_length: usize) -> Result<MorphRuleTable> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut prefixes = Vec::new();
        let mut suffixes = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, affix) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: "expected kind<TAB>affix".into(),
            })?;
            match kind {
                "prefix" => prefixes.push(affix.to_string()),
                "suffix" => suffixes.push(affix.to_string()),
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("unknown affix kind: {other}"),
                    })
                }
            }
        }
        MorphRuleTable::new(prefixes, suffixes, min_stem_length)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for p in &self.prefixes {
            writeln!(f, "prefix\t{p}")?;
        }
        for s in &self.suffixes {
            writeln!(f, "suffix\t{s}")?;
        }
        Ok(())
    }
}

/// Split a word into at most prefix + stem + suffix.
///
/// The longest matching prefix is stripped first, then the longest matching
/// suffix, each only while the remaining stem keeps `min_stem_length`
/// characters. Markers: prefix pieces end with `##`, suffix pieces start
/// with `##`; concatenation with markers stripped equals the input.
pub fn morpheme_segment(word: &str, rules: &MorphRuleTable) -> Vec<String> {
    if word.is_empty() {
        return vec![];
    }
    let char_len = |s: &str| s.chars().count();
    let mut stem = word;
    let mut prefix: Option<&str> = None;
    let mut suffix: Option<&str> = None;

    for p in &rules.prefixes {
        if let Some(rest) = stem.strip_prefix(p.as_str()) {
            if char_len(rest) >= rules.min_stem_length {
                prefix = Some(p);
                stem = rest;
                break;
            }
        }
    }
    for s in &rules.suffixes {
        if let Some(rest) = stem.strip_suffix(s.as_str()) {
            if char_len(rest) >= rules.min_stem_length {
                suffix = Some(s);
                stem = rest;
                break;
            }
        }
    }

    let mut out = Vec::with_capacity(3);
    if let Some(p) = prefix {
        out.push(format!("{p}{CONTINUATION_MARKER}"));
    }
    out.push(stem.to_string());
    if let Some(s) = suffix {
        out.push(format!("{CONTINUATION_MARKER}{s}"));
    }
    out
}

/// Train a morpheme-based sub-word vocabulary: segment every word with the
/// rule table, then keep the most frequent segments within the size budget
/// left after the specials and the character fallback alphabet.
pub fn train_morpheme_vocab(
    corpus: &Corpus,
    rules: &MorphRuleTable,
    target_size: usize,
) -> Result<TrainedVocab> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    // Character fallback alphabet: plain for word-initial, marked otherwise.
    let mut plain: std::collections::BTreeSet<char> = Default::default();
    let mut marked: std::collections::BTreeSet<char> = Default::default();
    let mut seg_freq: HashMap<String, usize> = HashMap::new();
    let mut any_word = false;
    for doc in &corpus.documents {
        for word in doc.text.split_whitespace() {
            any_word = true;
            for (i, c) in word.chars().enumerate() {
                if i == 0 {
                    plain.insert(c);
                } else {
                    marked.insert(c);
                }
            }
            for seg in morpheme_segment(word, rules) {
                *seg_freq.entry(seg).or_insert(0) += 1;
            }
        }
    }
    if !any_word {
        return Err(Error::EmptyCorpus);
    }

    let mut alphabet: Vec<String> = plain.iter().map(|c| c.to_string()).collect();
    alphabet.extend(marked.iter().map(|c| format!("{CONTINUATION_MARKER}{c}")));
    let base_size = SPECIALS.len() + alphabet.len();
    if target_size < base_size {
        return Err(Error::InvalidConfig(format!(
            "target_size {target_size} below fallback alphabet+specials size {base_size}"
        )));
    }

    let budget = target_size - base_size;
    let mut segments: Vec<(String, usize)> = seg_freq
        .into_iter()
        .filter(|(s, _)| !alphabet.contains(s))
        .collect();
    segments.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let target_reached = segments.len() >= budget;
    segments.truncate(budget);

    let mut tokens = alphabet;
    tokens.extend(segments.into_iter().map(|(s, _)| s));
    let vocabulary = Vocabulary::from_tokens(Scheme::SubwordMorpheme, tokens, corpus.digest())?
        .with_rules(rules.clone());
    Ok(TrainedVocab { vocabulary, target_reached })
}

#[cfg(test)]
mod tests {
    use crate::test_util::corpus_from_texts;
    use super::*;

    fn rules(prefixes: &[&str], suffixes: &[&str]) -> MorphRuleTable {
        MorphRuleTable::new(prefixes.to_vec(), suffixes.to_vec(), 2).unwrap()
    }

    #[test]
    fn strips_suffix_with_leading_marker() {
        let r = rules(&[], &["o"]);
        assert_eq!(morpheme_segment("gamalo", &r), vec!["gamal", "##o"]);
    }

    #[test]
    fn strips_prefix_and_suffix_with_markers() {
        let r = rules(&["ha"], &["o"]);
        assert_eq!(morpheme_segment("hagamalo", &r), vec!["ha##", "gamal", "##o"]);
    }

    #[test]
    fn short_words_come_back_whole() {
        let r = rules(&["ha"], &["o"]);
        assert_eq!(morpheme_segment("ho", &r), vec!["ho"]);
        assert_eq!(morpheme_segment("o", &r), vec!["o"]);
    }

    #[test]
    fn longest_affix_wins() {
        let r = rules(&[], &["im", "i"]);
        assert_eq!(morpheme_segment("gamalim", &r), vec!["gamal", "##im"]);
    }

    #[test]
    fn concatenation_reproduces_word() {
        let r = rules(&["ha", "ve"], &["o", "im", "ot"]);
        for word in ["hagamalim", "vegamalo", "xy", "hax", "gamal", "hahaot"] {
            let segs = morpheme_segment(word, &r);
            let joined: String =
                segs.iter().map(|s| s.trim_matches('#')).collect();
            assert_eq!(joined, word);
        }
    }

    #[test]
    fn morpheme_vocab_dominated_by_stems_and_suffix() {
        // Every word is stem + "o": the suffix piece and the stems carry the
        // frequency mass.
        let texts: Vec<String> = (0..20)
            .map(|i| format!("stem{i}o stem{i}o othero", i = i % 5))
            .collect();
        let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
        let corpus = corpus_from_texts(&refs);
        let r = rules(&[], &["o"]);
        let trained = train_morpheme_vocab(&corpus, &r, 200).unwrap();
        let vocab = trained.vocabulary;
        assert!(vocab.id_of("##o").is_some());
        assert!(vocab.id_of("stem0").is_some());
        assert!(vocab.id_of("other").is_some());
    }

    #[test]
    fn empty_rule_table_gives_whole_word_segments() {
        let corpus = corpus_from_texts(&["alpha beta", "alpha gamma"]);
        let r = MorphRuleTable::default();
        let trained = train_morpheme_vocab(&corpus, &r, 200).unwrap();
        let vocab = trained.vocabulary;
        assert!(vocab.id_of("alpha").is_some());
        assert!(vocab.id_of("beta").is_some());
        let ids = vocab.encode("alpha beta");
        assert_eq!(vocab.decode(&ids), "alpha beta");
    }

    #[test]
    fn small_budget_drops_rare_segments() {
        let corpus = corpus_from_texts(&["aa aa aa bb bb cc"]);
        let r = MorphRuleTable::default();
        // Base: specials + plain {a,b,c} + marked {##a,##b,##c} = 11.
        let trained = train_morpheme_vocab(&corpus, &r, 13).unwrap();
        let vocab = trained.vocabulary;
        assert!(vocab.id_of("aa").is_some());
        assert!(vocab.id_of("bb").is_some());
        assert!(vocab.id_of("cc").is_none(), "lowest-frequency segment dropped");
    }

    #[test]
    fn oov_word_falls_back_to_characters() {
        let corpus = corpus_from_texts(&["gamalo gamalim", "parao paraim"]);
        let r = rules(&[], &["o", "im"]);
        let trained = train_morpheme_vocab(&corpus, &r, 60).unwrap();
        let vocab = trained.vocabulary;
        // "gariomo" segments to ["gariom", "##o"]; "gariom" is unseen, so the
        // whole word re-encodes as characters and still round-trips.
        let ids = vocab.encode("gariomo gamalo");
        assert!(!ids.contains(&vocab.unk_id()));
        assert_eq!(vocab.decode(&ids), "gariomo gamalo");
    }

    #[test]
    fn rule_table_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        let r = rules(&["ha", "ve"], &["o", "im"]);
        r.save(&path).unwrap();
        let loaded = MorphRuleTable::load(&path, 2).unwrap();
        assert_eq!(loaded, r);
    }
}
