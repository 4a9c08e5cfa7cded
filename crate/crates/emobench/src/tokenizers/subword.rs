//! Greedy likelihood-gain sub-word induction.
//!
//! Starting from the character alphabet (word-initial characters plain,
//! word-internal characters marked), the trainer repeatedly merges the
//! adjacent unit pair with the highest score
//! `count(ab) / (count(a) * count(b))` until the vocabulary reaches the
//! target size or no pair occurs at least [`MIN_PAIR_FREQUENCY`] times.
//! Score ties break on first occurrence order in the corpus, which keeps
//! training a pure function of the corpus.

use std::collections::HashMap;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

use super::{Scheme, TrainedVocab, Vocabulary, CONTINUATION_MARKER, SPECIALS};

/// A merge is only eligible when the pair occurs at least this often.
pub const MIN_PAIR_FREQUENCY: usize = 2;

/// Word types with counts, in first-seen corpus order.
fn word_counts(corpus: &Corpus) -> Vec<(Vec<String>, usize)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<(Vec<String>, usize)> = Vec::new();
    for doc in &corpus.documents {
        for word in doc.text.split_whitespace() {
            match index.get(word) {
                Some(&i) => out[i].1 += 1,
                None => {
                    index.insert(word, out.len());
                    let units: Vec<String> = word
                        .chars()
                        .enumerate()
                        .map(|(i, c)| {
                            if i == 0 {
                                c.to_string()
                            } else {
                                format!("{CONTINUATION_MARKER}{c}")
                            }
                        })
                        .collect();
                    out.push((units, 1));
                }
            }
        }
    }
    out
}

/// Train an n-gram sub-word vocabulary of at most `target_size` tokens.
///
/// `target_reached` is false when the corpus cannot support the requested
/// size (no remaining pair occurs often enough).
pub fn train_subword_vocab(corpus: &Corpus, target_size: usize) -> Result<TrainedVocab> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut words = word_counts(corpus);
    if words.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    // Alphabet in first-seen order, deduplicated.
    let mut alphabet: Vec<String> = Vec::new();
    {
        let mut seen: HashMap<&String, ()> = HashMap::new();
        for (units, _) in &words {
            for u in units {
                if !seen.contains_key(u) {
                    alphabet.push(u.clone());
                    seen.insert(u, ());
                }
            }
        }
    }
    alphabet.sort_unstable();
    let base_size = SPECIALS.len() + alphabet.len();
    if target_size < base_size {
        return Err(Error::InvalidConfig(format!(
            "target_size {target_size} below alphabet+specials size {base_size}"
        )));
    }

    let mut merged_tokens: Vec<String> = Vec::new();
    // Persistent first-seen ranks so tie-breaks are stable across rounds.
    let mut pair_rank: HashMap<(String, String), usize> = HashMap::new();
    let mut next_rank = 0usize;

    while base_size + merged_tokens.len() < target_size {
        let mut unit_count: HashMap<&String, usize> = HashMap::new();
        let mut pair_count: HashMap<(&String, &String), usize> = HashMap::new();
        for (units, count) in &words {
            for u in units {
                *unit_count.entry(u).or_insert(0) += count;
            }
            for pair in units.windows(2) {
                *pair_count.entry((&pair[0], &pair[1])).or_insert(0) += count;
                let key = (pair[0].clone(), pair[1].clone());
                pair_rank.entry(key).or_insert_with(|| {
                    next_rank += 1;
                    next_rank - 1
                });
            }
        }

        let mut best: Option<((&String, &String), f64, usize)> = None;
        for (&(a, b), &count) in &pair_count {
            if count < MIN_PAIR_FREQUENCY {
                continue;
            }
            let score =
                count as f64 / (unit_count[a] as f64 * unit_count[b] as f64);
            let rank = pair_rank[&(a.clone(), b.clone())];
            let better = match &best {
                None => true,
                Some((_, s, r)) => score > *s || (score == *s && rank < *r),
            };
            if better {
                best = Some(((a, b), score, rank));
            }
        }

        let Some(((a, b), _, _)) = best else { break };
        let (a, b) = (a.clone(), b.clone());
        let merged = format!(
            "{}{}",
            a,
            b.strip_prefix(CONTINUATION_MARKER).unwrap_or(&b)
        );
        merged_tokens.push(merged.clone());

        for (units, _) in &mut words {
            let mut i = 0;
            while i + 1 < units.len() {
                if units[i] == a && units[i + 1] == b {
                    units[i] = merged.clone();
                    units.remove(i + 1);
                } else {
                    i += 1;
                }
            }
        }
    }

    let target_reached = base_size + merged_tokens.len() == target_size;
    let mut tokens = alphabet;
    tokens.extend(merged_tokens);
    let vocabulary = Vocabulary::from_tokens(Scheme::SubwordNgram, tokens, corpus.digest())?;
    Ok(TrainedVocab { vocabulary, target_reached })
}
