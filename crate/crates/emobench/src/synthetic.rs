//! Deterministic synthetic corpora with known ground truth.
//!
//! These generators play the oracle role in tests and examples: the
//! inflection corpus knows exactly which word forms were held out, the
//! tagging language derives every tag from a word suffix, and the planted
//! sentiment corpus carries its true labels on each document.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};

use crate::corpus::{Corpus, Document, Split};
use crate::lexicon::SentimentLexicon;
use crate::sentiments::{CoarseLabel, Emotion, LexiconCategory, Sentiment};
use crate::tasks::{TaggedSentence, TokenTaggingDataset};

const CONSONANTS: [char; 10] = ['b', 'd', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's'];
const VOWELS: [char; 4] = ['a', 'e', 'i', 'u'];

/// Affixes of the synthetic inflected language.
pub const PREFIXES: [&str; 3] = ["ha", "ve", "be"];
pub const SUFFIXES: [&str; 5] = ["o", "im", "ot", "a", "enu"];

fn make_stem(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    let mut s = String::new();
    for _ in 0..syllables {
        s.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())]);
        s.push(VOWELS[rng.gen_range(0..VOWELS.len())]);
    }
    s
}

fn distinct_stems(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    let mut seen = BTreeSet::new();
    while out.len() < n {
        let syllables = 2 + rng.gen_range(0..2);
        let stem = make_stem(rng, syllables);
        if seen.insert(stem.clone()) {
            out.push(stem);
        }
    }
    out
}

fn inflect(prefix: Option<&str>, stem: &str, suffix: Option<&str>) -> String {
    format!("{}{}{}", prefix.unwrap_or(""), stem, suffix.unwrap_or(""))
}

fn doc(id: String, text: String) -> Document {
    Document {
        id,
        source: "synthetic".into(),
        section: String::new(),
        title: String::new(),
        word_count: crate::corpus::word_count(&text),
        text,
        date: None,
        labels: HashMap::new(),
        split: Split::Unassigned,
    }
}

/// Configuration for [`inflection_corpus`].
#[derive(Debug, Clone)]
pub struct InflectionConfig {
    pub num_stems: usize,
    pub train_sentences: usize,
    pub heldout_sentences: usize,
    pub words_per_sentence: usize,
    /// Fraction of held-out word slots filled with inflections never seen in
    /// training (same stems and affixes, unseen combinations).
    pub unseen_fraction: f64,
    pub seed: u64,
}

impl Default for InflectionConfig {
    fn default() -> Self {
        InflectionConfig {
            num_stems: 50,
            train_sentences: 300,
            heldout_sentences: 60,
            words_per_sentence: 8,
            unseen_fraction: 0.4,
            seed: 1,
        }
    }
}

/// A stems-by-affixes corpus with held-out inflected forms.
pub struct InflectionCorpus {
    pub train: Corpus,
    pub heldout: Corpus,
    pub rules: crate::tokenizers::MorphRuleTable,
    /// Exact fraction of held-out word tokens that are unseen-as-words.
    pub heldout_unseen_token_fraction: f64,
}

/// Generate the stems-by-inflections corpus.
///
/// Every stem is seen both bare and prefixed in training, and every affix is
/// used, so character coverage (and hence sub-word coverage) of the held-out
/// text is complete; only whole-word identity is new.
pub fn inflection_corpus(cfg: &InflectionConfig) -> InflectionCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stems = distinct_stems(&mut rng, cfg.num_stems);

    let prefixes: Vec<Option<&str>> =
        std::iter::once(None).chain(PREFIXES.iter().map(|p| Some(*p))).collect();
    let suffixes: Vec<Option<&str>> =
        std::iter::once(None).chain(SUFFIXES.iter().map(|s| Some(*s))).collect();

    // Seen combinations per stem. Force the coverage anchors first.
    let mut seen: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); stems.len()];
    for set in seen.iter_mut() {
        set.insert((0, 0)); // bare stem
        set.insert((1, 1)); // "ha" + stem + "o"
    }
    for ai in 0..prefixes.len() {
        seen[0].insert((ai, 0));
    }
    for si in 0..suffixes.len() {
        seen[0].insert((0, si));
    }
    for (i, set) in seen.iter_mut().enumerate() {
        let extra = 3 + (i % 4);
        for _ in 0..extra {
            set.insert((rng.gen_range(0..prefixes.len()), rng.gen_range(0..suffixes.len())));
        }
    }

    // Zipf-ish stem weights keep term frequencies non-uniform.
    let pick_stem = |rng: &mut ChaCha8Rng| -> usize {
        let r: f64 = rng.gen();
        let n = stems.len() as f64;
        ((n * (r * r)) as usize).min(stems.len() - 1)
    };

    let mut train_docs = Vec::with_capacity(cfg.train_sentences);
    let mut train_surface: BTreeSet<String> = BTreeSet::new();

    // Anchor sentences guarantee positional character coverage: every stem
    // appears bare and prefixed, and every affix appears at least once.
    let mut anchors: Vec<String> = Vec::new();
    for stem in &stems {
        anchors.push(stem.clone());
        anchors.push(inflect(Some(PREFIXES[0]), stem, Some(SUFFIXES[0])));
    }
    for p in &PREFIXES {
        anchors.push(inflect(Some(p), &stems[0], None));
    }
    for s in &SUFFIXES {
        anchors.push(inflect(None, &stems[0], Some(s)));
    }
    for (i, chunk) in anchors.chunks(cfg.words_per_sentence.max(1)).enumerate() {
        train_surface.extend(chunk.iter().cloned());
        train_docs.push(doc(format!("anchor{i:03}"), chunk.join(" ")));
    }

    for i in 0..cfg.train_sentences {
        let mut words = Vec::with_capacity(cfg.words_per_sentence);
        for _ in 0..cfg.words_per_sentence {
            let s = pick_stem(&mut rng);
            let combos: Vec<&(usize, usize)> = seen[s].iter().collect();
            let &&(p, q) = combos.get(rng.gen_range(0..combos.len())).unwrap();
            let word = inflect(prefixes[p], &stems[s], suffixes[q]);
            train_surface.insert(word.clone());
            words.push(word);
        }
        train_docs.push(doc(format!("train{i:04}"), words.join(" ")));
    }

    // Different stems can collide on the same surface form, so novelty is
    // decided against the actual train surface set, not the combination ids.
    let mut heldout_docs = Vec::with_capacity(cfg.heldout_sentences);
    let mut unseen_tokens = 0usize;
    let mut total_tokens = 0usize;
    for i in 0..cfg.heldout_sentences {
        let mut words = Vec::with_capacity(cfg.words_per_sentence);
        for _ in 0..cfg.words_per_sentence {
            total_tokens += 1;
            let s = pick_stem(&mut rng);
            let mut word = None;
            if rng.gen::<f64>() < cfg.unseen_fraction {
                let mut candidates = Vec::new();
                for (p, prefix) in prefixes.iter().enumerate() {
                    for (q, suffix) in suffixes.iter().enumerate() {
                        if !seen[s].contains(&(p, q)) {
                            let w = inflect(*prefix, &stems[s], *suffix);
                            if !train_surface.contains(&w) {
                                candidates.push(w);
                            }
                        }
                    }
                }
                if !candidates.is_empty() {
                    word = Some(candidates[rng.gen_range(0..candidates.len())].clone());
                }
            }
            let word = word.unwrap_or_else(|| {
                let combos: Vec<&(usize, usize)> = seen[s].iter().collect();
                let &&(p, q) = combos.get(rng.gen_range(0..combos.len())).unwrap();
                inflect(prefixes[p], &stems[s], suffixes[q])
            });
            if !train_surface.contains(&word) {
                unseen_tokens += 1;
            }
            words.push(word);
        }
        heldout_docs.push(doc(format!("held{i:04}"), words.join(" ")));
    }

    let rules = crate::tokenizers::MorphRuleTable::new(
        PREFIXES.iter().map(|s| s.to_string()).collect(),
        SUFFIXES.iter().map(|s| s.to_string()).collect(),
        2,
    )
    .expect("valid rule table");

    InflectionCorpus {
        train: Corpus { documents: train_docs, provenance: Default::default() },
        heldout: Corpus { documents: heldout_docs, provenance: Default::default() },
        rules,
        heldout_unseen_token_fraction: unseen_tokens as f64 / total_tokens.max(1) as f64,
    }
}

/// A corpus of `n_sentences` sentences whose words are all globally unique,
/// so any unmasked context word identifies the sentence and the masked token
/// is fully determined. The memorization oracle for fill-in-the-blank
/// training.
pub fn memorization_corpus(n_sentences: usize, words_per_sentence: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = distinct_stems(&mut rng, n_sentences * words_per_sentence);
    let documents = (0..n_sentences)
        .map(|i| {
            let start = i * words_per_sentence;
            let text = words[start..start + words_per_sentence].join(" ");
            doc(format!("mem{i:03}"), text)
        })
        .collect();
    words.clear();
    Corpus { documents, provenance: Default::default() }
}

/// Suffix-driven tagging language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaggingKind {
    /// BIO entity spans: `esh`-suffixed words begin an entity, `eshi` words
    /// continue it, everything else is `O`.
    Ner,
    /// Three-way word classes from the final vowel.
    Pos,
}

/// Generate a dataset whose tag is a pure function of the word suffix: the
/// generator itself is the evaluation oracle.
pub fn tagging_dataset(kind: TaggingKind, n_sentences: usize, seed: u64) -> TokenTaggingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stems = distinct_stems(&mut rng, 40);
    let mut sentences = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let len = 5 + rng.gen_range(0..4);
        let mut tokens = Vec::with_capacity(len);
        let mut tags = Vec::with_capacity(len);
        match kind {
            TaggingKind::Pos => {
                for _ in 0..len {
                    let stem = &stems[rng.gen_range(0..stems.len())];
                    let (suffix, tag) = match rng.gen_range(0..3) {
                        0 => ("an", "N"),
                        1 => ("et", "V"),
                        _ => ("ul", "ADJ"),
                    };
                    tokens.push(format!("{stem}{suffix}"));
                    tags.push(tag.to_string());
                }
            }
            TaggingKind::Ner => {
                let mut i = 0;
                while i < len {
                    let stem = &stems[rng.gen_range(0..stems.len())];
                    if rng.gen::<f64>() < 0.25 && i + 1 < len {
                        tokens.push(format!("{stem}esh"));
                        tags.push("B-ENT".to_string());
                        i += 1;
                        let span = rng.gen_range(0..2);
                        for _ in 0..span {
                            if i >= len {
                                break;
                            }
                            let stem = &stems[rng.gen_range(0..stems.len())];
                            tokens.push(format!("{stem}eshi"));
                            tags.push("I-ENT".to_string());
                            i += 1;
                        }
                    } else {
                        tokens.push(format!("{stem}an"));
                        tags.push("O".to_string());
                        i += 1;
                    }
                }
            }
        }
        sentences.push(TaggedSentence { tokens, tags });
    }
    TokenTaggingDataset::new(sentences).expect("aligned by construction")
}

/// Configuration for [`planted_sentiment_corpus`].
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub num_docs: usize,
    pub words_per_doc: usize,
    pub filler_vocab: usize,
    /// Probability a document is polarity-neutral (the rest split evenly
    /// positive/negative).
    pub neutral_fraction: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            num_docs: 400,
            words_per_doc: 10,
            filler_vocab: 120,
            neutral_fraction: 0.2,
            seed: 2,
        }
    }
}

/// A corpus with separable sentiment signal words and true labels attached
/// to each document, plus the matching signal lexicon.
///
/// Positive/negative documents carry two polarity signal words; each
/// expressed emotion plants two of its own signal words. The returned
/// lexicon flags exactly those signal words, so lexicon scoring recovers the
/// planted structure and a classifier has a learnable separable signal.
pub fn planted_sentiment_corpus(cfg: &PlantedConfig) -> (Corpus, SentimentLexicon) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Signal words: three per category, disjoint from filler words.
    let mut all_words = distinct_stems(&mut rng, cfg.filler_vocab + 30);
    let mut lexicon = SentimentLexicon::default();
    let mut signal: HashMap<LexiconCategory, Vec<String>> = HashMap::new();
    for (i, cat) in LexiconCategory::all().iter().enumerate() {
        let words: Vec<String> = all_words[i * 3..(i + 1) * 3].to_vec();
        for w in &words {
            lexicon.insert(w, *cat);
        }
        signal.insert(*cat, words);
    }
    let filler: Vec<String> = all_words.split_off(30);

    let mut documents = Vec::with_capacity(cfg.num_docs);
    for i in 0..cfg.num_docs {
        let mut labels = HashMap::new();
        let mut words: Vec<String> = Vec::with_capacity(cfg.words_per_doc);

        let r: f64 = rng.gen();
        let polarity = if r < cfg.neutral_fraction {
            CoarseLabel::Neutral
        } else if r < cfg.neutral_fraction + (1.0 - cfg.neutral_fraction) / 2.0 {
            CoarseLabel::Positive
        } else {
            CoarseLabel::Negative
        };
        labels.insert("polarity".to_string(), polarity.name().to_string());
        let polarity_cat = match polarity {
            CoarseLabel::Positive => Some(LexiconCategory::Positive),
            CoarseLabel::Negative => Some(LexiconCategory::Negative),
            _ => None,
        };
        if let Some(cat) = polarity_cat {
            for _ in 0..2 {
                let opts = &signal[&cat];
                words.push(opts[rng.gen_range(0..opts.len())].clone());
            }
        }

        for e in Emotion::ALL {
            let expressed = rng.gen::<f64>() < 0.5;
            labels.insert(
                e.name().to_string(),
                if expressed { "expressed" } else { "not_expressed" }.to_string(),
            );
            if expressed {
                let opts = &signal[&LexiconCategory::Emotion(e)];
                for _ in 0..2 {
                    words.push(opts[rng.gen_range(0..opts.len())].clone());
                }
            }
        }

        while words.len() < cfg.words_per_doc.max(words.len()) {
            words.push(filler[rng.gen_range(0..filler.len())].clone());
        }
        words.shuffle(&mut rng);
        let mut d = doc(format!("doc{i:05}"), words.join(" "));
        d.labels = labels;
        documents.push(d);
    }

    (Corpus { documents, provenance: Default::default() }, lexicon)
}

/// A labeled pool with opposing emotion pairs anti-aligned: for each item
/// one side of every pair is expressed and the other suppressed, flipped
/// with probability `1 - compliance`.
pub fn opposing_pairs_pool(
    n_items: usize,
    compliance: f64,
    seed: u64,
) -> Vec<(String, Sentiment, CoarseLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = [
        (Emotion::Joy, Emotion::Sadness),
        (Emotion::Anger, Emotion::Fear),
        (Emotion::Trust, Emotion::Disgust),
        (Emotion::Surprise, Emotion::Anticipation),
    ];
    let mut out = Vec::new();
    for i in 0..n_items {
        let id = format!("item{i:05}");
        let mut joy_side = false;
        for (a, b) in pairs {
            let latent = rng.gen::<bool>();
            if a == Emotion::Joy {
                joy_side = latent;
            }
            let la = if rng.gen::<f64>() < compliance { latent } else { !latent };
            let lb = if rng.gen::<f64>() < compliance { !latent } else { latent };
            let as_label = |v: bool| if v { CoarseLabel::Expressed } else { CoarseLabel::NotExpressed };
            out.push((id.clone(), Sentiment::Emotion(a), as_label(la)));
            out.push((id.clone(), Sentiment::Emotion(b), as_label(lb)));
        }
        let pol = if rng.gen::<f64>() < compliance { joy_side } else { !joy_side };
        out.push((
            id,
            Sentiment::Polarity,
            if pol { CoarseLabel::Positive } else { CoarseLabel::Negative },
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizers::{oov_rate, train_char_vocab, train_subword_vocab, train_word_vocab};

    #[test]
    fn inflection_corpus_is_deterministic() {
        let cfg = InflectionConfig::default();
        let a = inflection_corpus(&cfg);
        let b = inflection_corpus(&cfg);
        assert_eq!(a.train.documents.len(), b.train.documents.len());
        for (x, y) in a.train.documents.iter().zip(b.train.documents.iter()) {
            assert_eq!(x.text, y.text);
        }
    }

    #[test]
    fn heldout_has_substantial_unseen_word_forms_but_full_char_coverage() {
        let cfg = InflectionConfig::default();
        let gen = inflection_corpus(&cfg);
        assert!(
            gen.heldout_unseen_token_fraction >= 0.3,
            "unseen fraction {}",
            gen.heldout_unseen_token_fraction
        );
        let word_vocab = train_word_vocab(&gen.train, 0.0).unwrap();
        let word_oov = oov_rate(&word_vocab, &gen.heldout).unwrap();
        assert!(
            (word_oov - gen.heldout_unseen_token_fraction).abs() < 1e-9,
            "word OOV {word_oov} should equal the generator's unseen fraction"
        );
        let char_vocab = train_char_vocab(&gen.train, false).unwrap();
        assert_eq!(oov_rate(&char_vocab, &gen.heldout).unwrap(), 0.0);
        let sub = train_subword_vocab(&gen.train, 400).unwrap().vocabulary;
        assert_eq!(oov_rate(&sub, &gen.heldout).unwrap(), 0.0);
    }

    #[test]
    fn memorization_corpus_words_are_unique() {
        let corpus = memorization_corpus(50, 6, 9);
        let mut seen = BTreeSet::new();
        for d in &corpus.documents {
            for w in d.text.split_whitespace() {
                assert!(seen.insert(w.to_string()), "duplicate word {w}");
            }
        }
        assert_eq!(seen.len(), 300);
    }

    #[test]
    fn tagging_language_tags_follow_suffixes() {
        let data = tagging_dataset(TaggingKind::Pos, 50, 3);
        for s in &data.sentences {
            for (tok, tag) in s.tokens.iter().zip(&s.tags) {
                let expected = if tok.ends_with("an") {
                    "N"
                } else if tok.ends_with("et") {
                    "V"
                } else {
                    "ADJ"
                };
                assert_eq!(tag, expected);
            }
        }
        let ner = tagging_dataset(TaggingKind::Ner, 50, 3);
        for s in &ner.sentences {
            for (i, tag) in s.tags.iter().enumerate() {
                if tag == "I-ENT" {
                    assert!(s.tags[i - 1] == "B-ENT" || s.tags[i - 1] == "I-ENT");
                }
            }
        }
    }

    #[test]
    fn planted_corpus_labels_match_lexicon_signal() {
        let cfg = PlantedConfig { num_docs: 60, ..PlantedConfig::default() };
        let (corpus, lexicon) = planted_sentiment_corpus(&cfg);
        assert_eq!(corpus.len(), 60);
        let lem = crate::lexicon::IdentityLemmatizer;
        for d in &corpus.documents {
            let v = crate::lexicon::score_document(d, &lexicon, &lem).unwrap();
            let pol = d.labels.get("polarity").unwrap();
            match pol.as_str() {
                "positive" => assert!(v.polarity() > 0.0, "doc {}", d.id),
                "negative" => assert!(v.polarity() < 0.0, "doc {}", d.id),
                _ => assert_eq!(v.polarity(), 0.0),
            }
            for e in Emotion::ALL {
                let expressed = d.labels.get(e.name()).unwrap() == "expressed";
                let score = v.score(LexiconCategory::Emotion(e));
                if expressed {
                    assert!(score > 0.0);
                } else {
                    assert_eq!(score, 0.0);
                }
            }
        }
    }

    #[test]
    fn opposing_pairs_pool_is_anti_aligned_at_full_compliance() {
        let pool = opposing_pairs_pool(30, 1.0, 4);
        let mut by_item: HashMap<String, HashMap<Sentiment, CoarseLabel>> = HashMap::new();
        for (id, s, l) in pool {
            by_item.entry(id).or_default().insert(s, l);
        }
        for labels in by_item.values() {
            let joy = labels[&Sentiment::Emotion(Emotion::Joy)];
            let sad = labels[&Sentiment::Emotion(Emotion::Sadness)];
            assert_ne!(joy, sad);
        }
    }
}
