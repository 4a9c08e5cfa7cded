//! Property tests for the parsing-adjacent invariants: cleaning idempotence,
//! segmentation soundness, encode/decode reconstruction, and score bounds.

use proptest::prelude::*;

use emobench::corpus::{clean_comment, CleanOutcome, ScriptPredicate};
use emobench::lexicon::{Lemmatizer, RuleLemmatizer};
use emobench::tokenizers::{
    morpheme_segment, train_char_vocab, train_subword_vocab, MorphRuleTable,
};

fn corpus_from(texts: &[String]) -> emobench::corpus::Corpus {
    use emobench::corpus::{Corpus, Document, Split};
    let documents = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document {
            id: format!("p{i}"),
            source: String::new(),
            section: String::new(),
            title: String::new(),
            text: t.clone(),
            date: None,
            word_count: emobench::corpus::word_count(t),
            labels: Default::default(),
            split: Split::Unassigned,
        })
        .collect();
    Corpus { documents, provenance: Default::default() }
}

proptest! {
    /// Cleaning an already-cleaned comment changes nothing.
    #[test]
    fn clean_comment_is_idempotent(raw in "[ -~]{0,60}") {
        let script = ScriptPredicate::any();
        if let CleanOutcome::Cleaned(once) = clean_comment(&raw, &script, 1) {
            prop_assert_eq!(
                clean_comment(&once, &script, 1),
                CleanOutcome::Cleaned(once.clone())
            );
        }
    }

    /// Cleaned text never contains triple runs or double spaces.
    #[test]
    fn cleaned_text_has_no_runs_or_double_spaces(raw in "[a-z !?.]{0,60}") {
        let script = ScriptPredicate::any();
        if let CleanOutcome::Cleaned(text) = clean_comment(&raw, &script, 1) {
            prop_assert!(!text.contains("  "));
            let chars: Vec<char> = text.chars().collect();
            for w in chars.windows(3) {
                prop_assert!(!(w[0] == w[1] && w[1] == w[2]), "run survived: {:?}", text);
            }
        }
    }

    /// Marker-stripped segment concatenation reproduces the word, for any
    /// word and any affix table drawn from the generator.
    #[test]
    fn segmentation_is_sound(
        word in "[a-z]{1,14}",
        prefixes in proptest::collection::vec("[a-z]{1,3}", 0..4),
        suffixes in proptest::collection::vec("[a-z]{1,3}", 0..4),
        min_stem in 1usize..4,
    ) {
        let rules = MorphRuleTable::new(prefixes, suffixes, min_stem).unwrap();
        let segments = morpheme_segment(&word, &rules);
        let joined: String = segments
            .iter()
            .map(|s| s.trim_matches('#'))
            .collect();
        prop_assert_eq!(joined, word.clone());
        // Stem length respected.
        let stem = segments
            .iter()
            .find(|s| !s.starts_with("##") && !s.ends_with("##"))
            .expect("exactly one stem");
        prop_assert!(stem.chars().count() >= min_stem.min(word.chars().count()));
    }

    /// Rule-lemmatization reaches a fixed point.
    #[test]
    fn rule_lemmatizer_is_idempotent(
        word in "[a-z]{1,14}",
        suffixes in proptest::collection::vec("[a-z]{1,3}", 0..5),
    ) {
        let rules = MorphRuleTable::new(Vec::<String>::new(), suffixes, 2).unwrap();
        let lem = RuleLemmatizer::new(rules);
        let once = lem.lemma(&word);
        prop_assert_eq!(lem.lemma(&once), once);
    }

    /// Char-scheme round trip over any in-alphabet text.
    #[test]
    fn char_round_trip(words in proptest::collection::vec("[a-f]{1,6}", 1..8)) {
        let text = words.join(" ");
        let vocab = train_char_vocab(&corpus_from(std::slice::from_ref(&text)), false).unwrap();
        prop_assert_eq!(vocab.decode(&vocab.encode(&text)), text);
    }

    /// Sub-word round trip whenever the text's characters appear in the
    /// training corpus in the same word positions.
    #[test]
    fn subword_round_trip(
        words in proptest::collection::vec("[a-d]{1,6}", 2..8),
        target_extra in 0usize..20,
    ) {
        let text = words.join(" ");
        let corpus = corpus_from(std::slice::from_ref(&text));
        let base = emobench::tokenizers::SPECIALS.len();
        // Alphabet size is data-dependent; train with a generous floor.
        let trained = train_subword_vocab(&corpus, base + 8 + target_extra).unwrap();
        let vocab = trained.vocabulary;
        prop_assert_eq!(vocab.decode(&vocab.encode(&text)), text);
    }
}
