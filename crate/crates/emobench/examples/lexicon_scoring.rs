//! Unsupervised lexicon scoring with a pluggable lemmatizer.
//!
//! ```bash
//! cargo run --example lexicon_scoring
//! ```

use emobench::lexicon::{score_document, RuleLemmatizer, SentimentLexicon};
use emobench::sentiments::{Emotion, LexiconCategory};
use emobench::tokenizers::MorphRuleTable;

fn main() -> emobench::Result<()> {
    // A small word list: term -> flagged categories.
    let mut lexicon = SentimentLexicon::default();
    for (term, cats) in [
        ("zaam", vec![LexiconCategory::Emotion(Emotion::Anger), LexiconCategory::Negative]),
        ("gil", vec![LexiconCategory::Emotion(Emotion::Joy), LexiconCategory::Positive]),
        ("pachad", vec![LexiconCategory::Emotion(Emotion::Fear), LexiconCategory::Negative]),
        ("emun", vec![LexiconCategory::Emotion(Emotion::Trust), LexiconCategory::Positive]),
    ] {
        for c in cats {
            lexicon.insert(term, c);
        }
    }
    println!("lexicon: {} terms\n", lexicon.len());

    // Suffix-stripping lemmatizer so inflections hit the lexicon.
    let rules = MorphRuleTable::new(Vec::<&str>::new(), vec!["o", "im", "ot"], 2)?;
    let lemmatizer = RuleLemmatizer::new(rules);

    let docs = [
        "zaamo over the news zaam everywhere",
        "gilim and emun for the plan",
        "nothing emotional in this one",
        "pachado pachadim pachad gil",
    ];
    for (i, text) in docs.iter().enumerate() {
        let doc = emobench::corpus::Document {
            id: format!("d{i}"),
            source: String::new(),
            section: String::new(),
            title: String::new(),
            text: text.to_string(),
            date: None,
            word_count: emobench::corpus::word_count(text),
            labels: Default::default(),
            split: emobench::corpus::Split::Unassigned,
        };
        let v = score_document(&doc, &lexicon, &lemmatizer)?;
        println!("{text:?}");
        let mut hits: Vec<String> = Vec::new();
        for c in LexiconCategory::all() {
            if v.score(c) > 0.0 {
                hits.push(format!("{c} {:.2}", v.score(c)));
            }
        }
        println!(
            "  tokens {:>2} | polarity {:+.2} | {}\n",
            v.token_count,
            v.polarity(),
            if hits.is_empty() { "no lexicon hits".into() } else { hits.join(", ") }
        );
    }
    Ok(())
}
