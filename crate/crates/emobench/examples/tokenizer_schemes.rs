//! The five input representations over one synthetic inflected language:
//! characters, two n-gram sub-word sizes, morpheme-based sub-words, and
//! frequency-trimmed words.
//!
//! ```bash
//! cargo run --example tokenizer_schemes
//! ```

use emobench::synthetic::{inflection_corpus, InflectionConfig};
use emobench::tokenizers::{
    morpheme_segment, train_char_vocab, train_morpheme_vocab, train_subword_vocab,
    train_word_vocab, Vocabulary,
};

fn show(vocab: &Vocabulary, text: &str) {
    let ids = vocab.encode(text);
    let pieces: Vec<&str> = ids.iter().filter_map(|&id| vocab.token_of(id)).collect();
    println!(
        "  {:<18} size {:>5}  {:?}",
        vocab.scheme.to_string(),
        vocab.size(),
        pieces
    );
}

fn main() -> emobench::Result<()> {
    let gen = inflection_corpus(&InflectionConfig::default());
    let corpus = &gen.train;

    // A prefixed and suffixed inflection of the first stem in the corpus.
    let stem = gen.train.documents[0].text.split_whitespace().next().unwrap().to_string();
    let sample = format!("ha{stem}o {stem}im {stem}");
    println!("sample text: {sample:?}\n");

    println!("rule-table segmentation of {:?}:", format!("ha{stem}o"));
    println!("  {:?}\n", morpheme_segment(&format!("ha{stem}o"), &gen.rules));

    let char_vocab = train_char_vocab(corpus, false)?;
    show(&char_vocab, &sample);

    for target in [400, 700] {
        let trained = train_subword_vocab(corpus, target)?;
        if !trained.target_reached {
            println!("  (corpus too small for {target}; trained smaller)");
        }
        show(&trained.vocabulary, &sample);
    }

    let morph = train_morpheme_vocab(corpus, &gen.rules, 700)?;
    show(&morph.vocabulary, &sample);

    let word_vocab = train_word_vocab(corpus, 0.05)?;
    show(&word_vocab, &sample);

    println!("\nround trips (decode . encode):");
    for vocab in [&char_vocab, &morph.vocabulary, &word_vocab] {
        let back = vocab.decode(&vocab.encode(&sample));
        println!("  {:<18} {:?}", vocab.scheme.to_string(), back);
    }
    Ok(())
}
