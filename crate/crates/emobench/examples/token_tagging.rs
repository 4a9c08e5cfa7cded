//! Token tagging on a synthetic suffix language: the tag of every word is a
//! pure function of its suffix, so the generator doubles as the oracle.
//!
//! ```bash
//! cargo run --example token_tagging
//! ```

use emobench::encoder::{EncoderConfig, EncoderModel, TrainSpec};
use emobench::synthetic::{tagging_dataset, TaggingKind};
use emobench::tasks::{evaluate, fine_tune_token_tagger, TokenTaggingDataset};
use emobench::tokenizers::train_subword_vocab;

fn main() -> emobench::Result<()> {
    for (kind, name) in [(TaggingKind::Pos, "word classes"), (TaggingKind::Ner, "BIO entities")] {
        let all = tagging_dataset(kind, 160, 31);
        let train = TokenTaggingDataset {
            sentences: all.sentences[..120].to_vec(),
            tag_inventory: all.tag_inventory.clone(),
        };
        let eval = TokenTaggingDataset {
            sentences: all.sentences[120..].to_vec(),
            tag_inventory: all.tag_inventory.clone(),
        };

        let texts: Vec<String> =
            train.sentences.iter().map(|s| s.tokens.join(" ")).collect();
        let corpus = to_corpus(&texts);
        let vocab = train_subword_vocab(&corpus, 400)?.vocabulary;
        let config =
            EncoderConfig::new(vocab.size()).with_dims(1, 2, 32, 64).with_max_seq_len(48);
        let encoder = EncoderModel::init(config, 3)?.with_mask_id(vocab.mask_id());

        let spec = TrainSpec {
            epochs: 8,
            learning_rate: 5e-3,
            batch_size: 16,
            seed: 4,
            ..TrainSpec::default()
        };
        let (model, _) = fine_tune_token_tagger(&encoder, &vocab, &train, &spec, false)?;
        let (pred, gold) = model.predict_dataset(&vocab, &eval)?;
        let report = evaluate(&pred, &gold, &train.tag_inventory)?;

        println!("== {name} ({:?}) ==", train.tag_inventory);
        println!("  accuracy {:.3}, weighted F1 {:.3}", report.accuracy, report.weighted_f1);
        for c in &report.per_class {
            println!(
                "  {:<8} precision {:.3} recall {:.3} f1 {:.3} (support {})",
                c.label, c.precision, c.recall, c.f1, c.support
            );
        }
        let sample = &eval.sentences[0];
        let tags = model.predict(&vocab, &sample.tokens)?;
        println!("  sample: {}", sample.tokens.join(" "));
        println!("  tagged: {}\n", tags.join(" "));
    }
    Ok(())
}

fn to_corpus(texts: &[String]) -> emobench::corpus::Corpus {
    use emobench::corpus::{Corpus, Document, Split};
    let documents = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document {
            id: format!("t{i}"),
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
