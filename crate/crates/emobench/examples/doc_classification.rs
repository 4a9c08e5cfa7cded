//! Document classification heads: 3-class polarity, an independent binary
//! emotion head, and bootstrap confidence intervals over re-drawn splits.
//!
//! ```bash
//! cargo run --example doc_classification
//! ```

use emobench::annotation::{emotion_label_space, polarity_label_space};
use emobench::corpus::Split;
use emobench::encoder::{EncoderConfig, EncoderModel, TrainSpec};
use emobench::synthetic::{planted_sentiment_corpus, PlantedConfig};
use emobench::tasks::{
    bootstrap_evaluate, evaluate, fine_tune_doc_classifier, ClassifierOptions, DocLabelDataset,
};
use emobench::tokenizers::train_word_vocab;

fn main() -> emobench::Result<()> {
    let (mut corpus, _) = planted_sentiment_corpus(&PlantedConfig::default());
    corpus.assign_splits((0.70, 0.15, 0.15), 7)?;
    let vocab = train_word_vocab(&corpus, 0.0)?;
    let config = EncoderConfig::new(vocab.size()).with_dims(1, 2, 32, 64).with_max_seq_len(32);
    let encoder = EncoderModel::init(config, 3)?.with_mask_id(vocab.mask_id());
    let spec = TrainSpec {
        epochs: 6,
        learning_rate: 5e-3,
        batch_size: 16,
        seed: 5,
        ..TrainSpec::default()
    };

    // 3-class polarity head.
    let items: Vec<(String, String)> = corpus
        .by_split(Split::Train)
        .map(|d| (d.id.clone(), d.labels["polarity"].clone()))
        .collect();
    let data = DocLabelDataset::new(items, polarity_label_space())?;
    let (polarity, _) = fine_tune_doc_classifier(
        &encoder,
        &vocab,
        &corpus,
        &data,
        &spec,
        &ClassifierOptions::default(),
    )?;
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for d in corpus.by_split(Split::Test) {
        pred.push(polarity.predict_label(&vocab, &d.text)?);
        gold.push(d.labels["polarity"].clone());
    }
    let report = evaluate(&pred, &gold, &polarity_label_space())?;
    println!("== polarity (3-class softmax) ==");
    for c in &report.per_class {
        println!(
            "  {:<9} precision {:.2} recall {:.2} f1 {:.2} (support {})",
            c.label, c.precision, c.recall, c.f1, c.support
        );
    }
    println!("  accuracy {:.3}, weighted F1 {:.3}\n", report.accuracy, report.weighted_f1);

    // One of the eight independent binary emotion heads.
    let items: Vec<(String, String)> = corpus
        .by_split(Split::Train)
        .map(|d| (d.id.clone(), d.labels["joy"].clone()))
        .collect();
    let data = DocLabelDataset::new(items, emotion_label_space())?;
    let (joy, _) = fine_tune_doc_classifier(
        &encoder,
        &vocab,
        &corpus,
        &data,
        &spec,
        &ClassifierOptions::default(),
    )?;
    let sample = corpus.by_split(Split::Test).next().unwrap();
    let probs = joy.predict_proba(&vocab, &sample.text)?;
    println!("== joy head on one test document ==");
    println!("  text: {}", sample.text);
    println!("  true label: {}", sample.labels["joy"]);
    println!("  p(not_expressed) = {:.3}, p(expressed) = {:.3}\n", probs[0], probs[1]);

    // Bootstrap over 50 re-drawn partitions (fast settings).
    println!("== bootstrap over re-drawn 70/15/15 partitions ==");
    let mut pipeline = |partition_seed: u64| {
        let mut corpus = corpus.clone();
        corpus.assign_splits((0.70, 0.15, 0.15), partition_seed)?;
        let items: Vec<(String, String)> = corpus
            .by_split(Split::Train)
            .take(120)
            .map(|d| (d.id.clone(), d.labels["joy"].clone()))
            .collect();
        let data = DocLabelDataset::new(items, emotion_label_space())?;
        let fast = TrainSpec { epochs: 3, ..spec.clone() };
        let (model, _) = fine_tune_doc_classifier(
            &encoder,
            &vocab,
            &corpus,
            &data,
            &fast,
            &ClassifierOptions::default(),
        )?;
        let mut pred = Vec::new();
        let mut gold = Vec::new();
        for d in corpus.by_split(Split::Test).take(40) {
            pred.push(model.predict_label(&vocab, &d.text)?);
            gold.push(d.labels["joy"].clone());
        }
        evaluate(&pred, &gold, &emotion_label_space())
    };
    let summary = bootstrap_evaluate(&mut pipeline, 50, 77)?;
    for (metric, stat) in &summary.metrics {
        println!(
            "  {:<18} mean {:.3} std {:.3} [{:.3}, {:.3}]",
            metric, stat.mean, stat.std, stat.p2_5, stat.p97_5
        );
    }
    Ok(())
}
