//! Fine-tuning quality on synthetic task languages: the generators know the
//! ground truth, so they act as the oracle for every assertion here.

use emobench::annotation::{emotion_label_space, polarity_label_space};
use emobench::corpus::Split;
use emobench::encoder::{EncoderConfig, EncoderModel, TrainSpec};
use emobench::synthetic::{
    planted_sentiment_corpus, tagging_dataset, PlantedConfig, TaggingKind,
};
use emobench::tasks::{
    bootstrap_evaluate, evaluate, fine_tune_doc_classifier, fine_tune_token_tagger,
    ClassifierOptions, DocLabelDataset, TokenTaggingDataset,
};
use emobench::tokenizers::{train_subword_vocab, train_word_vocab, Vocabulary};

fn tagging_fixture(kind: TaggingKind) -> (TokenTaggingDataset, TokenTaggingDataset, Vocabulary) {
    // One generation, split 120/40, so train and eval share the stem
    // inventory and the suffix signal is what transfers.
    let all = tagging_dataset(kind, 160, 31);
    let train = TokenTaggingDataset {
        sentences: all.sentences[..120].to_vec(),
        tag_inventory: all.tag_inventory.clone(),
    };
    let eval = TokenTaggingDataset {
        sentences: all.sentences[120..].to_vec(),
        tag_inventory: all.tag_inventory.clone(),
    };
    let text_corpus = {
        let texts: Vec<String> =
            train.sentences.iter().map(|s| s.tokens.join(" ")).collect();
        let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
        corpus_from(&refs)
    };
    let vocab = train_subword_vocab(&text_corpus, 400).unwrap().vocabulary;
    (train, eval, vocab)
}

fn corpus_from(texts: &[&str]) -> emobench::corpus::Corpus {
    use emobench::corpus::{Corpus, Document};
    let documents = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document {
            id: format!("t{i}"),
            source: String::new(),
            section: String::new(),
            title: String::new(),
            text: t.to_string(),
            date: None,
            word_count: emobench::corpus::word_count(t),
            labels: Default::default(),
            split: Split::Unassigned,
        })
        .collect();
    Corpus { documents, provenance: Default::default() }
}

fn small_encoder(vocab: &Vocabulary, seed: u64) -> EncoderModel {
    let cfg = EncoderConfig::new(vocab.size()).with_dims(1, 2, 32, 64).with_max_seq_len(48);
    EncoderModel::init(cfg, seed).unwrap().with_mask_id(vocab.mask_id())
}

fn spec(epochs: usize, lr: f64, seed: u64) -> TrainSpec {
    TrainSpec { epochs, learning_rate: lr, batch_size: 16, seed, ..TrainSpec::default() }
}

#[test]
fn single_sentence_tagging_memorization() {
    let data = tagging_dataset(TaggingKind::Pos, 1, 7);
    let texts: Vec<String> = data.sentences.iter().map(|s| s.tokens.join(" ")).collect();
    let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
    let vocab = train_word_vocab(&corpus_from(&refs), 0.0).unwrap();
    let encoder = small_encoder(&vocab, 1);
    let (model, _) =
        fine_tune_token_tagger(&encoder, &vocab, &data, &spec(60, 5e-3, 2), false).unwrap();
    let sentence = &data.sentences[0];
    let pred = model.predict(&vocab, &sentence.tokens).unwrap();
    assert_eq!(pred, sentence.tags, "memorizing one sentence must reach 100%");
}

#[test]
fn suffix_tagging_language_reaches_high_f1() {
    let (train, eval, vocab) = tagging_fixture(TaggingKind::Pos);
    let encoder = small_encoder(&vocab, 3);
    let (model, _) =
        fine_tune_token_tagger(&encoder, &vocab, &train, &spec(6, 5e-3, 4), false).unwrap();
    let (pred, gold) = model.predict_dataset(&vocab, &eval).unwrap();
    let report = evaluate(&pred, &gold, &train.tag_inventory).unwrap();
    assert!(report.weighted_f1 > 0.9, "weighted F1 {}", report.weighted_f1);
}

#[test]
fn bio_tagging_language_reaches_high_f1() {
    let (train, eval, vocab) = tagging_fixture(TaggingKind::Ner);
    let encoder = small_encoder(&vocab, 5);
    let (model, _) =
        fine_tune_token_tagger(&encoder, &vocab, &train, &spec(6, 5e-3, 6), false).unwrap();
    let (pred, gold) = model.predict_dataset(&vocab, &eval).unwrap();
    let report = evaluate(&pred, &gold, &train.tag_inventory).unwrap();
    assert!(report.weighted_f1 > 0.9, "weighted F1 {}", report.weighted_f1);
}

#[test]
fn fine_tuned_encoder_beats_frozen_encoder() {
    let (train, eval, vocab) = tagging_fixture(TaggingKind::Pos);
    let encoder = small_encoder(&vocab, 7);
    let run = |freeze: bool| {
        let (model, _) =
            fine_tune_token_tagger(&encoder, &vocab, &train, &spec(4, 3e-3, 8), freeze)
                .unwrap();
        let (pred, gold) = model.predict_dataset(&vocab, &eval).unwrap();
        evaluate(&pred, &gold, &train.tag_inventory).unwrap().weighted_f1
    };
    let frozen = run(true);
    let tuned = run(false);
    assert!(
        tuned >= frozen,
        "fine-tuned F1 {tuned} should be at least frozen F1 {frozen}"
    );
}

fn planted_setup() -> (emobench::corpus::Corpus, Vocabulary, EncoderModel) {
    let (mut corpus, _) = planted_sentiment_corpus(&PlantedConfig {
        num_docs: 300,
        words_per_doc: 10,
        filler_vocab: 100,
        neutral_fraction: 0.2,
        seed: 12,
    });
    corpus.assign_splits((0.70, 0.15, 0.15), 13).unwrap();
    let vocab = train_word_vocab(&corpus, 0.0).unwrap();
    let encoder = small_encoder(&vocab, 14);
    (corpus, vocab, encoder)
}

#[test]
fn all_one_class_training_predicts_that_class() {
    let (corpus, vocab, encoder) = planted_setup();
    let items: Vec<(String, String)> = corpus
        .by_split(Split::Train)
        .take(30)
        .map(|d| (d.id.clone(), "expressed".to_string()))
        .collect();
    let data = DocLabelDataset::new(items, emotion_label_space()).unwrap();
    let (model, report) = fine_tune_doc_classifier(
        &encoder,
        &vocab,
        &corpus,
        &data,
        &spec(3, 5e-3, 15),
        &ClassifierOptions::default(),
    )
    .unwrap();
    assert!(
        report.warnings.iter().any(|w| w.contains("not_expressed")),
        "missing-class warning expected: {:?}",
        report.warnings
    );
    for doc in corpus.by_split(Split::Test).take(10) {
        assert_eq!(model.predict_label(&vocab, &doc.text).unwrap(), "expressed");
    }
}

#[test]
fn separable_polarity_data_reaches_high_f1() {
    let (corpus, vocab, encoder) = planted_setup();
    let items: Vec<(String, String)> = corpus
        .by_split(Split::Train)
        .map(|d| (d.id.clone(), d.labels["polarity"].clone()))
        .collect();
    let data = DocLabelDataset::new(items, polarity_label_space()).unwrap();
    let (model, _) = fine_tune_doc_classifier(
        &encoder,
        &vocab,
        &corpus,
        &data,
        &spec(6, 5e-3, 16),
        &ClassifierOptions::default(),
    )
    .unwrap();
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for doc in corpus.by_split(Split::Test) {
        pred.push(model.predict_label(&vocab, &doc.text).unwrap());
        gold.push(doc.labels["polarity"].clone());
    }
    let report = evaluate(&pred, &gold, &polarity_label_space()).unwrap();
    assert!(report.weighted_f1 >= 0.95, "weighted F1 {}", report.weighted_f1);
}

#[test]
fn emotion_heads_are_independent_artifacts() {
    let (corpus, vocab, encoder) = planted_setup();
    let head_for = |emotion: &str, seed: u64| {
        let items: Vec<(String, String)> = corpus
            .by_split(Split::Train)
            .take(60)
            .map(|d| (d.id.clone(), d.labels[emotion].clone()))
            .collect();
        let data = DocLabelDataset::new(items, emotion_label_space()).unwrap();
        fine_tune_doc_classifier(
            &encoder,
            &vocab,
            &corpus,
            &data,
            &spec(2, 5e-3, seed),
            &ClassifierOptions::default(),
        )
        .unwrap()
        .0
    };
    let joy = head_for("joy", 21);
    let probe: Vec<f64> =
        (0..5).map(|i| joy.predict_proba(&vocab, &corpus.documents[i].text).unwrap()[1]).collect();
    // Training a different head must not disturb the first one.
    let _anger = head_for("anger", 22);
    let probe_after: Vec<f64> =
        (0..5).map(|i| joy.predict_proba(&vocab, &corpus.documents[i].text).unwrap()[1]).collect();
    assert_eq!(probe, probe_after);

    // Eight heads, eight separate checkpoint files.
    let dir = tempfile::tempdir().unwrap();
    for (i, e) in emobench::sentiments::Emotion::ALL.iter().enumerate() {
        let model = head_for(e.name(), 30 + i as u64);
        model.save(&dir.path().join(format!("{}.ckpt", e.name()))).unwrap();
    }
    let count = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(count, 8);
}

#[test]
fn bootstrap_over_repartitions_is_stable_and_deterministic() {
    let (corpus, vocab, encoder) = planted_setup();
    let mut pipeline = |partition_seed: u64| {
        let mut corpus = corpus.clone();
        corpus.assign_splits((0.70, 0.15, 0.15), partition_seed)?;
        let items: Vec<(String, String)> = corpus
            .by_split(Split::Train)
            .take(120)
            .map(|d| (d.id.clone(), d.labels["joy"].clone()))
            .collect();
        let data = DocLabelDataset::new(items, emotion_label_space())?;
        let (model, _) = fine_tune_doc_classifier(
            &encoder,
            &vocab,
            &corpus,
            &data,
            &spec(6, 5e-3, partition_seed),
            &ClassifierOptions::default(),
        )?;
        let mut pred = Vec::new();
        let mut gold = Vec::new();
        for doc in corpus.by_split(Split::Test).take(40) {
            pred.push(model.predict_label(&vocab, &doc.text)?);
            gold.push(doc.labels["joy"].clone());
        }
        evaluate(&pred, &gold, &emotion_label_space())
    };
    let a = bootstrap_evaluate(&mut pipeline, 5, 77).unwrap();
    let b = bootstrap_evaluate(&mut pipeline, 5, 77).unwrap();
    assert_eq!(a, b, "same seed must give identical distributions");
    let wf1 = &a.metrics["weighted_f1"];
    assert!(wf1.mean > 0.8, "bootstrap mean weighted F1 {}", wf1.mean);
    assert!(wf1.p2_5 <= wf1.p97_5);
}
