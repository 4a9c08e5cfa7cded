//! Manifest-driven comparison of tokenization arms: per-arm vocabulary,
//! masked-LM training, pseudo-perplexity, OOV, and downstream weighted F1.
//!
//! ```bash
//! cargo run --example full_comparison
//! ```

use emobench::manifest::{
    run_comparison, ArmSpec, ComparisonInputs, EncoderOverrides, ExperimentManifest,
    StageConfig, TrainOverrides,
};
use emobench::synthetic::{inflection_corpus, InflectionConfig, PREFIXES, SUFFIXES};
use emobench::tasks::{TaggedSentence, TokenTaggingDataset};

fn main() -> emobench::Result<()> {
    let work = std::env::temp_dir().join("emobench_comparison_example");
    std::fs::create_dir_all(&work)?;

    // Synthetic inputs on disk, exactly as a real run would reference them.
    let gen = inflection_corpus(&InflectionConfig {
        num_stems: 40,
        train_sentences: 200,
        heldout_sentences: 40,
        words_per_sentence: 7,
        unseen_fraction: 0.4,
        seed: 3,
    });
    let mut all = gen.train.documents.clone();
    all.extend(gen.heldout.documents.clone());
    {
        use std::io::Write;
        let mut f = std::fs::File::create(work.join("raw.jsonl"))?;
        for d in &all {
            let rec = serde_json::json!({
                "id": d.id, "source": d.source, "section": d.section,
                "title": d.title, "text": d.text, "date": null,
            });
            writeln!(f, "{rec}")?;
        }
    }
    gen.rules.save(&work.join("rules.tsv"))?;

    // In-language task data derived from the corpus itself.
    // POS-style: the tag is the word's suffix class.
    let pos_tag = |word: &str| -> String {
        for s in SUFFIXES {
            if word.ends_with(s) && word.chars().count() > s.chars().count() + 1 {
                return format!("S_{}", s.to_uppercase());
            }
        }
        "BASE".into()
    };
    // BIO-style: a prefixed word opens an entity, the next word continues it.
    let sentences: Vec<&str> =
        gen.train.documents.iter().take(140).map(|d| d.text.as_str()).collect();
    let mut pos_sentences = Vec::new();
    let mut ner_sentences = Vec::new();
    for text in sentences {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let pos_tags: Vec<String> = tokens.iter().map(|w| pos_tag(w)).collect();
        let mut ner_tags = Vec::with_capacity(tokens.len());
        let mut prev_opened = false;
        for w in &tokens {
            let opens = PREFIXES.iter().any(|p| w.starts_with(p) && w.len() > p.len() + 2);
            if opens {
                ner_tags.push("B-ENT".to_string());
            } else if prev_opened {
                ner_tags.push("I-ENT".to_string());
            } else {
                ner_tags.push("O".to_string());
            }
            prev_opened = opens;
        }
        pos_sentences.push(TaggedSentence { tokens: tokens.clone(), tags: pos_tags });
        ner_sentences.push(TaggedSentence { tokens, tags: ner_tags });
    }
    TokenTaggingDataset::new(ner_sentences)?.write_conll(&work.join("ner.tsv"))?;
    TokenTaggingDataset::new(pos_sentences)?.write_conll(&work.join("pos.tsv"))?;

    let manifest = ExperimentManifest {
        name: "five-arm comparison".into(),
        seeds: [("split".to_string(), 7u64), ("mlm".to_string(), 11), ("finetune".to_string(), 13)]
            .into_iter()
            .collect(),
        stages: vec![
            StageConfig::Ingest {
                input: "raw.jsonl".into(),
                min_words: 2,
                script: "any".into(),
            },
            StageConfig::Tokenizer {
                arms: vec![
                    ArmSpec { scheme: "char".into(), size: None, trim_quantile: None },
                    ArmSpec { scheme: "subword".into(), size: Some(350), trim_quantile: None },
                    ArmSpec { scheme: "subword".into(), size: Some(500), trim_quantile: None },
                    ArmSpec { scheme: "morpheme".into(), size: Some(500), trim_quantile: None },
                    ArmSpec { scheme: "word".into(), size: None, trim_quantile: Some(0.05) },
                ],
                rules: Some("rules.tsv".into()),
            },
            StageConfig::Mlm {
                encoder: EncoderOverrides {
                    num_layers: Some(1),
                    num_heads: Some(2),
                    model_dim: Some(32),
                    ffn_dim: Some(64),
                    max_seq_len: Some(80),
                    ..EncoderOverrides::default()
                },
                train: TrainOverrides {
                    epochs: Some(3),
                    learning_rate: Some(1e-3),
                    batch_size: Some(16),
                    ..TrainOverrides::default()
                },
            },
            StageConfig::Finetune {
                ner: Some("ner.tsv".into()),
                pos: Some("pos.tsv".into()),
                labels: None,
                train: TrainOverrides {
                    epochs: Some(10),
                    learning_rate: Some(5e-3),
                    batch_size: Some(16),
                    ..TrainOverrides::default()
                },
            },
            StageConfig::Evaluate { pp_sample: 10 },
        ],
    };
    let digest = manifest.canonical_digest()?;

    let inputs = ComparisonInputs::from_manifest(&manifest, &work)?;
    let report = run_comparison(&manifest, &digest, &inputs)?;

    println!(
        "{:<14} {:>6} {:>12} {:>8} {:>8} {:>8}",
        "arm", "vocab", "pseudo-PP", "OOV", "NER F1", "POS F1"
    );
    for row in &report.rows {
        let f = |v: &Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<14} {:>6} {:>12} {:>8} {:>8} {:>8}{}",
            row.arm,
            row.vocab_size.map(|v| v.to_string()).unwrap_or_default(),
            f(&row.pseudo_perplexity),
            f(&row.oov_rate),
            f(&row.ner_f1),
            f(&row.pos_f1),
            if row.errors.is_empty() {
                String::new()
            } else {
                format!("  [{}]", row.errors.join("; "))
            },
        );
    }

    report.write_csv(&work.join("comparison.csv"))?;
    report.write_json(&work.join("comparison.json"))?;
    println!("\nwrote {}", work.join("comparison.csv").display());
    Ok(())
}
