//! The full annotate-train-predict loop on a planted-signal corpus with a
//! synthetic rater pool, including the emotion correlation analysis of the
//! final labeled pool.
//!
//! ```bash
//! cargo run --example annotation_loop
//! ```

use emobench::annotation::{emotion_correlation, run_loop, LoopConfig, SyntheticOracle};
use emobench::encoder::{EncoderConfig, EncoderModel, TrainSpec};
use emobench::lexicon::IdentityLemmatizer;
use emobench::sentiments::{Emotion, Sentiment};
use emobench::synthetic::{planted_sentiment_corpus, PlantedConfig};
use emobench::tokenizers::train_word_vocab;

fn main() -> emobench::Result<()> {
    let (mut corpus, lexicon) = planted_sentiment_corpus(&PlantedConfig::default());
    corpus.assign_splits((0.70, 0.15, 0.15), 7)?;
    let vocab = train_word_vocab(&corpus, 0.0)?;
    let config = EncoderConfig::new(vocab.size()).with_dims(1, 2, 32, 64).with_max_seq_len(32);
    let encoder = EncoderModel::init(config, 3)?.with_mask_id(vocab.mask_id());

    let loop_config = LoopConfig {
        k: 12,
        max_iterations: 3,
        convergence_epsilon: 1e-4,
        train_spec: TrainSpec {
            epochs: 6,
            learning_rate: 5e-3,
            batch_size: 16,
            ..TrainSpec::default()
        },
        seed: 1,
        ..LoopConfig::default()
    };

    // Raters read the planted truth; 10% of their ratings flip.
    let mut oracle = SyntheticOracle::new(0.10, 17);
    let run_dir = std::env::temp_dir().join("emobench_loop_example");
    let _ = std::fs::remove_dir_all(&run_dir);

    let outcome = run_loop(
        &corpus,
        &vocab,
        &encoder,
        &lexicon,
        &IdentityLemmatizer,
        &mut oracle,
        &loop_config,
        Some(&run_dir),
    )?;

    println!("iteration history:");
    for record in &outcome.state.history {
        println!(
            "  iter {}: selected {:>3} comments, kept {:>4} item labels, pool {:>4}, \
             validation weighted F1 {}",
            record.iteration,
            record.selected,
            record.kept_items,
            record.pool_size,
            record
                .validation_weighted_f1
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "n/a".into()),
        );
    }
    println!(
        "\n{} after {} iterations; audit trail in {}",
        if outcome.state.converged { "converged" } else { "stopped at the cap" },
        outcome.state.iteration,
        run_dir.display()
    );

    // This corpus plants emotions independently, so pool correlations sit
    // near zero; a pool with opposing-pair structure recovers strong
    // anti-correlations.
    let pool = outcome.state.labeled_pool()?;
    let matrix = emotion_correlation(&pool)?;
    println!("\nlabeled-pool correlations (emotions planted independently):");
    for (a, b) in [(Emotion::Anger, Emotion::Disgust), (Emotion::Joy, Emotion::Sadness)] {
        if let Some(r) = matrix.get(Sentiment::Emotion(a), Sentiment::Emotion(b)) {
            println!("  {a:<12} x {b:<12} r = {r:+.3}");
        }
    }
    let structured = emobench::synthetic::opposing_pairs_pool(200, 0.92, 5);
    let matrix = emotion_correlation(&structured)?;
    println!("structured pool (opposing pairs anti-aligned):");
    for (a, b) in [
        (Emotion::Joy, Emotion::Sadness),
        (Emotion::Anger, Emotion::Fear),
        (Emotion::Trust, Emotion::Disgust),
        (Emotion::Surprise, Emotion::Anticipation),
    ] {
        if let Some(r) = matrix.get(Sentiment::Emotion(a), Sentiment::Emotion(b)) {
            println!("  {a:<12} x {b:<12} r = {r:+.3}");
        }
    }
    Ok(())
}
