//! Fill-in-the-blank pre-training on a memorization corpus, then filling
//! blanks with the trained model.
//!
//! ```bash
//! cargo run --example mlm_pretraining
//! ```

use emobench::encoder::{fill_blank, train_mlm, EncoderConfig, EncoderModel, TrainSpec};
use emobench::synthetic::memorization_corpus;
use emobench::tokenizers::train_word_vocab;

fn main() -> emobench::Result<()> {
    let corpus = memorization_corpus(50, 6, 9);
    let vocab = train_word_vocab(&corpus, 0.0)?;
    println!("corpus: 50 sentences, vocabulary {} tokens", vocab.size());

    let config = EncoderConfig::new(vocab.size());
    let mut model = EncoderModel::init(config, 0)?.with_mask_id(vocab.mask_id());
    println!("encoder: {} parameters\n", model.num_params());

    let sequences = model.sequences_from_corpus(&corpus, &vocab);
    let spec = TrainSpec {
        epochs: 200,
        learning_rate: 5e-3,
        batch_size: 50,
        seed: 1,
        ..TrainSpec::default()
    };
    let curve = train_mlm(&mut model, &sequences, &vocab, &spec)?;
    println!("loss curve (every 25 steps):");
    for point in curve.points.iter().step_by(25) {
        println!("  step {:>3}  loss {:.4}", point.step, point.loss);
    }
    println!("  final     loss {:.4}\n", curve.final_loss().unwrap());

    // Mask the third token of the first three sentences and ask the model.
    for seq in sequences.iter().take(3) {
        let mut masked = seq.clone();
        let truth = masked[2];
        masked[2] = vocab.mask_id();
        let shown: Vec<&str> =
            masked.iter().filter_map(|&id| vocab.token_of(id)).collect();
        let top = fill_blank(&model, &masked, vocab.mask_id(), 3)?;
        println!("blank: {}", shown.join(" "));
        for (rank, (id, p)) in top.iter().enumerate() {
            let marker = if *id == truth { "  <- true token" } else { "" };
            println!(
                "  {}. {:<10} p = {:.4}{marker}",
                rank + 1,
                vocab.token_of(*id).unwrap_or("?"),
                p
            );
        }
    }
    Ok(())
}
