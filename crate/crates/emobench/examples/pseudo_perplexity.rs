//! Mask-one-out pseudo-perplexity: calibration on an untrained model and
//! improvement after training.
//!
//! ```bash
//! cargo run --example pseudo_perplexity
//! ```

use emobench::encoder::{
    pseudo_perplexity, train_mlm, EncoderConfig, EncoderModel, TrainSpec,
};
use emobench::synthetic::memorization_corpus;
use emobench::tokenizers::train_word_vocab;

fn mean_pp(model: &EncoderModel, sequences: &[Vec<u32>]) -> emobench::Result<f64> {
    let mut total = 0.0;
    for seq in sequences {
        total += pseudo_perplexity(model, seq)?;
    }
    Ok(total / sequences.len() as f64)
}

fn main() -> emobench::Result<()> {
    let corpus = memorization_corpus(30, 6, 2);
    let vocab = train_word_vocab(&corpus, 0.0)?;
    let config = EncoderConfig::new(vocab.size()).with_dims(2, 2, 32, 64).with_max_seq_len(16);
    let mut model = EncoderModel::init(config, 0)?.with_mask_id(vocab.mask_id());
    let sequences = model.sequences_from_corpus(&corpus, &vocab);

    println!("vocabulary size: {}", vocab.size());
    let before = mean_pp(&model, &sequences)?;
    println!("mean pseudo-perplexity, untrained: {before:.1}");
    println!("  (a random-init model sits near the vocabulary size)");

    let spec = TrainSpec {
        epochs: 120,
        learning_rate: 5e-3,
        batch_size: 30,
        seed: 1,
        ..TrainSpec::default()
    };
    train_mlm(&mut model, &sequences, &vocab, &spec)?;
    let after = mean_pp(&model, &sequences)?;
    println!("mean pseudo-perplexity, after {} steps: {after:.3}", 120);
    println!("  (a fully memorized corpus drives it toward 1)");
    Ok(())
}
