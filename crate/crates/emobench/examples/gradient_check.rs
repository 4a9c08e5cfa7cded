//! Finite-difference verification of the backprop gradients.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use emobench::encoder::{build_masked_batch, gradient_check, EncoderConfig, EncoderModel};
use emobench::synthetic::memorization_corpus;
use emobench::tokenizers::train_word_vocab;
use rand::SeedableRng;

fn main() -> emobench::Result<()> {
    let corpus = memorization_corpus(6, 5, 3);
    let vocab = train_word_vocab(&corpus, 0.0)?;
    let config = EncoderConfig::new(vocab.size()).with_dims(2, 2, 8, 16).with_max_seq_len(8);
    let model = EncoderModel::init(config, 5)?.with_mask_id(vocab.mask_id());
    println!("tiny config: {} parameters", model.num_params());

    let sequences: Vec<Vec<u32>> =
        corpus.documents.iter().map(|d| vocab.encode(&d.text)).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let batch = build_masked_batch(&sequences, &vocab, 0.3, &mut rng)?;

    for epsilon in [1e-3, 1e-4, 1e-5] {
        let report = gradient_check(&model, &batch, epsilon, 400, 11)?;
        println!(
            "epsilon {epsilon:>7.0e}: max relative error {:.3e} over {} sampled parameters",
            report.max_relative_error, report.sampled
        );
    }
    println!("\ncentral differences agree with backprop below the 1e-3 bar at");
    println!("epsilon = 1e-4; shrinking epsilon further lets floating-point noise");
    println!("dominate, growing it re-grows the truncation term.");
    Ok(())
}
