//! Finite-difference verification of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::train::{masked_batch_loss, masked_batch_loss_and_grads, MaskedBatch};
use super::EncoderModel;

/// Outcome of a gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Max over sampled parameters of
    /// `|g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|, 1e-8)`.
    pub max_relative_error: f64,
    pub sampled: usize,
}

/// Compare backprop gradients against central finite differences
/// `(f(p + eps) - f(p - eps)) / (2 eps)` on `samples` parameters drawn
/// uniformly across all tensors.
pub fn gradient_check(
    model: &EncoderModel,
    batch: &MaskedBatch,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let (_, _, grads) = masked_batch_loss_and_grads(model, batch, None)?;
    let analytic = grads.flat_vals();
    let n = analytic.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = model.clone();
    let mut max_rel = 0.0f64;
    let sampled = samples.min(n);
    for _ in 0..sampled {
        let idx = rng.gen_range(0..n);
        let original = {
            let mut flat = work.params.flat_mut();
            let orig = *flat[idx];
            *flat[idx] = orig + epsilon;
            orig
        };
        let (loss_plus, _) = masked_batch_loss(&work, batch, None)?;
        {
            let mut flat = work.params.flat_mut();
            *flat[idx] = original - epsilon;
        }
        let (loss_minus, _) = masked_batch_loss(&work, batch, None)?;
        {
            let mut flat = work.params.flat_mut();
            *flat[idx] = original;
        }
        let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
        let denom = analytic[idx].abs().max(numeric.abs()).max(1e-8);
        let rel = (analytic[idx] - numeric).abs() / denom;
        if rel > max_rel {
            max_rel = rel;
        }
    }
    Ok(GradCheckReport { max_relative_error: max_rel, sampled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::train::build_masked_batch;
    use crate::encoder::EncoderConfig;
    use crate::tokenizers::train_word_vocab;

    fn fixture() -> (EncoderModel, MaskedBatch) {
        let corpus = crate::test_util::corpus_from_texts(&[
            "aa bb cc dd ee",
            "bb cc dd ee ff",
            "cc dd ee ff aa",
        ]);
        let vocab = train_word_vocab(&corpus, 0.0).unwrap();
        let cfg = EncoderConfig::new(vocab.size())
            .with_dims(2, 2, 8, 16)
            .with_max_seq_len(8);
        let model = EncoderModel::init(cfg, 5).unwrap();
        let seqs: Vec<Vec<u32>> =
            corpus.documents.iter().map(|d| vocab.encode(&d.text)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch = build_masked_batch(&seqs, &vocab, 0.3, &mut rng).unwrap();
        (model, batch)
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let (model, batch) = fixture();
        let report = gradient_check(&model, &batch, 1e-4, 300, 17).unwrap();
        assert!(
            report.max_relative_error < 1e-3,
            "max relative error {}",
            report.max_relative_error
        );
    }

    #[test]
    fn untied_projection_gradients_also_match() {
        let corpus =
            crate::test_util::corpus_from_texts(&["aa bb cc", "bb cc aa"]);
        let vocab = train_word_vocab(&corpus, 0.0).unwrap();
        let cfg = EncoderConfig::new(vocab.size())
            .with_dims(1, 2, 8, 16)
            .with_max_seq_len(8)
            .with_tie_output(false);
        let model = EncoderModel::init(cfg, 5).unwrap();
        let seqs: Vec<Vec<u32>> =
            corpus.documents.iter().map(|d| vocab.encode(&d.text)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch = build_masked_batch(&seqs, &vocab, 0.4, &mut rng).unwrap();
        let report = gradient_check(&model, &batch, 1e-4, 200, 23).unwrap();
        assert!(report.max_relative_error < 1e-3);
    }

    #[test]
    fn zero_loss_batch_has_vanishing_gradients() {
        // A bias-certain model on a single-token corpus: p(true) ~ 1 at
        // every masked position, so the loss and all gradients vanish.
        let corpus = crate::test_util::corpus_from_texts(&["aa aa aa aa"]);
        let vocab = train_word_vocab(&corpus, 0.0).unwrap();
        let only = vocab.id_of("aa").unwrap();
        let cfg = EncoderConfig::new(vocab.size())
            .with_dims(1, 2, 8, 16)
            .with_max_seq_len(8)
            .with_tie_output(false);
        let mut model = EncoderModel::init(cfg, 0).unwrap();
        model.params.out_w.as_mut().unwrap().fill(0.0);
        model.params.out_b.fill(0.0);
        model.params.out_b[only as usize] = 60.0;
        let seqs = vec![vec![only, only, only]];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = build_masked_batch(&seqs, &vocab, 0.5, &mut rng).unwrap();
        let (loss, _, grads) =
            crate::encoder::train::masked_batch_loss_and_grads(&model, &batch, None).unwrap();
        assert!(loss.abs() < 1e-9, "loss {loss}");
        let max_grad =
            grads.flat_vals().iter().fold(0.0f64, |m, g| m.max(g.abs()));
        assert!(max_grad < 1e-8, "max gradient {max_grad}");
    }

    #[test]
    fn larger_epsilon_grows_truncation_error() {
        let (model, batch) = fixture();
        let fine = gradient_check(&model, &batch, 1e-5, 150, 29).unwrap();
        let coarse = gradient_check(&model, &batch, 1e-1, 150, 29).unwrap();
        assert!(
            coarse.max_relative_error > fine.max_relative_error,
            "coarse {} vs fine {}",
            coarse.max_relative_error,
            fine.max_relative_error
        );
    }
}
