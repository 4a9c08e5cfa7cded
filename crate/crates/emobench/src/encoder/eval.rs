//! Mask-one-out evaluation: pseudo-perplexity and fill-in-the-blank.
//!
//! The model is bidirectional, so sequence likelihood is evaluated by
//! masking one position at a time and reading the probability of the true
//! token there (pseudo-likelihood), then exponentiating the negative mean
//! log-probability.

use crate::error::{Error, Result};

use super::{softmax_rows, EncoderModel};

/// Anything that can score the true token at a masked position. The test
/// suite uses hand-set implementations to pin the perplexity arithmetic.
pub trait MaskedScorer {
    /// Log-probability of `ids[position]` when that position is masked.
    fn true_token_log_prob(&self, ids: &[u32], position: usize) -> Result<f64>;
}

impl MaskedScorer for EncoderModel {
    fn true_token_log_prob(&self, ids: &[u32], position: usize) -> Result<f64> {
        let mut masked = ids.to_vec();
        let truth = *ids
            .get(position)
            .ok_or_else(|| Error::InvalidConfig(format!("position {position} out of range")))?;
        masked[position] = self.mask_id.ok_or_else(|| {
            Error::InvalidConfig("model has no mask id configured".into())
        })?;
        let mask = vec![true; masked.len()];
        let probs = self.position_probs(&masked, &mask, position)?;
        Ok(probs[truth as usize].max(f64::MIN_POSITIVE).ln())
    }
}

/// `exp(-mean(log_probs))`: the perplexity arithmetic shared by every
/// scorer.
pub fn perplexity_from_log_probs(log_probs: &[f64]) -> Result<f64> {
    if log_probs.is_empty() {
        return Err(Error::InvalidConfig("empty sequence".into()));
    }
    let mean = log_probs.iter().sum::<f64>() / log_probs.len() as f64;
    Ok((-mean).exp())
}

/// Pseudo-perplexity of a token sequence under a masked scorer: each
/// position is masked alone, scored, and the per-token log-probabilities
/// are averaged.
pub fn pseudo_perplexity(scorer: &dyn MaskedScorer, ids: &[u32]) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::InvalidConfig("empty sequence".into()));
    }
    let mut log_probs = Vec::with_capacity(ids.len());
    for pos in 0..ids.len() {
        log_probs.push(scorer.true_token_log_prob(ids, pos)?);
    }
    perplexity_from_log_probs(&log_probs)
}

/// Top-k completions for the single masked position of `ids`.
///
/// Errors unless exactly one mask id is present. Results are sorted by
/// probability descending, ties broken by token id.
pub fn fill_blank(
    model: &EncoderModel,
    ids: &[u32],
    mask_id: u32,
    k: usize,
) -> Result<Vec<(u32, f64)>> {
    let positions: Vec<usize> =
        ids.iter().enumerate().filter(|(_, &id)| id == mask_id).map(|(i, _)| i).collect();
    if positions.len() != 1 {
        return Err(Error::InvalidConfig(format!(
            "fill_blank needs exactly one mask, found {}",
            positions.len()
        )));
    }
    let pos = positions[0];
    let mask = vec![true; ids.len()];
    let logits = model.forward(ids, &mask)?;
    let probs = softmax_rows(&logits);
    let mut scored: Vec<(u32, f64)> =
        probs.row(pos).iter().enumerate().map(|(i, &p)| (i as u32, p)).collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}
