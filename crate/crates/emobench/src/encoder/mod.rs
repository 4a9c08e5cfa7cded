//! A toy-scale bidirectional transformer encoder trained on the
//! fill-in-the-blank objective.
//!
//! The reference mode is single-threaded and bit-reproducible: identical
//! config, corpus, and seeds give identical loss curves and checkpoints.
//! Compute runs in f64 (the finite-difference gradient check needs the
//! precision); checkpoints store f32 little-endian arrays.

mod checkpoint;
mod eval;
mod gradcheck;
mod layers;
mod params;
mod train;

pub use checkpoint::{load_tensors, save_tensors, TensorFile};
pub use eval::{fill_blank, perplexity_from_log_probs, pseudo_perplexity, MaskedScorer};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use train::{
    build_masked_batch, mlm_loss, train_mlm, Adam, LossCurve, LossPoint, MaskedBatch,
    MaskedSequence, TrainSpec,
};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizers::Vocabulary;

pub(crate) use checkpoint::{array1_from as checkpoint_array1, array2_from as checkpoint_array2};
pub(crate) use layers::{
    backward_sequence, forward_sequence, output_logits, output_logits_backward, softmax_rows,
    DropoutPlan, ForwardCache,
};
pub(crate) use params::Params;

/// Architecture and size of the encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub num_heads: usize,
    pub model_dim: usize,
    pub ffn_dim: usize,
    pub max_seq_len: usize,
    pub vocab_size: usize,
    pub dropout: f64,
    /// Tie the output projection to the token embedding (halves parameters
    /// at toy scale).
    pub tie_output: bool,
    /// Std of the seeded Gaussian initialization.
    pub init_std: f64,
}

impl EncoderConfig {
    /// The default toy configuration for a given vocabulary size:
    /// 2 layers, 4 heads, model dim 64, FFN dim 256, max sequence length 128.
    pub fn new(vocab_size: usize) -> EncoderConfig {
        EncoderConfig {
            num_layers: 2,
            num_heads: 4,
            model_dim: 64,
            ffn_dim: 256,
            max_seq_len: 128,
            vocab_size,
            dropout: 0.0,
            tie_output: true,
            init_std: 0.02,
        }
    }

    pub fn with_dims(
        mut self,
        num_layers: usize,
        num_heads: usize,
        model_dim: usize,
        ffn_dim: usize,
    ) -> EncoderConfig {
        self.num_layers = num_layers;
        self.num_heads = num_heads;
        self.model_dim = model_dim;
        self.ffn_dim = ffn_dim;
        self
    }

    pub fn with_max_seq_len(mut self, max_seq_len: usize) -> EncoderConfig {
        self.max_seq_len = max_seq_len;
        self
    }

    pub fn with_tie_output(mut self, tie: bool) -> EncoderConfig {
        self.tie_output = tie;
        self
    }

    pub fn with_dropout(mut self, dropout: f64) -> EncoderConfig {
        self.dropout = dropout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_dim == 0
            || self.num_heads == 0
            || self.num_layers == 0
            || self.ffn_dim == 0
            || self.max_seq_len == 0
            || self.vocab_size == 0
        {
            return Err(Error::InvalidConfig("all encoder dimensions must be >= 1".into()));
        }
        if !self.model_dim.is_multiple_of(self.num_heads) {
            return Err(Error::InvalidConfig(format!(
                "model_dim {} not divisible by num_heads {}",
                self.model_dim, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout {} outside [0,1)", self.dropout)));
        }
        Ok(())
    }
}

/// Encoder parameters plus configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub config: EncoderConfig,
    pub(crate) params: Params,
    /// The mask token id from the vocabulary the model was trained with;
    /// required by mask-one-out evaluation.
    pub mask_id: Option<u32>,
}

impl EncoderModel {
    /// Seeded Gaussian initialization (std from config, layer-norm scale 1).
    pub fn init(config: EncoderConfig, seed: u64) -> Result<EncoderModel> {
        config.validate()?;
        let params = Params::init(&config, seed);
        Ok(EncoderModel { config, params, mask_id: None })
    }

    pub fn with_mask_id(mut self, mask_id: u32) -> EncoderModel {
        self.mask_id = Some(mask_id);
        self
    }

    pub fn num_params(&self) -> usize {
        self.params.num_params()
    }

    pub fn all_finite(&self) -> bool {
        self.params.all_finite()
    }

    fn check_input(&self, token_ids: &[u32], attention_mask: &[bool]) -> Result<()> {
        if token_ids.len() > self.config.max_seq_len {
            return Err(Error::SeqOverflow {
                len: token_ids.len(),
                max: self.config.max_seq_len,
            });
        }
        if token_ids.len() != attention_mask.len() {
            return Err(Error::LengthMismatch(format!(
                "{} token ids vs {} mask entries",
                token_ids.len(),
                attention_mask.len()
            )));
        }
        if token_ids.is_empty() {
            return Err(Error::InvalidConfig("empty input sequence".into()));
        }
        if !attention_mask.iter().any(|&m| m) {
            return Err(Error::InvalidConfig("attention mask is all padding".into()));
        }
        if let Some(&bad) =
            token_ids.iter().find(|&&id| id as usize >= self.config.vocab_size)
        {
            return Err(Error::InvalidConfig(format!(
                "token id {bad} outside vocab of size {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }

    /// Vocabulary logits, shape `(seq_len, vocab_size)`. Rows at padding
    /// positions are computed but carry no meaning; padded keys are masked
    /// out of attention, so non-pad rows are invariant to pad content.
    pub fn forward(&self, token_ids: &[u32], attention_mask: &[bool]) -> Result<Array2<f64>> {
        self.check_input(token_ids, attention_mask)?;
        let cache =
            forward_sequence(&self.params, self.config.num_heads, token_ids, attention_mask, None);
        Ok(output_logits(&self.params, &cache.hidden))
    }

    /// Softmax over the vocabulary at one position.
    pub fn position_probs(
        &self,
        token_ids: &[u32],
        attention_mask: &[bool],
        position: usize,
    ) -> Result<Vec<f64>> {
        let logits = self.forward(token_ids, attention_mask)?;
        if position >= logits.nrows() {
            return Err(Error::InvalidConfig(format!("position {position} out of range")));
        }
        let probs = softmax_rows(&logits);
        Ok(probs.row(position).to_vec())
    }

    /// Hidden states plus the cache a head needs for backprop.
    pub(crate) fn forward_hidden(
        &self,
        token_ids: &[u32],
        attention_mask: &[bool],
        dropout: Option<DropoutPlan>,
    ) -> Result<ForwardCache> {
        self.check_input(token_ids, attention_mask)?;
        Ok(forward_sequence(
            &self.params,
            self.config.num_heads,
            token_ids,
            attention_mask,
            dropout,
        ))
    }

    pub(crate) fn backward_hidden(
        &self,
        cache: &ForwardCache,
        d_hidden: Array2<f64>,
        grads: &mut Params,
    ) {
        backward_sequence(&self.params, self.config.num_heads, cache, d_hidden, grads);
    }

    pub(crate) fn zero_grads(&self) -> Params {
        self.params.zeros_like()
    }

    /// Encode a corpus into training sequences, truncating at max_seq_len.
    pub fn sequences_from_corpus(
        &self,
        corpus: &crate::corpus::Corpus,
        vocab: &Vocabulary,
    ) -> Vec<Vec<u32>> {
        corpus
            .documents
            .iter()
            .map(|d| {
                let mut ids = vocab.encode(&d.text);
                ids.truncate(self.config.max_seq_len);
                ids
            })
            .filter(|ids| !ids.is_empty())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_shape_contract() {
        let cfg = EncoderConfig::new(17).with_dims(1, 2, 8, 16).with_max_seq_len(10);
        let model = EncoderModel::init(cfg, 0).unwrap();
        let logits = model.forward(&[1, 2, 3, 4], &[true; 4]).unwrap();
        assert_eq!(logits.shape(), &[4, 17]);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let cfg = EncoderConfig::new(17).with_dims(1, 2, 8, 16).with_max_seq_len(4);
        let model = EncoderModel::init(cfg, 0).unwrap();
        assert!(matches!(
            model.forward(&[1; 5], &[true; 5]),
            Err(Error::SeqOverflow { .. })
        ));
        assert!(model.forward(&[1, 2], &[true]).is_err());
        assert!(model.forward(&[20, 2], &[true, true]).is_err());
        assert!(model.forward(&[1, 2], &[false, false]).is_err());
    }

    #[test]
    fn zeroed_untied_projection_gives_uniform_rows() {
        let cfg = EncoderConfig::new(12)
            .with_dims(1, 2, 8, 16)
            .with_max_seq_len(8)
            .with_tie_output(false);
        let mut model = EncoderModel::init(cfg, 0).unwrap();
        model.params.out_w.as_mut().unwrap().fill(0.0);
        model.params.out_b.fill(0.0);
        let probs = model.position_probs(&[1, 2, 3], &[true; 3], 1).unwrap();
        let expected = 1.0 / 12.0;
        for p in &probs {
            assert!((p - expected).abs() < 1e-12);
        }
        // Entropy of a uniform row is ln(vocab_size).
        let entropy: f64 = probs.iter().map(|p| -p * p.ln()).sum();
        assert!((entropy - (12.0f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::new(10).validate().is_ok());
        let bad = EncoderConfig { model_dim: 10, num_heads: 4, ..EncoderConfig::new(10) };
        assert!(bad.validate().is_err());
        let bad = EncoderConfig { dropout: 1.0, ..EncoderConfig::new(10) };
        assert!(bad.validate().is_err());
        let bad = EncoderConfig { vocab_size: 0, ..EncoderConfig::new(10) };
        assert!(bad.validate().is_err());
    }
}
