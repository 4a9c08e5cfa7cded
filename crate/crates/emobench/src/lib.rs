//! Desk-scale workbench for comparing tokenization schemes, training a toy
//! masked-language-model encoder, and running a lexicon-bootstrapped
//! annotation loop for polarity and emotion classification.
//!
//! The crate is organized around the stages of that pipeline:
//!
//! - [`corpus`]: ingestion, cleaning rules, deduplication, and deterministic
//!   train/validation/test splits.
//! - [`tokenizers`]: five vocabulary schemes (characters, two n-gram sub-word
//!   sizes, morpheme-based sub-words, frequency-trimmed words) with shared
//!   encode/decode and OOV measurement.
//! - [`encoder`]: a small bidirectional transformer trained on the
//!   fill-in-the-blank objective, with pseudo-perplexity evaluation, a
//!   finite-difference gradient check, and a self-describing checkpoint
//!   format.
//! - [`tasks`]: token-tagging and document-classification heads fine-tuned on
//!   top of the encoder, precision/recall/F1 metrics, and bootstrap
//!   evaluation over re-drawn data partitions.
//! - [`lexicon`]: emotion/polarity word-list ingestion, pluggable
//!   lemmatization, and unsupervised per-document scoring.
//! - [`annotation`]: rating-record handling, label coarsening, Krippendorff
//!   alpha reliability filtering, extreme-score selection, and the iterative
//!   annotate-train-predict loop.
//! - [`manifest`]: experiment manifests, the multi-arm tokenization
//!   comparison, and report aggregation.
//! - [`synthetic`]: deterministic corpus generators used as ground-truth
//!   oracles by the examples and the test suite.
//!
//! Every run is driven by explicit seeds; reruns with the same inputs and
//! seeds produce byte-identical artifacts. See the `examples/` directory for
//! one runnable program per capability.

pub mod annotation;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod lexicon;
pub mod manifest;
pub mod sentiments;
pub mod synthetic;
pub mod tasks;
pub mod tokenizers;

pub use error::{Error, Result};
