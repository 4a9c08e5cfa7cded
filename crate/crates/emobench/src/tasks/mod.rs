//! Downstream task heads on top of the encoder: token tagging (BIO entity
//! and part-of-speech style) and document classification (3-class polarity,
//! binary emotions), plus metrics and bootstrap evaluation.
//!
//! Heads are linear layers trained with the same Adam machinery as the
//! encoder; the encoder itself either fine-tunes alongside the head or stays
//! frozen. Sub-word alignment for tagging predicts a word's tag at its first
//! piece.

mod bootstrap;
mod metrics;

pub use bootstrap::{bootstrap_evaluate, BootstrapStat, BootstrapSummary};
pub use metrics::{evaluate, f1_score, report_from_confusion, ClassMetrics, MetricsReport};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::encoder::{
    load_tensors, save_tensors, Adam, EncoderModel, LossCurve, LossPoint, TrainSpec,
};
use crate::error::{Error, Result};
use crate::tokenizers::Vocabulary;

/// Pooling for document classification. First-position pooling expects the
/// classifier to prepend the `[CLS]` token (done internally).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    FirstPosition,
    Mean,
}

/// One tagged sentence: `tokens[i]` carries `tags[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

/// Token-tagging dataset with a fixed tag inventory.
#[derive(Debug, Clone, Default)]
pub struct TokenTaggingDataset {
    pub sentences: Vec<TaggedSentence>,
    pub tag_inventory: Vec<String>,
}

impl TokenTaggingDataset {
    pub fn new(sentences: Vec<TaggedSentence>) -> Result<TokenTaggingDataset> {
        let mut inventory: Vec<String> = Vec::new();
        for s in &sentences {
            if s.tokens.len() != s.tags.len() {
                return Err(Error::LengthMismatch(format!(
                    "{} tokens vs {} tags",
                    s.tokens.len(),
                    s.tags.len()
                )));
            }
            for t in &s.tags {
                if !inventory.contains(t) {
                    inventory.push(t.clone());
                }
            }
        }
        inventory.sort_unstable();
        Ok(TokenTaggingDataset { sentences, tag_inventory: inventory })
    }

    /// CoNLL-style TSV: `token<TAB>tag`, blank line between sentences.
    pub fn read_conll(path: &Path) -> Result<TokenTaggingDataset> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut sentences = Vec::new();
        let mut tokens = Vec::new();
        let mut tags = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                if !tokens.is_empty() {
                    sentences.push(TaggedSentence {
                        tokens: std::mem::take(&mut tokens),
                        tags: std::mem::take(&mut tags),
                    });
                }
                continue;
            }
            let (tok, tag) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: "expected token<TAB>tag".into(),
            })?;
            tokens.push(tok.to_string());
            tags.push(tag.to_string());
        }
        if !tokens.is_empty() {
            sentences.push(TaggedSentence { tokens, tags });
        }
        TokenTaggingDataset::new(sentences)
    }

    pub fn write_conll(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for s in &self.sentences {
            for (tok, tag) in s.tokens.iter().zip(&s.tags) {
                writeln!(f, "{tok}\t{tag}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Document-level labels for one classification task.
#[derive(Debug, Clone, Default)]
pub struct DocLabelDataset {
    /// (document id, label) pairs.
    pub items: Vec<(String, String)>,
    pub label_space: Vec<String>,
}

impl DocLabelDataset {
    pub fn new(items: Vec<(String, String)>, label_space: Vec<String>) -> Result<DocLabelDataset> {
        for (id, label) in &items {
            if !label_space.contains(label) {
                return Err(Error::InvalidConfig(format!(
                    "label {label:?} for document {id} outside label space"
                )));
            }
        }
        Ok(DocLabelDataset { items, label_space })
    }

    /// Read `document_id,sentiment_name,label` CSV rows, keeping one
    /// sentiment.
    pub fn from_csv(path: &Path, sentiment: &str, label_space: Vec<String>) -> Result<DocLabelDataset> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let mut items = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() < 3 {
                return Err(Error::InvalidConfig("label CSV needs 3 columns".into()));
            }
            if &record[1] == sentiment {
                items.push((record[0].to_string(), record[2].to_string()));
            }
        }
        DocLabelDataset::new(items, label_space)
    }

    pub fn write_csv(path: &Path, rows: &[(String, String, String)]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["document_id", "sentiment_name", "label"])?;
        for (id, sentiment, label) in rows {
            w.write_record([id, sentiment, label])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Linear head parameters with their own Adam state.
#[derive(Debug, Clone, PartialEq)]
struct Head {
    w: Array2<f64>,
    b: Array1<f64>,
}

impl Head {
    fn init(in_dim: usize, out_dim: usize, seed: u64) -> Head {
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).expect("std");
        Head {
            w: Array2::from_shape_fn((in_dim, out_dim), |_| normal.sample(&mut rng)),
            b: Array1::zeros(out_dim),
        }
    }
}

struct HeadAdam {
    mw: Array2<f64>,
    vw: Array2<f64>,
    mb: Array1<f64>,
    vb: Array1<f64>,
    t: usize,
}

impl HeadAdam {
    fn new(head: &Head) -> HeadAdam {
        HeadAdam {
            mw: Array2::zeros(head.w.raw_dim()),
            vw: Array2::zeros(head.w.raw_dim()),
            mb: Array1::zeros(head.b.len()),
            vb: Array1::zeros(head.b.len()),
            t: 0,
        }
    }

    fn step(&mut self, head: &mut Head, dw: &Array2<f64>, db: &Array1<f64>, spec: &TrainSpec) {
        self.t += 1;
        let b1t = 1.0 - spec.beta1.powi(self.t as i32);
        let b2t = 1.0 - spec.beta2.powi(self.t as i32);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = spec.beta1 * *m + (1.0 - spec.beta1) * g;
            *v = spec.beta2 * *v + (1.0 - spec.beta2) * g * g;
            *p -= spec.learning_rate * (*m / b1t) / ((*v / b2t).sqrt() + spec.epsilon);
        };
        for ((p, m), (v, g)) in head
            .w
            .iter_mut()
            .zip(self.mw.iter_mut())
            .zip(self.vw.iter_mut().zip(dw.iter()))
        {
            update(p, m, v, *g);
        }
        for ((p, m), (v, g)) in head
            .b
            .iter_mut()
            .zip(self.mb.iter_mut())
            .zip(self.vb.iter_mut().zip(db.iter()))
        {
            update(p, m, v, *g);
        }
    }
}

fn softmax_vec(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.mapv(|v| (v - max).exp());
    let sum = out.sum();
    out.mapv_inplace(|v| v / sum);
    out
}

/// Per-token tagger: encoder + linear head over the tag inventory.
#[derive(Debug, Clone)]
pub struct TaggerModel {
    pub encoder: EncoderModel,
    head: Head,
    pub tag_inventory: Vec<String>,
    /// Majority training tag, used for words that overflow max_seq_len.
    fallback_tag: String,
}

struct TagItem {
    ids: Vec<u32>,
    /// (first-piece position, tag index) per aligned word.
    targets: Vec<(usize, usize)>,
}

fn align_sentence(
    vocab: &Vocabulary,
    tokens: &[String],
    max_seq_len: usize,
) -> (Vec<u32>, Vec<Option<usize>>) {
    let mut ids: Vec<u32> = Vec::new();
    let mut first_piece: Vec<Option<usize>> = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let pieces = vocab.encode(tok);
        if pieces.is_empty() || ids.len() + pieces.len() > max_seq_len {
            first_piece.push(None);
            continue;
        }
        first_piece.push(Some(ids.len()));
        ids.extend(pieces);
    }
    (ids, first_piece)
}

impl TaggerModel {
    /// Tags for each word; words that do not fit in `max_seq_len` fall back
    /// to the majority training tag.
    pub fn predict(&self, vocab: &Vocabulary, tokens: &[String]) -> Result<Vec<String>> {
        let (ids, first_piece) =
            align_sentence(vocab, tokens, self.encoder.config.max_seq_len);
        if ids.is_empty() {
            return Ok(vec![self.fallback_tag.clone(); tokens.len()]);
        }
        let mask = vec![true; ids.len()];
        let cache = self.encoder.forward_hidden(&ids, &mask, None)?;
        let logits = cache.hidden.dot(&self.head.w) + &self.head.b;
        let mut out = Vec::with_capacity(tokens.len());
        for fp in first_piece {
            match fp {
                Some(pos) => {
                    let row = logits.row(pos);
                    let best = row
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    out.push(self.tag_inventory[best].clone());
                }
                None => out.push(self.fallback_tag.clone()),
            }
        }
        Ok(out)
    }

    /// Tag predictions over a whole dataset, flattened in sentence order
    /// (pairs with the flattened gold tags).
    pub fn predict_dataset(
        &self,
        vocab: &Vocabulary,
        data: &TokenTaggingDataset,
    ) -> Result<(Vec<String>, Vec<String>)> {
        let mut pred = Vec::new();
        let mut gold = Vec::new();
        for s in &data.sentences {
            pred.extend(self.predict(vocab, &s.tokens)?);
            gold.extend(s.tags.iter().cloned());
        }
        Ok((pred, gold))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = serde_json::json!({
            "kind": "tagger",
            "config": self.encoder.config,
            "mask_id": self.encoder.mask_id,
            "tag_inventory": self.tag_inventory,
            "fallback_tag": self.fallback_tag,
        });
        let mut tensors = self.encoder.params.tensor_entries();
        tensors.push((
            "head.w".into(),
            vec![self.head.w.nrows(), self.head.w.ncols()],
            self.head.w.iter().copied().collect(),
        ));
        tensors.push(("head.b".into(), vec![self.head.b.len()], self.head.b.to_vec()));
        save_tensors(path, meta, &tensors)
    }

    pub fn load(path: &Path) -> Result<TaggerModel> {
        let file = load_tensors(path)?;
        let encoder = EncoderModel::from_tensor_file(&file)?;
        let tag_inventory: Vec<String> =
            serde_json::from_value(file.meta["tag_inventory"].clone())
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let fallback_tag: String =
            serde_json::from_value(file.meta["fallback_tag"].clone())
                .unwrap_or_else(|_| tag_inventory[0].clone());
        let (ws, wd) =
            file.tensor("head.w").ok_or_else(|| Error::Checkpoint("missing head.w".into()))?;
        let (bs, bd) =
            file.tensor("head.b").ok_or_else(|| Error::Checkpoint("missing head.b".into()))?;
        Ok(TaggerModel {
            encoder,
            head: Head {
                w: crate::encoder::checkpoint_array2(ws, wd)?,
                b: crate::encoder::checkpoint_array1(bs, bd)?,
            },
            tag_inventory,
            fallback_tag,
        })
    }
}

/// Fine-tune a token tagger. `freeze_encoder` leaves encoder parameters
/// untouched and trains only the head.
pub fn fine_tune_token_tagger(
    encoder: &EncoderModel,
    vocab: &Vocabulary,
    data: &TokenTaggingDataset,
    spec: &TrainSpec,
    freeze_encoder: bool,
) -> Result<(TaggerModel, LossCurve)> {
    if data.tag_inventory.is_empty() {
        return Err(Error::InvalidConfig("empty tag inventory".into()));
    }
    if data.sentences.is_empty() {
        return Err(Error::InsufficientData("no tagged sentences".into()));
    }
    spec.validate()?;

    let tag_index = |t: &String| data.tag_inventory.iter().position(|x| x == t).unwrap();
    let items: Vec<TagItem> = data
        .sentences
        .iter()
        .filter_map(|s| {
            let (ids, first_piece) =
                align_sentence(vocab, &s.tokens, encoder.config.max_seq_len);
            let targets: Vec<(usize, usize)> = first_piece
                .iter()
                .zip(&s.tags)
                .filter_map(|(fp, tag)| fp.map(|pos| (pos, tag_index(tag))))
                .collect();
            if ids.is_empty() || targets.is_empty() {
                None
            } else {
                Some(TagItem { ids, targets })
            }
        })
        .collect();
    if items.is_empty() {
        return Err(Error::InsufficientData("no alignable sentences".into()));
    }

    let mut tag_freq = vec![0usize; data.tag_inventory.len()];
    for s in &data.sentences {
        for t in &s.tags {
            tag_freq[tag_index(t)] += 1;
        }
    }
    let fallback_tag = data.tag_inventory
        [tag_freq.iter().enumerate().max_by_key(|(_, &c)| c).map(|(i, _)| i).unwrap_or(0)]
    .clone();
    let mut model = TaggerModel {
        encoder: encoder.clone(),
        head: Head::init(encoder.config.model_dim, data.tag_inventory.len(), spec.seed ^ 0x7a67),
        tag_inventory: data.tag_inventory.clone(),
        fallback_tag,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut head_adam = HeadAdam::new(&model.head);
    let mut enc_adam =
        (!freeze_encoder).then(|| Adam::new(&model.encoder.params, spec));
    let mut curve = LossCurve::default();
    let mut step = 0usize;

    for _epoch in 0..spec.epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(spec.batch_size) {
            let total: usize = chunk.iter().map(|&i| items[i].targets.len()).sum();
            if total == 0 {
                continue;
            }
            let scale = 1.0 / total as f64;
            let mut dw = Array2::zeros(model.head.w.raw_dim());
            let mut db = Array1::zeros(model.head.b.len());
            let mut enc_grads = (!freeze_encoder).then(|| model.encoder.zero_grads());
            let mut loss = 0.0;
            for &i in chunk {
                let item = &items[i];
                let mask = vec![true; item.ids.len()];
                let cache = model.encoder.forward_hidden(&item.ids, &mask, None)?;
                let logits = cache.hidden.dot(&model.head.w) + &model.head.b;
                let mut dlogits = Array2::zeros(logits.raw_dim());
                for &(pos, tag) in &item.targets {
                    let probs = softmax_vec(&logits.row(pos).to_owned());
                    loss -= probs[tag].max(f64::MIN_POSITIVE).ln();
                    for j in 0..probs.len() {
                        dlogits[[pos, j]] = probs[j] * scale;
                    }
                    dlogits[[pos, tag]] -= scale;
                }
                dw += &cache.hidden.t().dot(&dlogits);
                db += &dlogits.sum_axis(Axis(0));
                if let Some(grads) = &mut enc_grads {
                    let d_hidden = dlogits.dot(&model.head.w.t());
                    model.encoder.backward_hidden(&cache, d_hidden, grads);
                }
            }
            loss *= scale;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("tagger loss {loss} at step {step}")));
            }
            head_adam.step(&mut model.head, &dw, &db, spec);
            if let (Some(adam), Some(grads)) = (&mut enc_adam, &enc_grads) {
                adam.step(&mut model.encoder.params, grads);
            }
            curve.points.push(LossPoint { step, loss, masked_count: total });
            step += 1;
        }
    }
    Ok((model, curve))
}

/// Document classifier: encoder + pooled linear head.
#[derive(Debug, Clone)]
pub struct DocClassifierModel {
    pub encoder: EncoderModel,
    head: Head,
    pub labels: Vec<String>,
    pub pooling: Pooling,
    cls_id: u32,
}

/// Training summary for a classifier head.
#[derive(Debug, Clone)]
pub struct ClassifierTrainReport {
    pub curve: LossCurve,
    pub warnings: Vec<String>,
}

impl DocClassifierModel {
    fn pooled(&self, ids: &[u32]) -> Result<(crate::encoder::ForwardCache, Array1<f64>)> {
        let mask = vec![true; ids.len()];
        let cache = self.encoder.forward_hidden(ids, &mask, None)?;
        let pooled = match self.pooling {
            Pooling::FirstPosition => cache.hidden.row(0).to_owned(),
            Pooling::Mean => {
                let n = cache.hidden.nrows() as f64;
                cache.hidden.sum_axis(Axis(0)) / n
            }
        };
        Ok((cache, pooled))
    }

    fn input_ids(&self, vocab: &Vocabulary, text: &str, max_len: usize) -> Vec<u32> {
        let mut ids = vec![self.cls_id];
        ids.extend(vocab.encode(text));
        ids.truncate(max_len);
        ids
    }

    /// Class probabilities aligned with `self.labels`.
    pub fn predict_proba(&self, vocab: &Vocabulary, text: &str) -> Result<Vec<f64>> {
        let ids = self.input_ids(vocab, text, self.encoder.config.max_seq_len);
        let (_, pooled) = self.pooled(&ids)?;
        let logits = pooled.dot(&self.head.w) + &self.head.b;
        Ok(softmax_vec(&logits).to_vec())
    }

    /// Most probable label (ties break toward the earlier label).
    pub fn predict_label(&self, vocab: &Vocabulary, text: &str) -> Result<String> {
        let probs = self.predict_proba(vocab, text)?;
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Ok(self.labels[best].clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = serde_json::json!({
            "kind": "doc_classifier",
            "config": self.encoder.config,
            "mask_id": self.encoder.mask_id,
            "labels": self.labels,
            "pooling": self.pooling,
            "cls_id": self.cls_id,
        });
        let mut tensors = self.encoder.params.tensor_entries();
        tensors.push((
            "head.w".into(),
            vec![self.head.w.nrows(), self.head.w.ncols()],
            self.head.w.iter().copied().collect(),
        ));
        tensors.push(("head.b".into(), vec![self.head.b.len()], self.head.b.to_vec()));
        save_tensors(path, meta, &tensors)
    }

    pub fn load(path: &Path) -> Result<DocClassifierModel> {
        let file = load_tensors(path)?;
        let encoder = EncoderModel::from_tensor_file(&file)?;
        let labels: Vec<String> = serde_json::from_value(file.meta["labels"].clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let pooling: Pooling = serde_json::from_value(file.meta["pooling"].clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let cls_id: u32 = serde_json::from_value(file.meta["cls_id"].clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let (ws, wd) =
            file.tensor("head.w").ok_or_else(|| Error::Checkpoint("missing head.w".into()))?;
        let (bs, bd) =
            file.tensor("head.b").ok_or_else(|| Error::Checkpoint("missing head.b".into()))?;
        Ok(DocClassifierModel {
            encoder,
            head: Head {
                w: crate::encoder::checkpoint_array2(ws, wd)?,
                b: crate::encoder::checkpoint_array1(bs, bd)?,
            },
            labels,
            pooling,
            cls_id,
        })
    }
}

/// Options for [`fine_tune_doc_classifier`].
#[derive(Debug, Clone)]
pub struct ClassifierOptions {
    pub freeze_encoder: bool,
    pub pooling: Pooling,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions { freeze_encoder: false, pooling: Pooling::FirstPosition }
    }
}

/// Fine-tune a softmax document classifier over the dataset's label space.
pub fn fine_tune_doc_classifier(
    encoder: &EncoderModel,
    vocab: &Vocabulary,
    corpus: &Corpus,
    data: &DocLabelDataset,
    spec: &TrainSpec,
    opts: &ClassifierOptions,
) -> Result<(DocClassifierModel, ClassifierTrainReport)> {
    if data.label_space.is_empty() {
        return Err(Error::InvalidConfig("empty label space".into()));
    }
    if data.items.is_empty() {
        return Err(Error::InsufficientData("no labeled documents".into()));
    }
    spec.validate()?;

    let mut warnings = Vec::new();
    for label in &data.label_space {
        if !data.items.iter().any(|(_, l)| l == label) {
            warnings.push(format!(
                "class {label:?} absent from training data; its recall is undefined and reported as 0"
            ));
        }
    }

    let mut model = DocClassifierModel {
        encoder: encoder.clone(),
        head: Head::init(
            encoder.config.model_dim,
            data.label_space.len(),
            spec.seed ^ 0xc1a55,
        ),
        labels: data.label_space.clone(),
        pooling: opts.pooling,
        cls_id: vocab.cls_id(),
    };

    struct DocItem {
        ids: Vec<u32>,
        class: usize,
    }
    let mut items: Vec<DocItem> = Vec::with_capacity(data.items.len());
    for (doc_id, label) in &data.items {
        let doc = corpus
            .get(doc_id)
            .ok_or_else(|| Error::MissingData(format!("document {doc_id} not in corpus")))?;
        let class = data.label_space.iter().position(|l| l == label).unwrap();
        let ids = model.input_ids(vocab, &doc.text, encoder.config.max_seq_len);
        if ids.len() > 1 {
            items.push(DocItem { ids, class });
        }
    }
    if items.is_empty() {
        return Err(Error::InsufficientData("no usable labeled documents".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut head_adam = HeadAdam::new(&model.head);
    let mut enc_adam =
        (!opts.freeze_encoder).then(|| Adam::new(&model.encoder.params, spec));
    let mut curve = LossCurve::default();
    let mut step = 0usize;

    for _epoch in 0..spec.epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(spec.batch_size) {
            let scale = 1.0 / chunk.len() as f64;
            let mut dw = Array2::zeros(model.head.w.raw_dim());
            let mut db = Array1::zeros(model.head.b.len());
            let mut enc_grads = (!opts.freeze_encoder).then(|| model.encoder.zero_grads());
            let mut loss = 0.0;
            for &i in chunk {
                let item = &items[i];
                let (cache, pooled) = model.pooled(&item.ids)?;
                let logits = pooled.dot(&model.head.w) + &model.head.b;
                let probs = softmax_vec(&logits);
                loss -= probs[item.class].max(f64::MIN_POSITIVE).ln();
                let mut dlogit = probs;
                dlogit[item.class] -= 1.0;
                dlogit.mapv_inplace(|v| v * scale);
                // dw += pooled (outer) dlogit
                for (r, pv) in pooled.iter().enumerate() {
                    for (c, dv) in dlogit.iter().enumerate() {
                        dw[[r, c]] += pv * dv;
                    }
                }
                db += &dlogit;
                if let Some(grads) = &mut enc_grads {
                    let d_pooled = model.head.w.dot(&dlogit);
                    let n = cache.hidden.nrows();
                    let mut d_hidden = Array2::zeros(cache.hidden.raw_dim());
                    match model.pooling {
                        Pooling::FirstPosition => {
                            d_hidden.row_mut(0).assign(&d_pooled);
                        }
                        Pooling::Mean => {
                            let share = &d_pooled / n as f64;
                            for mut row in d_hidden.rows_mut() {
                                row.assign(&share);
                            }
                        }
                    }
                    model.encoder.backward_hidden(&cache, d_hidden, grads);
                }
            }
            loss *= scale;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("classifier loss {loss} at step {step}")));
            }
            head_adam.step(&mut model.head, &dw, &db, spec);
            if let (Some(adam), Some(grads)) = (&mut enc_adam, &enc_grads) {
                adam.step(&mut model.encoder.params, grads);
            }
            curve.points.push(LossPoint { step, loss, masked_count: chunk.len() });
            step += 1;
        }
    }
    Ok((model, ClassifierTrainReport { curve, warnings }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::test_util::corpus_from_texts;
    use crate::tokenizers::train_word_vocab;

    #[test]
    fn mean_pooling_classifier_trains_and_predicts() {
        let corpus = corpus_from_texts(&[
            "hot hot stuff here",
            "cold cold thing there",
            "hot warm item here",
            "cold chilly item there",
        ]);
        let vocab = train_word_vocab(&corpus, 0.0).unwrap();
        let cfg = EncoderConfig::new(vocab.size()).with_dims(1, 2, 8, 16).with_max_seq_len(12);
        let encoder =
            crate::encoder::EncoderModel::init(cfg, 1).unwrap().with_mask_id(vocab.mask_id());
        let items = vec![
            ("d0".to_string(), "hot".to_string()),
            ("d1".to_string(), "cold".to_string()),
            ("d2".to_string(), "hot".to_string()),
            ("d3".to_string(), "cold".to_string()),
        ];
        let data =
            DocLabelDataset::new(items, vec!["cold".to_string(), "hot".to_string()]).unwrap();
        let spec = TrainSpec {
            epochs: 30,
            learning_rate: 5e-3,
            batch_size: 4,
            seed: 2,
            ..TrainSpec::default()
        };
        let opts = ClassifierOptions { freeze_encoder: false, pooling: Pooling::Mean };
        let (model, _) =
            fine_tune_doc_classifier(&encoder, &vocab, &corpus, &data, &spec, &opts).unwrap();
        assert_eq!(model.pooling, Pooling::Mean);
        assert_eq!(model.predict_label(&vocab, "hot hot stuff here").unwrap(), "hot");
        assert_eq!(model.predict_label(&vocab, "cold cold thing there").unwrap(), "cold");

        // Pooling survives the checkpoint round trip.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clf.ckpt");
        model.save(&path).unwrap();
        let loaded = DocClassifierModel::load(&path).unwrap();
        assert_eq!(loaded.pooling, Pooling::Mean);
        assert_eq!(loaded.predict_label(&vocab, "hot hot stuff here").unwrap(), "hot");
    }

    #[test]
    fn conll_round_trip() {
        let data = crate::synthetic::tagging_dataset(crate::synthetic::TaggingKind::Ner, 10, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tags.tsv");
        data.write_conll(&path).unwrap();
        let back = TokenTaggingDataset::read_conll(&path).unwrap();
        assert_eq!(back.sentences, data.sentences);
        assert_eq!(back.tag_inventory, data.tag_inventory);
    }
}
