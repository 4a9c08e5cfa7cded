//! Experiment manifests, the multi-arm tokenization comparison, and report
//! aggregation.
//!
//! A manifest is one JSON document naming the run, its per-stage seeds, and
//! an ordered stage list. All randomness flows from the named seeds; rerun
//! with the same manifest and inputs and every emitted byte is identical.
//! Every artifact embeds the manifest digest, the governing seed, and a
//! format version.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::corpus::{Corpus, Split};
use crate::encoder::{train_mlm, EncoderConfig, EncoderModel, TrainSpec};
use crate::error::{Error, Result};
use crate::tasks::{
    evaluate, fine_tune_doc_classifier, fine_tune_token_tagger, ClassifierOptions,
    DocLabelDataset, TokenTaggingDataset,
};
use crate::tokenizers::{
    oov_rate, train_char_vocab, train_morpheme_vocab, train_subword_vocab, train_word_vocab,
    MorphRuleTable, Scheme, Vocabulary,
};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

/// Provenance stamp embedded in every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub manifest_digest: String,
    pub seed: u64,
    pub format_version: u32,
}

impl Stamp {
    pub fn new(manifest_digest: impl Into<String>, seed: u64) -> Stamp {
        Stamp {
            manifest_digest: manifest_digest.into(),
            seed,
            format_version: ARTIFACT_FORMAT_VERSION,
        }
    }

    /// Leading comment line for CSV artifacts.
    pub fn csv_header(&self) -> String {
        format!(
            "# manifest_digest={} seed={} format_version={}",
            self.manifest_digest, self.seed, self.format_version
        )
    }
}

/// One tokenization arm of the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    /// Trim quantile for the word scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim_quantile: Option<f64>,
}

/// Encoder dimension overrides applied onto the toy defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncoderOverrides {
    pub num_layers: Option<usize>,
    pub num_heads: Option<usize>,
    pub model_dim: Option<usize>,
    pub ffn_dim: Option<usize>,
    pub max_seq_len: Option<usize>,
    pub dropout: Option<f64>,
    pub tie_output: Option<bool>,
}

impl EncoderOverrides {
    pub fn apply(&self, vocab_size: usize) -> EncoderConfig {
        let mut cfg = EncoderConfig::new(vocab_size);
        if let Some(v) = self.num_layers {
            cfg.num_layers = v;
        }
        if let Some(v) = self.num_heads {
            cfg.num_heads = v;
        }
        if let Some(v) = self.model_dim {
            cfg.model_dim = v;
        }
        if let Some(v) = self.ffn_dim {
            cfg.ffn_dim = v;
        }
        if let Some(v) = self.max_seq_len {
            cfg.max_seq_len = v;
        }
        if let Some(v) = self.dropout {
            cfg.dropout = v;
        }
        if let Some(v) = self.tie_output {
            cfg.tie_output = v;
        }
        cfg
    }
}

/// Training protocol overrides applied onto [`TrainSpec::default`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub mask_fraction: Option<f64>,
}

impl TrainOverrides {
    pub fn apply(&self, seed: u64) -> TrainSpec {
        let mut spec = TrainSpec { seed, ..TrainSpec::default() };
        if let Some(v) = self.epochs {
            spec.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            spec.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            spec.batch_size = v;
        }
        if let Some(v) = self.mask_fraction {
            spec.mask_fraction = v;
        }
        spec
    }
}

/// One stage of an experiment, in pipeline order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageConfig {
    /// Clean and split a raw JSONL corpus.
    Ingest {
        input: String,
        #[serde(default = "default_min_words")]
        min_words: usize,
        #[serde(default = "default_script")]
        script: String,
    },
    /// Tokenization arms to induce and compare.
    Tokenizer {
        arms: Vec<ArmSpec>,
        /// Affix rule TSV for the morpheme scheme.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rules: Option<String>,
    },
    /// Fill-in-the-blank pre-training.
    Mlm {
        #[serde(default)]
        encoder: EncoderOverrides,
        #[serde(default)]
        train: TrainOverrides,
    },
    /// Downstream fine-tuning data.
    Finetune {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ner: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pos: Option<String>,
        /// Document label CSV holding a `polarity` sentiment.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<String>,
        #[serde(default)]
        train: TrainOverrides,
    },
    /// Intrinsic evaluation settings.
    Evaluate {
        /// Max validation documents scored for pseudo-perplexity.
        #[serde(default = "default_pp_sample")]
        pp_sample: usize,
    },
    /// Lexicon file for the annotation loop.
    Lexicon { path: String },
    /// Annotation loop parameters.
    Loop {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_min_raters")]
        min_raters: usize,
        #[serde(default = "default_max_iterations")]
        max_iterations: usize,
        #[serde(default = "default_epsilon")]
        convergence_epsilon: f64,
        /// Recorded ratings CSV; absent means the synthetic oracle.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratings: Option<String>,
        #[serde(default)]
        flip_prob: f64,
        #[serde(default)]
        train: TrainOverrides,
    },
}

fn default_min_words() -> usize {
    3
}
fn default_script() -> String {
    "any".into()
}
fn default_pp_sample() -> usize {
    32
}
fn default_k() -> usize {
    75
}
fn default_threshold() -> f64 {
    0.75
}
fn default_min_raters() -> usize {
    3
}
fn default_max_iterations() -> usize {
    3
}
fn default_epsilon() -> f64 {
    0.01
}

/// A named, seeded, ordered experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub name: String,
    /// Per-stage seeds; missing entries default to 0.
    #[serde(default)]
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageConfig>,
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<(ExperimentManifest, String)> {
        let bytes = std::fs::read(path)?;
        let manifest: ExperimentManifest = serde_json::from_slice(&bytes)?;
        Ok((manifest, digest_bytes(&bytes)))
    }

    pub fn seed(&self, stage: &str) -> u64 {
        self.seeds.get(stage).copied().unwrap_or(0)
    }

    /// Digest of the canonical serialization (used when a manifest is built
    /// in memory from CLI flags).
    pub fn canonical_digest(&self) -> Result<String> {
        Ok(digest_bytes(&serde_json::to_vec(self)?))
    }

    pub fn find_tokenizer(&self) -> Option<(&Vec<ArmSpec>, Option<&String>)> {
        self.stages.iter().find_map(|s| match s {
            StageConfig::Tokenizer { arms, rules } => Some((arms, rules.as_ref())),
            _ => None,
        })
    }

    pub fn find_mlm(&self) -> (EncoderOverrides, TrainOverrides) {
        self.stages
            .iter()
            .find_map(|s| match s {
                StageConfig::Mlm { encoder, train } => Some((encoder.clone(), train.clone())),
                _ => None,
            })
            .unwrap_or_default()
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    crate::corpus::to_hex(&hasher.finalize())
}

/// One comparison row. Metric cells are absent when their stage failed; the
/// failure text lands in `errors`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmRow {
    pub arm: String,
    pub scheme: String,
    pub vocab_size: Option<usize>,
    pub pseudo_perplexity: Option<f64>,
    pub oov_rate: Option<f64>,
    pub ner_f1: Option<f64>,
    pub pos_f1: Option<f64>,
    pub polarity_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

/// Full comparison output: one row per tokenization arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub stamp: Stamp,
    pub name: String,
    pub rows: Vec<ArmRow>,
}

impl ComparisonReport {
    pub fn any_failures(&self) -> bool {
        self.rows.iter().any(|r| !r.errors.is_empty())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{}", self.stamp.csv_header())?;
        writeln!(f, "arm,scheme,vocab_size,pseudo_perplexity,oov_rate,ner_f1,pos_f1,polarity_f1,status")?;
        for r in &self.rows {
            let opt_u = |v: &Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            let opt_f = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let status = if r.errors.is_empty() {
                "ok".to_string()
            } else {
                format!("failed: {}", r.errors.join("; ").replace(',', ";"))
            };
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{}",
                r.arm,
                r.scheme,
                opt_u(&r.vocab_size),
                opt_f(&r.pseudo_perplexity),
                opt_f(&r.oov_rate),
                opt_f(&r.ner_f1),
                opt_f(&r.pos_f1),
                opt_f(&r.polarity_f1),
                status
            )?;
        }
        Ok(())
    }
}

fn train_arm_vocab(
    arm: &ArmSpec,
    corpus: &Corpus,
    rules: Option<&MorphRuleTable>,
) -> Result<Vocabulary> {
    let scheme = Scheme::parse(&arm.scheme)?;
    match scheme {
        Scheme::Char => train_char_vocab(corpus, false),
        Scheme::Word => train_word_vocab(corpus, arm.trim_quantile.unwrap_or(0.05)),
        Scheme::SubwordNgram => {
            let size = arm.size.ok_or_else(|| {
                Error::InvalidConfig("subword arm needs a size".into())
            })?;
            Ok(train_subword_vocab(corpus, size)?.vocabulary)
        }
        Scheme::SubwordMorpheme => {
            let size = arm.size.ok_or_else(|| {
                Error::InvalidConfig("morpheme arm needs a size".into())
            })?;
            let rules = rules.ok_or_else(|| {
                Error::InvalidConfig("morpheme arm needs an affix rule table".into())
            })?;
            Ok(train_morpheme_vocab(corpus, rules, size)?.vocabulary)
        }
    }
}

fn arm_name(arm: &ArmSpec) -> String {
    match arm.size {
        Some(size) => format!("{}_{size}", arm.scheme),
        None => arm.scheme.clone(),
    }
}

/// Corpus-level pseudo-perplexity: log-probabilities pooled over every token
/// of the sampled sequences.
fn corpus_pseudo_perplexity(
    model: &EncoderModel,
    vocab: &Vocabulary,
    docs: &[&crate::corpus::Document],
    sample: usize,
) -> Result<f64> {
    let mut log_probs = Vec::new();
    for doc in docs.iter().take(sample) {
        let mut ids = vocab.encode(&doc.text);
        ids.truncate(model.config.max_seq_len);
        if ids.is_empty() {
            continue;
        }
        for pos in 0..ids.len() {
            log_probs.push(crate::encoder::MaskedScorer::true_token_log_prob(
                model, &ids, pos,
            )?);
        }
    }
    if log_probs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    crate::encoder::perplexity_from_log_probs(&log_probs)
}

/// Split tagging sentences 80/20 deterministically by seeded shuffle.
fn split_tagging(
    data: &TokenTaggingDataset,
    seed: u64,
) -> (TokenTaggingDataset, TokenTaggingDataset) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..data.sentences.len()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let cut = (data.sentences.len() * 4) / 5;
    let pick = |idx: &[usize]| TokenTaggingDataset {
        sentences: idx.iter().map(|&i| data.sentences[i].clone()).collect(),
        tag_inventory: data.tag_inventory.clone(),
    };
    (pick(&order[..cut]), pick(&order[cut..]))
}

/// Inputs resolved before running the comparison arms. Vocabularies and the
/// masked-LM train on the train split; OOV and pseudo-perplexity are
/// measured on the test split.
pub struct ComparisonInputs {
    /// Cleaned corpus with splits assigned.
    pub corpus: Corpus,
    pub rules: Option<MorphRuleTable>,
    pub ner: Option<TokenTaggingDataset>,
    pub pos: Option<TokenTaggingDataset>,
    pub polarity: Option<DocLabelDataset>,
}

impl ComparisonInputs {
    /// Resolve the manifest's ingest/tokenizer/finetune stages against the
    /// filesystem: clean and split the raw corpus, and load the rule table
    /// and downstream datasets it names. Relative paths resolve against
    /// `base_dir`.
    pub fn from_manifest(
        manifest: &ExperimentManifest,
        base_dir: &Path,
    ) -> Result<ComparisonInputs> {
        let resolve = |p: &str| -> PathBuf {
            let path = Path::new(p);
            if path.is_absolute() {
                path.to_path_buf()
            } else {
                base_dir.join(path)
            }
        };

        let ingest = manifest
            .stages
            .iter()
            .find_map(|s| match s {
                StageConfig::Ingest { input, min_words, script } => {
                    Some((input.clone(), *min_words, script.clone()))
                }
                _ => None,
            })
            .ok_or_else(|| Error::InvalidConfig("manifest has no ingest stage".into()))?;
        let (input, min_words, script) = ingest;
        let records = Corpus::read_raw_jsonl(&resolve(&input))?;
        let opts = crate::corpus::IngestOptions {
            script: crate::corpus::ScriptPredicate::named(&script)?,
            min_words,
        };
        let mut corpus = Corpus::ingest(records, &opts)?.dedup();
        corpus.assign_splits((0.70, 0.15, 0.15), manifest.seed("split"))?;

        let rules = match manifest.find_tokenizer() {
            Some((_, Some(rules_path))) => {
                Some(MorphRuleTable::load(&resolve(rules_path), 2)?)
            }
            _ => None,
        };

        let mut ner = None;
        let mut pos = None;
        let mut polarity = None;
        for stage in &manifest.stages {
            if let StageConfig::Finetune { ner: n, pos: p, labels, .. } = stage {
                if let Some(path) = n {
                    ner = Some(TokenTaggingDataset::read_conll(&resolve(path))?);
                }
                if let Some(path) = p {
                    pos = Some(TokenTaggingDataset::read_conll(&resolve(path))?);
                }
                if let Some(path) = labels {
                    polarity = Some(DocLabelDataset::from_csv(
                        &resolve(path),
                        "polarity",
                        crate::annotation::polarity_label_space(),
                    )?);
                }
            }
        }

        Ok(ComparisonInputs { corpus, rules, ner, pos, polarity })
    }

    fn split_corpus(&self, split: Split) -> Corpus {
        Corpus {
            documents: self.corpus.by_split(split).cloned().collect(),
            provenance: Default::default(),
        }
    }
}

fn tagger_weighted_f1(
    encoder: &EncoderModel,
    vocab: &Vocabulary,
    data: &TokenTaggingDataset,
    spec: &TrainSpec,
    seed: u64,
) -> Result<f64> {
    let (train, eval) = split_tagging(data, seed);
    if train.sentences.is_empty() || eval.sentences.is_empty() {
        return Err(Error::InsufficientData("tagging dataset too small to split".into()));
    }
    let (model, _) = fine_tune_token_tagger(encoder, vocab, &train, spec, false)?;
    let (pred, gold) = model.predict_dataset(vocab, &eval)?;
    let report = evaluate(&pred, &gold, &data.tag_inventory)?;
    Ok(report.weighted_f1)
}

fn polarity_weighted_f1(
    encoder: &EncoderModel,
    vocab: &Vocabulary,
    corpus: &Corpus,
    data: &DocLabelDataset,
    spec: &TrainSpec,
) -> Result<f64> {
    let mut train_items = Vec::new();
    let mut test_items = Vec::new();
    for (id, label) in &data.items {
        match corpus.get(id).map(|d| d.split) {
            Some(Split::Train) => train_items.push((id.clone(), label.clone())),
            Some(Split::Test) | Some(Split::Validation) => {
                test_items.push((id.clone(), label.clone()))
            }
            _ => {}
        }
    }
    if train_items.is_empty() || test_items.is_empty() {
        return Err(Error::InsufficientData("polarity labels missing a split".into()));
    }
    let train = DocLabelDataset::new(train_items, data.label_space.clone())?;
    let (model, _) = fine_tune_doc_classifier(
        encoder,
        vocab,
        corpus,
        &train,
        spec,
        &ClassifierOptions::default(),
    )?;
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for (id, label) in &test_items {
        let doc = corpus.get(id).expect("resolved above");
        pred.push(model.predict_label(vocab, &doc.text)?);
        gold.push(label.clone());
    }
    Ok(evaluate(&pred, &gold, &data.label_space)?.weighted_f1)
}

/// Train and evaluate every tokenization arm of the manifest.
///
/// Each arm induces its vocabulary, trains the toy fill-in-the-blank
/// encoder, and reports pseudo-perplexity, OOV rate, and the downstream
/// weighted F1 of the tagging and polarity tasks. A failing stage leaves
/// its cells empty and marks the row; the remaining arms still run.
pub fn run_comparison(
    manifest: &ExperimentManifest,
    digest: &str,
    inputs: &ComparisonInputs,
) -> Result<ComparisonReport> {
    let (arms, _) = manifest
        .find_tokenizer()
        .ok_or_else(|| Error::InvalidConfig("manifest has no tokenizer stage".into()))?;
    if arms.is_empty() {
        return Err(Error::InvalidConfig("manifest lists no tokenization arms".into()));
    }
    let (encoder_overrides, mlm_train) = manifest.find_mlm();
    let finetune_train = manifest
        .stages
        .iter()
        .find_map(|s| match s {
            StageConfig::Finetune { train, .. } => Some(train.clone()),
            _ => None,
        })
        .unwrap_or_default();
    let pp_sample = manifest
        .stages
        .iter()
        .find_map(|s| match s {
            StageConfig::Evaluate { pp_sample } => Some(*pp_sample),
            _ => None,
        })
        .unwrap_or_else(default_pp_sample);

    let mlm_seed = manifest.seed("mlm");
    let finetune_seed = manifest.seed("finetune");

    let train_corpus = inputs.split_corpus(Split::Train);
    let heldout_corpus = inputs.split_corpus(Split::Test);

    let mut rows = Vec::with_capacity(arms.len());
    for arm in arms {
        let mut row = ArmRow {
            arm: arm_name(arm),
            scheme: arm.scheme.clone(),
            ..ArmRow::default()
        };

        let vocab = match train_arm_vocab(arm, &train_corpus, inputs.rules.as_ref()) {
            Ok(v) => v,
            Err(e) => {
                row.errors.push(format!("tokenizer: {e}"));
                rows.push(row);
                continue;
            }
        };
        row.vocab_size = Some(vocab.size());

        match oov_rate(&vocab, &heldout_corpus) {
            Ok(rate) => row.oov_rate = Some(rate),
            Err(e) => row.errors.push(format!("oov: {e}")),
        }

        let config = encoder_overrides.apply(vocab.size());
        let spec = mlm_train.apply(mlm_seed);
        let mut model = match EncoderModel::init(config, mlm_seed) {
            Ok(m) => m.with_mask_id(vocab.mask_id()),
            Err(e) => {
                row.errors.push(format!("mlm: {e}"));
                rows.push(row);
                continue;
            }
        };
        let sequences = model.sequences_from_corpus(&train_corpus, &vocab);
        if let Err(e) = train_mlm(&mut model, &sequences, &vocab, &spec) {
            row.errors.push(format!("mlm: {e}"));
            rows.push(row);
            continue;
        }

        let heldout_docs: Vec<&crate::corpus::Document> =
            heldout_corpus.documents.iter().collect();
        match corpus_pseudo_perplexity(&model, &vocab, &heldout_docs, pp_sample) {
            Ok(pp) => row.pseudo_perplexity = Some(pp),
            Err(e) => row.errors.push(format!("eval-lm: {e}")),
        }

        let ft_spec = finetune_train.apply(finetune_seed);
        if let Some(ner) = &inputs.ner {
            match tagger_weighted_f1(&model, &vocab, ner, &ft_spec, finetune_seed) {
                Ok(f1) => row.ner_f1 = Some(f1),
                Err(e) => row.errors.push(format!("ner: {e}")),
            }
        }
        if let Some(pos) = &inputs.pos {
            match tagger_weighted_f1(&model, &vocab, pos, &ft_spec, finetune_seed ^ 1) {
                Ok(f1) => row.pos_f1 = Some(f1),
                Err(e) => row.errors.push(format!("pos: {e}")),
            }
        }
        if let Some(polarity) = &inputs.polarity {
            match polarity_weighted_f1(&model, &vocab, &inputs.corpus, polarity, &ft_spec) {
                Ok(f1) => row.polarity_f1 = Some(f1),
                Err(e) => row.errors.push(format!("polarity: {e}")),
            }
        }
        rows.push(row);
    }

    Ok(ComparisonReport {
        stamp: Stamp::new(digest, mlm_seed),
        name: manifest.name.clone(),
        rows,
    })
}

/// Aggregated view of a results directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ResultsSummary {
    pub format_version: u32,
    pub sources: Vec<String>,
    pub absent: Vec<String>,
    pub warnings: Vec<String>,
    pub metrics: BTreeMap<String, serde_json::Value>,
}

/// Aggregate stage outputs found under `results_dir` into one summary.
///
/// Known artifacts: `*.metrics.json`, `*.bootstrap.json`,
/// `*.correlation.json`, `comparison.json`, and loop `state.json` files.
/// Values are copied verbatim from the artifacts, never recomputed.
pub fn aggregate_results(results_dir: &Path) -> Result<ResultsSummary> {
    let mut summary = ResultsSummary {
        format_version: ARTIFACT_FORMAT_VERSION,
        ..ResultsSummary::default()
    };
    if !results_dir.is_dir() {
        summary.warnings.push(format!("{} is not a directory", results_dir.display()));
        return Ok(summary);
    }

    let mut paths: Vec<PathBuf> = Vec::new();
    collect_files(results_dir, &mut paths)?;
    paths.sort();

    for path in &paths {
        let name = path
            .strip_prefix(results_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        let fname = path.file_name().unwrap_or_default().to_string_lossy();
        let load = || -> Result<serde_json::Value> {
            Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
        };
        if fname.ends_with(".metrics.json") {
            summary.metrics.insert(format!("metrics/{name}"), load()?);
            summary.sources.push(name);
        } else if fname.ends_with(".bootstrap.json") {
            summary.metrics.insert(format!("bootstrap/{name}"), load()?);
            summary.sources.push(name);
        } else if fname.ends_with(".correlation.json") {
            summary.metrics.insert(format!("correlation/{name}"), load()?);
            summary.sources.push(name);
        } else if fname == "comparison.json" {
            summary.metrics.insert(format!("comparison/{name}"), load()?);
            summary.sources.push(name);
        } else if fname == "state.json" {
            summary.metrics.insert(format!("loop/{name}"), load()?);
            summary.sources.push(name);
        }
    }

    if summary.sources.is_empty() {
        summary.warnings.push("no recognized stage outputs found".into());
    }
    for expected in ["comparison.json", "state.json"] {
        if !summary.sources.iter().any(|s| s.ends_with(expected)) {
            summary.absent.push(expected.to_string());
        }
    }
    Ok(summary)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

impl ResultsSummary {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Flat CSV of every scalar metric found in the aggregated artifacts.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "source,key,value")?;
        let mut rows: Vec<(String, String, String)> = Vec::new();
        for (source, value) in &self.metrics {
            flatten_scalars(value, String::new(), &mut |key, v| {
                rows.push((source.clone(), key, v));
            });
        }
        rows.sort();
        for (source, key, value) in rows {
            writeln!(f, "{source},{key},{value}")?;
        }
        Ok(())
    }
}

fn flatten_scalars(
    value: &serde_json::Value,
    prefix: String,
    emit: &mut dyn FnMut(String, String),
) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_scalars(v, key, emit);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_scalars(v, format!("{prefix}[{i}]"), emit);
            }
        }
        serde_json::Value::Number(n) => emit(prefix, n.to_string()),
        serde_json::Value::Bool(b) => emit(prefix, b.to_string()),
        serde_json::Value::String(s) => emit(prefix, s.replace(',', ";")),
        serde_json::Value::Null => {}
    }
}
