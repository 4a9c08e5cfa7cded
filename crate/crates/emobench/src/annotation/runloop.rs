//! The iterative annotate-train-predict loop.
//!
//! Iteration 0 scores the unlabeled pool with the lexicon; later iterations
//! score it with the freshly trained classifiers. Each round selects
//! extreme-scored comments, collects ratings from the oracle, filters them
//! by per-item reliability, grows the labeled pool (monotonically: old
//! consensus labels are never revisited), retrains one classifier per
//! sentiment, and stops when the validation metric converges or the
//! iteration cap is reached. Every round is persisted when a run directory
//! is given, and an interrupted run resumes from its saved state.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::corpus::{Corpus, Split};
use crate::encoder::{EncoderModel, TrainSpec};
use crate::error::{Error, Result};
use crate::lexicon::{score_document, Lemmatizer, SentimentLexicon};
use crate::sentiments::{CoarseLabel, Emotion, Sentiment};
use crate::tasks::{
    evaluate, fine_tune_doc_classifier, ClassifierOptions, DocClassifierModel, DocLabelDataset,
    MetricsReport, Pooling,
};
use crate::tokenizers::Vocabulary;

use super::oracle::RaterOracle;
use super::select::{select_for_annotation, SelectionOutcome, SelectionScores};
use super::{filter_reliable, write_ratings_csv, RatingRecord};

/// Label spaces of the classifier heads, in head-output order.
pub fn polarity_label_space() -> Vec<String> {
    vec!["negative".into(), "neutral".into(), "positive".into()]
}

pub fn emotion_label_space() -> Vec<String> {
    vec!["not_expressed".into(), "expressed".into()]
}

/// Loop parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopConfig {
    /// Extreme-selection depth per ranking.
    pub k: usize,
    /// Per-item reliability threshold.
    pub threshold: f64,
    /// Minimum distinct raters per item.
    pub min_raters: usize,
    pub max_iterations: usize,
    /// Stop when the validation metric moves less than this between rounds.
    pub convergence_epsilon: f64,
    /// Fine-tuning protocol for every classifier head.
    pub train_spec: TrainSpec,
    pub freeze_encoder: bool,
    pub seed: u64,
}

impl Default for LoopConfig {
    fn default() -> LoopConfig {
        LoopConfig {
            k: 75,
            threshold: 0.75,
            min_raters: 3,
            max_iterations: 3,
            convergence_epsilon: 0.01,
            train_spec: TrainSpec {
                epochs: 6,
                learning_rate: 5e-3,
                batch_size: 16,
                ..TrainSpec::default()
            },
            freeze_encoder: false,
            seed: 0,
        }
    }
}

/// One consensus label in the pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub comment_id: String,
    pub sentiment: String,
    pub label: String,
}

/// Bookkeeping for one completed iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub selected: usize,
    pub rated_items: usize,
    pub kept_items: usize,
    pub pool_size: usize,
    /// Mean validation weighted F1 across sentiments with validation data.
    pub validation_weighted_f1: Option<f64>,
    pub per_sentiment_f1: BTreeMap<String, f64>,
}

/// Persisted loop state: everything needed to resume a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopState {
    /// Number of completed iterations.
    pub iteration: usize,
    pub converged: bool,
    pub annotated_comments: Vec<String>,
    pub labeled: Vec<LabeledItem>,
    pub history: Vec<IterationRecord>,
    pub config: LoopConfig,
}

impl LoopState {
    pub fn labeled_pool(&self) -> Result<Vec<(String, Sentiment, CoarseLabel)>> {
        self.labeled
            .iter()
            .map(|item| {
                Ok((
                    item.comment_id.clone(),
                    Sentiment::parse(&item.sentiment)?,
                    CoarseLabel::parse(&item.label)?,
                ))
            })
            .collect()
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(run_dir)?;
        let mut f = std::fs::File::create(run_dir.join("state.json"))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(run_dir: &Path) -> Result<LoopState> {
        let text = std::fs::read_to_string(run_dir.join("state.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Final state plus the trained classifier per sentiment.
pub struct LoopOutcome {
    pub state: LoopState,
    pub classifiers: BTreeMap<String, DocClassifierModel>,
}

fn head_seed(base: u64, iteration: usize, sentiment: Sentiment) -> u64 {
    crate::corpus::stable_hash(base, &format!("head|{iteration}|{}", sentiment.name()))
}

/// Train one classifier per sentiment on the labeled pool restricted to the
/// train split; evaluate each on the validation split. Returns classifiers,
/// per-sentiment validation F1, and their mean.
#[allow(clippy::type_complexity)]
fn train_and_validate(
    corpus: &Corpus,
    vocab: &Vocabulary,
    encoder: &EncoderModel,
    labeled: &BTreeMap<(String, Sentiment), CoarseLabel>,
    config: &LoopConfig,
    iteration: usize,
) -> Result<(BTreeMap<String, DocClassifierModel>, BTreeMap<String, f64>, Option<f64>)> {
    let split_of = |id: &str| corpus.get(id).map(|d| d.split);
    let mut classifiers = BTreeMap::new();
    let mut per_sentiment = BTreeMap::new();

    for sentiment in Sentiment::all() {
        let space = match sentiment {
            Sentiment::Polarity => polarity_label_space(),
            Sentiment::Emotion(_) => emotion_label_space(),
        };
        let mut train_items: Vec<(String, String)> = Vec::new();
        let mut val_items: Vec<(String, String)> = Vec::new();
        for ((id, s), label) in labeled {
            if *s != sentiment {
                continue;
            }
            match split_of(id) {
                Some(Split::Train) => train_items.push((id.clone(), label.name().into())),
                Some(Split::Validation) => val_items.push((id.clone(), label.name().into())),
                _ => {}
            }
        }
        if train_items.is_empty() {
            continue;
        }
        let data = DocLabelDataset::new(train_items, space.clone())?;
        let mut spec = config.train_spec.clone();
        spec.seed = head_seed(config.seed, iteration, sentiment);
        let opts = ClassifierOptions {
            freeze_encoder: config.freeze_encoder,
            pooling: Pooling::FirstPosition,
        };
        let (model, _report) =
            fine_tune_doc_classifier(encoder, vocab, corpus, &data, &spec, &opts)?;

        if !val_items.is_empty() {
            let mut pred = Vec::with_capacity(val_items.len());
            let mut gold = Vec::with_capacity(val_items.len());
            for (id, label) in &val_items {
                let doc = corpus.get(id).expect("labeled ids resolve");
                pred.push(model.predict_label(vocab, &doc.text)?);
                gold.push(label.clone());
            }
            let report: MetricsReport = evaluate(&pred, &gold, &space)?;
            per_sentiment.insert(sentiment.name().to_string(), report.weighted_f1);
        }
        classifiers.insert(sentiment.name().to_string(), model);
    }

    let mean = if per_sentiment.is_empty() {
        None
    } else {
        Some(per_sentiment.values().sum::<f64>() / per_sentiment.len() as f64)
    };
    Ok((classifiers, per_sentiment, mean))
}

/// Selection scores for the unlabeled pool: lexicon scores at iteration 0,
/// classifier probabilities afterwards (falling back to lexicon scores for
/// sentiments without a trained head yet).
fn selection_scores(
    corpus: &Corpus,
    vocab: &Vocabulary,
    lexicon: &SentimentLexicon,
    lemmatizer: &dyn Lemmatizer,
    classifiers: &BTreeMap<String, DocClassifierModel>,
    annotated: &BTreeSet<String>,
) -> Result<BTreeMap<String, SelectionScores>> {
    let mut scores = BTreeMap::new();
    for doc in &corpus.documents {
        if annotated.contains(&doc.id) {
            continue;
        }
        let lexicon_scores = score_document(doc, lexicon, lemmatizer)?;
        let mut s = SelectionScores::from(&lexicon_scores);
        if let Some(model) = classifiers.get("polarity") {
            let probs = model.predict_proba(vocab, &doc.text)?;
            // Label space order: negative, neutral, positive.
            s.negative = probs[0];
            s.positive = probs[2];
        }
        for (i, e) in Emotion::ALL.iter().enumerate() {
            if let Some(model) = classifiers.get(e.name()) {
                let probs = model.predict_proba(vocab, &doc.text)?;
                // Label space order: not_expressed, expressed.
                s.emotions[i] = probs[1];
            }
        }
        scores.insert(doc.id.clone(), s);
    }
    Ok(scores)
}

fn iteration_dir(run_dir: &Path, iteration: usize) -> PathBuf {
    run_dir.join(format!("iter_{iteration:03}"))
}

fn persist_iteration(
    run_dir: &Path,
    iteration: usize,
    selection: &SelectionOutcome,
    ratings: &[RatingRecord],
    labeled: &BTreeMap<(String, Sentiment), CoarseLabel>,
    classifiers: &BTreeMap<String, DocClassifierModel>,
    record: &IterationRecord,
) -> Result<()> {
    let dir = iteration_dir(run_dir, iteration);
    std::fs::create_dir_all(dir.join("checkpoints"))?;

    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    let manifest = serde_json::json!({
        "iteration": record,
        "selection": {
            "pre_dedup_count": selection.pre_dedup_count,
            "candidates": selection.candidates,
            "pool_exhausted": selection.pool_exhausted,
        },
    });
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;

    write_ratings_csv(&dir.join("ratings.csv"), ratings)?;

    let mut w = csv::Writer::from_path(dir.join("labeled_pool.csv"))?;
    w.write_record(["comment_id", "sentiment", "label"])?;
    for ((id, sentiment), label) in labeled {
        w.write_record([id.as_str(), sentiment.name(), label.name()])?;
    }
    w.flush()?;

    for (name, model) in classifiers {
        model.save(&dir.join("checkpoints").join(format!("{name}.ckpt")))?;
    }
    Ok(())
}

fn load_latest_classifiers(
    run_dir: &Path,
    upto_iteration: usize,
) -> Result<BTreeMap<String, DocClassifierModel>> {
    let mut classifiers = BTreeMap::new();
    for it in (0..upto_iteration).rev() {
        let dir = iteration_dir(run_dir, it).join("checkpoints");
        if !dir.is_dir() {
            continue;
        }
        for sentiment in Sentiment::all() {
            let path = dir.join(format!("{}.ckpt", sentiment.name()));
            if path.is_file() && !classifiers.contains_key(sentiment.name()) {
                classifiers
                    .insert(sentiment.name().to_string(), DocClassifierModel::load(&path)?);
            }
        }
        if classifiers.len() == Sentiment::all().len() {
            break;
        }
    }
    Ok(classifiers)
}

/// Run the loop from scratch. See the module docs for the round structure.
///
/// On oracle failure the current state is saved to `run_dir` (when given)
/// before the error propagates, and [`resume_loop`] continues the run.
#[allow(clippy::too_many_arguments)]
pub fn run_loop(
    corpus: &Corpus,
    vocab: &Vocabulary,
    encoder: &EncoderModel,
    lexicon: &SentimentLexicon,
    lemmatizer: &dyn Lemmatizer,
    oracle: &mut dyn RaterOracle,
    config: &LoopConfig,
    run_dir: Option<&Path>,
) -> Result<LoopOutcome> {
    let state = LoopState {
        iteration: 0,
        converged: false,
        annotated_comments: Vec::new(),
        labeled: Vec::new(),
        history: Vec::new(),
        config: config.clone(),
    };
    drive_loop(state, BTreeMap::new(), corpus, vocab, encoder, lexicon, lemmatizer, oracle, run_dir)
}

/// Continue an interrupted run from its saved state directory.
pub fn resume_loop(
    run_dir: &Path,
    corpus: &Corpus,
    vocab: &Vocabulary,
    encoder: &EncoderModel,
    lexicon: &SentimentLexicon,
    lemmatizer: &dyn Lemmatizer,
    oracle: &mut dyn RaterOracle,
) -> Result<LoopOutcome> {
    let state = LoopState::load(run_dir)?;
    let classifiers = load_latest_classifiers(run_dir, state.iteration)?;
    drive_loop(
        state,
        classifiers,
        corpus,
        vocab,
        encoder,
        lexicon,
        lemmatizer,
        oracle,
        Some(run_dir),
    )
}

#[allow(clippy::too_many_arguments)]
fn drive_loop(
    mut state: LoopState,
    mut classifiers: BTreeMap<String, DocClassifierModel>,
    corpus: &Corpus,
    vocab: &Vocabulary,
    encoder: &EncoderModel,
    lexicon: &SentimentLexicon,
    lemmatizer: &dyn Lemmatizer,
    oracle: &mut dyn RaterOracle,
    run_dir: Option<&Path>,
) -> Result<LoopOutcome> {
    let config = state.config.clone();
    let mut annotated: BTreeSet<String> = state.annotated_comments.iter().cloned().collect();
    let mut labeled: BTreeMap<(String, Sentiment), CoarseLabel> = BTreeMap::new();
    for item in &state.labeled {
        labeled.insert(
            (item.comment_id.clone(), Sentiment::parse(&item.sentiment)?),
            CoarseLabel::parse(&item.label)?,
        );
    }

    while state.iteration < config.max_iterations && !state.converged {
        let iteration = state.iteration;

        let scores =
            selection_scores(corpus, vocab, lexicon, lemmatizer, &classifiers, &annotated)?;
        let selection = select_for_annotation(&scores, config.k, &annotated);
        if selection.candidates.is_empty() {
            state.converged = true;
            break;
        }

        // Collect ratings; persist state before surfacing oracle failures so
        // the run is resumable.
        let mut ratings: Vec<RatingRecord> = Vec::new();
        let sentiments = Sentiment::all();
        for id in &selection.candidates {
            let doc = corpus
                .get(id)
                .ok_or_else(|| Error::MissingData(format!("selected id {id} not in corpus")))?;
            match oracle.rate_comment(doc, &sentiments, config.min_raters) {
                Ok(records) => ratings.extend(records),
                Err(err) => {
                    if let Some(dir) = run_dir {
                        state.save(dir)?;
                    }
                    return Err(err);
                }
            }
        }

        let reliability = filter_reliable(&ratings, config.threshold, config.min_raters)?;
        let consensus = reliability.consensus_labels();
        let kept_items = consensus.len();
        for (id, sentiment, label) in consensus {
            labeled.entry((id, sentiment)).or_insert(label);
        }
        annotated.extend(selection.candidates.iter().cloned());

        let (new_classifiers, per_sentiment, mean_f1) =
            train_and_validate(corpus, vocab, encoder, &labeled, &config, iteration)?;
        classifiers = new_classifiers;

        let record = IterationRecord {
            iteration,
            selected: selection.candidates.len(),
            rated_items: ratings.len(),
            kept_items,
            pool_size: labeled.len(),
            validation_weighted_f1: mean_f1,
            per_sentiment_f1: per_sentiment,
        };

        // Convergence compares against the previous round's metric; a missing
        // previous metric counts as 0, so an infinite epsilon stops after
        // the first measured round.
        let previous_f1 = state
            .history
            .last()
            .and_then(|r: &IterationRecord| r.validation_weighted_f1)
            .unwrap_or(0.0);
        state.history.push(record.clone());
        state.iteration += 1;
        state.annotated_comments = annotated.iter().cloned().collect();
        state.labeled = labeled
            .iter()
            .map(|((id, s), l)| LabeledItem {
                comment_id: id.clone(),
                sentiment: s.name().into(),
                label: l.name().into(),
            })
            .collect();

        if let Some(now) = record.validation_weighted_f1 {
            if (now - previous_f1).abs() < config.convergence_epsilon {
                state.converged = true;
            }
        }

        if let Some(dir) = run_dir {
            persist_iteration(
                dir,
                iteration,
                &selection,
                &ratings,
                &labeled,
                &classifiers,
                &record,
            )?;
            state.save(dir)?;
        }
    }

    Ok(LoopOutcome { state, classifiers })
}
