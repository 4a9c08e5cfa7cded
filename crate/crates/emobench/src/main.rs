//! Command-line entry point. Each subcommand is a thin wrapper over the
//! library; see the `examples/` directory for the same capabilities driven
//! programmatically.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use emobench::annotation::{
    self, emotion_label_space, krippendorff_alpha, polarity_label_space, select_for_annotation,
    LoopConfig, RecordedOracle, SelectionScores, SyntheticOracle,
};
use emobench::corpus::{Corpus, IngestOptions, ScriptPredicate, Split};
use emobench::encoder::{train_mlm, EncoderModel, MaskedScorer, TrainSpec};
use emobench::lexicon::{
    score_document, IdentityLemmatizer, Lemmatizer, RuleLemmatizer, SentimentLexicon,
};
use emobench::manifest::{
    aggregate_results, digest_bytes, run_comparison, ComparisonInputs, EncoderOverrides,
    ExperimentManifest, Stamp,
};
use emobench::sentiments::{Emotion, LexiconCategory, Sentiment};
use emobench::tasks::{
    evaluate, fine_tune_doc_classifier, fine_tune_token_tagger, ClassifierOptions,
    DocClassifierModel, DocLabelDataset, TaggerModel, TokenTaggingDataset,
};
use emobench::tokenizers::{
    oov_rate, train_char_vocab, train_morpheme_vocab, train_subword_vocab, train_word_vocab,
    MorphRuleTable, Scheme, Vocabulary,
};

/// Root directory for relative output paths.
const OUTPUT_ROOT_ENV: &str = "EMOBENCH_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "emobench", version, about = "Tokenization, toy masked-LM, and emotion annotation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, deduplicate, and split a raw JSONL corpus.
    Ingest(IngestArgs),
    /// Induce a vocabulary for one tokenization scheme.
    TrainTokenizer(TrainTokenizerArgs),
    /// Pre-train the toy encoder with the fill-in-the-blank objective.
    TrainMlm(TrainMlmArgs),
    /// Pseudo-perplexity and OOV rate of a trained model.
    EvalLm(EvalLmArgs),
    /// Fine-tune a downstream head on top of a trained encoder.
    Finetune(FinetuneArgs),
    /// Score a fine-tuned model against gold labels.
    Evaluate(EvaluateArgs),
    /// Unsupervised lexicon scores for every document.
    LexiconScore(LexiconScoreArgs),
    /// Extreme-score selection of annotation candidates.
    Select(SelectArgs),
    /// Krippendorff alpha and per-item reliability filtering.
    Alpha(AlphaArgs),
    /// The iterative annotate-train-predict loop.
    #[command(subcommand)]
    Loop(LoopCommand),
    /// Train and evaluate every tokenization arm of a manifest.
    Compare(CompareArgs),
    /// Aggregate stage outputs into a summary (no recomputation).
    Report(ReportArgs),
}

fn out_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => Path::new(&root).join(path),
        None => path.to_path_buf(),
    }
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

/// Digest of the effective command configuration: the stamp for artifacts
/// produced outside a manifest run.
fn config_digest(value: &serde_json::Value) -> String {
    digest_bytes(&serde_json::to_vec(value).expect("serializable config"))
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    min_words: usize,
    /// Script predicate: any, latin, hebrew, arabic, cyrillic, greek, or a
    /// hex range like 0590-05FF.
    #[arg(long, default_value = "any")]
    script: String,
    /// Train/validation/test fractions.
    #[arg(long, default_value = "0.70,0.15,0.15")]
    fractions: String,
}

fn cmd_ingest(args: IngestArgs) -> anyhow::Result<()> {
    let records = Corpus::read_raw_jsonl(&args.input)?;
    let opts = IngestOptions {
        script: ScriptPredicate::named(&args.script)?,
        min_words: args.min_words,
    };
    let mut corpus = Corpus::ingest(records, &opts)?.dedup();
    let parts: Vec<f64> = args
        .fractions
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .context("parsing --fractions")?;
    if parts.len() != 3 {
        bail!("--fractions needs three comma-separated values");
    }
    corpus.assign_splits((parts[0], parts[1], parts[2]), args.seed)?;

    let out = out_path(&args.out);
    ensure_parent(&out)?;
    corpus.write_jsonl(&out)?;

    let digest = config_digest(&serde_json::json!({
        "command": "ingest",
        "min_words": args.min_words,
        "script": args.script,
        "fractions": args.fractions,
        "seed": args.seed,
    }));
    let stamp = Stamp::new(digest, args.seed);
    let provenance_path = out.with_extension("provenance.json");
    let body = serde_json::json!({
        "stamp": stamp,
        "provenance": corpus.provenance,
        "documents": corpus.len(),
    });
    std::fs::write(&provenance_path, serde_json::to_string_pretty(&body)? + "\n")?;
    println!(
        "ingested {} -> {} documents (rejected_short {}, rejected_no_target_script {}, deduplicated {})",
        corpus.provenance.ingested,
        corpus.len(),
        corpus.provenance.rejected_short,
        corpus.provenance.rejected_no_target_script,
        corpus.provenance.deduplicated
    );
    println!("wrote {} and {}", out.display(), provenance_path.display());
    Ok(())
}

#[derive(Args)]
struct TrainTokenizerArgs {
    /// char | subword | morpheme | word
    #[arg(long)]
    scheme: String,
    /// Target vocabulary size (subword and morpheme schemes).
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Affix rule TSV (morpheme scheme).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Term-frequency trim quantile (word scheme).
    #[arg(long, default_value_t = 0.05)]
    trim_quantile: f64,
    /// Corpus split to train on.
    #[arg(long, default_value = "train")]
    split: String,
}

fn split_by_name(corpus: &Corpus, name: &str) -> anyhow::Result<Corpus> {
    let split = match name {
        "train" => Split::Train,
        "validation" => Split::Validation,
        "test" => Split::Test,
        "all" => {
            return Ok(Corpus {
                documents: corpus.documents.clone(),
                provenance: Default::default(),
            })
        }
        other => bail!("unknown split {other}"),
    };
    let documents: Vec<_> = corpus.by_split(split).cloned().collect();
    if documents.is_empty() {
        bail!("corpus has no documents in the {name} split");
    }
    Ok(Corpus { documents, provenance: Default::default() })
}

fn cmd_train_tokenizer(args: TrainTokenizerArgs) -> anyhow::Result<()> {
    let corpus = Corpus::read_jsonl(&args.corpus)?;
    let corpus = split_by_name(&corpus, &args.split)?;
    let scheme = Scheme::parse(&args.scheme)?;
    let (vocab, reached) = match scheme {
        Scheme::Char => (train_char_vocab(&corpus, false)?, true),
        Scheme::Word => (train_word_vocab(&corpus, args.trim_quantile)?, true),
        Scheme::SubwordNgram => {
            let size = args.size.ok_or_else(|| anyhow!("--size required for subword"))?;
            let trained = train_subword_vocab(&corpus, size)?;
            (trained.vocabulary, trained.target_reached)
        }
        Scheme::SubwordMorpheme => {
            let size = args.size.ok_or_else(|| anyhow!("--size required for morpheme"))?;
            let rules_path =
                args.rules.as_ref().ok_or_else(|| anyhow!("--rules required for morpheme"))?;
            let rules = MorphRuleTable::load(rules_path, 2)?;
            let trained = train_morpheme_vocab(&corpus, &rules, size)?;
            (trained.vocabulary, trained.target_reached)
        }
    };
    let out = out_path(&args.out);
    ensure_parent(&out)?;
    vocab.save(&out)?;
    println!("trained {} vocabulary: {} tokens -> {}", scheme, vocab.size(), out.display());
    if !reached {
        eprintln!("warning: corpus too small to reach the requested size");
    }
    Ok(())
}

fn load_vocab(path: &Path, rules: Option<&Path>) -> anyhow::Result<Vocabulary> {
    let vocab = Vocabulary::load(path)?;
    match (vocab.scheme, rules) {
        (Scheme::SubwordMorpheme, Some(rules_path)) => {
            Ok(vocab.with_rules(MorphRuleTable::load(rules_path, 2)?))
        }
        (Scheme::SubwordMorpheme, None) => {
            eprintln!(
                "warning: morpheme vocabulary loaded without --rules; words segment whole"
            );
            Ok(vocab)
        }
        _ => Ok(vocab),
    }
}

#[derive(Args)]
struct TrainMlmArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Loss curve CSV path.
    #[arg(long)]
    loss_curve: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    epochs: usize,
    #[arg(long, default_value_t = 5e-5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.15)]
    mask_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    num_layers: usize,
    #[arg(long, default_value_t = 4)]
    num_heads: usize,
    #[arg(long, default_value_t = 64)]
    model_dim: usize,
    #[arg(long, default_value_t = 256)]
    ffn_dim: usize,
    #[arg(long, default_value_t = 128)]
    max_seq_len: usize,
    #[arg(long, default_value = "train")]
    split: String,
}

fn cmd_train_mlm(args: TrainMlmArgs) -> anyhow::Result<()> {
    let corpus = Corpus::read_jsonl(&args.corpus)?;
    let train = split_by_name(&corpus, &args.split)?;
    let vocab = load_vocab(&args.vocab, args.rules.as_deref())?;
    let overrides = EncoderOverrides {
        num_layers: Some(args.num_layers),
        num_heads: Some(args.num_heads),
        model_dim: Some(args.model_dim),
        ffn_dim: Some(args.ffn_dim),
        max_seq_len: Some(args.max_seq_len),
        ..EncoderOverrides::default()
    };
    let config = overrides.apply(vocab.size());
    let spec = TrainSpec {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        mask_fraction: args.mask_fraction,
        seed: args.seed,
        ..TrainSpec::default()
    };
    let mut model = EncoderModel::init(config, args.seed)?.with_mask_id(vocab.mask_id());
    let sequences = model.sequences_from_corpus(&train, &vocab);
    let curve = train_mlm(&mut model, &sequences, &vocab, &spec)?;

    let out = out_path(&args.out);
    ensure_parent(&out)?;
    model.save(&out)?;
    println!(
        "trained {} steps, final loss {:.4} -> {}",
        curve.points.len(),
        curve.final_loss().unwrap_or(f64::NAN),
        out.display()
    );
    if let Some(curve_path) = args.loss_curve {
        let curve_path = out_path(&curve_path);
        ensure_parent(&curve_path)?;
        curve.write_csv(&curve_path)?;
        println!("loss curve -> {}", curve_path.display());
    }
    Ok(())
}

#[derive(Args)]
struct EvalLmArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "test")]
    split: String,
    /// Max documents scored for pseudo-perplexity.
    #[arg(long, default_value_t = 32)]
    sample: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_eval_lm(args: EvalLmArgs) -> anyhow::Result<()> {
    let corpus = Corpus::read_jsonl(&args.corpus)?;
    let eval = split_by_name(&corpus, &args.split)?;
    let vocab = load_vocab(&args.vocab, args.rules.as_deref())?;
    let model = EncoderModel::load(&args.checkpoint)?;

    let mut log_probs = Vec::new();
    for doc in eval.documents.iter().take(args.sample) {
        let mut ids = vocab.encode(&doc.text);
        ids.truncate(model.config.max_seq_len);
        if ids.is_empty() {
            continue;
        }
        for pos in 0..ids.len() {
            log_probs.push(model.true_token_log_prob(&ids, pos)?);
        }
    }
    let pp = emobench::encoder::perplexity_from_log_probs(&log_probs)?;
    let oov = oov_rate(&vocab, &eval)?;

    let digest = config_digest(&serde_json::json!({
        "command": "eval-lm", "split": args.split, "sample": args.sample,
    }));
    let body = serde_json::json!({
        "stamp": Stamp::new(digest, 0),
        "pseudo_perplexity": pp,
        "oov_rate": oov,
        "scored_tokens": log_probs.len(),
    });
    println!("{}", serde_json::to_string_pretty(&body)?);
    if let Some(out) = args.out {
        let out = out_path(&out);
        ensure_parent(&out)?;
        std::fs::write(&out, serde_json::to_string_pretty(&body)? + "\n")?;
    }
    Ok(())
}

#[derive(Args)]
struct FinetuneArgs {
    /// ner | pos | polarity | emotion:<name>
    #[arg(long)]
    task: String,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// CoNLL TSV for tagging tasks; labels CSV for document tasks.
    #[arg(long)]
    data: PathBuf,
    /// Cleaned corpus (document tasks).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 6)]
    epochs: usize,
    #[arg(long, default_value_t = 5e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = false)]
    freeze_encoder: bool,
}

enum TaskKind {
    Tagging,
    Doc { sentiment: String, space: Vec<String> },
}

fn parse_task(task: &str) -> anyhow::Result<TaskKind> {
    match task {
        "ner" | "pos" => Ok(TaskKind::Tagging),
        "polarity" => Ok(TaskKind::Doc {
            sentiment: "polarity".into(),
            space: polarity_label_space(),
        }),
        other => match other.strip_prefix("emotion:") {
            Some(name) => {
                Emotion::parse(name)
                    .ok_or_else(|| anyhow!("unknown emotion {name}"))?;
                Ok(TaskKind::Doc { sentiment: name.into(), space: emotion_label_space() })
            }
            None => bail!("unknown task {other}; expected ner|pos|polarity|emotion:<name>"),
        },
    }
}

fn cmd_finetune(args: FinetuneArgs) -> anyhow::Result<()> {
    let vocab = load_vocab(&args.vocab, args.rules.as_deref())?;
    let encoder = EncoderModel::load(&args.checkpoint)?;
    let spec = TrainSpec {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        seed: args.seed,
        ..TrainSpec::default()
    };
    let out = out_path(&args.out);
    ensure_parent(&out)?;
    match parse_task(&args.task)? {
        TaskKind::Tagging => {
            let data = TokenTaggingDataset::read_conll(&args.data)?;
            let (model, curve) =
                fine_tune_token_tagger(&encoder, &vocab, &data, &spec, args.freeze_encoder)?;
            model.save(&out)?;
            println!(
                "fine-tuned {} tagger over {} tags, final loss {:.4} -> {}",
                args.task,
                model.tag_inventory.len(),
                curve.final_loss().unwrap_or(f64::NAN),
                out.display()
            );
        }
        TaskKind::Doc { sentiment, space } => {
            let corpus_path =
                args.corpus.ok_or_else(|| anyhow!("--corpus required for document tasks"))?;
            let corpus = Corpus::read_jsonl(&corpus_path)?;
            let all = DocLabelDataset::from_csv(&args.data, &sentiment, space)?;
            let train_items: Vec<(String, String)> = all
                .items
                .iter()
                .filter(|(id, _)| {
                    corpus.get(id).map(|d| d.split == Split::Train).unwrap_or(false)
                })
                .cloned()
                .collect();
            let train = DocLabelDataset::new(train_items, all.label_space.clone())?;
            let opts = ClassifierOptions {
                freeze_encoder: args.freeze_encoder,
                ..ClassifierOptions::default()
            };
            let (model, report) =
                fine_tune_doc_classifier(&encoder, &vocab, &corpus, &train, &spec, &opts)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            model.save(&out)?;
            println!(
                "fine-tuned {sentiment} classifier on {} documents, final loss {:.4} -> {}",
                train.items.len(),
                report.curve.final_loss().unwrap_or(f64::NAN),
                out.display()
            );
        }
    }
    Ok(())
}

#[derive(Args)]
struct EvaluateArgs {
    /// ner | pos | polarity | emotion:<name>
    #[arg(long)]
    task: String,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let vocab = load_vocab(&args.vocab, args.rules.as_deref())?;
    let out = out_path(&args.out);
    ensure_parent(&out)?;
    let report = match parse_task(&args.task)? {
        TaskKind::Tagging => {
            let data = TokenTaggingDataset::read_conll(&args.data)?;
            let model = TaggerModel::load(&args.checkpoint)?;
            let (pred, gold) = model.predict_dataset(&vocab, &data)?;
            evaluate(&pred, &gold, &data.tag_inventory)?
        }
        TaskKind::Doc { sentiment, space } => {
            let corpus_path =
                args.corpus.ok_or_else(|| anyhow!("--corpus required for document tasks"))?;
            let corpus = Corpus::read_jsonl(&corpus_path)?;
            let model = DocClassifierModel::load(&args.checkpoint)?;
            let data = DocLabelDataset::from_csv(&args.data, &sentiment, space.clone())?;
            let wanted = match args.split.as_str() {
                "train" => Split::Train,
                "validation" => Split::Validation,
                "test" => Split::Test,
                other => bail!("unknown split {other}"),
            };
            let mut pred = Vec::new();
            let mut gold = Vec::new();
            for (id, label) in &data.items {
                let Some(doc) = corpus.get(id) else { continue };
                if doc.split != wanted {
                    continue;
                }
                pred.push(model.predict_label(&vocab, &doc.text)?);
                gold.push(label.clone());
            }
            if pred.is_empty() {
                bail!("no labeled documents in the {} split", args.split);
            }
            evaluate(&pred, &gold, &space)?
        }
    };
    report.write_json(&out)?;
    report.write_summary_csv(&out.with_extension("csv"))?;
    println!(
        "{}: accuracy {:.4}, weighted F1 {:.4} over {} items -> {}",
        args.task, report.accuracy, report.weighted_f1, report.total, out.display()
    );
    Ok(())
}

#[derive(Args)]
struct LexiconScoreArgs {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Affix rule TSV; enables the rule lemmatizer.
    #[arg(long)]
    lemmatizer_rules: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_lexicon_score(args: LexiconScoreArgs) -> anyhow::Result<()> {
    let (lexicon, warnings) = SentimentLexicon::load(&args.lexicon)?;
    if warnings.duplicate_rows > 0 {
        eprintln!("warning: {} duplicate lexicon rows (last wins)", warnings.duplicate_rows);
    }
    let corpus = Corpus::read_jsonl(&args.corpus)?;
    let lemmatizer: Box<dyn Lemmatizer> = match &args.lemmatizer_rules {
        Some(path) => Box::new(RuleLemmatizer::new(MorphRuleTable::load(path, 2)?)),
        None => Box::new(IdentityLemmatizer),
    };

    let out = out_path(&args.out);
    ensure_parent(&out)?;
    let digest = config_digest(&serde_json::json!({"command": "lexicon-score"}));
    let stamp = Stamp::new(digest, 0);
    let mut f = std::fs::File::create(&out)?;
    use std::io::Write;
    writeln!(f, "{}", stamp.csv_header())?;
    let names: Vec<&str> = LexiconCategory::all().iter().map(|c| c.name()).collect();
    writeln!(f, "document_id,{},polarity_scalar,token_count", names.join(","))?;
    for doc in &corpus.documents {
        let v = score_document(doc, &lexicon, lemmatizer.as_ref())?;
        let scores: Vec<String> = v.scores().iter().map(|s| s.to_string()).collect();
        writeln!(f, "{},{},{},{}", doc.id, scores.join(","), v.polarity(), v.token_count)?;
    }
    println!("scored {} documents -> {}", corpus.len(), out.display());
    Ok(())
}

#[derive(Args)]
struct SelectArgs {
    /// Score CSV produced by lexicon-score.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value_t = 75)]
    k: usize,
    /// File of already-labeled ids, one per line.
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_select(args: SelectArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.scores)?;
    let mut scores: BTreeMap<String, SelectionScores> = BTreeMap::new();
    let mut header: Option<Vec<String>> = None;
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match &header {
            None => header = Some(cells.iter().map(|c| c.to_string()).collect()),
            Some(cols) => {
                let mut emotions = [0.0; 8];
                let mut positive = 0.0;
                let mut negative = 0.0;
                for (col, cell) in cols.iter().zip(&cells).skip(1) {
                    let value: f64 = match cell.parse() {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    if col == "positive" {
                        positive = value;
                    } else if col == "negative" {
                        negative = value;
                    } else if let Some(e) = Emotion::parse(col) {
                        emotions[Emotion::ALL.iter().position(|x| *x == e).unwrap()] = value;
                    }
                }
                scores.insert(
                    cells[0].to_string(),
                    SelectionScores { positive, negative, emotions },
                );
            }
        }
    }
    let exclude: BTreeSet<String> = match &args.exclude {
        Some(path) => std::fs::read_to_string(path)?
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect(),
        None => BTreeSet::new(),
    };
    let outcome = select_for_annotation(&scores, args.k, &exclude);
    let out = out_path(&args.out);
    ensure_parent(&out)?;
    use std::io::Write;
    let mut f = std::fs::File::create(&out)?;
    writeln!(f, "comment_id")?;
    for id in &outcome.candidates {
        writeln!(f, "{id}")?;
    }
    println!(
        "selected {} candidates (pre-dedup {}) -> {}",
        outcome.candidates.len(),
        outcome.pre_dedup_count,
        out.display()
    );
    if outcome.pool_exhausted {
        eprintln!("warning: pool smaller than requested k; returned everything available");
    }
    Ok(())
}

#[derive(Args)]
struct AlphaArgs {
    /// Ratings CSV: comment_id,rater_id,sentiment,raw_rating.
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    threshold: f64,
    #[arg(long, default_value_t = 3)]
    min_raters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_alpha(args: AlphaArgs) -> anyhow::Result<()> {
    let records = annotation::read_ratings_csv(&args.ratings)?;
    let report = annotation::filter_reliable(&records, args.threshold, args.min_raters)?;

    // Corpus-level alpha per sentiment.
    let mut corpus_alpha: BTreeMap<String, f64> = BTreeMap::new();
    for sentiment in Sentiment::all() {
        let items: Vec<Vec<emobench::sentiments::CoarseLabel>> = report
            .items
            .iter()
            .filter(|i| i.sentiment == sentiment)
            .map(|i| {
                i.label_counts
                    .iter()
                    .flat_map(|(&l, &c)| std::iter::repeat_n(l, c))
                    .collect()
            })
            .collect();
        if let Ok(alpha) = krippendorff_alpha(&items) {
            corpus_alpha.insert(sentiment.name().to_string(), alpha);
        }
    }

    let digest = config_digest(&serde_json::json!({
        "command": "alpha", "threshold": args.threshold, "min_raters": args.min_raters,
    }));
    let body = serde_json::json!({
        "stamp": Stamp::new(digest, 0),
        "corpus_alpha": corpus_alpha,
        "kept_items": report.kept_count(),
        "total_items": report.items.len(),
        "report": report,
    });
    println!(
        "kept {}/{} items at threshold {}",
        report.kept_count(),
        report.items.len(),
        args.threshold
    );
    for (s, a) in &corpus_alpha {
        println!("  corpus alpha[{s}] = {a:.4}");
    }
    if let Some(out) = args.out {
        let out = out_path(&out);
        ensure_parent(&out)?;
        std::fs::write(&out, serde_json::to_string_pretty(&body)? + "\n")?;
        println!("report -> {}", out.display());
    }
    Ok(())
}

#[derive(Subcommand)]
enum LoopCommand {
    /// Start a fresh loop run.
    Run(LoopRunArgs),
    /// Continue an interrupted run from its directory.
    Resume(LoopResumeArgs),
}

#[derive(Args)]
struct LoopSharedArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Pre-trained encoder checkpoint; a seeded fresh encoder is used when
    /// absent.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    lexicon: PathBuf,
    /// Recorded ratings CSV; absent means the synthetic oracle reads
    /// planted document labels.
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Synthetic oracle label-flip probability.
    #[arg(long, default_value_t = 0.0)]
    flip_prob: f64,
}

#[derive(Args)]
struct LoopRunArgs {
    #[command(flatten)]
    shared: LoopSharedArgs,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 75)]
    k: usize,
    #[arg(long, default_value_t = 0.75)]
    threshold: f64,
    #[arg(long, default_value_t = 3)]
    min_raters: usize,
    #[arg(long, default_value_t = 3)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0.01)]
    convergence_epsilon: f64,
    #[arg(long, default_value_t = 6)]
    epochs: usize,
    #[arg(long, default_value_t = 5e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LoopResumeArgs {
    #[command(flatten)]
    shared: LoopSharedArgs,
    /// Run directory holding state.json.
    dir: PathBuf,
}

struct LoopInputs {
    corpus: Corpus,
    vocab: Vocabulary,
    encoder: EncoderModel,
    lexicon: SentimentLexicon,
    lemmatizer: Box<dyn Lemmatizer>,
    oracle: Box<dyn annotation::RaterOracle>,
}

fn loop_inputs(shared: &LoopSharedArgs, seed: u64) -> anyhow::Result<LoopInputs> {
    let corpus = Corpus::read_jsonl(&shared.corpus)?;
    let vocab = load_vocab(&shared.vocab, shared.rules.as_deref())?;
    let encoder = match &shared.checkpoint {
        Some(path) => EncoderModel::load(path)?,
        None => {
            let cfg = emobench::encoder::EncoderConfig::new(vocab.size())
                .with_dims(1, 2, 32, 64)
                .with_max_seq_len(32);
            EncoderModel::init(cfg, seed)?.with_mask_id(vocab.mask_id())
        }
    };
    let (lexicon, _) = SentimentLexicon::load(&shared.lexicon)?;
    let lemmatizer: Box<dyn Lemmatizer> = match &shared.rules {
        Some(path) => Box::new(RuleLemmatizer::new(MorphRuleTable::load(path, 2)?)),
        None => Box::new(IdentityLemmatizer),
    };
    let oracle: Box<dyn annotation::RaterOracle> = match &shared.ratings {
        Some(path) => Box::new(RecordedOracle::from_csv(path)?),
        None => Box::new(SyntheticOracle::new(shared.flip_prob, seed)),
    };
    Ok(LoopInputs { corpus, vocab, encoder, lexicon, lemmatizer, oracle })
}

fn print_loop_outcome(outcome: &annotation::LoopOutcome) {
    for record in &outcome.state.history {
        println!(
            "iteration {}: selected {}, kept {}, pool {}, validation weighted F1 {}",
            record.iteration,
            record.selected,
            record.kept_items,
            record.pool_size,
            record
                .validation_weighted_f1
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "n/a".into())
        );
    }
    println!(
        "{} after {} iterations, labeled pool {}",
        if outcome.state.converged { "converged" } else { "stopped" },
        outcome.state.iteration,
        outcome.state.labeled.len()
    );
}

fn cmd_loop_run(args: LoopRunArgs) -> anyhow::Result<()> {
    let mut inputs = loop_inputs(&args.shared, args.seed)?;
    let config = LoopConfig {
        k: args.k,
        threshold: args.threshold,
        min_raters: args.min_raters,
        max_iterations: args.max_iterations,
        convergence_epsilon: args.convergence_epsilon,
        train_spec: TrainSpec {
            epochs: args.epochs,
            learning_rate: args.learning_rate,
            batch_size: args.batch_size,
            ..TrainSpec::default()
        },
        freeze_encoder: false,
        seed: args.seed,
    };
    let out_dir = out_path(&args.out_dir);
    let outcome = annotation::run_loop(
        &inputs.corpus,
        &inputs.vocab,
        &inputs.encoder,
        &inputs.lexicon,
        inputs.lemmatizer.as_ref(),
        inputs.oracle.as_mut(),
        &config,
        Some(&out_dir),
    )?;
    print_loop_outcome(&outcome);
    println!("state -> {}", out_dir.join("state.json").display());
    Ok(())
}

fn cmd_loop_resume(args: LoopResumeArgs) -> anyhow::Result<()> {
    let state = annotation::LoopState::load(&args.dir)?;
    let mut inputs = loop_inputs(&args.shared, state.config.seed)?;
    let outcome = annotation::resume_loop(
        &args.dir,
        &inputs.corpus,
        &inputs.vocab,
        &inputs.encoder,
        &inputs.lexicon,
        inputs.lemmatizer.as_ref(),
        inputs.oracle.as_mut(),
    )?;
    print_loop_outcome(&outcome);
    Ok(())
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let (manifest, digest) = ExperimentManifest::load(&args.manifest)?;
    let base_dir = args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let inputs = ComparisonInputs::from_manifest(&manifest, &base_dir)?;
    let report = run_comparison(&manifest, &digest, &inputs)?;

    let out_dir = out_path(&args.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    report.write_json(&out_dir.join("comparison.json"))?;
    report.write_csv(&out_dir.join("comparison.csv"))?;

    for row in &report.rows {
        let fmt = |v: &Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<18} pp {:>10}  oov {:>8}  ner {:>8}  pos {:>8}  polarity {:>8}{}",
            row.arm,
            fmt(&row.pseudo_perplexity),
            fmt(&row.oov_rate),
            fmt(&row.ner_f1),
            fmt(&row.pos_f1),
            fmt(&row.polarity_f1),
            if row.errors.is_empty() { String::new() } else { format!("  [{}]", row.errors.join("; ")) }
        );
    }
    println!("report -> {}", out_dir.join("comparison.csv").display());
    if report.any_failures() {
        bail!("one or more comparison stages failed (partial report written)");
    }
    Ok(())
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let summary = aggregate_results(&args.results)?;
    let out_dir = out_path(&args.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    summary.write_json(&out_dir.join("summary.json"))?;
    summary.write_csv(&out_dir.join("tables.csv"))?;
    println!(
        "aggregated {} artifacts ({} warnings) -> {}",
        summary.sources.len(),
        summary.warnings.len(),
        out_dir.join("summary.json").display()
    );
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::TrainTokenizer(args) => cmd_train_tokenizer(args),
        Command::TrainMlm(args) => cmd_train_mlm(args),
        Command::EvalLm(args) => cmd_eval_lm(args),
        Command::Finetune(args) => cmd_finetune(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::LexiconScore(args) => cmd_lexicon_score(args),
        Command::Select(args) => cmd_select(args),
        Command::Alpha(args) => cmd_alpha(args),
        Command::Loop(LoopCommand::Run(args)) => cmd_loop_run(args),
        Command::Loop(LoopCommand::Resume(args)) => cmd_loop_resume(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Report(args) => cmd_report(args),
    }
}
