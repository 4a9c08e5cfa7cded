//! End-to-end command-line flows over the compiled binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use emobench::synthetic::{planted_sentiment_corpus, PlantedConfig};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_emobench")
}

fn run(args: &[&str]) -> (bool, String, String) {
    let output = Command::new(bin()).args(args).output().expect("spawn emobench");
    (
        output.status.success(),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn run_ok(args: &[&str]) -> String {
    let (ok, stdout, stderr) = run(args);
    assert!(ok, "command {args:?} failed:\n{stdout}\n{stderr}");
    stdout
}

fn write_planted(base: &Path) -> (PathBuf, PathBuf) {
    let (corpus, lexicon) = planted_sentiment_corpus(&PlantedConfig {
        num_docs: 250,
        words_per_doc: 8,
        filler_vocab: 60,
        neutral_fraction: 0.2,
        seed: 21,
    });
    let raw = base.join("raw.jsonl");
    {
        use std::io::Write;
        let mut f = std::fs::File::create(&raw).unwrap();
        for d in &corpus.documents {
            let rec = serde_json::json!({
                "id": d.id, "source": d.source, "section": d.section,
                "title": d.title, "text": d.text, "date": null,
                "labels": d.labels,
            });
            writeln!(f, "{rec}").unwrap();
        }
    }
    let lex = base.join("lexicon.tsv");
    lexicon.save(&lex).unwrap();
    (raw, lex)
}

#[test]
fn ingest_rejects_and_reports_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.jsonl");
    std::fs::write(
        &raw,
        concat!(
            r#"{"id":"a","text":"three good words here"}"#,
            "\n",
            r#"{"id":"b","text":"too short"}"#,
            "\n",
            r#"{"id":"c","text":"three good words here"}"#,
            "\n",
            r#"{"id":"d","text":"another fine comment right here"}"#,
            "\n",
            r#"{"id":"e","text":"one more acceptable comment present"}"#,
            "\n",
        ),
    )
    .unwrap();
    let out = dir.path().join("clean.jsonl");
    let stdout = run_ok(&[
        "ingest",
        "--in",
        raw.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
        "--min-words",
        "3",
    ]);
    assert!(stdout.contains("rejected_short 1"), "{stdout}");
    assert!(stdout.contains("deduplicated 1"), "{stdout}");
    let provenance: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.with_extension("provenance.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(provenance["provenance"]["ingested"], 5);
    assert_eq!(provenance["documents"], 3);
    assert!(provenance["stamp"]["manifest_digest"].is_string());
}

#[test]
fn lexicon_select_alpha_flow() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let (raw, lex) = write_planted(base);
    let clean = base.join("clean.jsonl");
    run_ok(&[
        "ingest",
        "--in",
        raw.to_str().unwrap(),
        "--out",
        clean.to_str().unwrap(),
        "--seed",
        "5",
        "--min-words",
        "2",
    ]);

    let scores = base.join("scores.csv");
    run_ok(&[
        "lexicon-score",
        "--lexicon",
        lex.to_str().unwrap(),
        "--corpus",
        clean.to_str().unwrap(),
        "--out",
        scores.to_str().unwrap(),
    ]);
    let scores_text = std::fs::read_to_string(&scores).unwrap();
    assert!(scores_text.starts_with("# manifest_digest="));
    assert!(scores_text.lines().nth(1).unwrap().starts_with("document_id,anger,"));

    let picked = base.join("picked.csv");
    let stdout = run_ok(&[
        "select",
        "--scores",
        scores.to_str().unwrap(),
        "--k",
        "5",
        "--out",
        picked.to_str().unwrap(),
    ]);
    assert!(stdout.contains("pre-dedup 90"), "2*5*9 rankings: {stdout}");

    // Hand-built ratings: two unanimous items, one split item.
    let ratings = base.join("ratings.csv");
    std::fs::write(
        &ratings,
        "comment_id,rater_id,sentiment,raw_rating\n\
         c1,r1,anger,2\nc1,r2,anger,1\nc1,r3,anger,2\n\
         c2,r1,anger,0\nc2,r2,anger,0\nc2,r3,anger,0\n\
         c3,r1,anger,2\nc3,r2,anger,0\nc3,r3,anger,2\n",
    )
    .unwrap();
    let alpha_out = base.join("alpha.json");
    let stdout = run_ok(&[
        "alpha",
        "--ratings",
        ratings.to_str().unwrap(),
        "--out",
        alpha_out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("kept 2/3"), "{stdout}");
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&alpha_out).unwrap()).unwrap();
    assert_eq!(body["kept_items"], 2);
    assert!(body["corpus_alpha"]["anger"].as_f64().unwrap() < 1.0);
}

#[test]
fn loop_run_and_resume_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let (raw, lex) = write_planted(base);
    let clean = base.join("clean.jsonl");
    run_ok(&[
        "ingest",
        "--in",
        raw.to_str().unwrap(),
        "--out",
        clean.to_str().unwrap(),
        "--seed",
        "5",
        "--min-words",
        "2",
    ]);
    let vocab = base.join("vocab.txt");
    run_ok(&[
        "train-tokenizer",
        "--scheme",
        "word",
        "--corpus",
        clean.to_str().unwrap(),
        "--out",
        vocab.to_str().unwrap(),
        "--trim-quantile",
        "0",
        "--split",
        "all",
    ]);

    let run_dir = base.join("loop_run");
    let stdout = run_ok(&[
        "loop",
        "run",
        "--corpus",
        clean.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--lexicon",
        lex.to_str().unwrap(),
        "--out-dir",
        run_dir.to_str().unwrap(),
        "--k",
        "6",
        "--max-iterations",
        "1",
        "--epochs",
        "2",
        "--seed",
        "9",
    ]);
    assert!(stdout.contains("iteration 0"), "{stdout}");
    assert!(run_dir.join("state.json").is_file());
    assert!(run_dir.join("iter_000").join("labeled_pool.csv").is_file());
    assert!(run_dir.join("iter_000").join("ratings.csv").is_file());

    // Raise the cap in the saved state, then resume one more iteration.
    let state_path = run_dir.join("state.json");
    let mut state: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&state_path).unwrap()).unwrap();
    state["config"]["max_iterations"] = serde_json::json!(2);
    std::fs::write(&state_path, serde_json::to_string_pretty(&state).unwrap()).unwrap();
    let stdout = run_ok(&[
        "loop",
        "resume",
        run_dir.to_str().unwrap(),
        "--corpus",
        clean.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--lexicon",
        lex.to_str().unwrap(),
    ]);
    assert!(stdout.contains("iteration 1"), "resume should add an iteration: {stdout}");
    assert!(run_dir.join("iter_001").join("manifest.json").is_file());
}

#[test]
fn finetune_and_evaluate_polarity_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let (raw, _lex) = write_planted(base);
    let clean = base.join("clean.jsonl");
    run_ok(&[
        "ingest",
        "--in",
        raw.to_str().unwrap(),
        "--out",
        clean.to_str().unwrap(),
        "--seed",
        "5",
        "--min-words",
        "2",
    ]);
    let vocab = base.join("vocab.txt");
    run_ok(&[
        "train-tokenizer",
        "--scheme",
        "subword",
        "--size",
        "260",
        "--corpus",
        clean.to_str().unwrap(),
        "--out",
        vocab.to_str().unwrap(),
    ]);
    let ckpt = base.join("encoder.ckpt");
    run_ok(&[
        "train-mlm",
        "--corpus",
        clean.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        ckpt.to_str().unwrap(),
        "--epochs",
        "2",
        "--learning-rate",
        "1e-3",
        "--batch-size",
        "16",
        "--num-layers",
        "1",
        "--num-heads",
        "2",
        "--model-dim",
        "32",
        "--ffn-dim",
        "64",
        "--max-seq-len",
        "48",
    ]);

    // Pull gold polarity labels from the planted corpus into the CSV schema.
    let corpus = emobench::corpus::Corpus::read_jsonl(&clean).unwrap();
    let labels = base.join("labels.csv");
    {
        let rows: Vec<(String, String, String)> = corpus
            .documents
            .iter()
            .map(|d| (d.id.clone(), "polarity".to_string(), d.labels["polarity"].clone()))
            .collect();
        emobench::tasks::DocLabelDataset::write_csv(&labels, &rows).unwrap();
    }

    let clf = base.join("polarity.ckpt");
    run_ok(&[
        "finetune",
        "--task",
        "polarity",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--data",
        labels.to_str().unwrap(),
        "--corpus",
        clean.to_str().unwrap(),
        "--out",
        clf.to_str().unwrap(),
        "--epochs",
        "10",
    ]);
    let metrics = base.join("polarity.metrics.json");
    let stdout = run_ok(&[
        "evaluate",
        "--task",
        "polarity",
        "--checkpoint",
        clf.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--data",
        labels.to_str().unwrap(),
        "--corpus",
        clean.to_str().unwrap(),
        "--split",
        "test",
        "--out",
        metrics.to_str().unwrap(),
    ]);
    assert!(stdout.contains("weighted F1"), "{stdout}");
    let report = emobench::tasks::MetricsReport::read_json(&metrics).unwrap();
    assert!(report.weighted_f1 > 0.75, "weighted F1 {}", report.weighted_f1);

    // The report command aggregates the metrics file without recomputing.
    let rep_dir = base.join("report");
    run_ok(&[
        "report",
        "--results",
        base.to_str().unwrap(),
        "--out-dir",
        rep_dir.to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(rep_dir.join("summary.json")).unwrap())
            .unwrap();
    let stored = &summary["metrics"]["metrics/polarity.metrics.json"]["weighted_f1"];
    assert_eq!(stored.as_f64().unwrap(), report.weighted_f1);
}

#[test]
fn output_root_env_var_roots_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let raw = base.join("raw.jsonl");
    std::fs::write(
        &raw,
        concat!(
            r#"{"id":"a","text":"three good words here"}"#,
            "\n",
            r#"{"id":"b","text":"more fine words right here"}"#,
            "\n",
            r#"{"id":"c","text":"yet another comment with words"}"#,
            "\n",
        ),
    )
    .unwrap();
    let output = Command::new(bin())
        .env("EMOBENCH_OUTPUT_ROOT", base)
        .args(["ingest", "--in", raw.to_str().unwrap(), "--out", "nested/clean.jsonl"])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(base.join("nested/clean.jsonl").is_file());
}
