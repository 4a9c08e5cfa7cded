//! Cleaning rules, deduplication, and deterministic splits.
//!
//! ```bash
//! cargo run --example corpus_cleaning
//! ```

use emobench::corpus::{clean_comment, CleanOutcome, Corpus, IngestOptions, RawRecord, ScriptPredicate, Split};

fn main() -> emobench::Result<()> {
    let script = ScriptPredicate::named("latin")?;

    println!("== cleaning rules (min 2 words) ==");
    for raw in [
        "good point !!!!!",
        "see https://example.com/x now please",
        "spaced   out    words here",
        "just !!! ... ???",
        "123 456 789 000",
    ] {
        match clean_comment(raw, &script, 2) {
            CleanOutcome::Cleaned(text) => println!("  {raw:?} -> {text:?}"),
            CleanOutcome::Rejected(reason) => println!("  {raw:?} -> rejected ({reason:?})"),
        }
    }

    let records: Vec<RawRecord> = [
        "the first comment kept here",
        "a second comment with more words",
        "the first comment kept here", // exact duplicate
        "another one that survives every rule",
        "short bit",                   // fewer than 3 words
        "final comment closing the batch",
        "one more to make the split interesting",
    ]
    .iter()
    .enumerate()
    .map(|(i, text)| RawRecord {
        id: format!("c{i:02}"),
        source: "demo".into(),
        section: "news".into(),
        title: String::new(),
        text: text.to_string(),
        date: Some("2020-05-01".into()),
        labels: Default::default(),
    })
    .collect();

    let opts = IngestOptions { script, min_words: 3 };
    let mut corpus = Corpus::ingest(records, &opts)?.dedup();
    corpus.assign_splits((0.70, 0.15, 0.15), 7)?;

    println!("\n== provenance ==");
    println!(
        "  ingested {} | kept {} | rejected_short {} | rejected_no_target_script {} | deduplicated {}",
        corpus.provenance.ingested,
        corpus.len(),
        corpus.provenance.rejected_short,
        corpus.provenance.rejected_no_target_script,
        corpus.provenance.deduplicated,
    );

    println!("\n== split assignment (seed 7, deterministic) ==");
    for split in [Split::Train, Split::Validation, Split::Test] {
        let ids: Vec<&str> = corpus.by_split(split).map(|d| d.id.as_str()).collect();
        println!("  {:<10} {}", split.name(), ids.join(" "));
    }
    Ok(())
}
