//! Extreme-score selection: two rankings per sentiment, deduplicated union.
//!
//! ```bash
//! cargo run --example candidate_selection
//! ```

use emobench::annotation::{select_for_annotation, SelectionScores};
use emobench::lexicon::{score_document, IdentityLemmatizer};
use emobench::synthetic::{planted_sentiment_corpus, PlantedConfig};
use std::collections::{BTreeMap, BTreeSet};

fn main() -> emobench::Result<()> {
    let (corpus, lexicon) = planted_sentiment_corpus(&PlantedConfig {
        num_docs: 700,
        ..PlantedConfig::default()
    });

    let mut scores: BTreeMap<String, SelectionScores> = BTreeMap::new();
    for doc in &corpus.documents {
        let v = score_document(doc, &lexicon, &IdentityLemmatizer)?;
        scores.insert(doc.id.clone(), SelectionScores::from(&v));
    }

    // The full-depth selection: 75 per ranking, two rankings for each of
    // the nine sentiments = 1350 slots before deduplication.
    let outcome = select_for_annotation(&scores, 75, &BTreeSet::new());
    println!(
        "k = 75 over 9 sentiments: pre-dedup multiset {} -> {} distinct candidates",
        outcome.pre_dedup_count,
        outcome.candidates.len()
    );

    // Excluding already-annotated comments shrinks the next batch.
    let already: BTreeSet<String> = outcome.candidates.iter().take(200).cloned().collect();
    let next = select_for_annotation(&scores, 75, &already);
    println!(
        "after annotating 200 of them: next batch selects {} new candidates",
        next.candidates.len()
    );

    // A small pool returns everything, flagged.
    let small: BTreeMap<String, SelectionScores> =
        scores.iter().take(20).map(|(k, v)| (k.clone(), *v)).collect();
    let exhausted = select_for_annotation(&small, 75, &BTreeSet::new());
    println!(
        "20-document pool at k = 75: {} candidates, pool_exhausted = {}",
        exhausted.candidates.len(),
        exhausted.pool_exhausted
    );
    Ok(())
}
