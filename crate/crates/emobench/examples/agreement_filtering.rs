//! Label coarsening, Krippendorff alpha, and per-item reliability
//! filtering of rating records.
//!
//! ```bash
//! cargo run --example agreement_filtering
//! ```

use emobench::annotation::{coarsen, filter_reliable, krippendorff_alpha, RatingRecord};
use emobench::sentiments::{Emotion, Sentiment};

fn main() -> emobench::Result<()> {
    let anger = Sentiment::Emotion(Emotion::Anger);

    println!("== coarsening ==");
    for (sentiment, raw) in [
        (Sentiment::Polarity, 2),
        (Sentiment::Polarity, 0),
        (Sentiment::Polarity, -1),
        (anger, 2),
        (anger, 1),
        (anger, 0),
    ] {
        let record = RatingRecord::new("c", "r", sentiment, raw)?;
        println!("  {sentiment} raw {raw:+} -> {}", coarsen(&record));
    }
    println!("  ratings (2,1) coarsen identically: agreement; (1,0) disagree\n");

    // Three raters per comment; c3 and c4 split 2-1.
    let mut records = Vec::new();
    for (comment, ratings) in [
        ("c1", [2, 1, 2]),
        ("c2", [0, 0, 0]),
        ("c3", [2, 1, 0]),
        ("c4", [0, 2, 0]),
        ("c5", [1, 2, 1]),
    ] {
        for (i, raw) in ratings.iter().enumerate() {
            records.push(RatingRecord::new(comment, format!("r{i}"), anger, *raw)?);
        }
    }

    let report = filter_reliable(&records, 0.75, 3)?;
    println!("== per-item reliability (threshold 0.75, min 3 raters) ==");
    for item in &report.items {
        println!(
            "  {} alpha {:+.3} -> {}",
            item.comment_id,
            item.alpha.unwrap_or(f64::NAN),
            match item.consensus {
                Some(label) => format!("kept, consensus {label}"),
                None => "dropped".into(),
            }
        );
    }

    let items: Vec<Vec<_>> = report
        .items
        .iter()
        .map(|i| {
            i.label_counts
                .iter()
                .flat_map(|(&l, &c)| std::iter::repeat_n(l, c))
                .collect()
        })
        .collect();
    println!("\ncorpus-level alpha (anger): {:.4}", krippendorff_alpha(&items)?);
    println!("kept {}/{} items", report.kept_count(), report.items.len());
    Ok(())
}
