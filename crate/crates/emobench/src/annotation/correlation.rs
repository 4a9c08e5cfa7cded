//! Pearson correlation among the labeled sentiments.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::sentiments::{CoarseLabel, Sentiment};

/// Symmetric 9x9 Pearson matrix over coarse labels (emotions as 0/1,
/// polarity as -1/0/+1). Entries are `None` when a pair has fewer than two
/// co-labeled items or zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub sentiments: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: Sentiment, b: Sentiment) -> Option<f64> {
        let i = self.sentiments.iter().position(|s| s == a.name())?;
        let j = self.sentiments.iter().position(|s| s == b.name())?;
        self.values[i][j]
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "sentiment,{}", self.sentiments.join(","))?;
        for (i, name) in self.sentiments.iter().enumerate() {
            let row: Vec<String> = self.values[i]
                .iter()
                .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
                .collect();
            writeln!(f, "{name},{}", row.join(","))?;
        }
        Ok(())
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Correlation among sentiments over a labeled pool of
/// `(comment_id, sentiment, consensus label)` triples. Each off-diagonal
/// entry uses the comments labeled for both sentiments; the diagonal is 1.
pub fn emotion_correlation(
    pool: &[(String, Sentiment, CoarseLabel)],
) -> Result<CorrelationMatrix> {
    let order = Sentiment::all();
    let mut per_comment: BTreeMap<&str, BTreeMap<Sentiment, f64>> = BTreeMap::new();
    for (id, sentiment, label) in pool {
        per_comment.entry(id.as_str()).or_default().insert(*sentiment, label.numeric());
    }

    let n = order.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        values[i][i] = Some(1.0);
        for j in i + 1..n {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for labels in per_comment.values() {
                if let (Some(&x), Some(&y)) = (labels.get(&order[i]), labels.get(&order[j])) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            let r = pearson(&xs, &ys);
            values[i][j] = r;
            values[j][i] = r;
        }
    }

    Ok(CorrelationMatrix {
        sentiments: order.iter().map(|s| s.name().to_string()).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentiments::Emotion;
    use CoarseLabel::{Expressed as E, NotExpressed as N};

    fn joy() -> Sentiment {
        Sentiment::Emotion(Emotion::Joy)
    }
    fn sadness() -> Sentiment {
        Sentiment::Emotion(Emotion::Sadness)
    }

    #[test]
    fn diagonal_is_one_and_matrix_is_symmetric() {
        let pool = crate::synthetic::opposing_pairs_pool(40, 0.9, 8);
        let m = emotion_correlation(&pool).unwrap();
        for i in 0..9 {
            assert_eq!(m.values[i][i], Some(1.0));
            for j in 0..9 {
                match (m.values[i][j], m.values[j][i]) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                    (None, None) => {}
                    other => panic!("asymmetric entries: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn perfectly_anti_aligned_pair_is_minus_one() {
        let mut pool = Vec::new();
        for i in 0..10 {
            let e = if i % 2 == 0 { E } else { N };
            let o = if i % 2 == 0 { N } else { E };
            pool.push((format!("c{i}"), joy(), e));
            pool.push((format!("c{i}"), sadness(), o));
        }
        let m = emotion_correlation(&pool).unwrap();
        let r = m.get(joy(), sadness()).unwrap();
        assert!((r + 1.0).abs() < 1e-12, "r {r}");
    }

    #[test]
    fn zero_variance_pairs_are_flagged_undefined() {
        let mut pool = Vec::new();
        for i in 0..5 {
            pool.push((format!("c{i}"), joy(), E)); // constant
            pool.push((format!("c{i}"), sadness(), if i % 2 == 0 { E } else { N }));
        }
        let m = emotion_correlation(&pool).unwrap();
        assert_eq!(m.get(joy(), sadness()), None);
    }

    #[test]
    fn pairs_without_co_labels_are_undefined() {
        let pool = vec![
            ("a".to_string(), joy(), E),
            ("b".to_string(), sadness(), N),
        ];
        let m = emotion_correlation(&pool).unwrap();
        assert_eq!(m.get(joy(), sadness()), None);
    }

    #[test]
    fn entries_stay_in_unit_interval() {
        let pool = crate::synthetic::opposing_pairs_pool(60, 0.8, 11);
        let m = emotion_correlation(&pool).unwrap();
        for row in &m.values {
            for v in row.iter().flatten() {
                assert!(*v >= -1.0 - 1e-12 && *v <= 1.0 + 1e-12);
            }
        }
    }
}
