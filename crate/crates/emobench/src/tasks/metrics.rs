//! Confusion-matrix metrics: per-class precision/recall/F1, accuracy, and
//! support-weighted aggregates. The zero-division convention is 0 (with the
//! class support recorded so undefined recall is visible downstream).

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold items of this class.
    pub support: usize,
}

/// Full evaluation output for one prediction/gold pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub labels: Vec<String>,
    /// `confusion[gold][predicted]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub total: usize,
}

/// `2 * p * r / (p + r)`, zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Score predictions against gold labels over a declared label space.
pub fn evaluate(predictions: &[String], gold: &[String], label_space: &[String]) -> Result<MetricsReport> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InsufficientData("no predictions to evaluate".into()));
    }
    if label_space.is_empty() {
        return Err(Error::InvalidConfig("empty label space".into()));
    }
    let index_of = |l: &String| -> Result<usize> {
        label_space
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::InvalidConfig(format!("label {l:?} outside label space")))
    };
    let n = label_space.len();
    let mut confusion = vec![vec![0usize; n]; n];
    for (p, g) in predictions.iter().zip(gold.iter()) {
        confusion[index_of(g)?][index_of(p)?] += 1;
    }
    Ok(report_from_confusion(label_space.to_vec(), confusion))
}

/// Derive all metrics from a filled confusion matrix.
pub fn report_from_confusion(labels: Vec<String>, confusion: Vec<Vec<usize>>) -> MetricsReport {
    let n = labels.len();
    let total: usize = confusion.iter().map(|row| row.iter().sum::<usize>()).sum();
    let mut per_class = Vec::with_capacity(n);
    let mut weighted = 0.0;
    let mut trace = 0usize;
    for c in 0..n {
        let tp = confusion[c][c];
        trace += tp;
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..n).map(|g| confusion[g][c]).sum();
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let f1 = f1_score(precision, recall);
        weighted += f1 * support as f64;
        per_class.push(ClassMetrics { label: labels[c].clone(), precision, recall, f1, support });
    }
    MetricsReport {
        labels,
        confusion,
        per_class,
        accuracy: if total == 0 { 0.0 } else { trace as f64 / total as f64 },
        weighted_f1: if total == 0 { 0.0 } else { weighted / total as f64 },
        total,
    }
}

impl MetricsReport {
    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.label == label)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<MetricsReport> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// One CSV line per class plus an aggregate line.
    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "label,precision,recall,f1,support")?;
        for c in &self.per_class {
            writeln!(f, "{},{},{},{},{}", c.label, c.precision, c.recall, c.f1, c.support)?;
        }
        writeln!(f, "_weighted,,,{},{}", self.weighted_f1, self.total)?;
        writeln!(f, "_accuracy,,,{},{}", self.accuracy, self.total)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_predictions_score_one() {
        let space = labels(&["a", "b"]);
        let gold = labels(&["a", "b", "a", "b"]);
        let report = evaluate(&gold, &gold, &space).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.weighted_f1, 1.0);
        for c in &report.per_class {
            assert_eq!(c.precision, 1.0);
            assert_eq!(c.recall, 1.0);
            assert_eq!(c.f1, 1.0);
        }
    }

    #[test]
    fn binary_fixture_two_thirds() {
        // Positive class: TP=2, FP=1, FN=1 -> precision = recall = f1 = 2/3.
        let space = labels(&["pos", "neg"]);
        let gold = labels(&["pos", "pos", "pos", "neg", "neg"]);
        let pred = labels(&["pos", "pos", "neg", "pos", "neg"]);
        let report = evaluate(&pred, &gold, &space).unwrap();
        let pos = report.class("pos").unwrap();
        let expect = 2.0 / 3.0;
        assert!((pos.precision - expect).abs() < 1e-12);
        assert!((pos.recall - expect).abs() < 1e-12);
        assert!((pos.f1 - expect).abs() < 1e-12);
    }

    #[test]
    fn f1_of_equal_precision_recall_is_that_value() {
        assert!((f1_score(0.97, 0.97) - 0.97).abs() < 1e-12);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn absent_class_gets_zero_with_support_recorded() {
        let space = labels(&["a", "b", "c"]);
        let gold = labels(&["a", "a", "b"]);
        let pred = labels(&["a", "a", "a"]);
        let report = evaluate(&pred, &gold, &space).unwrap();
        let c = report.class("c").unwrap();
        assert_eq!(c.support, 0);
        assert_eq!(c.recall, 0.0);
        assert_eq!(c.precision, 0.0);
        let b = report.class("b").unwrap();
        assert_eq!(b.support, 1);
        assert_eq!(b.recall, 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let space = labels(&["a"]);
        assert!(evaluate(&labels(&["a"]), &labels(&["a", "a"]), &space).is_err());
    }

    /// Brute-force oracle: recompute every metric from scratch with
    /// independent counting loops.
    fn oracle(pred: &[String], gold: &[String], space: &[String]) -> (f64, f64, Vec<(f64, f64, f64)>) {
        let n = gold.len() as f64;
        let correct = pred.iter().zip(gold).filter(|(p, g)| p == g).count() as f64;
        let accuracy = correct / n;
        let mut per_class = Vec::new();
        let mut weighted = 0.0;
        for c in space {
            let tp = pred.iter().zip(gold).filter(|(p, g)| *p == c && *g == c).count() as f64;
            let fp = pred.iter().zip(gold).filter(|(p, g)| *p == c && *g != c).count() as f64;
            let fn_ = pred.iter().zip(gold).filter(|(p, g)| *p != c && *g == c).count() as f64;
            let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            let recall = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
            let f1 = f1_score(precision, recall);
            weighted += f1 * (tp + fn_);
            per_class.push((precision, recall, f1));
        }
        (accuracy, weighted / n, per_class)
    }

    #[test]
    fn matches_brute_force_oracle_on_random_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let num_classes = rng.gen_range(2..=5);
            let space: Vec<String> = (0..num_classes).map(|i| format!("c{i}")).collect();
            let len = rng.gen_range(1..=200);
            let gold: Vec<String> =
                (0..len).map(|_| space[rng.gen_range(0..num_classes)].clone()).collect();
            let pred: Vec<String> =
                (0..len).map(|_| space[rng.gen_range(0..num_classes)].clone()).collect();
            let report = evaluate(&pred, &gold, &space).unwrap();
            let (acc, wf1, per_class) = oracle(&pred, &gold, &space);
            assert_eq!(report.accuracy, acc);
            assert!((report.weighted_f1 - wf1).abs() < 1e-12);
            for (c, (p, r, f)) in report.per_class.iter().zip(per_class) {
                assert_eq!(c.precision, p);
                assert_eq!(c.recall, r);
                assert_eq!(c.f1, f);
            }
        }
    }

    #[test]
    fn accuracy_equals_micro_recall_for_single_label_tasks() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let space: Vec<String> = (0..3).map(|i| format!("c{i}")).collect();
            let len = rng.gen_range(5..=60);
            let gold: Vec<String> =
                (0..len).map(|_| space[rng.gen_range(0..3)].clone()).collect();
            let pred: Vec<String> =
                (0..len).map(|_| space[rng.gen_range(0..3)].clone()).collect();
            let report = evaluate(&pred, &gold, &space).unwrap();
            let micro_recall: f64 = report
                .per_class
                .iter()
                .map(|c| c.recall * c.support as f64)
                .sum::<f64>()
                / report.total as f64;
            assert!((report.accuracy - micro_recall).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_invariance() {
        use rand::seq::SliceRandom;
        let space = labels(&["a", "b", "c"]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gold: Vec<String> =
            (0..80).map(|_| space[rng.gen_range(0..3)].clone()).collect();
        let pred: Vec<String> =
            (0..80).map(|_| space[rng.gen_range(0..3)].clone()).collect();
        let base = evaluate(&pred, &gold, &space).unwrap();
        let mut order: Vec<usize> = (0..80).collect();
        order.shuffle(&mut rng);
        let gold2: Vec<String> = order.iter().map(|&i| gold[i].clone()).collect();
        let pred2: Vec<String> = order.iter().map(|&i| pred[i].clone()).collect();
        let permuted = evaluate(&pred2, &gold2, &space).unwrap();
        assert_eq!(base, permuted);
    }

    #[test]
    fn json_round_trip() {
        let space = labels(&["x", "y"]);
        let gold = labels(&["x", "y", "x"]);
        let pred = labels(&["x", "x", "x"]);
        let report = evaluate(&pred, &gold, &space).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        report.write_json(&path).unwrap();
        let back = MetricsReport::read_json(&path).unwrap();
        assert_eq!(report, back);
    }
}
