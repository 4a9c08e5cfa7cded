//! Bootstrap evaluation over re-drawn data partitions.
//!
//! The caller supplies a pipeline closure mapping a partition seed to a
//! [`MetricsReport`] (re-split, retrain, evaluate); this module drives it
//! across `n_samples` seeds and summarizes the per-metric distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::metrics::MetricsReport;

/// Mean, standard deviation, and 2.5/97.5 percentiles of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStat {
    pub mean: f64,
    pub std: f64,
    pub p2_5: f64,
    pub p97_5: f64,
}

/// Distribution summary across bootstrap samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub n_samples: usize,
    /// Keyed by metric name: `weighted_f1`, `accuracy`, and `f1:<label>`.
    pub metrics: BTreeMap<String, BootstrapStat>,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn stat(values: &[f64]) -> BootstrapStat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    BootstrapStat { mean, std: var.sqrt(), p2_5: percentile(&sorted, 0.025), p97_5: percentile(&sorted, 0.975) }
}

/// Run the pipeline on `n_samples` independent partition seeds (derived from
/// `seed`) and summarize. Two runs with the same seed are identical.
pub fn bootstrap_evaluate(
    pipeline: &mut dyn FnMut(u64) -> Result<MetricsReport>,
    n_samples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs at least 2 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partition_seeds: Vec<u64> = (0..n_samples).map(|_| rng.gen()).collect();

    let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ps in partition_seeds {
        let report = pipeline(ps)?;
        series.entry("weighted_f1".into()).or_default().push(report.weighted_f1);
        series.entry("accuracy".into()).or_default().push(report.accuracy);
        for c in &report.per_class {
            series.entry(format!("f1:{}", c.label)).or_default().push(c.f1);
        }
    }

    let metrics = series.into_iter().map(|(k, v)| (k, stat(&v))).collect();
    Ok(BootstrapSummary { n_samples, metrics })
}

impl BootstrapSummary {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<BootstrapSummary> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "metric,mean,std,p2_5,p97_5")?;
        for (name, s) in &self.metrics {
            writeln!(f, "{name},{},{},{},{}", s.mean, s.std, s.p2_5, s.p97_5)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::metrics::evaluate;

    fn constant_report() -> MetricsReport {
        let space = vec!["a".to_string(), "b".to_string()];
        let gold = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        let pred = vec!["a".to_string(), "b".to_string(), "b".to_string()];
        evaluate(&pred, &gold, &space).unwrap()
    }

    #[test]
    fn constant_pipeline_has_zero_variance() {
        let mut pipeline = |_seed: u64| Ok(constant_report());
        let summary = bootstrap_evaluate(&mut pipeline, 50, 3).unwrap();
        assert_eq!(summary.n_samples, 50);
        let wf1 = &summary.metrics["weighted_f1"];
        assert!(wf1.std < 1e-12, "std {}", wf1.std);
        assert_eq!(wf1.p2_5, wf1.p97_5);
    }

    #[test]
    fn same_seed_identical_summaries() {
        let mut pipeline = |seed: u64| {
            let space = vec!["a".to_string(), "b".to_string()];
            let gold = vec!["a".to_string(), "b".to_string(), "a".to_string(), "b".to_string()];
            // Seed-dependent predictions: deterministic pipeline.
            let pred: Vec<String> = (0..4)
                .map(|i| if (seed >> i) & 1 == 0 { "a".to_string() } else { "b".to_string() })
                .collect();
            evaluate(&pred, &gold, &space)
        };
        let a = bootstrap_evaluate(&mut pipeline, 20, 7).unwrap();
        let b = bootstrap_evaluate(&mut pipeline, 20, 7).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_evaluate(&mut pipeline, 20, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let mut pipeline = |_seed: u64| Ok(constant_report());
        assert!(bootstrap_evaluate(&mut pipeline, 1, 0).is_err());
    }

    #[test]
    fn percentiles_are_ordered() {
        let mut counter = 0u64;
        let mut pipeline = |_seed: u64| {
            counter += 1;
            let space = vec!["a".to_string()];
            let gold = vec!["a".to_string(); (counter as usize % 5) + 1];
            evaluate(&gold, &gold, &space)
        };
        let summary = bootstrap_evaluate(&mut pipeline, 10, 1).unwrap();
        for s in summary.metrics.values() {
            assert!(s.p2_5 <= s.mean + 1e-12);
            assert!(s.mean <= s.p97_5 + 1e-12);
        }
    }
}
