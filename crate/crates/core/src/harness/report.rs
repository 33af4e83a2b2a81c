use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::MetricsReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub mean_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_p: Option<f64>,
    /// Set on baseline rows when some input exceeded the token budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges; each count vector has one entry fewer.
    pub edges: Vec<f64>,
    pub model: Vec<usize>,
    pub baseline: Vec<usize>,
}

impl Histogram {
    pub fn unit(bins: usize, model: &[f64], baseline: &[f64]) -> Histogram {
        let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
        let count = |xs: &[f64]| {
            let mut c = vec![0; bins];
            for &x in xs {
                c[((x * bins as f64) as usize).min(bins - 1)] += 1;
            }
            c
        };
        Histogram {
            edges,
            model: count(model),
            baseline: count(baseline),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub range: String,
    #[serde(default)]
    pub empty: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SideReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<SideReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
}

impl BucketReport {
    pub fn empty(range: impl Into<String>) -> Self {
        BucketReport {
            range: range.into(),
            empty: true,
            model: None,
            baseline: None,
            histogram: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub buckets: Vec<BucketReport>,
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
}

impl Report {
    pub fn new(experiment: impl Into<String>, buckets: Vec<BucketReport>) -> Self {
        Report {
            experiment: experiment.into(),
            buckets,
            seed: None,
            config_digest: None,
        }
    }

    pub fn with_meta(mut self, seed: Option<u64>, config_digest: Option<String>) -> Self {
        self.seed = seed;
        self.config_digest = config_digest;
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "experiment: {}", self.experiment).unwrap();
        writeln!(
            out,
            "{:<14} {:>5}  {:<36} {:<36}",
            "range", "n", "model", "baseline"
        )
        .unwrap();
        for b in &self.buckets {
            if b.empty {
                writeln!(out, "{:<14} {:>5}  (empty)", b.range, 0).unwrap();
                continue;
            }
            let n = b.model.as_ref().map_or(0, |m| m.n);
            writeln!(
                out,
                "{:<14} {:>5}  {:<36} {:<36}",
                b.range,
                n,
                side_summary(b.model.as_ref()),
                side_summary(b.baseline.as_ref())
            )
            .unwrap();
        }
        out
    }
}

fn side_summary(side: Option<&SideReport>) -> String {
    let Some(s) = side else {
        return "-".into();
    };
    let mut out = match &s.metrics {
        Some(m) => format!(
            "acc={:.3} f1={:.3} auc={}",
            m.accuracy,
            m.f1,
            m.auc.map_or("n/a".to_string(), |a| format!("{a:.3}"))
        ),
        None => format!("mean_p={:.3}", s.mean_p),
    };
    if s.truncated == Some(true) {
        out.push_str(" [truncated]");
    }
    out
}

/// Hex SHA-256 of the value's JSON encoding.
pub fn config_digest<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
