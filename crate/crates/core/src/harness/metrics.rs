use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scored example: ground truth, thresholded verdict and raw score.
/// `true` means on-topic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub truth: bool,
    pub verdict: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    #[serde(default)]
    pub label_counts: BTreeMap<String, usize>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(outcomes: &[Outcome]) -> Result<MetricsReport> {
    if outcomes.is_empty() {
        return Err(Error::EmptyResult("no outcomes to score".into()));
    }
    let (mut tp, mut fp, mut tn, mut fneg) = (0, 0, 0, 0);
    for o in outcomes {
        match (o.truth, o.verdict) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fneg += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricsReport {
        n: outcomes.len(),
        precision,
        recall,
        accuracy: ratio(tp + tn, outcomes.len()),
        f1,
        auc: auc(outcomes),
        label_counts: BTreeMap::new(),
    })
}

/// Mann-Whitney AUC with tied scores sharing their average rank.
pub fn auc(outcomes: &[Outcome]) -> Option<f64> {
    let pos = outcomes.iter().filter(|o| o.truth).count();
    let neg = outcomes.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<&Outcome> = outcomes.iter().collect();
    order.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && order[j + 1].score == order[i].score {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mean_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += mean_rank * order[i..=j].iter().filter(|o| o.truth).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(truth: bool, verdict: bool, score: f64) -> Outcome {
        Outcome { truth, verdict, score }
    }

    #[test]
    fn perfect_separation() {
        let m = compute_metrics(&[o(true, true, 0.9), o(false, false, 0.1)]).unwrap();
        assert_eq!((m.precision, m.recall, m.accuracy, m.f1, m.auc), (1.0, 1.0, 1.0, 1.0, Some(1.0)));
    }

    #[test]
    fn all_positive_verdicts_half_true() {
        let m = compute_metrics(&[
            o(true, true, 0.9),
            o(true, true, 0.8),
            o(false, true, 0.7),
            o(false, true, 0.6),
        ])
        .unwrap();
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_scores_complement_auc() {
        let data = [
            o(true, true, 0.3),
            o(false, false, 0.1),
            o(true, true, 0.7),
            o(false, true, 0.7),
            o(false, false, 0.2),
            o(true, false, 0.2),
        ];
        let a = auc(&data).unwrap();
        let rev: Vec<Outcome> = data.iter().map(|x| o(x.truth, x.verdict, -x.score)).collect();
        assert!((a + auc(&rev).unwrap() - 1.0).abs() < 1e-12);
        // 9 pos/neg comparisons: 5 wins, 2 ties
        assert!((a - 6.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_has_no_auc_and_zero_f1_guard() {
        let m = compute_metrics(&[o(false, false, 0.1), o(false, false, 0.2)]).unwrap();
        assert_eq!(m.auc, None);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.accuracy, 1.0);
        assert!(compute_metrics(&[]).is_err());
    }
}
