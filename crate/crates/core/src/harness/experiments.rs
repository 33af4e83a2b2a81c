use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::{ConversationRecord, Label};
use super::metrics::{compute_metrics, MetricsReport, Outcome};
use super::report::{mean_std, BucketReport, Histogram, Report, SideReport};
use crate::engine::Session;
use crate::error::{Error, Result};

/// Everything the experiments need from one scored record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredRecord {
    pub id: String,
    pub label: Label,
    pub gap_tokens: usize,
    pub history_tokens: usize,
    pub p_att: f64,
    pub p_nlu: f64,
    pub log_diff: f64,
    pub residual_term: f64,
    pub verdict: bool,
    pub att_verdict: bool,
    pub baseline_p: Option<f64>,
    pub baseline_verdict: Option<bool>,
    pub baseline_truncated: bool,
}

impl ScoredRecord {
    pub fn truth(&self) -> bool {
        self.label.is_on_topic()
    }
}

/// Replays a record's history into a fresh session and scores its labeled
/// sentence. The baseline is skipped when `baseline_budget` is `None`.
pub fn score_record<F>(
    record: &ConversationRecord,
    factory: &F,
    baseline_budget: Option<Option<usize>>,
) -> Result<ScoredRecord>
where
    F: Fn(&str) -> Result<Session> + ?Sized,
{
    record.validate()?;
    let mut session = factory(&record.topic)?;
    for s in record.history() {
        session.accept(&s.text, s.speaker)?;
    }
    let candidate = &record.candidate().text;
    let trace = session.evaluate_next(candidate)?;
    let threshold = session.hyperparams().decision_threshold;
    let history_tokens = record.history_tokens();
    let (baseline_p, baseline_truncated) = match baseline_budget {
        Some(budget) => (
            Some(session.baseline_nsp(candidate, budget)?.get()),
            budget.is_some_and(|b| history_tokens > b),
        ),
        None => (None, false),
    };
    let p_att = trace.score.p_att();
    Ok(ScoredRecord {
        id: record.id.clone(),
        label: record.label(),
        gap_tokens: record.gap_tokens(),
        history_tokens,
        p_att,
        p_nlu: trace.score.p_nlu.get(),
        log_diff: trace.score.log_diff,
        residual_term: trace.score.residual_term,
        verdict: trace.score.verdict.is_on_topic(),
        att_verdict: p_att >= threshold,
        baseline_p,
        baseline_verdict: baseline_p.map(|p| p >= threshold),
        baseline_truncated,
    })
}

fn label_counts(records: &[&ScoredRecord]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.label.to_string()).or_insert(0) += 1;
    }
    counts
}

fn side(
    records: &[&ScoredRecord],
    verdict: impl Fn(&ScoredRecord) -> bool,
    score: impl Fn(&ScoredRecord) -> f64,
    with_metrics: bool,
) -> Result<SideReport> {
    let scores: Vec<f64> = records.iter().map(|r| score(r)).collect();
    let (mean_p, std_p) = mean_std(&scores);
    let metrics = if with_metrics {
        let outcomes: Vec<Outcome> = records
            .iter()
            .map(|r| Outcome {
                truth: r.truth(),
                verdict: verdict(r),
                score: score(r),
            })
            .collect();
        let mut m: MetricsReport = compute_metrics(&outcomes)?;
        m.label_counts = label_counts(records);
        Some(m)
    } else {
        None
    };
    Ok(SideReport {
        n: records.len(),
        metrics,
        mean_p,
        std_p: Some(std_p),
        truncated: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapOptions {
    /// Interior bucket edges in tokens, strictly increasing.
    pub edges: Vec<usize>,
    /// Baseline context budget; `None` scores the full history.
    pub token_budget: Option<usize>,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            edges: vec![300, 512],
            token_budget: Some(512),
        }
    }
}

fn gap_ranges(edges: &[usize]) -> Result<Vec<(usize, Option<usize>, String)>> {
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("bucket edges {edges:?} must be strictly increasing")));
    }
    let mut out = Vec::with_capacity(edges.len() + 1);
    let mut lo = 0usize;
    for (i, &e) in edges.iter().enumerate() {
        let open = if i == 0 { '[' } else { '(' };
        out.push((lo, Some(e), format!("{open}{lo},{e}]")));
        lo = e;
    }
    let open = if edges.is_empty() { '[' } else { '(' };
    out.push((lo, None, format!("{open}{lo},inf)")));
    Ok(out)
}

/// Accuracy of the full model and the truncated single-call baseline per
/// token-gap bucket. Bucket `i` holds gaps in `(edge[i-1], edge[i]]`; the
/// first bucket also takes a gap of zero.
pub fn run_gap_experiment<F>(
    dataset: &[ConversationRecord],
    factory: &F,
    opts: &GapOptions,
) -> Result<Report>
where
    F: Fn(&str) -> Result<Session> + ?Sized,
{
    let ranges = gap_ranges(&opts.edges)?;
    let scored = dataset
        .iter()
        .map(|r| score_record(r, factory, Some(opts.token_budget)))
        .collect::<Result<Vec<_>>>()?;

    let mut buckets = Vec::with_capacity(ranges.len());
    for (i, (lo, hi, name)) in ranges.into_iter().enumerate() {
        let members: Vec<&ScoredRecord> = scored
            .iter()
            .filter(|r| {
                let above = if i == 0 { r.gap_tokens >= lo } else { r.gap_tokens > lo };
                above && hi.is_none_or(|h| r.gap_tokens <= h)
            })
            .collect();
        if members.is_empty() {
            buckets.push(BucketReport::empty(name));
            continue;
        }
        let model = side(&members, |r| r.verdict, |r| r.p_nlu, true)?;
        let mut baseline = side(
            &members,
            |r| r.baseline_verdict.unwrap_or(false),
            |r| r.baseline_p.unwrap_or(0.0),
            true,
        )?;
        baseline.truncated = Some(members.iter().any(|r| r.baseline_truncated));
        buckets.push(BucketReport {
            range: name,
            empty: false,
            model: Some(model),
            baseline: Some(baseline),
            histogram: None,
        });
    }
    Ok(Report::new("gap", buckets))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LengthOptions {
    pub segment_width: usize,
    pub token_budget: Option<usize>,
}

impl Default for LengthOptions {
    fn default() -> Self {
        LengthOptions {
            segment_width: 100,
            token_budget: Some(512),
        }
    }
}

/// Mean probability per conversation-length bucket for ood_shift records.
/// Other labels are skipped; buckets with no records are omitted.
pub fn run_length_experiment<F>(
    dataset: &[ConversationRecord],
    factory: &F,
    opts: &LengthOptions,
) -> Result<Report>
where
    F: Fn(&str) -> Result<Session> + ?Sized,
{
    if opts.segment_width == 0 {
        return Err(Error::Config("segment_width must be >= 1".into()));
    }
    let skipped = dataset.iter().filter(|r| r.label() != Label::OodShift).count();
    if skipped > 0 {
        tracing::warn!(skipped, "length experiment ignores records not labeled ood_shift");
    }
    let scored = dataset
        .iter()
        .filter(|r| r.label() == Label::OodShift)
        .map(|r| score_record(r, factory, Some(opts.token_budget)))
        .collect::<Result<Vec<_>>>()?;

    let mut by_bucket: BTreeMap<usize, Vec<&ScoredRecord>> = BTreeMap::new();
    for r in &scored {
        by_bucket
            .entry(r.history_tokens / opts.segment_width)
            .or_default()
            .push(r);
    }
    let w = opts.segment_width;
    let buckets = by_bucket
        .into_iter()
        .map(|(b, members)| {
            let model = side(&members, |r| r.verdict, |r| r.p_nlu, false)?;
            let mut baseline = side(&members, |_| false, |r| r.baseline_p.unwrap_or(0.0), false)?;
            baseline.truncated = Some(members.iter().any(|r| r.baseline_truncated));
            Ok(BucketReport {
                range: format!("[{},{})", b * w, (b + 1) * w),
                empty: false,
                model: Some(model),
                baseline: Some(baseline),
                histogram: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::new("length", buckets))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualOptions {
    /// Inclusive range of `e^F` selecting records.
    pub band: [f64; 2],
    pub bins: usize,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            band: [0.4, 0.6],
            bins: 10,
        }
    }
}

pub struct ResidualOutcome {
    pub report: Report,
    /// The records inside the band, in dataset order.
    pub selected: Vec<ScoredRecord>,
}

pub const MIN_BAND_RECORDS: usize = 50;

/// Compares verdicts from attention alone (`baseline`) with the full score
/// (`model`) on records whose attention-only probability lies in the band.
pub fn run_residual_experiment<F>(
    dataset: &[ConversationRecord],
    factory: &F,
    opts: &ResidualOptions,
) -> Result<ResidualOutcome>
where
    F: Fn(&str) -> Result<Session> + ?Sized,
{
    let [lo, hi] = opts.band;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi || opts.bins == 0 {
        return Err(Error::Config(format!(
            "invalid residual band [{lo}, {hi}] or bin count {}",
            opts.bins
        )));
    }
    let mut selected = Vec::new();
    for r in dataset {
        let s = score_record(r, factory, None)?;
        if (lo..=hi).contains(&s.p_att) {
            selected.push(s);
        }
    }
    if selected.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no records with attention-only probability in [{lo}, {hi}]"
        )));
    }
    if selected.len() < MIN_BAND_RECORDS {
        tracing::warn!(
            n = selected.len(),
            "fewer than {MIN_BAND_RECORDS} records in the residual band"
        );
    }
    let members: Vec<&ScoredRecord> = selected.iter().collect();
    let model = side(&members, |r| r.verdict, |r| r.p_nlu, true)?;
    let baseline = side(&members, |r| r.att_verdict, |r| r.p_att, true)?;
    let p_nlu: Vec<f64> = selected.iter().map(|r| r.p_nlu).collect();
    let p_att: Vec<f64> = selected.iter().map(|r| r.p_att).collect();
    let bucket = BucketReport {
        range: format!("[{lo},{hi}]"),
        empty: false,
        model: Some(model),
        baseline: Some(baseline),
        histogram: Some(Histogram::unit(opts.bins, &p_nlu, &p_att)),
    };
    Ok(ResidualOutcome {
        report: Report::new("residual", vec![bucket]),
        selected,
    })
}
