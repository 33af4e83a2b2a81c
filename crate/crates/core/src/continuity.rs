//! Scalar math of the continuity model.
//!
//! Pairwise log-probabilities `ln P(y | chunk_i, current)` are pooled by the
//! attention functional
//!
//! ```text
//! F = [1 + tanh(M)]·M − tanh(M)·A        M = max, A = mean
//! ```
//!
//! which tracks the best-matching chunk when that match is confident
//! (M → 0⁻) and falls back to average pooling when nothing matches
//! (M → −∞). A sine-shaped residual then nudges low-confidence scores using
//! the log-ratio of the topic and background sentence likelihoods:
//!
//! ```text
//! α = sin(π·e^F) / e^F · η / |ln ε|
//! ln P_nlu = min(0, F + α·d)
//! ```
//!
//! Every function here is pure.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A natural-log probability: finite and `≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value > 0.0 {
            return Err(Error::invalid(format!(
                "log-probability must be finite and <= 0, got {value}"
            )));
        }
        Ok(LogProb(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

impl From<Probability> for LogProb {
    fn from(p: Probability) -> Self {
        LogProb(p.0.ln())
    }
}

impl TryFrom<f64> for LogProb {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        LogProb::new(value)
    }
}

impl From<LogProb> for f64 {
    fn from(v: LogProb) -> f64 {
        v.0
    }
}

/// A probability that has been clamped into `[ε, 1 − ε]`.
///
/// Every constructor clamps, so any `Probability` is safe to take the
/// logarithm of.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(into = "f64")]
pub struct Probability(f64);

impl Probability {
    /// Clamps `p` into `[epsilon, 1 − epsilon]`; rejects values outside `[0, 1]`.
    pub fn clamped(p: f64, epsilon: f64) -> Result<Self> {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("probability must lie in [0, 1], got {p}")));
        }
        Ok(Probability(p.clamp(epsilon, 1.0 - epsilon)))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn ln(self) -> LogProb {
        self.into()
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Orientation of the residual log-difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum ResidualSign {
    /// `+1`: `α·(ln P(S|y) − ln P(S))`. Topic-specific sentences raise the score.
    TopicBoost,
    /// `−1`: `α·(ln P(S) − ln P(S|y))`, the orientation of the linear expansion.
    Literal,
}

impl ResidualSign {
    pub fn as_f64(self) -> f64 {
        match self {
            ResidualSign::TopicBoost => 1.0,
            ResidualSign::Literal => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ResidualSign::TopicBoost => ResidualSign::Literal,
            ResidualSign::Literal => ResidualSign::TopicBoost,
        }
    }
}

impl TryFrom<i8> for ResidualSign {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(ResidualSign::TopicBoost),
            -1 => Ok(ResidualSign::Literal),
            other => Err(Error::invalid(format!(
                "residual_sign must be +1 or -1, got {other}"
            ))),
        }
    }
}

impl From<ResidualSign> for i8 {
    fn from(s: ResidualSign) -> i8 {
        match s {
            ResidualSign::TopicBoost => 1,
            ResidualSign::Literal => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub epsilon: f64,
    pub eta: f64,
    pub residual_sign: ResidualSign,
    pub decision_threshold: f64,
    /// Sentences per chunk.
    pub window: usize,
    /// Sentences between consecutive chunk starts.
    pub stride: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epsilon: 0.001,
            eta: 0.2,
            residual_sign: ResidualSign::TopicBoost,
            decision_threshold: 0.5,
            window: 4,
            stride: 2,
        }
    }
}

impl Hyperparams {
    /// Checks the hard constraints. An `eta` at or above `1/π` is accepted
    /// but logged, since the score is then no longer guaranteed monotone in
    /// the attention probability.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::Config(format!(
                "decision_threshold must lie in (0, 1), got {}",
                self.decision_threshold
            )));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if self.stride == 0 || self.stride > self.window {
            return Err(Error::Config(format!(
                "stride must satisfy 1 <= stride <= window ({}), got {}",
                self.window, self.stride
            )));
        }
        if self.eta >= 1.0 / PI {
            tracing::warn!(
                eta = self.eta,
                "eta >= 1/pi: p_nlu may no longer be monotone in p_att"
            );
        }
        Ok(())
    }

    pub fn ln_epsilon(&self) -> f64 {
        self.epsilon.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    OnTopic,
    OffTopic,
}

impl Verdict {
    pub fn is_on_topic(self) -> bool {
        self == Verdict::OnTopic
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::OnTopic => "on_topic",
            Verdict::OffTopic => "off_topic",
        })
    }
}

/// Clamps `p` into `[ε, 1 − ε]`.
pub fn clamp_probability(p: f64, hp: &Hyperparams) -> Result<Probability> {
    Probability::clamped(p, hp.epsilon)
}

/// Pairwise log-probabilities, one per (chunk, current sentence) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AttentionVector(Vec<LogProb>);

impl AttentionVector {
    pub fn new(entries: Vec<LogProb>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("attention vector must be nonempty"));
        }
        Ok(AttentionVector(entries))
    }

    pub fn from_probabilities(probs: &[Probability]) -> Result<Self> {
        AttentionVector::new(probs.iter().map(|p| p.ln()).collect())
    }

    pub fn entries(&self) -> &[LogProb] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> LogProb {
        self.0
            .iter()
            .copied()
            .fold(LogProb(f64::NEG_INFINITY), |a, b| if b.0 > a.0 { b } else { a })
    }

    pub fn mean(&self) -> LogProb {
        // Averaged as offsets from the max so equal entries give the max exactly.
        let m = self.max().0;
        let offset: f64 = self.0.iter().map(|v| v.0 - m).sum::<f64>() / self.0.len() as f64;
        LogProb((m + offset).min(m))
    }

    pub fn sum(&self) -> LogProb {
        LogProb(self.0.iter().map(|v| v.0).sum::<f64>().min(0.0))
    }
}

/// The attention formula evaluated from the max and mean directly.
///
/// Written as `M + tanh(M)·(M − A)`, which is algebraically identical and
/// makes the collapse `M = A ⇒ F = M` exact in floating point.
pub fn attention_from_stats(max: LogProb, mean: LogProb) -> LogProb {
    let m = max.0;
    let a = mean.0;
    let f = m + m.tanh() * (m - a);
    // A ≤ F ≤ M holds algebraically; clamp away last-ulp rounding.
    LogProb(f.clamp(a.min(m), m))
}

pub fn attention_functional(v: &AttentionVector) -> LogProb {
    attention_from_stats(v.max(), v.mean())
}

/// `α = sin(π·e^F) / e^F · η / |ln ε|`, in `[0, π·η/|ln ε|]`.
pub fn residual_coefficient(attention: LogProb, hp: &Hyperparams) -> f64 {
    let p = attention.exp();
    // sin(πp) = sin(π(1 − p)); the reflected form is exactly zero at p = 1.
    let sine = (PI * p.min(1.0 - p)).sin();
    let ratio = if p > 0.0 { (sine / p).min(PI) } else { PI };
    (ratio * hp.eta / hp.ln_epsilon().abs()).max(0.0)
}

/// The log-difference `d` with the configured orientation applied.
pub fn oriented_log_diff(log_p_sn: LogProb, log_p_sn_given_y: LogProb, hp: &Hyperparams) -> f64 {
    hp.residual_sign.as_f64() * (log_p_sn_given_y.0 - log_p_sn.0)
}

/// `α·d`, where `d` is the log-difference oriented by `hp.residual_sign`.
pub fn residual_term(
    log_p_sn: LogProb,
    log_p_sn_given_y: LogProb,
    alpha: f64,
    hp: &Hyperparams,
) -> Result<f64> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid(format!(
            "residual coefficient must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(alpha * oriented_log_diff(log_p_sn, log_p_sn_given_y, hp))
}

/// Output of [`combine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combined {
    /// `F + residual` before the ceiling at zero.
    pub uncapped: f64,
    pub log_p_nlu: LogProb,
    pub p_nlu: Probability,
    pub verdict: Verdict,
}

pub fn combine(attention: LogProb, residual: f64, hp: &Hyperparams) -> Combined {
    let uncapped = attention.0 + residual;
    let log_p_nlu = LogProb(uncapped.min(0.0));
    let p_nlu = Probability(log_p_nlu.exp().clamp(hp.epsilon, 1.0 - hp.epsilon));
    let verdict = if p_nlu.0 >= hp.decision_threshold {
        Verdict::OnTopic
    } else {
        Verdict::OffTopic
    };
    Combined {
        uncapped,
        log_p_nlu,
        p_nlu,
        verdict,
    }
}

/// Full scored verdict for one candidate sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NluScore {
    pub log_p_max: LogProb,
    pub log_p_avg: LogProb,
    pub attention_term: LogProb,
    pub alpha: f64,
    pub log_diff: f64,
    pub residual_term: f64,
    pub log_p_nlu: LogProb,
    pub p_nlu: Probability,
    pub verdict: Verdict,
}

impl NluScore {
    /// Runs attention, residual and combination in sequence.
    pub fn compute(
        pairs: &AttentionVector,
        log_p_sn: LogProb,
        log_p_sn_given_y: LogProb,
        hp: &Hyperparams,
    ) -> NluScore {
        let attention_term = attention_functional(pairs);
        let alpha = residual_coefficient(attention_term, hp);
        let log_diff = oriented_log_diff(log_p_sn, log_p_sn_given_y, hp);
        let residual_term = alpha * log_diff;
        let c = combine(attention_term, residual_term, hp);
        NluScore {
            log_p_max: pairs.max(),
            log_p_avg: pairs.mean(),
            attention_term,
            alpha,
            log_diff,
            residual_term,
            log_p_nlu: c.log_p_nlu,
            p_nlu: c.p_nlu,
            verdict: c.verdict,
        }
    }

    /// `e^F`, the attention-only probability.
    pub fn p_att(&self) -> f64 {
        self.attention_term.exp()
    }
}

/// The linear (independence-assuming) log-form:
/// `Σ vᵢ + (N−1)·(ln P(S) − ln P(S|y))`. Unnormalized; a comparator only.
pub fn linear_naive_bayes(
    pairs: &AttentionVector,
    log_p_sn: LogProb,
    log_p_sn_given_y: LogProb,
) -> f64 {
    let sum: f64 = pairs.entries().iter().map(|v| v.0).sum();
    sum + pairs.len() as f64 * (log_p_sn.0 - log_p_sn_given_y.0)
}
