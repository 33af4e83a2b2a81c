//! Session state and the end-to-end evaluation pipeline:
//! chunk history → batch pair scores → attention → OOD likelihoods →
//! residual → verdict.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::backends::{PairwiseScorer, SentenceEncoder, TextPair};
use crate::chunker::{chunk, Chunk, Sentence, Speaker};
use crate::continuity::{
    clamp_probability, AttentionVector, Hyperparams, LogProb, NluScore, Probability,
};
use crate::error::{Error, Result};
use crate::ood::OodModel;

/// Number of maximal whitespace-separated runs in `text`.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Token counting used for length and gap bookkeeping. Swap in a
/// model-tokenizer count to match a specific pair model's limits.
pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokens;

impl TokenCounter for WhitespaceTokens {
    fn count(&self, text: &str) -> usize {
        count_tokens(text)
    }
}

/// Shared, immutable model handles a session scores against.
#[derive(Clone)]
pub struct Backends {
    pub scorer: Arc<dyn PairwiseScorer>,
    pub encoder: Arc<dyn SentenceEncoder>,
    /// Likelihood of a sentence under the session topic, `P(S|y)`.
    pub topic_ood: Arc<OodModel>,
    /// Likelihood under the all-topics background, `P(S)`.
    pub background_ood: Arc<OodModel>,
}

impl Backends {
    pub fn check(&self) -> Result<()> {
        self.topic_ood.check_parity(&self.background_ood)?;
        if self.encoder.dim() != self.topic_ood.dim() {
            return Err(Error::Config(format!(
                "encoder dimension {} does not match OOD model dimension {}",
                self.encoder.dim(),
                self.topic_ood.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageTimings {
    pub chunking: Duration,
    pub pair_scoring: Duration,
    pub ood: Duration,
    pub combine: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationTrace {
    pub chunks: Vec<Chunk>,
    /// `ln P(y | chunk_i, candidate)`, aligned with `chunks`.
    pub pair_scores: AttentionVector,
    pub p_topic: Probability,
    pub p_background: Probability,
    pub score: NluScore,
    pub baseline_p: Option<Probability>,
    #[serde(skip)]
    pub timing: StageTimings,
}

/// Streaming conversation state for one topic.
///
/// `accept` needs `&mut self`; `evaluate_next` takes `&self` and never
/// changes the session, so concurrent evaluations are fine between accepts.
pub struct Session {
    topic_id: String,
    hp: Hyperparams,
    backends: Backends,
    accepted: Vec<Sentence>,
    chunks: Vec<Chunk>,
}

impl Session {
    pub fn new(topic_id: impl Into<String>, hp: Hyperparams, backends: Backends) -> Result<Self> {
        hp.validate()?;
        backends.check()?;
        Ok(Session {
            topic_id: topic_id.into(),
            hp,
            backends,
            accepted: Vec::new(),
            chunks: Vec::new(),
        })
    }

    pub fn topic_id(&self) -> &str {
        &self.topic_id
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn accepted(&self) -> &[Sentence] {
        &self.accepted
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    /// Appends `text` to the on-topic history. Accepting after an off-topic
    /// verdict is allowed; that policy belongs to the caller.
    pub fn accept(&mut self, text: &str, speaker: Speaker) -> Result<()> {
        let sentence = Sentence::new(self.accepted.len(), text, speaker)?;
        self.accepted.push(sentence);
        self.chunks = chunk(&self.accepted, &self.hp)?;
        Ok(())
    }

    pub fn evaluate_next(&self, candidate: &str) -> Result<EvaluationTrace> {
        if self.accepted.is_empty() {
            return Err(Error::Precondition(
                "cannot evaluate without at least one accepted sentence".into(),
            ));
        }
        if candidate.trim().is_empty() {
            return Err(Error::invalid("candidate sentence is empty"));
        }
        let mut timing = StageTimings::default();

        let t = Instant::now();
        let chunks = self.chunks.clone();
        let pairs: Vec<TextPair> = chunks
            .iter()
            .map(|c| TextPair::new(c.text.clone(), candidate))
            .collect();
        timing.chunking = t.elapsed();

        let t = Instant::now();
        let raw = self.backends.scorer.score_batch(&pairs)?;
        if raw.len() != pairs.len() {
            return Err(Error::Protocol(format!(
                "scorer returned {} scores for {} pairs",
                raw.len(),
                pairs.len()
            )));
        }
        // Backends clamp with their own epsilon; re-clamp with the session's.
        let probs = raw
            .iter()
            .map(|p| clamp_probability(p.get(), &self.hp))
            .collect::<Result<Vec<_>>>()?;
        let pair_scores = AttentionVector::from_probabilities(&probs)?;
        timing.pair_scoring = t.elapsed();

        let t = Instant::now();
        let embedding = self.backends.encoder.encode(candidate)?;
        let p_topic = self.backends.topic_ood.probability(&embedding, &self.hp)?;
        let p_background = self.backends.background_ood.probability(&embedding, &self.hp)?;
        timing.ood = t.elapsed();

        let t = Instant::now();
        let score = NluScore::compute(
            &pair_scores,
            LogProb::from(p_background),
            LogProb::from(p_topic),
            &self.hp,
        );
        timing.combine = t.elapsed();

        Ok(EvaluationTrace {
            chunks,
            pair_scores,
            p_topic,
            p_background,
            score,
            baseline_p: None,
            timing,
        })
    }

    /// Single-call baseline: the whole history, cut to its most recent
    /// `token_budget` whitespace tokens, scored as one context.
    /// `None` disables truncation.
    pub fn baseline_nsp(&self, candidate: &str, token_budget: Option<usize>) -> Result<Probability> {
        let context = self.baseline_context(token_budget)?;
        let p = self.backends.scorer.score_pair(&context, candidate)?;
        clamp_probability(p.get(), &self.hp)
    }

    /// The exact context string [`Session::baseline_nsp`] sends to the scorer.
    pub fn baseline_context(&self, token_budget: Option<usize>) -> Result<String> {
        if self.accepted.is_empty() {
            return Err(Error::Precondition(
                "baseline needs at least one accepted sentence".into(),
            ));
        }
        let tokens: Vec<&str> = self
            .accepted
            .iter()
            .flat_map(|s| s.text.split_whitespace())
            .collect();
        let keep = match token_budget {
            Some(budget) if tokens.len() > budget => &tokens[tokens.len() - budget..],
            _ => &tokens[..],
        };
        Ok(keep.join(" "))
    }

    /// Evaluates and fills in the baseline probability in one trace.
    pub fn evaluate_with_baseline(
        &self,
        candidate: &str,
        token_budget: Option<usize>,
    ) -> Result<EvaluationTrace> {
        let mut trace = self.evaluate_next(candidate)?;
        trace.baseline_p = Some(self.baseline_nsp(candidate, token_budget)?);
        Ok(trace)
    }
}
