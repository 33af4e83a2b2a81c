//! Providers for the two learned quantities the engine needs: pairwise
//! relevance of a (chunk, sentence) pair and sentence embeddings.
//!
//! The engine only talks to [`PairwiseScorer`] and [`SentenceEncoder`];
//! swapping one implementation for another with identical outputs gives
//! identical scores.

pub mod protocol;
mod recorded;
mod remote;
mod stub;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::continuity::Probability;
use crate::error::Result;
use crate::ood::EmbeddingVector;

pub use recorded::{Fallback, RecordedScores};
pub use remote::{RemoteConfig, RemoteEncoder, RemoteScorer};
pub use stub::{fnv1a_64, StubEncoder, StubScorer, STUB_DIM};

/// A (context, current) text pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextPair {
    pub context: String,
    pub current: String,
}

impl TextPair {
    pub fn new(context: impl Into<String>, current: impl Into<String>) -> Self {
        TextPair {
            context: context.into(),
            current: current.into(),
        }
    }
}

/// Probability that `current` plausibly continues `context` (on-topic).
pub trait PairwiseScorer: Send + Sync {
    fn score_pair(&self, context: &str, current: &str) -> Result<Probability>;

    /// Scores many pairs; the output is aligned with `pairs`.
    fn score_batch(&self, pairs: &[TextPair]) -> Result<Vec<Probability>> {
        pairs
            .iter()
            .map(|p| self.score_pair(&p.context, &p.current))
            .collect()
    }
}

pub trait SentenceEncoder: Send + Sync {
    fn dim(&self) -> usize;

    fn encode(&self, text: &str) -> Result<EmbeddingVector>;

    fn encode_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| self.encode(t)).collect()
    }
}

impl<T: PairwiseScorer + ?Sized> PairwiseScorer for Arc<T> {
    fn score_pair(&self, context: &str, current: &str) -> Result<Probability> {
        (**self).score_pair(context, current)
    }

    fn score_batch(&self, pairs: &[TextPair]) -> Result<Vec<Probability>> {
        (**self).score_batch(pairs)
    }
}

impl<T: SentenceEncoder + ?Sized> SentenceEncoder for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector> {
        (**self).encode(text)
    }

    fn encode_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        (**self).encode_batch(texts)
    }
}

/// Trims and collapses internal whitespace runs to single spaces.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Memoizes pair scores keyed on the exact (context, current) texts.
pub struct CachingScorer<S> {
    inner: S,
    cache: Mutex<HashMap<TextPair, Probability>>,
}

impl<S: PairwiseScorer> CachingScorer<S> {
    pub fn new(inner: S) -> Self {
        CachingScorer {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

impl<S: PairwiseScorer> PairwiseScorer for CachingScorer<S> {
    fn score_pair(&self, context: &str, current: &str) -> Result<Probability> {
        let key = TextPair::new(context, current);
        if let Some(&p) = self.cache.lock().unwrap().get(&key) {
            return Ok(p);
        }
        let p = self.inner.score_pair(context, current)?;
        self.cache.lock().unwrap().insert(key, p);
        Ok(p)
    }

    fn score_batch(&self, pairs: &[TextPair]) -> Result<Vec<Probability>> {
        let misses: Vec<TextPair> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            pairs
                .iter()
                .filter(|p| !cache.contains_key(*p) && seen.insert(*p))
                .cloned()
                .collect()
        };
        if !misses.is_empty() {
            let scores = self.inner.score_batch(&misses)?;
            let mut cache = self.cache.lock().unwrap();
            cache.extend(misses.into_iter().zip(scores));
        }
        let cache = self.cache.lock().unwrap();
        Ok(pairs.iter().map(|p| cache[p]).collect())
    }
}
