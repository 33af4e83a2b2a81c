//! Deterministic test doubles: token-set Jaccard for pair relevance and a
//! hashed bag-of-words embedding.

use std::collections::HashSet;

use super::{PairwiseScorer, SentenceEncoder};
use crate::continuity::Probability;
use crate::error::{Error, Result};
use crate::ood::EmbeddingVector;

pub const STUB_DIM: usize = 64;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn token_set(text: &str) -> HashSet<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Jaccard overlap of lowercased whitespace tokens, clamped to `[ε, 1 − ε]`.
///
/// Symmetric in its arguments, unlike a real next-sentence model.
#[derive(Debug, Clone, Copy)]
pub struct StubScorer {
    epsilon: f64,
}

impl StubScorer {
    pub fn new(epsilon: f64) -> Self {
        StubScorer { epsilon }
    }

    pub fn jaccard(context: &str, current: &str) -> Result<f64> {
        let a = token_set(context);
        let b = token_set(current);
        if a.is_empty() || b.is_empty() {
            return Err(Error::invalid("stub scorer needs two non-empty texts"));
        }
        let inter = a.intersection(&b).count();
        let union = a.len() + b.len() - inter;
        Ok(inter as f64 / union as f64)
    }
}

impl PairwiseScorer for StubScorer {
    fn score_pair(&self, context: &str, current: &str) -> Result<Probability> {
        Probability::clamped(Self::jaccard(context, current)?, self.epsilon)
    }
}

/// 64-dim signed feature hashing of lowercased tokens, L2-normalized.
///
/// Token `t` adds `+1` (hash bit 63 clear) or `−1` (set) at index
/// `fnv1a_64(t) mod 64`. Texts with no tokens, or whose contributions
/// cancel, map to the unit vector at index 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubEncoder;

impl SentenceEncoder for StubEncoder {
    fn dim(&self) -> usize {
        STUB_DIM
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector> {
        let mut acc = vec![0.0f64; STUB_DIM];
        for token in text.split_whitespace() {
            let h = fnv1a_64(token.to_lowercase().as_bytes());
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            acc[(h % STUB_DIM as u64) as usize] += sign;
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            acc[0] = 1.0;
        } else {
            acc.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector::new(acc)
    }
}
