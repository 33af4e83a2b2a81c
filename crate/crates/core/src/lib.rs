//! Topic-continuity scoring for multi-turn conversations.
//!
//! A candidate sentence is scored against overlapping chunks of the
//! accepted history. Pairwise relevance scores are folded by an attention
//! functional that tracks the best-matching chunk when it is confident and
//! the average otherwise; a bounded residual built from two isolation-forest
//! likelihoods nudges uncertain scores toward or away from the topic.

pub mod backends;
pub mod chunker;
pub mod continuity;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ood;

pub use backends::{PairwiseScorer, SentenceEncoder, StubEncoder, StubScorer, TextPair};
pub use chunker::{Chunk, Sentence, Speaker};
pub use continuity::{
    AttentionVector, Hyperparams, LogProb, NluScore, Probability, ResidualSign, Verdict,
};
pub use engine::{Backends, EvaluationTrace, Session};
pub use error::{Error, Result};
pub use ood::{EmbeddingVector, ForestParams, OodModel};
