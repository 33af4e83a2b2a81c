#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use continuity_core::backends::{PairwiseScorer, SentenceEncoder, StubEncoder, StubScorer};
use continuity_core::harness::{generate_corpus, CorpusKind, GeneratorConfig};
use continuity_core::{Backends, EmbeddingVector, ForestParams, Hyperparams, OodModel, Probability, Result, Session};

pub fn train(cfg: &GeneratorConfig, kind: CorpusKind, n: usize, seed: u64) -> OodModel {
    let corpus = generate_corpus(cfg, kind, n).unwrap();
    let emb: Vec<EmbeddingVector> = corpus.iter().map(|s| StubEncoder.encode(s).unwrap()).collect();
    OodModel::train(&emb, ForestParams::default(), seed).unwrap()
}

pub fn stub_backends(cfg: &GeneratorConfig) -> Backends {
    Backends {
        scorer: Arc::new(StubScorer::new(0.001)),
        encoder: Arc::new(StubEncoder),
        topic_ood: Arc::new(train(cfg, CorpusKind::Topic, 400, 1)),
        background_ood: Arc::new(train(cfg, CorpusKind::Background, 800, 2)),
    }
}

pub fn factory(backends: Backends, hp: Hyperparams) -> impl Fn(&str) -> Result<Session> {
    move |topic: &str| Session::new(topic, hp.clone(), backends.clone())
}

/// Stub scorer that counts calls and pairs.
#[derive(Default)]
pub struct Counting {
    pub calls: AtomicUsize,
    pub pairs: AtomicUsize,
}

impl PairwiseScorer for Counting {
    fn score_pair(&self, context: &str, current: &str) -> Result<Probability> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.pairs.fetch_add(1, Ordering::SeqCst);
        StubScorer::new(0.001).score_pair(context, current)
    }

    fn score_batch(&self, pairs: &[continuity_core::TextPair]) -> Result<Vec<Probability>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.pairs.fetch_add(pairs.len(), Ordering::SeqCst);
        StubScorer::new(0.001).score_batch(pairs)
    }
}
