//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use continuity_core::backends::{SentenceEncoder, StubEncoder, StubScorer};
use continuity_core::harness::{generate_corpus, CorpusKind, GeneratorConfig};
use continuity_core::{
    AttentionVector, Backends, EmbeddingVector, ForestParams, Hyperparams, LogProb, OodModel,
    Session, Speaker,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn attention_vector(len: usize, seed: u64) -> AttentionVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = Hyperparams::default().ln_epsilon();
    AttentionVector::new(
        (0..len)
            .map(|_| LogProb::new(rng.random_range(lo..=0.0)).unwrap())
            .collect(),
    )
    .unwrap()
}

pub fn embeddings(n: usize, dim: usize, seed: u64) -> Vec<EmbeddingVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| EmbeddingVector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect()
}

fn train(kind: CorpusKind, n: usize, seed: u64) -> OodModel {
    let corpus = generate_corpus(&GeneratorConfig::default(), kind, n).unwrap();
    let emb: Vec<EmbeddingVector> = corpus.iter().map(|s| StubEncoder.encode(s).unwrap()).collect();
    OodModel::train(&emb, ForestParams::default(), seed).unwrap()
}

pub fn stub_backends() -> Backends {
    Backends {
        scorer: Arc::new(StubScorer::new(Hyperparams::default().epsilon)),
        encoder: Arc::new(StubEncoder),
        topic_ood: Arc::new(train(CorpusKind::Topic, 400, 1)),
        background_ood: Arc::new(train(CorpusKind::Background, 800, 2)),
    }
}

/// A session whose history yields exactly `chunks` chunks at window 4, stride 2.
pub fn session(backends: &Backends, chunks: usize) -> Session {
    let words = ["pizza", "crust", "basil", "garlic", "tomato", "olive", "oregano", "mozzarella"];
    let mut s = Session::new("bench", Hyperparams::default(), backends.clone()).unwrap();
    for i in 0..2 * chunks + 2 {
        let text: Vec<&str> = (0..12).map(|j| words[(i + j) % words.len()]).collect();
        s.accept(&text.join(" "), Speaker::User).unwrap();
    }
    s
}
