//! Out-of-distribution likelihoods from an isolation forest.
//!
//! A forest is trained on sentence embeddings from one corpus (a single
//! topic, or the whole background). Each embedding gets a score
//! `θ = −2^(−E[h(x)] / c(ψ))` in `[−1, 0)`; higher means more typical of the
//! corpus. The sorted training scores form an empirical CDF, and the CDF
//! value of a new sentence's score is used as its probability under that
//! corpus.

mod persist;
mod tree;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::continuity::{clamp_probability, Hyperparams, Probability};
use crate::error::{Error, Result};

pub use persist::FORMAT_VERSION;
pub use tree::{average_path_length, IsolationTree, Node};

/// A fixed-length, finite sentence embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("embedding must have dimension >= 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("embedding entry {i} is not finite")));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    /// Number of trees.
    pub trees: usize,
    /// Subsample size per tree.
    pub psi: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 100, psi: 256 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodModel {
    pub(crate) params: ForestParams,
    pub(crate) dim: usize,
    pub(crate) seed: u64,
    pub(crate) c_psi: f64,
    pub(crate) trees: Vec<IsolationTree>,
    pub(crate) sorted_scores: Vec<f64>,
}

impl OodModel {
    /// Trains a forest on `embeddings`.
    ///
    /// Each tree sees a uniform subsample (without replacement) of
    /// `min(psi, n)` points and grows to height `⌈log₂ ψ⌉`. Per-tree RNG
    /// streams are derived from `seed`, so the same inputs always give the
    /// same model.
    pub fn train(embeddings: &[EmbeddingVector], params: ForestParams, seed: u64) -> Result<Self> {
        if embeddings.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 embeddings to train, got {}",
                embeddings.len()
            )));
        }
        if params.psi < 2 {
            return Err(Error::invalid("psi must be >= 2"));
        }
        if params.trees == 0 {
            return Err(Error::invalid("tree count must be >= 1"));
        }
        let dim = embeddings[0].dim();
        if let Some(bad) = embeddings.iter().find(|e| e.dim() != dim) {
            return Err(Error::invalid(format!(
                "mixed embedding dimensions: {} and {}",
                dim,
                bad.dim()
            )));
        }

        let data: Vec<Vec<f64>> = embeddings.iter().map(|e| e.0.clone()).collect();
        let n = data.len();
        let sample_size = params.psi.min(n);
        let height_limit = (sample_size as f64).log2().ceil() as usize;

        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let trees: Vec<IsolationTree> = (0..params.trees)
            .map(|_| {
                let mut rng = ChaCha8Rng::seed_from_u64(master.random());
                let mut sample = index::sample(&mut rng, n, sample_size).into_vec();
                IsolationTree::build(&data, &mut sample, height_limit, &mut rng)
            })
            .collect();

        let mut model = OodModel {
            params,
            dim,
            seed,
            c_psi: average_path_length(sample_size),
            trees,
            sorted_scores: Vec::new(),
        };
        let mut scores: Vec<f64> = data.iter().map(|x| model.score_unchecked(x)).collect();
        scores.sort_by(f64::total_cmp);
        model.sorted_scores = scores;
        Ok(model)
    }

    pub fn params(&self) -> ForestParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn c_psi(&self) -> f64 {
        self.c_psi
    }

    pub fn trees(&self) -> &[IsolationTree] {
        &self.trees
    }

    pub fn sorted_scores(&self) -> &[f64] {
        &self.sorted_scores
    }

    fn check_dim(&self, x: &EmbeddingVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::invalid(format!(
                "embedding dimension {} does not match model dimension {}",
                x.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Mean path length over all trees.
    pub fn mean_path_length(&self, x: &EmbeddingVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.mean_path_unchecked(&x.0))
    }

    fn mean_path_unchecked(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        score_from_path_length(self.mean_path_unchecked(x), self.c_psi)
    }

    /// Sign-inverted isolation score `θ ∈ [−1, 0)`; higher is more in-distribution.
    pub fn anomaly_score(&self, x: &EmbeddingVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.score_unchecked(&x.0))
    }

    /// Fraction of training scores `≤ θ`, clamped to `[ε, 1 − ε]`.
    pub fn cdf(&self, theta: f64, hp: &Hyperparams) -> Probability {
        let count = self.sorted_scores.partition_point(|&s| s <= theta);
        let p = count as f64 / self.sorted_scores.len() as f64;
        clamp_probability(p, hp).expect("count ratio lies in [0, 1]")
    }

    pub fn probability(&self, x: &EmbeddingVector, hp: &Hyperparams) -> Result<Probability> {
        Ok(self.cdf(self.anomaly_score(x)?, hp))
    }

    /// Two models can be compared in a log-ratio only if they share
    /// tree count, subsample size and embedding dimension.
    pub fn check_parity(&self, other: &OodModel) -> Result<()> {
        if self.params != other.params || self.dim != other.dim {
            return Err(Error::Config(format!(
                "OOD models are not comparable: (trees={}, psi={}, dim={}) vs (trees={}, psi={}, dim={})",
                self.params.trees,
                self.params.psi,
                self.dim,
                other.params.trees,
                other.params.psi,
                other.dim
            )));
        }
        Ok(())
    }
}

/// `θ = −2^(−E[h] / c)`.
pub fn score_from_path_length(mean_path: f64, c_psi: f64) -> f64 {
    -(2f64.powf(-mean_path / c_psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(n: usize, center: f64, seed: u64) -> Vec<EmbeddingVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                EmbeddingVector::new((0..4).map(|_| center + rng.random_range(-1.0..1.0)).collect())
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn normalization_fixed_point() {
        assert_eq!(score_from_path_length(10.0, 10.0), -0.5);
    }

    #[test]
    fn scores_lie_in_range_and_sorted() {
        let data = cluster(300, 0.0, 1);
        let m = OodModel::train(&data, ForestParams::default(), 7).unwrap();
        assert_eq!(m.sorted_scores().len(), 300);
        assert!(m.sorted_scores().windows(2).all(|w| w[0] <= w[1]));
        assert!(m.sorted_scores().iter().all(|&s| (-1.0..0.0).contains(&s)));
        assert!((m.c_psi() - 10.244770920116851).abs() < 1e-9);
        assert!(m.trees().iter().all(|t| t.depth() <= 8));
    }

    #[test]
    fn outlier_scores_below_inlier() {
        let data = cluster(200, 0.0, 2);
        let m = OodModel::train(&data, ForestParams::default(), 11).unwrap();
        let inlier = EmbeddingVector::new(vec![0.0; 4]).unwrap();
        let outlier = EmbeddingVector::new(vec![50.0; 4]).unwrap();
        let hp = Hyperparams::default();
        assert!(m.anomaly_score(&inlier).unwrap() > m.anomaly_score(&outlier).unwrap());
        assert!(m.anomaly_score(&outlier).unwrap() < -0.6);
        assert_eq!(m.probability(&outlier, &hp).unwrap().get(), 0.001);
    }

    #[test]
    fn cdf_counting_rule() {
        let data = cluster(4, 0.0, 3);
        let mut m = OodModel::train(&data, ForestParams { trees: 2, psi: 4 }, 0).unwrap();
        m.sorted_scores = vec![-0.9, -0.6, -0.5, -0.4];
        let hp = Hyperparams::default();
        assert_eq!(m.cdf(-0.5, &hp).get(), 0.75);
        assert_eq!(m.cdf(-0.95, &hp).get(), 0.001);
        assert_eq!(m.cdf(-0.1, &hp).get(), 0.999);
    }

    #[test]
    fn duplicates_share_a_score() {
        let mut data = cluster(50, 0.0, 4);
        let dup = data[0].clone();
        data.push(dup.clone());
        data.push(dup.clone());
        let m = OodModel::train(&data, ForestParams::default(), 5).unwrap();
        let s = m.anomaly_score(&dup).unwrap();
        assert_eq!(s, m.anomaly_score(&data[0]).unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let data = cluster(100, 0.0, 6);
        let a = OodModel::train(&data, ForestParams::default(), 99).unwrap();
        let b = OodModel::train(&data, ForestParams::default(), 99).unwrap();
        assert_eq!(a, b);
        let c = OodModel::train(&data, ForestParams::default(), 100).unwrap();
        assert_ne!(a.trees, c.trees);
    }

    #[test]
    fn input_errors() {
        let one = cluster(1, 0.0, 0);
        assert!(OodModel::train(&one, ForestParams::default(), 0).is_err());
        let data = cluster(10, 0.0, 0);
        assert!(OodModel::train(&data, ForestParams { trees: 10, psi: 1 }, 0).is_err());
        let m = OodModel::train(&data, ForestParams::default(), 0).unwrap();
        let wrong = EmbeddingVector::new(vec![0.0; 3]).unwrap();
        assert!(matches!(m.anomaly_score(&wrong), Err(Error::InvalidInput(_))));
        assert!(EmbeddingVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn two_point_minimum_trains() {
        let data = cluster(2, 0.0, 8);
        let m = OodModel::train(&data, ForestParams::default(), 1).unwrap();
        assert_eq!(m.c_psi(), 1.0);
        assert_eq!(m.sorted_scores().len(), 2);
    }

    #[test]
    fn parity_check() {
        let data = cluster(20, 0.0, 9);
        let a = OodModel::train(&data, ForestParams::default(), 1).unwrap();
        let b = OodModel::train(&data, ForestParams { trees: 50, psi: 256 }, 1).unwrap();
        assert!(a.check_parity(&a).is_ok());
        assert!(matches!(a.check_parity(&b), Err(Error::Config(_))));
    }
}
