use rand::Rng;
use serde::{Deserialize, Serialize};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.5772156649;

/// Expected path length of an unsuccessful BST search over `n` points,
/// `c(n) = 2·H(n−1) − 2(n−1)/n` with `H(k) ≈ ln k + γ`.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Internal {
        split_dim: usize,
        split_value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    External {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    pub height_limit: usize,
    pub root: Node,
}

impl IsolationTree {
    /// Builds a tree over `sample` (indices into `data`).
    pub fn build<R: Rng>(data: &[Vec<f64>], sample: &mut [usize], height_limit: usize, rng: &mut R) -> Self {
        let root = build_node(data, sample, 0, height_limit, rng);
        IsolationTree { height_limit, root }
    }

    /// Path length `h(x)`: edges traversed plus `c(size)` for the external node reached.
    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        let mut depth = 0usize;
        loop {
            match node {
                Node::Internal {
                    split_dim,
                    split_value,
                    left,
                    right,
                } => {
                    node = if x[*split_dim] < *split_value { left } else { right };
                    depth += 1;
                }
                Node::External { size } => {
                    return depth as f64 + average_path_length(*size);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Internal { left, right, .. } => 1 + walk(left).max(walk(right)),
                Node::External { .. } => 0,
            }
        }
        walk(&self.root)
    }
}

fn build_node<R: Rng>(
    data: &[Vec<f64>],
    sample: &mut [usize],
    depth: usize,
    height_limit: usize,
    rng: &mut R,
) -> Node {
    if depth >= height_limit || sample.len() <= 1 {
        return Node::External { size: sample.len() };
    }

    // Per-feature ranges over this node's points; only features with a
    // nonzero range admit a split strictly inside (min, max).
    let dim = data[sample[0]].len();
    let mut splittable: Vec<(usize, f64, f64)> = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for d in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in sample.iter() {
            let v = data[i][d];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // Need at least one representable value strictly inside (lo, hi).
        if lo + (hi - lo) / 2.0 > lo && lo + (hi - lo) / 2.0 < hi {
            splittable.push((d, lo, hi));
        }
    }
    if splittable.is_empty() {
        // All remaining points are identical.
        return Node::External { size: sample.len() };
    }

    let (split_dim, lo, hi) = splittable[rng.random_range(0..splittable.len())];
    let mut split_value = rng.random_range(lo..hi);
    let mut tries = 0;
    while !(split_value > lo && split_value < hi) {
        tries += 1;
        split_value = if tries < 16 {
            rng.random_range(lo..hi)
        } else {
            lo + (hi - lo) / 2.0
        };
    }

    // Partition in place: points below the split go left.
    let mut mid = 0;
    for j in 0..sample.len() {
        if data[sample[j]][split_dim] < split_value {
            sample.swap(mid, j);
            mid += 1;
        }
    }
    let (left, right) = sample.split_at_mut(mid);
    Node::Internal {
        split_dim,
        split_value,
        left: Box::new(build_node(data, left, depth + 1, height_limit, rng)),
        right: Box::new(build_node(data, right, depth + 1, height_limit, rng)),
    }
}
