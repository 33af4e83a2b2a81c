//! JSON persistence for [`OodModel`].
//!
//! Schema (version 1):
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "t": <tree count>,
//!   "psi": <configured subsample size>,
//!   "c_psi": <path-length normalizer>,
//!   "dim": <embedding dimension>,
//!   "seed": <training seed>,
//!   "trees": [{"height_limit": h, "root": <node>}, ...],
//!   "sorted_scores": [θ, ...]
//! }
//! <node> := {"internal": {"split_dim", "split_value", "left", "right"}}
//!         | {"external": {"size"}}
//! ```
//!
//! Floats are written in shortest round-trip form, so a loaded model
//! reproduces every score bit-for-bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ForestParams, IsolationTree, OodModel};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct FileRef<'a> {
    format_version: u32,
    t: usize,
    psi: usize,
    c_psi: f64,
    dim: usize,
    seed: u64,
    trees: &'a [IsolationTree],
    sorted_scores: &'a [f64],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOwned {
    #[allow(dead_code)]
    format_version: u32,
    t: usize,
    psi: usize,
    c_psi: f64,
    dim: usize,
    seed: u64,
    trees: Vec<IsolationTree>,
    sorted_scores: Vec<f64>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u32>,
}

impl OodModel {
    pub fn to_json(&self) -> String {
        let file = FileRef {
            format_version: FORMAT_VERSION,
            t: self.params.trees,
            psi: self.params.psi,
            c_psi: self.c_psi,
            dim: self.dim,
            seed: self.seed,
            trees: &self.trees,
            sorted_scores: &self.sorted_scores,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn persist<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_json().as_bytes())?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::Persistence(format!("reading model: {e}")))?;
        OodModel::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // Check the version first so an incompatible file gets a clear message
        // instead of a schema error.
        if let Ok(probe) = serde_json::from_str::<VersionProbe>(text) {
            match probe.format_version {
                Some(FORMAT_VERSION) => {}
                Some(v) => {
                    return Err(Error::Persistence(format!(
                        "unsupported model format_version {v}; this build reads version {FORMAT_VERSION}"
                    )))
                }
                None => return Err(Error::Persistence("missing format_version".into())),
            }
        }
        let f: FileOwned = serde_json::from_str(text)
            .map_err(|e| Error::Persistence(format!("malformed model file: {e}")))?;
        validate(&f)?;
        Ok(OodModel {
            params: ForestParams {
                trees: f.t,
                psi: f.psi,
            },
            dim: f.dim,
            seed: f.seed,
            c_psi: f.c_psi,
            trees: f.trees,
            sorted_scores: f.sorted_scores,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        let mut out = std::io::BufWriter::new(file);
        self.persist(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn open(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Persistence(format!("opening {}: {e}", path.display())))?;
        OodModel::load(std::io::BufReader::new(file))
    }
}

fn validate(f: &FileOwned) -> Result<()> {
    let bad = |msg: String| Err(Error::Persistence(msg));
    if f.trees.len() != f.t || f.t == 0 {
        return bad(format!("header says {} trees, file has {}", f.t, f.trees.len()));
    }
    if f.dim == 0 || f.sorted_scores.len() < 2 {
        return bad("model has no dimension or fewer than 2 training scores".into());
    }
    if !(f.c_psi > 0.0 && f.c_psi.is_finite()) {
        return bad(format!("invalid c_psi {}", f.c_psi));
    }
    if !f.sorted_scores.windows(2).all(|w| w[0] <= w[1])
        || !f.sorted_scores.iter().all(|s| (-1.0..0.0).contains(s))
    {
        return bad("sorted_scores must be nondecreasing and lie in [-1, 0)".into());
    }
    for tree in &f.trees {
        check_node(&tree.root, f.dim)?;
    }
    Ok(())
}

fn check_node(node: &super::Node, dim: usize) -> Result<()> {
    if let super::Node::Internal {
        split_dim,
        split_value,
        left,
        right,
    } = node
    {
        if *split_dim >= dim || !split_value.is_finite() {
            return Err(Error::Persistence(format!(
                "invalid split (dim {split_dim}, value {split_value}) for dimension {dim}"
            )));
        }
        check_node(left, dim)?;
        check_node(right, dim)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuity::Hyperparams;
    use crate::ood::EmbeddingVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> OodModel {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data: Vec<EmbeddingVector> = (0..120)
            .map(|_| EmbeddingVector::new((0..6).map(|_| rng.random::<f64>()).collect()).unwrap())
            .collect();
        OodModel::train(&data, ForestParams { trees: 20, psi: 64 }, 4).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = model();
        let mut buf = Vec::new();
        m.persist(&mut buf).unwrap();
        let back = OodModel::load(buf.as_slice()).unwrap();
        assert_eq!(back, m);

        let hp = Hyperparams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let q = EmbeddingVector::new((0..6).map(|_| rng.random_range(-0.5..1.5)).collect())
                .unwrap();
            assert_eq!(
                m.anomaly_score(&q).unwrap().to_bits(),
                back.anomaly_score(&q).unwrap().to_bits()
            );
            assert_eq!(m.probability(&q, &hp).unwrap(), back.probability(&q, &hp).unwrap());
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let json = model().to_json();
        let cut = &json[..json.len() / 2];
        assert!(matches!(OodModel::from_json(cut), Err(Error::Persistence(_))));
    }

    #[test]
    fn version_mismatch_names_both_versions() {
        let json = model().to_json().replacen("\"format_version\":1", "\"format_version\":7", 1);
        let err = OodModel::from_json(&json).unwrap_err().to_string();
        assert!(err.contains('7') && err.contains('1'), "{err}");
    }

    #[test]
    fn inconsistent_header_is_rejected() {
        let json = model().to_json().replacen("\"t\":20", "\"t\":21", 1);
        assert!(matches!(OodModel::from_json(&json), Err(Error::Persistence(_))));
    }
}
