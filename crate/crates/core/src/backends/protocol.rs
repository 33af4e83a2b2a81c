//! Request and response bodies of the inference sidecar protocol.
//!
//! | method | path             | request               | response                    |
//! |--------|------------------|-----------------------|-----------------------------|
//! | POST   | `/v1/score_pairs`| [`ScorePairsRequest`] | [`ScorePairsResponse`]      |
//! | POST   | `/v1/encode`     | [`EncodeRequest`]     | [`EncodeResponse`]          |
//! | GET    | `/healthz`       |                       | [`HealthResponse`]          |
//!
//! Bodies are JSON. 200 on success, 4xx for a malformed request, 5xx for a
//! model failure.

use serde::{Deserialize, Serialize};

use super::TextPair;

pub const SCORE_PAIRS_PATH: &str = "/v1/score_pairs";
pub const ENCODE_PATH: &str = "/v1/encode";
pub const HEALTH_PATH: &str = "/healthz";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePairsRequest {
    pub pairs: Vec<TextPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePairsResponse {
    pub probabilities: Vec<f64>,
    /// Optional per-pair flag set by servers that cut overlong inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub dim: usize,
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_ids: Vec<String>,
}
