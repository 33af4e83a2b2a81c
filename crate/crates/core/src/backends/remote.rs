//! Blocking HTTP client for the inference sidecar.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::{
    EncodeRequest, EncodeResponse, HealthResponse, ScorePairsRequest, ScorePairsResponse,
    ENCODE_PATH, HEALTH_PATH, SCORE_PAIRS_PATH,
};
use super::{PairwiseScorer, SentenceEncoder, TextPair};
use crate::continuity::Probability;
use crate::error::{Error, Result};
use crate::ood::EmbeddingVector;

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8700`.
    pub endpoint: String,
    pub timeout: Duration,
    /// Extra attempts after the first one fails transiently.
    pub retries: u32,
    /// Initial backoff; doubles after every failed attempt.
    pub backoff: Duration,
    pub max_batch: usize,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            ..Default::default()
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.endpoint.trim_end_matches('/'), path)
    }
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "http://127.0.0.1:8700".into(),
            timeout: Duration::from_secs(30),
            retries: 3,
            backoff: Duration::from_millis(100),
            max_batch: 64,
            max_in_flight: 8,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            max: max.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

struct Client {
    config: RemoteConfig,
    agent: ureq::Agent,
    limiter: Limiter,
}

enum Attempt {
    Transient(String),
    Fatal(Error),
}

impl Client {
    fn new(config: RemoteConfig) -> Result<Self> {
        if config.max_batch == 0 {
            return Err(Error::Config("max_batch must be >= 1".into()));
        }
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder()
                .timeout_global(Some(config.timeout))
                .http_status_as_error(false)
                .build(),
        );
        let limiter = Limiter::new(config.max_in_flight);
        Ok(Client {
            config,
            agent,
            limiter,
        })
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let url = self.config.url(path);
        self.with_retries(&url, || self.agent.post(&url).send_json(body))
    }

    fn get<Resp: DeserializeOwned>(&self, path: &str) -> Result<Resp> {
        let url = self.config.url(path);
        self.with_retries(&url, || self.agent.get(&url).call())
    }

    fn with_retries<Resp, F>(&self, url: &str, send: F) -> Result<Resp>
    where
        Resp: DeserializeOwned,
        F: Fn() -> std::result::Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    {
        let _permit = self.limiter.acquire();
        let mut delay = self.config.backoff;
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match Self::attempt(&send) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient(msg)) => {
                    tracing::debug!(url, attempt, error = %msg, "transient backend failure");
                    last = msg;
                }
            }
        }
        Err(Error::BackendUnavailable(format!(
            "{url}: {last} (after {} attempts)",
            self.config.retries + 1
        )))
    }

    fn attempt<Resp, F>(send: &F) -> std::result::Result<Resp, Attempt>
    where
        Resp: DeserializeOwned,
        F: Fn() -> std::result::Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    {
        let mut resp = send().map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status >= 500 {
            return Err(Attempt::Transient(format!("server returned {status}")));
        }
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(Error::Protocol(format!(
                "server rejected request with {status}: {body}"
            ))));
        }
        resp.body_mut()
            .read_json::<Resp>()
            .map_err(|e| Attempt::Fatal(Error::Protocol(format!("malformed response body: {e}"))))
    }
}

/// Pair scorer backed by `POST /v1/score_pairs`.
pub struct RemoteScorer {
    client: Client,
    epsilon: f64,
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig, epsilon: f64) -> Result<Self> {
        Ok(RemoteScorer {
            client: Client::new(config)?,
            epsilon,
        })
    }

    pub fn health(&self) -> Result<HealthResponse> {
        self.client.get(HEALTH_PATH)
    }

    fn score_chunk(&self, pairs: &[TextPair]) -> Result<Vec<Probability>> {
        let resp: ScorePairsResponse = self.client.post(
            SCORE_PAIRS_PATH,
            &ScorePairsRequest {
                pairs: pairs.to_vec(),
            },
        )?;
        if resp.probabilities.len() != pairs.len() {
            return Err(Error::Protocol(format!(
                "sent {} pairs, received {} probabilities",
                pairs.len(),
                resp.probabilities.len()
            )));
        }
        resp.probabilities
            .iter()
            .map(|&p| {
                Probability::clamped(p, self.epsilon)
                    .map_err(|_| Error::Protocol(format!("probability {p} outside [0, 1]")))
            })
            .collect()
    }
}

impl PairwiseScorer for RemoteScorer {
    fn score_pair(&self, context: &str, current: &str) -> Result<Probability> {
        Ok(self.score_batch(&[TextPair::new(context, current)])?[0])
    }

    fn score_batch(&self, pairs: &[TextPair]) -> Result<Vec<Probability>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.client.config.max_batch) {
            out.extend(self.score_chunk(chunk)?);
        }
        Ok(out)
    }
}

/// Sentence encoder backed by `POST /v1/encode`.
pub struct RemoteEncoder {
    client: Client,
    dim: usize,
}

impl RemoteEncoder {
    /// Connects and learns the embedding dimension from a probe request
    /// unless `dim` is given.
    pub fn new(config: RemoteConfig, dim: Option<usize>) -> Result<Self> {
        let mut enc = RemoteEncoder {
            client: Client::new(config)?,
            dim: dim.unwrap_or(0),
        };
        if dim.is_none() {
            let resp: EncodeResponse = enc.client.post(
                ENCODE_PATH,
                &EncodeRequest {
                    texts: vec!["dimension probe".into()],
                },
            )?;
            if resp.dim == 0 {
                return Err(Error::Protocol("server reported dim 0".into()));
            }
            enc.dim = resp.dim;
        }
        Ok(enc)
    }

    fn encode_chunk(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let resp: EncodeResponse = self.client.post(
            ENCODE_PATH,
            &EncodeRequest {
                texts: texts.to_vec(),
            },
        )?;
        if resp.embeddings.len() != texts.len() {
            return Err(Error::Protocol(format!(
                "sent {} texts, received {} embeddings",
                texts.len(),
                resp.embeddings.len()
            )));
        }
        if resp.dim != self.dim || resp.embeddings.iter().any(|e| e.len() != self.dim) {
            return Err(Error::Protocol(format!(
                "expected {}-dim embeddings, server reported {}",
                self.dim, resp.dim
            )));
        }
        resp.embeddings
            .into_iter()
            .map(|e| EmbeddingVector::new(e).map_err(|e| Error::Protocol(e.to_string())))
            .collect()
    }
}

impl SentenceEncoder for RemoteEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector> {
        Ok(self.encode_batch(&[text.to_string()])?.remove(0))
    }

    fn encode_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.client.config.max_batch) {
            out.extend(self.encode_chunk(chunk)?);
        }
        Ok(out)
    }
}
