use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use continuity_core::backends::{
    Fallback, PairwiseScorer, RecordedScores, RemoteConfig, RemoteEncoder, RemoteScorer,
    SentenceEncoder, StubEncoder, StubScorer,
};
use continuity_core::harness::{GapOptions, LengthOptions, ResidualOptions};
use continuity_core::{Backends, Error, ForestParams, Hyperparams, OodModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendSpec {
    Stub,
    Recorded(PathBuf),
    Remote(String),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            _ if s == "stub" => Ok(BackendSpec::Stub),
            Some(("recorded", path)) if !path.is_empty() => Ok(BackendSpec::Recorded(path.into())),
            Some(("remote", url)) if !url.is_empty() => Ok(BackendSpec::Remote(url.into())),
            _ => Err(format!(
                "backend {s:?} is not one of stub | recorded:<path> | remote:<url>"
            )),
        }
    }
}

impl TryFrom<String> for BackendSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Stub => f.write_str("stub"),
            BackendSpec::Recorded(p) => write!(f, "recorded:{}", p.display()),
            BackendSpec::Remote(u) => write!(f, "remote:{u}"),
        }
    }
}

impl From<BackendSpec> for String {
    fn from(b: BackendSpec) -> String {
        b.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EncoderSpec {
    Stub,
    Remote(String),
}

impl FromStr for EncoderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match BackendSpec::from_str(s) {
            Ok(BackendSpec::Stub) => Ok(EncoderSpec::Stub),
            Ok(BackendSpec::Remote(u)) => Ok(EncoderSpec::Remote(u)),
            _ => Err(format!("encoder {s:?} is not one of stub | remote:<url>")),
        }
    }
}

impl TryFrom<String> for EncoderSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncoderSpec::Stub => f.write_str("stub"),
            EncoderSpec::Remote(u) => write!(f, "remote:{u}"),
        }
    }
}

impl From<EncoderSpec> for String {
    fn from(e: EncoderSpec) -> String {
        e.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSettings {
    pub timeout_ms: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_batch: usize,
    pub max_in_flight: usize,
}

impl Default for RemoteSettings {
    fn default() -> Self {
        let d = RemoteConfig::default();
        RemoteSettings {
            timeout_ms: d.timeout.as_millis() as u64,
            retries: d.retries,
            backoff_ms: d.backoff.as_millis() as u64,
            max_batch: d.max_batch,
            max_in_flight: d.max_in_flight,
        }
    }
}

impl RemoteSettings {
    fn client(&self, endpoint: &str) -> RemoteConfig {
        RemoteConfig {
            endpoint: endpoint.to_string(),
            timeout: Duration::from_millis(self.timeout_ms),
            retries: self.retries,
            backoff: Duration::from_millis(self.backoff_ms),
            max_batch: self.max_batch,
            max_in_flight: self.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub max_concurrent: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            max_concurrent: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub topic: String,
    pub hyperparams: Hyperparams,
    pub backend: BackendSpec,
    /// Score for pairs missing from a recorded table; unset means error.
    pub recorded_fallback: Option<f64>,
    pub encoder: EncoderSpec,
    pub topic_ood_path: Option<PathBuf>,
    pub background_ood_path: Option<PathBuf>,
    /// Baseline context budget in whitespace tokens; 0 disables truncation.
    pub token_budget: usize,
    pub bucket_edges: Vec<usize>,
    pub length_segment: usize,
    pub residual_band: [f64; 2],
    pub histogram_bins: usize,
    pub seed: u64,
    pub ood: ForestParams,
    pub remote: RemoteSettings,
    pub service: ServiceConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            topic: "default".into(),
            hyperparams: Hyperparams::default(),
            backend: BackendSpec::Stub,
            recorded_fallback: None,
            encoder: EncoderSpec::Stub,
            topic_ood_path: None,
            background_ood_path: None,
            token_budget: 512,
            bucket_edges: vec![300, 512],
            length_segment: 100,
            residual_band: [0.4, 0.6],
            histogram_bins: 10,
            seed: 0,
            ood: ForestParams::default(),
            remote: RemoteSettings::default(),
            service: ServiceConfig::default(),
        }
    }
}

/// Command-line and environment values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub topic: Option<String>,
    pub backend: Option<BackendSpec>,
    pub encoder: Option<EncoderSpec>,
    pub scorer_endpoint: Option<String>,
    pub encoder_endpoint: Option<String>,
    pub topic_ood: Option<PathBuf>,
    pub background_ood: Option<PathBuf>,
    pub token_budget: Option<usize>,
    pub bind: Option<String>,
}

impl Config {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads `path` if given, otherwise starts from defaults.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                Config::from_toml(&text).with_context(|| format!("in config {}", p.display()))
            }
            None => Ok(Config::default()),
        }
    }

    /// Explicit backend flags win over endpoint variables.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = &o.topic {
            self.topic = t.clone();
        }
        if let Some(url) = &o.scorer_endpoint {
            self.backend = BackendSpec::Remote(url.clone());
        }
        if let Some(b) = &o.backend {
            self.backend = b.clone();
        }
        if let Some(url) = &o.encoder_endpoint {
            self.encoder = EncoderSpec::Remote(url.clone());
        }
        if let Some(e) = &o.encoder {
            self.encoder = e.clone();
        }
        if let Some(p) = &o.topic_ood {
            self.topic_ood_path = Some(p.clone());
        }
        if let Some(p) = &o.background_ood {
            self.background_ood_path = Some(p.clone());
        }
        if let Some(b) = o.token_budget {
            self.token_budget = b;
        }
        if let Some(b) = &o.bind {
            self.service.bind = b.clone();
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.hyperparams.validate()?;
        if self.service.max_concurrent == 0 {
            return Err(Error::Config("service.max_concurrent must be >= 1".into()).into());
        }
        Ok(())
    }

    pub fn budget(&self) -> Option<usize> {
        (self.token_budget > 0).then_some(self.token_budget)
    }

    pub fn gap_options(&self) -> GapOptions {
        GapOptions {
            edges: self.bucket_edges.clone(),
            token_budget: self.budget(),
        }
    }

    pub fn length_options(&self) -> LengthOptions {
        LengthOptions {
            segment_width: self.length_segment,
            token_budget: self.budget(),
        }
    }

    pub fn residual_options(&self) -> ResidualOptions {
        ResidualOptions {
            band: self.residual_band,
            bins: self.histogram_bins,
        }
    }

    pub fn build_scorer(&self) -> anyhow::Result<Arc<dyn PairwiseScorer>> {
        let eps = self.hyperparams.epsilon;
        Ok(match &self.backend {
            BackendSpec::Stub => Arc::new(StubScorer::new(eps)),
            BackendSpec::Recorded(path) => {
                let fallback = self.recorded_fallback.map_or(Fallback::Error, Fallback::Constant);
                let rec = RecordedScores::open(path, fallback, eps)
                    .with_context(|| format!("loading recorded scores {}", path.display()))?;
                Arc::new(rec)
            }
            BackendSpec::Remote(url) => Arc::new(RemoteScorer::new(self.remote.client(url), eps)?),
        })
    }

    pub fn build_encoder(&self, dim: Option<usize>) -> anyhow::Result<Arc<dyn SentenceEncoder>> {
        Ok(match &self.encoder {
            EncoderSpec::Stub => Arc::new(StubEncoder),
            EncoderSpec::Remote(url) => Arc::new(RemoteEncoder::new(self.remote.client(url), dim)?),
        })
    }

    fn ood_path(&self, which: &str, path: &Option<PathBuf>) -> anyhow::Result<PathBuf> {
        let p = path.clone().ok_or_else(|| {
            Error::Config(format!("{which}_ood_path is not set (config file or --{which}-ood)"))
        })?;
        if !p.is_file() {
            return Err(Error::Config(format!("{which} OOD model {} does not exist", p.display())).into());
        }
        Ok(p)
    }

    pub fn load_ood(&self) -> anyhow::Result<(OodModel, OodModel)> {
        let tp = self.ood_path("topic", &self.topic_ood_path)?;
        let bp = self.ood_path("background", &self.background_ood_path)?;
        let topic = OodModel::open(&tp).with_context(|| format!("loading {}", tp.display()))?;
        let background = OodModel::open(&bp).with_context(|| format!("loading {}", bp.display()))?;
        Ok((topic, background))
    }

    pub fn build_backends(&self) -> anyhow::Result<Backends> {
        let (topic, background) = self.load_ood()?;
        let backends = Backends {
            scorer: self.build_scorer()?,
            encoder: self.build_encoder(Some(topic.dim()))?,
            topic_ood: Arc::new(topic),
            background_ood: Arc::new(background),
        };
        backends.check()?;
        Ok(backends)
    }

    /// SHA-256 over the settings that affect results. File inputs enter by
    /// content, so the same inputs at different paths give the same digest.
    pub fn digest(&self, extra: &[(&str, String)]) -> anyhow::Result<String> {
        let file_hash = |p: &Option<PathBuf>| -> anyhow::Result<Option<String>> {
            p.as_ref()
                .map(|p| Ok(hex::encode(Sha256::digest(std::fs::read(p)?))))
                .transpose()
        };
        let backend = match &self.backend {
            BackendSpec::Recorded(p) => format!("recorded:{}", file_hash(&Some(p.clone()))?.unwrap()),
            other => other.to_string(),
        };
        let value = serde_json::json!({
            "topic": self.topic,
            "hyperparams": self.hyperparams,
            "backend": backend,
            "recorded_fallback": self.recorded_fallback,
            "encoder": self.encoder.to_string(),
            "topic_ood": file_hash(&self.topic_ood_path)?,
            "background_ood": file_hash(&self.background_ood_path)?,
            "token_budget": self.token_budget,
            "bucket_edges": self.bucket_edges,
            "length_segment": self.length_segment,
            "residual_band": self.residual_band,
            "histogram_bins": self.histogram_bins,
            "seed": self.seed,
            "extra": extra.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<std::collections::BTreeMap<_, _>>(),
        });
        Ok(continuity_core::harness::config_digest(&value))
    }
}
