#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use continuity_core::backends::{SentenceEncoder, StubEncoder};
use continuity_core::harness::{generate_corpus, CorpusKind, GeneratorConfig};
use continuity_core::{EmbeddingVector, ForestParams, OodModel};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_continuity"));
    for var in [
        "CONTINUITY_CONFIG",
        "CONTINUITY_SCORER_ENDPOINT",
        "CONTINUITY_ENCODER_ENDPOINT",
        "CONTINUITY_BIND",
    ] {
        c.env_remove(var);
    }
    c
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub struct Models {
    pub topic: PathBuf,
    pub background: PathBuf,
    pub config: PathBuf,
}

fn train(cfg: &GeneratorConfig, kind: CorpusKind, n: usize, seed: u64) -> OodModel {
    let corpus = generate_corpus(cfg, kind, n).unwrap();
    let emb: Vec<EmbeddingVector> = corpus.iter().map(|s| StubEncoder.encode(s).unwrap()).collect();
    OodModel::train(&emb, ForestParams::default(), seed).unwrap()
}

/// Trains stub-encoder OOD models in-process and writes a config that
/// points at them.
pub fn models(dir: &Path) -> Models {
    let gen = GeneratorConfig::default();
    let topic = dir.join("topic.json");
    let background = dir.join("background.json");
    train(&gen, CorpusKind::Topic, 400, 1).save(&topic).unwrap();
    train(&gen, CorpusKind::Background, 800, 2).save(&background).unwrap();
    let config = dir.join("continuity.toml");
    std::fs::write(
        &config,
        format!(
            "topic = \"food_delivery\"\nseed = 7\ntopic_ood_path = {:?}\nbackground_ood_path = {:?}\n",
            topic.display().to_string(),
            background.display().to_string()
        ),
    )
    .unwrap();
    Models {
        topic,
        background,
        config,
    }
}

/// A port nothing listens on.
pub fn dead_port() -> u16 {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    l.local_addr().unwrap().port()
}
