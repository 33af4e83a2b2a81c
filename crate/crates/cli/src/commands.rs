use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use continuity_core::harness::{
    generate, generate_corpus, load_dataset, run_gap_experiment, run_length_experiment,
    run_residual_experiment, save_dataset, CorpusKind, GeneratorConfig, Label,
};
use continuity_core::{EmbeddingVector, Error, OodModel, Session, Speaker};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::service::{router, AppState};
use crate::BindError;

/// One input line: `text` or `speaker<TAB>text`.
pub fn parse_line(line: &str) -> Result<(Speaker, String), Error> {
    match line.split_once('\t') {
        Some((speaker, text)) => {
            let speaker: Speaker = speaker.parse()?;
            Ok((speaker, text.trim().to_string()))
        }
        None => Ok((Speaker::Unknown, line.trim().to_string())),
    }
}

fn read_sentences(input: Option<&Path>) -> anyhow::Result<Vec<(Speaker, String)>> {
    let reader: Box<dyn BufRead> = match input {
        Some(p) if p != Path::new("-") => Box::new(io::BufReader::new(
            fs::File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
        _ => Box::new(io::stdin().lock()),
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.context("reading input")?;
        if line.trim().is_empty() {
            continue;
        }
        let (speaker, text) = parse_line(&line).with_context(|| format!("input line {}", i + 1))?;
        if text.is_empty() {
            return Err(Error::InvalidInput(format!("input line {} has no text", i + 1)).into());
        }
        out.push((speaker, text));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ScoreLine {
    index: usize,
    p_nlu: f64,
    #[serde(rename = "F")]
    attention: f64,
    residual: f64,
    verdict: continuity_core::Verdict,
}

pub fn score(cfg: &Config, input: Option<&Path>, no_accept: bool) -> anyhow::Result<()> {
    let sentences = read_sentences(input)?;
    if sentences.len() < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 sentences (history and candidate), got {}",
            sentences.len()
        ))
        .into());
    }
    let backends = cfg.build_backends()?;
    let mut session = Session::new(&cfg.topic, cfg.hyperparams.clone(), backends)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    session.accept(&sentences[0].1, sentences[0].0)?;
    for (index, (speaker, text)) in sentences.iter().enumerate().skip(1) {
        let trace = session.evaluate_next(text)?;
        let line = ScoreLine {
            index,
            p_nlu: trace.score.p_nlu.get(),
            attention: trace.score.attention_term.get(),
            residual: trace.score.residual_term,
            verdict: trace.score.verdict,
        };
        writeln!(out, "{}", serde_json::to_string(&line)?)?;
        if !no_accept {
            session.accept(text, *speaker)?;
        }
    }
    Ok(())
}

pub fn train_ood(cfg: &Config, input: &Path, output: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let sentences: Vec<String> = read_sentences(Some(input))?
        .into_iter()
        .map(|(_, t)| t)
        .collect();
    if sentences.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{} has {} sentences; training needs at least 2",
            input.display(),
            sentences.len()
        ))
        .into());
    }
    let encoder = cfg.build_encoder(None)?;
    let embeddings: Vec<EmbeddingVector> = encoder.encode_batch(&sentences)?;
    let seed = seed.unwrap_or(cfg.seed);
    let model = OodModel::train(&embeddings, cfg.ood, seed)?;
    model
        .save(output)
        .with_context(|| format!("writing {}", output.display()))?;
    let s = model.sorted_scores();
    println!(
        "trained {} trees on {} sentences (dim {}, seed {seed}); theta min={:.6} median={:.6} max={:.6}; wrote {}",
        cfg.ood.trees,
        s.len(),
        model.dim(),
        s[0],
        s[s.len() / 2],
        s[s.len() - 1],
        output.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Gap,
    Length,
    Residual,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Gap => "gap",
            Experiment::Length => "length",
            Experiment::Residual => "residual",
        }
    }
}

pub fn eval(cfg: &Config, dataset: &Path, experiment: Experiment, output: &Path) -> anyhow::Result<()> {
    let records = load_dataset(dataset).with_context(|| format!("loading {}", dataset.display()))?;
    let backends = cfg.build_backends()?;
    let hp = cfg.hyperparams.clone();
    let factory = move |topic: &str| Session::new(topic, hp.clone(), backends.clone());
    let report = match experiment {
        Experiment::Gap => run_gap_experiment(&records, &factory, &cfg.gap_options())?,
        Experiment::Length => run_length_experiment(&records, &factory, &cfg.length_options())?,
        Experiment::Residual => {
            run_residual_experiment(&records, &factory, &cfg.residual_options())?.report
        }
    };
    let dataset_hash = hex::encode(Sha256::digest(fs::read(dataset)?));
    let digest = cfg.digest(&[
        ("experiment", experiment.name().to_string()),
        ("dataset", dataset_hash),
    ])?;
    let report = report.with_meta(Some(cfg.seed), Some(digest));
    fs::write(output, report.to_json()).with_context(|| format!("writing {}", output.display()))?;
    print!("{}", report.to_table());
    println!("wrote {}", output.display());
    Ok(())
}

pub struct SynthArgs<'a> {
    pub generator: Option<&'a Path>,
    pub output: &'a Path,
    pub seed: Option<u64>,
    pub corpus_dir: Option<PathBuf>,
    pub corpus_size: usize,
}

pub fn synth(args: SynthArgs<'_>) -> anyhow::Result<()> {
    let mut gen = match args.generator {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<GeneratorConfig>(&text)
                .map_err(|e| Error::Config(e.to_string()))
                .with_context(|| format!("in generator config {}", p.display()))?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = args.seed {
        gen.seed = seed;
    }
    let records = generate(&gen)?;
    save_dataset(&records, args.output).with_context(|| format!("writing {}", args.output.display()))?;
    let counts: Vec<String> = Label::ALL
        .iter()
        .map(|l| format!("{l}={}", records.iter().filter(|r| r.label() == *l).count()))
        .collect();
    println!(
        "wrote {} records to {} ({})",
        records.len(),
        args.output.display(),
        counts.join(" ")
    );
    if let Some(dir) = args.corpus_dir {
        fs::create_dir_all(&dir)?;
        for (kind, name, n) in [
            (CorpusKind::Topic, "topic.txt", args.corpus_size),
            (CorpusKind::Background, "background.txt", 2 * args.corpus_size),
        ] {
            let lines = generate_corpus(&gen, kind, n)?;
            let path = dir.join(name);
            fs::write(&path, lines.join("\n") + "\n")?;
            println!("wrote {n} sentences to {}", path.display());
        }
    }
    Ok(())
}

pub fn serve(cfg: &Config) -> anyhow::Result<()> {
    let backends = cfg.build_backends()?;
    let state = AppState::new(
        cfg.topic.clone(),
        cfg.hyperparams.clone(),
        backends,
        cfg.service.max_concurrent,
    );
    let bind = cfg.service.bind.clone();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .map_err(|e| BindError(format!("{bind}: {e}")))?;
        tracing::info!(addr = %listener.local_addr()?, "listening");
        eprintln!("listening on {}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok::<_, anyhow::Error>(())
    })
}
