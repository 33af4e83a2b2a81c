//! Sliding-window segmentation of conversation history into overlapping chunks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::continuity::Hyperparams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Bot,
    #[default]
    Unknown,
}

impl FromStr for Speaker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "user" | "customer" => Ok(Speaker::User),
            "bot" | "assistant" | "agent" => Ok(Speaker::Bot),
            "unknown" | "" => Ok(Speaker::Unknown),
            other => Err(Error::invalid(format!("unknown speaker {other:?}"))),
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::User => "user",
            Speaker::Bot => "bot",
            Speaker::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub speaker: Speaker,
}

impl Sentence {
    /// Fails if `text` is empty after trimming.
    pub fn new(index: usize, text: impl Into<String>, speaker: Speaker) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::invalid(format!("sentence {index} is empty")));
        }
        Ok(Sentence {
            index,
            text,
            speaker,
        })
    }
}

/// Sentences `[start, end)` joined with single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Chunk {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }
}

/// Window spans over `n` sentences.
///
/// Regular windows start at `0, stride, 2·stride, …` while they fit. If the
/// last regular window stops short of `n`, one right-aligned window
/// `[n − window, n)` is appended so the most recent sentence always sits in
/// a full-width chunk.
pub fn chunk_spans(n: usize, window: usize, stride: usize) -> Vec<(usize, usize)> {
    assert!(window >= 1 && stride >= 1);
    let mut spans = Vec::with_capacity(n / stride + 2);
    let mut start = 0;
    while start + window <= n {
        spans.push((start, start + window));
        start += stride;
    }
    if spans.last().is_none_or(|&(_, end)| end != n) && n > 0 {
        spans.push((n.saturating_sub(window), n));
    }
    spans
}

pub fn chunk(sentences: &[Sentence], hp: &Hyperparams) -> Result<Vec<Chunk>> {
    if sentences.is_empty() {
        return Err(Error::invalid("cannot chunk an empty conversation"));
    }
    if hp.window == 0 || hp.stride == 0 {
        return Err(Error::Config("window and stride must be >= 1".into()));
    }
    Ok(chunk_spans(sentences.len(), hp.window, hp.stride)
        .into_iter()
        .map(|(start, end)| Chunk {
            start,
            end,
            text: join(&sentences[start..end]),
        })
        .collect())
}

fn join(sentences: &[Sentence]) -> String {
    let mut text = String::new();
    for s in sentences {
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(s.text.trim());
    }
    text
}
