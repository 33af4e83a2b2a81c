use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{normalize_text, PairwiseScorer};
use crate::continuity::Probability;
use crate::error::{Error, Result};

/// What to do when a pair has no recorded score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fallback {
    Error,
    Constant(f64),
}

/// Replays pair scores from a table, keyed on whitespace-normalized text.
///
/// File format: one record per line,
/// `<normalized context>\t<normalized current>\t<probability>`.
#[derive(Debug, Clone)]
pub struct RecordedScores {
    table: BTreeMap<(String, String), f64>,
    fallback: Fallback,
    epsilon: f64,
}

impl RecordedScores {
    pub fn new(fallback: Fallback, epsilon: f64) -> Self {
        RecordedScores {
            table: BTreeMap::new(),
            fallback,
            epsilon,
        }
    }

    pub fn insert(&mut self, context: &str, current: &str, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("recorded probability {p} outside [0, 1]")));
        }
        self.table
            .insert((normalize_text(context), normalize_text(current)), p);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn parse(text: &str, fallback: Fallback, epsilon: f64) -> Result<Self> {
        let mut rec = RecordedScores::new(fallback, epsilon);
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [context, current, p] = fields.as_slice() else {
                return Err(Error::invalid(format!(
                    "recorded scores line {}: expected 3 tab-separated fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            };
            let p: f64 = p.trim().parse().map_err(|_| {
                Error::invalid(format!("recorded scores line {}: bad probability {p:?}", lineno + 1))
            })?;
            rec.insert(context, current, p)?;
        }
        Ok(rec)
    }

    pub fn open(path: impl AsRef<Path>, fallback: Fallback, epsilon: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        RecordedScores::parse(&text, fallback, epsilon)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for ((context, current), p) in &self.table {
            writeln!(out, "{context}\t{current}\t{p}").unwrap();
        }
        out
    }
}

impl PairwiseScorer for RecordedScores {
    fn score_pair(&self, context: &str, current: &str) -> Result<Probability> {
        let key = (normalize_text(context), normalize_text(current));
        let p = match (self.table.get(&key), self.fallback) {
            (Some(&p), _) => p,
            (None, Fallback::Constant(p)) => p,
            (None, Fallback::Error) => {
                return Err(Error::invalid(format!(
                    "no recorded score for pair ({:?}, {:?})",
                    key.0, key.1
                )))
            }
        };
        Probability::clamped(p, self.epsilon)
    }
}
