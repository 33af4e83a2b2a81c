use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chunker::Speaker;
use crate::engine::count_tokens;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Responds to the immediately preceding sentence.
    Normal,
    /// Responds to an earlier sentence.
    Leap,
    /// Unrelated to the topic and to customer service.
    OodShift,
    /// Leaves the topic but stays within customer service.
    IdShift,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Normal, Label::Leap, Label::OodShift, Label::IdShift];

    /// Normal and leap sentences are the positive (on-topic) class.
    pub fn is_on_topic(self) -> bool {
        matches!(self, Label::Normal | Label::Leap)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Leap => "leap",
            Label::OodShift => "ood_shift",
            Label::IdShift => "id_shift",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSentence {
    pub text: String,
    #[serde(default)]
    pub speaker: Speaker,
    #[serde(default)]
    pub label: Option<Label>,
    #[serde(default)]
    pub leap_target: Option<usize>,
}

/// One conversation with exactly one labeled sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub topic: String,
    pub sentences: Vec<RecordSentence>,
}

impl ConversationRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(format!("record {}: {msg}", self.id)));
        let labeled: Vec<usize> = self
            .sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label.is_some())
            .map(|(i, _)| i)
            .collect();
        if labeled.len() != 1 {
            return bad(format!("expected exactly one labeled sentence, found {}", labeled.len()));
        }
        let at = labeled[0];
        if at == 0 {
            return bad("the labeled sentence needs at least one preceding sentence".into());
        }
        for (i, s) in self.sentences.iter().enumerate() {
            if s.text.trim().is_empty() {
                return bad(format!("sentence {i} is empty"));
            }
            match (s.label, s.leap_target) {
                (Some(Label::Leap), Some(t)) if t < at => {}
                (Some(Label::Leap), Some(t)) => {
                    return bad(format!("leap_target {t} must precede labeled index {at}"))
                }
                (Some(Label::Leap), None) => return bad("leap without leap_target".into()),
                (_, Some(_)) => return bad(format!("sentence {i} has leap_target but is not a leap")),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn labeled_index(&self) -> usize {
        self.sentences
            .iter()
            .position(|s| s.label.is_some())
            .expect("validated record has a labeled sentence")
    }

    pub fn label(&self) -> Label {
        self.sentences[self.labeled_index()].label.unwrap()
    }

    pub fn history(&self) -> &[RecordSentence] {
        &self.sentences[..self.labeled_index()]
    }

    pub fn candidate(&self) -> &RecordSentence {
        &self.sentences[self.labeled_index()]
    }

    pub fn history_tokens(&self) -> usize {
        self.history().iter().map(|s| count_tokens(&s.text)).sum()
    }

    /// Whitespace tokens strictly between the leap target and the labeled sentence.
    pub fn leap_gap_tokens(&self) -> Option<usize> {
        let at = self.labeled_index();
        let target = self.sentences[at].leap_target?;
        Some(
            self.sentences[target + 1..at]
                .iter()
                .map(|s| count_tokens(&s.text))
                .sum(),
        )
    }

    /// Distance used to bucket a record in the gap experiment: the leap gap
    /// for leaps, zero for normal sentences, and the whole history for
    /// shifts (which have no anchor sentence).
    pub fn gap_tokens(&self) -> usize {
        match self.label() {
            Label::Leap => self.leap_gap_tokens().unwrap_or(0),
            Label::Normal => 0,
            Label::OodShift | Label::IdShift => self.history_tokens(),
        }
    }
}

pub fn write_jsonl<W: Write>(records: &[ConversationRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)
            .map_err(|e| Error::invalid(format!("serializing record {}: {e}", r.id)))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<ConversationRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ConversationRecord = serde_json::from_str(&line)
            .map_err(|e| Error::invalid(format!("dataset line {}: {e}", lineno + 1)))?;
        rec.validate()?;
        records.push(rec);
    }
    Ok(records)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<ConversationRecord>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_jsonl(std::io::BufReader::new(file))
}

pub fn save_dataset(records: &[ConversationRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    write_jsonl(records, &mut out)?;
    out.flush()?;
    Ok(())
}
