//! Seeded synthetic conversations.
//!
//! Every conversation draws, from the topic vocabulary, a small filler pool
//! and a few disjoint word sets for its topical sentences. Filler sentences
//! repeat the pool words; topical sentences list their word set once each.
//! Candidates are built so that the stub Jaccard scorer can tell the labels
//! apart only by looking at the right part of the history:
//!
//! - normal: a shuffle of the immediately preceding sentence
//! - leap: a shuffle of an earlier sentence, followed by filler sized to the
//!   configured token gap
//! - ood_shift / id_shift: words from the background / in-domain lists

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{ConversationRecord, Label, RecordSentence};
use super::vocab;
use crate::chunker::Speaker;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelMix {
    pub normal: f64,
    pub leap: f64,
    pub ood_shift: f64,
    pub id_shift: f64,
}

impl Default for LabelMix {
    fn default() -> Self {
        LabelMix {
            normal: 0.25,
            leap: 0.25,
            ood_shift: 0.25,
            id_shift: 0.25,
        }
    }
}

impl LabelMix {
    fn weights(&self) -> [(Label, f64); 4] {
        [
            (Label::Normal, self.normal),
            (Label::Leap, self.leap),
            (Label::OodShift, self.ood_shift),
            (Label::IdShift, self.id_shift),
        ]
    }

    /// Exact per-label counts for `total` records (largest remainder).
    pub fn counts(&self, total: usize) -> Vec<(Label, usize)> {
        let weights = self.weights();
        let exact: Vec<f64> = weights.iter().map(|(_, w)| w * total as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut left = total - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            if weights[i].1 > 0.0 {
                counts[i] += 1;
                left -= 1;
            }
        }
        weights.iter().map(|(l, _)| *l).zip(counts).collect()
    }
}

/// Settings for records whose single-chunk history gives the stub scorer a
/// Jaccard score inside a target band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandConfig {
    /// Distinct words across the two history sentences.
    pub history_words: [usize; 2],
    /// Candidate words not present in the history.
    pub novel_words: [usize; 2],
    /// Target overlap range for the candidate.
    pub overlap: [f64; 2],
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            history_words: [10, 16],
            novel_words: [0, 6],
            overlap: [0.42, 0.58],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub topic: String,
    pub records: usize,
    pub mix: LabelMix,
    pub topic_vocab: Vec<String>,
    pub background_vocab: Vec<String>,
    /// Customer-service words unrelated to the topic, used by id_shift.
    pub in_domain_vocab: Vec<String>,
    /// History length, in sentences, of normal and shift records.
    pub sentences_per_conversation: [usize; 2],
    /// Token length of filler sentences.
    pub sentence_tokens: [usize; 2],
    /// Distinct words in a topical sentence.
    pub topical_words: [usize; 2],
    /// Size of each conversation's filler word pool.
    pub filler_words: usize,
    /// Whitespace tokens strictly between a leap target and the leap.
    pub leap_gap: [usize; 2],
    /// Filler sentences before a leap target.
    pub leap_lead_sentences: [usize; 2],
    /// Extra records appended after the labeled mix.
    pub band_records: usize,
    pub band: BandConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 7,
            topic: "food_delivery".into(),
            records: 400,
            mix: LabelMix::default(),
            topic_vocab: vocab::owned(vocab::TOPIC),
            background_vocab: vocab::owned(vocab::BACKGROUND),
            in_domain_vocab: vocab::owned(vocab::IN_DOMAIN),
            sentences_per_conversation: [3, 10],
            sentence_tokens: [8, 40],
            topical_words: [28, 36],
            filler_words: 2,
            leap_gap: [100, 700],
            leap_lead_sentences: [0, 2],
            band_records: 0,
            band: BandConfig::default(),
        }
    }
}

fn check_range<T: PartialOrd + std::fmt::Debug>(name: &str, r: &[T; 2]) -> Result<()> {
    if r[0] > r[1] {
        return Err(Error::Config(format!("{name}: min {:?} exceeds max {:?}", r[0], r[1])));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("topic_vocab", &self.topic_vocab),
            ("background_vocab", &self.background_vocab),
            ("in_domain_vocab", &self.in_domain_vocab),
        ];
        let mut seen: HashSet<&str> = HashSet::new();
        for (name, list) in lists {
            for w in list {
                if w.is_empty() || w.split_whitespace().count() != 1 {
                    return Err(Error::Config(format!("{name}: {w:?} is not a single word")));
                }
                if !seen.insert(w.as_str()) {
                    return Err(Error::Config(format!(
                        "word {w:?} appears twice; vocabularies must be disjoint"
                    )));
                }
            }
        }

        let weights = self.mix.weights();
        if weights.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("label proportions must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("label proportions sum to {total}, not 1")));
        }

        check_range("sentences_per_conversation", &self.sentences_per_conversation)?;
        check_range("sentence_tokens", &self.sentence_tokens)?;
        check_range("topical_words", &self.topical_words)?;
        check_range("leap_gap", &self.leap_gap)?;
        check_range("leap_lead_sentences", &self.leap_lead_sentences)?;
        check_range("band.history_words", &self.band.history_words)?;
        check_range("band.novel_words", &self.band.novel_words)?;
        check_range("band.overlap", &self.band.overlap)?;

        if self.sentences_per_conversation[0] < 2 {
            return Err(Error::Config("sentences_per_conversation must start at >= 2".into()));
        }
        if self.sentence_tokens[0] == 0 || self.topical_words[0] == 0 || self.filler_words == 0 {
            return Err(Error::Config(
                "sentence_tokens, topical_words and filler_words must be >= 1".into(),
            ));
        }
        let need = 2 * self.topical_words[1] + self.filler_words;
        if self.topic_vocab.len() < need {
            return Err(Error::Config(format!(
                "topic_vocab has {} words, needs at least {need}",
                self.topic_vocab.len()
            )));
        }
        for (name, list) in [
            ("background_vocab", &self.background_vocab),
            ("in_domain_vocab", &self.in_domain_vocab),
        ] {
            if list.len() < self.topical_words[1] {
                return Err(Error::Config(format!(
                    "{name} has {} words, needs at least {}",
                    list.len(),
                    self.topical_words[1]
                )));
            }
        }
        if self.mix.leap > 0.0 {
            self.gap_sentence_counts()?;
        }
        if self.band_records > 0 {
            let b = &self.band;
            if b.history_words[0] < 2 || !(0.0 < b.overlap[0] && b.overlap[1] < 1.0) {
                return Err(Error::Config(
                    "band needs history_words >= 2 and overlap inside (0, 1)".into(),
                ));
            }
            if self.topic_vocab.len() < b.history_words[1] + b.novel_words[1]
                || self.background_vocab.len() < b.novel_words[1]
                || self.in_domain_vocab.len() < b.novel_words[1]
            {
                return Err(Error::Config("vocabularies too small for band settings".into()));
            }
        }
        Ok(())
    }

    /// Feasible numbers of filler sentences between a leap target and the leap.
    fn gap_sentence_counts(&self) -> Result<(usize, usize)> {
        let [gmin, gmax] = self.leap_gap;
        let [smin, smax] = self.sentence_tokens;
        let lo = gmin.div_ceil(smax).max(1);
        let hi = gmax / smin;
        if lo > hi {
            return Err(Error::Config(format!(
                "leap_gap [{gmin}, {gmax}] cannot be filled with sentences of {smin}..={smax} tokens"
            )));
        }
        Ok((lo, hi))
    }
}

struct Conversation<'a> {
    cfg: &'a GeneratorConfig,
    filler: Vec<&'a str>,
    /// Disjoint topical word sets: one for an opening sentence, one for the anchor.
    opening: Vec<&'a str>,
    anchor: Vec<&'a str>,
}

fn range(rng: &mut ChaCha8Rng, r: [usize; 2]) -> usize {
    rng.random_range(r[0]..=r[1])
}

fn pick<'a>(rng: &mut ChaCha8Rng, list: &'a [String], k: usize) -> Vec<&'a str> {
    index::sample(rng, list.len(), k)
        .into_iter()
        .map(|i| list[i].as_str())
        .collect()
}

impl<'a> Conversation<'a> {
    fn new(cfg: &'a GeneratorConfig, rng: &mut ChaCha8Rng) -> Self {
        let a = range(rng, cfg.topical_words);
        let b = range(rng, cfg.topical_words);
        let words = pick(rng, &cfg.topic_vocab, cfg.filler_words + a + b);
        Conversation {
            cfg,
            filler: words[..cfg.filler_words].to_vec(),
            opening: words[cfg.filler_words..cfg.filler_words + a].to_vec(),
            anchor: words[cfg.filler_words + a..].to_vec(),
        }
    }

    fn filler_sentence(&self, rng: &mut ChaCha8Rng, tokens: usize) -> String {
        (0..tokens)
            .map(|_| self.filler[rng.random_range(0..self.filler.len())])
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn fillers(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
        (0..count)
            .map(|_| {
                let n = range(rng, self.cfg.sentence_tokens);
                self.filler_sentence(rng, n)
            })
            .collect()
    }

    /// `count` filler sentences whose token lengths sum to `total`.
    fn fillers_summing_to(&self, rng: &mut ChaCha8Rng, count: usize, total: usize) -> Vec<String> {
        let [smin, smax] = self.cfg.sentence_tokens;
        let mut lens = vec![smin; count];
        let mut left = total - smin * count;
        while left > 0 {
            let i = rng.random_range(0..count);
            if lens[i] < smax {
                lens[i] += 1;
                left -= 1;
            }
        }
        lens.into_iter()
            .map(|n| self.filler_sentence(rng, n))
            .collect()
    }
}

fn shuffled(rng: &mut ChaCha8Rng, words: &[&str]) -> String {
    let mut w = words.to_vec();
    w.shuffle(rng);
    w.join(" ")
}

fn assemble(
    id: String,
    topic: &str,
    history: Vec<String>,
    candidate: String,
    label: Label,
    leap_target: Option<usize>,
) -> ConversationRecord {
    let mut sentences: Vec<RecordSentence> = history
        .into_iter()
        .map(|text| RecordSentence {
            text,
            speaker: Speaker::Unknown,
            label: None,
            leap_target: None,
        })
        .collect();
    sentences.push(RecordSentence {
        text: candidate,
        speaker: Speaker::Unknown,
        label: Some(label),
        leap_target,
    });
    for (i, s) in sentences.iter_mut().enumerate() {
        s.speaker = if i % 2 == 0 { Speaker::User } else { Speaker::Bot };
    }
    ConversationRecord {
        id,
        topic: topic.to_string(),
        sentences,
    }
}

fn labeled_record(
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
    id: String,
    label: Label,
) -> Result<ConversationRecord> {
    let conv = Conversation::new(cfg, rng);
    let record = match label {
        Label::Normal => {
            let n = range(rng, cfg.sentences_per_conversation);
            let mut history = vec![conv.opening.join(" ")];
            history.extend(conv.fillers(rng, n - 2));
            history.push(conv.anchor.join(" "));
            let candidate = shuffled(rng, &conv.anchor);
            assemble(id, &cfg.topic, history, candidate, label, None)
        }
        Label::Leap => {
            let lead = range(rng, cfg.leap_lead_sentences);
            let (kmin, kmax) = cfg.gap_sentence_counts()?;
            let k = rng.random_range(kmin..=kmax);
            let [smin, smax] = cfg.sentence_tokens;
            let gap = rng.random_range(cfg.leap_gap[0].max(k * smin)..=cfg.leap_gap[1].min(k * smax));
            let mut history = conv.fillers(rng, lead);
            let target = history.len();
            history.push(conv.anchor.join(" "));
            history.extend(conv.fillers_summing_to(rng, k, gap));
            let candidate = shuffled(rng, &conv.anchor);
            assemble(id, &cfg.topic, history, candidate, label, Some(target))
        }
        Label::OodShift | Label::IdShift => {
            let n = range(rng, cfg.sentences_per_conversation);
            let mut history = vec![conv.opening.join(" ")];
            history.extend(conv.fillers(rng, n - 1));
            let source = if label == Label::OodShift {
                &cfg.background_vocab
            } else {
                &cfg.in_domain_vocab
            };
            let k = range(rng, cfg.topical_words);
            let words = pick(rng, source, k);
            assemble(id, &cfg.topic, history, words.join(" "), label, None)
        }
    };
    Ok(record)
}

fn band_record(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng, id: String) -> ConversationRecord {
    let b = &cfg.band;
    loop {
        let h = range(rng, b.history_words);
        let m = range(rng, b.novel_words);
        let target = rng.random_range(b.overlap[0]..=b.overlap[1]);
        let k = ((target * (h + m) as f64).round() as usize).clamp(1, h);
        let overlap = k as f64 / (h + m) as f64;
        if overlap < b.overlap[0] || overlap > b.overlap[1] {
            continue;
        }
        let (label, source) = match if m == 0 { 0 } else { rng.random_range(0..3) } {
            0 => (Label::Normal, &cfg.topic_vocab),
            1 => (Label::OodShift, &cfg.background_vocab),
            _ => (Label::IdShift, &cfg.in_domain_vocab),
        };
        // History words come from the topic list; novel words must avoid them.
        let words = pick(rng, &cfg.topic_vocab, h + if label == Label::Normal { m } else { 0 });
        let history_words = &words[..h];
        let novel: Vec<&str> = if label == Label::Normal {
            words[h..].to_vec()
        } else {
            pick(rng, source, m)
        };
        let split = rng.random_range(1..h);
        let history = vec![history_words[..split].join(" "), history_words[split..].join(" ")];
        let mut cand: Vec<&str> = index::sample(rng, h, k)
            .into_iter()
            .map(|i| history_words[i])
            .collect();
        cand.extend(novel);
        let candidate = shuffled(rng, &cand);
        return assemble(id, &cfg.topic, history, candidate, label, None);
    }
}

/// Generates `records` labeled conversations in the configured mix, then
/// `band_records` band records. Same config, same output.
pub fn generate(cfg: &GeneratorConfig) -> Result<Vec<ConversationRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut labels: Vec<Label> = cfg
        .mix
        .counts(cfg.records)
        .into_iter()
        .flat_map(|(l, n)| std::iter::repeat_n(l, n))
        .collect();
    labels.shuffle(&mut rng);

    let mut out = Vec::with_capacity(cfg.records + cfg.band_records);
    for (i, label) in labels.into_iter().enumerate() {
        let id = format!("{}-{i:05}", cfg.topic);
        out.push(labeled_record(cfg, &mut rng, id, label)?);
    }
    for i in 0..cfg.band_records {
        let id = format!("{}-band-{i:05}", cfg.topic);
        out.push(band_record(cfg, &mut rng, id));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    /// Sentences about the configured topic.
    Topic,
    /// An even mixture of all three vocabularies.
    Background,
}

/// Unlabeled training sentences for the OOD models.
pub fn generate_corpus(cfg: &GeneratorConfig, kind: CorpusKind, count: usize) -> Result<Vec<String>> {
    cfg.validate()?;
    let salt = match kind {
        CorpusKind::Topic => 0x0074_6f70_6963_u64,
        CorpusKind::Background => 0x0062_6163_6b67_u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    let sources = [&cfg.topic_vocab, &cfg.in_domain_vocab, &cfg.background_vocab];
    Ok((0..count)
        .map(|_| {
            let source = match kind {
                CorpusKind::Topic => sources[0],
                CorpusKind::Background => sources[rng.random_range(0..3)],
            };
            let k = range(&mut rng, cfg.topical_words).min(source.len());
            let words = pick(&mut rng, source, k);
            shuffled(&mut rng, &words)
        })
        .collect())
}
