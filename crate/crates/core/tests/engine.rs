mod common;

use std::sync::atomic::Ordering;
use std::sync::{Arc, OnceLock};

use continuity_core::backends::{Fallback, PairwiseScorer, RecordedScores, StubScorer};
use continuity_core::chunker::chunk_spans;
use continuity_core::engine::count_tokens;
use continuity_core::harness::GeneratorConfig;
use continuity_core::{Backends, Error, Hyperparams, Probability, Session, Speaker, TextPair, Verdict};

fn backends() -> Backends {
    static B: OnceLock<Backends> = OnceLock::new();
    B.get_or_init(|| common::stub_backends(&GeneratorConfig::default()))
        .clone()
}

fn session_with(scorer: Arc<dyn PairwiseScorer>, history: &[&str]) -> Session {
    let mut b = backends();
    b.scorer = scorer;
    let mut s = Session::new("food_delivery", Hyperparams::default(), b).unwrap();
    for h in history {
        s.accept(h, Speaker::Unknown).unwrap();
    }
    s
}

fn session(history: &[&str]) -> Session {
    session_with(Arc::new(StubScorer::new(0.001)), history)
}

const PIZZA: &str = "pizza crust mozzarella basil tomato oregano garlic olive pepperoni onion";

fn numbered(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("filler{i} words{i} here{i}")).collect()
}

#[test]
fn token_counting() {
    assert_eq!(count_tokens("a b  c"), 3);
    assert_eq!(count_tokens(""), 0);
    assert_eq!(count_tokens(&vec!["w"; 600].join(" ")), 600);
}

#[test]
fn near_duplicate_history_is_on_topic() {
    let words: Vec<&str> = PIZZA.split(' ').collect();
    let history: Vec<String> = (0..8)
        .map(|i| {
            let mut w = words.clone();
            w.rotate_left(i);
            w.join(" ")
        })
        .collect();
    let refs: Vec<&str> = history.iter().map(String::as_str).collect();
    let t = session(&refs).evaluate_next(PIZZA).unwrap();
    assert!(t.pair_scores.entries().iter().all(|v| v.exp() > 0.99));
    assert!(t.score.p_nlu.get() >= 0.9, "{}", t.score.p_nlu);
    assert_eq!(t.score.verdict, Verdict::OnTopic);
}

#[test]
fn disjoint_candidate_collapses_to_epsilon() {
    let s = session(&[PIZZA, "crust basil garlic sauce", PIZZA]);
    let t = s.evaluate_next("glacier comet violin castle").unwrap();
    assert!(t.pair_scores.entries().iter().all(|v| (v.exp() - 0.001).abs() < 1e-15));
    assert!((t.score.attention_term.get() - 0.001f64.ln()).abs() < 1e-12);
    assert_eq!(t.score.verdict, Verdict::OffTopic);
}

#[test]
fn leap_attention_tracks_the_max() {
    let target = continuity_core::harness::vocab::TOPIC[..30].join(" ");
    let mut history = vec![target.clone()];
    history.extend((0..11).map(|_| "okay okay okay okay".to_string()));
    let refs: Vec<&str> = history.iter().map(String::as_str).collect();
    let t = session(&refs).evaluate_next(&target).unwrap();
    let (m, a) = (t.score.log_p_max.get(), t.score.log_p_avg.get());
    let f = t.score.attention_term.get();
    assert!(f > (m + a) / 2.0, "F={f} M={m} A={a}");
    assert!(a.exp() < 0.5, "mean-only scoring would already pass");
    assert_eq!(t.score.verdict, Verdict::OnTopic);
}

#[test]
fn empty_history_is_a_precondition_error() {
    let s = session(&[]);
    assert!(matches!(s.evaluate_next(PIZZA), Err(Error::Precondition(_))));
    assert!(matches!(s.baseline_nsp(PIZZA, Some(512)), Err(Error::Precondition(_))));
    let s = session(&[PIZZA]);
    assert!(s.evaluate_next("   ").is_err());
}

#[test]
fn pair_invocations_equal_chunk_count() {
    for n in [1usize, 2, 5, 7, 20, 101] {
        let counting = Arc::new(common::Counting::default());
        let history = numbered(n);
        let refs: Vec<&str> = history.iter().map(String::as_str).collect();
        let s = session_with(counting.clone(), &refs);
        let t = s.evaluate_next(PIZZA).unwrap();
        let expected = chunk_spans(n, 4, 2).len();
        assert_eq!(t.chunks.len(), expected);
        assert_eq!(t.pair_scores.len(), expected);
        assert_eq!(counting.pairs.load(Ordering::SeqCst), expected, "n={n}");
        assert_eq!(counting.calls.load(Ordering::SeqCst), 1);
    }
}

#[test]
fn evaluation_does_not_mutate_the_session() {
    let s = session(&[PIZZA, "garlic basil crust", "olive onion"]);
    let before = (s.accepted().to_vec(), s.chunks().to_vec());
    let a = s.evaluate_next("pizza garlic").unwrap();
    let b = s.evaluate_next("pizza garlic").unwrap();
    assert_eq!((s.accepted().to_vec(), s.chunks().to_vec()), before);
    assert_eq!(a.score, b.score);
}

/// Forces the default one-pair-at-a-time `score_batch`.
struct PairOnly(StubScorer);

impl PairwiseScorer for PairOnly {
    fn score_pair(&self, context: &str, current: &str) -> continuity_core::Result<Probability> {
        self.0.score_pair(context, current)
    }
}

#[test]
fn batch_equals_repeated_pairs_and_recorded_substitution() {
    let history = ["pizza crust", "basil garlic sauce", "olive onion pizza", "menu combo", "soda"];
    let cand = "pizza basil soda";
    let batch = session(&history).evaluate_next(cand).unwrap();
    let single = session_with(Arc::new(PairOnly(StubScorer::new(0.001))), &history)
        .evaluate_next(cand)
        .unwrap();
    assert_eq!(batch.score, single.score);

    let stub = StubScorer::new(0.001);
    let mut rec = RecordedScores::new(Fallback::Error, 0.001);
    for c in &batch.chunks {
        let p = stub.score_pair(&c.text, cand).unwrap().get();
        rec.insert(&c.text, cand, p).unwrap();
    }
    let replay = session_with(Arc::new(rec), &history).evaluate_next(cand).unwrap();
    assert_eq!(replay.score, batch.score);

    let pairs: Vec<TextPair> = batch.chunks.iter().map(|c| TextPair::new(c.text.clone(), cand)).collect();
    let probs = stub.score_batch(&pairs).unwrap();
    for (p, v) in probs.iter().zip(batch.pair_scores.entries()) {
        assert_eq!(p.ln(), *v);
    }
}

#[test]
fn accept_then_evaluate_matches_fresh_session() {
    let history = ["pizza crust", "basil garlic sauce", "olive onion pizza", "menu combo"];
    let mut grown = session(&history[..2]);
    let _ = grown.evaluate_next("soda").unwrap();
    for h in &history[2..] {
        grown.accept(h, Speaker::Unknown).unwrap();
    }
    let fresh = session(&history);
    assert_eq!(
        grown.evaluate_next("pizza soda").unwrap().score,
        fresh.evaluate_next("pizza soda").unwrap().score
    );
}

#[test]
fn baseline_truncation_keeps_recent_tokens() {
    let mut history = vec![PIZZA.to_string()];
    history.push(vec!["filler"; 600].join(" "));
    let refs: Vec<&str> = history.iter().map(String::as_str).collect();
    let s = session(&refs);

    let kept = s.baseline_context(Some(512)).unwrap();
    assert_eq!(count_tokens(&kept), 512);
    assert!(!kept.contains("pizza"));
    assert_eq!(s.baseline_nsp(PIZZA, Some(512)).unwrap().get(), 0.001);

    let full = s.baseline_context(None).unwrap();
    assert_eq!(full, format!("{} {}", history[0], history[1]));
    let direct = StubScorer::new(0.001).score_pair(&full, PIZZA).unwrap();
    assert_eq!(s.baseline_nsp(PIZZA, None).unwrap(), direct);
    assert_eq!(s.baseline_nsp(PIZZA, Some(10_000)).unwrap(), direct);
}

#[test]
fn dimension_and_parity_are_checked() {
    let mut b = backends();
    b.background_ood = Arc::new(common::train(
        &GeneratorConfig::default(),
        continuity_core::harness::CorpusKind::Background,
        50,
        3,
    ));
    // same params and dim: accepted
    assert!(Session::new("t", Hyperparams::default(), b.clone()).is_ok());

    let emb: Vec<_> = (0..10)
        .map(|i| continuity_core::EmbeddingVector::new(vec![i as f64; 8]).unwrap())
        .collect();
    b.background_ood = Arc::new(
        continuity_core::OodModel::train(&emb, Default::default(), 1).unwrap(),
    );
    assert!(matches!(
        Session::new("t", Hyperparams::default(), b),
        Err(Error::Config(_))
    ));
}
