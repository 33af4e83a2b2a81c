mod common;

use std::fs;

use common::{models, run, stderr, stdout};
use tempfile::tempdir;

const ON_TOPIC: &str = "pizza crust mozzarella basil tomato oregano garlic olive";

fn shuffled_lines(n: usize) -> Vec<String> {
    let words: Vec<&str> = ON_TOPIC.split(' ').collect();
    (0..n)
        .map(|i| {
            let mut w = words.clone();
            w.rotate_left(i % words.len());
            w.join(" ")
        })
        .collect()
}

#[test]
fn score_on_topic_file() {
    let dir = tempdir().unwrap();
    let m = models(dir.path());
    let input = dir.path().join("conv.txt");
    fs::write(&input, shuffled_lines(10).join("\n")).unwrap();
    let o = run(dir.path(), &["--config", m.config.to_str().unwrap(), "score", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 9);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["index"], i + 1);
        assert_eq!(l["verdict"], "on_topic");
        for key in ["p_nlu", "F", "residual"] {
            assert!(l[key].is_f64(), "{key}");
        }
    }
}

#[test]
fn score_flags_background_tail_and_speaker_tags() {
    let dir = tempdir().unwrap();
    let m = models(dir.path());
    let mut lines: Vec<String> = shuffled_lines(5)
        .into_iter()
        .enumerate()
        .map(|(i, l)| format!("{}\t{l}", if i % 2 == 0 { "user" } else { "agent" }))
        .collect();
    lines.push("user\tglacier comet violin castle meadow telescope".into());
    let input = dir.path().join("conv.txt");
    fs::write(&input, lines.join("\n")).unwrap();
    let o = run(dir.path(), &["--config", m.config.to_str().unwrap(), "score", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let last: serde_json::Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(last["verdict"], "off_topic");
    assert_eq!(out.lines().count(), 5);

    let o = run(
        dir.path(),
        &["--config", m.config.to_str().unwrap(), "score", "--no-accept", input.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn score_input_errors() {
    let dir = tempdir().unwrap();
    let m = models(dir.path());
    let cfg = m.config.to_str().unwrap();
    let one = dir.path().join("one.txt");
    fs::write(&one, "just one sentence\n").unwrap();
    let o = run(dir.path(), &["--config", cfg, "score", one.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("precondition"), "{}", stderr(&o));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "robot\thello\nuser\thi\n").unwrap();
    let o = run(dir.path(), &["--config", cfg, "score", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(dir.path(), &["score", one.to_str().unwrap(), "--topic-ood", "/nope.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unreachable_backend_exits_2() {
    let dir = tempdir().unwrap();
    let m = models(dir.path());
    let input = dir.path().join("conv.txt");
    fs::write(&input, shuffled_lines(3).join("\n")).unwrap();
    let url = format!("http://127.0.0.1:{}", common::dead_port());
    let o = common::bin()
        .current_dir(dir.path())
        .env("CONTINUITY_SCORER_ENDPOINT", &url)
        .args(["--config", m.config.to_str().unwrap(), "score", input.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("backend unavailable"));
}

#[test]
fn train_ood_is_deterministic_with_boundaries() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let corpus = d.join("corpus.txt");
    fs::write(&corpus, shuffled_lines(40).join("\n")).unwrap();
    for out in ["a.json", "b.json"] {
        let o = run(d, &["train-ood", "--input", "corpus.txt", "--output", out, "--seed", "3"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("median="));
    }
    assert_eq!(fs::read(d.join("a.json")).unwrap(), fs::read(d.join("b.json")).unwrap());

    fs::write(d.join("two.txt"), "pizza crust\nglacier comet\n").unwrap();
    let o = run(d, &["train-ood", "--input", "two.txt", "--output", "two.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    continuity_core::OodModel::open(d.join("two.json")).unwrap();

    fs::write(d.join("empty.txt"), "").unwrap();
    let o = run(d, &["train-ood", "--input", "empty.txt", "--output", "e.json"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(d, &["train-ood", "--input", "missing.txt", "--output", "e.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_is_deterministic_and_respects_mix() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    for out in ["a.jsonl", "b.jsonl"] {
        let o = run(d, &["synth", "--output", out, "--seed", "11"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = fs::read_to_string(d.join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.jsonl")).unwrap());
    let records = continuity_core::harness::load_dataset(d.join("a.jsonl")).unwrap();
    assert_eq!(records.len(), 400);
    for l in continuity_core::harness::Label::ALL {
        assert_eq!(records.iter().filter(|r| r.label() == l).count(), 100);
    }

    fs::write(d.join("bad.toml"), "leap_gap = [10, 12]\nsentence_tokens = [20, 30]\n").unwrap();
    let o = run(d, &["synth", "--generator", "bad.toml", "--output", "c.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("leap_gap"), "{}", stderr(&o));
}

#[test]
fn eval_experiments_and_errors() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let m = models(d);
    let cfg = m.config.to_str().unwrap();
    fs::write(d.join("gen.toml"), "records = 24\nsentence_tokens = [30, 60]\n").unwrap();
    let o = run(d, &["synth", "--generator", "gen.toml", "--output", "data.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = run(d, &["--config", cfg, "eval", "--dataset", "data.jsonl", "--experiment", "gap", "--output", "gap.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("(512,inf)"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("gap.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "gap");
    assert_eq!(report["buckets"].as_array().unwrap().len(), 3);
    assert_eq!(report["seed"], 7);
    assert_eq!(report["config_digest"].as_str().unwrap().len(), 64);

    let o = run(d, &["--config", cfg, "eval", "--dataset", "data.jsonl", "--experiment", "length", "--output", "len.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("len.json")).unwrap()).unwrap();
    for b in report["buckets"].as_array().unwrap() {
        assert!(b["baseline"]["truncated"].is_boolean());
    }

    fs::write(
        d.join("far.jsonl"),
        concat!(
            r#"{"id":"x","topic":"food_delivery","sentences":[{"text":"pizza crust basil"},"#,
            r#"{"text":"glacier comet violin","label":"ood_shift"}]}"#,
            "\n"
        ),
    )
    .unwrap();
    let o = run(d, &["--config", cfg, "eval", "--dataset", "far.jsonl", "--experiment", "residual", "--output", "r.json"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("empty result"));

    let o = run(d, &["--config", cfg, "eval", "--dataset", "data.jsonl", "--experiment", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("gap") && err.contains("length") && err.contains("residual"), "{err}");
}

#[test]
fn bad_config_and_bind_failures() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.toml"), "backend = \"grpc:x\"\n").unwrap();
    let o = run(d, &["--config", "bad.toml", "synth", "--output", "x.jsonl"]);
    assert_eq!(o.status.code(), Some(1));

    let m = models(d);
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = run(d, &["--config", m.config.to_str().unwrap(), "--bind", &addr, "serve"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
