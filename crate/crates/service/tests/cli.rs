#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Output, Stdio};

use common::fixture;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_phraselette");

fn phraselette(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn mock_run(extra: &[&str]) -> Output {
    let poem = fixture("poem.txt");
    let logit = fixture("mock-logit.json");
    let instruct = fixture("mock-instruct.json");
    let mut args = vec![
        "run",
        "--text",
        poem.to_str().unwrap(),
        "--inlet",
        "10:21",
        "--backend",
        "mock",
        "--logit-fixture",
        logit.to_str().unwrap(),
        "--instruct-fixture",
        instruct.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    Command::new(BIN).args(&args).output().expect("binary runs")
}

fn json_out(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn romance_thesaurus_with_word_count_gives_a_json_pool() {
    let args = ["--well", "thesaurus:a romance novel's lexicon", "--constraint", "words:1-4", "--seed", "7"];
    let out = mock_run(&args);
    let v = json_out(&out);
    assert_eq!(v["inlet"]["text"], "glazed with");
    assert_eq!(v["seed"], 7);
    let c = &v["constraints"][0];
    assert_eq!(c["kind"], "wordCount");
    assert_eq!(c["payload"], serde_json::json!({"min": 1, "max": 4}));
    let pool = v["rephrasings"].as_array().unwrap();
    assert_eq!(pool.len(), 12);
    assert!(pool.iter().all(|r| r["wellId"] == "thesaurus" && r["color"].is_string()));
    for _ in 0..2 {
        assert_eq!(mock_run(&args).stdout, out.stdout);
    }
}

#[test]
fn verb_adverb_constraint_parses_to_exact_pos_sequence() {
    let v = json_out(&mock_run(&["--well", "context", "--constraint", "pos:VERB ADV:exact", "--seed", "1"]));
    let c = &v["constraints"][0];
    assert_eq!(c["kind"], "posSequence");
    assert_eq!(c["mode"], "exact");
    assert_eq!(c["payload"]["tags"], serde_json::json!(["VERB", "ADV"]));
    assert!(v["views"].as_array().unwrap().contains(&Value::from("pos")));
}

#[test]
fn sound_and_band_constraints() {
    let v = json_out(&mock_run(&[
        "--constraint",
        "sound:G L EY:startsWith",
        "--constraint",
        "band::-4",
        "--set",
        "context.result_cap=20",
        "--seed",
        "2",
    ]));
    let kinds: Vec<&str> = v["constraints"].as_array().unwrap().iter().map(|c| c["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["soundRef", "logProbBand"]);
    let pool = v["rephrasings"].as_array().unwrap();
    assert!(!pool.is_empty() && pool.len() <= 20);
    assert!(pool.iter().all(|r| r["totalLogProb"].as_f64().unwrap() <= -4.0));
    let glazed: Vec<&Value> = pool.iter().filter(|r| r["text"].as_str().unwrap().starts_with("glaz")).collect();
    assert!(!glazed.is_empty());
    assert!(glazed.iter().all(|r| r["constraintScores"]["sound:sound"] == 1.0));
}

#[test]
fn table_output() {
    let out = mock_run(&["--well", "thesaurus:a romance novel's lexicon", "--format", "table", "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("inlet 10:21 \"glazed with\"\n"));
    assert!(text.contains("well thesaurus: done"));
    assert!(text.lines().any(|l| l.trim_start().starts_with("1  ") && l.contains("thesaurus")));
}

#[test]
fn validation_errors_exit_2() {
    let poem = fixture("poem.txt");
    let p = poem.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--inlet", "21:10", "--well", "context"],
        vec!["--inlet", "10:21", "--well", "thesaurus"],
        vec!["--inlet", "10:21", "--constraint", "words:4-1"],
        vec!["--inlet", "10:21", "--constraint", "pos:VERB:sideways"],
        vec!["--inlet", "10:21"],
        vec!["--inlet", "10:500", "--well", "context"],
    ];
    for extra in cases {
        let out = mock_run(&extra);
        assert_eq!(out.status.code(), Some(2), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = phraselette(&["run", "--text", p, "--inlet", "10:21", "--well", "context", "--backend", "mock"]);
    assert_eq!(out.status.code(), Some(2), "mock needs fixtures");
    let out = phraselette(&["run", "--text", "/no/such/file", "--inlet", "1:2", "--well", "context"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn backend_failure_exits_3_with_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let down = dir.path().join("down.json");
    std::fs::write(&down, r#"{"rules": [], "unavailable": true}"#).unwrap();
    let poem = fixture("poem.txt");
    let logit = fixture("mock-logit.json");
    let out = phraselette(&[
        "run",
        "--text",
        poem.to_str().unwrap(),
        "--inlet",
        "10:21",
        "--well",
        "thesaurus:x",
        "--well",
        "context",
        "--logit-fixture",
        logit.to_str().unwrap(),
        "--instruct-fixture",
        down.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["wells"]["thesaurus"]["state"], "failed");
    assert_eq!(v["wells"]["context"]["state"], "done");
    assert!(String::from_utf8_lossy(&out.stderr).contains("thesaurus"));
}

#[test]
fn config_file_supplies_the_backend() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phraselette.toml");
    std::fs::write(
        &cfg,
        format!(
            "backend = \"mock\"\nlogit_fixture = {:?}\ninstruct_fixture = {:?}\n",
            fixture("mock-logit.json"),
            fixture("mock-instruct.json")
        ),
    )
    .unwrap();
    let poem = fixture("poem.txt");
    let out = phraselette(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--text",
        poem.to_str().unwrap(),
        "--inlet",
        "10:21",
        "--well",
        "dictionary:a nonsense dictionary",
    ]);
    let v = json_out(&out);
    assert_eq!(v["insights"]["dictionary"][0]["kind"], "definition");
}

#[test]
fn tag_and_pronounce() {
    let out = phraselette(&["tag", "plasticized", "onto"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "plasticized/VERB onto/ADP\n");
    let out = phraselette(&["pronounce", "--plain", "captivating mien"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "K AE P T IH V EY T IH NG M IY N\n");
    let out = phraselette(&["pronounce", "mien"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "mien\tM IY1 N\tlexicon\n");
}

#[test]
fn pos_train_writes_a_usable_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("pos.txt");
    let eval = fixture("pos-eval.txt");
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/pos-train.txt");
    let out = phraselette(&[
        "pos-train",
        "--corpus",
        corpus,
        "--out",
        model.to_str().unwrap(),
        "--iterations",
        "3",
        "--eval",
        eval.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(out.stdout).unwrap();
    let acc: f64 = report.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(acc > 0.9, "{report}");
    let out = phraselette(&["tag", "--pos-model", model.to_str().unwrap(), "the", "white", "chickens"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "the/DET white/ADJ chickens/NOUN\n");
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let logit = fixture("mock-logit.json");
    let mut child = Command::new(BIN)
        .args([
            "serve",
            "--bind",
            "127.0.0.1:0",
            "--sessions-dir",
            dir.path().to_str().unwrap(),
            "--logit-fixture",
            logit.to_str().unwrap(),
        ])
        .env("RUST_LOG", "info")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let addr = loop {
        let line = lines.next().expect("server logs its address").unwrap();
        if let Some(a) = line.split("listening on ").nth(1) {
            break a.trim().to_owned();
        }
    };
    let body = r#"{"id":"d","text":"hello there"}"#;
    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "POST /documents HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(resp.starts_with("HTTP/1.1 201"), "{resp}");
    assert!(dir.path().join("d.json").exists());
}
