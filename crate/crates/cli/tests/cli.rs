mod common;

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use common::*;
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_attrib-eval");

fn cli() -> Command {
    let mut c = Command::new(BIN);
    c.env_remove("ATTRIB_EVAL_ENDPOINT").env_remove("RUST_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    cli().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

struct Setup {
    dir: TempDir,
    oracle: PathBuf,
    samples: Vec<FactSample>,
    claims: Claims,
}

fn setup() -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let samples = load_samples("corpus.jsonl", Some("predictions.jsonl"));
    let claims = Claims::load();
    let oracle = write_oracle(&build_oracle(&samples, &claims), dir.path());
    Setup { dir, oracle, samples, claims }
}

fn read_jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn opt(v: &Value) -> Option<f64> {
    v.as_f64()
}

fn evaluate(s: &Setup, out: &Path, extra: &[&str]) -> Output {
    let (dataset, preds) = (fixture("corpus.jsonl"), fixture("predictions.jsonl"));
    let mut args = vec!["evaluate", "--dataset", &dataset, "--predictions", &preds];
    args.extend(["--oracle", s.oracle.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn evaluate_matches_brute_force() {
    let s = setup();
    for (policy, auto) in [("auto", true), ("default", false)] {
        let out = s.dir.path().join(policy);
        let o = evaluate(&s, &out, &["--mask-policy", policy, "--table"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("Self-BLEU"));
        assert!(out.join("table.txt").exists());

        let want = expected_table(&s.samples, &s.claims, auto);
        let rows = read_jsonl(&out.join("samples.jsonl"));
        assert_eq!(rows.len(), want.len());
        for row in &rows {
            let id = row["sample_id"].as_str().unwrap();
            let e = &want[id];
            for (name, w) in [
                ("citation_precision", e.citation_precision),
                ("citation_recall", e.citation_recall),
                ("citation_f1", e.citation_f1),
                ("ais", e.ais),
                ("acs", e.acs),
                ("claim_precision", Some(e.claim_precision)),
                ("claim_recall", Some(e.claim_recall)),
                ("claim_f1", Some(e.claim_f1)),
            ] {
                assert!(close_opt(opt(&row[name]), w), "{policy}/{id}/{name}: {} vs {w:?}", row[name]);
            }
            let masks: Vec<bool> = row["sentences"].as_array().unwrap().iter().map(|x| x["mask"].as_bool().unwrap()).collect();
            assert_eq!(masks, e.masks, "{policy}/{id}");
        }

        let corpus = read_json(&out.join("corpus.json"));
        let ais: Vec<f64> = want.values().filter_map(|e| e.ais).collect();
        let mean = ais.iter().sum::<f64>() / ais.len() as f64;
        assert!(close(corpus["ais"]["mean"].as_f64().unwrap(), mean));
        assert_eq!(corpus["ais"]["included"].as_u64().unwrap() as usize, ais.len());
        let status = read_json(&out.join("run_status.json"));
        assert_eq!(status["status"], "ok");
        assert_eq!(status["evaluated"], 15);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let s = setup();
    let (a, b) = (s.dir.path().join("a"), s.dir.path().join("b"));
    assert!(evaluate(&s, &a, &["--jobs", "1"]).status.success());
    assert!(evaluate(&s, &b, &["--jobs", "4"]).status.success());
    for f in ["samples.jsonl", "corpus.json", "run_status.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_predictions_give_partial_status() {
    let s = setup();
    let preds = s.dir.path().join("two.jsonl");
    let lines: Vec<String> = fs::read_to_string(fixtures().join("predictions.jsonl"))
        .unwrap()
        .lines()
        .take(2)
        .map(String::from)
        .chain([r#"{"id":"ghost","output":"事实1。"}"#.to_string()])
        .collect();
    fs::write(&preds, lines.join("\n")).unwrap();
    let out = s.dir.path().join("out");
    let o = run(&[
        "evaluate",
        "--dataset",
        &fixture("corpus.jsonl"),
        "--predictions",
        preds.to_str().unwrap(),
        "--oracle",
        s.oracle.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let status = read_json(&out.join("run_status.json"));
    assert_eq!(status["status"], "partial");
    assert_eq!(status["evaluated"], 2);
    assert_eq!(status["skipped"].as_array().unwrap().len(), 13);
    assert_eq!(status["unmatched_predictions"], serde_json::json!(["ghost"]));
    assert_eq!(read_json(&out.join("corpus.json"))["claim_precision"]["included"], 2);
}

#[test]
fn no_backend_fails_with_status_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["evaluate", "--dataset", &fixture("corpus.jsonl"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let status = read_json(&out.join("run_status.json"));
    assert_eq!(status["status"], "failed");
    assert!(status["error"].as_str().unwrap().contains("backend"), "{status}");
    assert!(!out.join("corpus.json").exists());
}

#[test]
fn config_file_matches_flags() {
    let s = setup();
    let by_flags = s.dir.path().join("flags");
    assert!(evaluate(&s, &by_flags, &["--mask-policy", "auto"]).status.success());

    let by_file = s.dir.path().join("file");
    let cfg = s.dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "dataset = {:?}\npredictions = {:?}\noracle = {:?}\nmask_policy = \"auto\"\nout = {:?}\njobs = 2\n",
            fixture("corpus.jsonl"),
            fixture("predictions.jsonl"),
            s.oracle.display().to_string(),
            by_file.display().to_string()
        ),
    )
    .unwrap();
    let o = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(by_flags.join("samples.jsonl")).unwrap(), fs::read(by_file.join("samples.jsonl")).unwrap());

    fs::write(&cfg, "dataset = \"x\"\nbogus = 1\n").unwrap();
    assert_eq!(run(&["evaluate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn serve(oracle: &Path) -> (Server, String) {
    let mut child = cli()
        .args(["serve-oracle", "--oracle", oracle.to_str().unwrap(), "--addr", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let stdout = child.stdout.take().unwrap();
    let server = Server(child);
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").expect("listening line").to_string();
    (server, url)
}

#[test]
fn endpoint_run_matches_oracle_run() {
    let s = setup();
    let (_server, url) = serve(&s.oracle);
    let local = s.dir.path().join("local");
    assert!(evaluate(&s, &local, &["--mask-policy", "auto"]).status.success());

    let remote = s.dir.path().join("remote");
    let cache = s.dir.path().join("cache");
    let o = run(&[
        "evaluate",
        "--dataset",
        &fixture("corpus.jsonl"),
        "--predictions",
        &fixture("predictions.jsonl"),
        "--endpoint",
        &url,
        "--cache",
        cache.to_str().unwrap(),
        "--mask-policy",
        "auto",
        "--out",
        remote.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(local.join("samples.jsonl")).unwrap(), fs::read(remote.join("samples.jsonl")).unwrap());
    assert!(fs::read_dir(&cache).unwrap().next().is_some());
}

#[test]
fn endpoint_from_environment() {
    let s = setup();
    let (_server, url) = serve(&s.oracle);
    let out = s.dir.path().join("env");
    let o = cli()
        .env("ATTRIB_EVAL_ENDPOINT", &url)
        .args(["evaluate", "--dataset", &fixture("corpus.jsonl"), "--mask-policy", "auto", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // without predictions the references are scored
    for (row, f) in read_jsonl(&out.join("samples.jsonl")).iter().zip(&s.samples) {
        let e = expected(f, &f.reference, &s.claims, true);
        assert!(close(row["claim_f1"].as_f64().unwrap(), e.claim_f1), "{row}");
        assert!(close_opt(row["ais"].as_f64(), e.ais), "{row}");
    }
}

#[test]
fn stats_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stats.json");
    let o = run(&["stats", "--input", &fixture("corpus.jsonl"), "--input", &fixture("masks.jsonl"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out);
    let corpus = load_samples("corpus.jsonl", None);
    let first = &report["files"][0]["stats"];
    assert_eq!(first["sample_count"], 15);
    let docs = corpus.iter().map(|f| f.docs.len()).sum::<usize>() as f64 / 15.0;
    assert!(close(first["docs_per_query"].as_f64().unwrap(), docs));
    let sentences: Vec<RefSentence> = corpus.iter().flat_map(|f| segment(&f.reference)).collect();
    assert!(close(first["sentences_per_summary"].as_f64().unwrap(), sentences.len() as f64 / 15.0));
    let cites = sentences.iter().map(|s| s.cites.len()).sum::<usize>() as f64 / sentences.len() as f64;
    assert!(close(first["citations_per_sentence"].as_f64().unwrap(), cites));
    assert_eq!(report["files"].as_array().unwrap().len(), 2);
    assert_eq!(report["total"]["sample_count"], 20);
}

#[test]
fn chunk_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chunked.jsonl");
    let o = run(&["chunk", "--input", &fixture("corpus.jsonl"), "--output", out.to_str().unwrap(), "--max-doc-len", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_jsonl(&out);
    assert_eq!(rows.len(), 15);
    let original = load_samples("corpus.jsonl", None);
    for (row, f) in rows.iter().zip(&original) {
        let text = serde_json::to_string(row).unwrap();
        for d in &f.docs {
            for sentence in d.split_inclusive('。') {
                assert!(text.contains(sentence), "{sentence} lost from {}", f.id);
            }
        }
    }
    assert_eq!(run(&["chunk", "--input", &fixture("corpus.jsonl"), "--output", out.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn agreement_command() {
    let s = setup();
    let out = s.dir.path().join("agreement.json");
    let o = run(&[
        "agreement",
        "--dataset",
        &fixture("corpus.jsonl"),
        "--oracle",
        s.oracle.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out);
    let decisions: Vec<(bool, bool)> = s.samples.iter().flat_map(|f| agreement_decisions(f, &s.claims)).collect();
    assert_eq!(report["decision_count"].as_u64().unwrap() as usize, decisions.len());
    assert!(close(report["kappa"].as_f64().unwrap(), kappa(&decisions)));
}

#[test]
fn claimsplit_quality_command() {
    let s = setup();
    let sentences: Vec<String> = s.samples.iter().flat_map(|f| segment(&f.reference)).map(|x| x.text).collect();
    let file = s.dir.path().join("sentences.txt");
    fs::write(&file, sentences.join("\n")).unwrap();
    let out = s.dir.path().join("q.json");
    let o = run(&[
        "claimsplit-quality",
        "--sentences",
        file.to_str().unwrap(),
        "--oracle",
        s.oracle.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let q = read_json(&out);
    let per: Vec<_> = sentences.iter().map(|x| split_quality(x, &s.claims)).collect();
    let n = per.len() as f64;
    assert_eq!(q["sentence_count"].as_u64().unwrap() as usize, per.len());
    assert!(close(q["redundancy"].as_f64().unwrap(), per.iter().map(|x| x.0).sum::<f64>() / n));
    assert!(close(q["correctness"].as_f64().unwrap(), per.iter().map(|x| x.2).sum::<f64>() / n));
    assert!(close(q["completeness"].as_f64().unwrap(), per.iter().map(|x| x.3).sum::<f64>() / n));

    // the dataset route reads the same reference sentences
    let o = run(&["claimsplit-quality", "--dataset", &fixture("corpus.jsonl"), "--oracle", s.oracle.to_str().unwrap()]);
    assert!(o.status.success());
    let from_dataset: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(from_dataset, q);
}
