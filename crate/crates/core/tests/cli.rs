use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abstain-rank"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn schema_required(name: &str) -> Vec<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}

fn synth(dir: &Path, name: &str, n: &str, sep: &str, seed: &str) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap();
    let out = run(&[
        "synth",
        "--n",
        n,
        "--k",
        "10",
        "--separability",
        sep,
        "--seed",
        seed,
        "--out",
        p,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    p.to_string()
}

#[test]
fn synth_then_eval_has_positive_nauc() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.jsonl", "500", "2.0", "7");
    let out = run(&[
        "eval", "--data", &data, "--method", "lin", "--metric", "ap", "--seed", "0",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep = stdout_json(&out);
    assert!(rep["nauc"].as_f64().unwrap() > 0.0);
    assert_eq!(rep["seed"], 0);
    assert_eq!(rep["n_test"], 100);
    for key in schema_required("eval_report.schema.json") {
        assert!(rep.get(&key).is_some(), "missing {key}");
    }
}

#[test]
fn eval_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.jsonl", "300", "1.5", "1");
    let args = [
        "eval", "--data", &data, "--method", "log", "--metric", "ndcg", "--seed", "3",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let again = synth(dir.path(), "e.jsonl", "300", "1.5", "1");
    assert_eq!(fs::read(&data).unwrap(), fs::read(again).unwrap());
}

#[test]
fn eval_errors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = dir.path().join("tiny.jsonl");
    fs::write(
        &tiny,
        "{\"id\":\"a\",\"scores\":[0.9,0.1],\"labels\":[1,0]}\n",
    )
    .unwrap();
    let out = run(&[
        "eval",
        "--data",
        tiny.to_str().unwrap(),
        "--method",
        "lin",
        "--seed",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "TooSmallToSplit");

    let out = run(&[
        "eval",
        "--data",
        tiny.to_str().unwrap(),
        "--method",
        "rf",
        "--seed",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["eval", "--data", tiny.to_str().unwrap(), "--method", "max"]);
    assert_eq!(out.status.code(), Some(2), "seed required when splitting");
}

#[test]
fn curve_two_instance_example() {
    let dir = tempfile::tempdir().unwrap();
    // reference is irrelevant for max; test has RR values 0.5 and 1.0 with
    // higher max score on the better instance
    let reference = dir.path().join("r.jsonl");
    fs::write(
        &reference,
        "{\"id\":\"r\",\"scores\":[0.9,0.1],\"labels\":[1,0]}\n",
    )
    .unwrap();
    let test = dir.path().join("t.jsonl");
    fs::write(
        &test,
        "{\"id\":\"bad\",\"scores\":[0.3,0.1],\"labels\":[0,1]}\n{\"id\":\"good\",\"scores\":[0.9,0.1],\"labels\":[1,0]}\n",
    )
    .unwrap();
    let out_path = dir.path().join("curve.csv");
    let args = [
        "curve",
        "--data",
        reference.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--method",
        "max",
        "--metric",
        "rr",
        "--out",
        out_path.to_str().unwrap(),
    ];
    let out = run(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(
        csv,
        "abstention_rate,method_perf,oracle_perf,random_perf\n0.0,0.75,0.75,0.75\n0.5,1.0,1.0,0.75\n"
    );

    // no silent overwrite
    let again = run(&args);
    assert_eq!(again.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&again.stderr).unwrap();
    assert_eq!(err["error"], "OutputExists");
    let mut forced: Vec<&str> = args.to_vec();
    forced.push("--force");
    assert!(run(&forced).status.success());
}

#[test]
fn curve_zero_one_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("r.jsonl");
    fs::write(
        &reference,
        "{\"id\":\"r\",\"scores\":[0.9,0.1,0.0],\"labels\":[1,0,0]}\n",
    )
    .unwrap();
    // AP values: 1/3 and 1.0
    let test = dir.path().join("t.jsonl");
    fs::write(
        &test,
        "{\"id\":\"a\",\"scores\":[0.3,0.2,0.1],\"labels\":[0,0,1]}\n{\"id\":\"b\",\"scores\":[0.9,0.2,0.1],\"labels\":[1,0,0]}\n",
    )
    .unwrap();
    let out = run(&[
        "eval",
        "--data",
        reference.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--method",
        "max",
        "--metric",
        "ap",
    ]);
    let rep = stdout_json(&out);
    assert!((rep["nauc"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn transfer_matches_eval_for_reference_free() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.jsonl", "60", "1.0", "1");
    let b = synth(dir.path(), "b.jsonl", "60", "2.0", "2");
    let transfer = run(&["transfer", "--ref", &a, "--test", &b, "--method", "max"]);
    assert!(transfer.status.success());
    let eval = run(&["eval", "--data", &a, "--test", &b, "--method", "max"]);
    let t = stdout_json(&transfer);
    let e = stdout_json(&eval);
    for key in ["auc", "auc_random", "auc_oracle", "nauc", "n_test"] {
        assert_eq!(t[key], e[key], "{key}");
    }
}

#[test]
fn prep_reports_discards() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let mut text = String::new();
    let nine: Vec<String> = (0..9).map(|i| format!("{}", i as f64 / 10.0)).collect();
    text += &format!(
        "{{\"id\":\"short\",\"scores\":[{}],\"labels\":[1,0,0,0,0,0,0,0,0]}}\n",
        nine.join(",")
    );
    let twelve: Vec<String> = (0..12).map(|i| format!("{}", i as f64 / 10.0)).collect();
    text += &format!(
        "{{\"id\":\"ok\",\"scores\":[{}],\"labels\":[1,1,0,0,0,0,0,0,0,0,0,0]}}\n",
        twelve.join(",")
    );
    fs::write(&raw, text).unwrap();
    let out_path = dir.path().join("prepped.jsonl");
    let discards = dir.path().join("discards.json");
    let out = run(&[
        "prep",
        "--input",
        raw.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        out_path.to_str().unwrap(),
        "--discards",
        discards.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["kept"], 1);
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["discarded"][0]["id"], "short");
    let report: Value = serde_json::from_str(&fs::read_to_string(&discards).unwrap()).unwrap();
    assert_eq!(report, summary["discarded"]);
    let ds = abstain_rank::dataio::load_jsonl(&out_path).unwrap();
    assert_eq!(ds.k(), 10);
}

#[test]
fn fit_score_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.jsonl", "200", "1.5", "5");
    let model = dir.path().join("m.json");
    let out = run(&[
        "fit",
        "--data",
        &data,
        "--method",
        "lin",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    for key in schema_required("model.schema.json") {
        assert!(doc.get(&key).is_some(), "missing {key}");
    }
    assert_eq!(doc["variant"], "lin");
    assert_eq!(doc["k"], 10);

    let scored = run(&["score", "--model", model.to_str().unwrap(), "--data", &data]);
    let text = String::from_utf8(scored.stdout).unwrap();
    assert!(text.starts_with("id,confidence\n"));
    assert_eq!(text.lines().count(), 201);

    let bench = run(&[
        "bench",
        "--model",
        model.to_str().unwrap(),
        "--data",
        &data,
        "--reps",
        "100",
    ]);
    assert!(bench.status.success());
    let rep = stdout_json(&bench);
    assert_eq!(rep["instances"], 200);
    assert!(rep["mean_ns_per_instance"].as_f64().unwrap() > 0.0);
    assert!(rep["metadata"]["timestamp_unix"].is_u64());

    let bad = run(&[
        "bench",
        "--model",
        model.to_str().unwrap(),
        "--data",
        &data,
        "--reps",
        "0",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn studies_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.jsonl", "300", "1.7", "9");

    let cal = run(&[
        "calibrate",
        "--data",
        &data,
        "--method",
        "lin",
        "--seeds",
        "5",
        "--seed",
        "0",
    ]);
    assert!(
        cal.status.success(),
        "{}",
        String::from_utf8_lossy(&cal.stderr)
    );
    let v = stdout_json(&cal);
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);
    assert_eq!(v["seed"], 0);

    let rs = run(&[
        "refsize",
        "--data",
        &data,
        "--sizes",
        "20,100,240",
        "--seeds",
        "2",
        "--seed",
        "1",
    ]);
    assert!(
        rs.status.success(),
        "{}",
        String::from_utf8_lossy(&rs.stderr)
    );
    let v = stdout_json(&rs);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    let sq = run(&[
        "sweep-q",
        "--data",
        &data,
        "--q-values",
        "0.2,0.3",
        "--seeds",
        "2",
        "--seed",
        "1",
    ]);
    assert!(
        sq.status.success(),
        "{}",
        String::from_utf8_lossy(&sq.stderr)
    );
    let text = String::from_utf8(sq.stdout).unwrap();
    assert!(text.starts_with("q,nauc_log,nauc_mah\n0.2,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn thread_cap_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.jsonl", "100", "1.0", "2");
    let ok = bin()
        .args(["eval", "--data", &data, "--method", "std", "--seed", "0"])
        .env("ABSTAIN_RANK_THREADS", "1")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let bad = bin()
        .args(["eval", "--data", &data, "--method", "std", "--seed", "0"])
        .env("ABSTAIN_RANK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
