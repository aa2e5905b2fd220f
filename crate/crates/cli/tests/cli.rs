use std::process::{Command, Output};

use serde_json::Value;

fn bcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcov")).args(args).env_remove("BCOV_WORKERS").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = bcov(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

#[test]
fn documented_examples() {
    assert_eq!(stdout(&["pcon", "--uniform", "--s", "1", "--d", "2/5", "--n", "2"]), "{\"exact\":\"1/25\",\"float\":0.04}\n");
    let v = json(&["volume", "--a", "1,2", "--b", "2"]);
    assert_eq!(v["exact"], "3/4");
    let v = json(&["park", "--s", "1000", "--trials", "100", "--seed", "7"]);
    let mean = v["density"]["mean"].as_f64().unwrap();
    assert!((mean - 0.7476).abs() < 0.005, "{v}");
}

#[test]
fn exact_routes() {
    let beta = r#"{"type":"beta","a":2,"b":1,"s":"1"}"#;
    assert_eq!(json(&["pcon", "--parent", beta, "--s", "1", "--d", "0.6", "--n", "1"])["exact"], "1/5");
    assert_eq!(json(&["pcon", "--s", "1", "--thresholds", "0.5,0.7", "--n", "1"])["exact"], "1/5");
    assert_eq!(json(&["pcon", "--s", "1", "--ranges", "2/5,2/5"])["exact"], "1/25");
    assert_eq!(json(&["pcon", "--s", "3", "--d", "3/2", "--r", "0", "--n", "2"])["exact"], json(&["pcon", "--s", "3", "--d", "3/2", "--n", "2"])["exact"]);
    assert_eq!(json(&["volume", "--simplex", "0,0;1,0;0,1", "--poly", "1,1:1"])["exact"], "1/24");
    let e = json(&["expect", "--s", "1", "--d", "2/5", "--n", "3"]);
    assert_eq!(e["edges"]["exact"], "48/25");
    let st = json(&["stats", "--s", "1", "--d", "0.3", "--positions", "0.5,0.2,0.9"]);
    assert_eq!(st["components"], 2);
    assert_eq!(st["regime"], "partial");
    let dy = json(&["dynamics", "--rates", "1,3", "--total", "100"]);
    assert_eq!(dy["equilibrium"]["attached"]["exact"], "75/1");
    let p = json(&["parents", "--parent", beta, "--at", "1/2", "--n", "3", "--k", "2"]);
    assert_eq!(p["points"][0]["cdf_exact"], "1/4");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| bcov(args).status.code().unwrap();
    assert_eq!(code(&["pcon", "--s", "1", "--d", "1/0", "--n", "2"]), 2);
    assert_eq!(code(&["pcon", "--s", "1", "--d", "abc", "--n", "2"]), 2);
    assert_eq!(code(&["pcon", "--s", "1", "--thresholds", "1,1", "--n", "3"]), 2);
    assert_eq!(code(&["volume", "--a", "1,2", "--b", "2", "--cuboid", "1"]), 2);
    assert_eq!(code(&["pcon", "--s", "1", "--d", "1/2", "--n", "2", "--method", "mc"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["pcon", "--s", "1", "--d", "1/2", "--n", "30"]), 0);
    assert_eq!(code(&["pcon", "--parent", r#"{"type":"beta","a":2,"b":2,"s":"1"}"#, "--s", "1", "--d", "1/2", "--n", "11"]), 3);
    assert_eq!(code(&["pcon", "--s", "3", "--d", "1", "--r", "1/10", "--n", "25", "--method", "mc", "--seed", "1"]), 3);
    assert_eq!(code(&["pcon", "--s", "3", "--d", "1", "--r", "1", "--n", "4", "--method", "mc", "--seed", "1"]), 2);
    let out = bcov(&["pcon", "--s", "1", "--d", "x", "--n", "2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed rational"));
    assert!(out.stdout.is_empty());
}

#[test]
fn same_seed_same_bytes_for_any_worker_count() {
    let runs: &[&[&str]] = &[
        &["pcon", "--s", "1", "--d", "2/5", "--n", "2", "--method", "both", "--seed", "11", "--trials", "50000"],
        &["expect", "--s", "1", "--d", "1/4", "--n", "5", "--method", "mc", "--seed", "3", "--trials", "30000"],
        &["park", "--s", "200", "--trials", "40", "--bins", "5", "--seed", "2"],
        &["pcon", "--s", "3", "--d", "1.4", "--r", "1", "--n", "2", "--method", "mc", "--seed", "5", "--trials", "20000"],
        &["mcmc", "--s", "1", "--d", "0.5", "--n", "3", "--count", "10", "--seed", "4"],
        &["dynamics", "--horizon", "5", "--s", "1", "--d", "0.6", "--simulate", "--seed", "9", "--trials", "20000"],
    ];
    for args in runs {
        let one = stdout(&[args, &["--workers", "1"][..]].concat());
        assert_eq!(one, stdout(args));
        assert_eq!(one, stdout(&[args, &["--workers", "4"][..]].concat()), "{args:?}");
        let env = Command::new(env!("CARGO_BIN_EXE_bcov")).args(*args).env("BCOV_WORKERS", "3").output().unwrap();
        assert_eq!(one.as_bytes(), env.stdout.as_slice());
    }
    assert_ne!(
        stdout(&["sample", "--s", "1", "--n", "3", "--seed", "1"]),
        stdout(&["sample", "--s", "1", "--n", "3", "--seed", "2"])
    );
}

#[test]
fn spec_files_reproduce_flag_runs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["pcon", "--s", "1", "--d", "2/5", "--n", "2"],
        &["pcon", "--parent", r#"{"type":"pwu","breakpoints":["0","1/2","1"],"densities":["8/5","2/5"]}"#, "--s", "1", "--d", "1/2", "--n", "2", "--method", "mc", "--seed", "1", "--trials", "5000"],
        &["volume", "--a", "1,1/3,2", "--b", "3/2", "--cuboid", "3/2,1,1/2", "--format", "csv"],
        &["park", "--s", "50", "--seed", "8", "--positions"],
        &["dynamics", "--rates", "1,3", "--total", "100", "--t", "0.25", "--d-over-s", "0.2"],
        &["sample", "--s", "4", "--n", "3", "--r", "1", "--count", "3", "--seed", "6", "--stream", "2"],
        &["parents", "--parent", r#"{"type":"triangular","mode":"1/3","s":"1"}"#, "--at", "0.2,0.5", "--quantiles", "0.5"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let spec = stdout(&[args, &["--emit-spec"][..]].concat());
        let path = dir.path().join(format!("run{i}.json"));
        std::fs::write(&path, &spec).unwrap();
        let parsed: Value = serde_json::from_str(&spec).unwrap();
        assert!(parsed["command"].is_object());
        assert_eq!(stdout(&["--spec", path.to_str().unwrap()]), stdout(args), "{args:?}");
        assert_eq!(stdout(&["--spec", path.to_str().unwrap(), "--emit-spec"]), spec);
    }
}

#[test]
fn spec_files_are_strict() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let good = write("good.json", r#"{"command":{"pcon":{"s":"1","d":"2/5","n":2}}}"#);
    assert_eq!(json(&["--spec", good.to_str().unwrap()])["exact"], "1/25");
    for (name, text) in [
        ("top.json", r#"{"command":{"pcon":{"s":"1","d":"2/5","n":2}},"colour":1}"#),
        ("inner.json", r#"{"command":{"pcon":{"s":"1","d":"2/5","n":2,"extra":true}}}"#),
        ("verb.json", r#"{"command":{"launch":{}}}"#),
        ("broken.json", "{"),
    ] {
        let p = write(name, text);
        assert_eq!(bcov(&["--spec", p.to_str().unwrap()]).status.code(), Some(2), "{name}");
    }
    assert_eq!(bcov(&["--spec", good.to_str().unwrap(), "stats"]).status.code(), Some(2));
    assert_eq!(bcov(&["--spec", "/nonexistent/run.json"]).status.code(), Some(2));
}

#[test]
fn csv_output() {
    let csv = stdout(&["pcon", "--s", "1", "--d", "2/5", "--n", "2", "--format", "csv"]);
    assert_eq!(csv, "key,value\nexact,1/25\nfloat,0.04\n");
}
