use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mlpnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlpnet")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mlpnet(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn check_schema(name: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).expect("valid json")
}

fn read_json(p: &Path) -> Value {
    json(&std::fs::read_to_string(p).unwrap())
}

#[test]
fn schedule_prints_constants() {
    let args = ["schedule", "--eps", "0.5", "--L", "1", "--T", "1", "--p", "2"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let v = json(&a);
    check_schema("schedule", &v);
    assert_eq!(v["k_eps"], 4);
    assert_eq!(v["seed"], 0);
    assert!(v["delta"].as_f64().unwrap() <= 0.5);
    assert!(v["gamma"].as_f64().unwrap() <= 0.25);
}

#[test]
fn hat_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.json");
    let h = h.to_str().unwrap();
    let report = json(&ok(&["build-hat", "--t0", "0", "--t1", "0.5", "--t2", "1", "--alpha", "0.5", "--out", h]));
    check_schema("build", &report);
    assert_eq!(report["param_count"], 19);
    check_schema("network", &read_json(Path::new(h)));

    let csv = ok(&["eval", "--net", h, "--at", "0.5"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x0,output"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((row[1] - 1.0).abs() <= 1e-12);

    let pts = dir.path().join("p.csv");
    std::fs::write(&pts, "t\n-1\n0.25\n0.5\n0.75\n2\n").unwrap();
    let out = dir.path().join("o.csv");
    ok(&["eval", "--net", h, "--points", pts.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out).unwrap();
    let vals: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let want = [0.0, 0.5, 1.0, 0.5, 0.0];
    for (a, b) in vals.iter().zip(want) {
        assert!((a - b).abs() <= 1e-12, "{vals:?}");
    }
}

#[test]
fn gadgets_build() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, act) in [("build-product", "leaky"), ("build-square", "relu"), ("build-product", "softplus")] {
        let p = dir.path().join(format!("{cmd}-{act}.json"));
        let p = p.to_str().unwrap();
        let r = json(&ok(&[cmd, "--eps", "0.5", "--q", "3", "--activation", act, "--out", p]));
        check_schema("build", &r);
        check_schema("network", &read_json(Path::new(p)));
    }
    let p = dir.path().join("prod.json");
    let p = p.to_str().unwrap();
    ok(&["build-product", "--eps", "0.25", "--out", p]);
    let csv = ok(&["eval", "--net", p, "--at", "1.5,-2"]);
    let y: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((y + 3.0).abs() <= 0.25 * 8.0);
}

#[test]
fn solve_mlp_is_reproducible_across_thread_counts() {
    let base = ["solve-mlp", "--d", "2", "--n", "3", "--M", "3", "--x", "0.1,-0.2", "--f", "sine", "--g", "ridge:1", "--seed", "4"];
    let mut estimates = Vec::new();
    for threads in ["1", "3"] {
        let mut args = base.to_vec();
        args.extend(["--threads", threads]);
        let v = json(&ok(&args));
        check_schema("solve", &v);
        assert_eq!(v["params"]["seed"], 4);
        estimates.push(v["estimate"].as_f64().unwrap().to_bits());
    }
    assert_eq!(estimates[0], estimates[1]);
}

#[test]
fn compile_writes_network_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.json");
    let out_s = out.to_str().unwrap();
    let args = [
        "compile", "--mode", "fixed", "--n", "2", "--M", "2", "--d", "1", "--f", "linear:1", "--g", "gauss", "--seed", "3",
        "--knots", "241", "--out", out_s,
    ];
    let first = ok(&args);
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(first, ok(&args));
    assert_eq!(bytes, std::fs::read(&out).unwrap());
    check_schema("network", &read_json(&out));
    let side = read_json(Path::new(&format!("{out_s}.provenance.json")));
    check_schema("provenance", &side);
    assert_eq!(side["seed"], 3);
    assert_eq!(side["mode"], "fixed");

    let csv = ok(&["eval", "--net", out_s, "--at", "0.3"]);
    let net: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let direct = json(&ok(&["solve-mlp", "--n", "2", "--M", "2", "--x", "0.3", "--seed", "3"]));
    assert!((net - direct["estimate"].as_f64().unwrap()).abs() < 1e-2);

    let st = dir.path().join("st.json");
    let side = json(&ok(&[
        "compile", "--mode", "spacetime", "--n", "1", "--M", "2", "--K", "2", "--gamma", "0.5", "--d", "2", "--g", "ridge",
        "--out", st.to_str().unwrap(),
    ]));
    check_schema("provenance", &side);
    assert_eq!(side["grid_size"], 2);
}

#[test]
fn verify_calculus_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let v = json(&ok(&["verify", "calculus", "--out", report.to_str().unwrap()]));
    check_schema("verify", &v);
    assert_eq!(v["passed"], true);
    assert_eq!(v, read_json(&report));
}

#[test]
fn bench_csv_is_deterministic() {
    let args = ["bench", "cod", "--dims", "1,2", "--n", "1", "--K", "2", "--samples", "10", "--no-timing"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert!(a.starts_with("d,params,"));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(mlpnet(&["schedule"]).status.code(), Some(2));
    assert_eq!(mlpnet(&["nonsense"]).status.code(), Some(2));
    assert_eq!(mlpnet(&["schedule", "--eps", "0.5", "--bogus"]).status.code(), Some(2));
    let missing = mlpnet(&["eval", "--net", "/nonexistent/net.json", "--at", "1"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    assert_eq!(mlpnet(&["schedule", "--eps", "2"]).status.code(), Some(1));
    assert_eq!(mlpnet(&["build-hat", "--t0", "1", "--t1", "0", "--t2", "2", "--out", "/tmp/x.json"]).status.code(), Some(1));
}

#[test]
fn help_documents_flags() {
    let h = ok(&["compile", "--help"]);
    for flag in ["--mode", "--n", "--M", "--K", "--gamma", "--d", "--activation", "--seed", "--out", "--threads"] {
        assert!(h.contains(flag), "{flag} missing from help");
    }
}
