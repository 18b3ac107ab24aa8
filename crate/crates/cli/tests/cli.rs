use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const XSHAP: &str = env!("CARGO_BIN_EXE_xshap");
const STUB: &str = env!("CARGO_BIN_EXE_xshap-stub");

fn xshap(args: &[&str]) -> Output {
    Command::new(XSHAP).args(args).output().expect("run xshap")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn synth(dir: &TempDir, features: usize, n: usize, seed: u64) -> PathBuf {
    let path = dir.path().join(format!("synth_{features}_{n}_{seed}.csv"));
    let out = xshap(&[
        "synth",
        "--n",
        &n.to_string(),
        "--features",
        &features.to_string(),
        "--seed",
        &seed.to_string(),
        "--noise",
        "0.1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn run_args<'a>(data: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--data", data.to_str().unwrap(), "--target", "y", "--seed", "3", "--ref-size", "25"];
    v.extend_from_slice(extra);
    v
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn synth_is_deterministic() {
    let a = xshap(&["synth", "--n", "20", "--features", "3", "--seed", "5"]);
    let b = xshap(&["synth", "--n", "20", "--features", "3", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x0,x1,x2,y"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn explain_selected_rows_reconstruct() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, 4, 120, 1);
    let mut args = vec!["explain"];
    args.extend(run_args(&data, &["--rows", "0:3", "--mode", "both"]));
    let report = json_of(&xshap(&args));
    assert_eq!(report["mode"], "both");
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let baseline = f(&report["baseline"]);
    let additive_baseline = f(&report["additive_baseline"]);
    for row in rows {
        let y = f(&row["prediction"]);
        let product: f64 = row["features"].as_array().unwrap().iter().map(|c| f(&c["contribution"])).product();
        assert!((baseline * product - y).abs() <= 1e-10 * y, "{row}");
        for c in row["features"].as_array().unwrap() {
            let psi = f(&c["contribution"]);
            assert_eq!(f(&c["importance"]), psi.max(1.0 / psi));
        }
        let add = &row["additive"];
        let sum: f64 = add["features"].as_array().unwrap().iter().map(|c| f(&c["contribution"])).sum();
        assert!((additive_baseline + sum - y).abs() <= 1e-10 * y.abs().max(1.0), "{row}");
    }
}

#[test]
fn explain_csv_projection() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, 3, 60, 2);
    let mut args = vec!["explain"];
    args.extend(run_args(&data, &["--rows", "1:3", "--format", "csv"]));
    let out = xshap(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("index,kind,prediction,baseline,feature,value,contribution,importance\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 3);
}

#[test]
fn metrics_blocks() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, 3, 150, 4);
    let mut args = vec!["metrics"];
    args.extend(run_args(&data, &["--pd-feature", "x1", "--pd-bins", "1"]));
    let report = json_of(&xshap(&args));

    let importance: Vec<f64> = report["importance"].as_array().unwrap().iter().map(|r| f(&r["importance"])).collect();
    assert!(importance.windows(2).all(|w| w[0] >= w[1]));
    assert!(importance.iter().all(|&i| i >= 1.0));

    let geo = f(&report["prediction_geometric_mean"]);
    let pd = &report["partial_dependence"];
    assert_eq!(pd["values"].as_array().unwrap().len(), 1);
    assert!((f(&pd["values"][0]) - geo).abs() <= 1e-12 * geo);

    let groups = report["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 1);
    let all = &groups[0];
    assert_eq!(all["label"], "all");
    assert_eq!(all["size"], report["n_rows"]);
    assert!((f(&all["reconstruction"]) - geo).abs() <= 1e-10 * geo);
    for g in all["features"].as_array().unwrap() {
        let global = report["importance"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["name"] == g["name"])
            .unwrap();
        assert_eq!(g["importance"], global["importance"]);
    }
}

#[test]
fn metrics_filters() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, 3, 150, 4);
    let mut args = vec!["metrics"];
    args.extend(run_args(&data, &["--filter", "x0<0", "--filter", "x0>=0&x2<0", "--filter", "x1>100"]));
    let report = json_of(&xshap(&args));
    let groups = report["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 4);
    assert_eq!(groups[1]["label"], "x0<0");
    let n = report["n_rows"].as_u64().unwrap();
    assert!(groups[1]["size"].as_u64().unwrap() < n);
    assert_eq!(groups[3]["size"], 0);
    assert!(groups[3]["reconstruction"].is_null());

    let mut bad = vec!["metrics"];
    bad.extend(run_args(&data, &["--filter", "height<3"]));
    assert_eq!(xshap(&bad).status.code(), Some(2));
    let mut bad = vec!["metrics"];
    bad.extend(run_args(&data, &["--pd-feature", "nope"]));
    assert_eq!(xshap(&bad).status.code(), Some(2));
}

#[test]
fn validate_glm_passes() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, 8, 200, 6);
    let mut args = vec!["validate"];
    args.extend(run_args(&data, &["--mode", "both", "--coalitions", "300", "--rows", "0:12"]));
    let report = json_of(&xshap(&args));
    assert_eq!(report["pass"], true, "{report:#}");
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for expected in [
        "local_accuracy_multiplicative_mean",
        "local_accuracy_additive_max",
        "convergence",
        "oracle_multiplicative",
        "oracle_additive",
        "glm_closed_form",
        "glm_baseline",
    ] {
        assert!(names.contains(&expected), "{names:?}");
    }
    assert!(report["convergence"]["budgets"].as_array().unwrap().len() > 1);
}

#[test]
fn categorical_columns_are_one_hot_encoded() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("cat.csv");
    let mut text = String::from("colour,size,y\n");
    for i in 0..40 {
        let colour = ["red", "blue", "green"][i % 3];
        let size = (i % 7) as f64;
        let y = (0.1 * size + if colour == "red" { 0.5 } else { 0.0 }).exp();
        text.push_str(&format!("{colour},{size},{y}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let args = [
        "explain", "--data", p, "--target", "y", "--seed", "3", "--ref-size", "10", "--model", "gbt", "--trees", "10",
        "--rows", "0:1",
    ];
    let report = json_of(&xshap(&args));
    let names: Vec<&str> = report["rows"][0]["features"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["colour=red", "colour=blue", "colour=green", "size"]);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, 2, 30, 8);
    let d = data.to_str().unwrap();

    // missing seed and bad values are configuration errors
    assert_eq!(xshap(&["explain", "--data", d, "--target", "y"]).status.code(), Some(2));
    assert_eq!(xshap(&["explain", "--data", d, "--target", "y", "--seed", "1", "--split", "1.5"]).status.code(), Some(2));
    let out = xshap(&["explain", "--data", d, "--target", "y", "--seed", "1", "--ref-size", "500"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "a,y\n1,2\n3\n4,5\n").unwrap();
    let out = xshap(&["explain", "--data", ragged.to_str().unwrap(), "--target", "y", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));

    let negative = dir.path().join("neg.csv");
    std::fs::write(&negative, "a,y\n1,2\n3,-1\n4,5\n5,6\n").unwrap();
    let out = xshap(&["explain", "--data", negative.to_str().unwrap(), "--target", "y", "--seed", "1", "--ref-size", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let stub = format!("{STUB} negative --features 2");
    let out = xshap(&[
        "explain", "--data", d, "--target", "y", "--seed", "1", "--ref-size", "5", "--model", "extern", "--extern-cmd", &stub,
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, 3, 60, 9);
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("data = {:?}\ntarget = \"y\"\nseed = 3\nref-size = 25\nrows = \"0:5\"\n", data.to_str().unwrap()),
    )
    .unwrap();
    let from_file = json_of(&xshap(&["explain", "--config", cfg.to_str().unwrap()]));
    assert_eq!(from_file["rows"].as_array().unwrap().len(), 5);
    let overridden = json_of(&xshap(&["explain", "--config", cfg.to_str().unwrap(), "--rows", "0:2"]));
    assert_eq!(overridden["rows"].as_array().unwrap().len(), 2);
    assert_eq!(overridden["rows"][0], from_file["rows"][0]);
}

#[test]
fn extern_model_matches_in_process_glm() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("glm.csv");
    // y is produced exactly by the stub's parameters, so OLS refits them
    let out = xshap(&["synth", "--n", "80", "--features", "3", "--seed", "2", "--alpha", "0.2", "--betas", "0.5,-0.3,0.8"]);
    std::fs::write(&path, out.stdout).unwrap();
    let mut args = vec!["explain"];
    args.extend(run_args(&path, &["--rows", "0:5"]));
    let local = json_of(&xshap(&args));
    let stub = format!("{STUB} glm --features 3 --alpha 0.2 --betas 0.5,-0.3,0.8");
    let mut args = vec!["explain"];
    args.extend(run_args(&path, &["--rows", "0:5", "--model", "extern", "--extern-cmd", &stub]));
    let remote = json_of(&xshap(&args));
    for (a, b) in local["rows"].as_array().unwrap().iter().zip(remote["rows"].as_array().unwrap()) {
        for (ca, cb) in a["features"].as_array().unwrap().iter().zip(b["features"].as_array().unwrap()) {
            let (x, y) = (f(&ca["contribution"]), f(&cb["contribution"]));
            assert!((x - y).abs() <= 1e-8 * y, "{x} vs {y}");
        }
    }
}
