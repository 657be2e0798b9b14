use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

use fraclab::ConstantBundle;
use fraclab_cli::Envelope;

fn fraclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn constants_reports_the_bundle() {
    let o = fraclab(&["constants", "--N", "2", "--p", "2", "--s", "0.75"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "constants");
    assert_eq!(v["passed"], true);
    assert_eq!(v["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    let b = &v["result"][0];
    for key in ["hardy_const", "grr_const", "c1", "c2", "sphere_surface", "sphere_moment", "q"] {
        assert!(b[key].is_number(), "missing {key}");
    }
    assert_eq!(b["q"], 8.0);
    assert_eq!(b["params"]["N"], 2);
}

#[test]
fn envelope_round_trips() {
    let o = fraclab(&["constants", "--N", "3", "--p", "2.5", "--s", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let env: Envelope<Vec<ConstantBundle>> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(env.result.len(), 1);
    assert_eq!(env.result[0].params.dim, 3);
    let again = serde_json::to_string_pretty(&env).unwrap() + "\n";
    assert_eq!(again, stdout(&o));
}

#[test]
fn csv_matches_json_exactly() {
    let json = fraclab(&["constants", "--s", "0.6"]);
    let csv = fraclab(&["constants", "--s", "0.6", "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    let env: Envelope<Vec<ConstantBundle>> = serde_json::from_str(&stdout(&json)).unwrap();
    let text = stdout(&csv);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()].parse::<f64>().unwrap();
    let b = &env.result[0];
    assert_eq!(Some(col("hardy_const")), b.hardy_const);
    assert_eq!(Some(col("c1")), b.c1);
    assert_eq!(Some(col("c2")), b.c2);
    assert_eq!(col("sphere_moment"), b.sphere_moment);
    assert_eq!(Some(col("q")), b.q);
}

#[test]
fn invalid_s_is_a_config_error() {
    let o = fraclab(&["constants", "--s", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("0<s<1"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn unknown_config_key_is_rejected() {
    let path = scratch("unknown.json", r#"{"params": {"N": 2, "p": 2, "s": 0.75}, "resolutoin": 64}"#);
    let o = fraclab(&["constants", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resolutoin"));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(fraclab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(fraclab(&["constants", "--p", "two"]).status.code(), Some(2));
    assert_eq!(fraclab(&["verify-hsm", "--count", "0"]).status.code(), Some(2));
}

#[test]
fn config_command_must_agree() {
    let path = scratch("mismatch.json", r#"{"command": "mdist"}"#);
    let o = fraclab(&["constants", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hsm_suite_is_reproducible() {
    let args = ["verify-hsm", "--seed", "42", "--resolution", "16", "--count", "3"];
    let a = fraclab(&args);
    let b = fraclab(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["result"].as_array().unwrap().len(), 3);
    let c = fraclab(&["verify-hsm", "--seed", "43", "--resolution", "16", "--count", "3"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn out_writes_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("mdist.csv");
    let _ = std::fs::remove_file(&path);
    let o = fraclab(&["mdist", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x1,x2,m_alpha,distance\n"));
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(v[2] <= v[3] * (1.0 + 1e-9));
    }
}

#[test]
fn onedim_tasks_run() {
    for task in ["w-potential", "grr", "interval"] {
        let o = fraclab(&["onedim", "--task", task, "--resolution", "64", "--count", "5"]);
        assert_eq!(o.status.code(), Some(0), "{task}: {}", stderr(&o));
    }
}

#[test]
fn halfspace_reflection_contract() {
    let path = scratch(
        "reflect.json",
        r#"{"params": {"N": 1, "p": 2, "s": 0.3},
            "domain": {"kind": "half_space", "normal": [1.0], "offset": 0.0},
            "quad": {"resolution": 64},
            "trials": {"count": 3, "seed": 7}}"#,
    );
    let o = fraclab(&["decomposition-check", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for row in v["result"].as_array().unwrap() {
        assert_eq!(row["kind"], "reflection");
        let r = row["report"]["ratio"].as_f64().unwrap();
        assert!((2.0..=4.001).contains(&r));
    }
}

#[test]
fn small_sigma_estimate() {
    let path = scratch(
        "sigma.json",
        r#"{"command": "estimate-sigma",
            "quad": {"resolution": 12},
            "search": {"iterations": 10, "restarts": 0, "max_evaluations": 15, "seed": 1, "step": 0.3, "spread": 1.0}}"#,
    );
    let o = fraclab(&["estimate-sigma", "--config", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(row[0], 0.75);
    assert!(row[1] > 0.0 && row[3] > 0.0);
}
