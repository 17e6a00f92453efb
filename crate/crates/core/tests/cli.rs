use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cm-compete"));
    c.env_remove("CMCOMPETE_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cm-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_then_replay_matches_direct_run() {
    let dir = scratch("gen");
    let g = dir.join("g.bin");
    let out = run(&["gen", "--n", "3000", "--seed", "4", "--out", g.to_str().unwrap()]);
    assert!(out.status.success());
    let common = ["--red", "0", "--blue", "1", "--lambda", "3/2", "--tie-rule", "fair_coin", "--seed", "4"];
    let mut a = vec!["run", "--graph", g.to_str().unwrap()];
    a.extend(common);
    let replay = json(&run(&a));
    let mut b = vec!["run", "--n", "3000"];
    b.extend(common);
    let direct = json(&run(&b));
    assert_eq!(replay, direct);
    assert_eq!(replay["n"], 3000);
    assert_eq!(replay["lambda"], "3/2");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn run_writes_layer_profile() {
    let dir = scratch("layers");
    let csv = dir.join("layers.csv");
    let out = run(&["run", "--n", "20000", "--layers-csv", csv.to_str().unwrap()]);
    let summary = json(&out);
    let r = summary["R_inf"].as_u64().unwrap();
    let b = summary["B_inf"].as_u64().unwrap();
    assert!(r + b <= 20000);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().count() >= 2);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn predict_prints_report() {
    let v =
        json(&run(&["predict", "--n", "1e6", "--rho-prime", "0.1", "--yr", "0.8", "--yb", "0.9", "--lambda", "2/1"]));
    for key in ["T_r", "t_c", "case_label", "Cn", "predicted_logB", "bounds_flags"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let real =
        json(&run(&["predict", "--n", "1e6", "--rho-prime", "0.1", "--yr", "0.8", "--yb", "0.9", "--lambda", "2"]));
    assert_eq!(v, real);
}

#[test]
fn bad_input_exits_with_two() {
    let out = run(&["predict", "--n", "1e6", "--tau", "3.5", "--rho-prime", "0.1", "--yr", "1", "--yb", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(run(&["verify", "nosuch"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--n", "100", "--red", "5", "--blue", "5"]).status.code(), Some(2));
}

#[test]
fn verify_paths_suite_passes() {
    let dir = scratch("verify");
    let report = dir.join("report.json");
    let out = run(&["verify", "paths", "--seed", "3", "--json", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v[0]["suite"], "Paths");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn paths_triangle() {
    let v = json(&run(&["paths", "--degrees", "2,2,2", "--a", "0", "--b", "1", "--k", "2"]));
    // one intermediate vertex: 8/15 of the pairings give a 2-path 0-2-1
    assert!((v["exact"].as_f64().unwrap() - 8.0 / 15.0).abs() < 1e-12);
    let v = json(&run(&["paths", "--degrees", "2,2,2", "--a", "0", "--b", "1", "--k", "2", "--pairings", "4000"]));
    assert_eq!(v["agrees"], true);
}

fn ensemble(dir: &Path, env_dir: bool) -> Output {
    let mut c = bin();
    c.args(["ensemble", "--n", "3000", "--replicates", "3", "--master-seed", "9"]);
    if env_dir {
        c.env("CMCOMPETE_OUT_DIR", dir);
    } else {
        c.args(["--out-dir", dir.to_str().unwrap()]);
    }
    c.output().unwrap()
}

#[test]
fn ensemble_outputs_are_reproducible() {
    let a = scratch("ens-a");
    let b = scratch("ens-b");
    assert!(ensemble(&a, false).status.success());
    assert!(ensemble(&b, true).status.success());
    let csv_a = std::fs::read_to_string(a.join("runs.csv")).unwrap();
    let csv_b = std::fs::read_to_string(b.join("runs.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(csv_a.starts_with("run_id,seed,n,tau,lambda_num,lambda_den,tie_rule,R_inf,B_inf"));
    assert_eq!(csv_a.lines().count(), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replicates"], 3);

    let cfg = a.join("cfg.txt");
    std::fs::write(&cfg, "n = 3000\nreplicates = 2\nlambda = 3/2\n").unwrap();
    let c = scratch("ens-c");
    let out = bin()
        .args(["ensemble", "--config", cfg.to_str().unwrap(), "--replicates", "1", "--out-dir", c.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv_c = std::fs::read_to_string(c.join("runs.csv")).unwrap();
    assert_eq!(csv_c.lines().count(), 2);
    assert!(csv_c.lines().nth(1).unwrap().contains(",3,2,"));
    for d in [a, b, c] {
        std::fs::remove_dir_all(d).ok();
    }
}
