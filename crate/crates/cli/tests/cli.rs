use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chanperturb"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn chanperturb")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SMALL_SWEEP: &str = r#"{
  "sim": { "n_pairs": 6, "seed": 3 },
  "n_realizations": 3,
  "attacks": [
    { "kind": "BcVertex", "seed": 1 },
    { "kind": "BpEdge", "l_p": 0.5, "seed": 2 }
  ],
  "sweep": { "l_c": [0.5, 1.0] }
}"#;

const SMALL_EIGEN: &str = r#"{
  "sim": { "n_pairs": 10, "pathloss_log_base": 10, "seed": 5 },
  "n_realizations": 6,
  "attacks": [ { "kind": "BcEdge", "l_c": 0.9, "seed": 9 } ],
  "eigen": { "zoo": ["norm", "lognorm", "gamma", "johnsonsu"], "curve_points": 16 }
}"#;

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn dcrit_prints_value() {
    let out = bin().args(["dcrit", "1000"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let d: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((d - 0.0327).abs() < 1e-4, "{d}");
}

#[test]
fn unsupported_alpha_is_config_error() {
    let out = bin().args(["dcrit", "1000", "--alpha", "0.05"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{ "sim": { "n_pairs": 4, "bogus": 1 } }"#).unwrap();
    assert_eq!(code(&run_in(dir.path(), &["sweep", "--config", "bad.json"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["sweep", "--config", "missing.json"])), 2);
    fs::write(dir.path().join("base.json"), r#"{ "sim": { "pathloss_log_base": 3 } }"#).unwrap();
    assert_eq!(code(&run_in(dir.path(), &["gen", "--config", "base.json"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["sweep", "--threads", "0"])), 2);
}

#[test]
fn gen_then_attack_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "--seed", "7", "--realization", "2", "--out", "net"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let net: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("net/network.json")).unwrap()).unwrap();
    assert_eq!(net["realization"], 2);
    assert_eq!(net["sim"]["seed"], 7);

    fs::write(dir.path().join("attack.json"), r#"{ "kind": "BcVertex", "l_c": 0.5, "seed": 4 }"#).unwrap();
    let out = run_in(dir.path(), &["attack", "--config", "attack.json", "--input", "net/network.json", "--out", "net"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let att: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("net/attacked.json")).unwrap()).unwrap();
    let report = &att["report"];
    assert_eq!(report["kind"], "BcVertex");
    assert_eq!(report["attacked_indices"].as_array().unwrap().len(), 10);
    assert!(report["constraint_violations"].as_array().unwrap().is_empty());

    assert_eq!(code(&run_in(dir.path(), &["attack", "--input", "net/network.json"])), 2);
    fs::write(dir.path().join("edge.json"), r#"{ "kind": "BcEdge", "l_c": 0.5, "enforce_limits": false }"#).unwrap();
    assert_eq!(code(&run_in(dir.path(), &["attack", "--config", "edge.json", "--input", "net/network.json"])), 2);
}

#[test]
fn fit_ranks_values_file() {
    let dir = tempfile::tempdir().unwrap();
    let values: String = (1..=200).map(|k| format!("{}\n", (k as f64 / 201.0).powi(2) + 1.0)).collect();
    fs::write(dir.path().join("v.txt"), format!("value\n{values}")).unwrap();
    let out = run_in(dir.path(), &["fit", "--input", "v.txt", "--family", "norm", "--family", "gamma"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("rank,family"));
    assert_eq!(code(&run_in(dir.path(), &["fit", "--input", "v.txt", "--family", "nope"])), 2);
}

#[test]
fn sweep_output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        fs::write(d.join("c.json"), SMALL_SWEEP).unwrap();
        let out = run_in(d, &["sweep", "--config", "c.json", "--out", "res"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ta = tree(&a.path().join("res"));
    assert_eq!(ta, tree(&b.path().join("res")));
    let names: Vec<&str> = ta.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["attack_reports.jsonl", "manifest.json", "qoc_sweep.csv"]);
    let csv = String::from_utf8(ta[2].1.clone()).unwrap();
    // Two BcVertex levels plus the BpEdge row.
    assert_eq!(csv.lines().count(), 4);
    assert!(!csv.contains('\r'));
}

#[test]
fn eigen_output_is_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, threads) in [(a.path(), "1"), (b.path(), "2")] {
        fs::write(d.join("c.json"), SMALL_EIGEN).unwrap();
        let out = run_in(d, &["eigen", "--config", "c.json", "--out", "res", "--threads", threads]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ta = tree(&a.path().join("res"));
    assert_eq!(ta, tree(&b.path().join("res")));
    let manifest: serde_json::Value =
        serde_json::from_slice(&ta.iter().find(|(n, _)| n == "manifest.json").unwrap().1).unwrap();
    assert_eq!(manifest["command"], "eigen");
    assert_eq!(manifest["sim_seed"], 5);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_override_changes_output() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.json"), SMALL_SWEEP).unwrap();
    for (seed, out) in [("3", "s3"), ("4", "s4")] {
        assert_eq!(code(&run_in(d.path(), &["sweep", "--config", "c.json", "--seed", seed, "--out", out])), 0);
    }
    let csv = |o: &str| fs::read(d.path().join(o).join("qoc_sweep.csv")).unwrap();
    assert_ne!(csv("s3"), csv("s4"));
}
