use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gmclt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmclt"))
        .args(args)
        .current_dir(dir)
        .env_remove("GMCLT_SEED")
        .output()
        .expect("binary runs")
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn payload(path: &Path) -> Vec<String> {
    gmclt_core::report::read_payload(path).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn spectrum_of_two_state_chain() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "markov.json", r#"{"kind": "markov", "P": [[0.9, 0.1], [0.2, 0.8]]}"#);
    let out = gmclt(&["spectrum", "--system", "markov.json", "--resolution", "2", "--out", "r.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("r.jsonl"));
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs[0]["config"]["scenario"], "spectrum");
    // eigenvalues of a stochastic 2x2 matrix: 1 and its trace minus 1
    let rho = recs[1]["report"]["rho"].as_f64().unwrap();
    assert!((rho - 0.7).abs() < 1e-8, "rho = {rho}");
}

#[test]
fn variance_of_coin() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bernoulli.json", r#"{"kind": "markov", "P": [[0.5, 0.5], [0.5, 0.5]]}"#);
    let out = gmclt(
        &["variance", "--system", "bernoulli.json", "--obs", "coin", "--samples", "4000", "--out", "v.jsonl"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("v.jsonl"));
    let e = &recs[1]["estimate"];
    for key in ["sigma2_green_kubo", "sigma2_spectral", "sigma2_monte_carlo"] {
        let v = e[key].as_f64().unwrap();
        assert!((v - 0.25).abs() < 0.02, "{key} = {v}");
    }
}

#[test]
fn missing_files_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = gmclt(&["spectrum", "--system", "absent.json", "--out", "r.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));

    let out = gmclt(&["run", "--config", "no-such-config.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-config.json"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"system": "markov2", "scenario": "spectrum", "out": "r.jsonl", "resolutoin": 2}"#,
    );
    let out = gmclt(&["run", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolutoin"));
    assert!(!dir.path().join("r.jsonl").exists());

    write(
        dir.path(),
        "s.json",
        r#"{"system": "markov2", "scenario": "thm41", "out": "r.jsonl", "schedule": {"kz": [10]}}"#,
    );
    assert_eq!(gmclt(&["run", "--config", "s.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn config_file_runs_inline_system() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"system": {"kind": "markov", "P": [[0.9, 0.1], [0.2, 0.8]]}, "scenario": "spectrum",
            "resolution": 4, "out": "r.jsonl"}"#,
    );
    let out = gmclt(&["run", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("r.jsonl"));
    assert_eq!(recs[1]["cells"], 4);
}

#[test]
fn payload_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["clt", "--system", "markov2", "--scenario", "thm41", "--k", "20,80", "--samples", "3000"];
    let mut a: Vec<&str> = base.to_vec();
    a.extend(["--workers", "1", "--out", "a.jsonl"]);
    let mut b: Vec<&str> = base.to_vec();
    b.extend(["--workers", "4", "--out", "b.jsonl"]);
    gmclt(&a, dir.path());
    gmclt(&b, dir.path());
    let (pa, pb) = (payload(&dir.path().join("a.jsonl")), payload(&dir.path().join("b.jsonl")));
    assert!(!pa.is_empty());
    assert_eq!(pa, pb);
}

#[test]
fn environment_seed_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let args = |seed: &str, out: &str| {
        vec![
            "variance".to_string(),
            "--system".into(),
            "markov2".into(),
            "--samples".into(),
            "500".into(),
            "--mc-n".into(),
            "50".into(),
            "--seed".into(),
            seed.into(),
            "--out".into(),
            out.into(),
        ]
    };
    let run = |a: Vec<String>, env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_gmclt"));
        c.args(a).current_dir(dir.path()).env_remove("GMCLT_SEED");
        if let Some(s) = env {
            c.env("GMCLT_SEED", s);
        }
        c.output().unwrap()
    };
    run(args("5", "five.jsonl"), None);
    run(args("1", "env.jsonl"), Some("5"));
    run(args("1", "one.jsonl"), None);
    let five = payload(&dir.path().join("five.jsonl"));
    assert_eq!(five, payload(&dir.path().join("env.jsonl")));
    assert_ne!(five, payload(&dir.path().join("one.jsonl")));
}

#[test]
fn failed_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = gmclt(
        &[
            "clt", "--system", "markov2", "--scenario", "thm41", "--k", "5", "--samples", "2000", "--ks-threshold",
            "0.0001", "--out", "r.jsonl",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let recs = records(&dir.path().join("r.jsonl"));
    assert_eq!(recs.last().unwrap()["pass"], false);
}

#[test]
fn iid_wilcoxon_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = gmclt(
        &[
            "wilcoxon", "--system", "iid", "--m", "64", "--reps", "4000", "--out", "w.jsonl", "--csv", "w.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("w.jsonl"));
    // classical null variance mn(m+n+1)/12
    let s2 = recs[1]["sigma"]["sigma2"].as_f64().unwrap();
    let classical = 64.0 * 64.0 * 129.0 / 12.0;
    assert!((s2 / classical - 1.0).abs() < 0.1, "{s2} vs {classical}");
    let csv = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert!(csv.starts_with("n,x,ecdf,phi\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn wilcoxon_rejects_lambda_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = gmclt(&["wilcoxon", "--system", "iid", "--lambda", "1.5", "--out", "w.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
}

#[test]
fn spectrum_csv_dumps_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = gmclt(
        &["spectrum", "--system", "gauss", "--resolution", "16", "--out", "s.jsonl", "--csv", "m.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    // Koopman rows are probability vectors
    let mut sums = vec![0.0; 16];
    for r in &rows {
        sums[r[0] as usize] += r[2];
    }
    assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-12), "{sums:?}");
}
