//! End-to-end tests of the ampsup binary: exit codes, determinism across
//! thread counts, and manifest behavior.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ampsup() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ampsup"))
}

fn run(args: &[&str]) -> Output {
    ampsup().args(args).output().expect("binary runs")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ampsup-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const GOOD_CONFIG: &str = r#"{
  "a": -1,
  "b": 3,
  "order_basis": [
    ["1", "0", "0", "0"],
    ["0", "1", "0", "0"],
    ["0", "0", "1", "0"],
    ["1/2", "1/2", "1/2", "1/2"]
  ],
  "height_check": 50
}"#;

const NON_MAXIMAL_CONFIG: &str = r#"{
  "a": -1,
  "b": 3,
  "order_basis": [
    ["1", "0", "0", "0"],
    ["0", "1", "0", "0"],
    ["0", "0", "1", "0"],
    ["0", "0", "0", "1"]
  ],
  "height_check": 50
}"#;

#[test]
fn verify_default_passes_with_exit_zero() {
    let out = run(&["verify"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"all_passed\": true"));
    assert!(text.contains("\"discriminant\": \"36\""));
}

#[test]
fn verify_config_file_roundtrip() {
    let dir = tempdir("verify");
    let cfg = write_config(&dir, "disc6.json", GOOD_CONFIG);
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn missing_config_exits_2() {
    let out = run(&["verify", "--config", "/nonexistent/nope.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_json_exits_2() {
    let dir = tempdir("badjson");
    let cfg = write_config(&dir, "bad.json", "{ not json");
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verification_failure_exits_3() {
    let dir = tempdir("nonmax");
    let cfg = write_config(&dir, "nonmax.json", NON_MAXIMAL_CONFIG);
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // the report is still emitted
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"all_passed\": false"));
}

#[test]
fn gated_command_refuses_non_maximal_order() {
    let dir = tempdir("gate");
    let cfg = write_config(&dir, "nonmax.json", NON_MAXIMAL_CONFIG);
    let out = run(&[
        "enum",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "5",
        "--cosh-cap",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn budget_exhaustion_exits_4() {
    let out = run(&[
        "enum",
        "--n",
        "5",
        "--cosh-cap",
        "50",
        "--budget-elements",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn enum_output_is_byte_identical_across_thread_counts() {
    let a = run(&["enum", "--n", "5", "--cosh-cap", "12", "--threads", "1"]);
    let b = run(&["enum", "--n", "5", "--cosh-cap", "12", "--threads", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn kernel_grid_deterministic_across_threads() {
    let args = |t: &str| {
        vec![
            "kernel-grid".to_string(),
            "--k".into(),
            "8".into(),
            "--grid".into(),
            "4,4".into(),
            "--cosh-cap".into(),
            "20".into(),
            "--threads".into(),
            t.to_string(),
        ]
    };
    let a = ampsup().args(args("1")).output().unwrap();
    let b = ampsup().args(args("2")).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn manifest_hash_tracks_config_content() {
    let dir = tempdir("manifest");
    let cfg1 = write_config(&dir, "c1.json", GOOD_CONFIG);
    let cfg2 = write_config(&dir, "c2.json", GOOD_CONFIG);
    // different content: blank line added
    let cfg3 = write_config(&dir, "c3.json", &format!("{GOOD_CONFIG}\n"));
    let out1 = dir.join("r1.csv");
    let out2 = dir.join("r2.csv");
    let out3 = dir.join("r3.csv");
    for (cfg, out) in [(&cfg1, &out1), (&cfg2, &out2), (&cfg3, &out3)] {
        let r = run(&[
            "enum",
            "--config",
            cfg.to_str().unwrap(),
            "--n",
            "1",
            "--cosh-cap",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success());
    }
    let m1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("r1.csv.manifest.json")).unwrap())
            .unwrap();
    let m2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("r2.csv.manifest.json")).unwrap())
            .unwrap();
    let m3: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("r3.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m1["config_sha256"], m2["config_sha256"]);
    assert_ne!(m1["config_sha256"], m3["config_sha256"]);
    // identical content => identical results
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn curve_prints_slope_near_five_sixths() {
    let out = run(&["curve", "--kmin", "1e5", "--kmax", "1e9", "--samples", "24"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err
        .lines()
        .find(|l| l.contains("fitted slope"))
        .expect("slope line printed");
    let slope: f64 = line
        .rsplit(' ')
        .next()
        .unwrap()
        .trim()
        .parse()
        .expect("slope parses");
    assert!((slope - 5.0 / 6.0).abs() < 0.02, "slope {slope}");
    let csv = String::from_utf8_lossy(&out.stdout);
    assert!(csv.starts_with("k,n_balance,n_grid,term1,term2,rhs,log_slope"));
    assert_eq!(csv.lines().count(), 25);
}

#[test]
fn bound_extended_agrees_with_double() {
    let out = run(&[
        "bound",
        "--k",
        "27631",
        "--N",
        "10",
        "--precision",
        "extended",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let data_line = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = data_line.split(',').collect();
    let term1: f64 = cols[4].parse().unwrap();
    let term2: f64 = cols[5].parse().unwrap();
    let term1x: f64 = cols[7].parse().unwrap();
    let term2x: f64 = cols[8].parse().unwrap();
    assert!((term1 - term1x).abs() <= 1e-9 * term1.abs());
    assert!((term2 - term2x).abs() <= 1e-9 * term2.abs());
    assert!((term1 - 8737.69).abs() < 0.01);
    assert!((term2 - 0.3184).abs() < 1e-3);
}

#[test]
fn hecke_kernel_rejects_level_divisor_with_exit_2() {
    let out = run(&["hecke-kernel", "--n", "6", "--k", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn count_table_has_expected_shape() {
    let out = run(&["count", "--nmax", "6", "--k", "8", "--cosh-cap", "12"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,small_count,small_sum_log10,remainder_count,remainder_sum_log10,comparison_log10,terms"
    );
    // n = 1 and n = 5 survive the coprimality filter below 6
    let ns: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, vec!["1", "5"]);
}

#[test]
fn check_amplified_emits_json_report() {
    let out = run(&[
        "check-amplified",
        "--k",
        "40",
        "--N",
        "25",
        "--z",
        "0,1",
        "--cosh-cap",
        "20",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("report is JSON");
    assert_eq!(report["k"], 40);
    assert_eq!(report["n_param"], 25);
    let mismatch = report["max_termwise_mismatch"].as_f64().unwrap();
    assert!(mismatch < 1e-8, "termwise mismatch {mismatch}");
    assert!(report["termwise_checks"].as_u64().unwrap() > 900);
    // support {5, 25} yields nu in {1, 5, 25, 125, 625}
    let nus: std::collections::BTreeSet<u64> = report["pair_terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["nu"].as_u64().unwrap())
        .collect();
    assert_eq!(nus, [1u64, 5, 25, 125, 625].into_iter().collect());
}
