//! Binary-level CLI tests: schemas, exit codes, seeding, and manifests.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exrate")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exrate-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn help_and_version() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
}

#[test]
fn validation_errors_exit_2() {
    let out = run(&["excess", "--source", "cauchy:0,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = run(&["lattice", "decode", "Z:2", "0.5"]);
    assert_eq!(out.status.code(), Some(2), "dimension mismatch should exit 2");

    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));

    // Distortion list must be strictly decreasing.
    let out = run(&["excess", "--source", "gaussian:0,1", "--distortions", "1e-3,1e-2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decode_matches_doc_example() {
    let out = run(&["lattice", "decode", "Z:2", "0.4,-1.6"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0,-2\n");
}

#[test]
fn excess_csv_schema_and_finite_fields() {
    let out = run(&[
        "excess",
        "--source",
        "uniform:0,1",
        "--distortions",
        "1e-3,1e-4",
        "--family",
        "pattern:1,2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "D,achieved_D,entropy_nats,reference_nats,excess_bits");
    let mut rows = 0;
    for line in lines {
        for field in line.split(',') {
            let v: f64 = field.parse().expect("numeric field");
            assert!(v.is_finite());
        }
        rows += 1;
    }
    assert_eq!(rows, 2);
}

#[test]
fn concentration_csv_schema() {
    let out = run(&[
        "concentration",
        "--source",
        "gaussian:0,1",
        "--distortions",
        "1e-3",
        "--family",
        "pattern:1,2",
        "--variant",
        "corollary_delta",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("D,rho,theta,variant,mass,tail_mass\n"));
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains("corollary_delta"));
}

#[test]
fn figure1_fields_parse_and_bounds_nest() {
    let out = run(&[
        "--samples", "20000", "figure1", "--dims", "1..6", "--lattices", "Z,A,Dstar",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        let lb: f64 = fields[1].parse().unwrap();
        let zador: f64 = fields[2].parse().unwrap();
        assert!(lb.is_finite() && zador.is_finite() && lb <= zador);
        if !fields[4].is_empty() {
            let ub: f64 = fields[4].parse().unwrap();
            // MC noise allowance: the lattice bound needs a few std errors.
            let se: f64 = fields[6].parse().unwrap();
            assert!(lb <= ub + 5.0 * se.max(1e-12), "row {line}");
        }
    }
    // Z:1 achieves the scalar lower bound exactly.
    let z1 = text.lines().skip(1).find(|l| l.split(',').nth(3) == Some("Z:1")).unwrap();
    let fields: Vec<&str> = z1.split(',').collect();
    let lb: f64 = fields[1].parse().unwrap();
    let ub: f64 = fields[4].parse().unwrap();
    assert!((lb - ub).abs() < 1e-12);
    assert_eq!(fields[5], "analytic");
}

#[test]
fn env_seed_equals_flag_seed() {
    let with_flag =
        run(&["--samples", "20000", "--seed", "77", "lattice", "moment", "D:3"]);
    assert!(with_flag.status.success());
    let with_env = Command::new(env!("CARGO_BIN_EXE_exrate"))
        .args(["--samples", "20000", "lattice", "moment", "D:3"])
        .env("EXRATE_SEED", "77")
        .output()
        .unwrap();
    assert!(with_env.status.success());
    assert_eq!(stdout(&with_flag), stdout(&with_env));
}

#[test]
fn json_format_round_trips() {
    let out = run(&[
        "--format", "json", "evaluate", "--quantizer", "uniform:0.125", "--source",
        "uniform:0,1",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in
        ["distortion", "distortion_err", "entropy_nats", "entropy_err", "r", "method", "n", "seed"]
    {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["method"], "exact_scalar");
    // log 8 nats.
    let h = v["entropy_nats"].as_f64().unwrap();
    assert!((h - 8f64.ln()).abs() < 1e-12);
}

#[test]
fn lattice_evaluate_requires_mc() {
    let out = run(&[
        "evaluate", "--quantizer", "lattice:Z:2@0.5", "--source", "gaussian:0,1^2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "--samples", "20000", "evaluate", "--quantizer", "lattice:Z:2@0.5", "--source",
        "gaussian:0,1^2", "--mode", "mc",
    ]);
    assert!(out.status.success());
}

#[test]
fn manifest_rerun_detects_tampering() {
    let dir = tmpdir("tamper");
    let out_path = dir.join("m.csv");
    let st = Command::new(env!("CARGO_BIN_EXE_exrate"))
        .args(["--samples", "20000", "--seed", "5", "lattice", "moment", "A:2", "--out"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(st.success());
    let mpath = dir.join("m.csv.manifest.json");
    let body = std::fs::read_to_string(&mpath).unwrap();
    let mut manifest: serde_json::Value = serde_json::from_str(&body).unwrap();
    manifest["payload_sha256"] = serde_json::Value::String("0".repeat(64));
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    let rerun = Command::new(env!("CARGO_BIN_EXE_exrate"))
        .arg("rerun")
        .arg("--manifest")
        .arg(&mpath)
        .output()
        .unwrap();
    assert_eq!(rerun.status.code(), Some(3), "checksum mismatch should exit 3");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn figure1_json_schema() {
    let out = run(&[
        "--samples", "20000", "--format", "json", "figure1", "--dims", "1..2", "--lattices", "Z",
    ]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        for key in [
            "d",
            "lb_bits_per_dim",
            "zador_ub_bits_per_dim",
            "lattice",
            "lattice_ub_bits_per_dim",
            "moment_source",
            "moment_std_err",
        ] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn moment_z3_matches_closed_form() {
    let out = run(&["--samples", "200000", "--seed", "6", "lattice", "moment", "Z:3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let per_dim: f64 = fields[4].parse().unwrap();
    let se: f64 = fields[5].parse().unwrap();
    assert!((per_dim - 1.0 / 12.0).abs() <= 3.0 * se / 3.0, "per_dim_G {per_dim} ± {se}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["--samples", "30000", "--seed", "123", "lattice", "moment", "E8"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
