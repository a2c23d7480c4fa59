use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ivkit::diagnostics::first_stage_f;
use ivkit::report::{
    AR_HEADER, DIAGNOSTICS_HEADER, ESTIMATES_HEADER, MC_SUMMARY_HEADER, SPECIFICATION_HEADER,
    SWEEP_HEADER,
};
use ivkit::simulation::seeded_rng;
use ivkit::IvDataset;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

fn ivkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn header_of(text: &str) -> &str {
    text.lines().next().unwrap_or("")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONTINUOUS_SCHEMA: &str = r#"{
  "columns": [
    {"name": "y", "role": "outcome"},
    {"name": "x", "role": "endogenous"},
    {"name": "z1", "role": "instrument_continuous"},
    {"name": "z2", "role": "instrument_continuous"},
    {"name": "z3", "role": "instrument_continuous"}
  ]
}"#;

/// Writes `y,x,z1,z2,z3` with first-stage coefficients `strength` on every instrument.
fn three_instrument_rows(seed: u64, n: usize, strength: f64) -> (Vec<[f64; 5]>, IvDataset) {
    let mut rng = seeded_rng(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let z: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        let x = strength * (z[0] + z[1] + z[2]) + v;
        let y = 1.0 + 0.5 * x + u + 0.5 * v;
        rows.push([y, x, z[0], z[1], z[2]]);
    }
    let y = DVector::from_iterator(n, rows.iter().map(|r| r[0]));
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { rows[i][1] });
    let z = DMatrix::from_fn(n, 4, |i, j| if j == 0 { 1.0 } else { rows[i][j + 1] });
    (rows, IvDataset::new(y, x, z, 1).unwrap())
}

fn write_rows(dir: &Path, rows: &[[f64; 5]]) -> (PathBuf, PathBuf) {
    let mut text = String::from("y,x,z1,z2,z3\n");
    for r in rows {
        writeln!(text, "{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4]).unwrap();
    }
    let data = dir.join("data.csv");
    let schema = dir.join("schema.json");
    std::fs::write(&data, text).unwrap();
    std::fs::write(&schema, CONTINUOUS_SCHEMA).unwrap();
    (data, schema)
}

#[test]
fn help_and_version_exit_zero() {
    let o = ivkit(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulate"));
    assert_eq!(ivkit(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ivkit(&[]).status.code(), Some(1));
    assert_eq!(ivkit(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ivkit(&["simulate", "--model", "9"]).status.code(), Some(1));
    assert_eq!(
        ivkit(&["simulate", "--model", "1", "--reps", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ivkit(&["simulate", "--model", "1", "--k", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ivkit(&["simulate", "--model", "1", "--estimators", "ols,foo"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn data_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let schema = dir.path().join("schema.json");
    std::fs::write(&schema, CONTINUOUS_SCHEMA).unwrap();
    let missing = dir.path().join("absent.csv");
    let o = ivkit(&[
        "estimate",
        "--input",
        path_str(&missing),
        "--schema",
        path_str(&schema),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,x,z1,z2,z3\n1,2,3,4,5\n1,two,3,4,5\n").unwrap();
    let o = ivkit(&[
        "diagnose",
        "--input",
        path_str(&bad),
        "--schema",
        path_str(&schema),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains('2') && err.contains('x'), "{err}");

    let o = ivkit(&[
        "simulate", "--k", "3", "--r2", "1.5", "--rho", "0.5", "--reps", "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let args = ["simulate", "--model", "1", "--reps", "100", "--seed", "7"];
    let a = ivkit(&args);
    let b = ivkit(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(header_of(&text), MC_SUMMARY_HEADER.join(","));
    assert_eq!(text.lines().count(), 5);
    let other = ivkit(&["simulate", "--model", "1", "--reps", "100", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn golden_headers() {
    let o = ivkit(&[
        "sweep", "--axis", "rho", "--values", "0,0.5", "--sizes", "25", "--reps", "20",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(header_of(&text), SWEEP_HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + 2 * 4);

    let dir = TempDir::new().unwrap();
    let (rows, _) = three_instrument_rows(3, 200, 0.3);
    let (data, schema) = write_rows(dir.path(), &rows);
    let io = ["--input", path_str(&data), "--schema", path_str(&schema)];
    let run = |verb: &[&str]| {
        let mut args: Vec<&str> = verb.to_vec();
        args.extend_from_slice(&io);
        let o = ivkit(&args);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        stdout(&o)
    };
    assert_eq!(
        header_of(&run(&["estimate"])),
        SPECIFICATION_HEADER.join(",")
    );
    assert_eq!(
        header_of(&run(&["estimate", "--all-terms"])),
        ESTIMATES_HEADER.join(",")
    );
    assert_eq!(header_of(&run(&["diagnose"])), DIAGNOSTICS_HEADER.join(","));
    assert_eq!(header_of(&run(&["ar-ci"])), AR_HEADER.join(","));

    let json: serde_json::Value =
        serde_json::from_str(&run(&["diagnose", "--format", "json"])).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["kind"], "diagnostics");
}

#[test]
fn instrument_equal_to_regressor_reproduces_ols() {
    let dir = TempDir::new().unwrap();
    let mut rng = seeded_rng(11);
    let mut text = String::from("y,x,z\n");
    for _ in 0..100 {
        let x: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        writeln!(text, "{},{},{}", 2.0 - x + e, x, x).unwrap();
    }
    let data = dir.path().join("toy.csv");
    let schema = dir.path().join("toy.json");
    std::fs::write(&data, text).unwrap();
    std::fs::write(
        &schema,
        r#"{"columns": [
            {"name": "y", "role": "outcome"},
            {"name": "x", "role": "endogenous"},
            {"name": "z", "role": "instrument_continuous"}
        ]}"#,
    )
    .unwrap();
    let o = ivkit(&[
        "estimate",
        "--input",
        path_str(&data),
        "--schema",
        path_str(&schema),
        "--estimators",
        "ols,2sls",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], "OLS");
    assert_eq!(rows[1][2], "2SLS");
    assert_eq!(rows[0][3..5], rows[1][3..5]);
}

#[test]
fn diagnose_uses_table_threshold_for_three_instruments() {
    // Tune the instrument strength so the first-stage F sits between the
    // table value for three instruments (9.08) and the rule of thumb (10).
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut found = None;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (rows, d) = three_instrument_rows(42, 400, mid);
        let f = first_stage_f(&d).unwrap().f_stat;
        if (9.3..9.7).contains(&f) {
            found = Some((rows, f));
            break;
        }
        if f < 9.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rows, f) = found.expect("bisection reaches F near 9.5");
    let dir = TempDir::new().unwrap();
    let (data, schema) = write_rows(dir.path(), &rows);
    let o = ivkit(&[
        "diagnose",
        "--input",
        path_str(&data),
        "--schema",
        path_str(&schema),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let header: Vec<&str> = header_of(&text).split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let field = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!((field("f_stat").parse::<f64>().unwrap() - f).abs() < 1e-4 * f);
    assert_eq!(field("verdict"), "strong");
    assert_eq!(field("threshold").parse::<f64>().unwrap(), 9.08);
    assert_eq!(field("threshold_source"), "critical_value_table");
    assert_eq!(field("table_k_excluded"), "3");
}

#[test]
fn flags_override_config_file_over_defaults() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("ivkit.toml");
    std::fs::write(
        &config,
        "seed = 7\nreps = 100\nformat = \"json\"\nestimators = \"ols,2sls\"\n",
    )
    .unwrap();
    let cfg = path_str(&config);

    let from_file = ivkit(&["simulate", "--model", "1", "--config", cfg]);
    assert_eq!(from_file.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    let summary = &json["data"][0]["summary"];
    assert_eq!(summary["master_seed"], 7);
    assert_eq!(summary["reps"], 100);
    assert_eq!(summary["estimators"].as_array().unwrap().len(), 2);

    let explicit = ivkit(&[
        "simulate",
        "--model",
        "1",
        "--reps",
        "100",
        "--seed",
        "7",
        "--estimators",
        "ols,2sls",
    ]);
    let overridden = ivkit(&[
        "simulate", "--model", "1", "--config", cfg, "--format", "csv",
    ]);
    assert_eq!(explicit.stdout, overridden.stdout);

    let seed_flag = ivkit(&[
        "simulate", "--model", "1", "--config", cfg, "--seed", "8", "--format", "csv",
    ]);
    let direct = ivkit(&[
        "simulate",
        "--model",
        "1",
        "--reps",
        "100",
        "--seed",
        "8",
        "--estimators",
        "ols,2sls",
    ]);
    assert_eq!(seed_flag.stdout, direct.stdout);

    std::fs::write(&config, "sede = 7\n").unwrap();
    assert_eq!(
        ivkit(&["simulate", "--model", "1", "--config", cfg])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn output_flag_and_draws_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("summary.csv");
    let draws = dir.path().join("draws.csv");
    let o = ivkit(&[
        "simulate",
        "--model",
        "3",
        "--reps",
        "50",
        "--output",
        path_str(&out),
        "--draws",
        path_str(&draws),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let summary = std::fs::read_to_string(&out).unwrap();
    assert_eq!(summary.lines().count(), 5);
    let draws = std::fs::read_to_string(&draws).unwrap();
    assert_eq!(draws.lines().count(), 1 + 50 * 4);
}
