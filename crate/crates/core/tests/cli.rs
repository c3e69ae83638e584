//! End-to-end runs of the `setsa` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use setsa::study::StudyReport;

fn setsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setsa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const TOY: &str =
    "model = \"toy\"\nn = 40\nm = 50\nreplicates = 4\npermutations = 39\nmaster_seed = 5\n";

#[test]
fn sa_outputs_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toy.toml", TOY);
    let mut csvs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let o = setsa(&[
            "sa",
            "--config",
            &cfg,
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(String::from_utf8_lossy(&o.stdout).contains("ranking by median"));
        csvs.push(fs::read(out.join("results.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);

    let text = String::from_utf8(csvs[0].clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "replicate,input,first_order,total_order,p_value,label"
    );
    assert_eq!(lines.len(), 1 + 4 * 3);
    // 17 significant digits, round-trip exact.
    let field = lines[1].split(',').nth(2).unwrap();
    let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn json_report_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toy.toml", TOY);
    let out = dir.path().join("out");
    let o = setsa(&[
        "sa",
        "--config",
        &cfg,
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let report = StudyReport::from_json(&text).unwrap();
    assert_eq!(report.master_seed, 11);
    assert_eq!(report.to_json().unwrap(), text);
    assert!(report.replicates.iter().all(|r| r.oracle_calls == 40 * 50));

    // CSV values match the report bit for bit.
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let first = report.replicates[0].result().unwrap();
    assert_eq!(row[2].parse::<f64>().unwrap(), first.first_order[0]);
    assert_eq!(row[4].parse::<f64>().unwrap(), first.p_values[0]);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_config(
        dir.path(),
        "typo.toml",
        "model = \"toy\"\nn = 40\nm = 50\npermutattions = 99\n",
    );
    let o = setsa(&["sa", "--config", &typo]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("permutattions"));

    let bad_alpha = write_config(
        dir.path(),
        "alpha.toml",
        "model = \"toy\"\nn = 40\nm = 50\nalpha = 0\n",
    );
    assert_eq!(
        setsa(&["sa", "--config", &bad_alpha]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        setsa(&["sa", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(setsa(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(setsa(&["sa"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toy.toml", TOY);
    // A regular file where the output directory should go.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let o = setsa(&[
        "sa",
        "--config",
        &cfg,
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn risk_writes_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "risk.toml",
        "model = \"toy\"\nn = 10\nm = 10\n[risk]\nn_ref = 1000\nm_ref = 200\ngrid = [10, 20]\nreplicates = 20\n",
    );
    let out = dir.path().join("risk");
    let o = setsa(&[
        "risk",
        "--config",
        &cfg,
        "--estimator",
        "shared",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("risk.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "n,m,estimator,empirical_risk,bound_shared,bound_independent"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("10,10,shared,"));

    let few = setsa(&[
        "risk",
        "--config",
        &cfg,
        "--replicates",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(few.status.code(), Some(2));
}

#[test]
fn validate_passes() {
    let o = setsa(&["validate", "--seed", "2"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            setsa::study::StudyConfig::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
