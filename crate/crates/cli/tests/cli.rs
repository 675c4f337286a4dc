//! Black-box tests against the built binary: exit codes, output files, and
//! the JSON/CSV shapes downstream tooling parses.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetsaver"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Builds a scenario file in `dir` and returns its path.
fn gen_scenario(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join(format!("scenario_{seed}.json"));
    let out = run(&["gen", "--seed", &seed.to_string(), "--out", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "gen failed: {}", stderr(&out));
    path
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_scenario(dir.path(), 5);
    let b = dir.path().join("again.json");
    let out = run(&["gen", "--seed", "5", "--out", b.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same seed must reproduce the same scenario file"
    );

    let c = gen_scenario(dir.path(), 6);
    assert_ne!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&c).unwrap(),
        "different seeds must move the layout"
    );
}

#[test]
fn gen_rejects_missing_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--config",
        dir.path().join("nope.json").to_str().unwrap(),
        "--out",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "missing config is a usage error: {}", stderr(&out));
}

#[test]
fn solve_zero_demand_costs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 9);
    let result = dir.path().join("result.json");
    let out = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--demand",
        "0",
        "--out",
        result.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(json["feasible"], Value::Bool(true));
    assert_eq!(json["total_power_w"].as_f64().unwrap(), 0.0);
}

#[test]
fn solve_reports_infeasible_demand() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 9);
    let out = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--demand",
        "1e12",
    ]);
    assert_eq!(exit_code(&out), 3, "{}", stderr(&out));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["feasible"], Value::Bool(false));
}

#[test]
fn solve_rejects_unknown_pattern_spec() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 9);
    let out = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--patterns",
        "bogus",
    ]);
    assert_eq!(exit_code(&out), 2, "{}", stderr(&out));
}

/// Both engines must run end to end and produce demand-covering solutions;
/// numeric agreement between them is pinned down by the library gate.
#[test]
fn both_engines_serve_the_demand() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 11);
    for engine in ["cutplane", "direct"] {
        let out = run(&[
            "solve",
            "--scenario",
            scenario.to_str().unwrap(),
            "--demand",
            "1.5e6",
            "--engine",
            engine,
        ]);
        assert_eq!(exit_code(&out), 0, "{engine}: {}", stderr(&out));
        let json: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(json["feasible"], Value::Bool(true), "{engine} found it infeasible");
        let demands: Vec<f64> = json["demands"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let served: Vec<f64> = json["achieved_rates"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(demands.len(), served.len());
        for (k, (&d, &s)) in demands.iter().zip(&served).enumerate() {
            assert!(
                s >= d - 1e-6 * (1.0 + d),
                "{engine}: point {k} served {s} of {d} bit/s"
            );
        }
        assert!(json["total_power_w"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn solve_reuses_rate_cache() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 9);
    let cache = dir.path().join("rates.bin");
    let out = run(&[
        "rates",
        "--scenario",
        scenario.to_str().unwrap(),
        "--patterns",
        "reuse1",
        "--out",
        cache.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let stamp = std::fs::metadata(&cache).unwrap().modified().unwrap();

    let out = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--patterns",
        "reuse1",
        "--demand",
        "2e5",
        "--engine",
        "direct",
        "--cache",
        cache.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        std::fs::metadata(&cache).unwrap().modified().unwrap(),
        stamp,
        "a matching cache must be reused, not rewritten"
    );
}

#[test]
fn sweep_rejects_empty_demand_grid() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 9);
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"demands_bps": [], "schemes": ["reuse1"]}"#).unwrap();
    let out = run(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.path().join("sweep.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "{}", stderr(&out));
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 9);
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"demands_bps": [5e5, 1e6], "schemes": ["reuse1", {"proposed": "preselect"}]}"#,
    )
    .unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("demand,scheme,total_power_W,feasible,iterations,wall_ms"),
        "header must stay stable"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4, "2 demands x 2 schemes x 1 repetition:\n{csv}");
    for row in rows {
        assert_eq!(row.split(',').count(), 6, "malformed row {row:?}");
    }
}

#[test]
fn bench_emits_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 9);
    let csv_path = dir.path().join("bench.csv");
    let out = run(&[
        "bench",
        "--scenario",
        scenario.to_str().unwrap(),
        "--counts",
        "4,8",
        "--engine",
        "cutplane",
        "--demand",
        "2e5",
        "--seed",
        "11",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("I,engine,wall_ms,iterations"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2, "one row per pattern count:\n{csv}");
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 4, "malformed row {row:?}");
        assert_eq!(cells[1], "cutplane");
        assert!(cells[2].parse::<f64>().unwrap() > 0.0);
        assert!(cells[3].parse::<usize>().unwrap() > 0);
    }
}

#[test]
fn verify_passes_at_smoke_size() {
    let out = run(&[
        "verify",
        "--instances",
        "4",
        "--inner-instances",
        "20",
        "--seed",
        "7",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
}
