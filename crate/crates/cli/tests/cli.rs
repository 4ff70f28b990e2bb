//! End-to-end tests of the compiled binary: exit codes, determinism, and
//! the generator → config → pipeline round trips.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypdecay"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn wave_config(dir: &Path, delta: f64, mu: f64, points: usize, samples: usize) -> String {
    let path = dir.join("config.json");
    write(
        &path,
        &format!(
            r#"{{
  "schema_version": 1,
  "operator": {{"source": "wave", "n": 1, "delta": {delta}, "c2": 1.0, "mu": {mu}}},
  "grid": {{"extent": 7.0, "points_per_axis": {points}}},
  "data": {{"profile": {{"kind": "gaussian", "width": 1.0}}, "slot": 1}},
  "time_window": {{"t_max": 200.0, "samples": {samples}}}
}}"#
        ),
    );
    path.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    write(&path, "{\"schema_version\": 1,");
    let out = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Structurally valid JSON with an invalid field also maps to 2.
    write(&path, r#"{"schema_version": 99}"#);
    let out = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_configs_give_byte_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = wave_config(tmp.path(), 1.0, 0.0, 129, 13);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let res = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    }
    let a = std::fs::read(out_a.join("report.json")).unwrap();
    let b = std::fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(a, b, "report.json must not depend on run identity");
    let a_csv = std::fs::read(out_a.join("series_linf_r0_a0.csv")).unwrap();
    let b_csv = std::fs::read(out_b.join("series_linf_r0_a0.csv")).unwrap();
    assert_eq!(a_csv, b_csv);
}

#[test]
fn dissipative_wave_analyze_reports_the_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = wave_config(tmp.path(), 1.0, 0.0, 257, 13);
    let out = tmp.path().join("out");
    let res = run(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out);
    assert!(r.get("verification").is_none(), "analyze emits no verification rows");
    let rows = r["per_pq"].as_array().unwrap();
    let linf = rows.iter().find(|row| row["q"] == "inf").unwrap();
    let power = linf["power"].as_f64().unwrap();
    assert!((power + 0.5).abs() < 0.1, "predicted sup-norm power {power}");
    assert!(out.join("roots.csv").exists());
    assert!(!out.join("series_linf_r0_a0.csv").exists());
}

#[test]
fn symbol_json_reemission_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("grad");
    let res = run(&["grad", "--n", "1", "--truncation", "2", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.join("symbol.json")).unwrap();
    let sym = hypdecay::symbol::OperatorSymbol::from_json_str(&text).unwrap();
    assert_eq!(sym.to_json_string(), text, "parse -> re-emit must be a fixed point");
    assert_eq!(sym.m, 3, "three moments for (n, N) = (1, 2)");

    // The emitted config immediately feeds analyze.
    let res = run(&[
        "analyze",
        "--config",
        out.join("config.json").to_str().unwrap(),
        "--out",
        out.join("run").to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out.join("run"));
    assert_eq!(r["classification"]["stability"]["class"], "stable");
}

#[test]
fn grad_2_1_matrix_dump_matches_the_construction() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("grad21");
    let res = run(&["grad", "--n", "2", "--truncation", "1", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let dump = std::fs::read_to_string(out.join("matrices.txt")).unwrap();
    assert!(dump.contains("moments = 3"), "{dump}");
    assert!(dump.contains("B = diag(0, 1, 1)"), "{dump}");
    assert!(dump.contains("A_1") && dump.contains("A_2"));
}

#[test]
fn klein_gordon_dispersive_rows_are_not_applicable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = wave_config(tmp.path(), 0.0, 1.0, 129, 13);
    let out = tmp.path().join("out");
    let res = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out);
    assert_eq!(r["classification"]["stability"]["class"], "on_axis_roots");
    let rows = r["verification"].as_array().unwrap();
    let linf = rows.iter().find(|row| row["q"] == "inf").unwrap();
    assert_eq!(linf["verdict"], "not_applicable");
    let l2 = rows.iter().find(|row| row["q"] == "2").unwrap();
    assert_eq!(l2["verdict"], "pass", "L^2 conservation is measurable: {l2}");
}

#[test]
fn unstable_operator_verifies_with_notice_and_exit_0() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = wave_config(tmp.path(), -0.5, 0.0, 65, 13);
    let out = tmp.path().join("out");
    let res = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out);
    assert_eq!(r["classification"]["stability"]["class"], "unstable");
    assert_eq!(r["classification"]["prediction"]["applicable"], false);
    assert_eq!(r["verification"].as_array().unwrap().len(), 0);
    let warnings = r["warnings"].as_array().unwrap();
    assert!(
        warnings.iter().any(|w| w.as_str().unwrap().contains("verification skipped")),
        "{warnings:?}"
    );
}

#[test]
fn pq_flag_overrides_and_rejects_non_dual_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    // 129 points: coarser grids cannot resolve enough contact shells and
    // the classifier honestly reports inconclusive (exit 4).
    let cfg = wave_config(tmp.path(), 1.0, 0.0, 129, 13);
    let out = tmp.path().join("out");
    let res = run(&[
        "analyze", "--config", &cfg, "--out", out.to_str().unwrap(), "--pq", "2,2",
    ]);
    assert!(res.status.success());
    let r = report(&out);
    let rows = r["per_pq"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["q"], "2");

    let res = run(&["analyze", "--config", &cfg, "--pq", "1,3"]);
    assert_eq!(res.status.code(), Some(2), "non-dual pair must be rejected");
}

#[test]
fn solve_writes_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = wave_config(tmp.path(), 0.0, 0.0, 257, 13);
    let out = tmp.path().join("out");
    let res = run(&[
        "solve", "--config", &cfg, "--out", out.to_str().unwrap(), "--times", "1,5",
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("solution_00.csv").exists());
    assert!(out.join("solution_01.csv").exists());
    assert!(out.join("chart_solution.svg").exists());
    let csv = std::fs::read_to_string(out.join("solution_00.csv")).unwrap();
    assert!(csv.starts_with("x,magnitude\n"));
    assert_eq!(csv.lines().count(), 258, "257 samples plus header");
}
