use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HEMI: &str = r#"{"family":"round_cap","n":2,"rho0":1,"cap_fraction":1}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_heatbound"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--quiet")
        .env("HEATBOUND_THREADS", "1")
        .output()
        .unwrap()
}

fn small(extra: &str) -> String {
    format!(r#"{{"model":{HEMI},"solver":{{"mesh_points":400,"l_max":10,"modes_per_l":10}}{extra}}}"#)
}

fn data_lines(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bounds_row_at_unit_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &small(r#","grids":{"t":{"values":[1.0]}},"output":{"precision":6}"#),
        &["bounds"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/bounds.csv")).unwrap();
    let row = &data_lines(&text)[0];
    for expected in ["0.109029", "0.327087", "0.685049", "2.05515", "0.654747"] {
        assert!(row.iter().any(|c| c == expected), "{expected} missing from {row:?}");
    }
    assert!(text.contains("# volume_ratio=1.50000"));
    let eigen = fs::read_to_string(dir.path().join("out/eigen_bounds.csv")).unwrap();
    let rows = data_lines(&eigen);
    assert_eq!(rows[1][1], "0.507642");
    assert_eq!(rows[12][2], "");
    assert_eq!(rows[13][2], "1.26926");
}

#[test]
fn spectrum_lists_multiplicities() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &small(""), &["spectrum"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert!(text.starts_with("# n=2\n"));
    assert!(text.contains("# config={\"model\""));
    let rows = data_lines(&text);
    let expected = [0.0, 2.0, 2.0, 6.0, 6.0, 6.0, 12.0, 12.0, 12.0, 12.0];
    for (row, want) in rows.iter().zip(expected) {
        let got: f64 = row[3].parse().unwrap();
        assert!((got - want).abs() <= 1e-4 * want.max(1.0), "{got} vs {want}");
    }
    // every cell of a real-valued column has 9 significant digits
    assert_eq!(rows[1][3].replace('.', "").trim_start_matches('0').len(), 9);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(r#","grids":{"t":{"count":4},"k_max":20}"#);
    let names = ["trace.csv", "report.json", "report.csv"];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        assert!(run(dir.path(), &config, &["trace"]).status.success());
        assert!(run(dir.path(), &config, &["verify", "--checks", "C4,C7,C8"])
            .status
            .success());
        let files: Vec<Vec<u8>> = names
            .iter()
            .map(|n| fs::read(dir.path().join("out").join(n)).unwrap())
            .collect();
        snapshots.push(files);
    }
    for (i, name) in names.iter().enumerate() {
        assert!(snapshots[0][i] == snapshots[1][i], "{name} differs");
    }
    assert!(dir.path().join("out/run_meta.json").exists());
}

#[test]
fn check_filter_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &small(r#","output":{"format":"json"}"#),
        &["verify", "--checks", "C9"],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    assert!(results.iter().all(|r| r["check_id"] == "C9"));
    assert_eq!(report["verdict"], "pass");

    let out = run(dir.path(), &small(r#","output":{"format":"json"}"#), &["bounds"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/bounds.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["config"]["output"]["format"], "json");
    assert!(doc["rows"][0]["liyau_a"].is_number());
}

#[test]
fn default_hemisphere_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &format!(r#"{{"model":{HEMI}}}"#), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    for agg in report["aggregates"].as_array().unwrap() {
        assert_eq!(agg["failed"], 0, "{agg}");
    }
}

#[test]
fn report_writes_summary_and_plot_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &small(r#","grids":{"t":{"count":3},"r_count":3,"k_max":10}"#),
        &["report"],
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("verdict: pass"));
    let curves = fs::read_to_string(dir.path().join("out/curves.dat")).unwrap();
    let first = curves.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(first.split(' ').count(), 8);
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let nonconvex = r#"{"model":{"family":"round_cap","n":2,"rho0":1,"cap_fraction":1.2}}"#;
    let out = run(dir.path(), nonconvex, &["verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("convex"));

    let out = run(dir.path(), &format!(r#"{{"model":{HEMI},"mesh":3}}"#), &["spectrum"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh"));

    let out = run(dir.path(), "{not json", &["spectrum"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &small(""), &["verify", "--checks", "C1,C99"]);
    assert_eq!(out.status.code(), Some(2));

    let starved = format!(r#"{{"model":{HEMI},"solver":{{"mesh_points":100,"l_max":0,"modes_per_l":2}}}}"#);
    let out = run(dir.path(), &starved, &["spectrum"]);
    assert_eq!(out.status.code(), Some(3));
}
