//! End-to-end tests of the `zigzag` binary: file outputs, round-trip
//! formatting, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use zigzag_core::hill::free_f;

fn zigzag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zigzag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn discriminant_free_matches_oracle_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "potential": {"type": "piecewise", "segments": [[1.0, 0.0]]},
            "n": 3, "b": 0.0,
            "lambda_min": -5.0, "lambda_max": 40.0, "lambda_points": 101,
            "channels": [1, 3]
        }"#,
    );
    let out = zigzag(&[
        "discriminant",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&dir.path().join("discriminant.csv"));
    assert_eq!(&header[..2], &["lambda".to_string(), "F".to_string()]);
    assert!(header.contains(&"T_1".to_string()));
    assert!(header.contains(&"ReFp_0".to_string()), "channel 3 ≡ 0: {header:?}");
    assert_eq!(rows.len(), 101);
    for row in &rows {
        let lam: f64 = row[0].parse().unwrap();
        let f: f64 = row[1].parse().unwrap();
        assert!((f - free_f(lam)).abs() < 1e-12);
        // 17-significant-digit output reparses bit-exactly
        for cell in row {
            let v: f64 = cell.parse().unwrap();
            let again: f64 = format!("{v:.16e}").parse().unwrap();
            assert_eq!(v.to_bits(), again.to_bits());
        }
    }
}

#[test]
fn discriminant_flux_changes_only_channel_columns() {
    let dir = tempfile::tempdir().unwrap();
    let run = |a: f64, out: &str| {
        let cfg = write_config(
            dir.path(),
            &format!("c_{out}.json"),
            &format!(
                r#"{{
                    "potential": {{"type": "piecewise", "segments": [[1.0, 0.0]]}},
                    "n": 3, "a": {a},
                    "lambda_min": 0.0, "lambda_max": 20.0, "lambda_points": 50,
                    "channels": [3]
                }}"#
            ),
        );
        let sub = dir.path().join(out);
        let res = zigzag(&["discriminant", "--config", &cfg, "--out", sub.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        read_csv(&sub.join("discriminant.csv"))
    };
    let (_, rows_a) = run(std::f64::consts::PI / 6.0, "a6");
    let (_, rows_b) = run(std::f64::consts::PI / 3.0, "a3");
    let mut channel_differs = false;
    for (ra, rb) in rows_a.iter().zip(&rows_b) {
        assert_eq!(ra[0], rb[0], "lambda grid must match");
        assert_eq!(ra[1], rb[1], "F is flux-independent");
        channel_differs |= ra[2..] != rb[2..];
    }
    assert!(channel_differs, "channel columns must reflect the flux");
}

#[test]
fn spectrum_free_n1_bands_and_gap_complement() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "potential": {"type": "piecewise", "segments": [[1.0, 0.0]]},
            "n": 1, "b": 0.0,
            "lambda_min": -2.0, "lambda_max": 30.0
        }"#,
    );
    let out = zigzag(&["spectrum", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (_, rows) = read_csv(&dir.path().join("bands.csv"));
    let lo: f64 = rows[0][4].parse().unwrap();
    let hi: f64 = rows[0][5].parse().unwrap();
    assert!(lo.abs() < 1e-9, "first band starts at 0, got {lo}");
    assert!((hi - 1.5152610871399395).abs() < 1e-8);

    // union bands and gaps tile the covered range exactly
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let bands = report["union_bands"].as_array().unwrap();
    let gaps = report["gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), bands.len() - 1);
    for (i, gap) in gaps.iter().enumerate() {
        assert_eq!(gap["lo"], bands[i]["hi"]);
        assert_eq!(gap["hi"], bands[i + 1]["lo"]);
    }
}

#[test]
fn spectrum_singular_field_emits_flat_rows() {
    let dir = tempfile::tempdir().unwrap();
    // B = 4π/9 on N = 3 makes channel 1 singular
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "potential": {"type": "piecewise", "segments": [[1.0, 0.0]]},
            "n": 3, "b": 1.3962634015954636,
            "lambda_min": -2.0, "lambda_max": 25.0
        }"#,
    );
    let out = zigzag(&["spectrum", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (_, band_rows) = read_csv(&dir.path().join("bands.csv"));
    let flat_band_rows: Vec<_> = band_rows
        .iter()
        .filter(|r| r[2] == "1" && r[6] == "flat")
        .collect();
    assert!(!flat_band_rows.is_empty(), "channel 1 rows must have kind=flat");
    let lam: f64 = flat_band_rows[0][4].parse().unwrap();
    assert!((lam - 1.5152610871399395).abs() < 1e-8);

    let (_, flat_rows) = read_csv(&dir.path().join("flat.csv"));
    assert!(flat_rows.iter().any(|r| r[2] == "1" && r[3] == "antiperiodic"));
    assert!(flat_rows.iter().any(|r| r[2] == "all" && r[3] == "dirichlet"));
}

#[test]
fn sweep_writes_all_grid_points_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "potential": {"type": "piecewise", "segments": [[1.0, 0.0]]},
            "n": 3, "b": 0.0,
            "lambda_min": -2.0, "lambda_max": 20.0
        }"#,
    );
    let out = zigzag(&[
        "sweep",
        "--config",
        &cfg,
        "--b",
        "0.0:1.0:3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("sweep_bands.csv"));
    let mut b_values: Vec<String> = rows.iter().map(|r| r[0].clone()).collect();
    b_values.dedup();
    assert_eq!(b_values.len(), 3);
    let traces = fs::read_to_string(dir.path().join("traces.dat")).unwrap();
    assert!(traces.contains("# band k="));
}

#[test]
fn eigenfunction_export_has_64_points_per_edge() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "potential": {"type": "piecewise", "segments": [[1.0, 0.0]]},
            "n": 3, "b": 0.0,
            "lambda_min": 0.0, "lambda_max": 30.0,
            "eigenfunction": {"kind": "dirichlet", "channel": 1, "index": 1}
        }"#,
    );
    let out = zigzag(&["eigenfunction", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("eigenfunction.csv"));
    assert_eq!(header, ["n", "j", "t", "re", "im"]);
    // support spans cells {−1, 0}: 6 edges × 64 samples
    assert_eq!(rows.len(), 2 * 3 * 64);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap().is_finite()));
    // the reported residual is printed to stderr
    assert!(String::from_utf8_lossy(&out.stderr).contains("Kirchhoff residual"));
}

#[test]
fn verify_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = zigzag(&["verify", "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout:\n{stdout}");
    assert_eq!(stdout.matches("PASS").count(), 12, "stdout:\n{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert_eq!(report["seed"], serde_json::json!(1));
}

#[test]
fn verify_fails_with_corrupted_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"tolerances": {"tol_f": 1e-2}}"#,
    );
    let out = zigzag(&["verify", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "corrupted tol_f must fail verification");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL 11"), "{stdout}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // both b and a
    let cfg = write_config(
        dir.path(),
        "both.json",
        r#"{"n": 3, "b": 0.0, "a": 0.1, "lambda_max": 10.0}"#,
    );
    let out = zigzag(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one"));

    // neither b nor a
    let cfg = write_config(dir.path(), "neither.json", r#"{"n": 3, "lambda_max": 10.0}"#);
    let out = zigzag(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));

    // invalid potential (widths do not sum to 1)
    let cfg = write_config(
        dir.path(),
        "badq.json",
        r#"{"potential": {"type": "piecewise", "segments": [[0.5, 1.0]]}, "n": 1, "b": 0.0, "lambda_max": 10.0}"#,
    );
    let out = zigzag(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));

    // negative lambda_max
    let cfg = write_config(dir.path(), "badl.json", r#"{"n": 1, "b": 0.0, "lambda_max": -3.0}"#);
    let out = zigzag(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));

    // malformed sweep flag
    let cfg = write_config(dir.path(), "s.json", r#"{"n": 1, "b": 0.0, "lambda_max": 10.0}"#);
    let out = zigzag(&["sweep", "--config", &cfg, "--b", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}
