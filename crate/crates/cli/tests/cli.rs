//! End-to-end CLI tests: subcommand behavior, exit codes, report formats,
//! config precedence, determinism, and schema conformance.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdc-cascade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn json_report(args: &[&str]) -> (Value, Output) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let output = run(&full);
    let value: Value = serde_json::from_str(&stdout(&output)).expect("valid report JSON");
    (value, output)
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// Minimal JSON-Schema interpreter covering the subset used by
/// schema/report-v1.json: type, const, enum, required, properties, items,
/// additionalProperties.
fn validate(schema: &Value, value: &Value) -> Result<(), String> {
    if let Some(expected) = schema.get("const") {
        if value != expected {
            return Err(format!("expected const {expected}, got {value}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{value} not in enum {options:?}"));
        }
    }
    if let Some(kind) = schema.get("type").and_then(Value::as_str) {
        let ok = match kind {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
            "number" => value.is_number(),
            "boolean" => value.is_boolean(),
            other => return Err(format!("unsupported schema type {other}")),
        };
        if !ok {
            return Err(format!("expected {kind}, got {value}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required {
            let key = key.as_str().expect("required key");
            if value.get(key).is_none() {
                return Err(format!("missing required field {key}"));
            }
        }
    }
    if let Some(properties) = schema.get("properties").and_then(Value::as_object) {
        if let Some(object) = value.as_object() {
            for (key, val) in object {
                match properties.get(key) {
                    Some(subschema) => validate(subschema, val)?,
                    None => {
                        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                            return Err(format!("unexpected field {key}"));
                        }
                    }
                }
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(array) = value.as_array() {
            for item in array {
                validate(items, item)?;
            }
        }
    }
    Ok(())
}

fn shipped_schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report-v1.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("schema file"))
        .expect("schema parses")
}

#[test]
fn verify_three_photon_spatial_passes() {
    let output = run(&["verify", "--scheme", "pol-spatial", "--m", "3"]);
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    assert!(text.contains("[PASS] state-match"));
    assert!(text.contains("|H⟩_a_2|V⟩_d_1|H⟩_d_2"));
}

#[test]
fn verify_time_bin_four_photon_passes() {
    let output = run(&["verify", "--scheme", "pol-time-bin", "--m", "4"]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("match: true"));
}

#[test]
fn verify_rejects_single_photon() {
    let output = run(&["verify", "--scheme", "pol-spatial", "--m", "1"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn unknown_flag_is_invalid_input() {
    let output = run(&["rates", "--definitely-not-a-flag", "1"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn reports_conform_to_shipped_schema() {
    let schema = shipped_schema();
    let commands: Vec<Vec<&str>> = vec![
        vec!["verify", "--scheme", "pol-spatial", "--m", "3"],
        vec!["rates", "--m", "3", "--mu", "1"],
        vec!["pairs", "--m", "3", "--mu", "1", "--r", "2"],
        vec!["sweep"],
        vec!["oracle", "--n", "2", "--m", "3", "--ps", "0.5"],
        vec![
            "montecarlo", "--m", "3", "--mu", "1", "--ps", "0.05", "--rep-hz", "1", "--trials",
            "20000", "--seed", "0",
        ],
    ];
    for args in commands {
        let (report, _) = json_report(&args);
        validate(&schema, &report).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        assert_eq!(report["schemaVersion"], 1);
    }
}

#[test]
fn rates_reproduce_reference_row() {
    let (report, output) = json_report(&["rates", "--m", "3", "--mu", "1"]);
    assert_eq!(exit_code(&output), 0);
    let n_tot = report["results"]["nTot"].as_f64().unwrap();
    assert!((n_tot - 5.78e-2).abs() / 5.78e-2 < 0.01);
    assert!(report["results"]["notes"].as_array().unwrap().is_empty());
}

#[test]
fn rates_m4_carries_discrepancy_note() {
    let (report, output) = json_report(&["rates", "--m", "4", "--mu", "1"]);
    assert_eq!(exit_code(&output), 0);
    let notes = report["results"]["notes"].as_array().unwrap();
    assert_eq!(notes.len(), 1);
    assert!(notes[0].as_str().unwrap().contains("beyond rounding"));
    let diff = report["results"]["reference"]["relativeDiff"].as_f64().unwrap();
    assert!(diff > 0.005 && diff < 0.02);
}

#[test]
fn pairs_highlight_and_ratio() {
    let (report, _) = json_report(&["pairs", "--m", "3", "--mu", "1", "--r", "2"]);
    let highlight = &report["results"]["highlight"];
    assert_eq!(highlight["r"], 2);
    let p2 = highlight["probability"].as_f64().unwrap();
    let p1 = report["results"]["entries"][1]["probability"].as_f64().unwrap();
    // Pr(3,2)/Pr(3,1) ≈ 2.888e−11 at the default operating point.
    assert!((p2 / p1 - 2.888e-11).abs() / 2.888e-11 < 0.01);
}

#[test]
fn sweep_default_grid() {
    let (report, output) = json_report(&["sweep"]);
    assert_eq!(exit_code(&output), 0);
    let rows = report["results"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 24);
    // μ outer, m inner ordering; the (1, 3) row sits at index 6.
    assert_eq!(rows[6]["mu"], 1.0);
    assert_eq!(rows[6]["m"], 3);
    let log10 = rows[6]["log10NTot"].as_f64().unwrap();
    assert!((log10 - (-1.238)).abs() < 1e-3);
    for check in report["checks"].as_array().unwrap() {
        assert_eq!(check["passed"], true);
    }
}

#[test]
fn sweep_csv_has_header_and_24_rows() {
    let output = run(&["sweep", "--format", "csv"]);
    let text = stdout(&output);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "mu,m,n_tot,log10_n_tot");
    assert_eq!(lines.len(), 25);
}

#[test]
fn oracle_matches_closed_form() {
    let (report, output) = json_report(&["oracle", "--n", "3", "--m", "3", "--ps", "0.5"]);
    assert_eq!(exit_code(&output), 0);
    let closed = report["results"]["closedForm"].as_f64().unwrap();
    assert!((closed - 0.578125).abs() < 1e-15);
    assert_eq!(report["results"]["absDiff"].as_f64().unwrap(), 0.0);
}

#[test]
fn oracle_bound_is_invalid_input() {
    let output = run(&["oracle", "--n", "20", "--m", "3", "--ps", "0.5"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn montecarlo_is_byte_identical_per_seed() {
    let args = [
        "montecarlo", "--m", "3", "--mu", "1", "--ps", "0.05", "--rep-hz", "1", "--trials",
        "100000", "--seed", "7", "--format", "json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(stdout(&first), stdout(&second));
    assert!(!stdout(&first).is_empty());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = std::env::temp_dir().join("spdc-cascade-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, r#"{ "m": 4, "mu": 2.0, "rMax": 3 }"#).unwrap();

    let (report, _) = json_report(&[
        "rates",
        "--config",
        config_path.to_str().unwrap(),
        "--mu",
        "1",
    ]);
    // m and rMax come from the file, mu from the flag.
    assert_eq!(report["inputs"]["m"], 4);
    assert_eq!(report["inputs"]["rMax"], 3);
    assert_eq!(report["inputs"]["mu"], 1.0);
}

#[test]
fn out_flag_writes_report_to_file() {
    let dir = std::env::temp_dir().join("spdc-cascade-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let out_path = dir.join("report.json");
    let output = run(&[
        "rates", "--m", "3", "--mu", "1", "--format", "json", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).is_empty());
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["command"], "rates");
}
