use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use brp_core::forest::Forest;
use serde_json::{json, Value};

fn brp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brp")).args(args).output().expect("spawn brp")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> String {
    write(dir, name, &serde_json::to_string_pretty(cfg).unwrap()).display().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "brp failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn tree_map(character: &Value) -> BTreeMap<String, f64> {
    character["trees"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["forest"].as_str().unwrap().to_string(), t["value"].as_f64().unwrap()))
        .collect()
}

/// `f_1 = e_1`, `f_2 = e_2` when `identity`, else the zero form.
fn constant_form(identity: bool) -> Value {
    let one = json!([{ "coeff": 1.0, "monomial": [0, 0] }]);
    let c = if identity { one } else { json!([]) };
    json!({ "d": 2, "e": 2, "components": [c.clone(), [], [], c] })
}

fn smooth_form() -> Value {
    json!({ "d": 2, "e": 1, "components": [
        [{ "coeff": 1.0, "monomial": [0, 0] }, { "coeff": 0.5, "monomial": [0, 1] }, { "coeff": -0.3333333333333333, "monomial": [2, 0] }],
        [{ "coeff": 0.5, "monomial": [1, 0] }, { "coeff": 0.25, "monomial": [1, 1] }]
    ]})
}

fn linear_config(steps: usize, form: Value) -> Value {
    json!({
        "schema_version": 1, "p": 1.5, "gamma": 2.0,
        "path": { "generator": { "kind": "linear", "velocity": [1.0, 0.0], "steps": steps } },
        "one_form": form
    })
}

#[test]
fn malformed_csv_row_exits_2_and_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "t,x1\n0,0\n0.5,0.1\n1,abc\n");
    let cfg = write_config(dir.path(), "c.json", &json!({ "schema_version": 1, "p": 1.5, "path": { "csv": "x.csv" } }));
    let out = brp(&["lift", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3"), "{err}");
}

#[test]
fn csv_with_repeated_time_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "t,x1\n0,0\n0,1\n");
    let cfg = write_config(dir.path(), "c.json", &json!({ "schema_version": 1, "p": 1.5, "path": { "csv": "x.csv" } }));
    let out = brp(&["lift", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn two_sample_increments_are_coordinate_differences() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "t,x1,x2\n0,0.5,-1\n1,2,0.25\n");
    let cfg = write_config(dir.path(), "c.json", &json!({ "schema_version": 1, "p": 2.5, "path": { "csv": "x.csv" } }));
    let report = stdout_json(&brp(&["lift", "--config", &cfg]));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["increments"], json!([[1.5, 1.25]]));
    let last = tree_map(&report["path"]["samples"][1]["value"]);
    // the path starts with a straight segment from the origin to the first sample
    assert_eq!(last["1"], 2.0);
    assert_eq!(last["2"], 0.25);
    let first_leg = 0.5 * -1.0 / 2.0;
    let second_leg = (0.5 + 1.5 / 2.0) * 1.25;
    assert!((last["2(1)"] - (first_leg + second_leg)).abs() <= 1e-15);
}

#[test]
fn monomial_lift_matches_golden() {
    let golden: Value = serde_json::from_str(include_str!("golden/monomial_lift.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({ "schema_version": 1, "p": golden["p"], "path": { "generator": { "kind": "monomial", "d": 2, "steps": golden["steps"] } } }),
    );
    let report = stdout_json(&brp(&["lift", "--config", &cfg]));
    let samples = report["path"]["samples"].as_array().unwrap();
    let expected = golden["samples"].as_array().unwrap();
    assert_eq!(samples.len(), expected.len());
    for (got, want) in samples.iter().zip(expected) {
        assert_eq!(got["t"], want["t"]);
        let got = tree_map(&got["value"]);
        let want: BTreeMap<String, f64> = want["trees"]
            .as_object()
            .unwrap()
            .iter()
            .map(|(k, v)| {
                let (n, d) = v.as_str().unwrap().split_once('/').unwrap_or((v.as_str().unwrap(), "1"));
                let key = Forest::parse(k).unwrap().encoding();
                (key, n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap())
            })
            .collect();
        assert_eq!(got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>());
        for (k, v) in &want {
            assert!((got[k] - v).abs() <= 1e-13, "{k}: {} vs {v}", got[k]);
        }
    }
}

#[test]
fn zero_form_integrates_to_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &linear_config(16, constant_form(false)));
    let report = stdout_json(&brp(&["integrate", "--config", &cfg]));
    assert!(tree_map(&report["integral"]).values().all(|&v| v == 0.0));
}

#[test]
fn linear_path_gives_half_on_the_cherry_tree() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = linear_config(32, constant_form(true));
    cfg["p"] = json!(2.0);
    cfg["gamma"] = json!(2.5);
    let cfg = write_config(dir.path(), "c.json", &cfg);
    let report = stdout_json(&brp(&["integrate", "--config", &cfg]));
    let y = tree_map(&report["integral"]);
    assert!((y["1(1)"] - 0.5).abs() <= 1e-6);
    assert!((y["1"] - 1.0).abs() <= 1e-12);
}

#[test]
fn integrate_report_validates_against_schema() {
    let schema: Value = serde_json::from_str(include_str!("../schema/integrate_report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "schema_version": 1, "p": 2.0, "gamma": 2.5, "interval": [0.25, 1.0],
        "path": { "generator": { "kind": "smooth_random", "d": 2, "modes": 2, "seed": 3, "steps": 256 } },
        "one_form": smooth_form(),
        "integrate": { "error_scales": [64, 32, 16] }
    });
    let cfg = write_config(dir.path(), "c.json", &cfg);
    let report = stdout_json(&brp(&["integrate", "--config", &cfg]));
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(report["interval"], json!([0.25, 1.0]));
    assert_eq!(report["error_table"].as_array().unwrap().len(), 3);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &linear_config(4, constant_form(true)));
    let target = dir.path().join("r.json");
    let out = brp(&["lift", "--config", &cfg, "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(report["command"], "lift");
}

#[test]
fn verify_algebra_passes_without_config() {
    let out = brp(&["verify", "--suite", "algebra", "--seed", "5"]);
    let report = stdout_json(&out);
    assert_eq!(report["passed"], true);
    assert_eq!(report["report"]["checks"].as_array().unwrap().len(), 9);
}

#[test]
fn verify_pi_on_ito_fixture_has_small_gap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "schema_version": 1, "p": 2.0, "gamma": 2.5,
        "path": { "generator": { "kind": "smooth_random", "d": 2, "modes": 2, "seed": 11, "steps": 1024 } },
        "lift": { "kind": "ito", "scale": 1.0 },
        "one_form": smooth_form()
    });
    let cfg = write_config(dir.path(), "c.json", &cfg);
    let report = stdout_json(&brp(&["verify", "--suite", "pi", "--config", &cfg]));
    let checks = report["report"]["checks"].as_array().unwrap();
    let gap = checks.iter().find(|c| c["name"] == "first_level_gap").unwrap();
    assert!(gap["measured"].as_f64().unwrap() <= 1e-4);
    assert_eq!(report["passed"], true);
}

#[test]
fn unknown_suite_exits_2() {
    let out = brp(&["verify", "--suite", "topology"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_gamma_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = linear_config(4, constant_form(true));
    cfg["gamma"] = json!(1.2);
    let cfg = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(brp(&["integrate", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn identical_inputs_have_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({ "schema_version": 1, "p": 2.5, "path": { "generator": { "kind": "zigzag", "d": 2, "teeth": 3, "amplitude": 0.5, "steps": 48 } } }),
    );
    let report = stdout_json(&brp(&["metrics", "--config", &cfg, "--config", &cfg]));
    assert_eq!(report["dp"], 0.0);
    assert_eq!(report["pvar1"], report["pvar2"]);
}

#[test]
fn monotone_path_has_p1_variation_equal_to_displacement() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "t,x1\n0,0.25\n0.1,0.5\n0.3,1.5\n0.7,1.75\n1,3\n");
    let cfg = write_config(dir.path(), "c.json", &json!({ "schema_version": 1, "p": 1.0, "path": { "csv": "x.csv" } }));
    let report = stdout_json(&brp(&["metrics", "--config", &cfg, "--config", &cfg]));
    assert!((report["pvar1"].as_f64().unwrap() - 2.75).abs() <= 1e-12);
}

#[test]
fn distance_grows_with_perturbation_size() {
    let dir = tempfile::tempdir().unwrap();
    let path = json!({ "generator": { "kind": "smooth_random", "d": 2, "modes": 2, "seed": 4, "steps": 128 } });
    let base = write_config(dir.path(), "base.json", &json!({ "schema_version": 1, "p": 2.5, "path": path }));
    let mut last = 0.0;
    for (k, scale) in [1e-3, 4e-3, 1.6e-2, 6.4e-2].into_iter().enumerate() {
        let cfg = json!({ "schema_version": 1, "p": 2.5, "path": path, "lift": { "kind": "ito", "scale": scale } });
        let cfg = write_config(dir.path(), &format!("p{k}.json"), &cfg);
        let dp = stdout_json(&brp(&["metrics", "--config", &base, "--config", &cfg]))["dp"].as_f64().unwrap();
        assert!(dp > last, "dp {dp} after {last}");
        last = dp;
    }
}

#[test]
fn mismatched_grids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.json", &linear_config(8, constant_form(true)));
    let b = write_config(dir.path(), "b.json", &linear_config(16, constant_form(true)));
    assert_eq!(brp(&["metrics", "--config", &a, "--config", &b]).status.code(), Some(2));
}

#[test]
fn seed_flag_changes_generated_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &json!({ "schema_version": 1, "p": 2.5, "path": { "generator": { "kind": "smooth_random", "d": 1, "modes": 3, "seed": 1, "steps": 8 } } }),
    );
    let a = brp(&["lift", "--config", &cfg, "--seed", "1"]).stdout;
    let b = brp(&["lift", "--config", &cfg]).stdout;
    let c = brp(&["lift", "--config", &cfg, "--seed", "2"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn unconverged_refinement_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "schema_version": 1, "p": 2.5, "gamma": 2.8,
        "path": { "generator": { "kind": "zigzag", "d": 2, "teeth": 16, "amplitude": 1.0, "steps": 64 } },
        "one_form": smooth_form()
    });
    let cfg = write_config(dir.path(), "c.json", &cfg);
    let out = brp(&["integrate", "--config", &cfg, "--refine", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not Cauchy"));
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = linear_config(4, constant_form(true));
    cfg["gama"] = json!(2.0);
    let cfg = write_config(dir.path(), "c.json", &cfg);
    let out = brp(&["lift", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gama"));
}
