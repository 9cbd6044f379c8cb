//! End-to-end checks of the binary: exit codes, output schemas, determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfpack"))
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("mfpack-test-{}-{name}", std::process::id()));
    p
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let p = tmp_path(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn desk_config() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../presets/desk.json"))
        .unwrap()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn validate_known_good_preset_exits_zero() {
    let cfg = write_config("validate-good.json", &desk_config());
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["report"]["pass"], serde_json::Value::Bool(true));
}

#[test]
fn validate_equal_probabilities_names_the_exponent_condition() {
    let cfg_text = desk_config().replace("\"p0\": 0.42", "\"p0\": 0.5").replace(
        "\"p1\": 0.58",
        "\"p1\": 0.5",
    );
    let cfg = write_config("validate-bad.json", &cfg_text);
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("g(gamma2) < 1"), "stderr: {err}");
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let out = run(&["validate", "--config", "/nonexistent/nowhere.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["validate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let cfg_text = desk_config().replace("\"model\"", "\"bogus\": 1, \"model\"");
    let cfg = write_config("unknown-keys.json", &cfg_text);
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_uniform_matches_the_closed_form() {
    let cfg = write_config(
        "spectrum-uniform.json",
        r#"{
            "model": { "kind": "uniform" },
            "spectrum": { "q_min": 0.0, "q_max": 4.0, "q_step": 0.5, "n_min": 8, "n_max": 14 }
        }"#,
    );
    let out = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,tau_hat,residual");
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[1] - (1.0 - cols[0])).abs() < 1e-9, "{line}");
    }
}

#[test]
fn spectrum_outputs_are_byte_identical_across_runs() {
    let cfg = write_config("spectrum-det.json", &desk_config());
    let a = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    let b = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    // and under a different thread count
    let c = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn compare_bounds_reports_improvement_on_the_desk_preset() {
    // trimmed grid keeps the test quick; the acceptance suite runs the
    // full preset
    let cfg_text = desk_config().replace("\"q_step\": 0.25", "\"q_step\": 0.5");
    let cfg = write_config("compare.json", &cfg_text);
    let out = run(&["compare-bounds", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // the flat documented schema
    assert_eq!(report["improvement"], serde_json::Value::Bool(true));
    assert_eq!(report["bracketed"], serde_json::Value::Bool(true));
    let new_bound = report["new"].as_f64().unwrap();
    let olsen = report["olsen"].as_f64().unwrap();
    assert!(new_bound < olsen);
    let t_hat = report["t_hat"].as_f64().unwrap();
    let alpha = report["alpha"].as_f64().unwrap();
    // the detail block round-trips the same numbers
    let detail = &report["detail"];
    assert_eq!(detail["infima_agree"], serde_json::Value::Bool(true));
    assert!((detail["t_over_alpha"].as_f64().unwrap() - t_hat / alpha).abs() < 1e-15);
}

#[test]
fn mass_and_construct_emit_tables() {
    let cfg = write_config("tables.json", &desk_config());
    let out = run(&["mass", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("word,order,log2_mass,mass\n"));
    assert!(text.lines().count() >= 5);

    let out = run(&["construct", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("generation,word,lineage,partner\n"));
    // generations 0..=6 of sizes 2,4,8,8,8,8,8
    assert_eq!(text.lines().count() - 1, 2 + 4 + 8 * 5);
}

#[test]
fn depth_overruns_exit_with_code_four() {
    let cfg = write_config(
        "depth.json",
        r#"{
            "model": { "kind": "uniform" },
            "spectrum": { "q_min": 0.0, "q_max": 1.0, "q_step": 0.5, "n_min": 20, "n_max": 40 }
        }"#,
    );
    let out = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oracle_passes_and_respects_the_seed() {
    let cfg = write_config(
        "oracle.json",
        r#"{
            "model": { "kind": "cascade", "p0": 0.3, "p1": 0.7 },
            "oracle": { "instances": 25, "max_points": 6 }
        }"#,
    );
    let a = run(&["oracle", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["all_pass"], serde_json::Value::Bool(true));
    let b = run(&["oracle", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compare_bounds_unbracketed_case_reports_bracketed_false() {
    let cfg = write_config(
        "compare-unbracketed.json",
        r#"{
            "model": { "kind": "uniform" },
            "compare_bounds": {
                "alpha": 0.5,
                "spectrum": { "q_min": 0.0, "q_max": 8.0, "q_step": 0.5, "n_min": 8, "n_max": 12 },
                "t": { "p": 4, "depth": 16 }
            }
        }"#,
    );
    let out = run(&["compare-bounds", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["bracketed"], serde_json::Value::Bool(false));
    assert!(report["olsen"].is_null());
    assert!(report["new"].is_null());
    assert!(report["improvement"].is_null());
}

#[test]
fn explicit_weight_tables_load_and_evaluate() {
    let weights = tmp_path("weights.txt");
    std::fs::write(&weights, "00 0.1\n01 0.2\n10 0.3\n11 0.4\n").unwrap();
    let cfg = write_config(
        "explicit.json",
        &format!(
            r#"{{
                "model": {{ "kind": "explicit", "path": {:?} }},
                "mass": {{ "words": ["", "0", "01"] }}
            }}"#,
            weights.to_str().unwrap()
        ),
    );
    let out = run(&["mass", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("01,")).unwrap();
    let mass: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
    assert!((mass - 0.2).abs() < 1e-12);
    // a corrupt table is a model-integrity error (exit 1)
    std::fs::write(&weights, "00 0.1\n01 0.2\n10 0.3\n").unwrap();
    let out = run(&["mass", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_flag_writes_the_primary_output() {
    let cfg = write_config("outflag.json", &desk_config());
    let dst = tmp_path("spectrum-out.csv");
    let out = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dst.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&dst).unwrap();
    assert!(text.starts_with("q,tau_hat,residual\n"));
}

#[test]
fn levelset_and_lquantity_emit_reports() {
    let cfg = write_config("levelset.json", &desk_config());
    let out = run(&["levelset", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["members"].as_array().unwrap().len() >= 4);

    let out = run(&["lquantity", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = report["value"].as_f64().unwrap();
    let base = report["base_sup"].as_f64().unwrap();
    assert!(value <= base + 1e-12);

    let out = run(&["tmu", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("eta,p,t_hat,members,ceiling_ok\n"));
    assert_eq!(text.lines().count() - 1, 9);
}
