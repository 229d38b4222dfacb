use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opencontrol"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(mode: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(mode).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn result(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

const HLP: &str = r#"{
  "mode": "hlp",
  "system": { "model": "ising_chain", "qubits": 3, "noise": "bitflip", "gamma_star": 5.0 },
  "initial": { "kind": "spectrum", "values": [0.027777777777777776, 0.05555555555555555, 0.08333333333333333, 0.1111111111111111,
                                               0.1388888888888889, 0.16666666666666666, 0.19444444444444445, 0.2222222222222222] },
  "target": { "kind": "thermal" },
  "hlp": { "residual_target": 1e-4 }
}"#;

const SIMULATE_IDLE: &str = r#"{
  "system": { "model": "ising_chain", "qubits": 2, "noise": "amp", "gamma_star": 5.0 },
  "initial": { "kind": "random", "seed": 7 },
  "target": { "kind": "zero" },
  "total_time": 2.0,
  "slices": 8,
  "controls": { "u": [0, 0, 0, 0], "gamma": [0] }
}"#;

const OPTIMIZE: &str = r#"{
  "system": { "model": "ising_chain", "qubits": 1, "noise": "amp", "gamma_star": 5.0 },
  "initial": { "kind": "thermal" },
  "target": { "kind": "zero" },
  "total_time": 2.0,
  "slices": 6,
  "optimizer": { "max_iters": 30, "tol": 1e-6, "restarts": 2 },
  "seed": 11
}"#;

#[test]
fn hlp_reproduces_relaxation_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "hlp.json", HLP);
    let out = dir.path().join("out");
    let o = run("hlp", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(&out);
    let t = r["total_dissipative_time"].as_f64().unwrap();
    assert!((t - 12.0).abs() <= 0.05 * 12.0, "T = {t}");
    assert!(r["residual"].as_f64().unwrap() <= 1.5e-4);
    assert_eq!(r["plan"]["pairs"].as_array().unwrap().len(), 4);
    let (header, rows) = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(header.len(), 10);
    assert_eq!(rows.len(), 5);
    assert!((rows[4][9] - r["residual"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn unreachable_hlp_target_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "hlp.json", &HLP.replace("\"thermal\"", "\"zero\""));
    let o = run("hlp", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn erase_amp_protocol_duration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "erase.json",
        r#"{
  "system": { "model": "ising_chain", "qubits": 3, "coupling": 1.0, "noise": "amp", "gamma_star": 5.0 },
  "protocol": { "name": "erase_amp" }
}"#,
    );
    let out = dir.path().join("out");
    let o = run("protocol", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(&out);
    assert!((r["duration"].as_f64().unwrap() - 3.416).abs() < 1e-3);
    assert!(r["simulated_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(r["summary"]["formula_id"], "erase_amp");
}

#[test]
fn idle_simulation_keeps_the_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.json", SIMULATE_IDLE);
    let out = dir.path().join("out");
    let o = run("simulate", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(header[0], "time");
    assert_eq!(header.last().unwrap(), "delta_f");
    assert_eq!(rows.len(), 9);
    for row in &rows {
        for (a, b) in row[1..5].iter().zip(&rows[0][1..5]) {
            assert!((a - b).abs() < 1e-12);
        }
        let sum: f64 = row[1..5].iter().sum();
        assert!((sum - 1.0).abs() < 1e-8);
    }
    let (_, seq) = csv_rows(&out.join("sequence.csv"));
    assert_eq!(seq.len(), 8);
    assert!(seq.iter().all(|r| r[2..].iter().all(|&v| v == 0.0)));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "opt.json", OPTIMIZE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run("optimize", &cfg, out, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["trajectory.csv", "sequence.csv", "result.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let r = result(&a);
    assert_eq!(r["seeds"], serde_json::json!([11, 12]));
    let hist = r["error_history"].as_array().unwrap();
    assert!(hist.last().unwrap().as_f64().unwrap() <= hist[0].as_f64().unwrap());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "opt.json", OPTIMIZE);
    let out = dir.path().join("out");
    let o = run("optimize", &cfg, &out, &["--seed", "40"]);
    assert!(o.status.success());
    assert_eq!(result(&out)["seeds"], serde_json::json!([40, 41]));
}

fn validate(mode: &str, body: &str) -> (Option<i32>, Vec<String>) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", body);
    let o = bin().args(["validate", mode]).arg("--config").arg(&cfg).output().unwrap();
    let lines = String::from_utf8_lossy(&o.stderr).lines().map(String::from).collect();
    (o.status.code(), lines)
}

#[test]
fn valid_config_has_no_diagnostics() {
    let (code, lines) = validate("simulate", SIMULATE_IDLE);
    assert_eq!(code, Some(0));
    assert!(lines.is_empty(), "{lines:?}");
}

#[test]
fn noise_above_bound_is_one_diagnostic() {
    let (code, lines) = validate("simulate", &SIMULATE_IDLE.replace("\"gamma\": [0]", "\"gamma\": [6.5]"));
    assert_eq!(code, Some(2));
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!(lines[0].contains("line 7") && lines[0].contains("gamma_star"), "{}", lines[0]);
}

#[test]
fn dimension_mismatch_is_one_diagnostic() {
    let body = SIMULATE_IDLE.replace(r#"{ "kind": "zero" }"#, r#"{ "kind": "spectrum", "values": [0.5, 0.5] }"#);
    let (code, lines) = validate("simulate", &body);
    assert_eq!(code, Some(2));
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!(lines[0].contains("line 4") && lines[0].contains("dimension"), "{}", lines[0]);
}

#[test]
fn unknown_model_is_reported_with_its_line() {
    let (code, lines) = validate("hlp", "{\n  \"system\": { \"model\": \"spin_glass\" }\n}");
    assert_eq!(code, Some(2));
    assert_eq!(lines.len(), 1);
    assert!(lines[0].contains("line 2") && lines[0].contains("spin_glass"), "{}", lines[0]);
}

#[test]
fn invalid_config_blocks_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &SIMULATE_IDLE.replace("\"slices\": 8", "\"slices\": 0"));
    let o = run("simulate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("slices"));
}

#[test]
fn mode_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "hlp.json", HLP);
    let o = run("majorize", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn majorize_and_controllability() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", &HLP.replace("\"mode\": \"hlp\",", ""));
    let out = dir.path().join("m");
    assert!(run("majorize", &cfg, &out, &[]).status.success());
    let r = result(&out);
    assert_eq!(r["target_majorised_by_initial"], true);
    assert_eq!(r["initial_majorised_by_target"], false);

    let out = dir.path().join("c");
    assert!(run("controllability", &cfg, &out, &[]).status.success());
    let r = result(&out);
    assert_eq!(r["lie_closure_dimension"], 63);
    assert_eq!(r["fully_controllable"], true);
    assert!(!out.join("trajectory.csv").exists());
}
