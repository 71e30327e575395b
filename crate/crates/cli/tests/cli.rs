use std::path::Path;
use std::process::{Command, Output};

use cutbiot_cli::commands::{cmd_solve, cmd_sweep, fmt_f, CommonOpts};
use cutbiot_cli::config::RunConfig;
use cutbiot_cli::{EXIT_CONFIG, EXIT_OK};

fn cutbiot(args: &[&str], config: &str, out: &Path) -> Output {
    let cfg_path = out.with_extension("json");
    std::fs::write(&cfg_path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cutbiot"))
        .args(args)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("error JSON on stderr")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_default_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("solve");
    let o = cutbiot(&["solve"], "{}", &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["status"], "ok");
    assert_eq!(s["n"], 32);
    assert!(s["galerkin_residual"].as_f64().unwrap() <= 1e-9);
    assert!(s["kappa"].as_f64().unwrap() > 1.0);
    let points = std::fs::read_to_string(out.join("points.csv")).unwrap();
    assert!(points.starts_with("x,y,ux,uy,pT,pF\n"));
    assert!(points.lines().count() > 100);
}

#[test]
fn invalid_flower_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cutbiot(&["solve"], r#"{"geometry": {"r0": 0.1, "r1": 0.3}}"#, &tmp.path().join("bad"));
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let e = stderr_json(&o);
    assert_eq!(e["status"], "error");
    assert_eq!(e["exit_code"], EXIT_CONFIG);
    assert!(e["message"].as_str().unwrap().contains("invalid flower"));
}

#[test]
fn missing_or_malformed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cutbiot"))
        .args(["solve", "--config", "/nonexistent/config.json", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let o = cutbiot(&["solve"], r#"{"mesh": {"cells": 3}}"#, &tmp.path().join("typo"));
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let o = cutbiot(&["solve"], r#"{"mesh": {"n": 256}}"#, &tmp.path().join("fine"));
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn convergence_rows_and_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("conv");
    let o = cutbiot(&["convergence"], r#"{"mesh": {"ladder": [16, 32, 64]}}"#, &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(text.starts_with("N,h,lambda,K,err_u_star,err_u_L2,err_pT_star,err_pF_star,err_pF_L2,eoc_"));
    let rows = csv_rows(&out.join("convergence.csv"));
    assert_eq!(rows.len(), 12);
    for combo in rows.chunks(3) {
        assert_eq!(combo.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["16", "32", "64"]);
        assert!(combo[0][9..].iter().all(String::is_empty));
        for level in &combo[1..] {
            assert!(level[9..].iter().all(|v| v.parse::<f64>().is_ok()), "{level:?}");
        }
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(json["combinations"].as_array().unwrap().len(), 4);
}

#[test]
fn single_level_ladder_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cutbiot(&["convergence"], r#"{"mesh": {"ladder": [16]}}"#, &tmp.path().join("one"));
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("ladder"));
}

#[test]
fn sweep_arms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"sweep": {"n": 16, "deltas": [0.0, 0.4], "condition_iters": 30}}"#;
    let out = tmp.path().join("both");
    let o = cutbiot(&["sweep"], cfg, &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("sweep.csv"));
    let keys: Vec<_> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    let zero = fmt_f(0.0);
    let shifted = fmt_f(0.4);
    assert_eq!(
        keys,
        [
            (zero.clone(), "true".into()),
            (zero, "false".into()),
            (shifted.clone(), "true".into()),
            (shifted, "false".into())
        ]
    );

    let out = tmp.path().join("raw");
    let o = cutbiot(&["sweep", "--no-stab"], cfg, &out);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[1] == "false"));
}

#[test]
fn sweep_rows_are_recomputable_by_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_json(r#"{"sweep": {"n": 16, "deltas": [0.3], "condition_iters": 30}}"#).unwrap();
    let opts = CommonOpts {
        out: tmp.path().join("sweep"),
        workers: Some(1),
        no_stab: false,
        allow_fine: false,
    };
    let (rows, _) = cmd_sweep(&cfg, &opts).unwrap();
    cfg.mesh.n = 16;
    cfg.mesh.shift = 0.3;
    cfg.solve.condition = false;
    for row in rows {
        let run = row.run.unwrap();
        let solve_opts = CommonOpts {
            out: tmp.path().join(format!("solve-{}", row.stabilized)),
            no_stab: !row.stabilized,
            ..opts.clone()
        };
        let s = cmd_solve(&cfg, &solve_opts).unwrap();
        assert_eq!(fmt_f(s.errors.u_star), fmt_f(run.errors.u_star));
        assert_eq!(fmt_f(s.errors.p_t_star), fmt_f(run.errors.pt_star));
        assert_eq!(fmt_f(s.errors.p_f_star), fmt_f(run.errors.pf_star));
    }
}
