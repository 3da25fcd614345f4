use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn o2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_o2"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", stderr(out));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// `W^(l)` of the fully packed family by summing its series directly.
fn fully_packed_w(ell: i64) -> f64 {
    let n = 2_000_000;
    let mut s = 0.0;
    for k in (1..=n).rev() {
        let kf = k as f64;
        let y = kf + ell as f64;
        s += (1.0 / (kf - 0.5) + 1.0 / (kf + 0.5)) * 4.0 / (4.0 * y * y - 1.0);
    }
    let c = PI * PI / 2.0;
    c.powi(ell as i32 + 1) / (2.0 * PI * PI) * s
}

#[test]
fn fully_packed_table_matches_series() {
    let out = o2(&["example", "fully-packed", "--table", "0..10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("ell,w,log_w,l_q"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 11);
    let c = PI * PI / 2.0;
    for row in &rows {
        let ell: i64 = row[0].parse().unwrap();
        let w: f64 = row[1].parse().unwrap();
        let log_w: f64 = row[2].parse().unwrap();
        let l_q: f64 = row[3].parse().unwrap();
        if ell == 0 {
            assert_eq!(w, 1.0);
            continue;
        }
        let expect = fully_packed_w(ell);
        assert!((w / expect - 1.0).abs() < 1e-9, "l={ell}: {w} vs {expect}");
        assert!((log_w - w.ln()).abs() < 1e-12);
        let l = ell as f64;
        let l_expect = 2.0 * l * l * w / c.powi(ell as i32 + 1);
        assert!((l_q / l_expect - 1.0).abs() < 1e-12);
    }
}

#[test]
fn large_perimeter_keeps_log_column() {
    let out = o2(&["example", "budd-symmetric", "--table", "700..701"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows[0][1], "inf");
    let log_w: f64 = rows[0][2].parse().unwrap();
    // W = (3 pi)^{l+1} / (pi (4 (l+1)^2 - 1))
    let expect = 701.0 * (3.0 * PI).ln() - (PI * (4.0 * 701.0f64.powi(2) - 1.0)).ln();
    assert!((log_w - expect).abs() < 1e-9 * expect, "{log_w} vs {expect}");
}

#[test]
fn synth_zero_is_fully_packed() {
    let v = json(&o2(&["synth", "--g", "0"]));
    let c = v["c_q"].as_f64().unwrap();
    assert!((c / (PI * PI / 2.0) - 1.0).abs() < 1e-8, "{c}");
    assert_eq!(v["validation"]["verdict"]["pass"], Value::Bool(true));
    let nu = &v["nu"]["-1"];
    assert!((nu.as_f64().unwrap() - 4.0 / (PI * PI)).abs() < 1e-10);
}

#[test]
fn g_file_matches_inline_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, "0.2\n\n1/10\n").unwrap();
    let a = o2(&["synth", "--g-file", path.to_str().unwrap()]);
    let b = o2(&["synth", "--g", "0.2,1/10"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn rejections_exit_one() {
    let out = o2(&["synth", "--g", "1.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("degenerate"), "{}", stderr(&out));
    let out = o2(&["synth", "--g", "0.01,0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("first moment"));
}

#[test]
fn usage_errors_exit_two_and_name_the_flag() {
    for (args, flag) in [
        (vec!["synth", "--g", "abc"], "--g"),
        (vec!["example", "fully-packed", "--table", "5..1"], "--table"),
        (vec!["synth", "--g", "0", "--tol=-1"], "--tol"),
        (vec!["synth", "--g", "0", "--workers", "0"], "--workers"),
        (vec!["asympt", "--g", "0", "--x-grid", "10,oops"], "--x-grid"),
        (vec!["synth", "--g", "0", "--mode", "fast"], "--mode"),
        (vec!["synth"], "--g"),
    ] {
        let out = o2(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).contains(flag), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn regime_report_for_zero_g() {
    let v = json(&o2(&["asympt", "--g", "0", "--x-grid", "10,100"]));
    assert_eq!(v["regime"]["regime"], "drift_deficit");
    let c = v["regime"]["limit_constant"].as_f64().unwrap();
    assert!((c - 2.0 / (PI * PI)).abs() < 1e-15);
    assert_eq!(v["samples"].as_array().unwrap().len(), 2);

    let out = o2(&["asympt", "--builtin", "budd-symmetric", "--x-grid", "100", "--format", "csv"]);
    assert_eq!(stdout(&out).lines().next(), Some("x,l,l_tilde,ratio"));
}

#[test]
fn validation_report_has_verdict() {
    let v = json(&o2(&["validate", "--builtin", "budd-symmetric", "--window", "2000"]));
    assert_eq!(v["verdict"]["pass"], Value::Bool(true));
    assert_eq!(v["depth"], 50);
}

#[test]
fn walk_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let out = o2(&[
            "walk", "--builtin", "fully-packed", "--n-walks", "3000", "--horizon", "1000", "--seed",
            seed, "--format", "csv", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(out.stdout.is_empty());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "5");
    let b = run("b.csv", "5");
    let c = run("c.csv", "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("ladder_type,value,count,expected_probability,z_score\n"));
    assert!(text.contains("\ndescending_height,1,"));

    let v = json(&o2(&["walk", "--g", "0.3,0.1", "--n-walks", "2000", "--horizon", "500"]));
    assert_eq!(v["statistics"]["n_walks"], 2000);
    assert_eq!(v["descending_bands"].as_array().unwrap().len(), 8);
}

#[test]
fn oracle_agrees_and_runs_calibrated_loop_equation() {
    let v = json(&o2(&["oracle", "--g", "0.2,0.1", "--k-max", "5", "--terms", "200000"]));
    assert!(v["tutte"].is_null());
    assert!(v["nu"].as_array().unwrap().iter().all(|r| r["pass"] == Value::Bool(true)));

    let v = json(&o2(&[
        "oracle", "--g", "0.2,0.1", "--k-max", "2", "--terms", "20000", "--enable-tutte",
    ]));
    let t = &v["tutte"];
    assert_eq!(t["enabled"], Value::Bool(true));
    for r in t["residuals"].as_array().unwrap() {
        assert!(r["residual"].as_f64().unwrap() < 1e-8, "{r}");
    }
}

#[test]
fn direct_mode_matches_digamma() {
    let a = json(&o2(&["synth", "--g", "0.1,0.2", "--window", "3"]));
    let b = json(&o2(&["synth", "--g", "0.1,0.2", "--window", "3", "--mode", "direct"]));
    let (ca, cb) = (a["c_q"].as_f64().unwrap(), b["c_q"].as_f64().unwrap());
    assert!((ca - cb).abs() < 1e-8 * ca, "{ca} {cb}");
}
