// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ionprobe"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("run ionprobe")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL: &str = r#"
[probe]
kind = "jc"
g = 4e3
omega = 1.7e5
z = 14.5e-9
force = 20e-24

[initial]
motion = "thermal"
nbar = 0.5

[time]
stop = 0.05
points = 41

[space]
cutoff = 10

[output]
name = "small"
svg = false
"#;

#[test]
fn fig1a_fixture_recovers_rabi_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args(["simulate", "--config"])
        .arg(fixture("fig1a.toml"))
        .arg("--output-dir")
        .arg(dir.path()));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let line = text
        .lines()
        .find(|l| l.starts_with("fitted omega_f"))
        .expect("fit line");
    let value: f64 = line
        .split('=')
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((value / 32.352 - 1.0).abs() < 0.03, "{value}");
    let csv = fs::read_to_string(dir.path().join("fig1a.csv")).unwrap();
    assert!(csv.starts_with("t_seconds,p_up,tail_x\n"));
    assert_eq!(csv.lines().count(), 202);
    assert!(dir.path().join("fig1a.meta.toml").exists());
    assert!(dir.path().join("fig1a.svg").exists());
}

#[test]
fn identical_config_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = run(bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--output-dir")
            .arg(&out_dir));
        assert!(out.status.success());
        files.push(fs::read(out_dir.join("small.csv")).unwrap());
        files.push(fs::read(out_dir.join("small.meta.toml")).unwrap());
    }
    assert_eq!(files[0], files[2]);
    assert_eq!(files[1], files[3]);
}

#[test]
fn heating_limited_sensitivity_printout() {
    let out = run(bin().args([
        "sensitivity",
        "--probe",
        "jc",
        "--omega",
        "1.8e5",
        "--g",
        "4e3",
        "--z",
        "14.5e-9",
        "--heating",
        "10",
    ]));
    assert!(out.status.success());
    assert!(stdout(&out).contains("2.41e-24"), "{}", stdout(&out));
}

#[test]
fn sensitivity_without_time_or_heating_is_config_error() {
    let out = run(bin().args([
        "sensitivity",
        "--probe",
        "jc",
        "--omega",
        "1.8e5",
        "--g",
        "4e3",
        "--z",
        "14.5e-9",
    ]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_sw_qr_passes() {
    let out = run(bin().args(["verify-sw", "--kind", "qr"]));
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).lines().any(|l| l == "PASS"));
}

#[test]
fn empty_sweep_range_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    for axis in ["values = []", "start = 1e3\nstop = 2e3\npoints = 0"] {
        let cfg = dir.path().join("sweep.toml");
        let text = format!(
            "{SMALL}\n[sweep]\nmetrics = [\"contrast\"]\n\n[[sweep.parameter]]\nname = \"g\"\n{axis}\n"
        );
        fs::write(&cfg, text).unwrap();
        let out = run(bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--output-dir")
            .arg(dir.path()));
        assert_eq!(out.status.code(), Some(2), "{axis}");
    }
}

#[test]
fn unknown_config_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, format!("{SMALL}\n[extra]\nx = 1\n")).unwrap();
    let out = run(bin().args(["simulate", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rows_follow_parameter_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    let text = format!(
        "{SMALL}\n[sweep]\nmetrics = [\"contrast\", \"max_tail\"]\n\n\
         [[sweep.parameter]]\nname = \"nbar\"\nvalues = [0.0, 1.0]\n\n\
         [[sweep.parameter]]\nname = \"g\"\nvalues = [3e3, 4e3, 5e3]\n"
    );
    fs::write(&cfg, text).unwrap();
    let out = run(bin()
        .env("SIM_THREADS", "2")
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path()));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("small.sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("nbar,g,contrast,max_tail"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(
        keys,
        vec![
            (0.0, 3e3),
            (0.0, 4e3),
            (0.0, 5e3),
            (1.0, 3e3),
            (1.0, 4e3),
            (1.0, 5e3)
        ]
    );
    assert!(rows.iter().all(|r| r[2] > 0.0 && r[2] <= 1.0 + 1e-9));
}

#[test]
fn reproduce_writes_figure_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args([
            "reproduce",
            "--figure",
            "fig3",
            "--cutoff",
            "16",
            "--points",
            "41",
        ])
        .arg("--output-dir")
        .arg(dir.path()));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert!(csv.starts_with("series,x,y\n"));
    assert!(dir.path().join("fig3.meta.toml").exists());
    assert!(dir.path().join("fig3.svg").exists());
    let out = run(bin().args(["reproduce", "--figure", "fig9"]));
    assert_eq!(out.status.code(), Some(2));
}
