use std::path::PathBuf;
use std::process::{Command, Output};

use hnl::cli::StateFile;
use hnl::states::{erasure_state, state_rho_g};

fn hnl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hnl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_field(text: &str, column: &str) -> f64 {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == column).unwrap();
    row[i].parse().unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hnl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn reproduce_row_at_half() {
    let o = hnl(&["reproduce", "--q", "0.5", "--eps", "1e-4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let expect = [
        ("q", 0.5, 0.0),
        ("S_unfiltered_state_q", std::f64::consts::SQRT_2, 1e-9),
        ("S_filtered_state_q", 2.4494897, 1e-6),
        ("S_filtered_rho_G", 2.1213203, 1e-6),
        ("S_rho_GM_filtered", 2.8284271, 1e-6),
        ("ppt_min_eig_state_q", (1.0 - 5f64.sqrt()) / 8.0, 1e-9),
    ];
    for (col, v, tol) in expect {
        let got = csv_field(&text, col);
        assert!((got - v).abs() <= tol, "{col}: {got}");
    }
}

#[test]
fn reproduce_quarter_and_small_q() {
    let o = hnl(&["reproduce", "--q", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((csv_field(&stdout(&o), "S_filtered_state_q") - 2.0 * 1.25f64.sqrt()).abs() <= 1e-6);

    let o = hnl(&["reproduce", "--q", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for col in ["S_filtered_state_q", "S_filtered_rho_G"] {
        let s = csv_field(&text, col);
        assert!(s > 2.0 && s - 2.0 < 0.02, "{col}: {s}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hnl(&["reproduce", "--q", "0.7"]).status.code(), Some(2));
    assert_eq!(hnl(&["nonsense"]).status.code(), Some(2));
    assert_eq!(
        hnl(&["lhv", "--model", "protocol1", "--rounds", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(hnl(&["lhv", "--model", "werner"]).status.code(), Some(2));
    assert_eq!(hnl(&["chsh", "--family", "rho_GM"]).status.code(), Some(2));
    assert_eq!(
        hnl(&[
            "lhv",
            "--model",
            "protocol1",
            "--settings",
            "/nonexistent/settings.json"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn entanglement_and_chsh() {
    let o = hnl(&["entanglement", "--family", "state_q", "--q", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let m = csv_field(&stdout(&o), "min_eig_partial_transpose");
    assert!((m - (1.0 - 5f64.sqrt()) / 8.0).abs() <= 1e-9);

    let o = hnl(&["chsh", "--family", "singlet", "--settings", "optimal"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((csv_field(&text, "S") - 2.8284271).abs() <= 1e-7);
    assert!((csv_field(&text, "horodecki_S") - 2.0 * 2f64.sqrt()).abs() <= 1e-9);

    let o = hnl(&["chsh", "--family", "singlet", "--settings", "canonical"]);
    assert!((csv_field(&stdout(&o), "S") - 2.0 * 2f64.sqrt()).abs() <= 1e-9);

    let o = hnl(&["chsh", "--family", "rho_GM", "--project-qubit"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((csv_field(&stdout(&o), "projection_prob") - 0.5 / 9.0).abs() <= 1e-12);
}

#[test]
fn filter_scan_moves_toward_limit() {
    let o = hnl(&[
        "filter-scan",
        "--family",
        "rho_G",
        "--q",
        "0.5",
        "--eps",
        "1e-2,1e-3,1e-4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let limit = 2.0 * 1.125f64.sqrt();
    let devs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| (l.split(',').nth(1).unwrap().parse::<f64>().unwrap() - limit).abs())
        .collect();
    assert_eq!(devs.len(), 3);
    assert!(devs[0] > devs[1] && devs[1] > devs[2]);
    assert!(devs[2] < 1e-6);
}

#[test]
fn filter_scan_on_a_file_extrapolates() {
    let path = tmp("rho_g.json");
    let o = hnl(&[
        "state",
        "rho_G",
        "--q",
        "0.5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = hnl(&[
        "filter-scan",
        "--input",
        path.to_str().unwrap(),
        "--q",
        "0.5",
        "--eps",
        "1e-3,2e-3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let limit = csv_field(&stdout(&o), "S_limit");
    assert!((limit - 2.0 * 1.125f64.sqrt()).abs() < 1e-8, "{limit}");
}

#[test]
fn construct_outputs_known_states() {
    let out = tmp("rho_g_constructed.json");
    let o = hnl(&[
        "construct",
        "--input",
        "state_q",
        "--q",
        "0.5",
        "--sigma-a",
        "ket0",
        "--sigma-b",
        "ket0",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let got = hnl::cli::read_state_file(&out).unwrap();
    assert!(
        got.matrix()
            .max_abs_diff(state_rho_g(0.5).unwrap().matrix())
            <= 1e-12
    );

    let o = hnl(&[
        "construct",
        "--input",
        "erasure",
        "--q",
        "0.5",
        "--sigma-a",
        "ket2",
        "--one-sided",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let file: StateFile = serde_json::from_slice(&o.stdout).unwrap();
    let got = file.to_state().unwrap();
    assert!(got.matrix().max_abs_diff(erasure_state(1.0 / 6.0).matrix()) <= 1e-12);

    let o = hnl(&[
        "construct",
        "--input",
        "erasure",
        "--sigma-a",
        "ket0",
        "--sigma-b",
        "ket5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn state_files_round_trip_bit_exactly() {
    let first = tmp("first.json");
    let second = tmp("second.json");
    let o = hnl(&[
        "construct",
        "--input",
        "rho_GM",
        "--q",
        "0.37",
        "--sigma-a",
        "ket1",
        "--output",
        first.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = hnl(&[
        "construct",
        "--input",
        first.to_str().unwrap(),
        "--sigma-a",
        "ket1",
        "--output",
        second.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let a = hnl::cli::read_state_file(&first).unwrap();
    std::fs::write(&second, StateFile::from_state(&a).to_json()).unwrap();
    let b = hnl::cli::read_state_file(&second).unwrap();
    assert_eq!(a.matrix(), b.matrix());
}

#[test]
fn lhv_runs_pass_and_repeat_byte_for_byte() {
    let args = [
        "lhv",
        "--model",
        "protocol1",
        "--rounds",
        "1000000",
        "--seed",
        "7",
        "--settings",
        "random:20",
    ];
    let a = hnl(&args);
    assert_eq!(a.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(report["max_z"].as_f64().unwrap() <= 5.0);
    for key in [
        "seed",
        "rounds",
        "model",
        "settings",
        "empirical",
        "target",
        "max_abs_dev",
        "max_z",
        "rates",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let b = hnl(&args);
    assert_eq!(a.stdout, b.stdout);

    let o = hnl(&[
        "lhv",
        "--model",
        "protocol2-rhoGM",
        "--rounds",
        "1000000",
        "--settings",
        "random:10",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn lhv_settings_file_round_trip() {
    let report = tmp("report.json");
    let o = hnl(&[
        "lhv",
        "--model",
        "erasure",
        "--rounds",
        "20000",
        "--settings",
        "random:3",
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let settings = tmp("settings.json");
    std::fs::write(&settings, value["settings"].to_string()).unwrap();
    let o = hnl(&[
        "lhv",
        "--model",
        "erasure",
        "--rounds",
        "20000",
        "--settings",
        settings.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let again: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(again["empirical"], value["empirical"]);

    // qubit projectors are not valid erasure-model settings
    let o = hnl(&[
        "lhv",
        "--model",
        "protocol1",
        "--rounds",
        "20000",
        "--settings",
        "random:1",
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    std::fs::write(&settings, value["settings"].to_string()).unwrap();
    let o = hnl(&[
        "lhv",
        "--model",
        "erasure",
        "--rounds",
        "20000",
        "--settings",
        settings.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sequential_command() {
    let o = hnl(&[
        "sequential",
        "--family",
        "rho_GM",
        "--rounds",
        "1000000",
        "--seed",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["s_z"].as_f64().unwrap() <= 5.0);
}
