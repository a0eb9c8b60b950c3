use std::path::PathBuf;
use std::process::{Command, Output};

fn qchan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qchan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_sweep_is_clean_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = qchan(&[
            "verify",
            "--trials",
            "500",
            "--dim",
            "2",
            "--seed",
            "7",
            "--report",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let out = stdout(&o);
        for id in [
            "JM",
            "HP_unbiased",
            "HP_general",
            "COLLAPSE_unbiased",
            "COLLAPSE_general",
        ] {
            assert!(out.contains(&format!("{id}: 500/500 pass")), "{out}");
        }
    }
    let ja = std::fs::read(&a).unwrap();
    assert_eq!(ja, std::fs::read(&b).unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["results"].as_array().unwrap().len(), 2500);
}

#[test]
fn verify_csv_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    let o = qchan(&[
        "verify",
        "--trials",
        "3",
        "--seed",
        "1",
        "--format",
        "csv",
        "--report",
        p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(p).unwrap();
    assert!(csv.starts_with("trial,id,lhs,rhs,slack,pass"));
    assert_eq!(csv.lines().count(), 16);
}

#[test]
fn non_cp_fixture_exits_2() {
    let o = qchan(&[
        "verify",
        "--trials",
        "1",
        "--dim",
        "2",
        "--fixture",
        &fixture("transpose_map.json"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("choi_check failed"));
}

#[test]
fn valid_fixtures_pass() {
    for f in ["von_neumann.json", "sharpness.json"] {
        let o = qchan(&["verify", "--trials", "1", "--fixture", &fixture(f)]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn malformed_fixture_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"dim": 2, "outcomes": [{"label": "x", "value": 1, "kraus": [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]]}]}"#,
    )
    .unwrap();
    let o = qchan(&["verify", "--trials", "1", "--fixture", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(qchan(&["verify", "--trials", "0"]).status.code(), Some(64));
    assert_eq!(qchan(&["verify", "--trials", "abc"]).status.code(), Some(64));
    assert_eq!(qchan(&["figure", "7"]).status.code(), Some(64));
    assert_eq!(qchan(&["figure", "3", "--points", "4"]).status.code(), Some(64));
    assert_eq!(qchan(&["model", "nonsense"]).status.code(), Some(64));
    assert_eq!(qchan(&[]).status.code(), Some(64));
    assert_eq!(qchan(&["--help"]).status.code(), Some(0));
}

#[test]
fn figure_files_carry_metadata() {
    let dir = tempfile::tempdir().unwrap();
    for (id, side) in [(2, "below"), (3, "below"), (4, "below"), (5, "above"), (6, "above")] {
        let p = dir.path().join(format!("fig{id}.csv"));
        let o = qchan(&[
            "figure",
            &id.to_string(),
            "--out",
            p.to_str().unwrap(),
            "--points",
            "64",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let csv = std::fs::read_to_string(&p).unwrap();
        assert!(csv.starts_with(&format!("# qchan-figure: {id}\n")));
        assert!(csv.contains(&format!("# forbidden: {side}\n")));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 65);
    }
    let fig3 = stdout(&qchan(&["figure", "3", "--points", "32"]));
    for row in fig3.lines().skip(5) {
        let cols: Vec<&str> = row.split(',').collect();
        if !cols[2].is_empty() {
            let (b, m): (f64, f64) = (cols[1].parse().unwrap(), cols[2].parse().unwrap());
            assert!((b - m).abs() < 1e-6);
        }
    }
}

#[test]
fn sharpness_model_reports_squid_number() {
    let out = stdout(&qchan(&["model", "sharpness", "--p", "0.13"]));
    assert!(out.contains("delta=0.130000000000"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("collapse_bound=0.336")), "{out}");
    assert_eq!(qchan(&["model", "sharpness", "--p", "0.5"]).status.code(), Some(2));
}

#[test]
fn beamsplitter_model_reaches_equality() {
    let o = qchan(&[
        "model",
        "beamsplitter",
        "--theta",
        "0.7853981634",
        "--fock-dim",
        "40",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["sigma_product"].as_f64().unwrap() - 0.5).abs() < 1e-5);
    assert_eq!(
        qchan(&["model", "beamsplitter", "--theta", "2.0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qchan(&["model", "beamsplitter", "--fock-dim", "8"]).status.code(),
        Some(2)
    );
}

#[test]
fn fluorescence_model_csv() {
    let out = stdout(&qchan(&[
        "model",
        "fluorescence",
        "--omega",
        "50",
        "--tmax",
        "5",
        "--steps",
        "10",
    ]));
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "t,disturbance,delta_bound,z_exact,z_rotating");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for r in rows {
        let t = r[0];
        assert!((r[1] - 0.5 * (1.0 - (-0.75 * t).exp())).abs() < 1e-11);
        assert!((r[2] - (0.5 - 0.5 * (1.0 - (-1.5 * t).exp()).sqrt())).abs() < 1e-11);
    }
}

#[test]
fn thread_cap_is_honoured() {
    let o = Command::new(env!("CARGO_BIN_EXE_qchan"))
        .env("QCHAN_THREADS", "1")
        .args(["verify", "--trials", "4", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_qchan"))
        .env("QCHAN_THREADS", "zero")
        .args(["verify", "--trials", "1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(64));
}
