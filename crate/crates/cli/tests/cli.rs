use std::path::PathBuf;
use std::process::{Command, Output};

fn landau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landau"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).expect("stderr holds one JSON error record")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("landau-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).expect("column present");
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn spectrum_example() {
    let o = landau(&[
        "spectrum", "--n", "-0.5", "--b0", "1.533e15", "--m", "0", "--spin", "-1", "--levels", "4",
    ]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let alpha: Vec<f64> = column(&csv, "alpha").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(alpha.len(), 4);
    assert!(alpha[0].abs() < 0.05);
    assert!((alpha[1] / 304.718 - 1.0).abs() < 0.02, "{}", alpha[1]);
    assert!(column(&csv, "converged").iter().all(|c| c == "true"));
}

#[test]
fn zero_field_eos_is_rejected() {
    let o = landau(&["eos", "--n", "0", "--b0", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["exit_code"], 2);
    assert!(rec["message"].as_str().unwrap().contains("B0"));
    let o = landau(&["eos", "--chandrasekhar", "--grid-size", "50"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 51);
}

#[test]
fn numerical_failure_exit_code() {
    // the LQ table ends near 1.15e10 g cm^-3
    let o = landau(&["star", "--profile", "magnetized", "--rho-c", "1e13"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o)["exit_code"], 3);
}

#[test]
fn invalid_exponent_exit_code() {
    let o = landau(&["qspeed", "--n", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = landau(&["spectrum", "--b0", "1e15"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_named() {
    let dir = scratch("unknown");
    let path = dir.join("run.json");
    std::fs::write(&path, r#"{"solver": {"alpha_tol": 1e-6, "bogus_key": 3}}"#).unwrap();
    let o = landau(&[
        "--config",
        path.to_str().unwrap(),
        "spectrum",
        "--n",
        "0",
        "--b0",
        "1e15",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_record(&o)["message"].as_str().unwrap().contains("bogus_key"));
}

#[test]
fn flags_override_config() {
    let dir = scratch("override");
    let path = dir.join("run.json");
    std::fs::write(&path, r#"{"field": {"n": 0.0, "b0": 1e15}, "format": "json"}"#).unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = landau(&["--config", cfg, "spectrum", "--levels", "1", "--no-zeeman"]);
    assert!(from_file.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    let a1 = v[0]["alpha"].as_f64().unwrap();
    assert!((a1 / 22.2094 - 1.0).abs() < 1e-4);
    let overridden = landau(&[
        "--config",
        cfg,
        "spectrum",
        "--levels",
        "1",
        "--no-zeeman",
        "--b0",
        "2e15",
        "--format",
        "csv",
    ]);
    let a2: f64 = column(&stdout(&overridden), "alpha")[0].parse().unwrap();
    assert!((a2 / a1 - 2.0).abs() < 1e-6);
}

#[test]
fn output_is_deterministic() {
    let dir = scratch("determinism");
    let run = |sub: &str| {
        let out = dir.join(sub);
        let o = landau(&[
            "potential",
            "--n",
            "-0.3",
            "--b0",
            "1e15",
            "--points",
            "50",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        let o = landau(&[
            "mr-curve",
            "--profile",
            "lorentz-only",
            "--points",
            "6",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (
            std::fs::read(out.join("potential.csv")).unwrap(),
            std::fs::read(out.join("mr_curve.csv")).unwrap(),
            std::fs::read(out.join("branches.csv")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn help_documents_units() {
    let expect = [
        ("spectrum", "G pm^-n"),
        ("potential", "pm"),
        ("fit", "G pm^-n"),
        ("eos", "m_e c^2"),
        ("star", "g cm^-3"),
        ("mr-curve", "km"),
        ("qspeed", "G pm^-n"),
    ];
    for (sub, unit) in expect {
        let o = landau(&[sub, "--help"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains(unit), "{sub} help lacks {unit}");
    }
    let top = stdout(&landau(&["--help"]));
    for unit in ["G", "pm", "km", "cgs"] {
        assert!(top.contains(unit));
    }
}

#[test]
fn reproduce_table1_report() {
    let dir = scratch("table1");
    let o = landau(&["reproduce", "table1", "-o", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(dir.join("table1_report.csv")).unwrap();
    assert!(report.lines().skip(1).all(|l| l.ends_with("PASS")), "{report}");
    let table = std::fs::read_to_string(dir.join("table1.csv")).unwrap();
    assert_eq!(table.lines().count(), 11);
    assert!(table.lines().next().unwrap().contains("rel_dev_printed"));
}

#[test]
fn star_profile_and_json_curve() {
    let o = landau(&["star", "--profile", "nonmagnetic", "--rho-c", "1e9"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().next().unwrap(), "r_km,M_g,P_cgs,rho_cgs,B_G");
    let o = landau(&[
        "mr-curve",
        "--profile",
        "nonmagnetic",
        "--rho-c-min",
        "1e8",
        "--rho-c-max",
        "1e10",
        "--points",
        "3",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with('['));
}
