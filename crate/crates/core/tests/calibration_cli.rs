use std::fs;
use std::path::Path;

use carbonlab::calibration::{growth_report, load_series, save_series, GrowthMethod};
use carbonlab::cli;

fn fixture() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/sample_series.csv"
    ))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["carbonlab"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn fixture_round_trips_bit_identically() {
    let series = load_series(fixture()).unwrap();
    assert_eq!(series.year.len(), 23);
    assert_eq!(series.year[0], 2000);
    assert!(series.absent_columns().is_empty());
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("copy.csv");
    save_series(&series, &copy).unwrap();
    assert_eq!(fs::read(&copy).unwrap(), fs::read(fixture()).unwrap());
    assert_eq!(load_series(&copy).unwrap(), series);
}

#[test]
fn fixture_gdp_growth_is_near_model_rate() {
    let series = load_series(fixture()).unwrap();
    for method in [GrowthMethod::Arithmetic, GrowthMethod::Geometric] {
        let rep = growth_report(&series, method).unwrap();
        let (_, param, rate) = rep.rates.iter().find(|r| r.0 == "gdp").unwrap();
        assert_eq!(*param, "mu");
        assert!((rate - 0.02145).abs() < 0.002, "{rate}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);

    let (code, _, err) = run(&["gsa", "--samples", "10"]);
    assert_eq!(code, 1);
    assert!(err.contains("samples must be > 17"), "{err}");

    let (code, _, err) = run(&["simulate", "--set", "epsilon=0"]);
    assert_eq!(code, 1);
    assert!(err.contains("epsilon must be positive"), "{err}");

    let (code, _, err) = run(&["simulate", "--set", "bogus=1"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown config key"), "{err}");

    let (code, _, _) = run(&[
        "simulate",
        "--set",
        "K=1e-300",
        "--x0",
        "130,0.121,1e10,80",
        "--t-end",
        "10",
    ]);
    assert_eq!(code, 2);

    let (code, _, _) = run(&["estimate", "--data", "/nonexistent/file.csv"]);
    assert_eq!(code, 1);
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# scenario\nphi = 0.007\ndt = 0.1\nt_end = 1\nC0 = 200\n",
    )
    .unwrap();
    let cfg_s = cfg.to_str().unwrap();

    let (code, out, _) = run(&["simulate", "--config", cfg_s]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "t,C,G,F,N");
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[1], "0,200,0.121,1003,80");

    let (_, out, _) = run(&[
        "simulate", "--config", cfg_s, "--dt", "0.5", "--set", "C0=150",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[1], "0,150,0.121,1003,80");

    let (_, with_file, _) = run(&["simulate", "--config", cfg_s]);
    let (_, explicit, _) = run(&[
        "simulate",
        "--set",
        "phi=0.007",
        "--dt",
        "0.1",
        "--t-end",
        "1",
        "--x0",
        "200,0.121,1003,80",
    ]);
    assert_eq!(with_file, explicit);
}

#[test]
fn equilibria_report_lists_all_four() {
    let (code, out, _) = run(&["equilibria"]);
    assert_eq!(code, 0);
    for tag in ["[E1]", "[E2]", "[E3]", "[E4]"] {
        assert!(out.contains(tag));
    }
    assert_eq!(out.matches("G = 26.8125\n").count(), 4);
}

#[test]
fn sweep_and_control_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, _) = run(&[
        "sweep",
        "--param",
        "pi_coeff",
        "--values",
        "0.0005,0.0006",
        "--t-end",
        "5",
        "--out-dir",
        d,
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
    let first = fs::read_to_string(dir.path().join("sweep_pi_coeff_0.csv")).unwrap();
    assert!(first.starts_with("t,C,G,F,N\n0,130,0.121,1003,80\n"));

    let (code, out, _) = run(&["control", "--tf", "10", "--out-dir", d]);
    assert_eq!(code, 0);
    assert!(out.starts_with("J="));
    let control = fs::read_to_string(dir.path().join("control.csv")).unwrap();
    assert!(control.starts_with("t,u,C,G,F,N,lam1,lam2,lam3,lam4\n"));
    assert_eq!(control.lines().count(), 202);
    let baseline = fs::read_to_string(dir.path().join("baseline.csv")).unwrap();
    assert!(baseline
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0,0.0008,130,"));
}
