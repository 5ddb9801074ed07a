use std::path::Path;
use std::process::{Command, Output};

fn mediamod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mediamod"))
        .args(args)
        .env_remove("MEDIAMOD_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV, split into cells.
fn table(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (header, rows)
}

fn num(cell: &str) -> f64 {
    cell.parse().unwrap()
}

#[test]
fn switching_curve_matches_golden_file() {
    let out = stdout(&mediamod(&["switching-curve", "--powers", "0,1e3,1e4", "--n-tx", "100,1e14"]));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/switching_curve.csv");
    assert_eq!(out, std::fs::read_to_string(golden).unwrap());
    let (header, rows) = table(&out);
    assert_eq!(header, ["power_w_per_m2", "n_tx", "p_switch"]);
    assert_eq!(rows.len(), 6);
    assert_eq!(num(&rows[0][2]), 0.0);
    assert!((num(&rows[1][2]) - 0.1126).abs() < 5e-4);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    for args in [
        &["pmf", "--realizations", "300"][..],
        &["ber", "--powers", "1e3,1e5", "--empirical-trials", "20000"][..],
        &["cir", "--times", "lin:15:25:11", "--pbs", "--realizations", "100"][..],
    ] {
        assert_eq!(stdout(&mediamod(args)), stdout(&mediamod(args)), "{args:?}");
    }
}

#[test]
fn seed_flag_changes_monte_carlo_output() {
    let a = stdout(&mediamod(&["pmf", "--realizations", "300", "--seed", "1"]));
    let b = stdout(&mediamod(&["pmf", "--realizations", "300", "--seed", "2"]));
    assert_ne!(a, b);
    assert!(a.contains("# config: seed = 1\n"));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cir.csv");
    let to_stdout = stdout(&mediamod(&["cir", "--times", "0,20,40"]));
    let quiet = stdout(&mediamod(&["cir", "--times", "0,20,40", "--out", path.to_str().unwrap()]));
    assert!(quiet.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), to_stdout);
}

#[test]
fn config_file_and_environment_are_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# slower flow\nflow_v = 0.005\nn_sys = 500\n").unwrap();
    let direct = stdout(&mediamod(&["--config", path.to_str().unwrap(), "validate"]));
    assert!(direct.contains("derived sampling_time_s = 40\n"), "{direct}");
    let via_env = Command::new(env!("CARGO_BIN_EXE_mediamod"))
        .arg("validate")
        .env("MEDIAMOD_CONFIG", &path)
        .output()
        .unwrap();
    assert_eq!(stdout(&via_env), direct);
    let overridden = stdout(&mediamod(&[
        "--config",
        path.to_str().unwrap(),
        "--set",
        "flow_v=0.02",
        "validate",
    ]));
    assert!(overridden.contains("derived sampling_time_s = 10\n"), "{overridden}");
}

#[test]
fn exit_codes() {
    let ok = mediamod(&["validate"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.contains("5.1e-5 m vs l_TX = 0.05 m"), "{text}");
    assert!(text.contains("derived sampling_time_s = 20\n"));

    let failed = mediamod(&["validate", "--set", "flow_v=1"]);
    assert_eq!(failed.status.code(), Some(1));
    assert!(String::from_utf8(failed.stdout).unwrap().contains("check static_assumption"));

    for args in [
        &["validate", "--set", "bogus=1"][..],
        &["validate", "--set", "flow_v=-1"][..],
        &["--config", "/nonexistent/cfg", "validate"][..],
        &["cir", "--times", "3,2,1"][..],
        &["cir", "--times", "0.005", "--pbs", "--realizations", "2"][..],
        &["pmf", "--bit", "2"][..],
        &["ber", "--n-sys", "1.5"][..],
        &["frobnicate"][..],
    ] {
        let out = mediamod(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn cir_peaks_at_sampling_time() {
    let out = stdout(&mediamod(&["cir", "--set", "irradiance_on=1e5"]));
    let (header, rows) = table(&out);
    assert_eq!(header, ["t_s", "h_analytic", "cir_analytic"]);
    let peak = rows
        .iter()
        .max_by(|a, b| num(&a[2]).total_cmp(&num(&b[2])))
        .unwrap();
    assert_eq!(num(&peak[0]), 20.0);
}

#[test]
fn pmf_for_zero_bit_is_a_point_mass() {
    let out = stdout(&mediamod(&["pmf", "--bit", "0", "--realizations", "50"]));
    let (_, rows) = table(&out);
    assert_eq!(rows, vec![vec!["0", "1", "1"]]);
    assert!(out.ends_with("# tv_distance = 0\n"));
}

#[test]
fn pmf_columns_are_normalized() {
    let out = stdout(&mediamod(&["pmf", "--realizations", "2000"]));
    let (header, rows) = table(&out);
    assert_eq!(header, ["k", "pmf_analytic", "pmf_empirical"]);
    let empirical: f64 = rows.iter().map(|r| num(&r[2])).sum();
    let analytic: f64 = rows.iter().map(|r| num(&r[1])).sum();
    assert!((empirical - 1.0).abs() < 1e-12);
    assert!((analytic - 1.0).abs() < 1e-9);
    let mode = rows.iter().max_by(|a, b| num(&a[1]).total_cmp(&num(&b[1]))).unwrap();
    assert_eq!(mode[0], "11");
}

#[test]
fn ber_reaches_the_error_floor() {
    let out = stdout(&mediamod(&["ber"]));
    let (header, rows) = table(&out);
    assert_eq!(header, ["power_w_per_m2", "n_sys", "p_switch", "p_r", "ber_analytic"]);
    assert_eq!(rows.len(), 75);
    let floor_row = &rows[24];
    assert_eq!(floor_row[1], "10");
    assert!((num(&floor_row[4]) - 0.5 * 0.9001f64.powi(10)).abs() < 1e-12);
    for n in ["10", "50", "100"] {
        let curve: Vec<f64> = rows.iter().filter(|r| r[1] == n).map(|r| num(&r[4])).collect();
        assert!(curve.windows(2).all(|w| w[1] <= w[0]), "N_sys {n}");
    }
    let derived = stdout(&mediamod(&["ber", "--derived", "--powers", "1e3", "--n-sys", "1000"]));
    let (_, rows) = table(&derived);
    assert!((num(&rows[0][3]) - 0.011249).abs() < 1e-5, "{:?}", rows[0]);
}
