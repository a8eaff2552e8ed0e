use std::path::Path;
use std::process::{Command, Output};

use scrforge::io::{read_scr, write_reservoir};
use scrforge::linalg::Matrix;
use scrforge::reservoir::{LinearReadout, LinearReservoir};

fn scrforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scrforge")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn approx_writes_system_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let w = Matrix::from_row_slice(2, 2, &[0.4, 0.1, -0.1, 0.3]);
    let v = Matrix::from_row_slice(2, 1, &[0.5, -0.5]);
    let a = Matrix::from_row_slice(1, 2, &[1.0, 0.25]);
    let r = LinearReservoir::new(w, v, LinearReadout::new(a).unwrap(), 1.0).unwrap();
    let sys = dir.path().join("sys");
    write_reservoir(&r, &sys).unwrap();
    let out = dir.path().join("out");
    let res = scrforge(&[
        "approx", "--system", path(&sys), "--epsilon", "0.2", "--out", path(&out), "--streams", "3",
        "--length", "100",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let scr = read_scr(&out.join("scr")).unwrap();
    assert!(scr.is_full_cycle());
    assert_eq!(scr.lambda(), r.lambda());
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(std::fs::read_to_string(out.join("report.txt")).unwrap().contains("empirical_output_gap"));
}

#[test]
fn matching_exp_writes_csv_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let res = scrforge(&[
        "matching-exp", "--out", path(dir.path()), "--sizes", "4,8", "--samples", "2", "--delta", "0.3",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = std::fs::read_to_string(dir.path().join("matching_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
    assert!(std::fs::read_to_string(dir.path().join("matching.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn dilation_exp_on_synthetic_series() {
    let dir = tempfile::tempdir().unwrap();
    let res = scrforge(&[
        "dilation-exp", "--dataset", "synthetic", "--out", path(dir.path()), "--seeds", "2", "--orders", "2,6",
        "--length", "3000", "--horizon", "10",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = std::fs::read_to_string(dir.path().join("dilation_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(dir.path().join("dilation.svg").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Usage errors.
    assert_eq!(scrforge(&["approx"]).status.code(), Some(2));
    assert_eq!(scrforge(&["nonsense"]).status.code(), Some(2));
    // Bad configuration.
    let res = scrforge(&["matching-exp", "--out", path(dir.path()), "--delta=0"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("delta"));
    let res = scrforge(&["dilation-exp", "--dataset", "ett", "--out", path(dir.path())]);
    assert_eq!(res.status.code(), Some(2));
    let missing = dir.path().join("missing");
    let res = scrforge(&["approx", "--system", path(&missing), "--epsilon", "0.1", "--out", path(dir.path())]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
}
