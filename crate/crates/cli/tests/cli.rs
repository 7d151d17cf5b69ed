use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn secna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secna")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_scenario(dir: &Path) -> String {
    let path = dir.join("scenario.json");
    fs::write(
        &path,
        r#"{"angles_deg":[-20.0,10.0,35.0],"powers":[1.0,1.0,1.0],"noise_power":0.1,"snapshots":500,"seed":7}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn design_emits_layout_json() {
    let o = secna(&["design", "secna:5,3"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["design"], "secna");
    assert_eq!(doc["positions"].as_array().unwrap().len(), 15);
    assert_eq!(doc["positions"][0], 32.0);
}

#[test]
fn saved_design_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("layout.json");
    let o = secna(&["design", "secna:3,4", "--out", layout.to_str().unwrap()]);
    assert!(o.status.success());
    let o = secna(&["coarray", &format!("@{}", layout.display())]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("# sensors=13 dof=219 lo=-109 hi=109 vaa=314\n"));
}

#[test]
fn coarray_kinds() {
    let dca = stdout(&secna(&["coarray", "ula:3", "--kind", "dca"]));
    assert_eq!(dca, "lag,weight\n-2,1\n-1,2\n0,3\n1,2\n2,1\n# sensors=3 dof=5 lo=-2 hi=2 vaa=4\n");
    let sca = stdout(&secna(&["coarray", "ula:2", "--kind", "sca"]));
    assert!(sca.starts_with("lag,weight\n-2,1\n-1,2\n0,1\n1,2\n2,1\n"));
}

#[test]
fn dof_table_matches_reference_rows() {
    let o = secna(&["dof-table"]);
    assert!(o.status.success());
    let t: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let secna: Vec<u64> = t["rows"].as_array().unwrap().iter().map(|r| r["secna"]["value"].as_u64().unwrap()).collect();
    assert_eq!(secna, [111, 219, 441, 645, 873]);
}

#[test]
fn estimate_recovers_sources() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path());
    let spectrum = dir.path().join("spectrum.csv");
    let o = secna(&["estimate", "secna:2,3", "--scenario", &scn, "--out", spectrum.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let peaks: Vec<f64> = v["peaks"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    assert_eq!(peaks.len(), 3);
    for (e, t) in peaks.iter().zip([-20.0, 10.0, 35.0]) {
        assert!((e - t).abs() <= 0.5, "{peaks:?}");
    }
    let csv = fs::read_to_string(spectrum).unwrap();
    assert!(csv.starts_with("angle,power\n-89.9,"));
    assert_eq!(csv.lines().count(), 1 + 1799);
}

#[test]
fn simulate_writes_extended_rows() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path());
    let plain = stdout(&secna(&["simulate", "ula:2", "--scenario", &scn]));
    let ext = stdout(&secna(&["simulate", "ula:2", "--scenario", &scn, "--extended"]));
    assert!(plain.starts_with("t,x0_re,x0_im,x1_re,x1_im\n"));
    assert!(ext.starts_with("t,x0_re,x0_im,x1_re,x1_im,x2_re,x2_im,x3_re,x3_im\n"));
    assert_eq!(plain.lines().count(), 501);
}

#[test]
fn sweep_is_reproducible() {
    let args = [
        "sweep-snr", "--seed", "9", "--trials", "3", "--values", "-5,10", "--fixed", "300", "--q", "3", "--array",
        "secna:2,3", "--array", "nested:2,3", "--grid-step", "0.5",
    ];
    let a = secna(&args);
    let b = secna(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    assert!(csv.starts_with("sweep_value,array,rmse,failures\n-5,\"secna:2,3\","));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn snapshot_sweep_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = secna(&[
        "sweep-snapshots", "--trials", "2", "--values", "100,400", "--q", "2", "--array", "ula:6", "--grid-step", "1",
        "--report", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["points"].as_array().unwrap().len(), 2);
}

#[test]
fn parameter_errors_exit_two() {
    assert_eq!(secna(&["design", "secna:2,4"]).status.code(), Some(2));
    assert_eq!(secna(&["design", "bogus:1"]).status.code(), Some(2));
    assert_eq!(secna(&["estimate", "ula:4", "--scenario", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(secna(&["sweep-snapshots", "--values", "10.5"]).status.code(), Some(2));
    assert_eq!(secna(&["frobnicate"]).status.code(), Some(2));

    // Asking a 2-sensor ULA for more sources than its virtual aperture supports.
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path());
    let o = secna(&["estimate", "ula:2", "--scenario", &scn, "--q", "3"]);
    assert_eq!(o.status.code(), Some(2));
}
