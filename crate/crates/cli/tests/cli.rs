use std::fs;
use std::process::{Command, Output};

fn iics(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iics"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_prints_the_three_moes() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    fs::write(&scen, r#"{"arrivals": {"horizon_s": 120}}"#).unwrap();
    let o = iics(&["run", "--scenario", scen.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    for key in ["avg travel time", "avg delay", "avg effective green"] {
        assert!(s.contains(key), "{s}");
    }
    assert!(s.contains("controller: iics"));

    let o = iics(&["run", "--scenario", scen.to_str().unwrap(), "--controller", "actuated"]);
    assert!(stdout(&o).contains("controller: actuated"));
}

#[test]
fn missing_scenario_names_the_path() {
    let o = iics(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/scenario.json"));
}

#[test]
fn output_is_not_overwritten_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    fs::write(&scen, r#"{"arrivals": {"horizon_s": 60}}"#).unwrap();
    let out = dir.path().join("r.json");
    fs::write(&out, "keep").unwrap();
    let o = iics(&["run", "--scenario", scen.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "keep");
    let o = iics(&["run", "--scenario", scen.to_str().unwrap(), "--out", out.to_str().unwrap(), "--force"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["moes"]["throughput"].is_u64());
    assert!(v["result"]["vehicles"].is_array());
}

#[test]
fn one_cell_sweep_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = iics(&[
        "sweep", "--ranges", "800", "--av-ratios", "0.5", "--headways", "40", "--saturation-headways", "1.5",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("detection_range_ft,av_ratio,mean_headway_s"));
    assert!(lines[1].starts_with("800,0.5,40,1.5,42,iics,"));
}

#[test]
fn compare_writes_paired_rows() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    fs::write(&scen, r#"{"arrivals": {"horizon_s": 150}}"#).unwrap();
    let out = dir.path().join("cmp.csv");
    let o = iics(&[
        "compare", "--scenario", scen.to_str().unwrap(), "--headways", "20,40", "--seeds", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("detection_range_ft,av_ratio,mean_headway_s,saturation_headway_s,seed,iics_tt_per_mile_s"));
}

#[test]
fn solve_reports_delay_and_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let base = r#""d0": 1000, "v0": 58.666666666666664, "t0": 0, "v_max": 58.666666666666664, "v_cross": 58.666666666666664,
        "a_max_dec": -15, "a_max_acc": 10, "v_des": 58.666666666666664"#;
    fs::write(&p, format!(r#"{{{base}, "green_windows": [{{"start": 0, "end": 60}}]}}"#)).unwrap();
    let o = iics(&["solve", p.to_str().unwrap(), "--verify", "--grid", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("\"delay\": 0"), "{s}");
    assert!(s.contains("oracle delay"));

    fs::write(&p, format!(r#"{{{base}, "green_windows": [{{"start": 0, "end": 5}}]}}"#)).unwrap();
    let o = iics(&["solve", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o).trim(), "infeasible");

    fs::write(&p, "{").unwrap();
    let o = iics(&["solve", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn range_examples() {
    let o = iics(&["range", "--v0", "58.667", "--v-cross", "44", "--accel", "-15", "--dt-serve", "0.1"]);
    assert_eq!(stdout(&o).trim(), "min detection range: 56.06 ft");
    let o = iics(&["range", "--v0", "50", "--v-cross", "50", "--dt-serve", "0"]);
    assert_eq!(stdout(&o).trim(), "min detection range: 0.00 ft");
    let o = iics(&["range", "--v0-mph", "44", "--v-cross", "0", "--against", "100"]);
    assert!(stdout(&o).ends_with("infeasible\n"));
    let o = iics(&["range", "--v0", "abc", "--v-cross", "0"]);
    assert!(!o.status.success());
}
