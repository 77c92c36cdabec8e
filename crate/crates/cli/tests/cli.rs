use std::path::Path;
use std::process::{Command, Output};

fn radar_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radar-sim"))
        .args(args)
        .output()
        .expect("failed to launch radar-sim")
}

fn gen(dir: &Path, name: &str, topology: &str) -> String {
    let path = dir.join(name);
    let out = radar_sim(&[
        "gen-scenario",
        "--radars",
        "3",
        "--targets",
        "6",
        "--topology",
        topology,
        "--seed",
        "4",
        "--steps",
        "15",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_owned()
}

#[test]
fn generate_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", "LINE");
    let again = gen(dir.path(), "s2.json", "LINE");
    assert_eq!(std::fs::read(&scenario).unwrap(), std::fs::read(&again).unwrap());

    let out_dir = dir.path().join("run");
    let out = radar_sim(&[
        "simulate",
        "--scenario",
        &scenario,
        "--out",
        out_dir.to_str().unwrap(),
        "--compare-every",
        "5",
        "--snapshot-every",
        "7",
        "--trace",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("t,total_utility,coverage_main,coverage_optional,mean_load,conflicts\n"));
    assert_eq!(metrics.lines().count(), 16);
    let comparison = std::fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    assert!(comparison.starts_with(
        "t,dec_utility,central_p1,central_p2,ratio_p1,ratio_p2,cov_dec,cov_central,load_dec,load_central\n"
    ));
    assert_eq!(comparison.lines().count(), 4);
    for t in [0, 7, 14] {
        assert!(out_dir.join(format!("snapshot_{t}.svg")).exists());
    }
    let trace = std::fs::read_to_string(out_dir.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 15 * 3 * 2);
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", "COMPLETE");
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = radar_sim(&[
            "simulate",
            "--scenario",
            &scenario,
            "--seed",
            seed,
            "--steps",
            "5",
            "--compare-every",
            "0",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(!out_dir.join("comparison.csv").exists());
        std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap()
    };
    let a = run("1", "a");
    assert_eq!(a.lines().count(), 6);
    assert_eq!(a, run("1", "b"));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = radar_sim(&["simulate", "--scenario", "/nonexistent/s.json"]);
    assert!(!missing.status.success());

    let scenario = gen(dir.path(), "s.json", "LINE");
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&scenario).unwrap()).unwrap();
    json["comm_edges"] = serde_json::json!([]);
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, json.to_string()).unwrap();
    let out = radar_sim(&["simulate", "--scenario", broken.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not connected"));

    let topo = radar_sim(&["gen-scenario", "--radars", "2", "--targets", "1", "--topology", "STAR", "--out", "x.json"]);
    assert!(!topo.status.success());
}
