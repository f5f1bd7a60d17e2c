use csvortex::cli::{run_command, EXIT_CONFIG, EXIT_OK};

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["csvortex"];
    argv.extend_from_slice(args);
    run_command(argv)
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"eps\": [0.1,\n}").unwrap();
    assert_eq!(run(&["solve-mixed", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn excluded_case_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("excluded.json");
    std::fs::write(&cfg, r#"{"model": {"a": 2, "b": 1, "p": [[1, 0], [-1, 0]]}}"#).unwrap();
    assert_eq!(run(&["solve-mixed", "--config", cfg.to_str().unwrap(), "--eps", "0.05"]), EXIT_CONFIG);
}

#[test]
fn bad_eps_list_exits_with_two() {
    assert_eq!(run(&["solve-mixed", "--eps", "0.01,0.02"]), EXIT_CONFIG);
    assert_eq!(run(&["no-such-command"]), EXIT_CONFIG);
}

#[test]
fn shooting_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["shoot-radial", "--s1", "-20", "--s2", "-20", "--out", out]), EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}_shoot.json")).unwrap()).unwrap();
    assert_eq!(summary["classification"], "NonTopological");
    let csv = std::fs::read_to_string(format!("{out}_trajectory.csv")).unwrap();
    assert!(csv.starts_with("r,u1,du1,u2,du2\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn topological_solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("topo.json");
    std::fs::write(&cfg, r#"{"model": {"group": "SU3", "p": [[0, 0]]}}"#).unwrap();
    let out = dir.path().join("t");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["solve-topological", "--config", cfg.to_str().unwrap(), "--out", out]), EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}_topological.json")).unwrap()).unwrap();
    let flux = summary["flux"].as_f64().unwrap();
    // flux is reported in units of 4 pi
    assert!((flux - 1.0).abs() < 1e-2, "flux {flux}");
}

#[test]
fn mixed_solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mixed.json");
    std::fs::write(&cfg, r#"{"model": {"group": "SU3", "p": [[0, 0]]}}"#).unwrap();
    let outs: Vec<String> = ["a", "b"]
        .iter()
        .map(|s| {
            let out = dir.path().join(s).to_str().unwrap().to_string();
            let code = run(&["solve-mixed", "--config", cfg.to_str().unwrap(), "--eps", "0.05", "--out", &out]);
            assert_eq!(code, EXIT_OK);
            std::fs::read_to_string(format!("{out}_eps0.json")).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert!(outs[0].contains("\"status\": \"converged\""));
}
