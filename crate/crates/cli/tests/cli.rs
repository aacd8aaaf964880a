use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphpq")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn check_passes_on_sample_problem() {
    let out = run(&["check", "--problem", &config("fractional.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("validation: valid"));
    assert!(text.contains("summation by parts"));
}

#[test]
fn check_rejects_disconnected_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("split.json");
    std::fs::write(
        &graph,
        r#"{"vertices":[{"id":"a","mu":1},{"id":"b","mu":1},{"id":"c","mu":1}],"edges":[{"u":"a","v":"b","w":1}]}"#,
    )
    .unwrap();
    let out = run(&["check", "--graph", graph.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("disconnected"));
}

#[test]
fn params_prints_log_quartic_constants() {
    let out = run(&["params", "--problem", &config("log-quartic.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "M = 4.75"), "{text}");
    assert!(text.lines().any(|l| l == "M_threshold = 3.75"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("D1 = 6 at c")), "{text}");
    for key in ["Lambda0 = ", "lambda0 = ", "rho = ", "alpha = ", "D3 = ", "D4 = "] {
        assert!(text.lines().any(|l| l.starts_with(key)), "{key} missing");
    }
}

#[test]
fn audit_reports_conditions() {
    let out = run(&["audit", "--problem", &config("log-quartic.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("C3     holds"), "{text}");
    assert!(text.contains("C4     discrepancy"), "{text}");
}

#[test]
fn solve_sub_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("frac.json");
    let report_arg = report.to_str().unwrap();
    let out = run(&["solve", "--problem", &config("fractional.json"), "--mode", "sub", "--out", report_arg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json = std::fs::read_to_string(&report).unwrap();
    assert!(json.contains("\"classification\": \"nontrivial\""));
    assert!(json.contains("\"mode\": \"minimize\""));
    let csv = std::fs::read_to_string(dir.path().join("frac.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("vertex_id,u,v,r_u,r_v"));
    assert_eq!(csv.lines().count(), 10);

    let out = run(&["verify", "--problem", &config("fractional.json"), report_arg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let line = stdout(&out).lines().next().unwrap().to_owned();
    let values: Vec<&str> = line.split(", ").map(|part| part.rsplit(' ').next().unwrap()).collect();
    assert_eq!(values[0], values[1], "{line}");
}

#[test]
fn identical_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.json"), dir.path().join("b.json")];
    for path in &paths {
        let out = run(&[
            "solve",
            "--problem",
            &config("log-quartic.json"),
            "--mode",
            "super-mp",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_eq!(
        std::fs::read(paths[0].with_extension("csv")).unwrap(),
        std::fs::read(paths[1].with_extension("csv")).unwrap()
    );
}

#[test]
fn iteration_cap_exits_with_nonconvergence() {
    let out = run(&["solve", "--problem", &config("fractional.json"), "--mode", "sub", "--max-iters", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("\"residual_sup\""), "the best report is still emitted");
}

#[test]
fn missing_graph_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    std::fs::write(&problem, r#"{"graph": "nowhere.json", "preset": {"name": "fractional", "x1": "v2", "x2": "v6", "lambda1": 1, "lambda2": 1}}"#)
        .unwrap();
    let out = run(&["params", "--problem", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nowhere.json"));
}

#[test]
fn malformed_config_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    std::fs::write(&problem, "{\"graph\": ").unwrap();
    let out = run(&["audit", "--problem", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn lambda_out_of_range_is_a_validation_failure() {
    let out = run(&["solve", "--problem", &config("log-quartic.json"), "--mode", "super-ball", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("lambda0"));
}

#[test]
fn grad_check_accepts_consistent_expressions() {
    let out = run(&["grad-check", "--problem", &config("fractional-expr.json"), "--states", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn grad_check_flags_inconsistent_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let graph = config("path9.json");
    let problem = dir.path().join("wrong.json");
    std::fs::write(
        &problem,
        format!(
            r#"{{"graph": "{graph}", "p": 2, "q": 2, "h1": {{"constant": 1}}, "e1": {{"constant": 1}},
                "lambda1": 1, "F": {{"expr": {{"F": "s^4", "Fs": "3*s^3", "Ft": "0"}}}}}}"#
        ),
    )
    .unwrap();
    let out = run(&["grad-check", "--problem", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn mode_is_required_for_solve() {
    let out = run(&["solve", "--problem", &config("fractional.json")]);
    assert_eq!(out.status.code(), Some(3));
}
