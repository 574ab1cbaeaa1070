use std::path::Path;
use std::process::{Command, Output};

fn robustmix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robustmix")).args(args).current_dir(dir).env_remove("ROBUSTMIX_SEED").output().unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = robustmix(
        dir.path(),
        &["gen", "--width", "3", "--height", "3", "--scenarios", "12", "--out-graph", "g.txt", "--out-scenarios", "s.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(
        dir.path().join("mix.json"),
        r#"{"components":[{"weight":1,"type":"hull","lambda":0.5},{"weight":0.5,"type":"ellipsoid","lambda":1.5}]}"#,
    )
    .unwrap();
    dir
}

fn solve(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", "--graph", "g.txt", "--scenarios", "s.csv", "--mixture", "mix.json", "--out", "sol.csv"];
    args.extend_from_slice(extra);
    robustmix(dir, &args)
}

#[test]
fn solve_prints_objective_and_writes_csv() {
    let dir = setup();
    let out = solve(dir.path(), &["--source", "0", "--target", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("source=0 target=8 objective="), "{stdout}");
    assert!(stdout.trim_end().ends_with("optimal=true"));
    let csv = std::fs::read_to_string(dir.path().join("sol.csv")).unwrap();
    assert!(csv.starts_with("source,target,method,objective,optimal,arcs\n0,8,bnb,"), "{csv}");
    assert!(dir.path().join("sol.csv.manifest.json").exists());
}

#[test]
fn unreachable_target_exits_3() {
    let dir = setup();
    let out = solve(dir.path(), &["--source", "8", "--target", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exhausted_node_limit_exits_4() {
    let dir = setup();
    let out = solve(dir.path(), &["--source", "0", "--target", "8", "--method", "bnb", "--node-limit", "0"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8(out.stdout).unwrap().contains("optimal=false"));
}

#[test]
fn parametric_rejects_correlated_ellipsoid() {
    let dir = setup();
    std::fs::write(dir.path().join("mix.json"), r#"{"components":[{"weight":1,"type":"ellipsoid","lambda":1}]}"#).unwrap();
    let out = solve(dir.path(), &["--source", "0", "--target", "8", "--method", "parametric"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("parametric method needs a diagonal covariance"));
}

#[test]
fn bad_input_exits_2() {
    let dir = setup();
    std::fs::write(dir.path().join("mix.json"), "{").unwrap();
    assert_eq!(solve(dir.path(), &["--source", "0", "--target", "8"]).status.code(), Some(2));
    assert_eq!(robustmix(dir.path(), &["solve", "--bogus"]).status.code(), Some(2));
}

#[test]
fn seed_comes_from_environment() {
    let dir = setup();
    let run = |seed: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_robustmix"))
            .args(["pairs", "--graph", "g.txt", "--count", "3", "--min-hops", "2", "--out", out])
            .current_dir(dir.path())
            .env("ROBUSTMIX_SEED", seed)
            .output()
            .unwrap();
        std::fs::read_to_string(dir.path().join(format!("{out}.manifest.json"))).unwrap()
    };
    assert!(run("7", "a.csv").contains("\"seed\": 7"));
}

#[test]
fn verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = robustmix(dir.path(), &["verify", "--suite", "all", "--cases", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
