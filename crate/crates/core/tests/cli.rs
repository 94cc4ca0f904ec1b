use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lpcontrol")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const SMALL: &str = "[diffusion]\nn_space = 31\nn_time = 60\n";

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["--mode", "bogus"]).0, 1);
    assert_eq!(run(&["--unknown"]).0, 1);
    assert_eq!(run(&["--lambda-list", "1,x"]).0, 1);
    assert_eq!(run(&["--config", "/nonexistent/config.toml"]).0, 1);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "a.toml", "[diffusion]\nnspace = 3\n");
    let (code, text) = run(&["--config", &unknown]);
    assert_eq!(code, 1, "{text}");
    let bad = write(dir.path(), "b.toml", "[diffusion]\neta = -1.0\n");
    let (code, text) = run(&["--config", &bad]);
    assert_eq!(code, 1);
    assert!(text.contains("diffusion.eta"), "{text}");
    let out = dir.path().join("out").display().to_string();
    let small = write(dir.path(), "c.toml", SMALL);
    assert_eq!(run(&["--config", &small, "--mode", "linear", "--out", &out, "--lambda-list", "0.1,1"]).0, 1);
}

#[test]
fn linear_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("out");
    let (code, text) = run(&[
        "--config",
        &cfg,
        "--mode",
        "linear",
        "--out",
        out.to_str().unwrap(),
        "--lambda-list",
        "1,0.1,0.01",
    ]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(out.join("linear_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    assert!(out.join("timings.json").exists());
}

#[test]
fn degenerate_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}input = \"zero\"\n"));
    let out = dir.path().join("out");
    let (code, text) = run(&["--config", &cfg, "--mode", "semilinear", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{text}");
    assert!(!out.join("semilinear_sweep.csv").exists());
}

#[test]
fn readme_config_block_is_the_default() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```toml\n").unwrap() + "```toml\n".len();
    let block = &readme[start..start + readme[start..].find("```").unwrap()];
    let cfg = lpcontrol::harness::ExperimentConfig::from_toml_str(block).unwrap();
    assert_eq!(cfg, lpcontrol::harness::ExperimentConfig::default());
}
