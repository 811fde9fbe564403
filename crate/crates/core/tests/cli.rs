use std::path::Path;
use std::process::{Command, Output};

fn jinxin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jinxin")).args(args).output().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    let out = format!("output.dir = \"{}\"", dir.join("out").display());
    let base = [
        "model.d = 1",
        "model.a = [1.0]",
        "model.eps = 0.25",
        "model.flux = \"quadratic\"",
        "model.flux_coeffs = [1.0]",
        "grid.N = 32",
        "time.t_final = 0.2",
        "time.dt_max = 0.01",
        &out,
    ];
    let key = |line: &str| line.split('=').next().unwrap().trim().to_string();
    let overridden: Vec<String> = extra.lines().map(key).collect();
    let mut lines: Vec<&str> = base.iter().copied().filter(|l| !overridden.contains(&key(l))).collect();
    lines.extend(extra.lines());
    std::fs::write(&path, lines.join("\n")).unwrap();
    path.display().to_string()
}

#[test]
fn successful_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = jinxin(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out").join("snap_000000.bin").exists());
}

#[test]
fn invalid_parameters_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = jinxin(&["simulate", "--config", &cfg, "--eps", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.eps"));

    let cfg = write_config(dir.path(), "grid.N = 30\nbogus.key = 1\n");
    let out = jinxin(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.N") && err.contains("bogus.key"), "{err}");
}

#[test]
fn blow_up_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "init.amplitude = 1000.0\ntime.dt = 0.1\ntime.dt_max = 0.1\ntime.t_final = 5.0\n");
    let out = jinxin(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}
