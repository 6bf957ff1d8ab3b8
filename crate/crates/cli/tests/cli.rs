use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cmclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmclab")).args(args).output().unwrap()
}

const SOLVE: &str = r#"{
    "schema": "cmclab/1",
    "model": {"tau": "0.3"},
    "experiment": {"solve": {
        "grid": {"rho_min": "0.5", "rho_max": "2", "n_rho": 17, "n_theta": 16},
        "sigma": {"rho_max": "3"}
    }}
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_succeeds_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "solve.json", SOLVE);
    let out = dir.path().join("out");
    let o = cmclab(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").exists());
    assert!(out.join("solution.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad = write(dir.path(), "bad.json", r#"{"schema": "cmclab/1"}"#);
    assert_eq!(
        cmclab(&["solve", "--config", &bad, "--out", out]).status.code(),
        Some(2)
    );

    let cfg = write(dir.path(), "solve.json", SOLVE);
    assert_eq!(
        cmclab(&["foliate", "--config", &cfg, "--out", out]).status.code(),
        Some(2)
    );

    let missing = dir.path().join("missing.json");
    let o = cmclab(&["solve", "--config", missing.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(4));

    let stuck = SOLVE.replace(
        r#""model""#,
        r#""solver": {"max_newton": 1, "newton_tol": "1e-14"}, "model""#,
    );
    let stuck = write(dir.path(), "stuck.json", &stuck);
    let o = cmclab(&["solve", "--config", &stuck, "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(Path::new(out).join("failure.json").exists());

    assert_eq!(cmclab(&["nonsense", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "solve.json", SOLVE);
    let out = dir.path().join("out");
    let o = cmclab(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "17",
    ]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 17);
}
