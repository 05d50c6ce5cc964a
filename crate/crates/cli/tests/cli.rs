use std::process::Command;

fn qptl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qptl"))
}

const CF_CONFIG: &str = r#"
seed = 1

[frequency]
kind = "quadratic"
a = -1
b = 1
d = 5
c = 2

[sampling]
builtin = "constant"
lambda = 0.0

[experiment]
kind = "cf"
terms = 12
kappa = [0.5, 1.0]
"#;

#[test]
fn cf_run_emits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cf.toml");
    std::fs::write(&config_path, CF_CONFIG).unwrap();
    let out = dir.path().join("out");
    let status = qptl()
        .args(["cf", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("cf.csv").exists());
    assert!(out.join("diophantine.csv").exists());
    assert!(out.join("manifest.json").exists());
    assert!(out.join("plots.json").exists());
    let csv = std::fs::read_to_string(out.join("cf.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,a_n,p_n,q_n,abs_err,config_hash");
    assert_eq!(csv.lines().count(), 13); // header + 12 convergents
}

#[test]
fn mismatched_subcommand_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cf.toml");
    std::fs::write(&config_path, CF_CONFIG).unwrap();
    let status = qptl()
        .args(["lyapunov", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    std::fs::write(&config_path, "not = valid config at all [").unwrap();
    let status = qptl()
        .args(["cf", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
