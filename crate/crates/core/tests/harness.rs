//! Integration tests for the experiment harness: multi-axis sweeps,
//! budget gating, and output layout.

use qptl_core::harness::{parse_config_str, run_experiment, HarnessError};

const BASE: &str = r#"
seed = 11

[frequency]
kind = "quadratic"
a = -1
b = 1
d = 5
c = 2

[sampling]
builtin = "constant"
lambda = 0.0
"#;

fn with_experiment(experiment: &str) -> String {
    format!("{BASE}\n{experiment}")
}

#[test]
fn multi_axis_lyapunov_sweep_emits_one_row_per_point() {
    let config = parse_config_str(&with_experiment(
        r#"
[experiment]
kind = "lyapunov"
energy = { min = -1.0, max = 1.0, count = 4 }
theta = { min = 0.0, max = 0.75, count = 4 }
k = [50, 100, 200]
"#,
    ))
    .unwrap();
    let dir = std::env::temp_dir().join(format!("qptl-harness-sweep-{}", std::process::id()));
    let manifest = run_experiment(&config, &dir, 2).unwrap();
    assert_eq!(manifest.tasks.len(), 16);
    assert_eq!(manifest.failed_tasks(), 0);
    let csv = std::fs::read_to_string(dir.join("lyapunov.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17, "header plus 16 grid points");
    assert!(csv.lines().next().unwrap().ends_with("config_hash"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn budget_gate_fires_before_compute() {
    let text = format!(
        "budget = 100\n{}",
        with_experiment(
            r#"
[experiment]
kind = "lyapunov"
energy = { min = -1.0, max = 1.0, count = 40 }
theta = { min = 0.0, max = 0.9, count = 40 }
k = [50, 100, 200]
"#,
        )
    );
    let config = parse_config_str(&text).unwrap();
    let dir = std::env::temp_dir().join(format!("qptl-harness-budget-{}", std::process::id()));
    let err = run_experiment(&config, &dir, 1).unwrap_err();
    assert!(matches!(err, HarnessError::BudgetExceeded { tasks: 1600, budget: 100 }));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn manifest_accounts_for_every_task() {
    let config = parse_config_str(&with_experiment(
        r#"
[experiment]
kind = "vset"
energy = 3.0
k = [20, 40]
level = [-0.1, 0.1, 0.9]
theta_grid = 1000
"#,
    ))
    .unwrap();
    let dir = std::env::temp_dir().join(format!("qptl-harness-vset-{}", std::process::id()));
    let manifest = run_experiment(&config, &dir, 3).unwrap();
    assert_eq!(manifest.tasks.len(), 6); // 2 k × 3 levels
    let manifest_text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest_text).unwrap();
    assert_eq!(parsed["tasks"].as_array().unwrap().len(), 6);
    assert_eq!(parsed["config_hash"], serde_json::json!(config.hash()));
    // free cocycle at z = 3: every phase grows, none at rate below -0.1
    let csv = std::fs::read_to_string(dir.join("vset.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let level: f64 = cols[1].parse().unwrap();
        let measure: f64 = cols[2].parse().unwrap();
        if level < 0.0 {
            assert_eq!(measure, 1.0);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fejer_experiment_reports_decaying_error() {
    let text = r#"
seed = 1

[frequency]
kind = "quadratic"
a = -1
b = 1
d = 5
c = 2

[sampling]
builtin = "holder"
lambda = 1.0
gamma = 0.5

[experiment]
kind = "fejer"
degree_min = 16
degree_max = 256
probe = 2048
"#;
    let config = parse_config_str(text).unwrap();
    let dir = std::env::temp_dir().join(format!("qptl-harness-fejer-{}", std::process::id()));
    run_experiment(&config, &dir, 1).unwrap();
    let csv = std::fs::read_to_string(dir.join("fejer.csv")).unwrap();
    let mut errs: Vec<(u64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().unwrap(), cols[1].parse().unwrap())
        })
        .collect();
    errs.sort_by_key(|&(n, _)| n);
    assert_eq!(errs.len(), 5); // 16, 32, 64, 128, 256
    assert!(errs.last().unwrap().1 < errs.first().unwrap().1 / 2.0);
    std::fs::remove_dir_all(&dir).ok();
}
