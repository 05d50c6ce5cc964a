//! Experiment configuration: a strict key-tree (TOML) schema. Unknown
//! keys are errors — silent typos corrupt physics parameters.

use crate::arithmetic::FrequencySpec;
use crate::sampling::SamplingSpec;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A parameter grid: either explicit values or a described range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Explicit(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        scale: GridScale,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Geometric,
}

impl GridSpec {
    pub fn resolve(&self) -> Result<Vec<f64>, String> {
        match self {
            GridSpec::Explicit(v) => {
                if v.is_empty() {
                    Err("grid is empty".into())
                } else {
                    Ok(v.clone())
                }
            }
            GridSpec::Range { min, max, count, scale } => {
                if *count == 0 {
                    return Err("grid count must be >= 1".into());
                }
                if max < min {
                    return Err("grid max must be >= min".into());
                }
                match scale {
                    GridScale::Linear => Ok(crate::util::linear_grid(*min, *max, *count)),
                    GridScale::Geometric => {
                        if *min <= 0.0 {
                            Err("geometric grid needs min > 0".into())
                        } else {
                            Ok(crate::util::geometric_grid(*min, *max, *count))
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub abel: f64,
    pub tail: f64,
    pub unitarity: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { abel: 1e-8, tail: 1e-8, unitarity: 1e-8, quadrature: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into() }
    }
}

/// Experiment selector plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentKind {
    Lyapunov {
        energy: GridSpec,
        #[serde(default = "default_k_list")]
        k: Vec<i64>,
        #[serde(default = "default_theta_grid")]
        theta_grid: usize,
        /// optional θ axis: per-θ Birkhoff estimates instead of grid means
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<GridSpec>,
        #[serde(default)]
        crosscheck: bool,
    },
    Phi {
        energy: f64,
        /// replace `energy` by the nearest eigenvalue of a 2001-site box
        #[serde(default)]
        on_spectrum: bool,
        zeta: f64,
        delta: f64,
        time: GridSpec,
        #[serde(default = "default_phi_theta")]
        theta_count: usize,
        #[serde(default = "default_phi_z")]
        boundary_z_count: usize,
    },
    GrowthSite {
        energy: f64,
        #[serde(default)]
        on_spectrum: bool,
        tau: f64,
        k: i64,
        #[serde(default = "default_gs_thetas")]
        theta_count: usize,
        #[serde(default = "default_cf_terms")]
        cf_terms: usize,
        #[serde(default = "default_shift_cap")]
        shift_cap: u64,
    },
    Vset {
        energy: f64,
        #[serde(default)]
        on_spectrum: bool,
        k: Vec<i64>,
        level: Vec<f64>,
        #[serde(default = "default_vset_grid")]
        theta_grid: usize,
    },
    Transport {
        theta: f64,
        p: Vec<f64>,
        zeta: Vec<f64>,
        delta: Vec<f64>,
        time: GridSpec,
    },
    Ids {
        #[serde(default = "default_ids_thetas")]
        theta_count: usize,
        half_width: usize,
    },
    Kkl {
        theta: f64,
        time: Vec<f64>,
        l1: f64,
        l2: f64,
        half_width: usize,
    },
    Dtcheck {
        theta: f64,
        time: GridSpec,
        zeta: f64,
        /// spectral bound K; derived from the sampling sup when absent
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_bound: Option<f64>,
    },
    Fejer {
        degree_min: usize,
        degree_max: usize,
        #[serde(default = "default_fejer_probe")]
        probe: usize,
    },
    Cf {
        terms: usize,
        kappa: Vec<f64>,
    },
}

fn default_k_list() -> Vec<i64> {
    vec![125, 250, 500, 1000]
}
fn default_theta_grid() -> usize {
    1024
}
fn default_phi_theta() -> usize {
    64
}
fn default_phi_z() -> usize {
    16
}
fn default_gs_thetas() -> usize {
    100
}
fn default_cf_terms() -> usize {
    120
}
fn default_shift_cap() -> u64 {
    1 << 20
}
fn default_vset_grid() -> usize {
    2048
}
fn default_ids_thetas() -> usize {
    8
}
fn default_fejer_probe() -> usize {
    8192
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Lyapunov { .. } => "lyapunov",
            ExperimentKind::Phi { .. } => "phi",
            ExperimentKind::GrowthSite { .. } => "growth-site",
            ExperimentKind::Vset { .. } => "vset",
            ExperimentKind::Transport { .. } => "transport",
            ExperimentKind::Ids { .. } => "ids",
            ExperimentKind::Kkl { .. } => "kkl",
            ExperimentKind::Dtcheck { .. } => "dtcheck",
            ExperimentKind::Fejer { .. } => "fejer",
            ExperimentKind::Cf { .. } => "cf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_count: Option<usize>,
    /// ceiling on the task-grid cardinality
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub frequency: FrequencySpec,
    pub sampling: SamplingSpec,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}
fn default_budget() -> usize {
    100_000
}

impl ExperimentConfig {
    /// All violations, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            v.push(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        for (name, value) in [
            ("tolerances.abel", self.tolerances.abel),
            ("tolerances.tail", self.tolerances.tail),
            ("tolerances.unitarity", self.tolerances.unitarity),
            ("tolerances.quadrature", self.tolerances.quadrature),
        ] {
            if !value.is_finite() || value <= 0.0 {
                v.push(format!("{name}: must be positive, got {value}"));
            }
        }
        if self.budget == 0 {
            v.push("budget: must be >= 1".into());
        }
        if let (None, None) = (&self.sampling.builtin, &self.sampling.custom) {
            v.push("sampling: specify `builtin` or `custom`".into());
        }
        let check_grid = |v: &mut Vec<String>, field: &str, g: &GridSpec| {
            if let Err(e) = g.resolve() {
                v.push(format!("{field}: {e}"));
            }
        };
        match &self.experiment {
            ExperimentKind::Lyapunov { energy, k, theta_grid, theta, .. } => {
                check_grid(&mut v, "experiment.energy", energy);
                if k.len() < 3 {
                    v.push("experiment.k: needs at least 3 entries".into());
                }
                if !k.windows(2).all(|w| w[0] < w[1]) || k.first().copied().unwrap_or(0) <= 0 {
                    v.push("experiment.k: must be strictly increasing and positive".into());
                }
                if *theta_grid == 0 {
                    v.push("experiment.theta_grid: must be >= 1".into());
                }
                if let Some(t) = theta {
                    check_grid(&mut v, "experiment.theta", t);
                }
            }
            ExperimentKind::Phi { zeta, delta, time, theta_count, boundary_z_count, .. } => {
                if !(*zeta > 0.0 && *zeta <= 1.0) {
                    v.push("experiment.zeta: must lie in (0,1]".into());
                }
                if *delta < 1.0 {
                    v.push("experiment.delta: must be >= 1".into());
                }
                check_grid(&mut v, "experiment.time", time);
                if *theta_count == 0 || *boundary_z_count == 0 {
                    v.push("experiment.theta_count/boundary_z_count: must be >= 1".into());
                }
            }
            ExperimentKind::GrowthSite { tau, k, theta_count, cf_terms, .. } => {
                if !(*tau > 0.0 && *tau < 1.0) {
                    v.push("experiment.tau: must lie in (0,1)".into());
                }
                if *k <= 0 {
                    v.push("experiment.k: must be positive".into());
                }
                if *theta_count == 0 {
                    v.push("experiment.theta_count: must be >= 1".into());
                }
                if *cf_terms < 3 {
                    v.push("experiment.cf_terms: needs at least 3".into());
                }
            }
            ExperimentKind::Vset { k, level, theta_grid, .. } => {
                if k.is_empty() {
                    v.push("experiment.k: grid is empty".into());
                }
                if level.is_empty() {
                    v.push("experiment.level: grid is empty".into());
                }
                if *theta_grid < 1000 {
                    v.push("experiment.theta_grid: must be >= 1000".into());
                }
            }
            ExperimentKind::Transport { p, zeta, delta, time, .. } => {
                if p.is_empty() {
                    v.push("experiment.p: grid is empty".into());
                }
                if zeta.is_empty() {
                    v.push("experiment.zeta: grid is empty".into());
                }
                if delta.is_empty() {
                    v.push("experiment.delta: grid is empty".into());
                }
                match time.resolve() {
                    Err(e) => v.push(format!("experiment.time: {e}")),
                    Ok(ts) => {
                        if ts.len() < 8 {
                            v.push("experiment.time: transport needs >= 8 grid points".into());
                        }
                        if ts.first().copied().unwrap_or(0.0) <= 0.0 {
                            v.push("experiment.time: times must be positive".into());
                        }
                    }
                }
            }
            ExperimentKind::Ids { theta_count, half_width } => {
                if *theta_count == 0 {
                    v.push("experiment.theta_count: must be >= 1".into());
                }
                if *half_width < 200 {
                    v.push("experiment.half_width: must be >= 200".into());
                }
            }
            ExperimentKind::Kkl { time, l1, l2, half_width, .. } => {
                if time.is_empty() {
                    v.push("experiment.time: grid is empty".into());
                }
                if *l1 <= 2.0 || *l2 <= 2.0 {
                    v.push("experiment.l1/l2: must exceed 2".into());
                }
                if *half_width < 8 {
                    v.push("experiment.half_width: must be >= 8".into());
                }
            }
            ExperimentKind::Dtcheck { time, zeta, k_bound, .. } => {
                check_grid(&mut v, "experiment.time", time);
                if !(*zeta > 0.0 && *zeta < 1.0) {
                    v.push("experiment.zeta: must lie in (0,1)".into());
                }
                if let Some(k) = k_bound {
                    if *k < 4.0 {
                        v.push("experiment.k_bound: must be >= 4".into());
                    }
                }
            }
            ExperimentKind::Fejer { degree_min, degree_max, probe } => {
                if *degree_min < 1 || degree_max < degree_min {
                    v.push("experiment.degree_min/degree_max: bad degree range".into());
                }
                if *probe < 1024 {
                    v.push("experiment.probe: must be >= 1024".into());
                }
            }
            ExperimentKind::Cf { terms, kappa } => {
                if *terms < 3 {
                    v.push("experiment.terms: needs at least 3".into());
                }
                if kappa.is_empty() {
                    v.push("experiment.kappa: grid is empty".into());
                }
                if kappa.iter().any(|&k| k <= 0.0) {
                    v.push("experiment.kappa: entries must be positive".into());
                }
            }
        }
        v
    }

    /// Canonical serialized form; hashing and round-trip tests use this.
    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex-encoded (first 16 bytes).
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.emit().as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parse and validate a config file, reporting every violation.
pub fn parse_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let violations = config.validate();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Validation(violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::BuiltinKind;

    fn minimal() -> &'static str {
        r#"
seed = 7

[frequency]
kind = "quadratic"
a = -1
b = 1
d = 5
c = 2

[sampling]
builtin = "cosine"
lambda = 3.0

[experiment]
kind = "lyapunov"
energy = [0.0, 0.5]
"#
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str(minimal()).unwrap();
        match &cfg.experiment {
            ExperimentKind::Lyapunov { theta_grid, k, .. } => {
                assert_eq!(*theta_grid, 1024);
                assert_eq!(k, &vec![125, 250, 500, 1000]);
            }
            _ => panic!("wrong kind"),
        }
        assert_eq!(cfg.tolerances.abel, 1e-8);
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn negative_tolerance_is_named() {
        let text = format!("{}\n[tolerances]\ntail = -1.0\n", minimal());
        let err = parse_config_str(&text).unwrap_err();
        match err {
            ConfigError::Validation(v) => {
                assert!(v.iter().any(|s| s.contains("tolerances.tail")), "{v:?}");
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{}\nbanana = 1\n", minimal());
        assert!(matches!(parse_config_str(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn empty_time_grid_fails_before_compute() {
        let text = r#"
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
kind = "transport"
theta = 0.1
p = [2.0]
zeta = [0.2]
delta = [0.1]
time = []
"#;
        let err = parse_config_str(text).unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
    }

    #[test]
    fn round_trip_is_exact() {
        let cfg = parse_config_str(minimal()).unwrap();
        let emitted = cfg.emit();
        let back = parse_config_str(&emitted).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());

        // floats survive bit-exactly
        let mut cfg2 = cfg.clone();
        cfg2.sampling = SamplingSpec::builtin(BuiltinKind::Cosine, 0.1 + 0.2);
        let back2 = parse_config_str(&cfg2.emit()).unwrap();
        assert_eq!(cfg2, back2);
    }

    #[test]
    fn grid_specs_resolve() {
        let g: GridSpec = toml::from_str::<toml::Value>("x = [1.0, 2.0]")
            .map(|v| v.get("x").cloned().unwrap().try_into().unwrap())
            .unwrap();
        assert_eq!(g.resolve().unwrap(), vec![1.0, 2.0]);
        let r = GridSpec::Range { min: 10.0, max: 1000.0, count: 3, scale: GridScale::Geometric };
        let v = r.resolve().unwrap();
        assert!((v[1] - 100.0).abs() < 1e-9);
    }
}
