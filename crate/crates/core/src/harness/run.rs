//! Experiment orchestration: deterministic parallel sweeps over immutable
//! task lists, keyed merges, and atomic CSV/JSON emission.

use super::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::arithmetic::{check_diophantine, FrequencyData};
use crate::cocycle::{
    growth_site_search, lyapunov_estimate, lyapunov_with_crosscheck, phi_estimate, v_set_measure,
    Cocycle, PhiGridSpec, ThetaScheme,
};
use crate::dynamics::{
    box_eigenvalue_near, dt_integral_check, kkl_check, spectral_and_ids, transport_run,
    TransportOptions, TransportReport,
};
use crate::sampling::{cesaro_approximant, PiecewiseHolderFunction};
use crate::util::pmap;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("task grid of {tasks} points exceeds the budget {budget}")]
    BudgetExceeded { tasks: usize, budget: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Setup(String),
}

/// One emitted table: a CSV file plus its plot hint.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub plot: Option<PlotHint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotHint {
    pub x: String,
    pub y: String,
    pub logx: bool,
    pub logy: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskStatus {
    pub key: String,
    pub ok: bool,
    pub wall_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub crate_version: String,
    pub worker_count: usize,
    pub tasks: Vec<TaskStatus>,
    pub warnings: Vec<String>,
    pub tolerances: super::config::Tolerances,
    pub outputs: Vec<String>,
    pub wall_ms: u128,
}

impl RunManifest {
    pub fn failed_tasks(&self) -> usize {
        self.tasks.iter().filter(|t| !t.ok).count()
    }
}

/// Crash safety: write the full payload next to the target, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or("dat"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn with_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .expect("thread pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

/// Data-parallel map over an immutable task list with an order-preserving
/// keyed merge; identical results for any worker count.
pub fn sweep_tasks<T: Sync, R: Send>(
    tasks: &[T],
    workers: usize,
    budget: usize,
    f: impl Fn(&T) -> R + Sync + Send,
) -> Result<Vec<R>, HarnessError> {
    if tasks.len() > budget {
        return Err(HarnessError::BudgetExceeded { tasks: tasks.len(), budget });
    }
    Ok(with_pool(workers, || pmap(tasks, f)))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn csv_bytes(table: &Table, config_hash: &str) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push_str(",config_hash\n");
    // canonical row order regardless of task scheduling
    let mut rows = table.rows.clone();
    rows.sort();
    for row in &rows {
        out.push_str(&row.join(","));
        out.push(',');
        out.push_str(config_hash);
        out.push('\n');
    }
    out.into_bytes()
}

// ---------------------------------------------------------------------------
// Experiment dispatch
// ---------------------------------------------------------------------------

struct Prepared {
    freq: FrequencyData,
    f: PiecewiseHolderFunction,
}

fn prepare(config: &ExperimentConfig, cf_terms: usize) -> Result<Prepared, HarnessError> {
    let freq = config
        .frequency
        .expand(cf_terms)
        .map_err(|e| HarnessError::Setup(format!("frequency: {e}")))?;
    let f = config
        .sampling
        .build(freq.omega())
        .map_err(|e| HarnessError::Setup(format!("sampling: {e}")))?;
    Ok(Prepared { freq, f })
}

fn resolve_energy(
    prepared: &Prepared,
    energy: f64,
    on_spectrum: bool,
) -> f64 {
    if on_spectrum {
        box_eigenvalue_near(&prepared.f, prepared.freq.rotation(), 0.0, 1000, energy)
    } else {
        energy
    }
}

/// Run the configured experiment, emitting CSV tables, a plot manifest,
/// and a JSON run manifest into `out_dir`. Deterministic for a fixed
/// (config, seed) regardless of `workers`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<RunManifest, HarnessError> {
    let t0 = Instant::now();
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(ConfigError::Validation(violations).into());
    }
    std::fs::create_dir_all(out_dir)?;

    let (tables, tasks, warnings) = dispatch(config, workers)?;

    let hash = config.hash();
    let mut outputs = Vec::new();
    for table in &tables {
        let path = out_dir.join(format!("{}.csv", table.name));
        write_atomic(&path, &csv_bytes(table, &hash))?;
        outputs.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    // declarative plot manifest: data files plus axis hints, no rendering
    let plots: Vec<serde_json::Value> = tables
        .iter()
        .filter_map(|t| {
            t.plot.as_ref().map(|p| {
                serde_json::json!({
                    "file": format!("{}.csv", t.name),
                    "x": p.x, "y": p.y, "logx": p.logx, "logy": p.logy,
                })
            })
        })
        .collect();
    let plot_path = out_dir.join("plots.json");
    write_atomic(&plot_path, serde_json::to_string_pretty(&plots).unwrap().as_bytes())?;
    outputs.push("plots.json".into());

    let manifest = RunManifest {
        schema_version: super::config::SCHEMA_VERSION,
        experiment: config.experiment.name().into(),
        config_hash: hash,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        worker_count: workers,
        tasks,
        warnings,
        tolerances: config.tolerances,
        outputs,
        wall_ms: t0.elapsed().as_millis(),
    };
    let manifest_path = out_dir.join("manifest.json");
    write_atomic(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap().as_bytes())?;
    Ok(manifest)
}

type DispatchOutput = (Vec<Table>, Vec<TaskStatus>, Vec<String>);

fn dispatch(config: &ExperimentConfig, workers: usize) -> Result<DispatchOutput, HarnessError> {
    match &config.experiment {
        ExperimentKind::Lyapunov { .. } => lyapunov_experiment(config, workers),
        ExperimentKind::Phi { .. } => phi_experiment(config, workers),
        ExperimentKind::GrowthSite { .. } => growth_site_experiment(config, workers),
        ExperimentKind::Vset { .. } => vset_experiment(config, workers),
        ExperimentKind::Transport { .. } => transport_experiment(config, workers),
        ExperimentKind::Ids { .. } => ids_experiment(config, workers),
        ExperimentKind::Kkl { .. } => kkl_experiment(config, workers),
        ExperimentKind::Dtcheck { .. } => dtcheck_experiment(config, workers),
        ExperimentKind::Fejer { .. } => fejer_experiment(config, workers),
        ExperimentKind::Cf { .. } => cf_experiment(config),
    }
}

fn status_of(key: String, t0: Instant) -> TaskStatus {
    TaskStatus { key, ok: true, wall_ms: t0.elapsed().as_millis(), error: None }
}

fn lyapunov_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Lyapunov { energy, k, theta_grid, theta, crosscheck } =
        &config.experiment
    else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let energies = energy.resolve().map_err(HarnessError::Setup)?;
    let rotation = prepared.freq.rotation();

    if let Some(theta_axis) = theta {
        // (E × θ) sweep of Birkhoff-orbit estimates
        let thetas = theta_axis.resolve().map_err(HarnessError::Setup)?;
        let mut grid = Vec::new();
        for &e in &energies {
            for &th in &thetas {
                grid.push((e, th));
            }
        }
        let results = sweep_tasks(&grid, workers, config.budget, |&(e, th)| {
            let t0 = Instant::now();
            let coc = Cocycle::real(&prepared.f, rotation, e);
            let est = lyapunov_estimate(&coc, k, ThetaScheme::Birkhoff { theta0: th });
            (
                vec![fmt(e), fmt(th), fmt(est.l_hat), fmt(est.spread)],
                status_of(format!("lyapunov e={e} theta={th}"), t0),
            )
        })?;
        let (rows, tasks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let table = Table {
            name: "lyapunov".into(),
            columns: ["energy", "theta", "l_hat", "spread"].map(String::from).to_vec(),
            rows,
            plot: Some(PlotHint { x: "energy".into(), y: "l_hat".into(), logx: false, logy: false }),
        };
        return Ok((vec![table], tasks, vec![]));
    }

    let results = sweep_tasks(&energies, workers, config.budget, |&e| {
        let t0 = Instant::now();
        let coc = Cocycle::real(&prepared.f, rotation, e);
        let est = if *crosscheck {
            lyapunov_with_crosscheck(&coc, k, *theta_grid, 10_000_000)
        } else {
            lyapunov_estimate(&coc, k, ThetaScheme::Grid(*theta_grid))
        };
        let rows: Vec<Vec<String>> = est
            .k_list
            .iter()
            .zip(&est.c_k)
            .map(|(&kk, &ck)| {
                vec![
                    fmt(e),
                    kk.to_string(),
                    fmt(ck),
                    fmt(est.l_hat),
                    fmt(est.spread),
                    est.flagged.to_string(),
                ]
            })
            .collect();
        (rows, status_of(format!("lyapunov e={e}"), t0))
    })?;
    let mut rows = Vec::new();
    let mut tasks = Vec::new();
    for (r, s) in results {
        rows.extend(r);
        tasks.push(s);
    }
    let table = Table {
        name: "lyapunov".into(),
        columns: ["energy", "k", "c_k", "l_hat", "spread", "flagged"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "energy".into(), y: "l_hat".into(), logx: false, logy: false }),
    };
    Ok((vec![table], tasks, vec![]))
}

fn phi_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Phi { energy, on_spectrum, zeta, delta, time, theta_count, boundary_z_count } =
        &config.experiment
    else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let e = resolve_energy(&prepared, *energy, *on_spectrum);
    let times = time.resolve().map_err(HarnessError::Setup)?;
    let grid = PhiGridSpec { theta_count: *theta_count, boundary_z_count: *boundary_z_count };
    let results = sweep_tasks(&times, workers, config.budget, |&t| {
        let t0 = Instant::now();
        let est = phi_estimate(&prepared.f, prepared.freq.rotation(), e, *zeta, *delta, t, grid);
        (
            vec![fmt(t), fmt(e), fmt(*zeta), fmt(*delta), est.j_max.to_string(), fmt(est.value)],
            status_of(format!("phi t={t}"), t0),
        )
    })?;
    let (rows, tasks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let table = Table {
        name: "phi".into(),
        columns: ["t", "energy", "zeta", "delta", "j_max", "phi"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "t".into(), y: "phi".into(), logx: true, logy: true }),
    };
    Ok((vec![table], tasks, vec![]))
}

fn growth_site_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::GrowthSite { energy, on_spectrum, tau, k, theta_count, cf_terms, shift_cap } =
        &config.experiment
    else {
        unreachable!()
    };
    let prepared = prepare(config, *cf_terms)?;
    let e = resolve_energy(&prepared, *energy, *on_spectrum);
    let rotation = prepared.freq.rotation();
    let coc = Cocycle::real(&prepared.f, rotation, e);
    let est = lyapunov_estimate(&coc, &[250, 500, 1000, 2000], ThetaScheme::Grid(512));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let thetas: Vec<f64> = (0..*theta_count).map(|_| rng.gen::<f64>()).collect();
    let results = sweep_tasks(&thetas, workers, config.budget, |&theta| {
        let t0 = Instant::now();
        match growth_site_search(&coc, &prepared.freq, *tau, *k, theta, est.l_hat, *shift_cap) {
            Ok(cert) => (
                vec![
                    fmt(theta),
                    cert.k.to_string(),
                    cert.cf_index.to_string(),
                    cert.shift.to_string(),
                    fmt(cert.achieved),
                    fmt(cert.threshold),
                ],
                status_of(format!("growth-site theta={theta}"), t0),
            ),
            Err(err) => (
                vec![fmt(theta), k.to_string(), String::new(), String::new(), String::new(), String::new()],
                TaskStatus {
                    key: format!("growth-site theta={theta}"),
                    ok: false,
                    wall_ms: t0.elapsed().as_millis(),
                    error: Some(err.to_string()),
                },
            ),
        }
    })?;
    let (rows, tasks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let table = Table {
        name: "growth_site".into(),
        columns: ["theta", "k", "cf_index", "shift", "achieved", "threshold"]
            .map(String::from)
            .to_vec(),
        rows,
        plot: Some(PlotHint { x: "theta".into(), y: "shift".into(), logx: false, logy: false }),
    };
    Ok((vec![table], tasks, vec![]))
}

fn vset_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Vset { energy, on_spectrum, k, level, theta_grid } = &config.experiment
    else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let e = resolve_energy(&prepared, *energy, *on_spectrum);
    let coc = Cocycle::real(&prepared.f, prepared.freq.rotation(), e);
    let mut grid = Vec::new();
    for &kk in k {
        for &t in level {
            grid.push((kk, t));
        }
    }
    let results = sweep_tasks(&grid, workers, config.budget, |&(kk, t)| {
        let t0 = Instant::now();
        let m = v_set_measure(&coc, kk, t, *theta_grid);
        (
            vec![kk.to_string(), fmt(t), fmt(m)],
            status_of(format!("vset k={kk} t={t}"), t0),
        )
    })?;
    let (rows, tasks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let table = Table {
        name: "vset".into(),
        columns: ["k", "level", "measure"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "level".into(), y: "measure".into(), logx: false, logy: false }),
    };
    Ok((vec![table], tasks, vec![]))
}

fn transport_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Transport { theta, p, zeta, delta, time } = &config.experiment else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let times = time.resolve().map_err(HarnessError::Setup)?;
    let t0 = Instant::now();
    let opts = TransportOptions {
        abel_tol: config.tolerances.abel,
        tail_threshold: config.tolerances.tail,
        ..TransportOptions::default()
    };
    let run = with_pool(workers, || {
        transport_run(&prepared.f, prepared.freq.rotation(), *theta, &times, &opts)
    })
    .map_err(|e| HarnessError::Setup(format!("transport: {e}")))?;
    let report = TransportReport::from_run(&run, p, zeta, delta);
    let mut warnings = Vec::new();
    if run.box_retries > 0 {
        warnings.push(format!("BoxTooSmall retries: {}", run.box_retries));
    }
    if run.unitarity_defect > config.tolerances.unitarity {
        warnings.push(format!("unitarity defect {:.3e}", run.unitarity_defect));
    }

    let mut rows = Vec::new();
    for (ti, &t) in times.iter().enumerate() {
        for (pi, &pp) in p.iter().enumerate() {
            for (zi, &zz) in zeta.iter().enumerate() {
                for (di, &dd) in delta.iter().enumerate() {
                    rows.push(vec![
                        fmt(t),
                        fmt(pp),
                        fmt(report.moments.abel[pi][ti]),
                        fmt(report.moments.raw[pi][ti]),
                        fmt(report.moments.beta_plus[pi].value),
                        fmt(report.moments.beta_minus[pi].value),
                        fmt(zz),
                        fmt(report.mass.p_zeta[zi][ti]),
                        fmt(dd),
                        fmt(report.mass.l_star[di][ti]),
                        fmt(report.mass.xi_upper[di]),
                        fmt(report.mass.xi_lower[di]),
                    ]);
                }
            }
        }
    }
    let table = Table {
        name: "transport".into(),
        columns: [
            "t",
            "p",
            "moment_avg",
            "moment_raw",
            "beta_plus_hat",
            "beta_minus_hat",
            "zeta",
            "p_zeta",
            "delta",
            "l_star",
            "xi_upper_hat",
            "xi_lower_hat",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        plot: Some(PlotHint { x: "t".into(), y: "moment_raw".into(), logx: true, logy: true }),
    };
    let status = TaskStatus {
        key: format!("transport theta={theta}"),
        ok: true,
        wall_ms: t0.elapsed().as_millis(),
        error: None,
    };
    Ok((vec![table], vec![status], warnings))
}

fn ids_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Ids { theta_count, half_width } = &config.experiment else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let t0 = Instant::now();
    let thetas = crate::util::torus_grid(*theta_count);
    let data = with_pool(workers, || {
        spectral_and_ids(&prepared.f, prepared.freq.rotation(), &thetas, *half_width, false)
    });
    let rows: Vec<Vec<String>> = data
        .ids
        .energies
        .iter()
        .zip(&data.ids.values)
        .map(|(&e, &v)| vec![fmt(e), fmt(v)])
        .collect();
    let table = Table {
        name: "ids".into(),
        columns: ["energy", "ids"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "energy".into(), y: "ids".into(), logx: false, logy: false }),
    };
    let status = status_of(format!("ids half_width={half_width}"), t0);
    Ok((vec![table], vec![status], vec![]))
}

fn kkl_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Kkl { theta, time, l1, l2, half_width } = &config.experiment else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let results = sweep_tasks(time, workers, config.budget, |&t| {
        let t0 = Instant::now();
        match kkl_check(&prepared.f, prepared.freq.rotation(), *theta, t, *l1, *l2, *half_width) {
            Ok(r) => (
                vec![
                    fmt(t),
                    fmt(*l1),
                    fmt(*l2),
                    fmt(r.lhs),
                    fmt(r.rhs_mass),
                    r.ratio.map(fmt).unwrap_or_default(),
                ],
                status_of(format!("kkl t={t}"), t0),
            ),
            Err(e) => (
                vec![fmt(t), fmt(*l1), fmt(*l2), String::new(), String::new(), String::new()],
                TaskStatus {
                    key: format!("kkl t={t}"),
                    ok: false,
                    wall_ms: t0.elapsed().as_millis(),
                    error: Some(e.to_string()),
                },
            ),
        }
    })?;
    let (rows, tasks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let table = Table {
        name: "kkl".into(),
        columns: ["t", "l1", "l2", "lhs", "rhs_mass", "ratio"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "t".into(), y: "ratio".into(), logx: true, logy: true }),
    };
    Ok((vec![table], tasks, vec![]))
}

fn dtcheck_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Dtcheck { theta, time, zeta, k_bound } = &config.experiment else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let times = time.resolve().map_err(HarnessError::Setup)?;
    let k = k_bound.unwrap_or_else(|| (3.0 + prepared.f.sup_bound()).ceil().max(4.0));
    let t0 = Instant::now();
    let report = with_pool(workers, || {
        dt_integral_check(&prepared.f, prepared.freq.rotation(), *theta, &times, *zeta, k)
    });
    let rows: Vec<Vec<String>> = report
        .t_grid
        .iter()
        .zip(&report.integrals)
        .map(|(&t, &i)| vec![fmt(t), fmt(i), fmt(report.slope), fmt(*zeta), fmt(k)])
        .collect();
    let table = Table {
        name: "dtcheck".into(),
        columns: ["t", "integral", "slope", "zeta", "k_bound"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "t".into(), y: "integral".into(), logx: true, logy: true }),
    };
    let status = status_of("dtcheck".into(), t0);
    Ok((vec![table], vec![status], vec![]))
}

fn fejer_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Fejer { degree_min, degree_max, probe } = &config.experiment else {
        unreachable!()
    };
    let prepared = prepare(config, 40)?;
    let mut degrees = Vec::new();
    let mut n = *degree_min;
    while n <= *degree_max {
        degrees.push(n);
        n *= 2;
    }
    let f = &prepared.f;
    let results = sweep_tasks(&degrees, workers, config.budget, |&n| {
        let t0 = Instant::now();
        let approx = cesaro_approximant(f, n).expect("builtin coefficients are closed-form");
        let mut err_away = 0.0f64;
        let mut err_global = 0.0f64;
        for g in 0..*probe {
            let th = g as f64 / *probe as f64;
            let d = (approx.eval(th) - f.eval(th)).abs();
            err_global = err_global.max(d);
            let near_jump = f
                .jump_set()
                .iter()
                .any(|&j| crate::arithmetic::torus_distance(th, j) < 1.0 / n as f64);
            if !near_jump {
                err_away = err_away.max(d);
            }
        }
        (
            vec![n.to_string(), fmt(err_away), fmt(err_global)],
            status_of(format!("fejer n={n}"), t0),
        )
    })?;
    let (rows, tasks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let table = Table {
        name: "fejer".into(),
        columns: ["n", "sup_error_away", "sup_error_global"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "n".into(), y: "sup_error_away".into(), logx: true, logy: true }),
    };
    Ok((vec![table], tasks, vec![]))
}

fn cf_experiment(config: &ExperimentConfig) -> Result<DispatchOutput, HarnessError> {
    let ExperimentKind::Cf { terms, kappa } = &config.experiment else {
        unreachable!()
    };
    let t0 = Instant::now();
    let prepared = prepare(config, *terms)?;
    let freq = &prepared.freq;
    let omega = freq.omega();
    let mut rows = Vec::new();
    for (i, c) in freq.convergents().iter().enumerate() {
        let q = c.q.to_f64().unwrap_or(f64::INFINITY);
        let p = c.p.to_f64().unwrap_or(f64::INFINITY);
        let err = (q * omega - p).abs();
        rows.push(vec![
            (i + 1).to_string(),
            freq.partial_quotients()[i].to_string(),
            c.p.to_string(),
            c.q.to_string(),
            fmt(err),
        ]);
    }
    let cf_table = Table {
        name: "cf".into(),
        columns: ["n", "a_n", "p_n", "q_n", "abs_err"].map(String::from).to_vec(),
        rows,
        plot: Some(PlotHint { x: "n".into(), y: "abs_err".into(), logx: false, logy: true }),
    };
    let mut dio_rows = Vec::new();
    for &kp in kappa {
        let report = check_diophantine(freq, kp);
        dio_rows.push(vec![
            fmt(kp),
            format!("{:?}", report.verdict),
            report.violations.len().to_string(),
            report
                .violations
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ]);
    }
    let dio_table = Table {
        name: "diophantine".into(),
        columns: ["kappa", "verdict", "violation_count", "violations"]
            .map(String::from)
            .to_vec(),
        rows: dio_rows,
        plot: None,
    };
    let status = status_of(format!("cf terms={terms}"), t0);
    Ok((vec![cf_table, dio_table], vec![status], vec![]))
}

// ---------------------------------------------------------------------------
// Output directory helper for callers
// ---------------------------------------------------------------------------

/// Default output directory from the config when the caller gave none.
pub fn output_dir(config: &ExperimentConfig, cli_out: Option<&Path>) -> PathBuf {
    cli_out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.output.dir))
}
