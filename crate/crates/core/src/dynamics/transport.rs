//! Transport pipeline: one streaming propagation serving raw snapshots
//! a(·,T) and Abel-averaged profiles a_T(·) for a whole T grid, plus the
//! moment/exponent and mass/ξ reductions on top.

use super::propagate::{tail_mass_of, ChebyshevPropagator, StepBuffers};
use super::{build_hamiltonian, DynamicsError};
use crate::arithmetic::Rotation;
use crate::sampling::PiecewiseHolderFunction;
use crate::util::{linear_fit, window_slopes};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct TransportOptions {
    /// Abel truncation: horizon per T is (T/2)·ln(1/tol).
    pub abel_tol: f64,
    pub tail_threshold: f64,
    /// starting half-width of the box ladder
    pub initial_half_width: usize,
    /// hard cap on the half-width (safety valve)
    pub max_half_width: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            abel_tol: 1e-8,
            tail_threshold: 1e-8,
            initial_half_width: 128,
            max_half_width: 40_000,
        }
    }
}

/// Raw and Abel-averaged wavepacket profiles over a T grid.
#[derive(Debug, Clone)]
pub struct TransportRun {
    pub t_grid: Vec<f64>,
    pub half_width: usize,
    /// a(·, T) per grid point (site = n + half_width)
    pub raw: Vec<Vec<f64>>,
    /// a_T(·) per grid point
    pub abel: Vec<Vec<f64>>,
    pub unitarity_defect: f64,
    pub tail_mass: f64,
    /// box sizes that tripped the tail gate before the final one held
    pub box_retries: usize,
}

impl TransportRun {
    pub fn site_index(&self, n: i64) -> usize {
        (n + self.half_width as i64) as usize
    }
}

/// Ballistic half-width bound for hopping-1 dynamics up to t_max.
pub fn ballistic_half_width(t_max: f64) -> usize {
    (2.0 * t_max + 10.0 * t_max.sqrt() + 50.0).ceil() as usize
}

/// Run the streaming transport pipeline. The box ladder starts small and
/// doubles whenever the boundary tail gate trips, never exceeding the
/// ballistic bound (at which reflections are impossible by the hopping
/// speed limit) or the configured cap.
pub fn transport_run(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta: f64,
    t_grid: &[f64],
    opts: &TransportOptions,
) -> Result<TransportRun, DynamicsError> {
    assert!(!t_grid.is_empty() && t_grid.windows(2).all(|w| w[0] < w[1]));
    assert!(t_grid[0] > 0.0);
    let t_top = *t_grid.last().unwrap();
    let horizon = (0.5 * t_top * (1.0 / opts.abel_tol).ln()).max(t_top);
    let l_ball = ballistic_half_width(horizon).min(opts.max_half_width);

    let mut half_width = opts.initial_half_width.min(l_ball);
    let mut retries = 0usize;
    loop {
        match stream_once(f, rotation, theta, t_grid, horizon, half_width, opts) {
            Ok(mut run) => {
                run.box_retries = retries;
                return Ok(run);
            }
            Err(DynamicsError::BoxTooSmall { tail_mass }) if half_width < l_ball => {
                retries += 1;
                half_width = (half_width * 2).min(l_ball);
                let _ = tail_mass;
            }
            Err(e) => return Err(e),
        }
    }
}

fn stream_once(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta: f64,
    t_grid: &[f64],
    horizon: f64,
    half_width: usize,
    opts: &TransportOptions,
) -> Result<TransportRun, DynamicsError> {
    let lattice = build_hamiltonian(f, rotation, theta, half_width);
    let n = lattice.size();
    let prop = ChebyshevPropagator::new(&lattice);
    // two samples per fastest oscillation of |u|² keeps the trapezoid
    // aliasing tail well under the transport tolerances
    let h = std::f64::consts::FRAC_PI_2 / prop.scale;

    // merged schedule: uniform quadrature nodes plus the exact T values
    let mut nodes: Vec<f64> = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        nodes.push(t);
        t += h;
    }
    nodes.push(horizon);
    nodes.extend(t_grid.iter().copied());
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup();

    // per-T Abel horizon and accumulators
    let t_count = t_grid.len();
    let horizons: Vec<f64> =
        t_grid.iter().map(|&tt| 0.5 * tt * (1.0 / opts.abel_tol).ln()).collect();
    let mut acc = vec![vec![0.0f64; n]; t_count];
    let mut wsum = vec![0.0f64; t_count];
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); t_count];

    let site0 = lattice.site_index(0);
    let site1 = lattice.site_index(1);
    let mut psi0 = vec![Complex64::new(0.0, 0.0); n];
    let mut psi1 = psi0.clone();
    psi0[site0] = Complex64::new(1.0, 0.0);
    psi1[site1] = Complex64::new(1.0, 0.0);
    let mut work = StepBuffers::new(n);
    let uniform_coeffs = prop.coefficients(h);

    let mut tail = 0.0f64;
    let mut defect = 0.0f64;
    let mut profile = vec![0.0f64; n];
    for (i, &t_node) in nodes.iter().enumerate() {
        if i > 0 {
            let dt = t_node - nodes[i - 1];
            if (dt - h).abs() < 1e-12 {
                prop.step(&mut psi0, &uniform_coeffs, &mut work);
                prop.step(&mut psi1, &uniform_coeffs, &mut work);
            } else if dt > 0.0 {
                let coeffs = prop.coefficients(dt);
                prop.step(&mut psi0, &coeffs, &mut work);
                prop.step(&mut psi1, &coeffs, &mut work);
            }
        }
        for ((p, a), b) in profile.iter_mut().zip(&psi0).zip(&psi1) {
            *p = 0.5 * (a.norm_sqr() + b.norm_sqr());
        }
        let mass: f64 = profile.iter().sum();
        defect = defect.max((mass - 1.0).abs());
        let tm = tail_mass_of(&profile);
        tail = tail.max(tm);
        if tail > opts.tail_threshold {
            return Err(DynamicsError::BoxTooSmall { tail_mass: tail });
        }

        // trapezoid interval weights on the merged grid
        let left = if i == 0 { 0.0 } else { (t_node - nodes[i - 1]) / 2.0 };
        let right = if i + 1 == nodes.len() { 0.0 } else { (nodes[i + 1] - t_node) / 2.0 };
        let w_node = left + right;
        for ti in 0..t_count {
            if t_node <= horizons[ti] {
                let w = w_node * (-2.0 * t_node / t_grid[ti]).exp();
                wsum[ti] += w;
                for (a, &p) in acc[ti].iter_mut().zip(profile.iter()) {
                    *a += w * p;
                }
            }
        }
        for (ti, &tt) in t_grid.iter().enumerate() {
            if (t_node - tt).abs() < 1e-12 {
                raw[ti] = profile.clone();
            }
        }
    }

    let abel: Vec<Vec<f64>> = acc
        .into_iter()
        .zip(&wsum)
        .map(|(a, &w)| a.into_iter().map(|v| v / w).collect())
        .collect();
    debug_assert!(raw.iter().all(|r| !r.is_empty()));
    Ok(TransportRun {
        t_grid: t_grid.to_vec(),
        half_width,
        raw,
        abel,
        unitarity_defect: defect,
        tail_mass: tail,
        box_retries: 0,
    })
}

// ---------------------------------------------------------------------------
// Moments and transport exponents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BetaFit {
    pub p: f64,
    pub value: f64,
    pub window_slopes: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct MomentReport {
    pub p_list: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// ⟨|X|^p(T)⟩ = Σ_n (1+|n|)^p a(n,T), indexed [p][T]
    pub raw: Vec<Vec<f64>>,
    /// ⟨|X|_T^p⟩ from the Abel-averaged profiles
    pub abel: Vec<Vec<f64>>,
    /// upper exponent: max sliding-window slope of the raw family / p
    pub beta_plus: Vec<BetaFit>,
    /// lower exponent: min sliding-window slope of the Abel family / p
    pub beta_minus: Vec<BetaFit>,
}

fn moment_of(profile: &[f64], half_width: usize, p: f64) -> f64 {
    profile
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let n = i as i64 - half_width as i64;
            (1.0 + n.abs() as f64).powf(p) * a
        })
        .sum()
}

/// Moments of the position operator and envelope-fitted β̂^±.
///
/// The upper rate comes from the non-time-averaged moments and the lower
/// rate from the Abel-averaged ones; exponents are limsup/liminf objects,
/// so both are envelope fits (extreme slope over sliding 4-point windows)
/// rather than single least squares.
pub fn moments_and_beta(run: &TransportRun, p_list: &[f64]) -> MomentReport {
    assert!(run.t_grid.len() >= 4, "need at least one 4-point window");
    let ln_t: Vec<f64> = run.t_grid.iter().map(|t| t.ln()).collect();
    let mut raw = Vec::new();
    let mut abel = Vec::new();
    let mut beta_plus = Vec::new();
    let mut beta_minus = Vec::new();
    for &p in p_list {
        let r: Vec<f64> = run.raw.iter().map(|pr| moment_of(pr, run.half_width, p)).collect();
        let a: Vec<f64> = run.abel.iter().map(|pr| moment_of(pr, run.half_width, p)).collect();
        let ln_r: Vec<f64> = r.iter().map(|v| v.ln()).collect();
        let ln_a: Vec<f64> = a.iter().map(|v| v.ln()).collect();
        let slopes_r = window_slopes(&ln_t, &ln_r, 4);
        let slopes_a = window_slopes(&ln_t, &ln_a, 4);
        let (_, _, res_r) = linear_fit(&ln_t, &ln_r);
        let (_, _, res_a) = linear_fit(&ln_t, &ln_a);
        beta_plus.push(BetaFit {
            p,
            value: slopes_r.iter().copied().fold(f64::NEG_INFINITY, f64::max) / p,
            window_slopes: slopes_r,
            residual: res_r,
        });
        beta_minus.push(BetaFit {
            p,
            value: slopes_a.iter().copied().fold(f64::INFINITY, f64::min) / p,
            window_slopes: slopes_a,
            residual: res_a,
        });
        raw.push(r);
        abel.push(a);
    }
    MomentReport {
        p_list: p_list.to_vec(),
        t_grid: run.t_grid.clone(),
        raw,
        abel,
        beta_plus,
        beta_minus,
    }
}

// ---------------------------------------------------------------------------
// Mass profiles and ξ exponents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MassReport {
    pub t_grid: Vec<f64>,
    pub zeta_list: Vec<f64>,
    /// P_T(T^ζ) indexed [ζ][T]
    pub p_zeta: Vec<Vec<f64>>,
    pub delta_list: Vec<f64>,
    /// L*(T) = inf{L : P_T(L) > δ} indexed [δ][T]
    pub l_star: Vec<Vec<f64>>,
    /// max/min sliding-window slopes of ln(1+L*) vs ln T, per δ
    pub xi_upper: Vec<f64>,
    pub xi_lower: Vec<f64>,
}

/// P_T(N) = Σ_{|n|≤N} a_T(n) from an Abel profile.
fn mass_within(profile: &[f64], half_width: usize, n_box: i64) -> f64 {
    let lo = ((half_width as i64 - n_box).max(0)) as usize;
    let hi = ((half_width as i64 + n_box) as usize).min(profile.len() - 1);
    profile[lo..=hi].iter().sum()
}

/// Mass confinement P_T(T^ζ) and the box-scaling exponents ξ̂(δ).
pub fn p_mass_and_xi(run: &TransportRun, zeta_list: &[f64], delta_list: &[f64]) -> MassReport {
    let ln_t: Vec<f64> = run.t_grid.iter().map(|t| t.ln()).collect();
    let p_zeta: Vec<Vec<f64>> = zeta_list
        .iter()
        .map(|&zeta| {
            run.t_grid
                .iter()
                .zip(&run.abel)
                .map(|(&t, prof)| mass_within(prof, run.half_width, t.powf(zeta) as i64))
                .collect()
        })
        .collect();

    let mut l_star = Vec::new();
    let mut xi_upper = Vec::new();
    let mut xi_lower = Vec::new();
    for &delta in delta_list {
        let ls: Vec<f64> = run
            .abel
            .iter()
            .map(|prof| {
                let mut cum = 0.0;
                for n_box in 0..=run.half_width as i64 {
                    if n_box == 0 {
                        cum = prof[run.site_index(0)];
                    } else {
                        cum += prof[run.site_index(n_box)] + prof[run.site_index(-n_box)];
                    }
                    if cum > delta {
                        return n_box as f64;
                    }
                }
                run.half_width as f64
            })
            .collect();
        let ln_l: Vec<f64> = ls.iter().map(|l| (1.0 + l).ln()).collect();
        let slopes = window_slopes(&ln_t, &ln_l, 4);
        xi_upper.push(slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        xi_lower.push(slopes.iter().copied().fold(f64::INFINITY, f64::min));
        l_star.push(ls);
    }
    MassReport {
        t_grid: run.t_grid.clone(),
        zeta_list: zeta_list.to_vec(),
        p_zeta,
        delta_list: delta_list.to_vec(),
        l_star,
        xi_upper,
        xi_lower,
    }
}

/// Everything the transport experiment emits.
#[derive(Debug, Clone)]
pub struct TransportReport {
    pub moments: MomentReport,
    pub mass: MassReport,
    pub unitarity_defect: f64,
    pub tail_mass: f64,
    pub half_width: usize,
    pub box_retries: usize,
}

impl TransportReport {
    pub fn from_run(run: &TransportRun, p_list: &[f64], zeta_list: &[f64], delta_list: &[f64]) -> Self {
        TransportReport {
            moments: moments_and_beta(run, p_list),
            mass: p_mass_and_xi(run, zeta_list, delta_list),
            unitarity_defect: run.unitarity_defect,
            tail_mass: run.tail_mass,
            half_width: run.half_width,
            box_retries: run.box_retries,
        }
    }
}
