//! Truncated-norm transport criteria: the two-sided ℓ² truncation, the
//! L̃ length scales, the spectral-mass lower bound check, and the
//! integrated reciprocal-growth decay check.

use super::propagate::{ChebyshevPropagator, SpectralPropagator, StepBuffers};
use super::{build_hamiltonian, DynamicsError};
use crate::arithmetic::Rotation;
use crate::cocycle::Cocycle;
use crate::sampling::PiecewiseHolderFunction;
use crate::util::{linear_fit, pmap};
use num_complex::Complex64;

// ---------------------------------------------------------------------------
// Truncated ℓ² norms
// ---------------------------------------------------------------------------

/// ‖f‖²_L = Σ_{n=1}^{⌊L⌋} |f(n)|² + (L−⌊L⌋)|f(⌊L⌋+1)|², L ≥ 1.
/// `sq_value(n)` supplies |f(n)|² (Hilbert–Schmidt squared for matrices).
pub fn truncated_norm_sq<F: Fn(i64) -> f64>(sq_value: F, l: f64) -> f64 {
    assert!(l >= 1.0);
    let fl = l.floor() as i64;
    let mut s = 0.0;
    for n in 1..=fl {
        s += sq_value(n);
    }
    s + (l - fl as f64) * sq_value(fl + 1)
}

/// Two-sided truncation over n ∈ [−⌊L1⌋, ⌊L2⌋] with fractional weights at
/// −⌊L1⌋−1 and ⌊L2⌋+1.
pub fn truncated_norm_sq_two_sided<F: Fn(i64) -> f64>(sq_value: F, l1: f64, l2: f64) -> f64 {
    assert!(l1 >= 1.0 && l2 >= 1.0);
    let f1 = l1.floor() as i64;
    let f2 = l2.floor() as i64;
    let mut s = 0.0;
    for n in -f1..=f2 {
        s += sq_value(n);
    }
    s + (l1 - f1 as f64) * sq_value(-f1 - 1) + (l2 - f2 as f64) * sq_value(f2 + 1)
}

// ---------------------------------------------------------------------------
// L̃ length scales
// ---------------------------------------------------------------------------

/// Solve ‖A_•(θ,E)‖_{L̃} = 2‖A_1(θ,E)^{−1}‖/ε for L̃ in the given
/// direction, using Hilbert–Schmidt norms in the truncated sum. The
/// squared truncated norm is piecewise linear and strictly increasing in
/// L, so the fractional part interpolates exactly.
pub fn l_tilde(
    cocycle: &Cocycle,
    theta: f64,
    epsilon: f64,
    forward: bool,
    horizon: usize,
) -> Result<f64, DynamicsError> {
    assert!(epsilon > 0.0);
    // ‖A_1^{-1}‖ equals ‖A_1‖ in operator norm for unit determinant
    let a1 = cocycle.transfer_matrix(theta).op_norm();
    let target_sq_ln = 2.0 * ((2.0 * a1 / epsilon).ln());
    let sums_ln = cocycle.cumulative_hs_sq_ln(theta, forward, target_sq_ln, horizon);
    let last = *sums_ln.last().unwrap();
    if last < target_sq_ln {
        return Err(DynamicsError::HorizonExceeded { horizon });
    }
    // first index i (0-based) with S_{i+1} ≥ target
    let i = sums_ln.iter().position(|&s| s >= target_sq_ln).unwrap();
    let base = sums_ln[i];
    let a = (target_sq_ln - base).exp(); // target²/S_{i+1}
    let b = if i == 0 { 0.0 } else { (sums_ln[i - 1] - base).exp() }; // S_i/S_{i+1}
    Ok(i as f64 + (a - b) / (1.0 - b))
}

// ---------------------------------------------------------------------------
// Spectral-mass lower bound check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KklReport {
    pub t_scale: f64,
    pub l1: f64,
    pub l2: f64,
    /// ⟨‖e^{−ith}δ_1‖²_{L1,L2}⟩_T on the finite box
    pub lhs: f64,
    /// Σ of δ_1 spectral weights over box eigenvalues whose L̃^±_{1/T}
    /// satisfy both truncation bounds
    pub rhs_mass: f64,
    /// lhs/rhs_mass, omitted when the mass vanishes
    pub ratio: Option<f64>,
}

/// Compare the Abel-averaged truncated norm of the evolved δ_1 against
/// the spectral mass of box eigenvalues with small L̃^±. The universal
/// constant of the underlying bound is unspecified, so callers assert
/// only a generous fixed lower bound on the ratio (a direction-of-
/// inequality sanity check).
pub fn kkl_check(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta: f64,
    t_scale: f64,
    l1: f64,
    l2: f64,
    half_width: usize,
) -> Result<KklReport, DynamicsError> {
    let lattice = build_hamiltonian(f, rotation, theta, half_width);
    let n = lattice.size();
    let site1 = lattice.site_index(1);
    let spectral = SpectralPropagator::new(&lattice);

    // lhs: Abel profile of δ_1 in closed form, then the truncated sum
    let profile = spectral.abel_profile(site1, t_scale);
    let hw = lattice.half_width as i64;
    let sq = |m: i64| {
        let idx = m + hw;
        if idx < 0 || idx >= n as i64 {
            0.0
        } else {
            profile[idx as usize]
        }
    };
    let lhs = truncated_norm_sq_two_sided(sq, l1, l2);

    // rhs: spectral mass of eigenvalues with both L̃ scales inside
    let w1 = spectral.site_weights(site1);
    let eps = 1.0 / t_scale;
    let horizon = l1.max(l2) as usize + 2;
    let members = pmap(&spectral.eigenvalues, |&e| {
        let coc = Cocycle::real(f, rotation, e);
        let minus = match l_tilde(&coc, theta, eps, false, horizon) {
            Ok(l) => l <= l1,
            Err(_) => false,
        };
        if !minus {
            return false;
        }
        match l_tilde(&coc, theta, eps, true, horizon) {
            Ok(l) => l <= l2,
            Err(_) => false,
        }
    });
    let rhs_mass: f64 =
        members.iter().zip(&w1).filter_map(|(&m, &w)| m.then_some(w)).sum();
    let ratio = if rhs_mass > 0.0 { Some(lhs / rhs_mass) } else { None };
    Ok(KklReport { t_scale, l1, l2, lhs, rhs_mass, ratio })
}

// ---------------------------------------------------------------------------
// Integrated reciprocal-growth decay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DtReport {
    pub t_grid: Vec<f64>,
    pub integrals: Vec<f64>,
    /// fitted log-log slope of the integral against T
    pub slope: f64,
    pub zeta: f64,
    pub k_bound: f64,
}

/// For each T, integrate over E ∈ [−K, K] the reciprocal of
/// min_{ι∈{−1,1}} max_{1≤n≤T^ζ} ‖A_{ιn}(E + i/T)‖², then fit the decay
/// slope in log-log. Adaptive Simpson refinement on a 512-panel base.
pub fn dt_integral_check(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta: f64,
    t_grid: &[f64],
    zeta: f64,
    k_bound: f64,
) -> DtReport {
    assert!(k_bound >= 4.0, "K must be at least 4");
    let integrals: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let n_max = (t.powf(zeta) as i64).max(1);
            let checkpoints_f: Vec<i64> = (1..=n_max).collect();
            let checkpoints_b: Vec<i64> = (1..=n_max).map(|j| -j).collect();
            let integrand = |e: f64| -> f64 {
                let coc = Cocycle::new(f, rotation, Complex64::new(e, 1.0 / t));
                let fwd = coc
                    .log_norm_profile(theta, &checkpoints_f)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                let bwd = coc
                    .log_norm_profile(theta, &checkpoints_b)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                (-2.0 * fwd.min(bwd)).exp()
            };
            adaptive_panel_integral(&integrand, -k_bound, k_bound, 512, 1e-6)
        })
        .collect();
    let ln_t: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let ln_i: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let (slope, _, _) = linear_fit(&ln_t, &ln_i);
    DtReport { t_grid: t_grid.to_vec(), integrals, slope, zeta, k_bound }
}

/// Composite adaptive Simpson: a uniform panel base with one refinement
/// pass per panel until the local Richardson error estimate is below the
/// relative tolerance.
fn adaptive_panel_integral(
    g: &(impl Fn(f64) -> f64 + Sync),
    a: f64,
    b: f64,
    base_panels: usize,
    rel_tol: f64,
) -> f64 {
    let edges: Vec<(f64, f64)> = (0..base_panels)
        .map(|i| {
            let w = (b - a) / base_panels as f64;
            (a + w * i as f64, a + w * (i + 1) as f64)
        })
        .collect();
    let parts = pmap(&edges, |&(lo, hi)| adaptive_simpson(g, lo, hi, rel_tol, 12));
    parts.iter().sum()
}

fn simpson(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b))
}

fn adaptive_simpson(g: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, depth: usize) -> f64 {
    let whole = simpson(g, a, b);
    let m = 0.5 * (a + b);
    let left = simpson(g, a, m);
    let right = simpson(g, m, b);
    let refined = left + right;
    if depth == 0 || (refined - whole).abs() <= rel_tol * refined.abs().max(1e-300) {
        refined
    } else {
        adaptive_simpson(g, a, m, rel_tol, depth - 1)
            + adaptive_simpson(g, m, b, rel_tol, depth - 1)
    }
}

// ---------------------------------------------------------------------------
// Abel-averaged truncated norm of an evolved state (used by kkl lhs when
// boxes grow past the dense cutoff)
// ---------------------------------------------------------------------------

/// Abel-averaged per-site |ψ(t)|² profile for an arbitrary initial site,
/// by streaming polynomial propagation (any box size).
pub fn abel_site_profile_streaming(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta: f64,
    t_scale: f64,
    init_site_n: i64,
    half_width: usize,
    abel_tol: f64,
) -> Vec<f64> {
    let lattice = build_hamiltonian(f, rotation, theta, half_width);
    let n = lattice.size();
    let prop = ChebyshevPropagator::new(&lattice);
    let h = std::f64::consts::FRAC_PI_2 / prop.scale;
    let horizon = 0.5 * t_scale * (1.0 / abel_tol).ln();
    let steps = (horizon / h).ceil() as usize;

    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    psi[lattice.site_index(init_site_n)] = Complex64::new(1.0, 0.0);
    let coeffs = prop.coefficients(h);
    let mut work = StepBuffers::new(n);
    let mut acc = vec![0.0f64; n];
    let mut wsum = 0.0f64;
    for i in 0..=steps {
        let t = i as f64 * h;
        let w_node = if i == 0 || i == steps { 0.5 * h } else { h };
        let w = w_node * (-2.0 * t / t_scale).exp();
        wsum += w;
        for (a, p) in acc.iter_mut().zip(&psi) {
            *a += w * p.norm_sqr();
        }
        if i < steps {
            prop.step(&mut psi, &coeffs, &mut work);
        }
    }
    acc.into_iter().map(|v| v / wsum).collect()
}
