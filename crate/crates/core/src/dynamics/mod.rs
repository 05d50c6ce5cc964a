//! Finite-volume quantum evolution and transport diagnostics for
//! h_θ u(n) = u(n−1) + u(n+1) + f(nω+θ) u(n).
//!
//! Boxes are Dirichlet truncations on sites −L..L. Everything downstream
//! of a propagation is gated on unitarity and boundary tail mass, which
//! are the only finite-size artifacts.

pub mod criteria;
pub mod propagate;
pub mod transport;
pub mod tridiag;

pub use criteria::{
    abel_site_profile_streaming, dt_integral_check, kkl_check, l_tilde, truncated_norm_sq,
    truncated_norm_sq_two_sided, DtReport, KklReport,
};
pub use propagate::{
    abel_average_fn, abel_average_series, abel_average_trace, abel_weights, propagate,
    ChebyshevPropagator, PropagateOptions, SpectralPropagator, WavepacketTrace, DENSE_CUTOFF,
};
pub use transport::{
    ballistic_half_width, moments_and_beta, p_mass_and_xi, transport_run, BetaFit, MassReport,
    MomentReport, TransportOptions, TransportReport, TransportRun,
};
pub use tridiag::{eigen_tridiag, eigenvalues_tridiag};

use crate::arithmetic::Rotation;
use crate::cocycle::{lyapunov_estimate, Cocycle, ThetaScheme};
use crate::sampling::PiecewiseHolderFunction;
use crate::util::pmap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    /// Boundary reflection detected: the tail gate tripped.
    #[error("box too small: tail mass {tail_mass:.3e} above threshold")]
    BoxTooSmall { tail_mass: f64 },
    /// Series does not reach the Abel truncation horizon.
    #[error("insufficient horizon: have t ≤ {have:.3}, need {need:.3}")]
    InsufficientHorizon { have: f64, need: f64 },
    /// Cumulative truncated sum never reached its target.
    #[error("L-scale target beyond the {horizon}-step horizon")]
    HorizonExceeded { horizon: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

// ---------------------------------------------------------------------------
// Lattice boxes
// ---------------------------------------------------------------------------

/// Dirichlet truncation of h_θ to the sites −half_width..half_width.
/// Off-diagonal couplings are identically 1.
#[derive(Debug, Clone)]
pub struct LatticeBox {
    pub half_width: usize,
    pub theta: f64,
    /// f(nω+θ) for n = −half_width..half_width
    pub diagonal: Vec<f64>,
    /// certified sup of |f|
    pub sup_f: f64,
}

impl LatticeBox {
    pub fn size(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Row index of lattice site n.
    pub fn site_index(&self, n: i64) -> usize {
        (n + self.half_width as i64) as usize
    }

    /// Gershgorin radius: the spectrum sits inside [−bound, bound].
    pub fn spectral_bound(&self) -> f64 {
        2.0 + self.sup_f
    }
}

/// Build the lattice box with exact orbit phases nω + θ.
pub fn build_hamiltonian(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta: f64,
    half_width: usize,
) -> LatticeBox {
    assert!(half_width >= 1);
    let l = half_width as i64;
    let diagonal: Vec<f64> = (-l..=l).map(|n| f.eval(rotation.step(theta, n))).collect();
    LatticeBox { half_width, theta, diagonal, sup_f: f.sup_bound() }
}

// ---------------------------------------------------------------------------
// Spectral data and the integrated density of states
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ThetaSpectrum {
    pub theta: f64,
    pub eigenvalues: Vec<f64>,
    /// |⟨ψ_j, δ_0⟩|², the spectral-measure proxy weights at site 0
    pub w0: Vec<f64>,
    /// |⟨ψ_j, δ_1⟩|²
    pub w1: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IdsTable {
    pub energies: Vec<f64>,
    /// θ-averaged normalized counting function, nondecreasing 0 → 1
    pub values: Vec<f64>,
}

impl IdsTable {
    /// N(E) by linear interpolation of the table.
    pub fn eval(&self, e: f64) -> f64 {
        match self.energies.binary_search_by(|x| x.partial_cmp(&e).unwrap()) {
            Ok(i) => self.values[i],
            Err(0) => 0.0,
            Err(i) if i >= self.energies.len() => 1.0,
            Err(i) => {
                let (e0, e1) = (self.energies[i - 1], self.energies[i]);
                let t = (e - e0) / (e1 - e0);
                self.values[i - 1] * (1.0 - t) + self.values[i] * t
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub per_theta: Vec<ThetaSpectrum>,
    pub ids: IdsTable,
}

/// Per-phase eigen-decomposition (finite-box proxy of the spectral
/// measures) and the θ-averaged integrated density of states. Weights
/// require eigenvectors, so ask for them only at sizes you can afford.
pub fn spectral_and_ids(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta_samples: &[f64],
    half_width: usize,
    want_weights: bool,
) -> SpectralData {
    assert!(half_width >= 1 && !theta_samples.is_empty());
    let per_theta: Vec<ThetaSpectrum> = pmap(theta_samples, |&theta| {
        let lattice = build_hamiltonian(f, rotation, theta, half_width);
        let off = vec![1.0; lattice.size() - 1];
        if want_weights {
            let prop = SpectralPropagator::new(&lattice);
            let w0 = prop.site_weights(lattice.site_index(0));
            let w1 = prop.site_weights(lattice.site_index(1));
            ThetaSpectrum { theta, eigenvalues: prop.eigenvalues, w0, w1 }
        } else {
            let vals = eigenvalues_tridiag(&lattice.diagonal, &off);
            ThetaSpectrum { theta, eigenvalues: vals, w0: vec![], w1: vec![] }
        }
    });

    let bound = 2.0 + f.sup_bound();
    let m = 1025;
    let energies: Vec<f64> = (0..m)
        .map(|i| -bound + 2.0 * bound * i as f64 / (m - 1) as f64)
        .collect();
    let mut values = vec![0.0f64; m];
    for spec in &per_theta {
        let n = spec.eigenvalues.len() as f64;
        for (v, &e) in values.iter_mut().zip(&energies) {
            let count = spec.eigenvalues.partition_point(|&x| x <= e);
            *v += count as f64 / n;
        }
    }
    for v in &mut values {
        *v /= per_theta.len() as f64;
    }
    SpectralData { per_theta, ids: IdsTable { energies, values } }
}

/// The box eigenvalue nearest `target` — the on-spectrum energy proxy.
pub fn box_eigenvalue_near(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    theta: f64,
    half_width: usize,
    target: f64,
) -> f64 {
    let lattice = build_hamiltonian(f, rotation, theta, half_width);
    let off = vec![1.0; lattice.size() - 1];
    let vals = eigenvalues_tridiag(&lattice.diagonal, &off);
    *vals
        .iter()
        .min_by(|a, b| (*a - target).abs().partial_cmp(&(*b - target).abs()).unwrap())
        .unwrap()
}

/// Energy windows on a grid where the Lyapunov estimate exceeds χ —
/// the U-selection helper for experiments that need 𝓛 > χ regions.
pub fn positive_lyapunov_windows(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    e_grid: &[f64],
    chi: f64,
    k_list: &[i64],
    theta_grid: usize,
) -> Vec<(f64, f64)> {
    let flags = pmap(e_grid, |&e| {
        let coc = Cocycle::real(f, rotation, e);
        lyapunov_estimate(&coc, k_list, ThetaScheme::Grid(theta_grid)).l_hat > chi
    });
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for (i, &ok) in flags.iter().enumerate() {
        match (ok, start) {
            (true, None) => start = Some(e_grid[i]),
            (false, Some(s)) => {
                out.push((s, e_grid[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, *e_grid.last().unwrap()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::FrequencySpec;
    use num_complex::Complex64;

    fn golden_rotation() -> Rotation {
        FrequencySpec::golden().expand(40).unwrap().rotation()
    }

    /// Independent Bessel oracle: J_n(x) = (1/π)∫_0^π cos(nτ − x sin τ) dτ
    /// by heavy composite Simpson.
    fn bessel_oracle(n: i64, x: f64) -> f64 {
        let m = 4096;
        let h = std::f64::consts::PI / m as f64;
        let g = |tau: f64| (n as f64 * tau - x * tau.sin()).cos();
        let mut s = g(0.0) + g(std::f64::consts::PI);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        s * h / 3.0 / std::f64::consts::PI
    }

    #[test]
    fn free_box_small_eigenvalues() {
        let zero = PiecewiseHolderFunction::zero();
        let lattice = build_hamiltonian(&zero, golden_rotation(), 0.0, 1);
        assert_eq!(lattice.size(), 3);
        assert_eq!(lattice.diagonal, vec![0.0, 0.0, 0.0]);
        let vals = eigenvalues_tridiag(&lattice.diagonal, &[1.0, 1.0]);
        let sq2 = std::f64::consts::SQRT_2;
        for (v, e) in vals.iter().zip([-sq2, 0.0, sq2]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn gershgorin_bound_holds() {
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let lattice = build_hamiltonian(&cosine, golden_rotation(), 0.3, 100);
        assert_eq!(lattice.spectral_bound(), 8.0);
        let off = vec![1.0; lattice.size() - 1];
        let vals = eigenvalues_tridiag(&lattice.diagonal, &off);
        assert!(vals.iter().all(|v| v.abs() <= 8.0));
    }

    #[test]
    fn propagate_time_zero() {
        let zero = PiecewiseHolderFunction::zero();
        let lattice = build_hamiltonian(&zero, golden_rotation(), 0.0, 32);
        let trace = propagate(&lattice, &[0.0], &PropagateOptions::default()).unwrap();
        assert!((trace.amplitude(0, 0) - 0.5).abs() < 1e-14);
        assert!((trace.amplitude(0, 1) - 0.5).abs() < 1e-14);
        assert!(trace.profiles[0].iter().sum::<f64>() - 1.0 < 1e-12);
    }

    #[test]
    fn free_propagation_matches_bessel_oracle() {
        let zero = PiecewiseHolderFunction::zero();
        let t = 5.0;
        let lattice = build_hamiltonian(&zero, golden_rotation(), 0.0, 64);
        // dense spectral path
        let prop = SpectralPropagator::new(&lattice);
        let u0 = prop.amplitudes(lattice.site_index(0), t);
        for n in -20i64..=20 {
            let expect = bessel_oracle(n, 2.0 * t).abs();
            let got = u0[lattice.site_index(n)].norm();
            assert!((got - expect).abs() < 1e-6, "n={n}: {got} vs {expect}");
        }
        // polynomial path on the same box
        let cheb = ChebyshevPropagator::new(&lattice);
        let mut psi = vec![Complex64::new(0.0, 0.0); lattice.size()];
        psi[lattice.site_index(0)] = Complex64::new(1.0, 0.0);
        let coeffs = cheb.coefficients(t);
        let mut work = propagate::StepBuffers::new(lattice.size());
        cheb.step(&mut psi, &coeffs, &mut work);
        for n in -20i64..=20 {
            let expect = bessel_oracle(n, 2.0 * t).abs();
            let got = psi[lattice.site_index(n)].norm();
            assert!((got - expect).abs() < 1e-6, "chebyshev n={n}: {got} vs {expect}");
        }
    }

    #[test]
    fn unitarity_and_tail_gate() {
        let zero = PiecewiseHolderFunction::zero();
        let lattice = build_hamiltonian(&zero, golden_rotation(), 0.0, 80);
        let trace =
            propagate(&lattice, &[0.0, 5.0, 10.0, 20.0], &PropagateOptions::default()).unwrap();
        assert!(trace.unitarity_defect < 1e-10);
        assert!(trace.tail_mass < 1e-8);
        // ballistic front hits the boundary well before t = 200
        let err = propagate(&lattice, &[200.0], &PropagateOptions::default());
        assert!(matches!(err, Err(DynamicsError::BoxTooSmall { .. })));
    }

    #[test]
    fn box_doubling_stability() {
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let rot = golden_rotation();
        let a = build_hamiltonian(&cosine, rot, 0.3, 128);
        let b = build_hamiltonian(&cosine, rot, 0.3, 256);
        let ta = propagate(&a, &[5.0, 20.0], &PropagateOptions::default()).unwrap();
        let tb = propagate(&b, &[5.0, 20.0], &PropagateOptions::default()).unwrap();
        let mut worst = 0.0f64;
        for ti in 0..2 {
            for n in -100i64..=100 {
                worst = worst.max((ta.amplitude(ti, n) - tb.amplitude(ti, n)).abs());
            }
        }
        assert!(worst <= 1e-6, "doubling moved profiles by {worst}");
    }

    #[test]
    fn abel_examples() {
        // weight normalization is exact
        let one = abel_average_fn(|_| 1.0, 37.0, 1e-8);
        assert!((one - 1.0).abs() < 1e-14);
        // Gamma integral: ⟨t⟩_T = T/2
        for t_scale in [1.0, 10.0, 400.0] {
            let v = abel_average_fn(|t| t, t_scale, 1e-10);
            assert!(
                (v - t_scale / 2.0).abs() / (t_scale / 2.0) < 1e-4,
                "⟨t⟩ = {v} at T = {t_scale}"
            );
        }
    }

    #[test]
    fn abel_trace_mass_is_preserved() {
        let zero = PiecewiseHolderFunction::zero();
        let lattice = build_hamiltonian(&zero, golden_rotation(), 0.0, 260);
        let t_scale = 10.0;
        let horizon = 0.5 * t_scale * (1e8f64).ln();
        let times: Vec<f64> = (0..=800).map(|i| horizon * i as f64 / 800.0).collect();
        let trace = propagate(&lattice, &times, &PropagateOptions::default()).unwrap();
        let profile = abel_average_trace(&trace, t_scale, 1e-8).unwrap();
        let total: f64 = profile.iter().sum();
        assert!((total - 1.0).abs() < 1e-7, "Σ a_T = {total}");
        // horizon gate
        let err = abel_average_trace(&trace, 500.0, 1e-8);
        assert!(matches!(err, Err(DynamicsError::InsufficientHorizon { .. })));
    }

    #[test]
    fn truncated_norm_examples() {
        assert_eq!(truncated_norm_sq(|_| 1.0, 4.0), 4.0);
        assert!((truncated_norm_sq(|_| 1.0, 2.5) - 2.5).abs() < 1e-15);
        // identity matrices have squared HS norm 2
        assert!((truncated_norm_sq(|_| 2.0, 3.0) - 6.0).abs() < 1e-15);
        // two-sided fractional weights
        let v = truncated_norm_sq_two_sided(|_| 1.0, 1.5, 2.5);
        // n ∈ {−1,0,1,2} plus 0.5 each at −2 and 3
        assert!((v - 5.0).abs() < 1e-15);
    }

    #[test]
    fn l_tilde_free_closed_form() {
        let zero = PiecewiseHolderFunction::zero();
        let rot = golden_rotation();
        let coc = Cocycle::real(&zero, rot, 0.0);
        for eps in [0.5, 0.1, 0.05] {
            let l = l_tilde(&coc, 0.3, eps, true, 2_000_000).unwrap();
            let expect = 2.0 / (eps * eps);
            assert!(
                (l - expect).abs() < 1e-9 * expect.max(1.0),
                "ε={eps}: L̃ = {l} vs {expect}"
            );
        }
        // the defining equation is solved on the squared scale
        let eps = 0.2;
        let l = l_tilde(&coc, 0.3, eps, true, 1_000_000).unwrap();
        let target_sq = (2.0 / eps) * (2.0 / eps);
        let norm_sq = truncated_norm_sq(|_| 2.0, l);
        assert!((norm_sq - target_sq).abs() < 1e-10 * target_sq);
    }

    #[test]
    fn l_tilde_shrinks_for_growing_cocycles() {
        let zero = PiecewiseHolderFunction::zero();
        let rot = golden_rotation();
        let slow = Cocycle::real(&zero, rot, 0.0);
        let fast = Cocycle::real(&zero, rot, 3.0);
        let eps = 0.01;
        let l_slow = l_tilde(&slow, 0.3, eps, true, 2_000_000).unwrap();
        let l_fast = l_tilde(&fast, 0.3, eps, true, 2_000_000).unwrap();
        assert!(l_fast < l_slow, "{l_fast} ≥ {l_slow}");
        // geometric cumulative sums: L̃ = O(ln(1/ε))
        assert!(l_fast < 40.0, "L̃ = {l_fast}");
        // horizon error surfaces
        let err = l_tilde(&slow, 0.3, 1e-4, true, 1000);
        assert!(matches!(err, Err(DynamicsError::HorizonExceeded { .. })));
    }

    #[test]
    fn kkl_free_case() {
        let zero = PiecewiseHolderFunction::zero();
        let rot = golden_rotation();
        let report = kkl_check(&zero, rot, 0.0, 50.0, 200.0, 200.0, 1200).unwrap();
        match report.ratio {
            Some(r) => assert!(r >= 0.01, "ratio {r}"),
            None => {
                // empty membership set: the report still carries the lhs
                assert!(report.lhs > 0.0 && report.rhs_mass == 0.0);
            }
        }
        assert!(report.lhs > 0.5, "most mass sits within ±200 at T = 50");
    }

    #[test]
    fn dt_free_energy_window_decays() {
        let zero = PiecewiseHolderFunction::zero();
        let rot = golden_rotation();
        // off-spectrum window [3,4]: constant hyperbolic cocycle decays fast
        let t_grid = [100.0f64, 300.0, 1000.0];
        let integrals: Vec<f64> = t_grid
            .iter()
            .map(|&t| {
                let n_max = (t.powf(0.3) as i64).max(1);
                let cps: Vec<i64> = (1..=n_max).collect();
                let g = |e: f64| {
                    let coc = Cocycle::new(&zero, rot, Complex64::new(e, 1.0 / t));
                    let m = coc
                        .log_norm_profile(0.0, &cps)
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max);
                    (-2.0 * m).exp()
                };
                (0..=64).map(|i| g(3.0 + i as f64 / 64.0) / 65.0).sum::<f64>()
            })
            .collect();
        assert!(integrals[2] < integrals[0] * 0.05, "{integrals:?}");
    }

    #[test]
    fn ids_free_matches_arcsine_law() {
        let zero = PiecewiseHolderFunction::zero();
        let rot = golden_rotation();
        let data = spectral_and_ids(&zero, rot, &[0.0], 2000, false);
        assert!((data.ids.eval(0.0) - 0.5).abs() < 1e-3);
        for i in 0..=20 {
            let e = -1.9 + 3.8 * i as f64 / 20.0;
            let expect = (-e / 2.0).acos() / std::f64::consts::PI;
            let got = data.ids.eval(e);
            assert!((got - expect).abs() < 0.01, "E={e}: {got} vs {expect}");
        }
    }

    #[test]
    fn spectral_weights_sum_to_one() {
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let rot = golden_rotation();
        let data = spectral_and_ids(&cosine, rot, &[0.123, 0.456], 150, true);
        for spec in &data.per_theta {
            let s0: f64 = spec.w0.iter().sum();
            let s1: f64 = spec.w1.iter().sum();
            assert!((s0 - 1.0).abs() < 1e-10);
            assert!((s1 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn transport_run_point_mass_moments() {
        // strongly localized at small times: supercritical cosine keeps
        // moments bounded and the ξ boxes tiny
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let rot = golden_rotation();
        let t_grid: Vec<f64> = crate::util::geometric_grid(5.0, 60.0, 6);
        let run = transport_run(&cosine, rot, 0.1234, &t_grid, &TransportOptions::default())
            .unwrap();
        assert!(run.unitarity_defect < 1e-8);
        assert!(run.tail_mass < 1e-8);
        let report = moments_and_beta(&run, &[2.0]);
        // localized: second moment stays O(1)
        assert!(report.raw[0].iter().all(|&m| m < 50.0), "{:?}", report.raw[0]);
        let mass = p_mass_and_xi(&run, &[0.2], &[0.1, 0.5]);
        assert!(mass.p_zeta[0].iter().all(|&p| p > 0.2), "{:?}", mass.p_zeta[0]);
        // a(n,t) ≥ 0 everywhere
        assert!(run.raw.iter().flatten().all(|&a| a >= 0.0));
    }

    #[test]
    fn moment_monotonicity_in_p() {
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let rot = golden_rotation();
        let t_grid: Vec<f64> = crate::util::geometric_grid(5.0, 40.0, 4);
        let run =
            transport_run(&cosine, rot, 0.3, &t_grid, &TransportOptions::default()).unwrap();
        let report = moments_and_beta(&run, &[0.5, 1.0, 2.0]);
        for ti in 0..t_grid.len() {
            let mut last = 0.99; // moments are ≥ 1 after unit normalization
            for pi in 0..3 {
                assert!(report.raw[pi][ti] >= last - 1e-12);
                last = report.raw[pi][ti];
            }
        }
    }


    #[test]
    fn truncated_cocycle_norm_outgrows_t() {
        // wherever the exponent estimate clears 0.3, the truncated
        // cocycle norm up to length T^ζ exceeds T past a small threshold
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let e = box_eigenvalue_near(&cosine, rot, 0.0, 500, 0.0);
        let coc = crate::cocycle::Cocycle::real(&cosine, rot, e);
        let est = crate::cocycle::lyapunov_estimate(
            &coc,
            &[125, 250, 500, 1000],
            crate::cocycle::ThetaScheme::Grid(256),
        );
        assert!(est.l_hat > 0.3);
        let zeta = 0.5;
        for t in [50.0f64, 200.0, 1000.0] {
            let l = t.powf(zeta);
            let m = l as usize + 2;
            let prods: Vec<f64> = (1..=m as i64)
                .map(|n| (2.0 * coc.iterate(0.3, n).unwrap().log_hs_norm()).exp())
                .collect();
            let norm_sq = truncated_norm_sq(|n| prods[(n - 1) as usize], l);
            assert!(
                norm_sq.sqrt() > t,
                "T={t}: truncated norm {} did not exceed T",
                norm_sq.sqrt()
            );
        }
    }

    #[test]
    fn lyapunov_windows_free_particle() {
        let zero = PiecewiseHolderFunction::zero();
        let rot = golden_rotation();
        let e_grid: Vec<f64> = crate::util::linear_grid(-4.0, 4.0, 33);
        let windows =
            positive_lyapunov_windows(&zero, rot, &e_grid, 0.2, &[50, 100, 200], 32);
        // 𝓛 > 0.2 only outside the band [−2, 2]
        assert_eq!(windows.len(), 2);
        assert!(windows[0].1 < -2.0 && windows[1].0 > 2.0);
    }
}
