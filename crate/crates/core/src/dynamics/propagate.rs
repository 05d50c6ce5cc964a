//! Finite-box propagators and Abel time averages.
//!
//! The dense spectral decomposition is the default propagator (exact up
//! to eigensolver accuracy); a degree-adaptive polynomial expansion of
//! e^{−ith} takes over for boxes past the dense cutoff. Dirichlet
//! truncation is the only finite-size artifact, so every trace carries a
//! tail-mass gate that rejects runs with boundary reflection.

use super::tridiag::eigen_tridiag;
use super::{DynamicsError, LatticeBox};
use crate::special::bessel_j_sequence;
use num_complex::Complex64;

/// Boxes up to this many sites diagonalize densely.
pub const DENSE_CUTOFF: usize = 4000;

#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    pub tail_threshold: f64,
    pub unitarity_threshold: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { tail_threshold: 1e-8, unitarity_threshold: 1e-8 }
    }
}

/// Time-indexed probability profiles a(n,t) = ½(|⟨e^{−ith}δ_0, δ_n⟩|² +
/// |⟨e^{−ith}δ_1, δ_n⟩|²) from the two-site initial pair.
#[derive(Debug, Clone)]
pub struct WavepacketTrace {
    pub times: Vec<f64>,
    /// profiles[i][site] with site = n + half_width
    pub profiles: Vec<Vec<f64>>,
    pub half_width: usize,
    /// max over t of the mass in the outer 5% of the box
    pub tail_mass: f64,
    /// max over t of |Σ_n a(n,t) − 1|
    pub unitarity_defect: f64,
}

impl WavepacketTrace {
    pub fn site_index(&self, n: i64) -> usize {
        (n + self.half_width as i64) as usize
    }

    pub fn amplitude(&self, time_index: usize, n: i64) -> f64 {
        self.profiles[time_index][self.site_index(n)]
    }
}

/// Mass in the outer 5% of sites (both ends combined).
pub(crate) fn tail_mass_of(profile: &[f64]) -> f64 {
    let n = profile.len();
    let edge = (n as f64 * 0.025).ceil() as usize;
    let edge = edge.max(1).min(n / 2);
    profile[..edge].iter().sum::<f64>() + profile[n - edge..].iter().sum::<f64>()
}

// ---------------------------------------------------------------------------
// Dense spectral propagator
// ---------------------------------------------------------------------------

/// Eigen-decomposition of a lattice box, reusable across times and
/// spectral queries.
pub struct SpectralPropagator {
    pub eigenvalues: Vec<f64>,
    /// column-major eigenvectors
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl SpectralPropagator {
    pub fn new(lattice: &LatticeBox) -> Self {
        let n = lattice.size();
        let off = vec![1.0; n - 1];
        let (vals, vecs) = eigen_tridiag(&lattice.diagonal, &off, true);
        SpectralPropagator { eigenvalues: vals, vectors: vecs.unwrap(), n }
    }

    /// u(t) = e^{−ith} δ_{site}: amplitudes at every site.
    pub fn amplitudes(&self, init_site: usize, t: f64) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let col = &self.vectors[j * n..(j + 1) * n];
            let c = col[init_site];
            if c == 0.0 {
                continue;
            }
            let phase = Complex64::from_polar(1.0, -self.eigenvalues[j] * t);
            let w = phase * c;
            for (o, &v) in out.iter_mut().zip(col.iter()) {
                *o += w * v;
            }
        }
        out
    }

    /// Spectral weights |⟨ψ_j, δ_site⟩|² for one site.
    pub fn site_weights(&self, site: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.vectors[j * self.n + site].powi(2)).collect()
    }

    /// Exact Abel average ⟨|u_n(t)|²⟩_T per site for the evolution of
    /// δ_{init_site}: Σ_{j,l} c_j c_l ψ_j(n) ψ_l(n) / (1 + (TΔ_{jl}/2)²).
    pub fn abel_profile(&self, init_site: usize, t_scale: f64) -> Vec<f64> {
        let n = self.n;
        let c: Vec<f64> = (0..n).map(|j| self.vectors[j * n + init_site]).collect();
        let mut out = vec![0.0f64; n];
        // row-by-row quadratic form; kernel is symmetric in (j,l)
        for j in 0..n {
            let col_j = &self.vectors[j * n..(j + 1) * n];
            let cj = c[j];
            if cj == 0.0 {
                continue;
            }
            // diagonal term
            for (o, &vj) in out.iter_mut().zip(col_j.iter()) {
                *o += cj * cj * vj * vj;
            }
            for l in j + 1..n {
                let kern = 1.0
                    / (1.0
                        + (0.5 * t_scale * (self.eigenvalues[j] - self.eigenvalues[l])).powi(2));
                if kern < 1e-14 {
                    continue;
                }
                let w = 2.0 * cj * c[l] * kern;
                let col_l = &self.vectors[l * n..(l + 1) * n];
                for ((o, &vj), &vl) in out.iter_mut().zip(col_j.iter()).zip(col_l.iter()) {
                    *o += w * vj * vl;
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Polynomial (Chebyshev) propagator
// ---------------------------------------------------------------------------

/// Streaming propagator: advances a state by e^{−iHΔt} through a
/// Chebyshev expansion of the scaled Hamiltonian. Exactness is limited
/// only by the coefficient cutoff (~1e-15).
pub struct ChebyshevPropagator {
    diag_scaled: Vec<f64>,
    /// spectral half-width used for scaling (Gershgorin bound + margin)
    pub scale: f64,
    n: usize,
}

impl ChebyshevPropagator {
    pub fn new(lattice: &LatticeBox) -> Self {
        let scale = lattice.spectral_bound() * (1.0 + 1e-3) + 1e-9;
        ChebyshevPropagator {
            diag_scaled: lattice.diagonal.iter().map(|d| d / scale).collect(),
            scale,
            n: lattice.size(),
        }
    }

    /// Chebyshev coefficients (2−δ_{m0})(−i)^m J_m(x) truncated at 1e-16.
    pub fn coefficients(&self, dt: f64) -> Vec<Complex64> {
        let x = self.scale * dt;
        let m_max = (x + 12.0 * x.cbrt() + 25.0).ceil() as usize;
        let j = bessel_j_sequence(m_max, x);
        let mut coeffs = Vec::with_capacity(m_max + 1);
        let units = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        for (m, &jm) in j.iter().enumerate() {
            let w = if m == 0 { 1.0 } else { 2.0 };
            coeffs.push(units[m % 4] * (w * jm));
        }
        // trim negligible tail
        while coeffs.len() > 2 && coeffs.last().unwrap().norm() < 1e-16 {
            coeffs.pop();
        }
        coeffs
    }

    #[inline]
    fn apply_scaled(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let hop = 1.0 / self.scale;
        out[0] = self.diag_scaled[0] * v[0] + hop * v[1];
        for i in 1..n - 1 {
            out[i] = self.diag_scaled[i] * v[i] + hop * (v[i - 1] + v[i + 1]);
        }
        out[n - 1] = self.diag_scaled[n - 1] * v[n - 1] + hop * v[n - 2];
    }

    /// ψ ← e^{−iHΔt} ψ with precomputed coefficients for this Δt.
    pub fn step(&self, psi: &mut [Complex64], coeffs: &[Complex64], work: &mut StepBuffers) {
        let n = self.n;
        work.phi0[..n].copy_from_slice(psi);
        self.apply_scaled(&work.phi0, &mut work.phi1);
        for (p, (&f0, &f1)) in
            psi.iter_mut().zip(work.phi0.iter().zip(work.phi1.iter()))
        {
            *p = coeffs[0] * f0 + coeffs[1] * f1;
        }
        for c in coeffs.iter().skip(2) {
            self.apply_scaled(&work.phi1, &mut work.phi2);
            for (p2, &p0) in work.phi2.iter_mut().zip(work.phi0.iter()) {
                *p2 = 2.0 * *p2 - p0;
            }
            for (p, &f) in psi.iter_mut().zip(work.phi2.iter()) {
                *p += *c * f;
            }
            std::mem::swap(&mut work.phi0, &mut work.phi1);
            std::mem::swap(&mut work.phi1, &mut work.phi2);
        }
    }
}

pub struct StepBuffers {
    phi0: Vec<Complex64>,
    phi1: Vec<Complex64>,
    phi2: Vec<Complex64>,
}

impl StepBuffers {
    pub fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        StepBuffers { phi0: z.clone(), phi1: z.clone(), phi2: z }
    }
}

// ---------------------------------------------------------------------------
// The propagate operation
// ---------------------------------------------------------------------------

/// Evolve δ_0 and δ_1 and collect a(n,t) at the requested times.
///
/// Dense spectral decomposition for boxes up to [`DENSE_CUTOFF`] sites,
/// polynomial expansion beyond. Fails with `BoxTooSmall` when the
/// boundary tail gate trips.
pub fn propagate(
    lattice: &LatticeBox,
    t_grid: &[f64],
    opts: &PropagateOptions,
) -> Result<WavepacketTrace, DynamicsError> {
    assert!(!t_grid.is_empty());
    assert!(t_grid.windows(2).all(|w| w[0] <= w[1]), "t_grid must be sorted");
    assert!(t_grid[0] >= 0.0);
    let n = lattice.size();
    let site0 = lattice.site_index(0);
    let site1 = lattice.site_index(1);

    let mut profiles = Vec::with_capacity(t_grid.len());
    if n <= DENSE_CUTOFF {
        let prop = SpectralPropagator::new(lattice);
        for &t in t_grid {
            let u0 = prop.amplitudes(site0, t);
            let u1 = prop.amplitudes(site1, t);
            let a: Vec<f64> =
                u0.iter().zip(&u1).map(|(a, b)| 0.5 * (a.norm_sqr() + b.norm_sqr())).collect();
            profiles.push(a);
        }
    } else {
        let prop = ChebyshevPropagator::new(lattice);
        let mut work = StepBuffers::new(n);
        let mut psi0 = vec![Complex64::new(0.0, 0.0); n];
        let mut psi1 = psi0.clone();
        psi0[site0] = Complex64::new(1.0, 0.0);
        psi1[site1] = Complex64::new(1.0, 0.0);
        let mut t_now = 0.0;
        for &t in t_grid {
            let dt = t - t_now;
            if dt > 0.0 {
                // split long jumps so coefficient degree stays moderate
                let pieces = (prop.scale * dt / 64.0).ceil().max(1.0) as usize;
                let sub = dt / pieces as f64;
                let coeffs = prop.coefficients(sub);
                for _ in 0..pieces {
                    prop.step(&mut psi0, &coeffs, &mut work);
                    prop.step(&mut psi1, &coeffs, &mut work);
                }
                t_now = t;
            }
            let a: Vec<f64> = psi0
                .iter()
                .zip(&psi1)
                .map(|(a, b)| 0.5 * (a.norm_sqr() + b.norm_sqr()))
                .collect();
            profiles.push(a);
        }
    }

    let mut tail = 0.0f64;
    let mut defect = 0.0f64;
    for p in &profiles {
        tail = tail.max(tail_mass_of(p));
        defect = defect.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    if tail > opts.tail_threshold {
        return Err(DynamicsError::BoxTooSmall { tail_mass: tail });
    }
    Ok(WavepacketTrace {
        times: t_grid.to_vec(),
        profiles,
        half_width: lattice.half_width,
        tail_mass: tail,
        unitarity_defect: defect,
    })
}

// ---------------------------------------------------------------------------
// Abel averages
// ---------------------------------------------------------------------------

/// ⟨g⟩_T = (2/T)∫_0^∞ e^{−2t/T} g(t) dt by composite Simpson on a
/// geometric-in-t panel ladder, truncated at t_max = (T/2)·ln(1/tol).
/// Weights are normalized so ⟨1⟩_T = 1 exactly.
pub fn abel_average_fn(g: impl Fn(f64) -> f64, t_scale: f64, tol: f64) -> f64 {
    assert!(t_scale > 0.0 && tol > 0.0 && tol < 1.0);
    let t_max = 0.5 * t_scale * (1.0 / tol).ln();
    // panel edges: 0, T/64, T/32, …, doubling up to t_max
    let mut edges = vec![0.0, t_scale / 64.0];
    while *edges.last().unwrap() < t_max {
        let next = (edges.last().unwrap() * 2.0).min(t_max);
        edges.push(next);
        if next >= t_max {
            break;
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = 64; // even count per panel
        let h = (b - a) / m as f64;
        for i in 0..=m {
            let t = a + h * i as f64;
            let simpson = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let wgt = simpson * h / 3.0 * (-2.0 * t / t_scale).exp();
            num += wgt * g(t);
            den += wgt;
        }
    }
    num / den
}

/// Normalized Abel weights for a sampled series on the given times:
/// trapezoid-in-t with the exponential factor folded in, summing to 1.
pub fn abel_weights(times: &[f64], t_scale: f64) -> Vec<f64> {
    assert!(times.len() >= 2);
    let n = times.len();
    let mut w = vec![0.0f64; n];
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { (times[i] - times[i - 1]) / 2.0 };
        let right = if i + 1 == n { 0.0 } else { (times[i + 1] - times[i]) / 2.0 };
        w[i] = (left + right) * (-2.0 * times[i] / t_scale).exp();
    }
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    w
}

/// Abel average of a sampled scalar series; requires the horizon
/// t_max ≥ (T/2)·ln(1/tol).
pub fn abel_average_series(
    times: &[f64],
    values: &[f64],
    t_scale: f64,
    tol: f64,
) -> Result<f64, DynamicsError> {
    assert_eq!(times.len(), values.len());
    let need = 0.5 * t_scale * (1.0 / tol).ln();
    let have = *times.last().unwrap();
    if have < need {
        return Err(DynamicsError::InsufficientHorizon { have, need });
    }
    let w = abel_weights(times, t_scale);
    Ok(w.iter().zip(values).map(|(w, v)| w * v).sum())
}

/// Per-site Abel average of a trace (same horizon requirement).
pub fn abel_average_trace(
    trace: &WavepacketTrace,
    t_scale: f64,
    tol: f64,
) -> Result<Vec<f64>, DynamicsError> {
    let need = 0.5 * t_scale * (1.0 / tol).ln();
    let have = *trace.times.last().unwrap();
    if have < need {
        return Err(DynamicsError::InsufficientHorizon { have, need });
    }
    let w = abel_weights(&trace.times, t_scale);
    let n = trace.profiles[0].len();
    let mut out = vec![0.0f64; n];
    for (wi, p) in w.iter().zip(&trace.profiles) {
        for (o, &v) in out.iter_mut().zip(p) {
            *o += wi * v;
        }
    }
    Ok(out)
}
