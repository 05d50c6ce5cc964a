//! Transfer-matrix cocycles over torus rotations.
//!
//! The cocycle of (ω, f, z) is the family of SL(2) products
//!
//! ```text
//!     A_k(θ) = A(R^{k-1}θ) ⋯ A(Rθ) A(θ),     A(θ) = [[z − f(θ), −1], [1, 0]],
//! ```
//!
//! with A_0 = I and the backward products fixed by the group identity
//! A_{−m}(θ) = [A_m(R^{−m}θ)]^{−1}. Long products are held in
//! overflow-safe scaled form (matrix of moderate norm plus an exact
//! accumulated log factor). On top of the products sit the Lyapunov
//! estimator, uniform upper-bound and perturbation checks, level-set
//! measures, growth-site certificates, the Φ growth criterion, and the
//! cocycle pseudometric.
//!
//! Matrix norm is the largest singular value via the closed-form 2×2
//! SVD; truncated-sum machinery elsewhere uses Hilbert–Schmidt norms.

use crate::arithmetic::{torus_distance, FrequencyData, Rotation};
use crate::sampling::PiecewiseHolderFunction;
use crate::util::pmap;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("non-finite cocycle data: {0}")]
    Overflow(String),
    #[error("growth-site search failed: {0}")]
    GrowthSiteNotFound(String),
}

// ---------------------------------------------------------------------------
// 2×2 matrices over f64 or Complex64
// ---------------------------------------------------------------------------

pub(crate) trait Entry:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn abs_sq(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn to_c64(self) -> Complex64;
}

impl Entry for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Entry for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct M2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Entry> M2<T> {
    fn identity() -> Self {
        M2 { a: T::one(), b: T::zero(), c: T::zero(), d: T::one() }
    }

    /// Single transfer step [[v, −1], [1, 0]] with v = z − f(θ).
    #[inline]
    fn transfer(v: T) -> Self {
        M2 { a: v, b: -T::one(), c: T::one(), d: T::zero() }
    }

    /// Inverse of a transfer step (unit determinant: the adjugate).
    #[inline]
    fn transfer_inverse(v: T) -> Self {
        M2 { a: T::zero(), b: T::one(), c: -T::one(), d: v }
    }

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        M2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    #[inline]
    fn hs_sq(&self) -> f64 {
        self.a.abs_sq() + self.b.abs_sq() + self.c.abs_sq() + self.d.abs_sq()
    }

    fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    fn adjugate(&self) -> Self {
        M2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Largest singular value: σ² = (s + √(s² − 4|det|²))/2 with s = ‖·‖²_HS.
    fn op_norm(&self) -> f64 {
        let s = self.hs_sq();
        let d2 = self.det().abs_sq();
        let disc = (s * s - 4.0 * d2).max(0.0);
        (0.5 * (s + disc.sqrt())).sqrt()
    }

    fn scaled(&self, s: f64) -> Self {
        M2 { a: self.a.scale(s), b: self.b.scale(s), c: self.c.scale(s), d: self.d.scale(s) }
    }

    fn add(self, rhs: Self) -> Self {
        M2 { a: self.a + rhs.a, b: self.b + rhs.b, c: self.c + rhs.c, d: self.d + rhs.d }
    }

    fn to_c64_m2(self) -> M2<Complex64> {
        M2 { a: self.a.to_c64(), b: self.b.to_c64(), c: self.c.to_c64(), d: self.d.to_c64() }
    }
}

// ---------------------------------------------------------------------------
// Public matrix and scaled-product types
// ---------------------------------------------------------------------------

/// One-step transfer matrix [[z − f(θ), −1], [1, 0]]. Entries are complex;
/// they are real whenever the spectral parameter is real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    /// row-major entries [a, b, c, d]
    pub entries: [Complex64; 4],
}

impl TransferMatrix {
    fn from_m2(m: M2<Complex64>) -> Self {
        TransferMatrix { entries: [m.a, m.b, m.c, m.d] }
    }

    fn m2(&self) -> M2<Complex64> {
        M2 { a: self.entries[0], b: self.entries[1], c: self.entries[2], d: self.entries[3] }
    }

    pub fn det(&self) -> Complex64 {
        self.m2().det()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.m2().op_norm()
    }

    pub fn hs_norm(&self) -> f64 {
        self.m2().hs_sq().sqrt()
    }

    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        TransferMatrix::from_m2(self.m2().mul(rhs.m2()))
    }

    /// Inverse through the adjugate (valid for unit determinant).
    pub fn inverse_unit_det(&self) -> TransferMatrix {
        TransferMatrix::from_m2(self.m2().adjugate())
    }
}

/// The matrix [[z − f(θ), −1], [1, 0]].
pub fn transfer_matrix(f: &PiecewiseHolderFunction, z: Complex64, theta: f64) -> TransferMatrix {
    TransferMatrix::from_m2(M2::transfer(z - Complex64::new(f.eval(theta), 0.0)))
}

/// Overflow-safe representation of A_k(θ): the true product equals
/// e^{log_scale} · matrix, with the matrix kept at moderate norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProduct {
    pub matrix: TransferMatrix,
    pub log_scale: f64,
    pub k: i64,
    pub theta0: f64,
}

impl ScaledProduct {
    /// ln‖A_k(θ)‖ (operator norm).
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.matrix.op_norm().ln()
    }

    /// ‖A_k(θ)‖; +∞ once the true norm exceeds f64 range.
    pub fn norm(&self) -> f64 {
        self.log_norm().exp()
    }

    /// ln of the Hilbert–Schmidt norm.
    pub fn log_hs_norm(&self) -> f64 {
        self.log_scale + 0.5 * self.matrix.m2().hs_sq().ln()
    }

    /// | |det(matrix)|·e^{2·log_scale} − 1 |, the unit-determinant defect.
    ///
    /// The determinant is recomputed from the stored entries, so the
    /// figure is meaningful while the accumulated growth e^{log_scale}
    /// stays within ~1e7 (beyond that, σ_min of the true product sits
    /// below the f64 cancellation floor of the entries; use the
    /// forward/backward norm agreement as the long-product consistency
    /// check instead).
    pub fn det_defect(&self) -> f64 {
        let ln_det = 0.5 * self.matrix.m2().det().abs_sq().ln();
        ((ln_det + 2.0 * self.log_scale).exp() - 1.0).abs()
    }
}

// ---------------------------------------------------------------------------
// The cocycle walker
// ---------------------------------------------------------------------------

// keep the scaled matrix's largest singular value inside [1, 2^256];
// the cheap HS trigger fires at 2^500 = σ² well below overflow, and the
// up-rescale guards σ dipping under 1 after a contraction
const HS_SQ_HI: f64 = 3.2e150; // ≈ 2^500
const HS_SQ_LO: f64 = 2.0;

struct Walker<T: Entry> {
    m: M2<T>,
    log_scale: f64,
}

impl<T: Entry> Walker<T> {
    fn new() -> Self {
        Walker { m: M2::identity(), log_scale: 0.0 }
    }

    #[inline]
    fn push(&mut self, factor: M2<T>) {
        self.m = factor.mul(self.m);
        let hs = self.m.hs_sq();
        if hs > HS_SQ_HI {
            let op = self.m.op_norm();
            self.m = self.m.scaled(1.0 / op);
            self.log_scale += op.ln();
        } else if hs < HS_SQ_LO {
            let op = self.m.op_norm();
            if op < 1.0 {
                self.m = self.m.scaled(1.0 / op);
                self.log_scale += op.ln();
            }
        }
    }

    fn log_norm(&self) -> f64 {
        self.log_scale + self.m.op_norm().ln()
    }

    fn log_hs_sq(&self) -> f64 {
        2.0 * self.log_scale + self.m.hs_sq().ln()
    }
}

/// A quasiperiodic Schrödinger cocycle (ω, A^{f,z}).
#[derive(Clone, Copy)]
pub struct Cocycle<'a> {
    pub f: &'a PiecewiseHolderFunction,
    pub rotation: Rotation,
    pub z: Complex64,
}

impl<'a> Cocycle<'a> {
    pub fn new(f: &'a PiecewiseHolderFunction, rotation: Rotation, z: Complex64) -> Self {
        Cocycle { f, rotation, z }
    }

    pub fn real(f: &'a PiecewiseHolderFunction, rotation: Rotation, energy: f64) -> Self {
        Cocycle { f, rotation, z: Complex64::new(energy, 0.0) }
    }

    pub fn transfer_matrix(&self, theta: f64) -> TransferMatrix {
        transfer_matrix(self.f, self.z, theta)
    }

    #[inline]
    fn v_real(&self, theta: f64) -> f64 {
        self.z.re - self.f.eval(theta)
    }

    #[inline]
    fn v_complex(&self, theta: f64) -> Complex64 {
        self.z - Complex64::new(self.f.eval(theta), 0.0)
    }

    /// A_k(θ) as a scaled product; k may be negative.
    pub fn iterate(&self, theta: f64, k: i64) -> Result<ScaledProduct, CocycleError> {
        if !self.z.re.is_finite() || !self.z.im.is_finite() || !self.f.sup_bound().is_finite() {
            return Err(CocycleError::Overflow("non-finite z or sampling bound".into()));
        }
        let (m, log_scale) = if self.z.im == 0.0 {
            let (w, _) = self.walk_real(theta, k, &[]);
            (w.m.to_c64_m2(), w.log_scale)
        } else {
            let (w, _) = self.walk_complex(theta, k, &[]);
            (w.m, w.log_scale)
        };
        Ok(ScaledProduct { matrix: TransferMatrix::from_m2(m), log_scale, k, theta0: theta })
    }

    /// ln‖A_k(θ)‖ without materializing the product.
    pub fn log_norm(&self, theta: f64, k: i64) -> f64 {
        self.log_norm_profile(theta, &[k])[0]
    }

    /// ln‖A_k(θ)‖ at every checkpoint, one pass. Checkpoints must be
    /// strictly increasing in |k| and share one sign.
    pub fn log_norm_profile(&self, theta: f64, checkpoints: &[i64]) -> Vec<f64> {
        if checkpoints.is_empty() {
            return vec![];
        }
        let k_last = *checkpoints.last().unwrap();
        if self.z.im == 0.0 {
            self.walk_real(theta, k_last, checkpoints).1
        } else {
            self.walk_complex(theta, k_last, checkpoints).1
        }
    }

    fn walk_real(&self, theta: f64, k: i64, checkpoints: &[i64]) -> (Walker<f64>, Vec<f64>) {
        let mut w = Walker::<f64>::new();
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next = checkpoints.iter().copied().peekable();
        while next.peek() == Some(&0) {
            next.next();
            out.push(0.0);
        }
        if k >= 0 {
            for j in 0..k {
                w.push(M2::transfer(self.v_real(self.rotation.step(theta, j))));
                if next.peek() == Some(&(j + 1)) {
                    next.next();
                    out.push(w.log_norm());
                }
            }
        } else {
            for j in 0..-k {
                w.push(M2::transfer_inverse(self.v_real(self.rotation.step(theta, -(j + 1)))));
                if next.peek() == Some(&(-(j + 1))) {
                    next.next();
                    out.push(w.log_norm());
                }
            }
        }
        (w, out)
    }

    fn walk_complex(
        &self,
        theta: f64,
        k: i64,
        checkpoints: &[i64],
    ) -> (Walker<Complex64>, Vec<f64>) {
        let mut w = Walker::<Complex64>::new();
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next = checkpoints.iter().copied().peekable();
        while next.peek() == Some(&0) {
            next.next();
            out.push(0.0);
        }
        if k >= 0 {
            for j in 0..k {
                w.push(M2::transfer(self.v_complex(self.rotation.step(theta, j))));
                if next.peek() == Some(&(j + 1)) {
                    next.next();
                    out.push(w.log_norm());
                }
            }
        } else {
            for j in 0..-k {
                w.push(M2::transfer_inverse(self.v_complex(self.rotation.step(theta, -(j + 1)))));
                if next.peek() == Some(&(-(j + 1))) {
                    next.next();
                    out.push(w.log_norm());
                }
            }
        }
        (w, out)
    }

    /// ln of the running sums Σ_{n=1..m} ‖A_{±n}(θ)‖²_HS, stopping once the
    /// sum exceeds e^{ln_target} or m hits `cap`.
    pub(crate) fn cumulative_hs_sq_ln(
        &self,
        theta: f64,
        forward: bool,
        ln_target: f64,
        cap: usize,
    ) -> Vec<f64> {
        let mut out = Vec::new();
        let mut acc_ln = f64::NEG_INFINITY;
        let complex = self.z.im != 0.0;
        let mut w = Walker::<f64>::new();
        let mut wc = Walker::<Complex64>::new();
        for j in 0..cap as i64 {
            let term_ln = if complex {
                let v = if forward {
                    self.v_complex(self.rotation.step(theta, j))
                } else {
                    self.v_complex(self.rotation.step(theta, -(j + 1)))
                };
                wc.push(if forward { M2::transfer(v) } else { M2::transfer_inverse(v) });
                wc.log_hs_sq()
            } else {
                let v = if forward {
                    self.v_real(self.rotation.step(theta, j))
                } else {
                    self.v_real(self.rotation.step(theta, -(j + 1)))
                };
                w.push(if forward { M2::transfer(v) } else { M2::transfer_inverse(v) });
                w.log_hs_sq()
            };
            // ln(e^a + e^b) without overflow
            acc_ln = if acc_ln == f64::NEG_INFINITY {
                term_ln
            } else {
                let m = acc_ln.max(term_ln);
                m + ((acc_ln - m).exp() + (term_ln - m).exp()).ln()
            };
            out.push(acc_ln);
            if acc_ln > ln_target {
                break;
            }
        }
        out
    }
}

/// A_k(θ) for the cocycle (rotation, f, z); free-function form.
pub fn iterate_cocycle(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    z: Complex64,
    theta: f64,
    k: i64,
) -> Result<ScaledProduct, CocycleError> {
    Cocycle::new(f, rotation, z).iterate(theta, k)
}

// ---------------------------------------------------------------------------
// Lyapunov estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaScheme {
    /// Equidistributed midpoint grid of the given size.
    Grid(usize),
    /// One Birkhoff orbit started at the given phase.
    Birkhoff { theta0: f64 },
}

#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    pub z: Complex64,
    pub k_list: Vec<i64>,
    /// c_k = (1/k)·mean_θ ln‖A_k(θ)‖
    pub c_k: Vec<f64>,
    pub theta_scheme: ThetaScheme,
    /// c at the largest k — the working estimate of 𝓛(z).
    pub l_hat: f64,
    /// |c_{k_max} − c_{k_max/2}|, the error proxy.
    pub spread: f64,
    /// Birkhoff cross-check value when requested.
    pub birkhoff_check: Option<f64>,
    /// Set when the cross-check disagrees by more than 3× the spread.
    pub flagged: bool,
}

/// Estimate 𝓛(z) from mean log norms at increasing k.
pub fn lyapunov_estimate(
    cocycle: &Cocycle,
    k_list: &[i64],
    scheme: ThetaScheme,
) -> LyapunovEstimate {
    assert!(k_list.len() >= 3, "k_list needs at least 3 entries");
    assert!(k_list.windows(2).all(|w| w[0] < w[1]) && k_list[0] > 0);
    let c_k = match scheme {
        ThetaScheme::Grid(m) => {
            let grid = crate::util::torus_grid(m);
            let profiles = pmap(&grid, |&theta| cocycle.log_norm_profile(theta, k_list));
            let mut acc = vec![0.0f64; k_list.len()];
            for p in &profiles {
                for (a, v) in acc.iter_mut().zip(p) {
                    *a += v;
                }
            }
            acc.iter().zip(k_list).map(|(a, &k)| a / m as f64 / k as f64).collect::<Vec<_>>()
        }
        ThetaScheme::Birkhoff { theta0 } => {
            let p = cocycle.log_norm_profile(theta0, k_list);
            p.iter().zip(k_list).map(|(v, &k)| v / k as f64).collect()
        }
    };
    let l_hat = *c_k.last().unwrap();
    let k_max = *k_list.last().unwrap();
    let half_idx = k_list
        .iter()
        .enumerate()
        .min_by_key(|(_, &k)| (2 * k - k_max).abs())
        .map(|(i, _)| i)
        .unwrap();
    let spread = (l_hat - c_k[half_idx]).abs();
    LyapunovEstimate {
        z: cocycle.z,
        k_list: k_list.to_vec(),
        c_k,
        theta_scheme: scheme,
        l_hat,
        spread,
        birkhoff_check: None,
        flagged: false,
    }
}

/// Grid estimate plus one long Birkhoff orbit as an independent check;
/// the estimate is flagged when the two disagree by more than 3× spread.
pub fn lyapunov_with_crosscheck(
    cocycle: &Cocycle,
    k_list: &[i64],
    grid_size: usize,
    orbit_cap: i64,
) -> LyapunovEstimate {
    let mut est = lyapunov_estimate(cocycle, k_list, ThetaScheme::Grid(grid_size));
    let k_max = *k_list.last().unwrap();
    let orbit_len = (k_max * grid_size as i64).min(orbit_cap).max(k_max);
    let birkhoff = cocycle.log_norm(0.237_193, orbit_len) / orbit_len as f64;
    est.flagged = (birkhoff - est.l_hat).abs() > 3.0 * est.spread.max(1e-12);
    est.birkhoff_check = Some(birkhoff);
    est
}

// ---------------------------------------------------------------------------
// Uniform upper bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformUpperReport {
    pub k: i64,
    /// max over the phase grid of (1/k)·ln‖A_k(θ)‖ − L̂.
    pub max_excess: f64,
    pub worst_theta: f64,
}

/// Worst-phase excess of the finite-step growth rate over L̂ at one k.
pub fn uniform_upper_check(
    cocycle: &Cocycle,
    l_hat: f64,
    k: i64,
    theta_grid_size: usize,
) -> UniformUpperReport {
    let grid = crate::util::torus_grid(theta_grid_size);
    let rates = pmap(&grid, |&theta| cocycle.log_norm(theta, k) / k as f64);
    let (mut worst, mut excess) = (grid[0], f64::NEG_INFINITY);
    for (&theta, &r) in grid.iter().zip(&rates) {
        if r - l_hat > excess {
            excess = r - l_hat;
            worst = theta;
        }
    }
    UniformUpperReport { k, max_excess: excess, worst_theta: worst }
}

/// Per-k worst-phase excess for every k = 1..=k_cap, one pass over the grid.
pub fn uniform_excess_profile(
    cocycle: &Cocycle,
    l_hat: f64,
    theta_grid_size: usize,
    k_cap: i64,
) -> Vec<f64> {
    let ks: Vec<i64> = (1..=k_cap).collect();
    let grid = crate::util::torus_grid(theta_grid_size);
    let batches: Vec<&[f64]> = grid.chunks(128).collect();
    let partial = pmap(&batches, |batch| {
        let mut worst = vec![f64::NEG_INFINITY; ks.len()];
        for &theta in batch.iter() {
            let prof = cocycle.log_norm_profile(theta, &ks);
            for (w, (v, &k)) in worst.iter_mut().zip(prof.iter().zip(&ks)) {
                let rate = v / k as f64;
                if rate > *w {
                    *w = rate;
                }
            }
        }
        worst
    });
    let mut excess = vec![f64::NEG_INFINITY; ks.len()];
    for p in &partial {
        for (e, v) in excess.iter_mut().zip(p) {
            if *v > *e {
                *e = *v;
            }
        }
    }
    for e in excess.iter_mut() {
        *e -= l_hat;
    }
    excess
}

/// Smallest K with excess below ε for every k ∈ [K, 4K] and beyond,
/// given the per-k excess profile (index i holds k = i+1).
pub fn uniform_bound_onset(excess: &[f64], epsilon: f64) -> Option<usize> {
    let last_bad = excess.iter().rposition(|&e| e >= epsilon);
    let k = last_bad.map(|i| i + 2).unwrap_or(1);
    if 4 * k <= excess.len() {
        Some(k)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Perturbation bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationReport {
    pub k: i64,
    /// ln ‖A_k^{f,z}(θ) − A_k^{f̄,z}(θ)‖
    pub lhs_ln: f64,
    /// ln [ max_{0≤i<k} |f−f̄|(R^iθ) · e^{k(L̂ + εQ)} ]
    pub rhs_ln: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// sup over a probe grid of the one-step matrix norms, for the Q factor.
fn single_step_sup_norm(cocycle: &Cocycle, probes: usize) -> f64 {
    let mut sup = 0.0f64;
    for i in 0..probes {
        let theta = i as f64 / probes as f64;
        sup = sup.max(cocycle.transfer_matrix(theta).op_norm());
    }
    sup
}

/// Compare ‖A_k^f − A_k^{f̄}‖ against the orbit-sup bound
/// max_i |f−f̄|(R^iθ) · e^{k(L̂+εQ)} at every checkpoint, one pass.
/// Q = max{1, ln sup‖A^f‖, ln sup‖A^{f̄}‖} on one-step matrices.
#[allow(clippy::too_many_arguments)]
pub fn perturbation_profile(
    f: &PiecewiseHolderFunction,
    f_bar: &PiecewiseHolderFunction,
    rotation: Rotation,
    z: Complex64,
    theta: f64,
    checkpoints: &[i64],
    epsilon: f64,
    l_hat: f64,
) -> Vec<PerturbationReport> {
    assert!(checkpoints.iter().all(|&k| k > 0));
    let coc_f = Cocycle::new(f, rotation, z);
    let coc_g = Cocycle::new(f_bar, rotation, z);
    let q = 1.0f64
        .max(single_step_sup_norm(&coc_f, 4096).ln())
        .max(single_step_sup_norm(&coc_g, 4096).ln());
    let rate = l_hat + epsilon * q;

    // D_k = A_k^f − A_k^{f̄} and B_k = A_k^{f̄} share one scale factor:
    // D_{k+1} = A^f(θ_k) D_k + (A^f − A^{f̄})(θ_k) B_k.
    let zero = Complex64::new(0.0, 0.0);
    let mut d = M2::<Complex64> { a: zero, b: zero, c: zero, d: zero };
    let mut bmat = M2::<Complex64>::identity();
    let mut log_scale = 0.0f64;
    let mut sup_diff = 0.0f64;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().peekable();
    let k_last = *checkpoints.last().unwrap();
    for j in 0..k_last {
        let th = rotation.step(theta, j);
        let vf = coc_f.v_complex(th);
        let vg = coc_g.v_complex(th);
        sup_diff = sup_diff.max((vf - vg).norm());
        let delta = M2 { a: vf - vg, b: zero, c: zero, d: zero };
        d = M2::transfer(vf).mul(d).add(delta.mul(bmat));
        bmat = M2::transfer(vg).mul(bmat);
        let hs = bmat.hs_sq().max(d.hs_sq());
        if hs > HS_SQ_HI {
            let s = hs.sqrt();
            bmat = bmat.scaled(1.0 / s);
            d = d.scaled(1.0 / s);
            log_scale += s.ln();
        }
        if next.peek() == Some(&(j + 1)) {
            next.next();
            let k = j + 1;
            let lhs_ln = log_scale + d.op_norm().ln();
            let rhs_ln = sup_diff.ln() + k as f64 * rate;
            out.push(PerturbationReport {
                k,
                lhs_ln,
                rhs_ln,
                lhs: lhs_ln.exp(),
                rhs: rhs_ln.exp(),
                ok: lhs_ln <= rhs_ln || lhs_ln == f64::NEG_INFINITY,
            });
        }
    }
    out
}

/// Single-k wrapper around [`perturbation_profile`].
#[allow(clippy::too_many_arguments)]
pub fn perturbation_check(
    f: &PiecewiseHolderFunction,
    f_bar: &PiecewiseHolderFunction,
    rotation: Rotation,
    z: Complex64,
    theta: f64,
    k: i64,
    epsilon: f64,
    l_hat: f64,
) -> PerturbationReport {
    perturbation_profile(f, f_bar, rotation, z, theta, &[k], epsilon, l_hat)[0]
}

// ---------------------------------------------------------------------------
// Level sets V_k(t)
// ---------------------------------------------------------------------------

/// Fraction of grid phases with (1/k)·ln‖A_k(θ)‖ > level.
pub fn v_set_measure(cocycle: &Cocycle, k: i64, level: f64, theta_grid_size: usize) -> f64 {
    assert!(theta_grid_size >= 1000, "grid size must be at least 10^3");
    let grid = crate::util::torus_grid(theta_grid_size);
    let hits =
        pmap(&grid, |&theta| (cocycle.log_norm(theta, k) / k as f64 > level) as usize);
    hits.iter().sum::<usize>() as f64 / theta_grid_size as f64
}

// ---------------------------------------------------------------------------
// Growth-site certificates
// ---------------------------------------------------------------------------

/// Tuning constants of the growth-site search window, recorded for
/// inspection; no operation asserts their internal inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthWindow {
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub eta_bar: f64,
    pub ln_q_n: f64,
    /// largest admissible k for the chosen n: γ·ln q_n/(τ·L̂)
    pub k_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCertificate {
    pub energy: f64,
    pub tau: f64,
    pub k: i64,
    /// continued-fraction index n whose window admitted k
    pub cf_index: usize,
    /// phase shift x with 0 ≤ x ≤ q_n + q_{n−1} − 1
    pub shift: u64,
    /// (1/k)·ln‖A_k(R^x θ)‖
    pub achieved: f64,
    /// (1−τ)·L̂
    pub threshold: f64,
    pub window: GrowthWindow,
}

/// Scan shifts x = 0, 1, … for the first with
/// (1/k)·ln‖A_k(R^xθ)‖ ≥ (1−τ)·L̂. The index n is the smallest stored one
/// whose window admits k (q_n > e^{kτL̂/γ}); the shift is guaranteed to
/// exist within q_n + q_{n−1} − 1, so exhausting the bound (or the
/// practical cap) is surfaced as an error, never silently retried.
pub fn growth_site_search(
    cocycle: &Cocycle,
    freq: &FrequencyData,
    tau: f64,
    k: i64,
    theta: f64,
    l_hat: f64,
    shift_cap: u64,
) -> Result<GrowthCertificate, CocycleError> {
    assert!(l_hat > 0.0, "growth sites need a positive Lyapunov estimate");
    assert!(k > 0 && tau > 0.0 && tau < 1.0);
    let gamma = cocycle.f.gamma();
    let ln_q_needed = k as f64 * tau * l_hat / gamma;
    let first = freq.index_with_ln_q_above(ln_q_needed).ok_or_else(|| {
        CocycleError::GrowthSiteNotFound(format!(
            "no stored convergent with ln q_n > {ln_q_needed:.3}; expand the frequency further"
        ))
    })?;
    // any n in the window admits k; prefer the smallest whose shift range
    // q_n + q_{n-1} - 1 is at least a modest scan window, since tiny q_n
    // leave no room when k is still below the lemma's onset constant
    let n = (first..=freq.convergents().len())
        .find(|&n| freq.q(n) + freq.q(n - 1) >= num_bigint::BigInt::from(65))
        .unwrap_or(freq.convergents().len());
    let q_n = freq.q(n);
    let ln_q_n = {
        let bits = q_n.bits();
        if bits <= 52 {
            q_n.to_f64().unwrap().ln()
        } else {
            ((&q_n >> (bits - 52)).to_f64().unwrap()).ln()
                + (bits - 52) as f64 * std::f64::consts::LN_2
        }
    };
    let bound_big = &q_n + freq.q(n - 1) - num_bigint::BigInt::from(1);
    let bound = bound_big.to_u64().unwrap_or(u64::MAX).min(shift_cap);
    let threshold = (1.0 - tau) * l_hat;

    let window = GrowthWindow {
        nu: 0.375 * tau,
        a: 1.0 - 5.0 * tau / 64.0,
        b: 1.0 - 3.0 * tau / 32.0,
        c: 1.0 - 7.0 * tau / 64.0,
        eta_bar: l_hat * tau / 32.0,
        ln_q_n,
        k_upper: gamma * ln_q_n / (tau * l_hat),
    };

    let chunk: u64 = 64;
    let mut x = 0u64;
    while x <= bound {
        let hi = x.saturating_add(chunk - 1).min(bound);
        let xs: Vec<u64> = (x..=hi).collect();
        let rates =
            pmap(&xs, |&xx| cocycle.log_norm(freq.rotate(theta, xx as i64), k) / k as f64);
        for (&xx, &rate) in xs.iter().zip(&rates) {
            if rate >= threshold {
                return Ok(GrowthCertificate {
                    energy: cocycle.z.re,
                    tau,
                    k,
                    cf_index: n,
                    shift: xx,
                    achieved: rate,
                    threshold,
                    window,
                });
            }
        }
        if hi == bound {
            break;
        }
        x = hi + 1;
    }
    Err(CocycleError::GrowthSiteNotFound(format!(
        "no shift ≤ {bound} reached rate {threshold:.4} at k = {k} (n = {n})"
    )))
}

// ---------------------------------------------------------------------------
// Φ growth criterion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiGridSpec {
    pub theta_count: usize,
    pub boundary_z_count: usize,
}

impl Default for PhiGridSpec {
    fn default() -> Self {
        PhiGridSpec { theta_count: 64, boundary_z_count: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEstimate {
    pub value: f64,
    pub t: f64,
    pub zeta: f64,
    pub delta: f64,
    pub j_max: i64,
    pub worst_theta: f64,
}

/// Grid approximation of Φ_{ζ,δ}(E,T): minimum over sampled z in the disk
/// |z−E| ≤ T^{−ζ} (center plus a boundary circle) and sampled phases of
/// min over both directions of max_{1≤j≤T^ζ} ‖A_{±j}‖² / T^δ. Grid minima
/// overestimate the continuum infimum, so the value is an upper bound.
pub fn phi_estimate(
    f: &PiecewiseHolderFunction,
    rotation: Rotation,
    energy: f64,
    zeta: f64,
    delta: f64,
    t: f64,
    grid: PhiGridSpec,
) -> PhiEstimate {
    assert!(t > 1.0 && zeta > 0.0 && zeta <= 1.0 && delta >= 1.0);
    let j_max = (t.powf(zeta) as i64).max(1);
    assert!(j_max <= 1_000_000, "T^ζ exceeds the 10^6 step budget");
    let radius = t.powf(-zeta);
    let mut zs = vec![Complex64::new(energy, 0.0)];
    for l in 0..grid.boundary_z_count {
        let phi = std::f64::consts::TAU * l as f64 / grid.boundary_z_count as f64;
        zs.push(Complex64::new(energy + radius * phi.cos(), radius * phi.sin()));
    }
    let thetas = crate::util::torus_grid(grid.theta_count);
    let checkpoints_f: Vec<i64> = (1..=j_max).collect();
    let checkpoints_b: Vec<i64> = (1..=j_max).map(|j| -j).collect();

    let mut best_ln = f64::INFINITY;
    let mut worst_theta = thetas[0];
    for z in zs {
        let coc = Cocycle::new(f, rotation, z);
        let per_theta = pmap(&thetas, |&theta| {
            let fwd = coc
                .log_norm_profile(theta, &checkpoints_f)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let bwd = coc
                .log_norm_profile(theta, &checkpoints_b)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            2.0 * fwd.min(bwd)
        });
        for (&theta, &v) in thetas.iter().zip(&per_theta) {
            if v < best_ln {
                best_ln = v;
                worst_theta = theta;
            }
        }
    }
    PhiEstimate { value: (best_ln - delta * t.ln()).exp(), t, zeta, delta, j_max, worst_theta }
}

// ---------------------------------------------------------------------------
// Cocycle pseudometric
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudometricEstimate {
    pub value: f64,
    /// tail bound 2^{−n_max} added by truncating the series
    pub truncation_bound: f64,
    pub n_max: usize,
}

/// Truncated pseudometric Σ_{n≤n_max} 2^{−n} x_n/(1+x_n) with
/// x_n = sup over D_n of |ln‖A_n^f‖ − ln‖A_n^g‖|, where D_n excludes the
/// δ-neighborhood of both cocycles' step-n discontinuity sets.
pub fn pseudometric_estimate(
    coc_f: &Cocycle,
    coc_g: &Cocycle,
    delta: f64,
    n_max: usize,
    theta_grid_size: usize,
) -> PseudometricEstimate {
    assert!(n_max >= 1);
    let ks: Vec<i64> = (1..=n_max as i64).collect();
    let grid = crate::util::torus_grid(theta_grid_size);
    let jumps: Vec<f64> =
        coc_f.f.jump_set().iter().chain(coc_g.f.jump_set().iter()).copied().collect();

    let profiles = pmap(&grid, |&theta| {
        let pf = coc_f.log_norm_profile(theta, &ks);
        let pg = coc_g.log_norm_profile(theta, &ks);
        (theta, pf, pg)
    });

    let mut value = 0.0;
    for (i, &n) in ks.iter().enumerate() {
        let mut x_n = 0.0f64;
        for (theta, pf, pg) in &profiles {
            // θ ∈ D_n: every phase visited by A_n stays δ away from a jump
            let excluded = !jumps.is_empty()
                && (0..n).any(|j| {
                    let th = coc_f.rotation.step(*theta, j);
                    jumps.iter().any(|&c| torus_distance(th, c) <= delta)
                });
            if !excluded {
                x_n = x_n.max((pf[i] - pg[i]).abs());
            }
        }
        value += 0.5f64.powi(n as i32) * x_n / (1.0 + x_n);
    }
    PseudometricEstimate { value, truncation_bound: 0.5f64.powi(n_max as i32), n_max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::FrequencySpec;
    use rand::{Rng, SeedableRng};

    fn golden_rotation() -> Rotation {
        FrequencySpec::golden().expand(40).unwrap().rotation()
    }

    #[test]
    fn transfer_matrix_examples() {
        let zero = PiecewiseHolderFunction::zero();
        let m = transfer_matrix(&zero, Complex64::new(0.0, 0.0), 0.3);
        assert_eq!(m.entries[0], Complex64::new(0.0, 0.0));
        assert_eq!(m.entries[1], Complex64::new(-1.0, 0.0));
        assert_eq!(m.entries[2], Complex64::new(1.0, 0.0));
        assert_eq!(m.entries[3], Complex64::new(0.0, 0.0));

        let cosine = PiecewiseHolderFunction::cosine(1.0);
        let m2 = transfer_matrix(&cosine, Complex64::new(1.0, 0.0), 0.0);
        assert_eq!(m2.entries[0], Complex64::new(-1.0, 0.0));
        assert!((m2.det() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_and_rotation_powers() {
        let zero = PiecewiseHolderFunction::zero();
        let rot = golden_rotation();
        let coc = Cocycle::real(&zero, rot, 0.0);
        let p0 = coc.iterate(0.1, 0).unwrap();
        assert_eq!(p0.log_scale, 0.0);
        assert!((p0.matrix.entries[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // f ≡ 0, z = 0: the step is a quarter turn, so the 4th power is ±I
        let p4 = coc.iterate(0.1, 4).unwrap();
        assert!(p4.log_norm().abs() < 1e-12);
        let m = p4.matrix.m2();
        assert!((m.a.norm() - 1.0).abs() < 1e-12 && m.b.norm() < 1e-12);
    }

    #[test]
    fn cocycle_identity_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(1.3);
        let saw = PiecewiseHolderFunction::sawtooth(0.8);
        for trial in 0..1000 {
            let f = if trial % 2 == 0 { &cosine } else { &saw };
            let n = rng.gen_range(-50i64..=50);
            let m = rng.gen_range(-50i64..=50);
            let theta: f64 = rng.gen();
            let z = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-0.5..0.5));
            let coc = Cocycle::new(f, rot, z);
            let lhs = coc.iterate(theta, n + m).unwrap();
            let a_n = coc.iterate(rot.step(theta, m), n).unwrap();
            let a_m = coc.iterate(theta, m).unwrap();
            // compare at the common scale of the right-hand product; the
            // error is measured relative to ‖A_n‖·‖A_m‖ (for opposite
            // signs the product cancels down from that scale, which is
            // the attainable backward-stable accuracy)
            let rhs_m = a_n.matrix.m2().mul(a_m.matrix.m2());
            let lhs_m = lhs.matrix.m2();
            let scale = (lhs.log_scale - a_n.log_scale - a_m.log_scale).exp();
            let mut num = 0.0f64;
            for (l, r) in [
                (lhs_m.a, rhs_m.a),
                (lhs_m.b, rhs_m.b),
                (lhs_m.c, rhs_m.c),
                (lhs_m.d, rhs_m.d),
            ] {
                num += (l * scale - r).norm_sqr();
            }
            let den = a_n.matrix.op_norm() * a_m.matrix.op_norm();
            assert!(
                num.sqrt() <= 1e-10 * den,
                "identity violated at n={n}, m={m}, z={z}: rel {}",
                num.sqrt() / den
            );
        }
    }

    #[test]
    fn determinant_stays_unit_to_one_million() {
        let rot = golden_rotation();
        // bounded (elliptic) cocycle: the entry-level determinant is
        // meaningful out to 10^6 steps
        let zero = PiecewiseHolderFunction::zero();
        let coc = Cocycle::real(&zero, rot, 0.3);
        let p = coc.iterate(0.123, 1_000_000).unwrap();
        assert!(p.det_defect() < 1e-8, "elliptic defect {}", p.det_defect());

        // hyperbolic cocycle: entry-level determinant while growth allows,
        // then forward/backward norm agreement as the 10^6-step check
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let coc_h = Cocycle::real(&cosine, rot, 0.5);
        // growth² must stay under 1e8 for the 1e-8 entry-level tolerance
        for k in [1i64, 3, 5, 7] {
            let p = coc_h.iterate(0.123, k).unwrap();
            assert!(p.det_defect() < 1e-8, "k={k}: defect {}", p.det_defect());
        }
        let k = 1_000_000i64;
        let fwd = coc_h.log_norm(0.123, k);
        // ‖A_k(θ)‖ = ‖A_k(θ)^{-1}‖ = ‖A_{−k}(R^kθ)‖ for unit determinant
        let bwd = coc_h.log_norm(rot.step(0.123, k), -k);
        assert!(
            (fwd - bwd).abs() <= 1e-8 * fwd.abs(),
            "long-product norms disagree: {fwd} vs {bwd}"
        );
    }

    #[test]
    fn backward_matches_forced_identity() {
        let rot = golden_rotation();
        let saw = PiecewiseHolderFunction::sawtooth(1.1);
        let coc = Cocycle::real(&saw, rot, 0.7);
        for &m in &[1i64, 5, 17] {
            let back = coc.iterate(0.3, -m).unwrap();
            let fwd = coc.iterate(rot.step(0.3, -m), m).unwrap();
            let inv = fwd.matrix.inverse_unit_det();
            let lhs = back.matrix.m2();
            let rhs = inv.m2();
            let scale = (fwd.log_scale - back.log_scale).exp();
            for (l, r) in [(lhs.a, rhs.a), (lhs.b, rhs.b), (lhs.c, rhs.c), (lhs.d, rhs.d)] {
                assert!((l - r * scale).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn norm_equals_inverse_norm_for_real_z() {
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(2.0);
        let coc = Cocycle::real(&cosine, rot, 1.1);
        let p = coc.iterate(0.05, 37).unwrap();
        let inv = p.matrix.inverse_unit_det();
        assert!((p.matrix.op_norm() - inv.op_norm()).abs() < 1e-10 * p.matrix.op_norm());
    }

    #[test]
    fn lyapunov_free_cases() {
        let rot = golden_rotation();
        let zero = PiecewiseHolderFunction::zero();
        // z = 0: all norms 1
        let coc0 = Cocycle::real(&zero, rot, 0.0);
        let est0 = lyapunov_estimate(&coc0, &[64, 128, 256, 512], ThetaScheme::Grid(64));
        assert!(est0.l_hat.abs() < 1e-6, "L̂ = {}", est0.l_hat);
        // z = 3: constant hyperbolic matrix, L = ln((3+√5)/2)
        let coc3 = Cocycle::real(&zero, rot, 3.0);
        let est3 =
            lyapunov_estimate(&coc3, &[256, 512, 1024, 2048, 4096], ThetaScheme::Grid(16));
        let expected = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        assert!((est3.l_hat - expected).abs() < 1e-3, "L̂ = {} vs {}", est3.l_hat, expected);
        // subadditivity: c_k nonincreasing along doublings
        for w in est3.c_k.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn lyapunov_supercritical_cosine() {
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let coc = Cocycle::real(&cosine, rot, 0.0);
        let est = lyapunov_estimate(&coc, &[125, 250, 500, 1000], ThetaScheme::Grid(256));
        // at λ = 3 the exponent is ≥ ln λ everywhere over the energy line
        assert!(est.l_hat >= 3.0f64.ln() - 0.05, "L̂ = {}", est.l_hat);
    }

    #[test]
    fn uniform_upper_free_cases() {
        let rot = golden_rotation();
        let zero = PiecewiseHolderFunction::zero();
        let coc0 = Cocycle::real(&zero, rot, 0.0);
        let r = uniform_upper_check(&coc0, 0.0, 50, 128);
        assert!(r.max_excess.abs() < 1e-9);

        let coc3 = Cocycle::real(&zero, rot, 3.0);
        let l = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        let r3 = uniform_upper_check(&coc3, l, 100, 128);
        assert!(r3.max_excess <= 0.05, "excess {}", r3.max_excess);
        assert!(r3.max_excess >= 0.0);
    }

    #[test]
    fn perturbation_trivial_and_fejer() {
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        // f̄ = f: lhs = 0
        let rep = perturbation_check(
            &cosine,
            &cosine.clone(),
            rot,
            Complex64::new(0.5, 0.0),
            0.3,
            40,
            0.1,
            3.0f64.ln(),
        );
        assert!(rep.ok && rep.lhs_ln == f64::NEG_INFINITY);

        // f̄ = σ_N(f): inequality holds along the whole profile
        let approx = crate::sampling::cesaro_approximant(&cosine, 32).unwrap();
        let f_bar = approx.as_sampling_function();
        let coc = Cocycle::real(&cosine, rot, 0.5);
        let est = lyapunov_estimate(&coc, &[100, 200, 400], ThetaScheme::Grid(128));
        let ks: Vec<i64> = (1..=200).collect();
        let reports = perturbation_profile(
            &cosine,
            &f_bar,
            rot,
            Complex64::new(0.5, 0.0),
            0.41,
            &ks,
            0.25,
            est.l_hat,
        );
        assert!(reports.iter().all(|r| r.ok), "perturbation bound violated");
    }

    #[test]
    fn v_set_trivial_levels() {
        let rot = golden_rotation();
        let zero = PiecewiseHolderFunction::zero();
        let coc = Cocycle::real(&zero, rot, 0.0);
        assert_eq!(v_set_measure(&coc, 20, 0.1, 1000), 0.0);
        assert_eq!(v_set_measure(&coc, 20, -0.1, 1000), 1.0);
    }

    #[test]
    fn v_set_monotone_in_level() {
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let coc = Cocycle::real(&cosine, rot, 0.2);
        let levels = [0.2, 0.6, 0.9, 1.05];
        let mut last = 2.0;
        for &t in &levels {
            let m = v_set_measure(&coc, 60, t, 1024);
            assert!(m <= last + 1e-12);
            last = m;
        }
    }

    #[test]
    fn growth_site_constant_cocycle() {
        let freq = FrequencySpec::golden().expand(60).unwrap();
        let zero = PiecewiseHolderFunction::zero();
        let coc = Cocycle::real(&zero, freq.rotation(), 3.0);
        let l = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        let cert =
            growth_site_search(&coc, &freq, 0.2, 50, 0.3, l, 1 << 20).expect("must certify");
        assert_eq!(cert.shift, 0, "constant cocycle grows from the first shift");
        assert!(cert.achieved >= cert.threshold);
    }

    #[test]
    fn phi_free_cases() {
        let rot = golden_rotation();
        let zero = PiecewiseHolderFunction::zero();
        let grid = PhiGridSpec { theta_count: 8, boundary_z_count: 8 };
        // E = 0, δ = 1: bounded norms, Φ ~ c/T → small
        let phi_small = phi_estimate(&zero, rot, 0.0, 0.5, 1.0, 1e4, grid);
        assert!(phi_small.value < 1e-2, "Φ = {}", phi_small.value);
        // E = 3, ζ = 0.5, δ = 2: exponential growth beats T^δ
        let phi_big = phi_estimate(&zero, rot, 3.0, 0.5, 2.0, 400.0, grid);
        assert!(phi_big.value >= 1.0, "Φ = {}", phi_big.value);
    }


    #[test]
    fn forward_and_backward_lyapunov_agree() {
        // the exponent of the backward cocycle equals the forward one
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let coc = Cocycle::real(&cosine, rot, 0.7);
        let ks_f = [125i64, 250, 500, 1000];
        let ks_b = [-125i64, -250, -500, -1000];
        let grid = crate::util::torus_grid(256);
        let mut fwd = 0.0;
        let mut bwd = 0.0;
        for &theta in &grid {
            fwd += coc.log_norm_profile(theta, &ks_f)[3] / 1000.0;
            bwd += coc.log_norm_profile(theta, &ks_b)[3] / 1000.0;
        }
        fwd /= grid.len() as f64;
        bwd /= grid.len() as f64;
        let est = lyapunov_estimate(&coc, &ks_f, ThetaScheme::Grid(256));
        assert!(
            (fwd - bwd).abs() <= est.spread.max(1e-3),
            "forward {fwd} vs backward {bwd}, spread {}",
            est.spread
        );
    }

    #[test]
    fn level_set_measure_near_exponent_is_at_least_half() {
        // |V_k(a·L̂)| ≥ 1/2 for a = 1 − τ/16 once k is large
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let coc = Cocycle::real(&cosine, rot, 0.0);
        let est = lyapunov_estimate(&coc, &[125, 250, 500, 1000], ThetaScheme::Grid(512));
        let tau = 0.2;
        let level = (1.0 - tau / 16.0) * est.l_hat;
        let measure = v_set_measure(&coc, 500, level, 2048);
        assert!(measure >= 0.5, "|V_500({level:.4})| = {measure}");
    }

    #[test]
    fn lyapunov_cross_validation() {
        // two independent estimates (short-k grid vs long Birkhoff orbit)
        // agree within 2% for the supercritical cosine model
        let rot = golden_rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let coc = Cocycle::real(&cosine, rot, 0.0);
        let est = lyapunov_with_crosscheck(&coc, &[125, 250, 500, 1000], 256, 2_000_000);
        let birkhoff = est.birkhoff_check.unwrap();
        assert!(
            (birkhoff - est.l_hat).abs() / est.l_hat < 0.02,
            "grid {} vs orbit {birkhoff}",
            est.l_hat
        );
        assert!(!est.flagged);
    }

    #[test]
    fn pseudometric_properties() {
        let rot = golden_rotation();
        let saw = PiecewiseHolderFunction::sawtooth(2.0);
        let coc = Cocycle::real(&saw, rot, 0.4);
        let zero_dist = pseudometric_estimate(&coc, &coc.clone(), 0.01, 12, 256);
        assert_eq!(zero_dist.value, 0.0);

        let approx = crate::sampling::cesaro_approximant(&saw, 64).unwrap();
        let f_bar = approx.as_sampling_function();
        let coc_g = Cocycle::real(&f_bar, rot, 0.4);
        let d = pseudometric_estimate(&coc, &coc_g, 0.01, 20, 512);
        assert!(d.value < 1.0, "structural bound violated: {}", d.value);
        assert!(d.value > 0.0);
        assert!((d.truncation_bound - 0.5f64.powi(20)).abs() < 1e-18);
    }
}

#[cfg(test)]
mod perturbation_debug {
    use super::*;
    use crate::arithmetic::FrequencySpec;

    #[test]
    #[ignore]
    fn print_perturbation_margins() {
        let rot = FrequencySpec::golden().expand(40).unwrap().rotation();
        let cosine = PiecewiseHolderFunction::cosine(3.0);
        let approx = crate::sampling::cesaro_approximant(&cosine, 32).unwrap();
        let f_bar = approx.as_sampling_function();
        let coc = Cocycle::real(&cosine, rot, 0.5);
        let est = lyapunov_estimate(&coc, &[100, 200, 400], ThetaScheme::Grid(128));
        println!("l_hat = {}", est.l_hat);
        let ks: Vec<i64> = (1..=200).collect();
        let reports = perturbation_profile(
            &cosine, &f_bar, rot, Complex64::new(0.5, 0.0), 0.41, &ks, 0.1, est.l_hat,
        );
        for r in &reports {
            if !r.ok || r.k <= 12 {
                println!("k={} lhs_ln={:.4} rhs_ln={:.4} ok={}", r.k, r.lhs_ln, r.rhs_ln, r.ok);
            }
        }
    }
}
