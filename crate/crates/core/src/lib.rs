//! Numerical laboratory for one-dimensional quasiperiodic Schrödinger
//! operators
//!
//! ```text
//!     (h_θ u)(n) = u(n-1) + u(n+1) + f(nω + θ) u(n),      n ∈ ℤ,
//! ```
//!
//! with irrational frequency ω and a piecewise Hölder sampling function
//! f on the torus 𝕋 = ℝ/ℤ.
//!
//! The crate is organized around five building blocks:
//!
//! - [`arithmetic`] — continued fractions, convergents, Diophantine
//!   classification, and exact rotation-orbit geometry on 𝕋;
//! - [`sampling`] — piecewise Hölder sampling functions, the PL_γ
//!   seminorm, the indicator-times-Lipschitz decomposition, and
//!   Fejér/Cesàro polynomial approximants;
//! - [`cocycle`] — SL(2) transfer-matrix cocycles, overflow-safe long
//!   products, Lyapunov estimation, uniform upper bounds, perturbation
//!   bounds, level sets, growth-site certificates, and the Φ criterion;
//! - [`dynamics`] — finite-volume quantum evolution, Abel time averages,
//!   transport moments and exponents, mass profiles, truncated-norm
//!   criteria, and integrated density of states;
//! - [`harness`] — configuration, experiment orchestration, deterministic
//!   parallel sweeps, and CSV/JSON emission.

pub mod arithmetic;
pub mod cocycle;
pub mod dynamics;
pub mod harness;
pub mod sampling;
pub(crate) mod special;
pub mod util;

pub use num_complex::Complex64;
