//! Piecewise Hölder sampling functions on 𝕋 = ℝ/ℤ.
//!
//! A sampling function is a finite list of half-open arcs carrying smooth
//! evaluators, together with its jump set, Hölder exponent γ, and a
//! certified sup bound. The module provides the PL_γ seminorm probe,
//! the canonical indicator-times-Lipschitz decomposition (each piece
//! extended over the whole torus by linear interpolation across its
//! complementary arc), and Fejér/Cesàro trigonometric approximants with
//! closed-form Fourier coefficients for every built-in piece type.
//!
//! Conventions fixed here once: the torus is ℝ/ℤ, kernel formulas use
//! the angle x = 2πθ, jumps evaluate right-continuously (half-open arcs).

use crate::arithmetic::{torus_distance, TorusArc};
use crate::special::ln_gamma;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("invalid sampling function: {0}")]
    InvalidInput(String),
}

// ---------------------------------------------------------------------------
// Piece formulas
// ---------------------------------------------------------------------------

/// Smooth evaluator backing one piece. All formulas are defined on the
/// whole torus so that decomposed pieces can be extended globally.
#[derive(Debug, Clone, PartialEq)]
pub enum PieceFormula {
    Constant(f64),
    /// amplitude · cos(2πθ)
    Cosine { amplitude: f64 },
    /// value + slope · t with t = (θ − origin) mod 1
    Affine { origin: f64, value: f64, slope: f64 },
    /// scale · |sin πθ|^exponent
    HolderSine { scale: f64, exponent: f64 },
    /// a_0 + Σ_k a_k cos(2πkθ) + b_k sin(2πkθ)
    TrigPoly { cos: Vec<f64>, sin: Vec<f64> },
    /// cubic interpolation of uniform samples over [origin, origin+span]
    Table(CubicTable),
}

impl PieceFormula {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            PieceFormula::Constant(c) => *c,
            PieceFormula::Cosine { amplitude } => amplitude * (TAU * theta).cos(),
            PieceFormula::Affine { origin, value, slope } => {
                value + slope * (theta - origin).rem_euclid(1.0)
            }
            PieceFormula::HolderSine { scale, exponent } => {
                scale * (PI * theta).sin().abs().powf(*exponent)
            }
            PieceFormula::TrigPoly { cos, sin } => eval_trig_poly(cos, sin, theta),
            PieceFormula::Table(t) => t.eval(theta),
        }
    }

    /// Left limit at `point`, where the local coordinate wraps to 1 rather
    /// than 0. Only differs from `eval` for formulas with a seam.
    fn eval_left_limit(&self, point: f64) -> f64 {
        match self {
            PieceFormula::Affine { origin, value, slope } => {
                let mut t = (point - origin).rem_euclid(1.0);
                if t == 0.0 {
                    t = 1.0;
                }
                value + slope * t
            }
            PieceFormula::Table(table) => {
                let mut t = (point - table.origin).rem_euclid(1.0);
                if t == 0.0 {
                    t = 1.0;
                }
                table.eval_local(t.min(table.span))
            }
            other => other.eval(point),
        }
    }
}

fn eval_trig_poly(cos: &[f64], sin: &[f64], theta: f64) -> f64 {
    // angle-addition recurrence, one pass
    let (s1, c1) = (TAU * theta).sin_cos();
    let mut ck = 1.0; // cos(k·2πθ) at k = 0
    let mut sk = 0.0;
    let mut acc = cos[0];
    for k in 1..cos.len() {
        let c_next = ck * c1 - sk * s1;
        let s_next = sk * c1 + ck * s1;
        ck = c_next;
        sk = s_next;
        acc += cos[k] * ck + sin[k] * sk;
    }
    acc
}

/// Uniform-grid cubic Hermite interpolant on an interval of the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicTable {
    origin: f64,
    span: f64,
    values: Vec<f64>,
}

impl CubicTable {
    pub fn new(origin: f64, span: f64, values: Vec<f64>) -> Result<Self, SamplingError> {
        if values.len() < 2 {
            return Err(SamplingError::InvalidInput("table needs at least 2 samples".into()));
        }
        if !(span > 0.0 && span <= 1.0) {
            return Err(SamplingError::InvalidInput("table span must lie in (0,1]".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SamplingError::InvalidInput("table contains non-finite values".into()));
        }
        Ok(CubicTable { origin: origin.rem_euclid(1.0), span, values })
    }

    fn h(&self) -> f64 {
        self.span / (self.values.len() - 1) as f64
    }

    fn slope(&self, i: usize) -> f64 {
        let v = &self.values;
        let h = self.h();
        if i == 0 {
            (v[1] - v[0]) / h
        } else if i == v.len() - 1 {
            (v[i] - v[i - 1]) / h
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * h)
        }
    }

    /// Hermite cubic coefficients on segment i, local variable u ∈ [0, h].
    fn segment_poly(&self, i: usize) -> [f64; 4] {
        let h = self.h();
        let v0 = self.values[i];
        let v1 = self.values[i + 1];
        let m0 = self.slope(i);
        let m1 = self.slope(i + 1);
        // p(u) = v0 + m0 u + c2 u² + c3 u³ with p(h) = v1, p'(h) = m1
        let c2 = (3.0 * (v1 - v0) / h - 2.0 * m0 - m1) / h;
        let c3 = (m0 + m1 - 2.0 * (v1 - v0) / h) / (h * h);
        [v0, m0, c2, c3]
    }

    fn eval_local(&self, t: f64) -> f64 {
        let h = self.h();
        let n_seg = self.values.len() - 1;
        let i = ((t / h) as usize).min(n_seg - 1);
        let u = t - i as f64 * h;
        let [c0, c1, c2, c3] = self.segment_poly(i);
        ((c3 * u + c2) * u + c1) * u + c0
    }

    fn eval(&self, theta: f64) -> f64 {
        let t = (theta - self.origin).rem_euclid(1.0).min(self.span);
        self.eval_local(t)
    }
}

// ---------------------------------------------------------------------------
// Piecewise Hölder sampling functions
// ---------------------------------------------------------------------------

/// Tag describing where a function came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinTag {
    Cosine,
    Sawtooth,
    Sturmian,
    Holder,
    Constant,
    Custom,
}

/// One piece of a sampling function. `bridge` carries the linear
/// interpolation across the complementary arc once the function has been
/// put in canonical decomposed form; plain pieces leave it `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub arc: TorusArc,
    pub formula: PieceFormula,
    pub bridge: Option<Bridge>,
}

/// Edge values interpolated linearly across the missing arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bridge {
    pub end_value: f64,
    pub start_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseHolderFunction {
    pieces: Vec<Piece>,
    gamma: f64,
    jump_set: Vec<f64>,
    sup_bound: f64,
    builtin: BuiltinTag,
}

impl PiecewiseHolderFunction {
    pub fn builtin(&self) -> BuiltinTag {
        self.builtin
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn jump_set(&self) -> &[f64] {
        &self.jump_set
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// f ≡ c.
    pub fn constant(c: f64) -> Self {
        PiecewiseHolderFunction {
            pieces: vec![Piece {
                arc: TorusArc::full(),
                formula: PieceFormula::Constant(c),
                bridge: None,
            }],
            gamma: 1.0,
            jump_set: vec![],
            sup_bound: c.abs(),
            builtin: BuiltinTag::Constant,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// f(θ) = 2λ cos 2πθ.
    pub fn cosine(lambda: f64) -> Self {
        PiecewiseHolderFunction {
            pieces: vec![Piece {
                arc: TorusArc::full(),
                formula: PieceFormula::Cosine { amplitude: 2.0 * lambda },
                bridge: None,
            }],
            gamma: 1.0,
            jump_set: vec![],
            sup_bound: 2.0 * lambda.abs(),
            builtin: BuiltinTag::Cosine,
        }
    }

    /// f(θ) = λ(θ − 1/2) on [0,1), one jump at 0.
    pub fn sawtooth(lambda: f64) -> Self {
        PiecewiseHolderFunction {
            pieces: vec![Piece {
                arc: TorusArc::full(),
                formula: PieceFormula::Affine {
                    origin: 0.0,
                    value: -lambda / 2.0,
                    slope: lambda,
                },
                bridge: None,
            }],
            gamma: 1.0,
            jump_set: vec![0.0],
            sup_bound: lambda.abs() / 2.0,
            builtin: BuiltinTag::Sawtooth,
        }
    }

    /// f = λ · 1_{[1−ω, 1)}, jumps at 1−ω and 0.
    pub fn sturmian_indicator(lambda: f64, omega: f64) -> Self {
        let cut = (1.0 - omega).rem_euclid(1.0);
        PiecewiseHolderFunction {
            pieces: vec![
                Piece {
                    arc: TorusArc::from_endpoints(0.0, cut),
                    formula: PieceFormula::Constant(0.0),
                    bridge: None,
                },
                Piece {
                    arc: TorusArc::from_endpoints(cut, 1.0),
                    formula: PieceFormula::Constant(lambda),
                    bridge: None,
                },
            ],
            gamma: 1.0,
            jump_set: vec![0.0, cut],
            sup_bound: lambda.abs(),
            builtin: BuiltinTag::Sturmian,
        }
    }

    /// f(θ) = scale · |sin πθ|^γ — continuous but only γ-Hölder at 0.
    pub fn holder_sine(scale: f64, gamma: f64) -> Self {
        assert!(gamma > 0.0 && gamma <= 1.0);
        PiecewiseHolderFunction {
            pieces: vec![Piece {
                arc: TorusArc::full(),
                formula: PieceFormula::HolderSine { scale, exponent: gamma },
                bridge: None,
            }],
            gamma,
            jump_set: vec![],
            sup_bound: scale.abs(),
            builtin: BuiltinTag::Holder,
        }
    }

    /// Custom function from per-arc sample tables with a declared Hölder
    /// certificate. Breakpoints are treated as jumps.
    pub fn from_tables(
        breakpoints: &[f64],
        tables: &[Vec<f64>],
        gamma: f64,
        sup_bound: f64,
    ) -> Result<Self, SamplingError> {
        if breakpoints.is_empty() || breakpoints.len() != tables.len() {
            return Err(SamplingError::InvalidInput(
                "need one sample table per breakpoint arc".into(),
            ));
        }
        if !(0.0 < gamma && gamma <= 1.0) {
            return Err(SamplingError::InvalidInput("gamma must lie in (0,1]".into()));
        }
        let mut bps: Vec<f64> = breakpoints.iter().map(|b| b.rem_euclid(1.0)).collect();
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup();
        if bps.len() != breakpoints.len() {
            return Err(SamplingError::InvalidInput("breakpoints must be distinct mod 1".into()));
        }
        let mut pieces = Vec::with_capacity(bps.len());
        for (i, &start) in bps.iter().enumerate() {
            let end = bps[(i + 1) % bps.len()];
            let arc = TorusArc::from_endpoints(start, end);
            let table = CubicTable::new(start, arc.length(), tables[i].clone())?;
            if tables[i].iter().any(|v| v.abs() > sup_bound * (1.0 + 1e-12)) {
                return Err(SamplingError::InvalidInput(
                    "table sample exceeds the declared sup bound".into(),
                ));
            }
            pieces.push(Piece { arc, formula: PieceFormula::Table(table), bridge: None });
        }
        Ok(PiecewiseHolderFunction {
            pieces,
            gamma,
            jump_set: bps,
            sup_bound,
            builtin: BuiltinTag::Custom,
        })
    }

    /// Value of the unique piece whose half-open arc contains θ.
    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(1.0);
        if self.pieces.len() == 1 {
            return self.pieces[0].formula.eval(theta);
        }
        for p in &self.pieces {
            if p.arc.contains(theta) {
                return p.formula.eval(theta);
            }
        }
        // pieces cover 𝕋; reachable only through rounding at a seam
        self.pieces[0].formula.eval(theta)
    }

    /// Global value of decomposed piece i (its formula on the arc, the
    /// linear bridge on the complement).
    pub fn piece_global_eval(&self, i: usize, theta: f64) -> f64 {
        let theta = theta.rem_euclid(1.0);
        let p = &self.pieces[i];
        if p.arc.length() >= 1.0 || p.arc.contains(theta) {
            return p.formula.eval(theta);
        }
        match p.bridge {
            Some(b) => {
                let gap = 1.0 - p.arc.length();
                let t = (theta - p.arc.end()).rem_euclid(1.0) / gap;
                b.end_value * (1.0 - t) + b.start_value * t
            }
            None => p.formula.eval(theta),
        }
    }
}

/// Value of `f` at θ (operation-name wrapper).
pub fn evaluate_sampling(f: &PiecewiseHolderFunction, theta: f64) -> f64 {
    f.eval(theta)
}

// ---------------------------------------------------------------------------
// PL_γ seminorm probe
// ---------------------------------------------------------------------------

/// Grid lower bound for ‖f‖_{PL_γ} = ‖f‖_∞ + sup |f(t+h)−f(t)|/h^γ over
/// h > 0 and t with dist(t, J_f) > h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlNormEstimate {
    pub value: f64,
    pub sup_part: f64,
    pub holder_part: f64,
    pub probe_count: usize,
    pub min_h: f64,
}

pub fn pl_norm_estimate(f: &PiecewiseHolderFunction, probe_count: usize) -> PlNormEstimate {
    assert!(probe_count >= 1 << 10, "probe_count must be at least 2^10");
    let gamma = f.gamma();
    let grid: Vec<f64> = (0..probe_count).map(|i| i as f64 / probe_count as f64).collect();
    let mut sup = 0.0f64;
    for &t in &grid {
        sup = sup.max(f.eval(t).abs());
    }
    let mut quot = 0.0f64;
    let mut min_h = f64::INFINITY;
    for m in 3..=20 {
        let h = 0.5f64.powi(m);
        min_h = min_h.min(h);
        for &t in &grid {
            if !f.jump_set().is_empty()
                && f.jump_set().iter().any(|&j| torus_distance(t, j) <= h)
            {
                continue;
            }
            let d = (f.eval(t + h) - f.eval(t)).abs() / h.powf(gamma);
            if d > quot {
                quot = d;
            }
        }
    }
    PlNormEstimate { value: sup + quot, sup_part: sup, holder_part: quot, probe_count, min_h }
}

// ---------------------------------------------------------------------------
// Canonical indicator-times-Lipschitz decomposition
// ---------------------------------------------------------------------------

/// Rewrite f as Σ_i 1_{I_i} f_i where each f_i is globally Hölder on 𝕋:
/// the original formula on I_i, linear interpolation of the edge values
/// across the complement. A single jump gets its antipode added as an
/// artificial breakpoint so that every complementary arc is proper.
pub fn decompose_pl(f: &PiecewiseHolderFunction) -> PiecewiseHolderFunction {
    if f.jump_set().is_empty() {
        return PiecewiseHolderFunction {
            pieces: vec![Piece {
                arc: TorusArc::full(),
                formula: f.pieces[0].formula.clone(),
                bridge: None,
            }],
            gamma: f.gamma,
            jump_set: vec![],
            sup_bound: f.sup_bound,
            builtin: f.builtin,
        };
    }
    let mut cuts: Vec<f64> = f.jump_set().to_vec();
    if cuts.len() == 1 {
        cuts.push((cuts[0] + 0.5).rem_euclid(1.0));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut pieces = Vec::with_capacity(cuts.len());
    for (i, &start) in cuts.iter().enumerate() {
        let end = cuts[(i + 1) % cuts.len()];
        let arc = TorusArc::from_endpoints(start, end);
        let mid = (start + arc.length() / 2.0).rem_euclid(1.0);
        let source = f
            .pieces
            .iter()
            .find(|p| p.arc.contains(mid))
            .expect("decomposition arc must sit inside one source piece");
        let start_value = source.formula.eval(arc.start());
        let end_value = source.formula.eval_left_limit(arc.end());
        pieces.push(Piece {
            arc,
            formula: source.formula.clone(),
            bridge: Some(Bridge { end_value, start_value }),
        });
    }
    PiecewiseHolderFunction {
        pieces,
        gamma: f.gamma,
        jump_set: f.jump_set.clone(),
        sup_bound: f.sup_bound,
        builtin: f.builtin,
    }
}

// ---------------------------------------------------------------------------
// Fejér kernel and Cesàro approximants
// ---------------------------------------------------------------------------

/// Fejér kernel K_N at θ ∈ 𝕋 (angle x = 2πθ), normalized so ∫_𝕋 K_N = 1.
/// Removable singularities return the peak value N+1.
pub fn fejer_kernel_eval(n: usize, theta: f64) -> f64 {
    let x = TAU * (theta - theta.round()); // angle wrapped to [−π, π]
    let s = (0.5 * x).sin();
    if s.abs() < 1e-150 {
        return n as f64 + 1.0;
    }
    let num = ((n as f64 + 1.0) * 0.5 * x).sin();
    (num / s) * (num / s) / (n as f64 + 1.0)
}

/// Cesàro (Fejér) mean of a decomposed sampling function:
/// f_N = Σ_i σ_N(f_i) · 1_{I_i}, with per-piece raw Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FejerApproximant {
    degree: usize,
    pieces: Vec<ApproximantPiece>,
    sup_bound: f64,
    source_jumps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximantPiece {
    pub arc: TorusArc,
    /// raw a_k, k = 0..N
    pub cos: Vec<f64>,
    /// raw b_k (b_0 ≡ 0)
    pub sin: Vec<f64>,
}

impl FejerApproximant {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn pieces(&self) -> &[ApproximantPiece] {
        &self.pieces
    }

    /// Cesàro-weighted coefficient pair (a_k, b_k)·(1 − k/(N+1)) of piece i.
    pub fn weighted_coefficient(&self, i: usize, k: usize) -> (f64, f64) {
        let w = 1.0 - k as f64 / (self.degree as f64 + 1.0);
        (self.pieces[i].cos[k] * w, self.pieces[i].sin[k] * w)
    }

    /// σ_N(f_i)(θ) — the smoothed piece, defined on all of 𝕋.
    pub fn piece_smoothed_eval(&self, i: usize, theta: f64) -> f64 {
        let p = &self.pieces[i];
        let n1 = self.degree as f64 + 1.0;
        let cos_w: Vec<f64> =
            p.cos.iter().enumerate().map(|(k, a)| a * (1.0 - k as f64 / n1)).collect();
        let sin_w: Vec<f64> =
            p.sin.iter().enumerate().map(|(k, b)| b * (1.0 - k as f64 / n1)).collect();
        eval_trig_poly(&cos_w, &sin_w, theta)
    }

    /// f_N(θ) = Σ_i 1_{I_i}(θ) σ_N(f_i)(θ).
    pub fn eval(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(1.0);
        if self.pieces.len() == 1 {
            return self.piece_smoothed_eval(0, theta);
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if p.arc.contains(theta) {
                return self.piece_smoothed_eval(i, theta);
            }
        }
        self.piece_smoothed_eval(0, theta)
    }

    /// Repackage as a sampling function (piecewise trigonometric
    /// polynomial) so the approximant can drive cocycles and boxes.
    pub fn as_sampling_function(&self) -> PiecewiseHolderFunction {
        let n1 = self.degree as f64 + 1.0;
        let pieces: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| {
                let cos_w: Vec<f64> =
                    p.cos.iter().enumerate().map(|(k, a)| a * (1.0 - k as f64 / n1)).collect();
                let sin_w: Vec<f64> =
                    p.sin.iter().enumerate().map(|(k, b)| b * (1.0 - k as f64 / n1)).collect();
                Piece {
                    arc: p.arc,
                    formula: PieceFormula::TrigPoly { cos: cos_w, sin: sin_w },
                    bridge: None,
                }
            })
            .collect();
        let jump_set = if pieces.len() == 1 { vec![] } else { self.source_jumps.clone() };
        PiecewiseHolderFunction {
            pieces,
            gamma: 1.0,
            jump_set,
            sup_bound: self.sup_bound,
            builtin: BuiltinTag::Custom,
        }
    }
}

/// Build the degree-N Cesàro approximant of `f` in piecewise form.
pub fn cesaro_approximant(
    f: &PiecewiseHolderFunction,
    degree: usize,
) -> Result<FejerApproximant, SamplingError> {
    assert!(degree >= 1, "approximant degree must be >= 1");
    let d = decompose_pl(f);
    let mut pieces = Vec::with_capacity(d.pieces.len());
    for piece in &d.pieces {
        let (cos, sin) = piece_fourier_coefficients(piece, degree)?;
        pieces.push(ApproximantPiece { arc: piece.arc, cos, sin });
    }
    // ‖σ_N(f_i)‖_∞ ≤ ‖f_i‖_∞ ≤ ‖f‖_∞ (bridges interpolate edge values),
    // so Σ_i ‖f_i‖_∞ certifies the sup of the assembled approximant.
    let sup_bound = d.pieces.len() as f64 * f.sup_bound();
    Ok(FejerApproximant {
        degree,
        pieces,
        sup_bound,
        source_jumps: if d.pieces.len() == 1 {
            vec![]
        } else {
            d.pieces.iter().map(|p| p.arc.start()).collect()
        },
    })
}

// ---------------------------------------------------------------------------
// Exact Fourier coefficients of decomposed pieces
// ---------------------------------------------------------------------------

/// Raw real coefficients (a_0..a_N, b_0..b_N) of one globally extended piece.
fn piece_fourier_coefficients(
    piece: &Piece,
    degree: usize,
) -> Result<(Vec<f64>, Vec<f64>), SamplingError> {
    let full_circle = piece.arc.length() >= 1.0;
    let mut cos = vec![0.0; degree + 1];
    let mut sin = vec![0.0; degree + 1];

    if full_circle {
        match &piece.formula {
            PieceFormula::Constant(c) => cos[0] = *c,
            PieceFormula::Cosine { amplitude } => {
                if degree >= 1 {
                    cos[1] = *amplitude;
                }
            }
            PieceFormula::Affine { origin, value, slope } => {
                segment_coefficients(
                    &[PolySegment {
                        start: *origin,
                        len: 1.0,
                        coeffs: [*value, *slope, 0.0, 0.0],
                    }],
                    degree,
                    &mut cos,
                    &mut sin,
                );
            }
            PieceFormula::HolderSine { scale, exponent } => {
                holder_sine_coefficients(*scale, *exponent, degree, &mut cos);
            }
            PieceFormula::TrigPoly { cos: c, sin: s } => {
                for k in 0..=degree {
                    if k < c.len() {
                        cos[k] = c[k];
                        sin[k] = s[k];
                    }
                }
            }
            PieceFormula::Table(t) => {
                let segs = table_segments(t);
                segment_coefficients(&segs, degree, &mut cos, &mut sin);
            }
        }
        return finite_or_fail(cos, sin);
    }

    // proper sub-arc: formula over the arc plus the linear bridge
    let bridge = piece.bridge.ok_or_else(|| {
        SamplingError::InvalidInput("piece on a sub-arc lacks its bridge extension".into())
    })?;
    let mut segs: Vec<PolySegment> = Vec::new();
    match &piece.formula {
        PieceFormula::Constant(c) => segs.push(PolySegment {
            start: piece.arc.start(),
            len: piece.arc.length(),
            coeffs: [*c, 0.0, 0.0, 0.0],
        }),
        PieceFormula::Affine { origin, value, slope } => {
            let off = (piece.arc.start() - origin).rem_euclid(1.0);
            segs.push(PolySegment {
                start: piece.arc.start(),
                len: piece.arc.length(),
                coeffs: [value + slope * off, *slope, 0.0, 0.0],
            });
        }
        PieceFormula::Table(t) => {
            segs.extend(table_segments(t));
        }
        PieceFormula::Cosine { amplitude } => {
            cosine_arc_coefficients(*amplitude, &piece.arc, degree, &mut cos, &mut sin);
        }
        PieceFormula::TrigPoly { cos: c, sin: s } => {
            trig_poly_arc_coefficients(c, s, &piece.arc, degree, &mut cos, &mut sin);
        }
        PieceFormula::HolderSine { .. } => {
            return Err(SamplingError::QuadratureFailure(
                "Hölder-sine pieces are only supported on the full circle".into(),
            ));
        }
    }
    // bridge across the complement
    let gap = 1.0 - piece.arc.length();
    segs.push(PolySegment {
        start: piece.arc.end(),
        len: gap,
        coeffs: [bridge.end_value, (bridge.start_value - bridge.end_value) / gap, 0.0, 0.0],
    });
    segment_coefficients(&segs, degree, &mut cos, &mut sin);
    finite_or_fail(cos, sin)
}

fn finite_or_fail(cos: Vec<f64>, sin: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>), SamplingError> {
    if cos.iter().chain(sin.iter()).all(|v| v.is_finite()) {
        Ok((cos, sin))
    } else {
        Err(SamplingError::QuadratureFailure("non-finite Fourier coefficient".into()))
    }
}

/// Polynomial on [start, start+len) ⊂ 𝕋 in the local variable u = θ − start.
struct PolySegment {
    start: f64,
    len: f64,
    coeffs: [f64; 4],
}

fn table_segments(t: &CubicTable) -> Vec<PolySegment> {
    let h = t.h();
    (0..t.values.len() - 1)
        .map(|i| PolySegment {
            start: (t.origin + i as f64 * h).rem_euclid(1.0),
            len: h,
            coeffs: t.segment_poly(i),
        })
        .collect()
}

/// Accumulate f̂ contributions of polynomial segments into (a_k, b_k).
fn segment_coefficients(segs: &[PolySegment], degree: usize, cos: &mut [f64], sin: &mut [f64]) {
    for k in 0..=degree {
        let omega = TAU * k as f64;
        let mut fk = Complex64::new(0.0, 0.0); // ∫ f e^{−iωθ} dθ
        for s in segs {
            let phase = Complex64::from_polar(1.0, -omega * s.start);
            let mut seg = Complex64::new(0.0, 0.0);
            for (m, &c) in s.coeffs.iter().enumerate() {
                if c != 0.0 {
                    seg += c * poly_moment(m, omega, s.len);
                }
            }
            fk += phase * seg;
        }
        if k == 0 {
            cos[0] += fk.re;
        } else {
            cos[k] += 2.0 * fk.re;
            sin[k] += -2.0 * fk.im;
        }
    }
}

/// ∫_0^L u^m e^{−iωu} du, exact closed form with a series branch guarding
/// the small-ωL cancellation.
fn poly_moment(m: usize, omega: f64, len: f64) -> Complex64 {
    if omega == 0.0 {
        return Complex64::new(len.powi(m as i32 + 1) / (m as f64 + 1.0), 0.0);
    }
    let x = omega * len;
    if x.abs() < 0.7 {
        let mut term = Complex64::new(1.0, 0.0); // (−iω)^r / r!
        let mut acc = Complex64::new(0.0, 0.0);
        let miw = Complex64::new(0.0, -omega);
        for r in 0..24 {
            acc += term * len.powi((m + r) as i32 + 1) / (m + r + 1) as f64;
            term = term * miw / (r as f64 + 1.0);
        }
        return acc;
    }
    let iw = Complex64::new(0.0, omega);
    let e = Complex64::from_polar(1.0, -x);
    let mut j = (Complex64::new(1.0, 0.0) - e) / iw; // J_0
    for mm in 1..=m {
        j = (mm as f64 * j - len.powi(mm as i32) * e) / iw;
    }
    j
}

/// Coefficients of A·cos(2πθ) restricted to an arc.
fn cosine_arc_coefficients(
    amplitude: f64,
    arc: &TorusArc,
    degree: usize,
    cos: &mut [f64],
    sin: &mut [f64],
) {
    for k in 0..=degree {
        let mut fk = Complex64::new(0.0, 0.0);
        for m in [1i64, -1i64] {
            fk += 0.5 * amplitude * exp_segment(m, k as i64, arc.start(), arc.length());
        }
        if k == 0 {
            cos[0] += fk.re;
        } else {
            cos[k] += 2.0 * fk.re;
            sin[k] += -2.0 * fk.im;
        }
    }
}

fn trig_poly_arc_coefficients(
    c: &[f64],
    s: &[f64],
    arc: &TorusArc,
    degree: usize,
    cos: &mut [f64],
    sin: &mut [f64],
) {
    for k in 0..=degree {
        let mut fk = Complex64::new(0.0, 0.0);
        for (m, (&am, &bm)) in c.iter().zip(s.iter()).enumerate() {
            if m == 0 {
                fk += am * exp_segment(0, k as i64, arc.start(), arc.length());
            } else {
                // a_m cos + b_m sin = c₊ e^{2πimθ} + c₋ e^{−2πimθ}
                let cp = Complex64::new(am / 2.0, -bm / 2.0);
                let cm = Complex64::new(am / 2.0, bm / 2.0);
                fk += cp * exp_segment(m as i64, k as i64, arc.start(), arc.length());
                fk += cm * exp_segment(-(m as i64), k as i64, arc.start(), arc.length());
            }
        }
        if k == 0 {
            cos[0] += fk.re;
        } else {
            cos[k] += 2.0 * fk.re;
            sin[k] += -2.0 * fk.im;
        }
    }
}

/// ∫ over the arc of e^{2πi m θ} · e^{−2πi j θ} dθ.
fn exp_segment(m: i64, j: i64, start: f64, len: f64) -> Complex64 {
    if m == j {
        return Complex64::new(len, 0.0);
    }
    let w = TAU * (m - j) as f64;
    let a = Complex64::from_polar(1.0, w * start);
    let b = Complex64::from_polar(1.0, w * len) - Complex64::new(1.0, 0.0);
    a * b / Complex64::new(0.0, w)
}

/// Cosine coefficients of scale·|sin πθ|^γ on the full circle:
/// a_0 = scale·Γ(γ+1)/(2^γ·Γ(1+γ/2)²) and, for k ≥ 1,
/// a_k = −2·scale·Γ(γ+1)·sin(πγ/2)/(π·2^γ) · Γ(k−γ/2)/Γ(k+1+γ/2).
fn holder_sine_coefficients(scale: f64, gamma: f64, degree: usize, cos: &mut [f64]) {
    let ln2 = std::f64::consts::LN_2;
    let lg1 = ln_gamma(gamma + 1.0);
    cos[0] = scale * (lg1 - gamma * ln2 - 2.0 * ln_gamma(1.0 + gamma / 2.0)).exp();
    let prefactor = -2.0 * scale * (lg1 - gamma * ln2).exp() * (PI * gamma / 2.0).sin() / PI;
    for k in 1..=degree {
        let kf = k as f64;
        cos[k] = prefactor * (ln_gamma(kf - gamma / 2.0) - ln_gamma(kf + 1.0 + gamma / 2.0)).exp();
    }
}

// ---------------------------------------------------------------------------
// Config-facing specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinKind {
    Cosine,
    Sawtooth,
    Sturmian,
    Holder,
    Constant,
}

/// Serialized form of a sampling function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSamplingSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSamplingSpec {
    pub breakpoints: Vec<f64>,
    pub tables: Vec<Vec<f64>>,
    pub gamma: f64,
    pub sup_bound: f64,
}

impl SamplingSpec {
    pub fn builtin(kind: BuiltinKind, lambda: f64) -> Self {
        SamplingSpec { builtin: Some(kind), lambda: Some(lambda), gamma: None, custom: None }
    }

    /// Instantiate; `omega` feeds the Sturmian indicator arc.
    pub fn build(&self, omega: f64) -> Result<PiecewiseHolderFunction, SamplingError> {
        match (&self.builtin, &self.custom) {
            (Some(kind), None) => {
                let lambda = self.lambda.unwrap_or(1.0);
                Ok(match kind {
                    BuiltinKind::Cosine => PiecewiseHolderFunction::cosine(lambda),
                    BuiltinKind::Sawtooth => PiecewiseHolderFunction::sawtooth(lambda),
                    BuiltinKind::Sturmian => {
                        PiecewiseHolderFunction::sturmian_indicator(lambda, omega)
                    }
                    BuiltinKind::Holder => {
                        PiecewiseHolderFunction::holder_sine(lambda, self.gamma.unwrap_or(0.5))
                    }
                    BuiltinKind::Constant => PiecewiseHolderFunction::constant(lambda),
                })
            }
            (None, Some(c)) => PiecewiseHolderFunction::from_tables(
                &c.breakpoints,
                &c.tables,
                c.gamma,
                c.sup_bound,
            ),
            _ => Err(SamplingError::InvalidInput(
                "specify exactly one of `builtin` or `custom`".into(),
            )),
        }
    }
}
