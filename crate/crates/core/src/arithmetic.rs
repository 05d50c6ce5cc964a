//! Continued fractions, Diophantine classification, and rotation-orbit
//! geometry for irrational frequencies.
//!
//! Frequencies enter as exact quadratic irrationals (a + b√d)/c, as
//! high-precision decimal strings, or as explicit partial quotients.
//! Partial quotients are discontinuous in ω, so the expansion is
//! certified: quadratic surds expand exactly in integer arithmetic,
//! decimal strings expand by interval Euclid and stop with
//! [`ArithmeticError::PrecisionExhausted`] rather than guessing.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithmeticError {
    /// The continued fraction terminates: the input is rational.
    #[error("frequency is rational: {0}")]
    RationalFrequency(String),
    /// Not enough input precision to certify the requested quotient.
    #[error("precision exhausted after {certified} of {requested} partial quotients")]
    PrecisionExhausted { certified: usize, requested: usize },
    /// Orbit search failed inside the guaranteed shift bound.
    #[error("no orbit hit with shift <= {bound} (precondition violated or bug)")]
    HitNotFound { bound: u64 },
    /// Input outside the documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

// ---------------------------------------------------------------------------
// Rotations of the torus 𝕋 = ℝ/ℤ
// ---------------------------------------------------------------------------

/// The rotation Rθ = θ + ω on 𝕋, with ω held in 128-bit fixed point so
/// that θ + jω mod 1 is computed without drift for |j| well beyond 10^7.
///
/// ω = hi/2^64 + lo with |lo| < 2^-64. The wrapping multiply j·hi is the
/// exact modular reduction of the fixed-point part; j·lo stays far below
/// one ulp of the result for all admissible j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    omega: f64,
    hi: u64,
    lo: f64,
}

const TWO_NEG_64: f64 = 5.421010862427522e-20; // 2^-64

impl Rotation {
    /// Rotation by the given f64 angle, decomposed exactly.
    pub fn from_f64(omega: f64) -> Self {
        assert!((0.0..1.0).contains(&omega), "rotation angle must lie in [0,1)");
        let t = omega * 1.8446744073709552e19; // ω·2^64, exact (power-of-two scale)
        let ti = t.trunc();
        let lo = (t - ti) * TWO_NEG_64;
        Rotation { omega, hi: ti as u64, lo }
    }

    /// Rotation from a 128-bit fixed-point angle ω ≈ fixed/2^128.
    pub fn from_fixed128(fixed: u128) -> Self {
        let hi = (fixed >> 64) as u64;
        let lo = (fixed & u128::from(u64::MAX)) as f64 * TWO_NEG_64 * TWO_NEG_64;
        let omega = hi as f64 * TWO_NEG_64 + lo;
        Rotation { omega, hi, lo }
    }

    /// Nearest-f64 value of the angle.
    pub fn angle(&self) -> f64 {
        self.omega
    }

    /// θ + jω reduced to [0,1).
    #[inline]
    pub fn step(&self, theta: f64, j: i64) -> f64 {
        let u = (j as u64).wrapping_mul(self.hi);
        let val = theta + u as f64 * TWO_NEG_64 + j as f64 * self.lo;
        let frac = val - val.floor();
        if frac >= 1.0 {
            0.0
        } else {
            frac
        }
    }
}

/// θ + jω reduced to [0,1), exact at the working precision of the f64 ω.
pub fn rotate_orbit(theta: f64, omega: f64, j: i64) -> f64 {
    Rotation::from_f64(omega).step(theta, j)
}

// ---------------------------------------------------------------------------
// Arcs of the torus
// ---------------------------------------------------------------------------

/// A half-open arc [start, start+length) of 𝕋, allowed to wrap 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusArc {
    start: f64,
    length: f64,
}

impl TorusArc {
    pub fn new(start: f64, length: f64) -> Self {
        assert!(length > 0.0 && length <= 1.0, "arc length must lie in (0,1]");
        TorusArc { start: start.rem_euclid(1.0), length }
    }

    /// The arc from `a` to `b` going forward (counterclockwise), [a,b).
    pub fn from_endpoints(a: f64, b: f64) -> Self {
        let a = a.rem_euclid(1.0);
        let b = b.rem_euclid(1.0);
        let len = (b - a).rem_euclid(1.0);
        // coincident endpoints denote the full circle
        TorusArc::new(a, if len == 0.0 { 1.0 } else { len })
    }

    pub fn full() -> Self {
        TorusArc { start: 0.0, length: 1.0 }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// End point (start + length mod 1); excluded from the arc.
    pub fn end(&self) -> f64 {
        (self.start + self.length).rem_euclid(1.0)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        (x - self.start).rem_euclid(1.0) < self.length
    }
}

/// Distance on 𝕋 between x and y.
pub fn torus_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

// ---------------------------------------------------------------------------
// Frequency specifications
// ---------------------------------------------------------------------------

/// How a frequency is supplied. Exact rationals are rejected at expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FrequencySpec {
    /// (a + b√d)/c with integer a, b, c, d; must land in (0,1).
    Quadratic { a: i64, b: i64, d: u64, c: i64 },
    /// Decimal digits "0.618033...", trusted to one ulp of the last digit.
    Decimal { digits: String },
    /// Explicit partial quotients [a_1, a_2, ...], all ≥ 1.
    Quotients { a: Vec<u64> },
}

impl FrequencySpec {
    /// The golden mean (√5 − 1)/2.
    pub fn golden() -> Self {
        FrequencySpec::Quadratic { a: -1, b: 1, d: 5, c: 2 }
    }

    /// The silver-type frequency √2 − 1.
    pub fn sqrt2_minus_1() -> Self {
        FrequencySpec::Quadratic { a: -1, b: 1, d: 2, c: 1 }
    }

    /// Expand to `n_terms` certified partial quotients.
    pub fn expand(&self, n_terms: usize) -> Result<FrequencyData, ArithmeticError> {
        expand_continued_fraction(self, n_terms)
    }
}

/// One convergent p_k/q_k.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergent {
    pub p: BigInt,
    pub q: BigInt,
}

/// An irrational frequency with its certified continued-fraction data.
///
/// Convention: q_0 = 1, q_{-1} = 0, and the stored lists hold
/// a_1..a_n and (p_1,q_1)..(p_n,q_n).
#[derive(Debug, Clone)]
pub struct FrequencyData {
    omega: f64,
    rotation: Rotation,
    partial_quotients: Vec<u64>,
    convergents: Vec<Convergent>,
    precision_bits: u32,
}

impl FrequencyData {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn partial_quotients(&self) -> &[u64] {
        &self.partial_quotients
    }

    pub fn convergents(&self) -> &[Convergent] {
        &self.convergents
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// q_k with the q_0 = 1 convention; k is 1-based into the stored list.
    pub fn q(&self, k: usize) -> BigInt {
        if k == 0 {
            BigInt::one()
        } else {
            self.convergents[k - 1].q.clone()
        }
    }

    /// θ + jω mod 1 at the stored working precision.
    pub fn rotate(&self, theta: f64, j: i64) -> f64 {
        self.rotation.step(theta, j)
    }

    /// Smallest stored index n with ln q_n > `ln_q_min`, if any.
    pub fn index_with_ln_q_above(&self, ln_q_min: f64) -> Option<usize> {
        (1..=self.convergents.len()).find(|&n| ln_big(&self.q(n)) > ln_q_min)
    }
}

// ---------------------------------------------------------------------------
// Continued-fraction expansion
// ---------------------------------------------------------------------------

/// Expand a frequency to `n_terms` certified partial quotients.
pub fn expand_continued_fraction(
    spec: &FrequencySpec,
    n_terms: usize,
) -> Result<FrequencyData, ArithmeticError> {
    if n_terms == 0 {
        return Err(ArithmeticError::InvalidInput("n_terms must be >= 1".into()));
    }
    match spec {
        FrequencySpec::Quadratic { a, b, d, c } => expand_quadratic(*a, *b, *d, *c, n_terms),
        FrequencySpec::Decimal { digits } => expand_decimal(digits, n_terms),
        FrequencySpec::Quotients { a } => expand_quotients(a, n_terms),
    }
}

fn convergents_from_quotients(quotients: &[u64]) -> Vec<Convergent> {
    let mut out = Vec::with_capacity(quotients.len());
    let (mut p_prev, mut p) = (BigInt::one(), BigInt::zero()); // p_{-1}, p_0
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one()); // q_{-1}, q_0
    for &a in quotients {
        let a = BigInt::from(a);
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        out.push(Convergent { p: p_next.clone(), q: q_next.clone() });
        p_prev = p;
        p = p_next;
        q_prev = q;
        q = q_next;
    }
    out
}

/// floor(√x) for nonnegative BigInt.
fn isqrt_big(x: &BigInt) -> BigInt {
    x.sqrt()
}

/// Natural log of a positive BigInt, good to ~1 ulp even when the
/// value itself overflows f64.
fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 52;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// 128-bit fixed point floor(num·2^128/den) for 0 < num/den < 1.
fn fixed128_from_ratio(num: &BigInt, den: &BigInt) -> u128 {
    let scaled: BigInt = (num << 128u32) / den;
    let (_, digits) = scaled.to_u64_digits();
    let mut v: u128 = 0;
    for (i, d) in digits.iter().enumerate().take(2) {
        v |= (*d as u128) << (64 * i);
    }
    v
}

/// Exact CF expansion of (a + b√d)/c via the surd algorithm
/// on (P + √D)/Q with the invariant Q | D − P².
fn expand_quadratic(
    a: i64,
    b: i64,
    d: u64,
    c: i64,
    n_terms: usize,
) -> Result<FrequencyData, ArithmeticError> {
    if c == 0 {
        return Err(ArithmeticError::InvalidInput("denominator c must be nonzero".into()));
    }
    let d_big = BigInt::from(d);
    let root = isqrt_big(&d_big);
    if b == 0 || &root * &root == d_big {
        // (a + b√d)/c is rational
        return Err(ArithmeticError::RationalFrequency(format!("({a} + {b}√{d})/{c}")));
    }

    // Normalize to (P + √D)/Q with b folded into D and sign into P, Q.
    let (mut p, mut q) = if b > 0 {
        (BigInt::from(a), BigInt::from(c))
    } else {
        (BigInt::from(-a), BigInt::from(-c))
    };
    let mut dd = BigInt::from(b) * BigInt::from(b) * &d_big;
    // enforce Q | D − P²
    let rem = (&dd - &p * &p) % &q;
    if !rem.is_zero() {
        let qa = q.abs();
        p *= &qa;
        dd *= &qa * &qa;
        q *= &qa;
    }

    // value check and 128-bit fixed point for the rotation
    let sqrt_dd_fixed = isqrt_big(&(&dd << 256u32)); // floor(√D · 2^128)
    let omega_fixed = floor_div(&((&p << 128u32) + &sqrt_dd_fixed), &q);
    let omega_val = big_ratio_to_f64(&omega_fixed, &(BigInt::one() << 128u32));
    if !(0.0..1.0).contains(&omega_val) || omega_val == 0.0 {
        return Err(ArithmeticError::InvalidInput(format!(
            "({a} + {b}√{d})/{c} = {omega_val} is outside (0,1)"
        )));
    }

    let mut quotients = Vec::with_capacity(n_terms);
    // a_0 = floor(ω) = 0; run the surd step once to bring 1/ω into play.
    let mut k = 0usize;
    while quotients.len() < n_terms {
        let fl = floor_surd(&p, &dd, &q);
        if k > 0 {
            let af = fl.to_u64().ok_or_else(|| {
                ArithmeticError::InvalidInput("partial quotient exceeds u64".into())
            })?;
            quotients.push(af);
        } else if !fl.is_zero() {
            return Err(ArithmeticError::InvalidInput(
                "quadratic frequency must lie in (0,1)".into(),
            ));
        }
        // α ← 1/(α − a): P ← aQ − P, Q ← (D − P²)/Q
        let p_next = &fl * &q - &p;
        let q_next = (&dd - &p_next * &p_next) / &q;
        if q_next.is_zero() {
            return Err(ArithmeticError::RationalFrequency(format!("({a} + {b}√{d})/{c}")));
        }
        p = p_next;
        q = q_next;
        k += 1;
    }

    let convergents = convergents_from_quotients(&quotients);
    let rotation = Rotation::from_fixed128(omega_fixed.to_u128().unwrap_or(0));

    Ok(FrequencyData {
        omega: rotation.angle(),
        rotation,
        partial_quotients: quotients,
        convergents,
        precision_bits: 128,
    })
}

/// Exact floor((p + √d)/q) for nonsquare d ≥ 0 and q ≠ 0.
fn floor_surd(p: &BigInt, d: &BigInt, q: &BigInt) -> BigInt {
    let s = isqrt_big(d); // s < √d < s+1 (d nonsquare)
    if q.sign() != Sign::Minus {
        // floor((p + √d)/q) = floor((p + s)/q) since s = floor(√d)
        floor_div(&(p + &s), q)
    } else {
        // √d ∈ (s, s+1) ⟹ p + √d ∈ (p+s, p+s+1) ⟹ (p+√d)/q ∈ ((p+s+1)/q, (p+s)/q)
        // floor over that open interval equals floor((p+s+1)/q) because q < 0
        floor_div(&(p + &s + BigInt::one()), q)
    }
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// Ratio of two BigInts as f64, accurate to a few ulp for any magnitude.
fn big_ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    let nb = n.bits().max(1);
    let db = d.bits().max(1);
    // scale both to ~60 bits, track the power of two
    let (ns, nexp) = if nb > 60 { (n >> (nb - 60), (nb - 60) as i32) } else { (n.clone(), 0) };
    let (ds, dexp) = if db > 60 { (d >> (db - 60), (db - 60) as i32) } else { (d.clone(), 0) };
    let ratio = ns.to_f64().unwrap() / ds.to_f64().unwrap();
    ratio * 2f64.powi(nexp - dexp)
}

/// Interval-certified CF expansion of a decimal string.
fn expand_decimal(digits: &str, n_terms: usize) -> Result<FrequencyData, ArithmeticError> {
    let s = digits.trim();
    let frac = s
        .strip_prefix("0.")
        .or_else(|| s.strip_prefix('.'))
        .ok_or_else(|| ArithmeticError::InvalidInput(format!("expected 0.xxx form, got {s:?}")))?;
    if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ArithmeticError::InvalidInput(format!("bad decimal digits {s:?}")));
    }
    let places = frac.len() as u32;
    let num: BigInt = frac.parse().map_err(|_| {
        ArithmeticError::InvalidInput("unparseable decimal digits".into())
    })?;
    let den = BigInt::from(10u32).pow(places);
    // trust to one ulp of the last digit each way
    let lo = BigRational::new(&num - BigInt::one(), den.clone());
    let hi = BigRational::new(&num + BigInt::one(), den.clone());
    if lo <= BigRational::zero() || hi >= BigRational::one() {
        return Err(ArithmeticError::InvalidInput(
            "decimal frequency must lie strictly inside (0,1)".into(),
        ));
    }

    let mut quotients = Vec::with_capacity(n_terms);
    let (mut lo, mut hi) = (lo, hi);
    while quotients.len() < n_terms {
        // α ∈ [lo, hi] ⊂ (0,1); next quotient is floor(1/α)
        let inv_hi = hi.recip(); // smallest possible 1/α
        let inv_lo = lo.recip(); // largest possible 1/α
        let f_hi = inv_hi.floor();
        let f_lo = inv_lo.floor();
        let ambiguous_integer_edge = inv_lo.is_integer();
        if f_hi != f_lo || ambiguous_integer_edge {
            return Err(ArithmeticError::PrecisionExhausted {
                certified: quotients.len(),
                requested: n_terms,
            });
        }
        let a = f_hi
            .to_integer()
            .to_u64()
            .ok_or_else(|| ArithmeticError::InvalidInput("partial quotient exceeds u64".into()))?;
        quotients.push(a);
        let af = BigRational::from_integer(BigInt::from(a));
        let new_lo = inv_hi - af.clone();
        let new_hi = inv_lo - af;
        if new_lo <= BigRational::zero() {
            // can't exclude exact termination at this precision
            return Err(ArithmeticError::PrecisionExhausted {
                certified: quotients.len() - 1,
                requested: n_terms,
            });
        }
        lo = new_lo;
        hi = new_hi;
    }

    let convergents = convergents_from_quotients(&quotients);
    let fixed = fixed128_from_ratio(&num, &den);
    let rotation = Rotation::from_fixed128(fixed);
    Ok(FrequencyData {
        omega: rotation.angle(),
        rotation,
        partial_quotients: quotients,
        convergents,
        precision_bits: (places as f64 * std::f64::consts::LOG2_10) as u32,
    })
}

/// Frequency given directly by its partial quotients.
fn expand_quotients(a: &[u64], n_terms: usize) -> Result<FrequencyData, ArithmeticError> {
    if a.len() < n_terms {
        return Err(ArithmeticError::PrecisionExhausted { certified: a.len(), requested: n_terms });
    }
    if a.contains(&0) {
        return Err(ArithmeticError::InvalidInput("partial quotients must be >= 1".into()));
    }
    let quotients: Vec<u64> = a[..n_terms].to_vec();
    let convergents = convergents_from_quotients(&quotients);
    let last = convergents.last().unwrap();
    let fixed = fixed128_from_ratio(&last.p, &last.q);
    let rotation = Rotation::from_fixed128(fixed);
    let precision_bits = (2.0 * ln_big(&last.q) / std::f64::consts::LN_2).min(128.0) as u32;
    Ok(FrequencyData {
        omega: rotation.angle(),
        rotation,
        partial_quotients: quotients,
        convergents,
        precision_bits,
    })
}

// ---------------------------------------------------------------------------
// Diophantine classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiophantineVerdict {
    HoldsOnRange,
    Fails,
    Inconclusive,
}

/// Finite-range report on the condition q_{n+1} < q_n^{1+κ}.
///
/// The condition is asymptotic ("for all large n"), which finite data
/// cannot decide; the verdict only describes the checked range and the
/// violation list lets callers pick their own cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct DiophantineReport {
    pub kappa: f64,
    /// Inclusive interval of indices n at which q_{n+1} was tested.
    pub checked_range: (usize, usize),
    /// Indices n with q_{n+1} ≥ q_n^{1+κ}.
    pub violations: Vec<usize>,
    pub verdict: DiophantineVerdict,
}

/// Check q_{n+1} < q_n^{1+κ} over every stored index.
pub fn check_diophantine(freq: &FrequencyData, kappa: f64) -> DiophantineReport {
    let n_conv = freq.convergents().len();
    assert!(n_conv >= 3, "need at least 3 convergents");
    assert!(kappa > 0.0, "kappa must be positive");
    let lo = 1usize;
    let hi = n_conv - 1; // q_{n+1} must be stored
    let mut violations = Vec::new();
    for n in lo..=hi {
        let ln_q = ln_big(&freq.q(n));
        let ln_q_next = ln_big(&freq.q(n + 1));
        if ln_q_next >= (1.0 + kappa) * ln_q {
            violations.push(n);
        }
    }
    let span = hi - lo + 1;
    let verdict = if span < 4 {
        DiophantineVerdict::Inconclusive
    } else {
        let half_start = lo + span / 2;
        let tail_violations = violations.iter().filter(|&&n| n >= half_start).count();
        let tail_len = hi - half_start + 1;
        if tail_violations == 0 {
            DiophantineVerdict::HoldsOnRange
        } else if 2 * tail_violations > tail_len {
            DiophantineVerdict::Fails
        } else {
            DiophantineVerdict::Inconclusive
        }
    };
    DiophantineReport { kappa, checked_range: (lo, hi), violations, verdict }
}

// ---------------------------------------------------------------------------
// Orbit hit search
// ---------------------------------------------------------------------------

/// Smallest 0 ≤ j ≤ q_n + q_{n-1} − 1 with θ + jω ∈ I.
///
/// Existence is guaranteed whenever |I| > 1/q_n, so a miss is surfaced
/// as an error rather than retried.
pub fn orbit_hit_search(
    theta: f64,
    freq: &FrequencyData,
    interval: TorusArc,
    n: usize,
) -> Result<u64, ArithmeticError> {
    assert!(n >= 1 && n <= freq.convergents().len(), "index n out of stored range");
    let q_n = freq.q(n);
    let q_prev = freq.q(n - 1);
    let bound_big = &q_n + &q_prev - BigInt::one();
    let bound = bound_big.to_u64().unwrap_or(u64::MAX);
    for j in 0..=bound {
        if interval.contains(freq.rotate(theta, j as i64)) {
            return Ok(j);
        }
    }
    Err(ArithmeticError::HitNotFound { bound })
}
