//! Browser bindings: three interactive views into the laboratory —
//! Lyapunov-exponent curves over energy, wavepacket profiles under the
//! quasiperiodic evolution, and Fejér smoothing of rough sampling
//! functions. The page in `www/` drives these with plain canvas plots.

use qptl_core::cocycle::{lyapunov_estimate, Cocycle, ThetaScheme};
use qptl_core::dynamics::{build_hamiltonian, propagate, PropagateOptions};
use qptl_core::sampling::{cesaro_approximant, PiecewiseHolderFunction};
use qptl_core::Complex64;
use wasm_bindgen::prelude::*;

fn frequency(kind: &str) -> Result<qptl_core::arithmetic::FrequencyData, String> {
    let spec = match kind {
        "golden" => qptl_core::arithmetic::FrequencySpec::golden(),
        "silver" => qptl_core::arithmetic::FrequencySpec::sqrt2_minus_1(),
        other => return Err(format!("unknown frequency {other:?}")),
    };
    spec.expand(40).map_err(|e| e.to_string())
}

fn sampling(builtin: &str, lambda: f64, omega: f64) -> Result<PiecewiseHolderFunction, String> {
    Ok(match builtin {
        "cosine" => PiecewiseHolderFunction::cosine(lambda),
        "sawtooth" => PiecewiseHolderFunction::sawtooth(lambda),
        "sturmian" => PiecewiseHolderFunction::sturmian_indicator(lambda, omega),
        "holder" => PiecewiseHolderFunction::holder_sine(lambda, 0.5),
        other => return Err(format!("unknown sampling function {other:?}")),
    })
}

/// L̂(E) on a uniform energy grid: returns `count` values.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_curve(
    builtin: &str,
    lambda: f64,
    freq_kind: &str,
    e_min: f64,
    e_max: f64,
    count: usize,
    k_max: i64,
    theta_grid: usize,
) -> Result<Vec<f64>, String> {
    if count < 2 || e_max <= e_min || k_max < 8 {
        return Err("bad grid".into());
    }
    let freq = frequency(freq_kind)?;
    let f = sampling(builtin, lambda, freq.omega())?;
    let k_list = [k_max / 4, k_max / 2, k_max];
    let out = (0..count)
        .map(|i| {
            let e = e_min + (e_max - e_min) * i as f64 / (count - 1) as f64;
            let coc = Cocycle::real(&f, freq.rotation(), e);
            lyapunov_estimate(&coc, &k_list, ThetaScheme::Grid(theta_grid)).l_hat
        })
        .collect();
    Ok(out)
}

/// a(n,t) for sites −half_width..half_width at one time.
#[wasm_bindgen]
pub fn wavepacket_profile(
    builtin: &str,
    lambda: f64,
    freq_kind: &str,
    theta: f64,
    t: f64,
    half_width: usize,
) -> Result<Vec<f64>, String> {
    if half_width < 8 || t < 0.0 {
        return Err("bad box or time".into());
    }
    let freq = frequency(freq_kind)?;
    let f = sampling(builtin, lambda, freq.omega())?;
    let lattice = build_hamiltonian(&f, freq.rotation(), theta, half_width);
    // demo view: report the profile even when the tail gate would trip
    let opts = PropagateOptions { tail_threshold: 1.0, ..Default::default() };
    let trace = propagate(&lattice, &[t], &opts).map_err(|e| e.to_string())?;
    Ok(trace.profiles[0].clone())
}

/// Interleaved samples [f(θ_0), f_N(θ_0), f(θ_1), f_N(θ_1), …].
#[wasm_bindgen]
pub fn fejer_overlay(
    builtin: &str,
    lambda: f64,
    degree: usize,
    samples: usize,
) -> Result<Vec<f64>, String> {
    if samples < 16 || degree < 1 {
        return Err("bad sampling".into());
    }
    // ω only matters for the sturmian cut
    let omega = 0.618_033_988_749_894_9;
    let f = sampling(builtin, lambda, omega)?;
    let approx = cesaro_approximant(&f, degree).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let th = i as f64 / samples as f64;
        out.push(f.eval(th));
        out.push(approx.eval(th));
    }
    Ok(out)
}

/// Spectrum marker for the demo plots: the box eigenvalues of a small
/// truncation, handy as an overlay under the Lyapunov curve.
#[wasm_bindgen]
pub fn box_spectrum(
    builtin: &str,
    lambda: f64,
    freq_kind: &str,
    half_width: usize,
) -> Result<Vec<f64>, String> {
    let freq = frequency(freq_kind)?;
    let f = sampling(builtin, lambda, freq.omega())?;
    let lattice = build_hamiltonian(&f, freq.rotation(), 0.0, half_width.clamp(8, 400));
    let off = vec![1.0; lattice.size() - 1];
    Ok(qptl_core::dynamics::eigenvalues_tridiag(&lattice.diagonal, &off))
}

// keep the complex re-export referenced so the demo crate and core agree
#[allow(dead_code)]
fn _z(z: Complex64) -> f64 {
    z.re
}
