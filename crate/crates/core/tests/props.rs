//! Property tests for the structural invariants.

use proptest::prelude::*;
use qptl_core::arithmetic::{rotate_orbit, FrequencySpec, TorusArc};
use qptl_core::dynamics::truncated_norm_sq;
use qptl_core::sampling::{fejer_kernel_eval, PiecewiseHolderFunction};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_expansions_satisfy_convergent_invariants(
        a in -6i64..6,
        b in 1i64..4,
        d in 2u64..40,
        c in 1i64..8,
    ) {
        let spec = FrequencySpec::Quadratic { a, b, d, c };
        let Ok(freq) = spec.expand(16) else { return Ok(()); };
        let omega = freq.omega();
        prop_assert!(omega > 0.0 && omega < 1.0);
        let conv = freq.convergents();
        // q strictly increasing, recurrence and determinant identity exact
        for k in 1..conv.len() {
            prop_assert!(conv[k].q > conv[k - 1].q || (k == 1 && conv[k].q >= conv[k - 1].q));
            let det = &conv[k].p * &conv[k - 1].q - &conv[k - 1].p * &conv[k].q;
            prop_assert!(det.magnitude().to_string() == "1");
        }
        for k in 2..conv.len() {
            let a_k = num_bigint::BigInt::from(freq.partial_quotients()[k]);
            let q_expected = &a_k * &conv[k - 1].q + &conv[k - 2].q;
            prop_assert_eq!(&conv[k].q, &q_expected);
            let p_expected = &a_k * &conv[k - 1].p + &conv[k - 2].p;
            prop_assert_eq!(&conv[k].p, &p_expected);
        }
        // best-approximation property |q_k ω − p_k| < 1/q_{k+1}; the f64
        // evaluation of qω adds ~q·2^-53 of noise, so allow that slack
        // (the margin is genuinely thin when the next quotient is large)
        for k in 0..conv.len().saturating_sub(1) {
            let (p, q): (f64, f64) = (
                conv[k].p.to_string().parse().unwrap(),
                conv[k].q.to_string().parse().unwrap(),
            );
            let q_next: f64 = conv[k + 1].q.to_string().parse().unwrap();
            if q_next.is_finite() {
                let slack = q * f64::EPSILON;
                prop_assert!((q * omega - p).abs() < 1.0 / q_next + slack);
            }
        }
    }

    #[test]
    fn rotation_steps_compose(theta in 0.0..1.0f64, omega in 0.0..1.0f64, j in -2000i64..2000) {
        let direct = rotate_orbit(theta, omega, j);
        let stepped = rotate_orbit(rotate_orbit(theta, omega, j - 1), omega, 1);
        let d = (direct - stepped).abs();
        prop_assert!(d.min(1.0 - d) < 1e-12, "{direct} vs {stepped}");
    }

    #[test]
    fn arcs_partition_membership(start in 0.0..1.0f64, len in 0.001..0.999f64, x in 0.0..1.0f64) {
        let arc = TorusArc::new(start, len);
        let complement = TorusArc::new(start + len, 1.0 - len);
        prop_assert!(arc.contains(x) ^ complement.contains(x));
        prop_assert!(arc.contains(x) == arc.contains(x + 1.0));
        prop_assert!(arc.contains(start));
    }

    #[test]
    fn fejer_kernel_positive_and_bounded(n in 0usize..200, theta in 0.0..1.0f64) {
        let v = fejer_kernel_eval(n, theta);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= n as f64 + 1.0 + 1e-12);
        let x = std::f64::consts::TAU * (theta - theta.round());
        if x != 0.0 {
            let bound = (n as f64 + 1.0).min(
                std::f64::consts::PI * std::f64::consts::PI / ((n as f64 + 1.0) * x * x),
            );
            prop_assert!(v <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sampling_respects_sup_bound(lambda in -4.0..4.0f64, theta in 0.0..1.0f64, pick in 0usize..4) {
        let f = match pick {
            0 => PiecewiseHolderFunction::cosine(lambda),
            1 => PiecewiseHolderFunction::sawtooth(lambda),
            2 => PiecewiseHolderFunction::sturmian_indicator(lambda, 0.618_033_988_749_894_9),
            _ => PiecewiseHolderFunction::constant(lambda),
        };
        prop_assert!(f.eval(theta).abs() <= f.sup_bound() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn decomposition_reconstructs_pointwise(lambda in 0.5..3.0f64, theta in 0.0..1.0f64) {
        let f = PiecewiseHolderFunction::sawtooth(lambda);
        let d = qptl_core::sampling::decompose_pl(&f);
        if f.jump_set().iter().any(|&j| {
            let dd = (theta - j).rem_euclid(1.0);
            dd.min(1.0 - dd) < 1e-9
        }) {
            return Ok(());
        }
        let mut total = 0.0;
        for (i, p) in d.pieces().iter().enumerate() {
            if p.arc.contains(theta) {
                total += d.piece_global_eval(i, theta);
            }
        }
        prop_assert!((total - f.eval(theta)).abs() < 1e-12);
    }

    #[test]
    fn truncated_norm_monotone_in_l(l1 in 1.0..40.0f64, dl in 0.0..10.0f64, seed in 0u64..1000) {
        // a fixed pseudo-random nonnegative series
        let sq = |n: i64| ((n as u64).wrapping_mul(seed + 7) % 17) as f64 / 17.0 + 0.01;
        let a = truncated_norm_sq(sq, l1);
        let b = truncated_norm_sq(sq, l1 + dl);
        prop_assert!(b >= a - 1e-12);
    }
}
