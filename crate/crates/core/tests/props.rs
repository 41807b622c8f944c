//! Property-based invariants across the numeric kernels.

use effuniv::equidist::{koksma_deviation_bound, tau_scan, KoksmaBox};
use effuniv::meanvalue::dirichlet_meansquare;
use effuniv::Magnitude;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn magnitude_order_matches_f64(a in 1e-6f64..1e30, b in 1e-6f64..1e30) {
        let (ma, mb) = (Magnitude::from_value(a), Magnitude::from_value(b));
        prop_assert_eq!(ma > mb, a > b);
        prop_assert_eq!(ma == mb, a == b);
    }

    #[test]
    fn magnitude_mul_div_roundtrip(a in 1.0f64..1e20, b in 1.0f64..1e20) {
        let (ma, mb) = (Magnitude::from_value(a), Magnitude::from_value(b));
        let back = ma.mul(&mb).div(&mb).ln_f64().unwrap();
        prop_assert!((back - a.ln()).abs() <= 1e-9 * a.ln().abs().max(1.0));
    }

    #[test]
    fn magnitude_log_ln_consistent(l in -1e8f64..1e8) {
        let m = Magnitude::from_ln(l);
        prop_assert!((m.ln_f64().unwrap() - l).abs() <= 1e-9 * l.abs().max(1.0));
    }

    #[test]
    fn meansquare_bound_always_holds(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
        t in 10.0f64..1e4,
    ) {
        let cs: Vec<Complex64> = coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let ms = dirichlet_meansquare(&cs, t);
        prop_assert!(ms.passed);
    }

    #[test]
    fn tau_scan_intervals_well_formed(
        center in 0.0f64..1.0,
        width in 0.01f64..0.49,
        t1 in 100.0f64..5e4,
    ) {
        let alpha = 2f64.ln() / TAU;
        let scan = tau_scan(&[alpha], &[center], &[width], (0.0, t1), 1e-4).unwrap();
        prop_assert!(scan.density >= 0.0 && scan.density <= 1.0 + 1e-12);
        let mut prev_end = 0.0f64;
        for &(a, b) in &scan.intervals {
            prop_assert!(a >= prev_end - 1e-9 && b > a && b <= t1 + 1e-9);
            prev_end = b;
        }
        let total: f64 = scan.intervals.iter().map(|(a, b)| b - a).sum();
        prop_assert!((total - scan.total_measure).abs() <= 1e-9);
    }

    #[test]
    fn koksma_bound_covers_orbit(
        center in 0.0f64..1.0,
        width in 0.05f64..0.45,
        h in 10.0f64..200.0,
        t1 in 500.0f64..5e3,
    ) {
        let alpha = 3f64.ln() / TAU;
        let bx = KoksmaBox::new(
            vec![center - width],
            vec![center + width],
            vec![alpha],
            vec![h],
        ).unwrap();
        let dev = koksma_deviation_bound(&bx, t1);
        prop_assert!(dev.smoothing_term > 0.0 && dev.bound >= dev.smoothing_term);
        let scan = tau_scan(&[alpha], &[center], &[width], (0.0, t1), 1e-4).unwrap();
        prop_assert!((scan.density - bx.volume()).abs() <= dev.bound);
    }
}
