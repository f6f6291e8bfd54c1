use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use teig::specfun::{bessel_j, entire_j, ScaledComplex};

fn polar(r: f64, th: f64) -> Complex64 {
    Complex64::from_polar(r, th)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn three_term_recurrence(m in 1u32..=200, r in 0.1f64..300.0, th in -FRAC_PI_2..FRAC_PI_2) {
        let z = polar(r, th);
        let lo = bessel_j(m - 1, z).unwrap();
        let mid = bessel_j(m, z).unwrap();
        let hi = bessel_j(m + 1, z).unwrap();
        let lhs = lo + hi;
        let rhs = mid.scale(Complex64::new(2.0 * m as f64, 0.0) / z);
        let scale = if lo.log2_abs() > hi.log2_abs() { lo } else { hi };
        let err = ((lhs - rhs) / scale).to_complex().norm();
        prop_assert!(err <= 1e-9, "m={} z={} err={:e}", m, z, err);
    }

    #[test]
    fn derivative_link(m in 0u32..60, r in 0.01f64..4e4, th in -PI..PI) {
        let w = polar(r, th);
        let h = 1e-6 * r.max(1.0);
        let plus = entire_j(m, w + h).unwrap().value;
        let minus = entire_j(m, w - h).unwrap().value;
        let fd = (plus - minus).scale(Complex64::new(0.5 / h, 0.0));
        let exact = entire_j(m, w).unwrap().next.scale(Complex64::new(-0.5, 0.0));
        // finite differences lose accuracy where j_{m+1} is small relative to j_m
        let denom = if exact.log2_abs() > plus.log2_abs() - 10.0 { exact } else { plus };
        let err = ((fd - exact) / denom).to_complex().norm();
        prop_assert!(err <= 1e-6, "m={} w={} err={:e}", m, w, err);
    }

    #[test]
    fn entire_and_classical_forms_agree(m in 0u32..150, r in 0.5f64..450.0, th in -FRAC_PI_2..FRAC_PI_2) {
        let z = polar(r, th);
        let j = bessel_j(m, z).unwrap();
        let e = entire_j(m, z * z).unwrap().value * ScaledComplex::from_complex(z).powi(m);
        prop_assert!(j.rel_diff(&e) <= 1e-9, "m={} z={} {} vs {}", m, z, j, e);
    }
}

#[test]
fn zeroth_order_value_at_origin_of_every_order() {
    // j_m(0) = 1 / (2^m m!)
    let mut expect = 1.0f64;
    for m in 0..40u32 {
        if m > 0 {
            expect /= 2.0 * m as f64;
        }
        let v = entire_j(m, Complex64::new(0.0, 0.0)).unwrap().value.to_complex();
        assert!((v.re - expect).abs() <= 1e-15 * expect, "m={m}");
    }
}

#[test]
fn scaled_products_round_trip_against_exact_rationals() {
    // (7/8) 2^1200 * (3/4) 2^-1200 = 21/32, and the quotient recovers 7/8 * 2^1200 exactly
    let a = ScaledComplex::new(Complex64::new(0.875, 0.0), 1200);
    let b = ScaledComplex::new(Complex64::new(0.75, 0.0), -1200);
    assert_eq!((a * b).to_complex(), Complex64::new(21.0 / 32.0, 0.0));
    assert_eq!((a * b) / b, a);
    let c = ScaledComplex::new(Complex64::new(0.5, -1.5), -1199);
    let d = ScaledComplex::new(Complex64::new(2.0, 1.0), 1199);
    // (0.5 - 1.5i)(2 + i) = 2.5 - 2.5i
    assert_eq!((c * d).to_complex(), Complex64::new(2.5, -2.5));
}
