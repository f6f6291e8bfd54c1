use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use teig::coeff::SpdMatrix;
use teig::halfspace::{build_symbol, flux_residual, mode_solution, multiplier, FrozenData};

fn spd2() -> impl Strategy<Value = SpdMatrix> {
    (0.2f64..3.0, -2.0f64..2.0, 0.2f64..3.0).prop_map(|(l11, l21, l22)| {
        let l = DMatrix::from_row_slice(2, 2, &[l11, 0.0, l21, l22]);
        let m = &l * l.transpose();
        let m = (&m + m.transpose()) * 0.5;
        SpdMatrix::new(m).unwrap()
    })
}

fn wedge_lambda() -> impl Strategy<Value = Complex64> {
    // |Im λ| >= 0.1 |λ|
    (0.0f64..4.0, 0.101f64..1.0, any::<bool>(), any::<bool>()).prop_map(|(p, s, up, right)| {
        let theta = s.asin();
        let r = 10f64.powf(p);
        let l = Complex64::from_polar(r, theta);
        let l = if right { l } else { Complex64::new(-l.re, l.im) };
        if up {
            l
        } else {
            l.conj()
        }
    })
}

fn frozen() -> impl Strategy<Value = FrozenData> {
    (spd2(), 0.2f64..5.0, 0.2f64..5.0, wedge_lambda(), -10.0f64..10.0)
        .prop_filter("contrast", |(_, s1, s2, _, _)| (s1 - s2).abs() > 0.05)
        .prop_map(|(a, s1, s2, l, xi)| FrozenData::new(a, (s1, s2), l, vec![xi]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn jump_and_flux_identities(data in frozen(), pr in -3.0f64..3.0, pi in -3.0f64..3.0) {
        let s = build_symbol(&data).unwrap();
        let phi = Complex64::new(pr, pi);
        let (a1, a2) = s.amplitudes(phi);
        prop_assert!((a1 - a2 - phi).norm() <= 1e-12 * (a1.norm() + a2.norm()).max(phi.norm()));
        let flux = flux_residual(&s, phi);
        prop_assert!(flux.norm() <= 1e-12 * ((a1 * s.eta1).norm() + (a2 * s.eta2).norm()));
    }

    #[test]
    fn symbol_invariants(data in frozen()) {
        let s = build_symbol(&data).unwrap();
        prop_assert!(s.sqrt_delta1.re > 0.0 && s.sqrt_delta2.re > 0.0);
        prop_assert!(s.eta1.re < 0.0 && s.eta2.re < 0.0);
        prop_assert!(s.a * s.c - s.b * s.b >= -1e-12 * s.a * s.c.abs().max(1.0));
        for ell in 1..=2 {
            prop_assert!(s.characteristic_residual(ell) <= 1e-12);
        }
    }

    #[test]
    fn modes_decay(data in frozen()) {
        let s = build_symbol(&data).unwrap();
        let phi = Complex64::new(1.0, 0.5);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for t in [0.0, 1.0, 2.0, 4.0] {
            let (u1, u2) = mode_solution(&s, phi, t).unwrap();
            prop_assert!(u1.norm() <= prev.0 && u2.norm() <= prev.1);
            prev = (u1.norm(), u2.norm());
        }
    }

    #[test]
    fn both_multiplier_forms_agree(data in frozen(), xi_d in -10.0f64..10.0) {
        for ell in 1..=2 {
            prop_assert!(multiplier(&data, xi_d, ell).is_ok());
        }
    }
}

#[test]
fn zero_frequency_normal_multiplier_ignores_xi_d() {
    let data = FrozenData::new(SpdMatrix::identity(2), (1.0, 2.0), Complex64::new(0.0, 5.0), vec![0.3]);
    assert_eq!(
        multiplier(&data, 0.0, 1).unwrap(),
        multiplier(&data, 7.0, 1).unwrap()
    );
}
