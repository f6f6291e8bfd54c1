use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{LN_2, PI};
use teig::coeff::{CoefficientField, SpdMatrix};
use teig::disk_spectrum::{DiskMedium, Spectrum, SpectrumEntry};
use teig::weyl::{
    counting_fit_with_constant, ellipsoid_volume, least_squares_slope, unit_ball_volume, weyl_constant,
    weyl_constant_terms,
};
use teig::TeigError;

fn profile(text: &str) -> CoefficientField {
    CoefficientField::from_json_str(text).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn unit_ball_volumes() {
    let known = [1.0, 2.0, PI, 4.0 * PI / 3.0, PI * PI / 2.0, 8.0 * PI * PI / 15.0];
    for (d, v) in known.iter().enumerate() {
        assert!(close(unit_ball_volume(d), *v, 1e-15), "d={d}");
    }
}

#[test]
fn ellipsoid_volume_matches_monte_carlo() {
    let a = SpdMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.2], vec![0.0, 0.2, 3.0]]).unwrap();
    let s = 1.7;
    // the ellipsoid ⟨Aξ,ξ⟩ < s fits in |ξ_i| < sqrt(s / λ_min)
    let half = (s / a.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 2_000_000;
    let hits = (0..trials)
        .filter(|_| {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-half..half)).collect();
            a.quad_form(&xi) < s
        })
        .count();
    let mc = hits as f64 / trials as f64 * (2.0 * half).powi(3);
    let v = ellipsoid_volume(&a, s).unwrap();
    // standard error of the estimate is about 0.2%
    assert!(close(v, mc, 6e-3), "{v} vs {mc}");
    assert!(ellipsoid_volume(&a, -1.0).is_err());
}

#[test]
fn constant_disk_constant_is_sum_of_sigmas_over_four() {
    // (4π)^{-1} |Ω| (σ₁ + σ₂) / a with |Ω| = π
    let f = CoefficientField::constant(1.0, 1.0, 1.0, 4.0, 10.0);
    assert!(close(weyl_constant(&f, 8).unwrap(), 1.25, 1e-12));
    let (t1, t2) = weyl_constant_terms(&f, 8).unwrap();
    assert!(close(t1, 0.25, 1e-12) && close(t2, 1.0, 1e-12));
}

#[test]
fn radial_profiles_integrate_in_closed_form() {
    // σ₂ = 2 + r²: (1/4π) ∫ (3 + r²) 2πr dr = 7/8
    let poly = profile(r#"{"R": 1, "sigma1": 1, "sigma2": [2, 0, 1], "Lambda": 10}"#);
    assert!(close(weyl_constant(&poly, 8).unwrap(), 0.875, 1e-9));
    // piecewise 1 on [0, 1/2), 3 on [1/2, 1]: same integral
    let pw = profile(r#"{"R": 1, "sigma1": 1, "sigma2": {"breaks": [0, 0.5], "pieces": [[1], [3]]}, "Lambda": 10}"#);
    assert!(close(weyl_constant(&pw, 8).unwrap(), 0.875, 1e-9));
    // a = 1 + r²: (5/2) ∫ r / (1 + r²) dr = 5 ln 2 / 4
    let var_a = profile(r#"{"R": 1, "a": [1, 0, 1], "sigma1": 1, "sigma2": 4, "Lambda": 10}"#);
    assert!(close(weyl_constant(&var_a, 8).unwrap(), 1.25 * LN_2, 1e-9));
    // d = 3: (2π)^{-3} ω₃² (1 + 8) = 2/π
    let ball = profile(r#"{"R": 1, "dim": 3, "sigma1": 1, "sigma2": 4, "Lambda": 10}"#);
    assert!(close(weyl_constant(&ball, 8).unwrap(), 2.0 / PI, 1e-12));
}

#[test]
fn phase_space_volume_by_monte_carlo() {
    // (2π)^{-2} |{(x, ξ) : |x| < 1, |ξ|² < σ_ℓ(x)}| summed over ℓ, σ₂ = 2 + |x|²
    let f = profile(r#"{"R": 1, "sigma1": 1, "sigma2": [2, 0, 1], "Lambda": 10}"#);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let trials = 1_000_000;
    let k = 3f64.sqrt();
    let mut hits = 0usize;
    for _ in 0..trials {
        let (x, y) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (p, q) = (rng.gen_range(-k..k), rng.gen_range(-k..k));
        let r2: f64 = x * x + y * y;
        if r2 >= 1.0 {
            continue;
        }
        let xi2 = p * p + q * q;
        hits += (xi2 < 1.0) as usize + (xi2 < 2.0 + r2) as usize;
    }
    let box_volume = 4.0 * (2.0 * k).powi(2);
    let mc = hits as f64 / trials as f64 * box_volume / (4.0 * PI * PI);
    let c = weyl_constant(&f, 8).unwrap();
    assert!(close(c, mc, 5e-3), "{c} vs {mc}");
}

#[test]
fn scaling_laws() {
    let base = |r: f64, a: f64, s: f64| CoefficientField::constant(r, a, s * 1.5, s * 2.5, 100.0);
    let c0 = weyl_constant(&base(1.0, 1.0, 1.0), 8).unwrap();
    assert!(close(weyl_constant(&base(1.0, 1.0, 3.0), 8).unwrap(), 3.0 * c0, 1e-12));
    assert!(close(weyl_constant(&base(2.0, 1.0, 1.0), 8).unwrap(), 4.0 * c0, 1e-12));
    assert!(close(weyl_constant(&base(1.0, 5.0, 1.0), 8).unwrap(), c0 / 5.0, 1e-12));
    // anisotropic A enters through det A^{-1/2}
    let aniso = profile(r#"{"R": 1, "a": {"matrix": [[4, 0], [0, 1]]}, "sigma1": 1.5, "sigma2": 2.5, "Lambda": 100}"#);
    assert!(close(weyl_constant(&aniso, 8).unwrap(), c0 / 2.0, 1e-12));
}

fn synthetic(c: f64, count: usize) -> Spectrum {
    // N(t) = floor(c t) exactly
    Spectrum {
        medium: DiskMedium::new(1.0, 1.0, 4.0, 1.0).unwrap(),
        entries: (1..=count)
            .map(|k| SpectrumEntry {
                lambda: Complex64::new(-(k as f64) / c, 0.0),
                multiplicity: 1,
                mode: 0,
            })
            .collect(),
        lambda_floor: 0.5,
        t_max: count as f64 / c,
    }
}

#[test]
fn counting_fit_on_an_exact_linear_law() {
    let c = 1.25;
    let spec = synthetic(c, 5000);
    let grid: Vec<f64> = (0..=20).map(|k| 4000.0 * 10f64.powf(-2.0 + 0.1 * k as f64)).collect();
    let fit = counting_fit_with_constant(&spec, c, 2, &grid).unwrap();
    assert!((fit.slope - 1.0).abs() < 1e-3, "{}", fit.slope);
    assert!(fit.ratios.iter().all(|r| (r - 1.0).abs() < 0.03));
    assert_eq!(*fit.curve.count.last().unwrap(), 5000);
}

#[test]
fn counting_fit_rejects_bad_input() {
    let spec = synthetic(1.0, 100);
    assert!(counting_fit_with_constant(&spec, 1.0, 2, &[10.0, 200.0]).is_err());
    assert!(counting_fit_with_constant(&spec, 1.0, 2, &[]).is_err());
    assert!(counting_fit_with_constant(&spec, 1.0, 2, &[-1.0, 10.0]).is_err());
    let mut empty = spec.clone();
    empty.entries.clear();
    assert!(matches!(counting_fit_with_constant(&empty, 1.0, 2, &[10.0]), Err(TeigError::EmptySpectrum)));
}

#[test]
fn slope_of_exact_power_law() {
    let x: Vec<f64> = (1..10).map(|k| k as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.5 * v).collect();
    assert!((least_squares_slope(&x, &y) + 2.5).abs() < 1e-12);
}
