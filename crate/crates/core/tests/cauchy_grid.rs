use num_complex::Complex64;
use teig::cauchy_grid::{
    adjoint_residual, adjoint_residual_with, apply_t, build_mode_system, lambda_norm, nonlinear_eig, AdjointPartner,
    BeynOptions, Circle, GridOptions, RadialGrid,
};
use teig::coeff::CoefficientField;
use teig::TeigError;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn field() -> CoefficientField {
    CoefficientField::constant(1.0, 1.0, 1.0, 4.0, 10.0)
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

type Radial = fn(f64) -> f64;

/// Largest row error of the operator against manufactured solutions
/// `u = r^m (1 − r²)²`, `v = cos(πr/2)` on the unit disk with `a = 1`.
fn manufactured_error(mode: u32, n: usize) -> f64 {
    let lambda = 10.0 * I;
    let (s1, s2) = (1.0, 4.0);
    let k = std::f64::consts::FRAC_PI_2;
    let sys = build_mode_system(&field(), mode, lambda, n).unwrap();
    let grid = &sys.pencil.grid;
    let (u_exact, lu): (Radial, Radial) = match mode {
        0 => (|r| (1.0 - r * r).powi(2), |r| -8.0 + 16.0 * r * r),
        // u'' + u'/r − 4u/r² for r²(1 − r²)²
        2 => (|r| r * r * (1.0 - r * r).powi(2), |r| -24.0 * r * r + 32.0 * r.powi(4)),
        _ => unreachable!(),
    };
    let v_exact = |r: f64| (k * r).cos();
    let m2 = (mode * mode) as f64;
    let lv = |r: f64| -k * k * (k * r).cos() - k * (k * r).sin() / r - m2 * v_exact(r) / (r * r);
    let u = grid.sample(|r| c(u_exact(r)));
    let v = grid.sample(|r| c(v_exact(r)));
    let rows = sys.apply(&u, &v);
    let mut worst = 0.0f64;
    for (j, &r) in grid.nodes[..n - 1].iter().enumerate() {
        let want_u = c(lu(r)) - lambda * s1 * u_exact(r) - (s1 - s2) * v_exact(r);
        let want_v = c(lv(r)) - lambda * s2 * v_exact(r);
        worst = worst.max((rows.u_rows[j] - want_u).norm()).max((rows.v_rows[j] - want_v).norm());
    }
    worst.max(rows.boundary[0].norm()).max(rows.boundary[1].norm())
}

#[test]
fn manufactured_solutions_converge_at_second_order() {
    for mode in [0u32, 2] {
        let coarse = manufactured_error(mode, 64);
        let fine = manufactured_error(mode, 128);
        assert!(coarse < 0.05, "mode {mode}: {coarse:e}");
        assert!(coarse / fine >= 3.0, "mode {mode}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn lambda_norm_matches_quadrature() {
    // ∫ cos²(πr/2) r dr etc. on [0, 1], evaluated with 25-digit quadrature
    let want = [0.3855889214664527, 1.208952249056485, 2.963934878498520];
    let lambda = c(4.0);
    let mut prev = [f64::INFINITY; 3];
    for n in [128usize, 256, 512] {
        let grid = RadialGrid::new(1.0, n).unwrap();
        let u = grid.sample(|r| c((std::f64::consts::FRAC_PI_2 * r).cos()));
        for order in 0..3u32 {
            let got = lambda_norm(&u, lambda, order, 0, &grid).unwrap();
            let err = (got - want[order as usize]).abs() / want[order as usize];
            assert!(err <= 1e-2, "N={n} order {order}: {got} vs {}", want[order as usize]);
            assert!(err <= prev[order as usize], "N={n} order {order} did not improve");
            prev[order as usize] = err;
        }
    }
    assert!(prev.iter().all(|&e| e < 1e-3), "{prev:?}");
    let grid = RadialGrid::new(1.0, 16).unwrap();
    assert!(lambda_norm(&[c(1.0); 3], lambda, 1, 0, &grid).is_err());
    assert!(lambda_norm(&vec![c(1.0); 16], lambda, 3, 0, &grid).is_err());
}

#[test]
fn lambda_norm_weights_follow_the_order() {
    // a constant function has no gradient for mode 0
    let grid = RadialGrid::new(1.0, 64).unwrap();
    let u = vec![c(1.0); 64];
    let l0 = lambda_norm(&u, c(9.0), 0, 0, &grid).unwrap();
    let l1 = lambda_norm(&u, c(9.0), 1, 0, &grid).unwrap();
    assert!((l0 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((l1 - 3.0 * l0).abs() < 1e-9);
}

#[test]
fn beyn_recovers_the_first_real_eigenvalue() {
    // high-precision zero of the exact determinant for this medium
    let exact = -11.452774711970341628;
    let contour = Circle {
        center: c(exact),
        radius: 1.0,
    };
    let mut errs = Vec::new();
    for n in [128usize, 256] {
        let eig = nonlinear_eig(&field(), 0, contour, n, &BeynOptions::default()).unwrap();
        assert_eq!(eig.len(), 1, "N={n}: {eig:?}");
        assert_eq!(eig[0].order, 1);
        assert!(eig[0].lambda.im.abs() < 1e-8);
        errs.push((eig[0].lambda.re - exact).abs());
    }
    assert!(errs[1] <= 1e-3 * exact.abs(), "{errs:?}");
    assert!(errs[0] / errs[1] >= 3.0, "{errs:?}");
}

#[test]
fn contours_without_eigenvalues_return_nothing() {
    let opts = BeynOptions::default();
    let wedge = Circle {
        center: 1000.0 * I,
        radius: 200.0,
    };
    assert!(nonlinear_eig(&field(), 0, wedge, 128, &opts).unwrap().is_empty());
    let empty = Circle {
        center: c(-11.0),
        radius: 0.0,
    };
    assert!(nonlinear_eig(&field(), 0, empty, 128, &opts).unwrap().is_empty());
}

#[test]
fn adjoint_identity_converges_and_the_wrong_partner_does_not() {
    let lambda = 50.0 * I;
    let r: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| adjoint_residual(&field(), 0, lambda, n, 4).unwrap())
        .collect();
    assert!(r[0] / r[1] >= 3.2 && r[1] / r[2] >= 3.2, "{r:?}");
    let wrong: Vec<f64> = [64usize, 256]
        .iter()
        .map(|&n| adjoint_residual_with(&field(), 0, lambda, n, 4, AdjointPartner::SameSystem, 3).unwrap())
        .collect();
    assert!(wrong[1] > 0.1 && wrong[1] > 0.5 * wrong[0], "{wrong:?}");
}

#[test]
fn zero_data_gives_zero_solution() {
    let n = 64;
    let zero = vec![c(0.0); n];
    let (u, v) = apply_t(&field(), 3, 100.0 * I, n, &zero, &zero, &GridOptions::default()).unwrap();
    assert!(u.iter().chain(&v).all(|x| *x == c(0.0)));
}

#[test]
fn apply_t_enforces_wedge_and_floor() {
    let n = 64;
    let one = vec![c(1.0); n];
    let opts = GridOptions::default();
    assert!(matches!(
        apply_t(&field(), 0, c(-100.0), n, &one, &one, &opts),
        Err(TeigError::WedgeViolation { .. })
    ));
    assert!(matches!(
        apply_t(&field(), 0, 2.0 * I, n, &one, &one, &opts),
        Err(TeigError::InvalidArgument(_))
    ));
    assert!(build_mode_system(&field(), 0, I, 16).is_err());
}

#[test]
fn solution_decays_like_inverse_lambda() {
    // ‖u‖ ~ C/|λ| for smooth data vanishing at the boundary to all orders
    let n = 256;
    let grid = RadialGrid::new(1.0, n).unwrap();
    let f = grid.sample(|r| c((std::f64::consts::FRAC_PI_2 * r).cos()));
    let zero = vec![c(0.0); n];
    let norms: Vec<f64> = [1e2, 1e3]
        .iter()
        .map(|&t| {
            let (u, _) = apply_t(&field(), 0, t * I, n, &f, &zero, &GridOptions::default()).unwrap();
            grid.l2_norm(&u)
        })
        .collect();
    let slope = (norms[1] / norms[0]).log10();
    assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
}
