//! Fast property suite: a handful of identities and scaling laws that
//! finish in seconds. The long spectral reproductions live in the
//! acceptance test target.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teig::cauchy_grid::adjoint_residual;
use teig::coeff::{CoefficientField, SpdMatrix};
use teig::disk_spectrum::{char_det, count_zeros, locate_zeros, DiskMedium};
use teig::trace_lab::{im_c_identity, product_factorization_check, scheme, trace_diag, trace_limit, FrozenPoint, DEFAULT_T_STAR};
use teig::weyl::weyl_constant;
use teig::Result;

use crate::error::CliError;

struct Check {
    name: &'static str,
    run: fn() -> Result<(bool, String)>,
}

fn unit_disk() -> CoefficientField {
    CoefficientField::constant(1.0, 1.0, 1.0, 4.0, 10.0)
}

fn weyl_five_quarters() -> Result<(bool, String)> {
    let c = weyl_constant(&unit_disk(), 16)?;
    Ok(((c - 1.25).abs() <= 1e-10, format!("c = {c}")))
}

fn count_matches_location() -> Result<(bool, String)> {
    let m = DiskMedium::new(1.0, 1.0, 4.0, 1.0)?;
    let counted = count_zeros(&m, 0, (1.0, 80.0))?;
    let located: u32 = locate_zeros(&m, 0, (1.0, 80.0))?.iter().map(|z| z.order).sum();
    Ok((counted == located as usize, format!("counted {counted}, located {located}")))
}

fn conjugate_symmetry() -> Result<(bool, String)> {
    let m = DiskMedium::new(1.0, 1.0, 4.0, 1.0)?;
    let mut worst = 0.0f64;
    for (mode, z) in [(0, Complex64::new(-30.0, 12.0)), (3, Complex64::new(5.0, 40.0)), (7, Complex64::new(-200.0, -90.0))] {
        let a = char_det(&m, mode, z)?;
        let b = char_det(&m, mode, z.conj())?.conj();
        worst = worst.max(a.rel_diff(&b));
    }
    Ok((worst <= 1e-12, format!("max relative gap {worst:.2e}")))
}

fn adjoint_converges() -> Result<(bool, String)> {
    let field = unit_disk();
    let lam = Complex64::new(0.0, 50.0);
    let coarse = adjoint_residual(&field, 0, lam, 64, 3)?;
    let fine = adjoint_residual(&field, 0, lam, 128, 3)?;
    Ok((coarse / fine >= 3.2, format!("residual {coarse:.3e} -> {fine:.3e}")))
}

fn factorization() -> Result<(bool, String)> {
    let sch = scheme(2, DEFAULT_T_STAR)?;
    let point = FrozenPoint::new(SpdMatrix::identity(2), 1.0, 4.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let xi = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let t = 10f64.powf(rng.gen_range(0.0..4.0));
        worst = worst.max(product_factorization_check(&sch, &point, 1, t, &xi)?);
    }
    Ok((worst <= 1e-12, format!("max gap {worst:.2e}")))
}

fn im_c() -> Result<(bool, String)> {
    let sch = scheme(2, DEFAULT_T_STAR)?;
    let point = FrozenPoint::new(SpdMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 0.7]])?, 1.5, 0.4)?;
    let id = im_c_identity(&point, &sch)?;
    Ok((id.relative_gap <= 1e-6, format!("gap {:.2e}", id.relative_gap)))
}

fn trace_asymptotics() -> Result<(bool, String)> {
    let sch = scheme(2, DEFAULT_T_STAR)?;
    let point = FrozenPoint::new(SpdMatrix::identity(2), 1.0, 4.0)?;
    let t = 1e3;
    let lhs = trace_diag(&point, t, &sch)? * t.powf(sch.trace_exponent());
    let rhs = trace_limit(&point, &sch)?;
    let err = (lhs / rhs - 1.0).norm();
    Ok((err <= 1e-2, format!("relative error {err:.2e} at t = 1e3")))
}

const CHECKS: &[Check] = &[
    Check { name: "weyl constant of the (1, 4) disk is 5/4", run: weyl_five_quarters },
    Check { name: "zero count equals located zeros, mode 0", run: count_matches_location },
    Check { name: "characteristic determinant is conjugate symmetric", run: conjugate_symmetry },
    Check { name: "adjoint residual converges under refinement", run: adjoint_converges },
    Check { name: "product factorization identity", run: factorization },
    Check { name: "Im c identity", run: im_c },
    Check { name: "diagonal trace approaches its limit", run: trace_asymptotics },
];

pub fn run() -> std::result::Result<(), CliError> {
    let mut failures = Vec::new();
    for check in CHECKS {
        let (ok, detail) = match (check.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {}: {detail}", if ok { "PASS" } else { "FAIL" }, check.name);
        if !ok {
            failures.push(check.name.to_string());
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::AcceptanceFailure(failures))
    }
}
