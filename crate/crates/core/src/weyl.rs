//! The leading Weyl coefficient `c` in `N(t) ≈ c t^{d/2}` and its comparison
//! with counted spectra.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coeff::{CoefficientField, Conductivity, SpdMatrix};
use crate::disk_spectrum::Spectrum;
use crate::error::{Result, TeigError};
use crate::quadrature::gauss_legendre;

/// Volume of the unit ball in `R^d`, `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_d = 2π/d · ω_{d-2}
    let mut w = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// Surface measure of the unit sphere in `R^d`.
fn sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// `|{ξ : ⟨Aξ, ξ⟩ < s}| = ω_d s^{d/2} / sqrt(det A)`.
pub fn ellipsoid_volume(a: &SpdMatrix, s: f64) -> Result<f64> {
    let det = a.det();
    if !(det > 0.0) || a.eigenvalues().first().is_none_or(|&e| e <= 0.0) {
        return Err(TeigError::NotPositiveDefinite);
    }
    if !(s >= 0.0) {
        return Err(TeigError::InvalidArgument(format!("level must be nonnegative, got {s}")));
    }
    let d = a.dim();
    Ok(unit_ball_volume(d) * s.powf(0.5 * d as f64) / det.sqrt())
}

fn det_a(field: &CoefficientField, r: f64) -> f64 {
    match &field.a {
        Conductivity::Isotropic(p) => p.eval(r).powi(field.dim as i32),
        Conductivity::Matrix(m) => m.det(),
    }
}

/// `(2π)^{-d} ∫_Ω ω_d Σ_ℓ^{d/2} / sqrt(det A) dx` for one `ℓ`, by composite
/// Gauss–Legendre quadrature on `panels` radial panels.
fn weyl_term(field: &CoefficientField, ell: usize, panels: usize, order: usize) -> f64 {
    let d = field.dim;
    let (x, w) = gauss_legendre(order);
    let mut cuts: Vec<f64> = (0..=panels).map(|k| field.radius * k as f64 / panels as f64).collect();
    let profile = if ell == 1 { &field.sigma1 } else { &field.sigma2 };
    let mut extra: Vec<f64> = profile.breaks().to_vec();
    if let Conductivity::Isotropic(p) = &field.a {
        extra.extend_from_slice(p.breaks());
    }
    cuts.extend(extra.into_iter().filter(|&b| b > 0.0 && b < field.radius));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let wd = unit_ball_volume(d);
    let mut sum = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&w) {
            let r = c + h * xi;
            let s = field.sigma(ell, r).max(0.0);
            let density = wd * s.powf(0.5 * d as f64) / det_a(field, r).sqrt();
            sum += wi * h * density * r.powi(d as i32 - 1);
        }
    }
    sum * sphere_area(d) / (2.0 * PI).powi(d as i32)
}

/// Weyl coefficient `c` for a radially symmetric field on the ball of
/// radius `R`. `quadrature_points` sets the Gauss order per panel; the
/// panel count doubles until two levels agree to `1e-8` relative.
pub fn weyl_constant(field: &CoefficientField, quadrature_points: usize) -> Result<f64> {
    weyl_constant_terms(field, quadrature_points).map(|(a, b)| a + b)
}

/// The `ℓ = 1` and `ℓ = 2` contributions to [`weyl_constant`].
pub fn weyl_constant_terms(field: &CoefficientField, quadrature_points: usize) -> Result<(f64, f64)> {
    if field.dim == 0 || quadrature_points == 0 {
        return Err(TeigError::InvalidArgument("need d >= 1 and at least one quadrature point".into()));
    }
    if let Conductivity::Matrix(m) = &field.a {
        if m.dim() != field.dim {
            return Err(TeigError::InvalidArgument("conductivity dimension does not match field".into()));
        }
    }
    let mut out = [0.0; 2];
    for ell in [1usize, 2] {
        let mut panels = 1;
        let mut prev = weyl_term(field, ell, panels, quadrature_points);
        loop {
            panels *= 2;
            let cur = weyl_term(field, ell, panels, quadrature_points);
            if (cur - prev).abs() <= 1e-8 * cur.abs() {
                out[ell - 1] = cur;
                break;
            }
            if panels >= 1 << 16 || !cur.is_finite() {
                return Err(TeigError::QuadratureNotConverged {
                    context: format!("Weyl term for sigma{ell}"),
                    estimate: ((cur - prev) / cur).abs(),
                });
            }
            prev = cur;
        }
    }
    Ok((out[0], out[1]))
}

/// `N(t)` sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingCurve {
    pub t: Vec<f64>,
    pub count: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub c_analytic: f64,
    pub curve: CountingCurve,
    /// `N(t) / (c t^{d/2})`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log N` against `log t` over the top decade.
    pub slope: f64,
}

/// Compares a counted spectrum with `c t^{d/2}`.
pub fn counting_fit(spec: &Spectrum, field: &CoefficientField, t_grid: &[f64]) -> Result<WeylFit> {
    let c = weyl_constant(field, 16)?;
    counting_fit_with_constant(spec, c, field.dim, t_grid)
}

/// [`counting_fit`] with a known constant.
pub fn counting_fit_with_constant(spec: &Spectrum, c: f64, dim: usize, t_grid: &[f64]) -> Result<WeylFit> {
    if spec.entries.is_empty() {
        return Err(TeigError::EmptySpectrum);
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(TeigError::InvalidArgument("t grid must be nonempty and positive".into()));
    }
    let mut t: Vec<f64> = t_grid.to_vec();
    t.sort_by(f64::total_cmp);
    let top = *t.last().expect("nonempty");
    if top > spec.t_max * (1.0 + 1e-12) {
        return Err(TeigError::InvalidArgument(format!(
            "t grid reaches {top} but the spectrum is only complete to {}",
            spec.t_max
        )));
    }
    let count: Vec<u64> = t.iter().map(|&x| spec.counting(x)).collect();
    let half_d = 0.5 * dim as f64;
    let ratios = t
        .iter()
        .zip(&count)
        .map(|(&x, &n)| n as f64 / (c * x.powf(half_d)))
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(&count)
        .filter(|(&x, &n)| x >= top / 10.0 * (1.0 - 1e-12) && n > 0)
        .map(|(&x, &n)| (x.ln(), (n as f64).ln()))
        .unzip();
    if lx.len() < 2 {
        return Err(TeigError::InvalidArgument(
            "need at least two nonzero counts in the top decade of the t grid".into(),
        ));
    }
    let slope = least_squares_slope(&lx, &ly);
    Ok(WeylFit {
        c_analytic: c,
        curve: CountingCurve { t, count },
        ratios,
        slope,
    })
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk_spectrum::{DiskMedium, SpectrumEntry};
    use num_complex::Complex64;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn ellipse_areas() {
        assert!((ellipsoid_volume(&SpdMatrix::identity(2), 1.0).unwrap() - PI).abs() < 1e-15);
        let a = SpdMatrix::diagonal(&[4.0, 1.0]).unwrap();
        assert!((ellipsoid_volume(&a, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_disk_constants() {
        let f = CoefficientField::constant(1.0, 1.0, 1.0, 4.0, 4.0);
        assert!((weyl_constant(&f, 8).unwrap() - 1.25).abs() < 1e-12);
        let f = CoefficientField::constant(1.0, 1.0, 1.0, 2.0, 4.0);
        assert!((weyl_constant(&f, 8).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn synthetic_integer_spectrum() {
        let entries = (1..=1000)
            .map(|j| SpectrumEntry {
                lambda: Complex64::new(-(j as f64), 0.0),
                multiplicity: 1,
                mode: 0,
            })
            .collect();
        let spec = Spectrum {
            medium: DiskMedium::new(1.0, 1.0, 4.0, 1.0).unwrap(),
            entries,
            lambda_floor: 0.5,
            t_max: 1000.0,
        };
        let grid: Vec<f64> = (0..=20).map(|k| 0.5 * 10f64.powf(k as f64 * 3.3 / 20.0)).collect();
        let fit = counting_fit_with_constant(&spec, 1.0, 2, &grid).unwrap();
        assert_eq!(fit.ratios[0], 0.0);
        assert!((fit.ratios.last().unwrap() - 1.0).abs() < 1e-3);
        assert!((fit.slope - 1.0).abs() < 0.01, "{}", fit.slope);
    }
}
