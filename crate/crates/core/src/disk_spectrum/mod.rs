//! Transmission eigenvalues of the disk with constant isotropic coefficients.
//!
//! Separating variables, mode `m` solutions are `J_m(μ_ℓ r) e^{imθ}` with
//! `μ_ℓ² = −λΣ_ℓ/a0`. Matching value and flux at `r = R` gives the
//! characteristic function
//! `D_m(λ) = w_1 j_m(w_2) j_{m+1}(w_1) − w_2 j_m(w_1) j_{m+1}(w_2)`,
//! `w_ℓ = −λΣ_ℓR²/a0`, which is entire in `λ` and free of square roots.

pub mod contour;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::CoefficientField;
use crate::error::{Result, TeigError};
use crate::specfun::{entire_j_block, ScaledComplex};
use contour::{count_with_nudges, locate_in_sector, ContourFunction, Sector};

/// Default exclusion radius around the degenerate point `λ = 0`.
pub const DEFAULT_LAMBDA_FLOOR: f64 = 1.0;
/// Modes beyond this many consecutive empty ones are assumed empty.
const EMPTY_MODES_TO_STOP: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskMedium {
    #[serde(rename = "R")]
    pub radius: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub a0: f64,
}

impl DiskMedium {
    pub fn new(radius: f64, sigma1: f64, sigma2: f64, a0: f64) -> Result<Self> {
        if !(radius > 0.0 && sigma1 > 0.0 && sigma2 > 0.0 && a0 > 0.0) {
            return Err(TeigError::InvalidArgument(
                "disk medium needs positive R, sigma1, sigma2, a0".into(),
            ));
        }
        if sigma1 == sigma2 {
            return Err(TeigError::ContrastViolation {
                contrast: 0.0,
                floor: f64::MIN_POSITIVE,
            });
        }
        Ok(Self {
            radius,
            sigma1,
            sigma2,
            a0,
        })
    }

    /// Extracts the constant medium from a field with constant coefficients.
    pub fn from_field(field: &CoefficientField) -> Result<Self> {
        let (a0, s1, s2) = field.constant_values().ok_or_else(|| {
            TeigError::InvalidArgument("disk engine needs constant isotropic coefficients".into())
        })?;
        Self::new(field.radius, s1, s2, a0)
    }

    /// `κ_ℓ` in `w_ℓ = κ_ℓ λ`.
    fn kappa(&self, ell: usize) -> f64 {
        let s = if ell == 1 { self.sigma1 } else { self.sigma2 };
        -s * self.radius * self.radius / self.a0
    }

    fn max_kappa(&self) -> f64 {
        self.kappa(1).abs().max(self.kappa(2).abs())
    }
}

/// `D_m(λ)`.
pub fn char_det(medium: &DiskMedium, mode: u32, lambda: Complex64) -> Result<ScaledComplex> {
    let (k1, k2) = (medium.kappa(1), medium.kappa(2));
    let (w1, w2) = (lambda * k1, lambda * k2);
    let a = entire_j_block(mode, 2, w1)?;
    let b = entire_j_block(mode, 2, w2)?;
    Ok(b[0] * a[1].scale(w1) - a[0] * b[1].scale(w2))
}

/// `D_m(λ)` and `dD_m/dλ`, using `j_m'(w) = −j_{m+1}(w)/2`.
pub fn char_det_with_derivative(
    medium: &DiskMedium,
    mode: u32,
    lambda: Complex64,
) -> Result<(ScaledComplex, ScaledComplex)> {
    let (k1, k2) = (medium.kappa(1), medium.kappa(2));
    let (w1, w2) = (lambda * k1, lambda * k2);
    let j1 = entire_j_block(mode, 3, w1)?;
    let j2 = entire_j_block(mode, 3, w2)?;
    let (a1, b1, c1) = (j1[0], j1[1], j1[2]);
    let (a2, b2, c2) = (j2[0], j2[1], j2[2]);
    let d = a2 * b1.scale(w1) - a1 * b2.scale(w2);
    let c = |x: f64| Complex64::new(x, 0.0);
    let da1 = b1.scale(c(-0.5 * k1));
    let db1 = c1.scale(c(-0.5 * k1));
    let da2 = b2.scale(c(-0.5 * k2));
    let db2 = c2.scale(c(-0.5 * k2));
    let term1 = (a2 * b1).scale(c(k1)) + (da2 * b1 + a2 * db1).scale(w1);
    let term2 = (a1 * b2).scale(c(k2)) + (da1 * b2 + a1 * db2).scale(w2);
    Ok((d, term1 - term2))
}

/// `D_m` packaged for the contour machinery.
#[derive(Clone, Copy, Debug)]
pub struct DiskDeterminant {
    pub medium: DiskMedium,
    pub mode: u32,
}

impl ContourFunction for DiskDeterminant {
    fn eval(&self, z: Complex64) -> Result<ScaledComplex> {
        char_det(&self.medium, self.mode, z)
    }

    fn eval_with_derivative(&self, z: Complex64) -> Result<(ScaledComplex, ScaledComplex)> {
        char_det_with_derivative(&self.medium, self.mode, z)
    }

    /// Phase oscillations follow the Bessel argument `sqrt(κ λ)`, which
    /// advances by about `π` per zero.
    fn oscillation_estimate(&self, a: Complex64, b: Complex64) -> f64 {
        // κ < 0, so the branch cut of sqrt(κλ) lies on the positive real axis
        let k = -self.medium.max_kappa();
        let za = (a * k).sqrt();
        let zb = (b * k).sqrt();
        // the principal root jumps across the cut; measure through the midpoint
        let zm = ((a + b) * 0.5 * k).sqrt();
        let len = if (za - zb).norm() > (za - zm).norm() + (zm - zb).norm() + 1e-12 {
            (za - zm).norm() + (zm - zb).norm()
        } else {
            (za - zb).norm()
        };
        len / PI + 0.25
    }
}

/// Zeros of `D_mode` (with order) in `t0 < |λ| <= t1`.
pub fn count_zeros(medium: &DiskMedium, mode: u32, annulus: (f64, f64)) -> Result<usize> {
    count_zeros_of(&DiskDeterminant { medium: *medium, mode }, annulus)
}

/// Zero count of any contour function in an annulus around the origin.
pub fn count_zeros_of(f: &impl ContourFunction, annulus: (f64, f64)) -> Result<usize> {
    let (t0, t1) = check_annulus(annulus)?;
    let origin = Complex64::new(0.0, 0.0);
    let (n1, _) = count_with_nudges(f, &Sector::disk(origin, t1))?;
    let (n0, _) = count_with_nudges(f, &Sector::disk(origin, t0))?;
    let n = n1 - n0;
    if n < 0 {
        return Err(TeigError::PhaseTrackingUnstable {
            context: format!("negative annulus count {n1} - {n0}"),
        });
    }
    Ok(n as usize)
}

fn check_annulus(annulus: (f64, f64)) -> Result<(f64, f64)> {
    let (t0, t1) = annulus;
    if !(t0 > 0.0 && t1 > t0 && t1.is_finite()) {
        return Err(TeigError::InvalidArgument(format!(
            "annulus needs 0 < t0 < t1, got ({t0}, {t1})"
        )));
    }
    Ok((t0, t1))
}

/// A zero of a characteristic function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocatedZero {
    pub lambda: Complex64,
    pub order: u32,
    /// Newton failed; location is the centre of a tiny isolating region.
    pub from_bisection: bool,
}

/// Zeros of `D_mode` in `t0 < |λ| <= t1`, isolated by recursive subdivision
/// and refined by Newton's method.
pub fn locate_zeros(medium: &DiskMedium, mode: u32, annulus: (f64, f64)) -> Result<Vec<LocatedZero>> {
    locate_zeros_of(&DiskDeterminant { medium: *medium, mode }, annulus)
}

pub fn locate_zeros_of(f: &impl ContourFunction, annulus: (f64, f64)) -> Result<Vec<LocatedZero>> {
    let (t0, t1) = check_annulus(annulus)?;
    let origin = Complex64::new(0.0, 0.0);
    let (n1, outer) = count_with_nudges(f, &Sector::disk(origin, t1))?;
    let (n0, inner) = count_with_nudges(f, &Sector::disk(origin, t0))?;
    let total = n1 - n0;
    if total <= 0 {
        return Ok(Vec::new());
    }
    let ring = Sector::annulus(origin, inner.r1, outer.r1);
    let zeros = locate_in_sector(f, &ring, total)?;
    let sum: i64 = zeros.iter().map(|z| z.order as i64).sum();
    if sum != total {
        return Err(TeigError::PhaseTrackingUnstable {
            context: format!("located orders sum to {sum}, winding count is {total}"),
        });
    }
    let mut out: Vec<LocatedZero> = zeros
        .into_iter()
        .map(|z| LocatedZero {
            lambda: z.z,
            order: z.order,
            from_bisection: z.from_bisection,
        })
        .collect();
    out.sort_by(|a, b| {
        a.lambda
            .re
            .total_cmp(&b.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub lambda: Complex64,
    /// Zero order times angular degeneracy (1 for mode 0, else 2).
    pub multiplicity: u32,
    pub mode: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub medium: DiskMedium,
    pub entries: Vec<SpectrumEntry>,
    pub lambda_floor: f64,
    pub t_max: f64,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    re: f64,
    im: f64,
    mult: u32,
    mode: u32,
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    medium: DiskMedium,
    entries: Vec<EntryJson>,
    lambda_floor: f64,
    #[serde(default)]
    t_max: Option<f64>,
}

impl Spectrum {
    /// Total multiplicity.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity as u64).sum()
    }

    /// `N(t)`: multiplicity-weighted count of entries with `|λ| <= t`.
    pub fn counting(&self, t: f64) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.lambda.norm() <= t)
            .map(|e| e.multiplicity as u64)
            .sum()
    }

    pub fn to_json(&self) -> String {
        let j = SpectrumJson {
            medium: self.medium,
            entries: self
                .entries
                .iter()
                .map(|e| EntryJson {
                    re: e.lambda.re,
                    im: e.lambda.im,
                    mult: e.multiplicity,
                    mode: e.mode,
                })
                .collect(),
            lambda_floor: self.lambda_floor,
            t_max: Some(self.t_max),
        };
        serde_json::to_string_pretty(&j).expect("spectrum serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: SpectrumJson = serde_json::from_str(text)
            .map_err(|e| TeigError::Profile(format!("invalid spectrum JSON: {e}")))?;
        let t_max = j.t_max.unwrap_or_else(|| {
            j.entries
                .iter()
                .map(|e| e.re.hypot(e.im))
                .fold(j.lambda_floor, f64::max)
        });
        Ok(Self {
            medium: j.medium,
            entries: j
                .entries
                .into_iter()
                .map(|e| SpectrumEntry {
                    lambda: Complex64::new(e.re, e.im),
                    multiplicity: e.mult,
                    mode: e.mode,
                })
                .collect(),
            lambda_floor: j.lambda_floor,
            t_max,
        })
    }
}

/// All zeros of one mode, with angular multiplicity applied.
fn mode_entries(medium: &DiskMedium, mode: u32, t_max: f64, floor: f64) -> Result<Vec<SpectrumEntry>> {
    let zeros = locate_zeros(medium, mode, (floor, t_max))?;
    let degeneracy = if mode == 0 { 1 } else { 2 };
    Ok(zeros
        .into_iter()
        .map(|z| SpectrumEntry {
            lambda: z.lambda,
            multiplicity: z.order * degeneracy,
            mode,
        })
        .collect())
}

/// Located zeros of every mode `0..=M` in `lambda_floor < |λ| <= t_max`,
/// where `M` is the last mode before three consecutive empty ones.
pub fn assemble_spectrum(medium: &DiskMedium, t_max: f64, lambda_floor: f64) -> Result<Spectrum> {
    if !(lambda_floor > 0.0 && lambda_floor < t_max) {
        return Err(TeigError::InvalidArgument(format!(
            "need 0 < lambda_floor < t_max, got {lambda_floor}, {t_max}"
        )));
    }
    let batch = rayon::current_num_threads().max(1) as u32 * 2;
    let mut entries = Vec::new();
    let mut empty_run = 0;
    let mut start = 0u32;
    'outer: loop {
        let modes: Vec<u32> = (start..start + batch).collect();
        let results: Vec<Result<Vec<SpectrumEntry>>> = modes
            .par_iter()
            .map(|&m| mode_entries(medium, m, t_max, lambda_floor))
            .collect();
        for r in results {
            let mode_list = r?;
            if mode_list.is_empty() {
                empty_run += 1;
                if empty_run >= EMPTY_MODES_TO_STOP {
                    break 'outer;
                }
            } else {
                empty_run = 0;
                entries.extend(mode_list);
            }
        }
        start += batch;
    }
    entries.sort_by(|a, b| {
        a.mode
            .cmp(&b.mode)
            .then(a.lambda.re.total_cmp(&b.lambda.re))
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    Ok(Spectrum {
        medium: *medium,
        entries,
        lambda_floor,
        t_max,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `max |Im λ|/|λ|` over the shell; `None` when the shell is empty.
    pub max_ratio: Option<f64>,
}

/// Geometric shells `[t, 2t)` with `t = lambda_floor · 2^k`, `k < shells`.
pub fn wedge_report(spec: &Spectrum, shells: usize) -> Result<Vec<ShellStat>> {
    if spec.entries.is_empty() {
        return Err(TeigError::EmptySpectrum);
    }
    let base = spec.lambda_floor;
    let mut out = Vec::with_capacity(shells);
    for k in 0..shells {
        let lo = base * 2f64.powi(k as i32);
        let hi = 2.0 * lo;
        let mut count = 0;
        let mut max_ratio: Option<f64> = None;
        for e in &spec.entries {
            let r = e.lambda.norm();
            if r >= lo && r < hi {
                count += 1;
                let q = e.lambda.im.abs() / r;
                max_ratio = Some(max_ratio.map_or(q, |m| m.max(q)));
            }
        }
        out.push(ShellStat {
            lo,
            hi,
            count,
            max_ratio,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> DiskMedium {
        DiskMedium::new(1.0, 1.0, 4.0, 1.0).unwrap()
    }

    #[test]
    fn determinant_vanishes_at_origin() {
        for m in [0, 1, 7] {
            assert!(char_det(&medium(), m, Complex64::new(0.0, 0.0)).unwrap().is_zero());
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let md = medium();
        for (m, l) in [(0u32, Complex64::new(-30.0, 4.0)), (3, Complex64::new(5.0, -60.0))] {
            let (_, d) = char_det_with_derivative(&md, m, l).unwrap();
            let h = 1e-5 * l.norm();
            let fd = (char_det(&md, m, l + h).unwrap() - char_det(&md, m, l - h).unwrap())
                .scale(Complex64::new(0.5 / h, 0.0));
            assert!(d.rel_diff(&fd) < 1e-7, "{d} vs {fd}");
        }
    }

    #[test]
    fn equal_sigmas_rejected() {
        assert!(DiskMedium::new(1.0, 2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn empty_below_first_eigenvalue() {
        let s = assemble_spectrum(&medium(), 4.0, 1.0).unwrap();
        assert!(s.entries.is_empty());
    }

    #[test]
    fn wedge_report_arithmetic() {
        let s = Spectrum {
            medium: medium(),
            entries: vec![SpectrumEntry {
                lambda: Complex64::new(1.0, 1.0),
                multiplicity: 1,
                mode: 0,
            }],
            lambda_floor: 1.0,
            t_max: 2.0,
        };
        let r = wedge_report(&s, 1).unwrap();
        assert!((r[0].max_ratio.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let empty = Spectrum {
            entries: vec![],
            ..s
        };
        assert_eq!(wedge_report(&empty, 3), Err(TeigError::EmptySpectrum));
    }
}
