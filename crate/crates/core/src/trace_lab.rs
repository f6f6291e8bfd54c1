//! Scaled products of the Cauchy solution operator, their Hilbert–Schmidt
//! norms and traces, and the constant-coefficient kernels whose diagonal
//! values give the leading trace asymptotics.
//!
//! Notation: `k = ⌊d/2⌋ + 1`, `ω_j` the `(k+1)`-th roots of unity,
//! `λ_{j,θ,t} = λ* + ω_j t e^{iθ}`, `M_t = diag(t^{1/2}, t^{-1/2})`, and
//! `T_{θ,t} = ∏_j M_t T_{λ_{j,θ,t}} M_t⁻¹` (rightmost factor `j = 1`).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy_grid::{Formulation, GridOptions, ModePencil};
use crate::coeff::{wedge_membership, CoefficientField, SpdMatrix};
use crate::error::{Result, TeigError};
use crate::quadrature::{gk15, integrate, integrate_to_infinity, wynn_epsilon};
use crate::specfun::bessel_j;
use crate::weyl::{ellipsoid_volume, unit_ball_volume};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default `t*` in `λ* = i t*`.
pub const DEFAULT_T_STAR: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConstants {
    pub d: usize,
    pub k: usize,
    pub omegas: Vec<Complex64>,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_star: Complex64,
}

impl SchemeConstants {
    /// `λ_{j,θ,t}` for `j = 1..=k+1` (index 0-based).
    pub fn lambdas(&self, theta: f64, t: f64) -> Vec<Complex64> {
        self.omegas
            .iter()
            .map(|w| self.lambda_star + w * Complex64::from_polar(t, theta))
            .collect()
    }

    /// `(t^{1/2}, t^{-1/2})`.
    pub fn m_t(t: f64) -> (f64, f64) {
        (t.sqrt(), 1.0 / t.sqrt())
    }

    /// Exponent `2k + 2 − d/2` of the trace decay.
    pub fn trace_exponent(&self) -> f64 {
        (2 * self.k + 2) as f64 - 0.5 * self.d as f64
    }
}

pub fn scheme(d: usize, t_star: f64) -> Result<SchemeConstants> {
    if d < 2 {
        return Err(TeigError::InvalidArgument(format!("scheme needs d >= 2, got {d}")));
    }
    if !(t_star > 0.0) {
        return Err(TeigError::InvalidArgument(format!("t* must be positive, got {t_star}")));
    }
    let k = d / 2 + 1;
    let kp1 = (k + 1) as f64;
    let omegas = (0..=k)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / kp1))
        .collect();
    Ok(SchemeConstants {
        d,
        k,
        omegas,
        alpha: PI / (4.0 * kp1),
        beta: 5.0 * PI / (4.0 * kp1),
        lambda_star: Complex64::new(0.0, t_star),
    })
}

/// Frozen coefficients `(A, Σ₁, Σ₂)` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenPoint {
    pub a: SpdMatrix,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl FrozenPoint {
    pub fn new(a: SpdMatrix, sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(TeigError::InvalidArgument("sigma values must be positive".into()));
        }
        Ok(Self { a, sigma1, sigma2 })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn sigma(&self, ell: usize) -> f64 {
        if ell == 1 {
            self.sigma1
        } else {
            self.sigma2
        }
    }

    /// `det(Σ_ℓ⁻¹ A)`.
    fn symbol_det(&self, ell: usize) -> f64 {
        self.a.det() / self.sigma(ell).powi(self.dim() as i32)
    }

    /// `Σ_ℓ⁻¹ A ξ·ξ`.
    pub fn symbol(&self, ell: usize, xi: &[f64]) -> f64 {
        self.a.quad_form(xi) / self.sigma(ell)
    }
}

/// `∫_{R^d} g(Bξ·ξ) dξ = det(B)^{-1/2} (|S^{d-1}|/2) ∫₀^∞ g(s) s^{d/2-1} ds`:
/// the prefactor multiplying the one-dimensional integral.
fn radial_prefactor(d: usize, det_b: f64) -> f64 {
    0.5 * d as f64 * unit_ball_volume(d) / det_b.sqrt()
}

/// Relative gap between `∏_j (q+λ*+ω_j t e^{iα})(q+λ*+ω_j t e^{iβ})` and
/// `(q+λ*)^{2(k+1)} − i t^{2(k+1)}`, with `q = Σ_ℓ⁻¹Aξ·ξ`.
pub fn product_factorization_check(
    sch: &SchemeConstants,
    point: &FrozenPoint,
    ell: usize,
    t: f64,
    xi: &[f64],
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(TeigError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if xi.len() != point.dim() {
        return Err(TeigError::InvalidArgument("xi has the wrong dimension".into()));
    }
    let q = point.symbol(ell, xi);
    Ok(factorization_gap(sch, &sch.omegas, q, t))
}

/// [`product_factorization_check`] for an arbitrary set of roots, e.g. a
/// perturbed one.
pub fn factorization_gap(sch: &SchemeConstants, omegas: &[Complex64], q: f64, t: f64) -> f64 {
    let base = sch.lambda_star + q;
    let (ea, eb) = (Complex64::from_polar(t, sch.alpha), Complex64::from_polar(t, sch.beta));
    let prod: Complex64 = omegas.iter().map(|w| (base + w * ea) * (base + w * eb)).product();
    let p = 2 * (sch.k + 1) as i32;
    let rhs = base.powi(p) - I * t.powi(p);
    let scale = base.norm().powi(p) + t.powi(p);
    (prod - rhs).norm() / scale
}

/// `F_{ℓ,λ}(z) = −(2π)^{-2} ∫ e^{iz·ξ} / (Σ_ℓ⁻¹Aξ·ξ + λ) dξ` in two dimensions.
///
/// After rotating to the principal axes of `Σ_ℓ⁻¹A` the angular integral is
/// `2π J₀(|z'|ρ)`; the remaining oscillatory radial integral is summed over
/// half-periods of `J₀` and extrapolated with Wynn's epsilon algorithm.
pub fn kernel_f(point: &FrozenPoint, ell: usize, lambda: Complex64, z: &[f64]) -> Result<Complex64> {
    if point.dim() != 2 || z.len() != 2 {
        return Err(TeigError::InvalidArgument("kernel_f is implemented for d = 2".into()));
    }
    if lambda.im == 0.0 && lambda.re <= 0.0 {
        return Err(TeigError::InvalidArgument(format!(
            "lambda = {lambda} lies on the closed negative real axis"
        )));
    }
    let b = point.a.entries() / point.sigma(ell);
    let eig = b.symmetric_eigen();
    let zv = nalgebra::DVector::from_column_slice(z);
    let rotated = eig.eigenvectors.transpose() * zv;
    let s = rotated
        .iter()
        .zip(eig.eigenvalues.iter())
        .map(|(c, e)| c * c / e)
        .sum::<f64>()
        .sqrt();
    let det_b: f64 = eig.eigenvalues.iter().product();
    if s == 0.0 {
        return Err(TeigError::QuadratureNotConverged {
            context: "kernel at z = 0: |xi|^-2 tail is not integrable".into(),
            estimate: f64::INFINITY,
        });
    }
    // with x = sρ: ∫₀^∞ J₀(x) x / (x² + λ s²) dx
    let mu2 = lambda * s * s;
    let radial = oscillatory_j0_integral(mu2)?;
    Ok(-radial / (2.0 * PI * det_b.sqrt()))
}

fn j0(x: f64) -> f64 {
    bessel_j(0, Complex64::new(x, 0.0))
        .map(|v| v.to_complex().re)
        .unwrap_or(f64::NAN)
}

/// `∫₀^∞ J₀(x) x / (x² + μ²) dx`, which equals `K₀(μ)` for `Re μ > 0`.
fn oscillatory_j0_integral(mu2: Complex64) -> Result<Complex64> {
    let f = |x: f64| Complex64::new(j0(x) * x, 0.0) / (mu2 + x * x);
    // first stretch covers the near-resonance region x ~ |μ|
    let head_end = (2.0 * mu2.norm().sqrt()).max(PI) + 0.75 * PI;
    let head = integrate(f, 0.0, head_end, 1e-14, 1e-12)?;
    let mut partial = Vec::new();
    let mut sum = head.value;
    let mut err = head.error;
    let mut a = head_end;
    let mut last = (sum, f64::INFINITY);
    for n in 0..400 {
        let b = a + PI;
        let piece = gk15(&f, a, b);
        let piece = if piece.error > 1e-13 * piece.value.norm().max(1e-300) {
            integrate(f, a, b, 1e-16, 1e-13)?
        } else {
            piece
        };
        sum += piece.value;
        err += piece.error;
        partial.push(sum);
        a = b;
        if n >= 12 && n % 4 == 0 {
            let window = &partial[partial.len().saturating_sub(40)..];
            let (v, e) = wynn_epsilon(window);
            if e <= 1e-11 * v.norm() + err {
                return Ok(v);
            }
            last = (v, e);
        }
    }
    let (v, e) = last;
    if e + err <= 1e-6 * v.norm() {
        return Ok(v);
    }
    Err(TeigError::QuadratureNotConverged {
        context: "oscillatory radial integral".into(),
        estimate: (e + err) / v.norm(),
    })
}

/// `Σ_ℓ 𝓕_{ℓ,t}(x₀, 0)` from the scaled form
/// `t^{-2k-2+d/2} (2π)^{-d} ∫ dξ / ((Σ_ℓ⁻¹Aξ·ξ + λ*/t)^{2k+2} − i)`.
pub fn trace_diag(point: &FrozenPoint, t: f64, sch: &SchemeConstants) -> Result<Complex64> {
    check_point(point, sch)?;
    if !(t >= 1.0) {
        return Err(TeigError::InvalidArgument(format!("trace_diag needs t >= 1, got {t}")));
    }
    let shift = sch.lambda_star / t;
    let p = 2 * (sch.k + 1) as i32;
    let scale = t.powf(-sch.trace_exponent()) / (2.0 * PI).powi(sch.d as i32);
    let mut total = Complex64::new(0.0, 0.0);
    for ell in [1, 2] {
        let half = 0.5 * sch.d as f64 - 1.0;
        let g = |s: f64| s.powf(half) / ((shift + s).powi(p) - I);
        let v = radial_integral(g)?;
        total += v * radial_prefactor(sch.d, point.symbol_det(ell));
    }
    Ok(total * scale)
}

/// The same quantity from the unfactored product `∏_j (q + λ_{j,α,t})(q + λ_{j,β,t})`.
pub fn trace_diag_product_form(point: &FrozenPoint, t: f64, sch: &SchemeConstants) -> Result<Complex64> {
    check_point(point, sch)?;
    if !(t > 0.0) {
        return Err(TeigError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    // substitute s = t u so the integrand is O(1) whatever t is
    let la: Vec<Complex64> = sch.lambdas(sch.alpha, t).iter().map(|l| l / t).collect();
    let lb: Vec<Complex64> = sch.lambdas(sch.beta, t).iter().map(|l| l / t).collect();
    let half = 0.5 * sch.d as f64 - 1.0;
    let g = |u: f64| {
        let den: Complex64 = la.iter().zip(&lb).map(|(a, b)| (u + a) * (u + b)).product();
        u.powf(half) / den
    };
    let v = radial_integral(g)?;
    let mut total = Complex64::new(0.0, 0.0);
    for ell in [1, 2] {
        total += v * radial_prefactor(sch.d, point.symbol_det(ell));
    }
    let p = 2 * (sch.k + 1) as i32;
    Ok(total * t.powf(half + 1.0) / t.powi(p) / (2.0 * PI).powi(sch.d as i32))
}

/// `lim_{t→∞} t^{2k+2-d/2} trace_diag(t) = (2π)^{-d} Σ_ℓ ∫ dξ / ((Σ_ℓ⁻¹Aξ·ξ)^{2k+2} − i)`.
pub fn trace_limit(point: &FrozenPoint, sch: &SchemeConstants) -> Result<Complex64> {
    check_point(point, sch)?;
    let p = 2 * (sch.k + 1) as i32;
    let half = 0.5 * sch.d as f64 - 1.0;
    let v = radial_integral(|s: f64| s.powf(half) / (Complex64::new(s.powi(p), 0.0) - I))?;
    let mut total = Complex64::new(0.0, 0.0);
    for ell in [1, 2] {
        total += v * radial_prefactor(sch.d, point.symbol_det(ell));
    }
    Ok(total / (2.0 * PI).powi(sch.d as i32))
}

fn check_point(point: &FrozenPoint, sch: &SchemeConstants) -> Result<()> {
    if point.dim() != sch.d {
        return Err(TeigError::InvalidArgument(format!(
            "point has dimension {}, scheme has {}",
            point.dim(),
            sch.d
        )));
    }
    Ok(())
}

/// `∫₀^∞ g`, split at 1 so the bulk and the algebraic tail are handled
/// separately.
fn radial_integral(g: impl Fn(f64) -> Complex64) -> Result<Complex64> {
    let head = integrate(&g, 0.0, 1.0, 1e-15, 1e-12)?;
    let tail = integrate_to_infinity(&g, 1.0, 1e-15, 1e-12)?;
    Ok(head.value + tail.value)
}

/// Both sides of the pointwise `Im c` identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImCIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

/// `lhs = (2π)^{-d} Σ_ℓ ∫ dξ / ((Σ_ℓ⁻¹Aξ·ξ)^{4k+4} + 1)` by radial quadrature;
/// `rhs = (2π)^{-d} Σ_ℓ |{Aξ·ξ < Σ_ℓ}| · p π / sin(pπ)` with `p = d/(8k+8)`.
pub fn im_c_identity(point: &FrozenPoint, sch: &SchemeConstants) -> Result<ImCIdentity> {
    check_point(point, sch)?;
    let d = sch.d;
    let p4 = 4 * (sch.k + 1) as i32;
    let half = 0.5 * d as f64 - 1.0;
    let v = radial_integral(|s: f64| Complex64::new(s.powf(half) / (s.powi(p4) + 1.0), 0.0))?.re;
    let norm = (2.0 * PI).powi(d as i32);
    let expo = d as f64 / (8.0 * (sch.k + 1) as f64);
    let beta_factor = expo * PI / (PI * expo).sin();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for ell in [1, 2] {
        lhs += v * radial_prefactor(d, point.symbol_det(ell)) / norm;
        rhs += ellipsoid_volume(&point.a, point.sigma(ell))? * beta_factor / norm;
    }
    Ok(ImCIdentity {
        lhs,
        rhs,
        relative_gap: (lhs - rhs).abs() / rhs.abs(),
    })
}

/// Relative Frobenius gap between `T^{k+1}(I − γT^{k+1})⁻¹` and
/// `∏_j T(I − ω_j t e^{iθ} T)⁻¹`, where `γ = t^{k+1} e^{iθ̃}` and `θ = θ̃/(k+1)`.
pub fn modified_resolvent_check(
    t_matrix: &DMatrix<Complex64>,
    t: f64,
    theta_tilde: f64,
    sch: &SchemeConstants,
) -> Result<f64> {
    let n = t_matrix.nrows();
    if n != t_matrix.ncols() {
        return Err(TeigError::InvalidArgument("operator matrix must be square".into()));
    }
    let kp1 = sch.k + 1;
    let gamma = Complex64::from_polar(t.powi(kp1 as i32), theta_tilde);
    let theta = theta_tilde / kp1 as f64;
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut power = id.clone();
    for _ in 0..kp1 {
        power = &power * t_matrix;
    }
    let lhs = &power * checked_inverse(&(&id - &power * gamma))?;
    let mut rhs = id.clone();
    for w in &sch.omegas {
        let z = w * Complex64::from_polar(t, theta);
        let factor = t_matrix * checked_inverse(&(&id - t_matrix * z))?;
        rhs = &rhs * factor;
    }
    let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
    Ok((&lhs - &rhs).norm() / scale)
}

fn checked_inverse(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = smax / smin;
    if !(condition <= 1e12) {
        return Err(TeigError::NotInModifiedResolventSet { condition });
    }
    m.clone()
        .try_inverse()
        .ok_or(TeigError::NotInModifiedResolventSet { condition })
}

/// Quadrature-weighted matrix for the Hilbert–Schmidt calculus of one mode:
/// the operator acts on `(f, g)` node samples, each with weights `w`.
#[derive(Clone, Debug)]
pub struct DiscreteHs {
    pub matrix: DMatrix<Complex64>,
    pub weights: Vec<f64>,
}

impl DiscreteHs {
    /// `⦀T⦀² = Σ |K_ij|² w_i w_j` with kernel `K_ij = T_ij / w_j`.
    pub fn double_norm(&self) -> f64 {
        let w = &self.weights;
        let mut s = 0.0;
        for j in 0..self.matrix.ncols() {
            for i in 0..self.matrix.nrows() {
                s += self.matrix[(i, j)].norm_sqr() * w[i] / w[j];
            }
        }
        s.sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn compose(&self, right: &DiscreteHs) -> DiscreteHs {
        DiscreteHs {
            matrix: &self.matrix * &right.matrix,
            weights: self.weights.clone(),
        }
    }
}

/// `T_λ` on one mode as a dense matrix with unknowns `u` then `v` and data
/// `f` then `g`.
pub fn t_matrix(pencil: &ModePencil, lambda: Complex64, condition_limit: f64) -> Result<DMatrix<Complex64>> {
    let n = pencil.n();
    let solver = pencil.solver(lambda, condition_limit)?;
    let mut out = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    let zero = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..2 * n {
        let mut f = zero.clone();
        let mut g = zero.clone();
        if col < n {
            f[col] = Complex64::new(1.0, 0.0);
        } else {
            g[col - n] = Complex64::new(1.0, 0.0);
        }
        let x = solver.solve(&pencil.rhs(&f, &g))?;
        let (u, v) = ModePencil::split(&x);
        for i in 0..n {
            out[(i, col)] = u[i];
            out[(n + i, col)] = v[i];
        }
    }
    Ok(out)
}

/// `T_{θ,t}` for one mode.
pub fn theta_product(
    field: &CoefficientField,
    mode: u32,
    n: usize,
    sch: &SchemeConstants,
    theta: f64,
    t: f64,
    opts: &GridOptions,
) -> Result<DiscreteHs> {
    let pencil = ModePencil::new(field, mode, n, Formulation::Direct)?;
    let (up, down) = SchemeConstants::m_t(t);
    let mut product = DMatrix::<Complex64>::identity(2 * n, 2 * n);
    for lambda in sch.lambdas(theta, t) {
        if !wedge_membership(lambda, opts.gamma)? || lambda.norm() < opts.lambda_scan_floor {
            return Err(TeigError::WedgeViolation {
                re: lambda.re,
                im: lambda.im,
                ratio: lambda.im.abs() / lambda.norm(),
                gamma: opts.gamma,
            });
        }
        let mut tm = t_matrix(&pencil, lambda, opts.condition_limit)?;
        // M_t T M_t⁻¹: rows of u scale by t^{1/2}, rows of v by t^{-1/2};
        // columns of f by t^{-1/2}, columns of g by t^{1/2}
        for i in 0..2 * n {
            let r = if i < n { up } else { down };
            for j in 0..2 * n {
                let c = if j < n { down } else { up };
                tm[(i, j)] *= r * c;
            }
        }
        product = tm * product;
    }
    let mut weights = pencil.grid.weights.clone();
    weights.extend_from_slice(&pencil.grid.weights);
    Ok(DiscreteHs {
        matrix: product,
        weights,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsProducts {
    /// `⦀T_{α,t}T_{β,t}⦀`, summed in square over modes with multiplicity.
    pub double_norm: f64,
    /// `trace(T_{α,t}T_{β,t})` summed over modes with multiplicity.
    pub trace: Complex64,
    /// `⦀T_{α,t}⦀` per requested mode.
    pub alpha_norms: Vec<f64>,
}

/// Mode-summed double norm and trace of `T_{α,t} T_{β,t}`.
pub fn hs_products(
    field: &CoefficientField,
    sch: &SchemeConstants,
    t: f64,
    modes: &[u32],
    n: usize,
    opts: &GridOptions,
) -> Result<HsProducts> {
    let per_mode: Vec<Result<(f64, Complex64, f64)>> = modes
        .par_iter()
        .map(|&m| {
            let a = theta_product(field, m, n, sch, sch.alpha, t, opts)?;
            let b = theta_product(field, m, n, sch, sch.beta, t, opts)?;
            let ab = a.compose(&b);
            Ok((ab.double_norm(), ab.trace(), a.double_norm()))
        })
        .collect();
    let mut norm_sq = 0.0;
    let mut trace = Complex64::new(0.0, 0.0);
    let mut alpha_norms = Vec::with_capacity(modes.len());
    for (r, &m) in per_mode.into_iter().zip(modes) {
        let (nrm, tr, an) = r?;
        let mult = if m == 0 { 1.0 } else { 2.0 };
        norm_sq += mult * nrm * nrm;
        trace += tr * mult;
        alpha_norms.push(an);
    }
    Ok(HsProducts {
        double_norm: norm_sq.sqrt(),
        trace,
        alpha_norms,
    })
}

/// `c = (2π)^{-d} Σ_ℓ ∫_Ω ∫ dξ / ((Σ_ℓ⁻¹Aξ·ξ)^{2k+2} − i) dx` for a constant
/// isotropic field on the disk.
pub fn trace_constant(field: &CoefficientField, sch: &SchemeConstants) -> Result<Complex64> {
    let (a0, s1, s2) = field
        .constant_values()
        .ok_or_else(|| TeigError::InvalidArgument("trace constant needs constant coefficients".into()))?;
    let point = FrozenPoint::new(SpdMatrix::scalar(field.dim, a0), s1, s2)?;
    let volume = unit_ball_volume(field.dim) * field.radius.powi(field.dim as i32);
    Ok(trace_limit(&point, sch)? * volume)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_point() -> FrozenPoint {
        FrozenPoint::new(SpdMatrix::identity(2), 1.0, 1.0).unwrap()
    }

    #[test]
    fn scheme_constants() {
        let s = scheme(2, 1.0).unwrap();
        assert_eq!(s.k, 2);
        assert!((s.alpha - PI / 12.0).abs() < 1e-16);
        assert!((s.beta - 5.0 * PI / 12.0).abs() < 1e-15);
        assert_eq!(scheme(3, 1.0).unwrap().k, 2);
        assert_eq!(scheme(4, 1.0).unwrap().k, 3);
        for d in 2..8 {
            let s = scheme(d, 1.0).unwrap();
            let kp1 = (s.k + 1) as f64;
            let sum = Complex64::from_polar(1.0, s.alpha * kp1) + Complex64::from_polar(1.0, s.beta * kp1);
            assert!(sum.norm() < 1e-15);
            for (i, w) in s.omegas.iter().enumerate() {
                assert!((w.powi(s.k as i32 + 1) - 1.0).norm() < 1e-14);
                for v in &s.omegas[i + 1..] {
                    assert!((w - v).norm() > 0.5);
                }
            }
        }
        assert!(scheme(1, 1.0).is_err());
    }

    #[test]
    fn factorization_at_origin() {
        let s = scheme(2, 1.0).unwrap();
        let gap = product_factorization_check(&s, &unit_point(), 1, 1.0, &[0.0, 0.0]).unwrap();
        assert!(gap <= 1e-13, "{gap}");
    }

    #[test]
    fn z_zero_kernel_is_rejected() {
        let r = kernel_f(&unit_point(), 1, Complex64::new(4.0, 0.0), &[0.0, 0.0]);
        assert!(matches!(r, Err(TeigError::QuadratureNotConverged { .. })));
    }

    #[test]
    fn diagonal_modified_resolvent() {
        let s = scheme(2, 1.0).unwrap();
        let t = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.25, 0.0),
        ]));
        let gap = modified_resolvent_check(&t, 2.0, PI / 3.0, &s).unwrap();
        assert!(gap <= 1e-13, "{gap}");
    }

    #[test]
    fn singular_modified_resolvent_is_rejected() {
        let s = scheme(2, 1.0).unwrap();
        // T = 1/2: γ T³ = 1 when γ = 8, i.e. t = 2, θ̃ = 0
        let t = DMatrix::from_element(1, 1, Complex64::new(0.5, 0.0));
        assert!(matches!(
            modified_resolvent_check(&t, 2.0, 0.0, &s),
            Err(TeigError::NotInModifiedResolventSet { .. })
        ));
    }

    #[test]
    fn hs_of_identity_weights() {
        let h = DiscreteHs {
            matrix: DMatrix::identity(3, 3),
            weights: vec![1.0, 2.0, 3.0],
        };
        assert!((h.double_norm() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.trace(), Complex64::new(3.0, 0.0));
    }
}
