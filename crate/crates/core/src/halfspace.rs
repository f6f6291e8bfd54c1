//! Constant-coefficient half-space Cauchy problem, one tangential frequency
//! at a time.
//!
//! With frozen `A`, `Σ_ℓ` and tangential frequency `ξ'`, the tangential
//! Fourier transform of `div(A∇u_ℓ) − λΣ_ℓ u_ℓ = 0` in `{x_d > 0}` reduces to
//! `a û'' + 2ib û' − (c + λΣ_ℓ) û = 0`. The decaying solutions with jump
//! `û_1 − û_2 = φ̂` and zero conormal flux jump at `x_d = 0` are explicit;
//! this module evaluates them together with the associated multiplier
//! symbols.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeff::{wedge_membership, SpdMatrix};
use crate::error::{Result, TeigError};
use crate::weyl::least_squares_slope;

/// Agreement required between the two closed forms of the multiplier.
pub const MULTIPLIER_CROSS_CHECK: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct FrozenData {
    pub a: SpdMatrix,
    pub sigma1: f64,
    pub sigma2: f64,
    pub lambda: Complex64,
    /// Tangential frequency, length `d - 1`.
    pub xi_prime: Vec<f64>,
    /// Wedge aperture: `|Im λ| >= gamma |λ|` is required.
    pub gamma: f64,
    /// Ellipticity bound; `|Σ_1 − Σ_2| >= 1/Λ` is required.
    pub lambda_bound: f64,
}

impl FrozenData {
    pub fn new(a: SpdMatrix, sigma: (f64, f64), lambda: Complex64, xi_prime: Vec<f64>) -> Self {
        Self {
            a,
            sigma1: sigma.0,
            sigma2: sigma.1,
            lambda,
            xi_prime,
            gamma: 0.1,
            lambda_bound: 1e3,
        }
    }

    pub fn with_lambda(&self, lambda: Complex64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_xi_prime(&self, xi_prime: Vec<f64>) -> Self {
        Self {
            xi_prime,
            ..self.clone()
        }
    }

    pub fn sigma(&self, ell: usize) -> f64 {
        if ell == 1 {
            self.sigma1
        } else {
            self.sigma2
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfSpaceSymbol {
    /// `<A e_d, e_d>`.
    pub a: f64,
    /// `Σ_j A_{jd} ξ'_j`.
    pub b: f64,
    /// `Σ_{ij} A_{ij} ξ'_i ξ'_j` over tangential indices.
    pub c: f64,
    pub delta1: Complex64,
    pub delta2: Complex64,
    /// Principal square roots (positive real part).
    pub sqrt_delta1: Complex64,
    pub sqrt_delta2: Complex64,
    pub eta1: Complex64,
    pub eta2: Complex64,
    /// `a c − b²`, nonnegative by positive definiteness of `A`.
    pub discriminant_positivity: f64,
    pub lambda: Complex64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl HalfSpaceSymbol {
    pub fn delta(&self, ell: usize) -> Complex64 {
        if ell == 1 {
            self.delta1
        } else {
            self.delta2
        }
    }

    pub fn sqrt_delta(&self, ell: usize) -> Complex64 {
        if ell == 1 {
            self.sqrt_delta1
        } else {
            self.sqrt_delta2
        }
    }

    pub fn eta(&self, ell: usize) -> Complex64 {
        if ell == 1 {
            self.eta1
        } else {
            self.eta2
        }
    }

    pub fn sigma(&self, ell: usize) -> f64 {
        if ell == 1 {
            self.sigma1
        } else {
            self.sigma2
        }
    }

    /// Boundary amplitudes `(α_1, α_2)` with `α_ℓ = φ̂ √Δ_{ℓ+1} / (√Δ_2 − √Δ_1)`,
    /// indices taken cyclically.
    pub fn amplitudes(&self, phi_hat: Complex64) -> (Complex64, Complex64) {
        let denom = self.sqrt_delta2 - self.sqrt_delta1;
        (
            phi_hat * self.sqrt_delta2 / denom,
            phi_hat * self.sqrt_delta1 / denom,
        )
    }

    /// Residual of the characteristic equation `a η² + 2ib η − (c + λΣ_ℓ)`,
    /// relative to the size of its terms.
    pub fn characteristic_residual(&self, ell: usize) -> f64 {
        let eta = self.eta(ell);
        let ib = Complex64::new(0.0, self.b);
        let rhs = self.c + self.lambda * self.sigma(ell);
        let r = self.a * eta * eta + 2.0 * ib * eta - rhs;
        let scale = (self.a * eta * eta).norm() + (2.0 * ib * eta).norm() + rhs.norm();
        r.norm() / scale
    }
}

fn check_data(data: &FrozenData) -> Result<()> {
    if data.xi_prime.len() + 1 != data.a.dim() {
        return Err(TeigError::InvalidArgument(format!(
            "tangential frequency has length {}, expected {}",
            data.xi_prime.len(),
            data.a.dim() - 1
        )));
    }
    if data.lambda.norm() < 1.0 {
        return Err(TeigError::InvalidArgument(format!(
            "|lambda| must be at least 1, got {}",
            data.lambda.norm()
        )));
    }
    if !wedge_membership(data.lambda, data.gamma)? {
        return Err(TeigError::WedgeViolation {
            re: data.lambda.re,
            im: data.lambda.im,
            ratio: data.lambda.im.abs() / data.lambda.norm(),
            gamma: data.gamma,
        });
    }
    if !((data.sigma1 - data.sigma2).abs() >= 1.0 / data.lambda_bound) {
        return Err(TeigError::DegenerateContrast);
    }
    Ok(())
}

/// Computes `a, b, c`, the discriminants `Δ_ℓ = −b² + a(c + λΣ_ℓ)` and the
/// decay rates `η_ℓ = (−ib − √Δ_ℓ)/a`.
pub fn build_symbol(data: &FrozenData) -> Result<HalfSpaceSymbol> {
    check_data(data)?;
    let d = data.a.dim();
    let n = d - 1;
    let xi = &data.xi_prime;
    let a = data.a.get(n, n);
    let b: f64 = (0..n).map(|j| data.a.get(j, n) * xi[j]).sum();
    let mut c = 0.0;
    for i in 0..n {
        for j in 0..n {
            c += data.a.get(i, j) * xi[i] * xi[j];
        }
    }
    let lam = data.lambda;
    let delta = |s: f64| -> Complex64 { -b * b + a * (c + lam * s) };
    let delta1 = delta(data.sigma1);
    let delta2 = delta(data.sigma2);
    for dl in [delta1, delta2] {
        if dl.im == 0.0 && dl.re <= 0.0 {
            return Err(TeigError::WedgeViolation {
                re: lam.re,
                im: lam.im,
                ratio: lam.im.abs() / lam.norm(),
                gamma: data.gamma,
            });
        }
    }
    let sqrt_delta1 = delta1.sqrt();
    let sqrt_delta2 = delta2.sqrt();
    let ib = Complex64::new(0.0, b);
    let eta1 = (-ib - sqrt_delta1) / a;
    let eta2 = (-ib - sqrt_delta2) / a;
    Ok(HalfSpaceSymbol {
        a,
        b,
        c,
        delta1,
        delta2,
        sqrt_delta1,
        sqrt_delta2,
        eta1,
        eta2,
        discriminant_positivity: (a * c - b * b).max(0.0),
        lambda: lam,
        sigma1: data.sigma1,
        sigma2: data.sigma2,
    })
}

/// `(û_1, û_2)(t) = (α_1 e^{η_1 t}, α_2 e^{η_2 t})`.
pub fn mode_solution(sym: &HalfSpaceSymbol, phi_hat: Complex64, t: f64) -> Result<(Complex64, Complex64)> {
    if !(t >= 0.0) {
        return Err(TeigError::InvalidArgument(format!("normal variable must be >= 0, got {t}")));
    }
    if sym.sqrt_delta1 == sym.sqrt_delta2 {
        return Err(TeigError::DegenerateContrast);
    }
    let (a1, a2) = sym.amplitudes(phi_hat);
    Ok((a1 * (sym.eta1 * t).exp(), a2 * (sym.eta2 * t).exp()))
}

/// Conormal flux of `û_1 − û_2` at the boundary:
/// `a(α_1η_1 − α_2η_2) + ib(α_1 − α_2)`.
pub fn flux_residual(sym: &HalfSpaceSymbol, phi_hat: Complex64) -> Complex64 {
    let (a1, a2) = sym.amplitudes(phi_hat);
    sym.a * (a1 * sym.eta1 - a2 * sym.eta2) + Complex64::new(0.0, sym.b) * (a1 - a2)
}

/// `m_ℓ = √Δ_{ℓ+1} / (η_ℓ² (√Δ_2 − √Δ_1))`.
pub fn multiplier_direct(sym: &HalfSpaceSymbol, ell: usize) -> Complex64 {
    let other = sym.sqrt_delta(3 - ell);
    let eta = sym.eta(ell);
    other / (eta * eta * (sym.sqrt_delta2 - sym.sqrt_delta1))
}

/// Same symbol with the square-root differences rationalised:
/// `√Δ_{ℓ+1}(√Δ_1 + √Δ_2)(ib − √Δ_ℓ)² / (aλ(Σ_2 − Σ_1)(c + λΣ_ℓ)²)`.
pub fn multiplier_expanded(sym: &HalfSpaceSymbol, ell: usize) -> Complex64 {
    let other = sym.sqrt_delta(3 - ell);
    let own = sym.sqrt_delta(ell);
    let ib = Complex64::new(0.0, sym.b);
    let q = sym.c + sym.lambda * sym.sigma(ell);
    let num = other * (sym.sqrt_delta1 + sym.sqrt_delta2) * (ib - own) * (ib - own);
    let den = sym.a * sym.lambda * (sym.sigma2 - sym.sigma1) * q * q;
    num / den
}

/// Multiplier `m_{ℓ,λ}(ξ)` for `ℓ ∈ {1, 2}`. It depends on `ξ'` only; the
/// normal frequency `xi_d` is accepted for the full-symbol signature.
pub fn multiplier(data: &FrozenData, xi_d: f64, ell: usize) -> Result<Complex64> {
    if !(ell == 1 || ell == 2) {
        return Err(TeigError::InvalidArgument(format!("ell must be 1 or 2, got {ell}")));
    }
    if !xi_d.is_finite() {
        return Err(TeigError::InvalidArgument("normal frequency must be finite".into()));
    }
    let sym = build_symbol(data)?;
    if sym.sqrt_delta1 == sym.sqrt_delta2 {
        return Err(TeigError::DegenerateContrast);
    }
    let m1 = multiplier_direct(&sym, ell);
    let m2 = multiplier_expanded(&sym, ell);
    let gap = (m1 - m2).norm() / m1.norm();
    if gap > MULTIPLIER_CROSS_CHECK {
        return Err(TeigError::AccuracyLoss {
            context: format!("multiplier closed forms at xi' = {:?}", data.xi_prime),
            estimate: gap,
        });
    }
    Ok(m1)
}

/// Largest `|λ| |ξ| |∇ m_ℓ(ξ)|` over a tensor grid `[-extent, extent]^d`
/// with `points` nodes per axis, by central differences at relative step `1e-4`.
pub fn gradient_bound_sample(data: &FrozenData, ell: usize, extent: f64, points: usize) -> Result<f64> {
    let d = data.a.dim();
    assert!(points >= 2);
    let nodes: Vec<f64> = (0..points)
        .map(|i| -extent + 2.0 * extent * i as f64 / (points - 1) as f64)
        .collect();
    let total = points.pow(d as u32);
    let mut worst = 0.0f64;
    let mut xi = vec![0.0; d];
    for flat in 0..total {
        let mut k = flat;
        for x in xi.iter_mut() {
            *x = nodes[k % points];
            k /= points;
        }
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let h = 1e-4 * norm;
        let eval = |p: &[f64]| multiplier(&data.with_xi_prime(p[..d - 1].to_vec()), p[d - 1], ell);
        let mut grad2 = 0.0;
        for axis in 0..d {
            let mut plus = xi.clone();
            let mut minus = xi.clone();
            plus[axis] += h;
            minus[axis] -= h;
            let g = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
            grad2 += g.norm_sqr();
        }
        worst = worst.max(data.lambda.norm() * norm * grad2.sqrt());
    }
    Ok(worst)
}

/// Worst residuals of the half-space identities over a random sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteResiduals {
    pub samples: usize,
    /// `|û_1(0) − û_2(0) − φ̂|`, relative to `max(|α_1| + |α_2|, |φ̂|)`.
    pub jump: f64,
    /// [`flux_residual`] relative to the sum of the magnitudes of its terms.
    pub flux: f64,
    pub characteristic: f64,
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Result<SpdMatrix> {
    // B Bᵀ + 0.3 I
    let b = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    SpdMatrix::new(&b * b.transpose() + DMatrix::identity(d, d) * 0.3)
}

/// `|λ| ∈ [1, 10⁴]` log-uniform with `|Im λ| >= 0.15 |λ|`.
fn random_wedge_lambda(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = 10f64.powf(rng.gen_range(0.0..4.0));
    let lo = 0.15f64.asin();
    let phi = rng.gen_range(lo..std::f64::consts::PI - lo);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    Complex64::from_polar(r, sign * phi)
}

/// Jump, flux and characteristic-equation residuals on `samples` random
/// frozen problems (`d ∈ {2, 3}`, random SPD `A`, contrasting `Σ`, `ξ'`,
/// boundary datum and wedge `λ`).
pub fn identity_suite(samples: usize, seed: u64) -> Result<SuiteResiduals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteResiduals {
        samples,
        jump: 0.0,
        flux: 0.0,
        characteristic: 0.0,
    };
    for _ in 0..samples {
        let d = rng.gen_range(2..=3);
        let a = random_spd(&mut rng, d)?;
        let s1 = rng.gen_range(0.5..2.0);
        let s2 = s1 + rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -0.1 };
        let xi: Vec<f64> = (0..d - 1).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let data = FrozenData::new(a, (s1, s2), random_wedge_lambda(&mut rng), xi);
        let sym = build_symbol(&data)?;
        let phi = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (u1, u2) = mode_solution(&sym, phi, 0.0)?;
        let (a1, a2) = sym.amplitudes(phi);
        // relative to the size of the terms that cancel
        out.jump = out.jump.max((u1 - u2 - phi).norm() / (a1.norm() + a2.norm()).max(phi.norm()));
        let scale = (sym.a * a1 * sym.eta1).norm() + (sym.a * a2 * sym.eta2).norm() + sym.b.abs() * (a1.norm() + a2.norm());
        out.flux = out.flux.max(flux_residual(&sym, phi).norm() / scale);
        out.characteristic = out
            .characteristic
            .max(sym.characteristic_residual(1))
            .max(sym.characteristic_residual(2));
    }
    Ok(out)
}

/// Log-log slopes of `|m_ℓ|` against `t` along `λ = i t`, for `ℓ = 1, 2`.
pub fn multiplier_slopes(data: &FrozenData, ts: &[f64]) -> Result<[f64; 2]> {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let mut out = [0.0; 2];
    for ell in [1usize, 2] {
        let ly = ts
            .iter()
            .map(|&t| multiplier(&data.with_lambda(Complex64::new(0.0, t)), 0.0, ell).map(|m| m.norm().ln()))
            .collect::<Result<Vec<f64>>>()?;
        out[ell - 1] = least_squares_slope(&lx, &ly);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_data(sigma: (f64, f64), lambda: Complex64) -> FrozenData {
        FrozenData::new(SpdMatrix::identity(2), sigma, lambda, vec![0.0])
    }

    #[test]
    fn isotropic_symbol_at_zero_frequency() {
        let s = build_symbol(&unit_data((1.0, 2.0), c(0.0, 1.0))).unwrap();
        assert_eq!((s.a, s.b, s.c), (1.0, 0.0, 0.0));
        assert_eq!(s.delta1, c(0.0, 1.0));
        let e = Complex64::from_polar(1.0, FRAC_PI_4);
        assert!((s.eta1 + e).norm() < 1e-15);
        assert_eq!(s.delta2, c(0.0, 2.0));
        assert!((s.eta2 + e * 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn anisotropic_symbol_by_substitution() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let data = FrozenData::new(a, (1.0, 2.0), c(0.0, 10.0), vec![1.0]);
        let s = build_symbol(&data).unwrap();
        assert_eq!((s.a, s.b, s.c), (3.0, 1.0, 2.0));
        for (ell, sig) in [(1, 1.0), (2, 2.0)] {
            let want = -1.0 + 3.0 * (2.0 + c(0.0, 10.0) * sig);
            assert!((s.delta(ell) - want).norm() < 1e-13);
        }
        assert_eq!(s.discriminant_positivity, 5.0);
    }

    #[test]
    fn wedge_and_contrast_are_enforced() {
        let mut d = unit_data((1.0, 2.0), c(10.0, 1.0));
        assert!(matches!(build_symbol(&d), Err(TeigError::WedgeViolation { .. })));
        d.lambda = c(0.0, 10.0);
        d.sigma2 = 1.0;
        assert_eq!(build_symbol(&d), Err(TeigError::DegenerateContrast));
    }

    #[test]
    fn boundary_jump_at_zero_frequency() {
        let s = build_symbol(&unit_data((1.0, 2.0), c(0.0, 1.0))).unwrap();
        let (u1, u2) = mode_solution(&s, c(1.0, 0.0), 0.0).unwrap();
        assert!((u1 - u2 - 1.0).norm() < 1e-15);
        assert_eq!(mode_solution(&s, c(0.0, 0.0), 3.0).unwrap(), (c(0.0, 0.0), c(0.0, 0.0)));
        assert!(flux_residual(&s, c(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(flux_residual(&s, c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn multiplier_at_zero_frequency() {
        // Δ_1 = i, Δ_2 = 2i, η_1² = i: m_1 = √(2i) / (i (√(2i) − √i)) = 1 / (i (1 − 1/√2))
        let m = multiplier(&unit_data((1.0, 2.0), c(0.0, 1.0)), 0.0, 1).unwrap();
        let want = 1.0 / (c(0.0, 1.0) * (1.0 - FRAC_1_SQRT_2));
        assert!((m - want).norm() < 1e-14 * want.norm());
    }

    /// RK4 with Richardson extrapolation for a û'' + 2ib û' − q û = 0.
    fn integrate(s: &HalfSpaceSymbol, ell: usize, u0: Complex64, du0: Complex64, t: f64) -> Complex64 {
        let q = s.c + s.lambda * s.sigma(ell);
        let ib = c(0.0, s.b);
        let f = |y: [Complex64; 2]| [y[1], (q * y[0] - 2.0 * ib * y[1]) / s.a];
        let run = |steps: usize| {
            let h = t / steps as f64;
            let mut y = [u0, du0];
            for _ in 0..steps {
                let k1 = f(y);
                let k2 = f([y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)]);
                let k3 = f([y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0)]);
                let k4 = f([y[0] + k3[0] * h, y[1] + k3[1] * h]);
                for i in 0..2 {
                    y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
                }
            }
            y[0]
        };
        let coarse = run(2000);
        let fine = run(4000);
        fine + (fine - coarse) / 15.0
    }

    #[test]
    fn mode_solution_matches_ode_integration() {
        let s = build_symbol(&unit_data((1.0, 2.0), c(0.0, 1.0))).unwrap();
        let phi = c(1.0, 0.0);
        let (a1, a2) = s.amplitudes(phi);
        let (u1, u2) = mode_solution(&s, phi, 1.0).unwrap();
        let o1 = integrate(&s, 1, a1, a1 * s.eta1, 1.0);
        let o2 = integrate(&s, 2, a2, a2 * s.eta2, 1.0);
        assert!((u1 - o1).norm() < 1e-8 * o1.norm(), "{u1} vs {o1}");
        assert!((u2 - o2).norm() < 1e-8 * o2.norm(), "{u2} vs {o2}");

        // anisotropic, nonzero frequency
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.5]]).unwrap();
        let data = FrozenData::new(a, (1.0, 3.0), c(-2.0, 5.0), vec![0.7]);
        let s = build_symbol(&data).unwrap();
        let (a1, a2) = s.amplitudes(phi);
        let (u1, u2) = mode_solution(&s, phi, 1.0).unwrap();
        let o1 = integrate(&s, 1, a1, a1 * s.eta1, 1.0);
        let o2 = integrate(&s, 2, a2, a2 * s.eta2, 1.0);
        assert!((u1 - o1).norm() < 1e-8 * o1.norm().max(1e-3));
        assert!((u2 - o2).norm() < 1e-8 * o2.norm().max(1e-3));
    }

    #[test]
    fn multiplier_sup_is_order_inverse_lambda() {
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
        let sup = |lam: f64| {
            let base = unit_data((1.0, 2.0), c(0.0, lam));
            let mut s = 0.0f64;
            for &x in &grid {
                for &y in &grid {
                    let m = multiplier(&base.with_xi_prime(vec![x]), y, 1).unwrap();
                    s = s.max(lam * m.norm());
                }
            }
            s
        };
        let s10 = sup(10.0);
        let s100 = sup(100.0);
        assert!(s100.is_finite() && s100 <= 2.0 * s10, "{s10} {s100}");
    }

    #[test]
    fn three_dimensional_smoke() {
        let a = SpdMatrix::from_rows(&[
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.5, 0.2],
            vec![0.1, 0.2, 1.0],
        ])
        .unwrap();
        let data = FrozenData::new(a, (1.0, 2.5), c(1.0, 30.0), vec![0.4, -1.2]);
        let s = build_symbol(&data).unwrap();
        assert!(s.eta1.re < 0.0 && s.eta2.re < 0.0);
        assert!(s.discriminant_positivity > 0.0);
        let phi = c(0.3, -0.8);
        let (a1, a2) = s.amplitudes(phi);
        assert!((a1 - a2 - phi).norm() < 1e-14);
        let flux = flux_residual(&s, phi);
        assert!(flux.norm() <= 1e-12 * ((a1 * s.eta1).norm() + (a2 * s.eta2).norm()));
        for ell in 1..=2 {
            assert!(multiplier(&data, 0.0, ell).is_ok());
            assert!(s.characteristic_residual(ell) < 1e-14);
        }
        assert!(gradient_bound_sample(&data, 1, 4.0, 5).unwrap().is_finite());
    }
}
