//! Finite-difference discretisation of the coupled Cauchy system on one
//! angular mode of a radially symmetric medium:
//!
//! ```text
//! (1/r)(r a u')' − (m²/r²) a u − λΣ₁u − (Σ₁−Σ₂)v = Σ₁ f
//! (1/r)(r a v')' − (m²/r²) a v − λΣ₂v             = Σ₂ g
//! u(R) = 0,  a u'(R) = 0
//! ```
//!
//! on the staggered grid `r_j = (j − 1/2) R/N`. Both equations are
//! collocated at the first `N − 1` nodes; the two boundary rows for `u`
//! complete the square `2N` system, and `v` carries no boundary condition.
//! The companion system swaps `Σ₁` and `Σ₂` in the `λ` and right-hand-side
//! terms but keeps the coupling `(Σ₁−Σ₂)v`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banded::{BandLu, BandMatrix};
use crate::coeff::{wedge_membership, CoefficientField};
use crate::error::{Result, TeigError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Band shape of the interleaved `(u_j, v_j)` ordering.
const KL: usize = 5;
const KU: usize = 2;
const BACKWARD_ERROR_LIMIT: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub radius: f64,
    pub h: f64,
    pub nodes: Vec<f64>,
    /// Midpoint weights for `∫₀^R f(r) r dr`.
    pub weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if n < 4 || !(radius > 0.0) {
            return Err(TeigError::InvalidArgument(format!(
                "radial grid needs N >= 4 and R > 0, got N = {n}, R = {radius}"
            )));
        }
        let h = radius / n as f64;
        let nodes: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        let weights = nodes.iter().map(|r| r * h).collect();
        Ok(Self {
            radius,
            h,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// `Σ w_j a_j conj(b_j)`.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| x * y.conj() * *w)
            .sum()
    }

    pub fn l2_norm(&self, a: &[Complex64]) -> f64 {
        self.weights
            .iter()
            .zip(a)
            .map(|(w, x)| w * x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Second-order first derivative: central inside, one-sided at the ends.
    pub fn derivative(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        let h = self.h;
        (0..n)
            .map(|j| {
                if j == 0 {
                    (-u[0] * 3.0 + u[1] * 4.0 - u[2]) / (2.0 * h)
                } else if j == n - 1 {
                    (u[n - 1] * 3.0 - u[n - 2] * 4.0 + u[n - 3]) / (2.0 * h)
                } else {
                    (u[j + 1] - u[j - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// Second-order second derivative: central inside, one-sided at the ends.
    pub fn second_derivative(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        let h2 = self.h * self.h;
        (0..n)
            .map(|j| {
                if j == 0 {
                    (u[0] * 2.0 - u[1] * 5.0 + u[2] * 4.0 - u[3]) / h2
                } else if j == n - 1 {
                    (u[n - 1] * 2.0 - u[n - 2] * 5.0 + u[n - 3] * 4.0 - u[n - 4]) / h2
                } else {
                    (u[j + 1] - u[j] * 2.0 + u[j - 1]) / h2
                }
            })
            .collect()
    }
}

/// Which of the two Cauchy systems to discretise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    /// `−λΣ₁u` in the first equation, `−λΣ₂v` in the second.
    Direct,
    /// `−λΣ₂u` in the first equation, `−λΣ₁v` in the second.
    Companion,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridOptions {
    /// Wedge parameter for `apply_t`.
    pub gamma: f64,
    /// `apply_t` refuses `|λ|` below this.
    pub lambda_scan_floor: f64,
    /// Condition estimates above this raise `SingularSystem`.
    pub condition_limit: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            lambda_scan_floor: 10.0,
            condition_limit: 1e12,
        }
    }
}

fn u_index(j: usize) -> usize {
    2 * j
}

fn v_index(j: usize) -> usize {
    2 * j + 1
}

/// The matrix family `M(λ) = K − λ S` for one mode.
#[derive(Clone, Debug)]
pub struct ModePencil {
    pub grid: RadialGrid,
    pub mode: u32,
    pub formulation: Formulation,
    stiffness: BandMatrix,
    /// Diagonal of `S` in interleaved order (zero on boundary rows).
    mass: Vec<f64>,
    /// Right-hand-side weights on the `u` and `v` rows.
    rhs_u: Vec<f64>,
    rhs_v: Vec<f64>,
    /// Factors applied to the value and derivative rows to balance them
    /// against the interior rows.
    boundary_scale: [f64; 2],
}

impl ModePencil {
    pub fn new(field: &CoefficientField, mode: u32, n: usize, formulation: Formulation) -> Result<Self> {
        let grid = RadialGrid::new(field.radius, n)?;
        let h = grid.h;
        let m2 = (mode as f64).powi(2);
        let a_face = |k: usize| field.a_scalar(k as f64 * h);
        let mut stiffness = BandMatrix::zeros(2 * n, KL, KU);
        let mut mass = vec![0.0; 2 * n];
        let mut rhs_u = vec![0.0; n - 1];
        let mut rhs_v = vec![0.0; n - 1];
        for j in 0..n - 1 {
            let r = grid.nodes[j];
            let (s1, s2) = (field.sigma(1, r), field.sigma(2, r));
            // faces at r_{j∓1/2} = j h and (j+1) h
            let left = j as f64 * h * a_face(j)? / (r * h * h);
            let right = (j + 1) as f64 * h * a_face(j + 1)? / (r * h * h);
            let centre = -left - right - m2 * field.a_scalar(r)? / (r * r);
            for (row, idx) in [(u_index(j), u_index as fn(usize) -> usize), (v_index(j), v_index)] {
                stiffness.set(row, idx(j), Complex64::new(centre, 0.0));
                stiffness.set(row, idx(j + 1), Complex64::new(right, 0.0));
                if j > 0 {
                    stiffness.set(row, idx(j - 1), Complex64::new(left, 0.0));
                }
            }
            stiffness.set(u_index(j), v_index(j), Complex64::new(-(s1 - s2), 0.0));
            let (mu, mv) = match formulation {
                Formulation::Direct => (s1, s2),
                Formulation::Companion => (s2, s1),
            };
            mass[u_index(j)] = mu;
            mass[v_index(j)] = mv;
            rhs_u[j] = mu;
            rhs_v[j] = mv;
        }
        let last = n - 1;
        let a_r = field.a_scalar(field.radius)?;
        let boundary_scale = [1.0 / (h * h), 1.0 / h];
        let value_row = 2 * n - 2;
        let flux_row = 2 * n - 1;
        for (k, c) in [(last, 15.0 / 8.0), (last - 1, -10.0 / 8.0), (last - 2, 3.0 / 8.0)] {
            stiffness.set(value_row, u_index(k), Complex64::new(c * boundary_scale[0], 0.0));
        }
        for (k, c) in [(last, 2.0), (last - 1, -3.0), (last - 2, 1.0)] {
            stiffness.set(flux_row, u_index(k), Complex64::new(a_r * c / h * boundary_scale[1], 0.0));
        }
        Ok(Self {
            grid,
            mode,
            formulation,
            stiffness,
            mass,
            rhs_u,
            rhs_v,
            boundary_scale,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    /// `M(λ)` in the interleaved ordering.
    pub fn matrix(&self, lambda: Complex64) -> BandMatrix {
        let mut m = self.stiffness.clone();
        for (i, s) in self.mass.iter().enumerate() {
            if *s != 0.0 {
                m.add(i, i, -lambda * *s);
            }
        }
        m
    }

    /// `S` as a diagonal, interleaved ordering; `dM/dλ = −S`.
    pub fn mass_diagonal(&self) -> &[f64] {
        &self.mass
    }

    /// Right-hand side in interleaved order. Samples at the outermost node
    /// are not used: no interior equation sits there.
    pub fn rhs(&self, f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        assert!(f.len() == n && g.len() == n, "data must have one sample per node");
        let mut b = vec![ZERO; 2 * n];
        for j in 0..n - 1 {
            b[u_index(j)] = f[j] * self.rhs_u[j];
            b[v_index(j)] = g[j] * self.rhs_v[j];
        }
        b
    }

    pub fn interleave(u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        u.iter().zip(v).flat_map(|(a, b)| [*a, *b]).collect()
    }

    pub fn split(x: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        (x.iter().step_by(2).copied().collect(), x.iter().skip(1).step_by(2).copied().collect())
    }

    /// Factorises `M(λ)` and estimates its condition number.
    pub fn solver(&self, lambda: Complex64, condition_limit: f64) -> Result<ModeSolver> {
        let matrix = self.matrix(lambda);
        let lu = matrix.factor()?;
        let norm = matrix.norm_inf();
        // one inverse-power step from a fixed pseudo-random vector
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let y: Vec<Complex64> = (0..matrix.dim())
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let z = lu.solve(&y);
        let condition = norm * max_abs(&z);
        if !(condition <= condition_limit) {
            return Err(TeigError::SingularSystem { condition });
        }
        Ok(ModeSolver {
            matrix,
            lu,
            norm,
            condition,
        })
    }
}

fn max_abs(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// A factorised `M(λ)`.
#[derive(Clone, Debug)]
pub struct ModeSolver {
    matrix: BandMatrix,
    lu: BandLu,
    norm: f64,
    pub condition: f64,
}

impl ModeSolver {
    /// Solves `M x = b` and checks the normwise backward error, refining once
    /// if needed.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = self.lu.solve(b);
        for attempt in 0..2 {
            let mx = self.matrix.matvec(&x);
            let r: Vec<Complex64> = b.iter().zip(&mx).map(|(b, m)| b - m).collect();
            let eta = max_abs(&r) / (self.norm * max_abs(&x) + max_abs(b)).max(f64::MIN_POSITIVE);
            if eta <= BACKWARD_ERROR_LIMIT || max_abs(b) == 0.0 {
                return Ok(x);
            }
            if attempt == 1 {
                return Err(TeigError::AccuracyLoss {
                    context: "banded solve backward error".into(),
                    estimate: eta,
                });
            }
            let dx = self.lu.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        unreachable!()
    }

    pub fn lu(&self) -> &BandLu {
        &self.lu
    }
}

/// Row residuals of `M(λ)(u, v)`, in natural units.
#[derive(Clone, Debug, PartialEq)]
pub struct RowValues {
    /// First equation at nodes `1..N−1`.
    pub u_rows: Vec<Complex64>,
    /// Second equation at nodes `1..N−1`.
    pub v_rows: Vec<Complex64>,
    /// Extrapolated `u(R)` and `a u'(R)`.
    pub boundary: [Complex64; 2],
}

/// `M(λ)` for one mode together with the data needed to solve with it.
#[derive(Clone, Debug)]
pub struct ModeSystem {
    pub pencil: ModePencil,
    pub lambda: Complex64,
    pub matrix: BandMatrix,
}

impl ModeSystem {
    /// Rows of the two Cauchy conditions in the `u`-then-`v` ordering of
    /// [`ModeSystem::dense`].
    pub fn boundary_rows(&self) -> [usize; 2] {
        let n = self.pencil.n();
        [2 * n - 2, 2 * n - 1]
    }

    /// `M(λ)` as a dense matrix with unknowns `u` then `v` and rows: first
    /// equation, second equation, value row, derivative row.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.pencil.n();
        let row_map = |i: usize| -> usize {
            if i < n - 1 {
                u_index(i)
            } else if i < 2 * n - 2 {
                v_index(i - (n - 1))
            } else {
                i
            }
        };
        let col_map = |j: usize| if j < n { u_index(j) } else { v_index(j - n) };
        let sb = self.pencil.boundary_scale;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let v = self.matrix.get(row_map(i), col_map(j));
            match i {
                i if i == 2 * n - 2 => v / sb[0],
                i if i == 2 * n - 1 => v / sb[1],
                _ => v,
            }
        })
    }

    pub fn apply(&self, u: &[Complex64], v: &[Complex64]) -> RowValues {
        let n = self.pencil.n();
        let y = self.matrix.matvec(&ModePencil::interleave(u, v));
        let sb = self.pencil.boundary_scale;
        RowValues {
            u_rows: (0..n - 1).map(|j| y[u_index(j)]).collect(),
            v_rows: (0..n - 1).map(|j| y[v_index(j)]).collect(),
            boundary: [y[2 * n - 2] / sb[0], y[2 * n - 1] / sb[1]],
        }
    }

    pub fn rhs(&self, f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
        self.pencil.rhs(f, g)
    }
}

/// Assembles `M(λ)` for the direct system.
pub fn build_mode_system(field: &CoefficientField, mode: u32, lambda: Complex64, n: usize) -> Result<ModeSystem> {
    if n < 32 {
        return Err(TeigError::InvalidArgument(format!("mode system needs N >= 32, got {n}")));
    }
    let pencil = ModePencil::new(field, mode, n, Formulation::Direct)?;
    let matrix = pencil.matrix(lambda);
    Ok(ModeSystem { pencil, lambda, matrix })
}

fn check_scan_lambda(lambda: Complex64, opts: &GridOptions) -> Result<()> {
    if lambda.norm() < opts.lambda_scan_floor {
        return Err(TeigError::InvalidArgument(format!(
            "|lambda| = {} is below the scan floor {}",
            lambda.norm(),
            opts.lambda_scan_floor
        )));
    }
    if !wedge_membership(lambda, opts.gamma)? {
        return Err(TeigError::WedgeViolation {
            re: lambda.re,
            im: lambda.im,
            ratio: lambda.im.abs() / lambda.norm(),
            gamma: opts.gamma,
        });
    }
    Ok(())
}

/// `(u, v) = T_λ(f, g)` on one mode; `f`, `g` are node samples.
pub fn apply_t(
    field: &CoefficientField,
    mode: u32,
    lambda: Complex64,
    n: usize,
    f: &[Complex64],
    g: &[Complex64],
    opts: &GridOptions,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_scan_lambda(lambda, opts)?;
    let pencil = ModePencil::new(field, mode, n, Formulation::Direct)?;
    solve_pencil(&pencil, lambda, f, g, opts.condition_limit)
}

/// Solves with a prepared pencil, without the wedge and floor checks.
pub fn solve_pencil(
    pencil: &ModePencil,
    lambda: Complex64,
    f: &[Complex64],
    g: &[Complex64],
    condition_limit: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let solver = pencil.solver(lambda, condition_limit)?;
    let x = solver.solve(&pencil.rhs(f, g))?;
    Ok(ModePencil::split(&x))
}

/// Which operator stands on the right of the adjoint identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdjointPartner {
    /// `P T̃_{λ̄} P⁻¹`, the true adjoint.
    Companion,
    /// `P T_{λ̄} P⁻¹`: a deliberately wrong partner.
    SameSystem,
}

fn smooth_random(grid: &RadialGrid, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let coeffs: Vec<Complex64> = (0..4)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let w = std::f64::consts::PI / grid.radius;
    grid.sample(|r| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k as f64 * w * r).cos())
            .sum()
    })
}

/// Largest scaled gap in `⟨T_λ(f,g), (f*,g*)⟩ = ⟨(f,g), P T̃_{λ̄} P⁻¹ (f*,g*)⟩`
/// over `trials` random smooth pairs, with the `r dr` inner product.
pub fn adjoint_residual(
    field: &CoefficientField,
    mode: u32,
    lambda: Complex64,
    n: usize,
    trials: usize,
) -> Result<f64> {
    adjoint_residual_with(field, mode, lambda, n, trials, AdjointPartner::Companion, 0xad70)
}

pub fn adjoint_residual_with(
    field: &CoefficientField,
    mode: u32,
    lambda: Complex64,
    n: usize,
    trials: usize,
    partner: AdjointPartner,
    seed: u64,
) -> Result<f64> {
    let limit = GridOptions::default().condition_limit;
    let direct = ModePencil::new(field, mode, n, Formulation::Direct)?;
    let other = match partner {
        AdjointPartner::Companion => ModePencil::new(field, mode, n, Formulation::Companion)?,
        AdjointPartner::SameSystem => direct.clone(),
    };
    let grid = &direct.grid;
    let s1: Vec<f64> = grid.nodes.iter().map(|&r| field.sigma(1, r)).collect();
    let s2: Vec<f64> = grid.nodes.iter().map(|&r| field.sigma(2, r)).collect();
    let forward = direct.solver(lambda, limit)?;
    let backward = other.solver(lambda.conj(), limit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let f = smooth_random(grid, &mut rng);
        let g = smooth_random(grid, &mut rng);
        let fs = smooth_random(grid, &mut rng);
        let gs = smooth_random(grid, &mut rng);
        let (u, v) = ModePencil::split(&forward.solve(&direct.rhs(&f, &g))?);
        // P⁻¹(f*, g*) = (g*/Σ₂, f*/Σ₁)
        let pf: Vec<Complex64> = gs.iter().zip(&s2).map(|(x, s)| x / s).collect();
        let pg: Vec<Complex64> = fs.iter().zip(&s1).map(|(x, s)| x / s).collect();
        let (us, vs) = ModePencil::split(&backward.solve(&other.rhs(&pf, &pg))?);
        // P(u*, v*) = (Σ₁v*, Σ₂u*)
        let a: Vec<Complex64> = vs.iter().zip(&s1).map(|(x, s)| x * s).collect();
        let b: Vec<Complex64> = us.iter().zip(&s2).map(|(x, s)| x * s).collect();
        let lhs = grid.inner(&u, &fs) + grid.inner(&v, &gs);
        let rhs = grid.inner(&f, &a) + grid.inner(&g, &b);
        let pair = |x: &[Complex64], y: &[Complex64]| (grid.l2_norm(x).powi(2) + grid.l2_norm(y).powi(2)).sqrt();
        let scale = pair(&u, &v) * pair(&fs, &gs) + pair(&f, &g) * pair(&a, &b);
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).norm() / scale);
        }
    }
    Ok(worst)
}

/// Discrete `W^{order,2}_λ` norm of the mode function `u(r) e^{imθ}`:
/// `(Σ_j ‖ |λ|^{(order−j)/2} ∇^j u ‖²)^{1/2}` with the `r dr` weights.
pub fn lambda_norm(u: &[Complex64], lambda: Complex64, order: u32, mode: u32, grid: &RadialGrid) -> Result<f64> {
    if order > 2 {
        return Err(TeigError::InvalidArgument(format!("lambda norm order must be <= 2, got {order}")));
    }
    if u.len() != grid.len() {
        return Err(TeigError::InvalidArgument("samples do not match the grid".into()));
    }
    let lam = lambda.norm();
    let m = mode as f64;
    let r = &grid.nodes;
    let l2sq = |x: &[f64]| -> f64 { grid.weights.iter().zip(x).map(|(w, v)| w * v).sum() };
    let mut pieces = vec![l2sq(&u.iter().map(|x| x.norm_sqr()).collect::<Vec<_>>())];
    if order >= 1 {
        let du = grid.derivative(u);
        let grad: Vec<f64> = (0..u.len())
            .map(|j| du[j].norm_sqr() + (m * u[j] / r[j]).norm_sqr())
            .collect();
        pieces.push(l2sq(&grad));
        if order == 2 {
            let d2 = grid.second_derivative(u);
            let hess: Vec<f64> = (0..u.len())
                .map(|j| {
                    let ur = du[j] / r[j];
                    let u2 = u[j] / (r[j] * r[j]);
                    d2[j].norm_sqr() + 2.0 * m * m * (ur - u2).norm_sqr() + (ur - u2 * (m * m)).norm_sqr()
                })
                .collect();
            pieces.push(l2sq(&hess));
        }
    }
    let k = order as i32;
    Ok(pieces
        .iter()
        .enumerate()
        .map(|(j, p)| lam.powi(k - j as i32) * p)
        .sum::<f64>()
        .sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeynOptions {
    pub quad_points: usize,
    pub probe_columns: usize,
    /// Singular values above `keep · scale` count toward the rank.
    pub keep: f64,
    /// Singular values below `drop · scale` are noise.
    pub drop: f64,
    pub seed: u64,
}

impl Default for BeynOptions {
    fn default() -> Self {
        Self {
            quad_points: 64,
            probe_columns: 8,
            keep: 1e-8,
            drop: 1e-10,
            seed: 0xbe1,
        }
    }
}

/// An eigenvalue of `M(λ)` inside a contour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteEigenvalue {
    pub lambda: Complex64,
    pub order: u32,
}

/// Eigenvalues of `M(λ)` inside `contour`, by the contour-integral method
/// with moments `A_p = (1/2πi) ∮ z^p M(z)⁻¹ V dz`, followed by nonlinear
/// inverse iteration on each candidate.
pub fn nonlinear_eig(
    field: &CoefficientField,
    mode: u32,
    contour: Circle,
    n: usize,
    opts: &BeynOptions,
) -> Result<Vec<DiscreteEigenvalue>> {
    if !(contour.radius > 0.0) {
        return Ok(Vec::new());
    }
    let pencil = ModePencil::new(field, mode, n, Formulation::Direct)?;
    let mut columns = opts.probe_columns.max(1);
    let mut points = opts.quad_points.max(8);
    loop {
        match beyn_candidates(&pencil, contour, columns, points, opts)? {
            BeynOutcome::Saturated => columns *= 2,
            BeynOutcome::Ambiguous { keep, drop } => {
                if points >= 512 {
                    return Err(TeigError::RankTestAmbiguous {
                        sigma_keep: keep,
                        sigma_drop: drop,
                    });
                }
                points *= 2;
            }
            BeynOutcome::Found(cands) => return Ok(polish_and_group(&pencil, contour, cands)),
        }
        if columns > 2 * pencil.n() {
            return Err(TeigError::RankTestAmbiguous {
                sigma_keep: f64::NAN,
                sigma_drop: f64::NAN,
            });
        }
    }
}

enum BeynOutcome {
    Found(Vec<(Complex64, Vec<Complex64>)>),
    Saturated,
    Ambiguous { keep: f64, drop: f64 },
}

fn beyn_candidates(
    pencil: &ModePencil,
    contour: Circle,
    columns: usize,
    points: usize,
    opts: &BeynOptions,
) -> Result<BeynOutcome> {
    let dim = 2 * pencil.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probe = DMatrix::from_fn(dim, columns, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let mut a0 = DMatrix::<Complex64>::zeros(dim, columns);
    let mut a1 = DMatrix::<Complex64>::zeros(dim, columns);
    let mut scale = 0.0f64;
    for k in 0..points {
        let theta = std::f64::consts::TAU * (k as f64 + 0.5) / points as f64;
        let e = Complex64::from_polar(1.0, theta);
        let z = contour.center + e * contour.radius;
        // dz / (2πi) = ρ e^{iθ} dθ / 2π
        let w = e * contour.radius / points as f64;
        let lu = pencil.matrix(z).factor()?;
        let mut col_norm = 0.0;
        for c in 0..columns {
            let x = lu.solve(probe.column(c).as_slice());
            col_norm += x.iter().map(|v| v.norm_sqr()).sum::<f64>();
            for (i, xi) in x.into_iter().enumerate() {
                a0[(i, c)] += xi * w;
                a1[(i, c)] += xi * w * z;
            }
        }
        scale = scale.max(col_norm.sqrt() * contour.radius);
    }
    let svd = a0.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let rank = sv.iter().filter(|&&s| s > opts.keep * scale).count();
    let ambiguous: Vec<f64> = sv
        .iter()
        .copied()
        .filter(|&s| s <= opts.keep * scale && s >= opts.drop * scale)
        .collect();
    if let Some(&first) = ambiguous.first() {
        let keep = if rank > 0 { sv[rank - 1] } else { first };
        return Ok(BeynOutcome::Ambiguous {
            keep: keep / scale,
            drop: first / scale,
        });
    }
    if rank == 0 {
        return Ok(BeynOutcome::Found(Vec::new()));
    }
    if rank == columns {
        return Ok(BeynOutcome::Saturated);
    }
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^H");
    let u0 = DMatrix::from_fn(dim, rank, |i, j| u[(i, order[j])]);
    let w0 = DMatrix::from_fn(columns, rank, |i, j| vt[(order[j], i)].conj());
    let sinv = DMatrix::from_fn(rank, rank, |i, j| {
        if i == j {
            Complex64::new(1.0 / sv[i], 0.0)
        } else {
            ZERO
        }
    });
    let b = u0.adjoint() * &a1 * w0 * sinv;
    let eig = b.clone().eigen_pairs()?;
    Ok(BeynOutcome::Found(
        eig.into_iter()
            .map(|(l, s)| {
                let x = &u0 * s;
                (l, x.as_slice().to_vec())
            })
            .collect(),
    ))
}

trait EigenPairs {
    fn eigen_pairs(self) -> Result<Vec<(Complex64, DVector<Complex64>)>>;
}

impl EigenPairs for DMatrix<Complex64> {
    /// Eigenvalues from the Schur form; each eigenvector from the null space
    /// of `B − λI` via its smallest right singular vector.
    fn eigen_pairs(self) -> Result<Vec<(Complex64, DVector<Complex64>)>> {
        let k = self.nrows();
        let values = self
            .clone()
            .schur()
            .eigenvalues()
            .ok_or(TeigError::NonConvergence { re: f64::NAN, im: f64::NAN })?;
        let mut out = Vec::with_capacity(k);
        for l in values.iter() {
            let shifted = &self - DMatrix::from_diagonal_element(k, k, *l);
            let svd = shifted.svd(false, true);
            let vt = svd.v_t.expect("requested V^H");
            let (mut best, mut idx) = (f64::INFINITY, 0);
            for (i, s) in svd.singular_values.iter().enumerate() {
                if *s < best {
                    best = *s;
                    idx = i;
                }
            }
            let vec = DVector::from_fn(k, |i, _| vt[(idx, i)].conj());
            out.push((*l, vec));
        }
        Ok(out)
    }
}

/// Nonlinear inverse iteration: solve `M(λ_k) y = M'(λ_k) x_k`, update
/// `λ_{k+1} = λ_k − cᴴx_k / cᴴy`.
fn inverse_iteration(pencil: &ModePencil, start: Complex64, x0: &[Complex64]) -> Option<Complex64> {
    let c: Vec<Complex64> = x0.to_vec();
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let mut x = x0.to_vec();
    let nx = dot(&c, &x);
    if nx.norm() == 0.0 {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = start;
    for _ in 0..60 {
        let lu = pencil.matrix(lambda).factor().ok()?;
        let rhs: Vec<Complex64> = x.iter().zip(pencil.mass_diagonal()).map(|(v, s)| -v * *s).collect();
        let y = lu.solve(&rhs);
        let cy = dot(&c, &y);
        if cy.norm() == 0.0 || !cy.re.is_finite() {
            return Some(lambda);
        }
        let step = dot(&c, &x) / cy;
        lambda -= step;
        x = y.iter().map(|v| v / cy).collect();
        if step.norm() <= 1e-13 * lambda.norm().max(1.0) {
            return Some(lambda);
        }
    }
    Some(lambda)
}

fn polish_and_group(
    pencil: &ModePencil,
    contour: Circle,
    candidates: Vec<(Complex64, Vec<Complex64>)>,
) -> Vec<DiscreteEigenvalue> {
    let mut polished: Vec<Complex64> = Vec::new();
    for (l, x) in candidates {
        let refined = match inverse_iteration(pencil, l, &x) {
            Some(r) if (r - l).norm() <= 1e-3 * contour.radius.max(l.norm()) => r,
            _ => l,
        };
        if (refined - contour.center).norm() < contour.radius {
            polished.push(refined);
        }
    }
    polished.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<DiscreteEigenvalue> = Vec::new();
    for l in polished {
        if let Some(last) = out.last_mut() {
            if (last.lambda - l).norm() <= 1e-6 * l.norm().max(1.0) {
                last.order += 1;
                continue;
            }
        }
        out.push(DiscreteEigenvalue { lambda: l, order: 1 });
    }
    out
}
