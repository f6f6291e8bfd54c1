//! Media: coefficient matrices, radial profiles, and the structural checks
//! every solver relies on.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, TeigError};

/// Default number of radial sample points used by [`validate`].
pub const DEFAULT_SAMPLES: usize = 512;

const SYMMETRY_TOL: f64 = 1e-14;

/// Real symmetric positive definite `d x d` matrix.
#[derive(Clone, PartialEq)]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
}

impl SpdMatrix {
    /// Checks symmetry (to `1e-14` relative) and positive definiteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if d < 2 || entries.ncols() != d {
            return Err(TeigError::InvalidArgument(format!(
                "coefficient matrix must be square with d >= 2, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let asym = asymmetry(&entries);
        if asym > SYMMETRY_TOL {
            return Err(TeigError::NonSymmetric {
                asymmetry: asym,
                at: f64::NAN,
            });
        }
        let m = Self { entries };
        if m.eigenvalues()[0] <= 0.0 {
            return Err(TeigError::NotPositiveDefinite);
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(TeigError::InvalidArgument("matrix rows have unequal length".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, s: f64) -> Self {
        assert!(dim >= 2 && s > 0.0);
        Self {
            entries: DMatrix::from_diagonal_element(dim, dim, s),
        }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn det(&self) -> f64 {
        self.entries.determinant()
    }

    /// `<A xi, xi>`.
    pub fn quad_form(&self, xi: &[f64]) -> f64 {
        let d = self.dim();
        assert_eq!(xi.len(), d);
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += self.entries[(i, j)] * xi[i] * xi[j];
            }
        }
        s
    }

    /// `c A` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0);
        Self {
            entries: &self.entries * c,
        }
    }

    /// `A^{-1/2}` via the eigen-decomposition.
    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.entries.clone());
        let d = eig
            .eigenvalues
            .map(|l| 1.0 / l.sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
    }

    /// `Some(s)` when the matrix is `s I`.
    pub fn as_scalar(&self) -> Option<f64> {
        let d = self.dim();
        let s = self.entries[(0, 0)];
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { s } else { 0.0 };
                if self.entries[(i, j)] != want {
                    return None;
                }
            }
        }
        Some(s)
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.entries[(i, j)]).collect())
            .collect();
        write!(f, "SpdMatrix({rows:?})")
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Scalar function of the radius.
#[derive(Clone)]
pub enum RadialProfile {
    Constant(f64),
    /// `Σ c_k r^k`.
    Polynomial(Vec<f64>),
    /// Piece `i` is `Σ c_k (r - breaks[i])^k` on `[breaks[i], breaks[i+1])`.
    Piecewise {
        breaks: Vec<f64>,
        pieces: Vec<Vec<f64>>,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl RadialProfile {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Polynomial(c) => horner(c, r),
            Self::Piecewise { breaks, pieces } => {
                // last piece extends to the right, first to the left
                let i = match breaks.iter().rposition(|&b| b <= r) {
                    Some(i) => i.min(pieces.len() - 1),
                    None => 0,
                };
                horner(&pieces[i], r - breaks[i])
            }
            Self::Custom(f) => f(r),
        }
    }

    /// Interior points where the profile may lose smoothness.
    pub fn breaks(&self) -> &[f64] {
        match self {
            Self::Piecewise { breaks, .. } => breaks,
            _ => &[],
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            Self::Polynomial(c) if c.iter().skip(1).all(|&x| x == 0.0) => {
                Some(c.first().copied().unwrap_or(0.0))
            }
            _ => None,
        }
    }

    fn from_json(v: &Value, what: &str) -> Result<Self> {
        let bad = || TeigError::Profile(format!("cannot read profile for {what}: {v}"));
        match v {
            Value::Number(n) => Ok(Self::Constant(n.as_f64().ok_or_else(bad)?)),
            Value::Array(a) => {
                let c: Option<Vec<f64>> = a.iter().map(Value::as_f64).collect();
                Ok(Self::Polynomial(c.ok_or_else(bad)?))
            }
            Value::Object(o) => {
                let breaks: Vec<f64> =
                    serde_json::from_value(o.get("breaks").cloned().ok_or_else(bad)?)
                        .map_err(|_| bad())?;
                let pieces: Vec<Vec<f64>> =
                    serde_json::from_value(o.get("pieces").cloned().ok_or_else(bad)?)
                        .map_err(|_| bad())?;
                if pieces.is_empty() || breaks.len() != pieces.len() {
                    return Err(TeigError::Profile(format!(
                        "{what}: piecewise profile needs one break per piece"
                    )));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(TeigError::Profile(format!("{what}: breaks must increase")));
                }
                Ok(Self::Piecewise { breaks, pieces })
            }
            _ => Err(bad()),
        }
    }

    fn to_json(&self) -> Option<Value> {
        match self {
            Self::Constant(c) => Some(Value::from(*c)),
            Self::Polynomial(c) => Some(Value::from(c.clone())),
            Self::Piecewise { breaks, pieces } => Some(serde_json::json!({
                "breaks": breaks,
                "pieces": pieces,
            })),
            Self::Custom(_) => None,
        }
    }
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Self::Piecewise { breaks, pieces } => {
                write!(f, "Piecewise {{ breaks: {breaks:?}, pieces: {pieces:?} }}")
            }
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl From<f64> for RadialProfile {
    fn from(c: f64) -> Self {
        Self::Constant(c)
    }
}

/// The principal coefficient. Radial mode solvers need `Isotropic`.
#[derive(Clone, Debug)]
pub enum Conductivity {
    /// `a(r) I`.
    Isotropic(RadialProfile),
    /// Constant anisotropic matrix.
    Matrix(SpdMatrix),
}

/// Radially symmetric medium on the ball of radius `R`. Both equations share
/// the single principal coefficient `a`.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub radius: f64,
    pub dim: usize,
    pub a: Conductivity,
    pub sigma1: RadialProfile,
    pub sigma2: RadialProfile,
    pub lambda_bound: f64,
    pub contrast_floor: f64,
}

impl CoefficientField {
    /// Constant isotropic medium `a = a0 I`, with `contrast_floor = 1/Λ`.
    pub fn constant(radius: f64, a0: f64, sigma1: f64, sigma2: f64, lambda_bound: f64) -> Self {
        Self {
            radius,
            dim: 2,
            a: Conductivity::Isotropic(RadialProfile::Constant(a0)),
            sigma1: sigma1.into(),
            sigma2: sigma2.into(),
            lambda_bound,
            contrast_floor: 1.0 / lambda_bound,
        }
    }

    pub fn sigma(&self, ell: usize, r: f64) -> f64 {
        match ell {
            1 => self.sigma1.eval(r),
            2 => self.sigma2.eval(r),
            _ => panic!("sigma index must be 1 or 2, got {ell}"),
        }
    }

    /// `A(r)` as a matrix.
    pub fn a_matrix(&self, r: f64) -> SpdMatrix {
        match &self.a {
            Conductivity::Isotropic(p) => {
                let v = p.eval(r);
                SpdMatrix {
                    entries: DMatrix::from_diagonal_element(self.dim, self.dim, v),
                }
            }
            Conductivity::Matrix(m) => m.clone(),
        }
    }

    /// Scalar `a(r)`; fails for anisotropic media.
    pub fn a_scalar(&self, r: f64) -> Result<f64> {
        match &self.a {
            Conductivity::Isotropic(p) => Ok(p.eval(r)),
            Conductivity::Matrix(m) => m.as_scalar().ok_or(TeigError::UnsupportedAnisotropy),
        }
    }

    /// `(a0, sigma1, sigma2)` when every coefficient is constant and isotropic.
    pub fn constant_values(&self) -> Option<(f64, f64, f64)> {
        let a0 = match &self.a {
            Conductivity::Isotropic(p) => p.as_constant()?,
            Conductivity::Matrix(m) => m.as_scalar()?,
        };
        Some((a0, self.sigma1.as_constant()?, self.sigma2.as_constant()?))
    }

    /// Parses a preset such as
    /// `{"R": 1.0, "a": "identity", "sigma1": 1.0, "sigma2": 4.0, "Lambda": 4.0}`.
    ///
    /// `a` may be `"identity"`, a number, a polynomial coefficient array,
    /// a piecewise object `{"breaks": [...], "pieces": [[...], ...]}`, or
    /// `{"matrix": [[...], ...]}` for a constant anisotropic matrix.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| TeigError::Profile(format!("invalid JSON: {e}")))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| TeigError::Profile("profile must be a JSON object".into()))?;
        let num = |key: &str| -> Result<Option<f64>> {
            match obj.get(key) {
                None => Ok(None),
                Some(x) => x
                    .as_f64()
                    .map(Some)
                    .ok_or_else(|| TeigError::Profile(format!("{key} must be a number"))),
            }
        };
        let radius = num("R")?.unwrap_or(1.0);
        let lambda_bound = num("Lambda")?
            .ok_or_else(|| TeigError::Profile("missing Lambda".into()))?;
        let dim = num("dim")?.map(|d| d as usize).unwrap_or(2);
        let contrast_floor = num("contrast_floor")?.unwrap_or(1.0 / lambda_bound);
        let sigma1 = RadialProfile::from_json(
            obj.get("sigma1").ok_or_else(|| TeigError::Profile("missing sigma1".into()))?,
            "sigma1",
        )?;
        let sigma2 = RadialProfile::from_json(
            obj.get("sigma2").ok_or_else(|| TeigError::Profile("missing sigma2".into()))?,
            "sigma2",
        )?;
        let a = match obj.get("a") {
            None => Conductivity::Isotropic(RadialProfile::Constant(1.0)),
            Some(Value::String(s)) if s == "identity" => {
                Conductivity::Isotropic(RadialProfile::Constant(1.0))
            }
            Some(Value::String(s)) => {
                return Err(TeigError::Profile(format!("unknown coefficient preset {s:?}")))
            }
            Some(Value::Object(o)) if o.contains_key("matrix") => {
                let rows: Vec<Vec<f64>> = serde_json::from_value(o["matrix"].clone())
                    .map_err(|e| TeigError::Profile(format!("a.matrix: {e}")))?;
                let m = SpdMatrix::from_rows(&rows)?;
                if m.dim() != dim {
                    return Err(TeigError::Profile(format!(
                        "a.matrix is {0}x{0} but dim is {dim}",
                        m.dim()
                    )));
                }
                Conductivity::Matrix(m)
            }
            Some(other) => Conductivity::Isotropic(RadialProfile::from_json(other, "a")?),
        };
        if !(radius > 0.0) || dim < 2 {
            return Err(TeigError::Profile("need R > 0 and dim >= 2".into()));
        }
        Ok(Self {
            radius,
            dim,
            a,
            sigma1,
            sigma2,
            lambda_bound,
            contrast_floor,
        })
    }

    /// JSON form; `None` when a profile is an opaque closure.
    pub fn to_json(&self) -> Option<Value> {
        let a = match &self.a {
            Conductivity::Isotropic(RadialProfile::Constant(c)) if *c == 1.0 => {
                Value::from("identity")
            }
            Conductivity::Isotropic(p) => p.to_json()?,
            Conductivity::Matrix(m) => {
                let rows: Vec<Vec<f64>> = (0..m.dim())
                    .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
                    .collect();
                serde_json::json!({ "matrix": rows })
            }
        };
        Some(serde_json::json!({
            "R": self.radius,
            "dim": self.dim,
            "a": a,
            "sigma1": self.sigma1.to_json()?,
            "sigma2": self.sigma2.to_json()?,
            "Lambda": self.lambda_bound,
            "contrast_floor": self.contrast_floor,
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Passed,
    Failed,
    /// Holds by construction.
    Structural,
    /// Assumed, not verified by sampling.
    Declared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: String,
    pub status: CheckStatus,
    /// Worst sampled value of the checked quantity.
    pub worst_value: f64,
    /// Radius at which `worst_value` occurred.
    pub worst_at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub checks: Vec<HypothesisCheck>,
    /// First violation found, if any.
    #[serde(skip)]
    pub violation: Option<TeigError>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

fn sample_radii(radius: f64, samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |i| radius * i as f64 / (samples - 1) as f64)
}

/// Evaluates every structural hypothesis on `samples` equispaced radii and
/// returns the full report, pass or fail.
pub fn inspect(field: &CoefficientField, samples: usize) -> Result<ValidationReport> {
    if samples < 2 {
        return Err(TeigError::InvalidArgument("validation needs at least 2 samples".into()));
    }
    let lam = field.lambda_bound;
    let lo = 1.0 / lam;
    let mut checks = Vec::new();
    let mut violation = None;

    let mut worst_sym = (0.0f64, 0.0f64);
    // (excursion, eigenvalue, radius) of the eigenvalue furthest outside [1/Λ, Λ]
    let mut worst_ell = (f64::NEG_INFINITY, 1.0f64, 0.0f64);
    for r in sample_radii(field.radius, samples) {
        let a = field.a_matrix(r);
        let s = asymmetry(a.entries());
        if s > worst_sym.0 || !s.is_finite() {
            worst_sym = (s, r);
        }
        let ev = a.eigenvalues();
        for e in [ev[0], ev[ev.len() - 1]] {
            let x = excursion(e, lo, lam);
            if x > worst_ell.0 {
                worst_ell = (x, e, r);
            }
        }
    }
    let sym_ok = worst_sym.0 <= SYMMETRY_TOL;
    checks.push(HypothesisCheck {
        hypothesis: "A symmetric".into(),
        status: status(sym_ok),
        worst_value: worst_sym.0,
        worst_at: worst_sym.1,
    });
    if !sym_ok && violation.is_none() {
        violation = Some(TeigError::NonSymmetric {
            asymmetry: worst_sym.0,
            at: worst_sym.1,
        });
    }
    let ell_ok = worst_ell.0 <= 0.0;
    checks.push(HypothesisCheck {
        hypothesis: "A uniformly elliptic: spectrum within [1/Lambda, Lambda]".into(),
        status: status(ell_ok),
        worst_value: worst_ell.1,
        worst_at: worst_ell.2,
    });
    if !ell_ok && violation.is_none() {
        violation = Some(TeigError::EllipticityViolation {
            quantity: "eigenvalue of A".into(),
            value: worst_ell.1,
            bound: lam,
            at: worst_ell.2,
        });
    }

    for ell in 1..=2 {
        let mut worst = (f64::NAN, 0.0f64);
        for r in sample_radii(field.radius, samples) {
            let s = field.sigma(ell, r);
            if worst.0.is_nan() || excursion(s, lo, lam) > excursion(worst.0, lo, lam) {
                worst = (s, r);
            }
        }
        let ok = excursion(worst.0, lo, lam) <= 0.0;
        checks.push(HypothesisCheck {
            hypothesis: format!("sigma{ell} within [1/Lambda, Lambda]"),
            status: status(ok),
            worst_value: worst.0,
            worst_at: worst.1,
        });
        if !ok && violation.is_none() {
            violation = Some(TeigError::EllipticityViolation {
                quantity: format!("sigma{ell}"),
                value: worst.0,
                bound: lam,
                at: worst.1,
            });
        }
    }

    checks.push(HypothesisCheck {
        hypothesis: "both equations share the principal coefficient A".into(),
        status: CheckStatus::Structural,
        worst_value: 0.0,
        worst_at: 0.0,
    });

    let contrast = (field.sigma1.eval(field.radius) - field.sigma2.eval(field.radius)).abs();
    let contrast_ok = contrast >= field.contrast_floor;
    checks.push(HypothesisCheck {
        hypothesis: "sigma1 != sigma2 on the boundary".into(),
        status: status(contrast_ok),
        worst_value: contrast,
        worst_at: field.radius,
    });
    if !contrast_ok && violation.is_none() {
        violation = Some(TeigError::ContrastViolation {
            contrast,
            floor: field.contrast_floor,
        });
    }

    checks.push(HypothesisCheck {
        hypothesis: "coefficient smoothness (C2 for A, C1 for sigma)".into(),
        status: CheckStatus::Declared,
        worst_value: max_second_difference(field, samples),
        worst_at: 0.0,
    });

    Ok(ValidationReport {
        samples,
        checks,
        violation,
    })
}

/// Like [`inspect`], but fails with the first violated hypothesis.
pub fn validate(field: &CoefficientField, samples: usize) -> Result<ValidationReport> {
    let report = inspect(field, samples)?;
    match &report.violation {
        Some(e) => Err(e.clone()),
        None => Ok(report),
    }
}

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    }
}

/// Positive when `x` lies outside `[lo, hi]`, measured on a log scale.
fn excursion(x: f64, lo: f64, hi: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::INFINITY;
    }
    (lo / x).ln().max((x / hi).ln())
}

/// Largest scaled second difference of the scalar coefficients; informational.
fn max_second_difference(field: &CoefficientField, samples: usize) -> f64 {
    let h = field.radius / (samples - 1) as f64;
    let mut worst = 0.0f64;
    let profiles: Vec<Box<dyn Fn(f64) -> f64 + '_>> = vec![
        Box::new(|r| field.sigma1.eval(r)),
        Box::new(|r| field.sigma2.eval(r)),
        Box::new(|r| field.a_matrix(r).get(0, 0)),
    ];
    for f in &profiles {
        for i in 1..samples - 1 {
            let r = i as f64 * h;
            let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
            worst = worst.max(d2.abs());
        }
    }
    worst
}

/// `|Im λ| >= γ |λ|`.
pub fn wedge_membership(lambda: Complex64, gamma: f64) -> Result<bool> {
    if lambda.norm() == 0.0 {
        return Err(TeigError::ZeroLambda);
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(TeigError::InvalidArgument(format!(
            "wedge parameter must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(lambda.im.abs() >= gamma * lambda.norm())
}
