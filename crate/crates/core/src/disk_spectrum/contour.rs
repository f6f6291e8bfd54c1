//! Argument-principle zero counting and localisation for entire functions
//! given in scaled form.
//!
//! Regions are annular sectors `{c + r e^{iθ} : r0 <= r <= r1, θ0 <= θ <= θ1}`
//! around a centre `c`. The winding number of the function along the region
//! boundary is accumulated edge by edge with adaptive phase tracking: an
//! interval is accepted once the principal phase increment across it, and
//! across both of its halves, stays below a quarter turn.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Result, TeigError};
use crate::specfun::ScaledComplex;

/// Smallest parameter step (relative to an edge) before the edge is declared
/// to pass through a zero.
const MIN_PARAM_STEP: f64 = 1e-12;
/// Maximum number of function evaluations along one edge.
const MAX_EDGE_EVALS: usize = 2_000_000;
const QUARTER_TURN: f64 = PI / 2.0;

/// Analytic function whose zeros are counted.
pub trait ContourFunction: Sync {
    fn eval(&self, z: Complex64) -> Result<ScaledComplex>;

    /// Value and first derivative.
    fn eval_with_derivative(&self, z: Complex64) -> Result<(ScaledComplex, ScaledComplex)>;

    /// Rough number of phase oscillations expected along the straight path
    /// from `a` to `b`; used to size the initial sampling.
    fn oscillation_estimate(&self, a: Complex64, b: Complex64) -> f64;
}

/// Polynomial with complex coefficients, lowest degree first. Used to test
/// the contour machinery on functions with known zeros.
#[derive(Clone, Debug)]
pub struct Polynomial(pub Vec<Complex64>);

impl ContourFunction for Polynomial {
    fn eval(&self, z: Complex64) -> Result<ScaledComplex> {
        Ok(self.eval_with_derivative(z)?.0)
    }

    fn eval_with_derivative(&self, z: Complex64) -> Result<(ScaledComplex, ScaledComplex)> {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        Ok((p.into(), dp.into()))
    }

    fn oscillation_estimate(&self, a: Complex64, b: Complex64) -> f64 {
        let deg = self.0.len().saturating_sub(1) as f64;
        deg * (b - a).norm() / (PI * a.norm().max(b.norm()).max(1.0))
    }
}

/// Annular sector around `center`; `theta1 - theta0 == 2π` denotes a full
/// annulus (or disk when `r0 == 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    pub center: Complex64,
    pub r0: f64,
    pub r1: f64,
    pub theta0: f64,
    pub theta1: f64,
}

impl Sector {
    pub fn disk(center: Complex64, radius: f64) -> Self {
        Self {
            center,
            r0: 0.0,
            r1: radius,
            theta0: -PI,
            theta1: PI,
        }
    }

    pub fn annulus(center: Complex64, r0: f64, r1: f64) -> Self {
        Self {
            center,
            r0,
            r1,
            theta0: -PI,
            theta1: PI,
        }
    }

    fn is_full(&self) -> bool {
        self.theta1 - self.theta0 >= TAU * (1.0 - 1e-15)
    }

    pub fn point(&self, r: f64, theta: f64) -> Complex64 {
        self.center + Complex64::from_polar(r, theta)
    }

    pub fn midpoint(&self) -> Complex64 {
        let r = if self.r0 == 0.0 && self.is_full() {
            0.0
        } else {
            0.5 * (self.r0 + self.r1)
        };
        self.point(r, 0.5 * (self.theta0 + self.theta1))
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        let d = z - self.center;
        let r = d.norm();
        if r < self.r0 * (1.0 - slack) || r > self.r1 * (1.0 + slack) {
            return false;
        }
        if self.is_full() || r == 0.0 {
            return true;
        }
        let span = self.theta1 - self.theta0;
        let mut th = d.arg();
        while th < self.theta0 - slack * span {
            th += TAU;
        }
        while th > self.theta1 + slack * span {
            th -= TAU;
        }
        th >= self.theta0 - slack * span && th <= self.theta1 + slack * span
    }

    fn edges(&self) -> Vec<Edge> {
        let c = self.center;
        let mut e = Vec::with_capacity(4);
        if self.is_full() {
            e.push(Edge::Arc {
                center: c,
                r: self.r1,
                theta0: self.theta0,
                theta1: self.theta1,
            });
            if self.r0 > 0.0 {
                e.push(Edge::Arc {
                    center: c,
                    r: self.r0,
                    theta0: self.theta1,
                    theta1: self.theta0,
                });
            }
            return e;
        }
        e.push(Edge::Ray {
            center: c,
            theta: self.theta0,
            r0: self.r0,
            r1: self.r1,
        });
        e.push(Edge::Arc {
            center: c,
            r: self.r1,
            theta0: self.theta0,
            theta1: self.theta1,
        });
        e.push(Edge::Ray {
            center: c,
            theta: self.theta1,
            r0: self.r1,
            r1: self.r0,
        });
        if self.r0 > 0.0 {
            e.push(Edge::Arc {
                center: c,
                r: self.r0,
                theta0: self.theta1,
                theta1: self.theta0,
            });
        }
        e
    }

    /// Splits radially at `frac` of the radial extent.
    fn split_radial(&self, frac: f64) -> (Self, Self) {
        let rm = self.r0 + frac * (self.r1 - self.r0);
        (Self { r1: rm, ..*self }, Self { r0: rm, ..*self })
    }

    fn split_angular(&self, frac: f64) -> (Self, Self) {
        if self.is_full() {
            // two half annuli with cuts away from the real axis
            let tc = self.theta0 + (frac - 0.25) * PI;
            return (
                Self {
                    theta0: tc,
                    theta1: tc + PI,
                    ..*self
                },
                Self {
                    theta0: tc + PI,
                    theta1: tc + TAU,
                    ..*self
                },
            );
        }
        let mut tm = self.theta0 + frac * (self.theta1 - self.theta0);
        // never cut along the real axis through the centre: real functions
        // hide even-order zeros there
        let off_axis = (tm / PI).round() * PI - tm;
        if off_axis.abs() < 1e-3 * (self.theta1 - self.theta0) {
            tm = self.theta0 + (frac - 0.07) * (self.theta1 - self.theta0);
        }
        (
            Self { theta1: tm, ..*self },
            Self { theta0: tm, ..*self },
        )
    }

    /// Diameter relative to the distance from the origin (at least 1).
    fn relative_size(&self) -> f64 {
        let span = (self.theta1 - self.theta0).min(PI);
        let d = (self.r1 - self.r0).max(self.r1 * span);
        d / (self.center.norm() + self.r1).max(1.0)
    }

    /// Radial and angular extents measured in the function's own
    /// oscillation units.
    fn extents(&self, f: &impl ContourFunction) -> (f64, f64) {
        let th = 0.5 * (self.theta0 + self.theta1);
        let radial = f.oscillation_estimate(self.point(self.r0.max(1e-300), th), self.point(self.r1, th));
        let span = (self.theta1 - self.theta0).min(PI);
        let angular = f.oscillation_estimate(
            self.point(self.r1, th - 0.5 * span),
            self.point(self.r1, th + 0.5 * span),
        ) * (self.theta1 - self.theta0) / span;
        (radial, angular)
    }
}

#[derive(Clone, Copy, Debug)]
enum Edge {
    Arc {
        center: Complex64,
        r: f64,
        theta0: f64,
        theta1: f64,
    },
    Ray {
        center: Complex64,
        theta: f64,
        r0: f64,
        r1: f64,
    },
}

impl Edge {
    fn at(&self, s: f64) -> Complex64 {
        match *self {
            Edge::Arc {
                center,
                r,
                theta0,
                theta1,
            } => center + Complex64::from_polar(r, theta0 + s * (theta1 - theta0)),
            Edge::Ray {
                center,
                theta,
                r0,
                r1,
            } => center + Complex64::from_polar(r0 + s * (r1 - r0), theta),
        }
    }

    fn radius_hint(&self) -> f64 {
        match *self {
            Edge::Arc { r, .. } => r,
            Edge::Ray { r0, r1, .. } => 0.5 * (r0 + r1),
        }
    }

    fn initial_samples(&self, f: &impl ContourFunction) -> usize {
        // oscillation estimate over a few chords, then a generous density
        let chords = match *self {
            Edge::Arc { theta0, theta1, .. } => ((theta1 - theta0).abs() / (PI / 8.0)).ceil().max(1.0) as usize,
            Edge::Ray { .. } => 1,
        };
        let mut osc = 0.0;
        for k in 0..chords {
            let a = self.at(k as f64 / chords as f64);
            let b = self.at((k + 1) as f64 / chords as f64);
            osc += f.oscillation_estimate(a, b);
        }
        (8.0 + 6.0 * osc).ceil().min(1e6) as usize
    }
}

fn wrap(delta: f64) -> f64 {
    let mut d = delta % TAU;
    if d > PI {
        d -= TAU;
    } else if d < -PI {
        d += TAU;
    }
    d
}

fn phase_of(f: &impl ContourFunction, z: Complex64, edge: &Edge) -> Result<f64> {
    let v = f.eval(z)?;
    if v.is_zero() {
        return Err(TeigError::ContourThroughZero {
            radius: edge.radius_hint(),
        });
    }
    if !v.is_finite() {
        return Err(TeigError::PhaseTrackingUnstable {
            context: format!("non-finite value at {z}"),
        });
    }
    Ok(v.arg())
}

/// Total continuous phase change of `f` along `edge`.
fn edge_phase_change(f: &impl ContourFunction, edge: &Edge) -> Result<f64> {
    let n = edge.initial_samples(f).max(4);
    let mut evals = 0usize;
    let mut total = 0.0;
    let mut s_prev = 0.0;
    let mut p_prev = phase_of(f, edge.at(0.0), edge)?;
    for k in 1..=n {
        let s = k as f64 / n as f64;
        let p = phase_of(f, edge.at(s), edge)?;
        total += interval_change(f, edge, s_prev, p_prev, s, p, &mut evals)?;
        s_prev = s;
        p_prev = p;
    }
    Ok(total)
}

fn interval_change(
    f: &impl ContourFunction,
    edge: &Edge,
    s0: f64,
    p0: f64,
    s1: f64,
    p1: f64,
    evals: &mut usize,
) -> Result<f64> {
    // explicit stack to avoid deep recursion near clustered zeros
    let mut stack = vec![(s0, p0, s1, p1)];
    let mut total = 0.0;
    while let Some((a, pa, b, pb)) = stack.pop() {
        let d = wrap(pb - pa);
        let m = 0.5 * (a + b);
        if b - a < MIN_PARAM_STEP {
            return Err(TeigError::ContourThroughZero {
                radius: edge.radius_hint(),
            });
        }
        *evals += 1;
        if *evals > MAX_EDGE_EVALS {
            return Err(TeigError::PhaseTrackingUnstable {
                context: format!("edge near radius {:.6e} needs too many samples", edge.radius_hint()),
            });
        }
        if d.abs() < QUARTER_TURN {
            let pm = phase_of(f, edge.at(m), edge)?;
            let d1 = wrap(pm - pa);
            let d2 = wrap(pb - pm);
            // halves consistent with the whole: accept
            if d1.abs() < QUARTER_TURN && d2.abs() < QUARTER_TURN && (d1 + d2 - d).abs() < 1e-6 {
                total += d;
                continue;
            }
            stack.push((m, pm, b, pb));
            stack.push((a, pa, m, pm));
        } else {
            let pm = phase_of(f, edge.at(m), edge)?;
            stack.push((m, pm, b, pb));
            stack.push((a, pa, m, pm));
        }
    }
    Ok(total)
}

/// Number of zeros (with multiplicity) inside `sector`.
pub fn count_in_sector(f: &impl ContourFunction, sector: &Sector) -> Result<i64> {
    let mut total = 0.0;
    for e in sector.edges() {
        total += edge_phase_change(f, &e)?;
    }
    let turns = total / TAU;
    let n = turns.round();
    if (turns - n).abs() > 0.05 {
        return Err(TeigError::PhaseTrackingUnstable {
            context: format!("winding {turns:.4} not an integer"),
        });
    }
    Ok(n as i64)
}

/// Winding count on `sector`, nudging the radii (by at most 0.1% in total,
/// five attempts) when a contour passes through a zero. Returns the count and
/// the sector actually used.
pub fn count_with_nudges(f: &impl ContourFunction, sector: &Sector) -> Result<(i64, Sector)> {
    let mut last = None;
    for attempt in 0..=5 {
        // factors 1, 1+2e-4, 1-2e-4, 1+4e-4, ...
        let k = ((attempt + 1) / 2) as f64;
        let sign = if attempt % 2 == 1 { 1.0 } else { -1.0 };
        let factor = 1.0 + sign * 2e-4 * k;
        let s = Sector {
            r0: sector.r0 * factor,
            r1: sector.r1 * factor,
            ..*sector
        };
        match count_in_sector(f, &s) {
            Ok(n) => return Ok((n, s)),
            Err(e @ TeigError::ContourThroughZero { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("loop ran"))
}

/// A located zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zero {
    pub z: Complex64,
    pub order: u32,
    /// Newton did not converge; `z` is the centre of the smallest isolating
    /// region instead.
    pub from_bisection: bool,
}

fn newton(f: &impl ContourFunction, start: Complex64, region: &Sector) -> Result<Option<Complex64>> {
    let mut z = start;
    let scale = region.r1.max(z.norm()).max(1.0);
    for _ in 0..60 {
        let (v, dv) = f.eval_with_derivative(z)?;
        if v.is_zero() {
            return Ok(Some(z));
        }
        if dv.is_zero() {
            return Ok(None);
        }
        let step = (v / dv).to_complex();
        if !(step.re.is_finite() && step.im.is_finite()) {
            return Ok(None);
        }
        // keep the iterate near its region
        let step = if step.norm() > 2.0 * (region.r1 - region.r0).max(region.r1 * 1e-3) + 1e-12 * scale {
            step * (2.0 * (region.r1 - region.r0).max(region.r1 * 1e-3) / step.norm())
        } else {
            step
        };
        z -= step;
        if step.norm() <= 1e-13 * z.norm().max(1e-300) {
            return Ok(Some(z));
        }
        // drifting away, e.g. towards the high-order zero at the origin:
        // leave it to subdivision
        if !region.contains(z, 0.5) {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Recursive isolation of zeros inside `sector` followed by Newton
/// refinement. `expected` is the known count in `sector`.
pub fn locate_in_sector(f: &impl ContourFunction, sector: &Sector, expected: i64) -> Result<Vec<Zero>> {
    let mut found = Vec::new();
    let mut work = vec![(*sector, expected, 0u32)];
    while let Some((region, count, depth)) = work.pop() {
        if count <= 0 {
            continue;
        }
        let (radial, angular) = region.extents(f);
        let size = region.relative_size();
        if count == 1 {
            let start = region.midpoint();
            if let Some(z) = newton(f, start, &region)? {
                if region.contains(z, 1e-9) {
                    found.push(Zero {
                        z,
                        order: 1,
                        from_bisection: false,
                    });
                    continue;
                }
            }
            if size < 1e-10 || depth > 200 {
                return Err(TeigError::NonConvergence {
                    re: start.re,
                    im: start.im,
                });
            }
        } else if size < 1e-7 {
            // several zeros in a tiny region: one multiple zero
            let z = refine_multiple(f, region.midpoint(), count as u32, &region)?;
            found.push(Zero {
                z,
                order: count as u32,
                from_bisection: true,
            });
            continue;
        }
        let split_radially = radial >= angular;
        let mut done = false;
        let mut last_err = None;
        for frac in [0.5, 0.43, 0.57, 0.37, 0.63, 0.31, 0.69] {
            let (a, b) = if split_radially {
                region.split_radial(frac)
            } else {
                region.split_angular(frac)
            };
            match count_in_sector(f, &a) {
                Ok(na) => {
                    let nb = count - na;
                    if na < 0 || nb < 0 {
                        last_err = Some(TeigError::PhaseTrackingUnstable {
                            context: format!("inconsistent sub-counts {na} + {nb} != {count}"),
                        });
                        continue;
                    }
                    work.push((b, nb, depth + 1));
                    work.push((a, na, depth + 1));
                    done = true;
                    break;
                }
                Err(e @ TeigError::ContourThroughZero { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        if !done {
            return Err(last_err.unwrap());
        }
    }
    Ok(found)
}

/// Modified Newton for a zero of known order.
fn refine_multiple(f: &impl ContourFunction, start: Complex64, order: u32, region: &Sector) -> Result<Complex64> {
    let mut z = start;
    for _ in 0..40 {
        let (v, dv) = f.eval_with_derivative(z)?;
        if v.is_zero() || dv.is_zero() {
            break;
        }
        let step = (v / dv).to_complex() * order as f64;
        if !(step.norm() < region.r1 - region.r0 + 1e-300) {
            break;
        }
        z -= step;
        if step.norm() <= 1e-13 * z.norm() {
            break;
        }
    }
    Ok(z)
}
