//! Integer-order Bessel functions of the first kind for complex argument.
//!
//! Small arguments (or orders large enough that the series terms decrease
//! monotonically) use the power series of the entire normalisation
//! `j_m(w) = J_m(sqrt w) / sqrt(w)^m`. Everything else goes through Miller's
//! backward recurrence, seeded with the continued fraction for
//! `J_n / J_{n-1}` and normalised with the Jacobi–Anger sum
//! `e^{∓iz} = J_0 + 2 Σ (∓i)^k J_k`, picking the sign that keeps the sum free
//! of cancellation. All intermediates carry a shared binary exponent.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::scaled::{exp2i, ScaledComplex};
use crate::error::{Result, TeigError};

/// Relative disagreement between the two truncation levels above which a
/// value is rejected.
pub const ACCURACY_THRESHOLD: f64 = 1e-9;

/// Below this |z| the series is used unconditionally.
const SERIES_RADIUS: f64 = 12.0;

/// Largest order with a cached `1/(2^m m!)` prefactor.
const PREFACTOR_CACHE: usize = 4096;

const RESCALE_BITS: i32 = 500;

/// `j_m(w)` and `j_{m+1}(w)` for the entire normalisation
/// `J_m(z) = z^m j_m(z^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntireBesselPair {
    pub order: u32,
    pub value: ScaledComplex,
    pub next: ScaledComplex,
}

fn prefactors() -> &'static [ScaledComplex] {
    static TABLE: OnceLock<Vec<ScaledComplex>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(PREFACTOR_CACHE + 1);
        let mut p = ScaledComplex::ONE;
        out.push(p);
        for k in 1..=PREFACTOR_CACHE {
            p = p.scale(Complex64::new(1.0 / (2.0 * k as f64), 0.0));
            out.push(p);
        }
        out
    })
}

/// `1 / (2^m m!)`.
fn series_prefactor(m: u32) -> ScaledComplex {
    let table = prefactors();
    if (m as usize) < table.len() {
        return table[m as usize];
    }
    let mut p = table[table.len() - 1];
    for k in table.len()..=m as usize {
        p = p.scale(Complex64::new(1.0 / (2.0 * k as f64), 0.0));
    }
    p
}

/// `e^z` without overflow.
pub(crate) fn scaled_exp(z: Complex64) -> ScaledComplex {
    let k = (z.re / std::f64::consts::LN_2).floor();
    let rem = z.re - k * std::f64::consts::LN_2;
    let m = Complex64::from_polar(rem.exp(), z.im);
    ScaledComplex::new(m, k as i32)
}

fn use_series(order: u32, w: Complex64) -> bool {
    let r2 = w.norm();
    r2 <= SERIES_RADIUS * SERIES_RADIUS || r2 < 2.0 * (order as f64 + 1.0)
}

/// Series for `j_m(w)`. Returns the value and a rounding-error estimate:
/// largest term times machine epsilon, relative to the larger of the sum
/// and the envelope of `J_m` carried over to the series normalisation.
fn entire_series(order: u32, w: Complex64) -> (ScaledComplex, f64) {
    let q = -w * 0.25;
    let m = order as f64;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut biggest = 1.0f64;
    let mut k = 0.0f64;
    loop {
        term *= q / ((k + 1.0) * (k + m + 1.0));
        k += 1.0;
        sum += term;
        let t = term.norm();
        biggest = biggest.max(t);
        // terms decrease once k(k+m) > |q|
        if k * (k + m) > q.norm() && t <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    let rounding = biggest * f64::EPSILON * (k + 1.0).sqrt();
    let mut estimate = rounding / sum.norm();
    if estimate > ACCURACY_THRESHOLD {
        let z = w.sqrt();
        let env = z.im.abs() / std::f64::consts::LN_2 - power_log2(order, z.norm()).max(0.0);
        estimate = rounding / env.exp2().max(sum.norm());
    }
    (series_prefactor(order) * ScaledComplex::from_complex(sum), estimate)
}

/// `J_n / J_{n-1}` by the modified Lentz algorithm.
fn ratio_continued_fraction(n: usize, z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-150;
    let zinv = z.inv();
    let mut f = Complex64::new(TINY, 0.0);
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for j in 1..200_000usize {
        let a = if j == 1 { 1.0 } else { -1.0 };
        let b = zinv * (2.0 * (n + j - 1) as f64);
        d = b + d * a;
        if d.norm() < TINY {
            d = Complex64::new(TINY, 0.0);
        }
        c = b + c.inv() * a;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    f
}

fn start_order(top_needed: u32, z: Complex64) -> usize {
    let r = z.norm();
    let base = (top_needed as f64 + 1.0).max(r);
    (base + 20.0 + 12.0 * r.cbrt()).ceil() as usize
}

/// Backward recurrence started at `n_top`. Returns `J_order .. J_{order+count-1}`.
fn miller(order: u32, count: usize, z: Complex64, n_top: usize) -> Vec<ScaledComplex> {
    let lo = order as usize;
    let hi = lo + count - 1;
    debug_assert!(n_top > hi);

    let upper_half = z.im >= 0.0;
    // weight (∓i)^k cycles with period four
    let unit = if upper_half {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    };
    let mut weight = unit.powu((n_top % 4) as u32);
    let unit_inv = unit.inv();

    let zinv = z.inv();
    let ratio = ratio_continued_fraction(n_top, z);
    // (J_{k+1}, J_k) at k = n_top - 1
    let mut upper = ratio;
    let mut current = Complex64::new(1.0, 0.0);
    let mut exponent: i32 = 0;
    let mut norm_sum = weight * upper * 2.0;
    weight *= unit_inv;

    let mut captured = vec![ScaledComplex::ZERO; count];
    if n_top <= hi {
        captured[n_top - lo] = ScaledComplex::new(upper, exponent);
    }

    let mut k = n_top - 1;
    loop {
        if k >= lo && k <= hi {
            captured[k - lo] = ScaledComplex::new(current, exponent);
        }
        if k == 0 {
            norm_sum += current;
            break;
        }
        norm_sum += weight * current * 2.0;
        weight *= unit_inv;
        let next = zinv * (2.0 * k as f64) * current - upper;
        upper = current;
        current = next;
        k -= 1;
        let mag = current.norm().max(upper.norm());
        if mag > exp2i(RESCALE_BITS) {
            let s = exp2i(-RESCALE_BITS);
            current *= s;
            upper *= s;
            norm_sum *= s;
            exponent += RESCALE_BITS;
        }
    }

    let target = if upper_half {
        scaled_exp(Complex64::new(0.0, -1.0) * z)
    } else {
        scaled_exp(Complex64::new(0.0, 1.0) * z)
    };
    let norm = ScaledComplex::new(norm_sum, exponent);
    let factor = target / norm;
    captured.into_iter().map(|c| c * factor).collect()
}

/// `log2((|z|/2)^n / n!)`, clamped below at -1100.
fn power_log2(n: u32, zabs: f64) -> f64 {
    let half = (0.5 * zabs).log2();
    let mut a = 0.0f64;
    for k in 1..=n {
        a += half - (k as f64).log2();
        if a < -1100.0 {
            break;
        }
    }
    a
}

/// `log2` of a size scale for `J_n(z)`: `e^{|Im z|} min(1, (|z|/2)^n/n!)`.
/// Errors are measured against this rather than the local value so that
/// isolated zeros of `J_n` do not register as accuracy loss.
fn envelope_log2(n: u32, z: Complex64) -> f64 {
    z.im.abs() / std::f64::consts::LN_2 + power_log2(n, z.norm()).min(0.0)
}

fn max_envelope_diff(order: u32, z: Complex64, a: &[ScaledComplex], b: &[ScaledComplex]) -> f64 {
    let mut worst = 0.0f64;
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        if x.is_zero() && y.is_zero() {
            continue;
        }
        let scale = x
            .log2_abs()
            .max(y.log2_abs())
            .max(envelope_log2(order + k as u32, z));
        let d = (*x - *y).log2_abs() - scale;
        worst = worst.max(d.exp2());
    }
    worst
}

/// `J_order .. J_{order+count-1}` at `z`, with the truncation-level check.
fn bessel_j_block(order: u32, count: usize, z: Complex64) -> Result<Vec<ScaledComplex>> {
    if z.norm() == 0.0 {
        let mut out = vec![ScaledComplex::ZERO; count];
        if order == 0 {
            out[0] = ScaledComplex::ONE;
        }
        return Ok(out);
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(TeigError::InvalidArgument(format!("non-finite argument {z}")));
    }
    let top = order + count as u32 - 1;
    let n1 = start_order(top, z);
    let n2 = n1 + 8 + n1 / 8;
    let first = miller(order, count, z, n1);
    let second = miller(order, count, z, n2);
    let estimate = max_envelope_diff(order, z, &first, &second);
    if !(estimate <= ACCURACY_THRESHOLD) {
        return Err(TeigError::AccuracyLoss {
            context: format!("J_{order}({z})"),
            estimate,
        });
    }
    Ok(second)
}

/// `J_order(z)` for integer `order >= 0` and complex `z`.
pub fn bessel_j(order: u32, z: Complex64) -> Result<ScaledComplex> {
    if use_series(order, z * z) {
        let (j, est) = entire_series(order, z * z);
        check_series(order, est)?;
        return Ok(j * ScaledComplex::from_complex(z).powi(order));
    }
    Ok(bessel_j_block(order, 1, z)?[0])
}

fn check_series(order: u32, estimate: f64) -> Result<()> {
    if estimate > ACCURACY_THRESHOLD {
        return Err(TeigError::AccuracyLoss {
            context: format!("series for order {order}"),
            estimate,
        });
    }
    Ok(())
}

/// `j_m(w), ..., j_{m+count-1}(w)`.
pub(crate) fn entire_j_block(order: u32, count: usize, w: Complex64) -> Result<Vec<ScaledComplex>> {
    if use_series(order, w) {
        let mut out = Vec::with_capacity(count);
        for k in 0..count as u32 {
            let (v, est) = entire_series(order + k, w);
            check_series(order + k, est)?;
            out.push(v);
        }
        return Ok(out);
    }
    let z = w.sqrt();
    let js = bessel_j_block(order, count, z)?;
    let zs = ScaledComplex::from_complex(z);
    let mut zpow = zs.powi(order);
    let mut out = Vec::with_capacity(count);
    for j in js {
        out.push(j / zpow);
        zpow = zpow * zs;
    }
    Ok(out)
}

/// `(j_m(w), j_{m+1}(w))` for the entire function
/// `j_m(w) = Σ_k (-1)^k w^k / (2^{2k+m} k! (k+m)!)`.
pub fn entire_j(order: u32, w: Complex64) -> Result<EntireBesselPair> {
    let v = entire_j_block(order, 2, w)?;
    Ok(EntireBesselPair {
        order,
        value: v[0],
        next: v[1],
    })
}
