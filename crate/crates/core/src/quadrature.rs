//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15), Gauss–Legendre
//! rules, and Wynn's epsilon extrapolation for oscillatory tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Result, TeigError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

/// 15-point Kronrod rule with the embedded 7-point Gauss error estimate.
pub fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    Estimate {
        value: kron * h,
        error: ((kron - gauss) * h).norm(),
    }
}

struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive integration of a complex integrand over `[a, b]`,
/// bisecting the segment with the largest error until
/// `error <= max(abs_tol, rel_tol |value|)`.
pub fn integrate(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    integrate_limited(&f, a, b, abs_tol, rel_tol, 2000)
}

pub fn integrate_limited(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let first = gk15(f, a, b);
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });
    let mut segments = 1;
    loop {
        let tol = abs_tol.max(rel_tol * total.value.norm());
        if total.error <= tol {
            return Ok(total);
        }
        if segments >= max_segments {
            return Err(TeigError::QuadratureNotConverged {
                context: format!("adaptive Gauss-Kronrod on [{a}, {b}]"),
                estimate: total.error / total.value.norm().max(f64::MIN_POSITIVE),
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval can no longer be split in floating point
            return Err(TeigError::QuadratureNotConverged {
                context: format!("segment [{}, {}] cannot be bisected", worst.a, worst.b),
                estimate: total.error,
            });
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            est: right,
        });
        segments += 1;
        if segments % 64 == 0 {
            // refresh the running sums to shed accumulated rounding
            total.value = heap.iter().map(|s| s.est.value).sum();
            total.error = heap.iter().map(|s| s.est.error).sum();
        }
    }
}

/// `∫_a^∞ f` through the substitution `x = a + s/(1 − s)`.
pub fn integrate_to_infinity(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    let g = |s: f64| {
        if s >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let one_minus = 1.0 - s;
        let x = a + s / one_minus;
        f(x) / (one_minus * one_minus)
    };
    integrate_limited(&g, 0.0, 1.0, abs_tol, rel_tol, 4000)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
            z = 0.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        w[0] = 2.0;
    }
    (x, w)
}

/// Wynn's epsilon algorithm on a sequence of partial sums. Returns the
/// extrapolated limit and the difference between the last two estimates.
pub fn wynn_epsilon(partial_sums: &[Complex64]) -> (Complex64, f64) {
    let n = partial_sums.len();
    if n < 3 {
        let last = *partial_sums.last().unwrap_or(&Complex64::new(0.0, 0.0));
        let err = if n == 2 {
            (partial_sums[1] - partial_sums[0]).norm()
        } else {
            f64::INFINITY
        };
        return (last, err);
    }
    // e[k] holds column k of the epsilon table, restricted to the latest entries
    let mut prev: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut cur: Vec<Complex64> = partial_sums.to_vec();
    let mut best = *partial_sums.last().unwrap();
    let mut best_err = (partial_sums[n - 1] - partial_sums[n - 2]).norm();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff.norm() == 0.0 {
                return (cur[i + 1], 0.0);
            }
            next.push(prev[i + 1] + diff.inv());
        }
        col += 1;
        prev = cur;
        cur = next;
        // even columns hold estimates of the limit
        if col % 2 == 0 && cur.len() >= 2 {
            let m = cur.len();
            let err = (cur[m - 1] - cur[m - 2]).norm();
            if err < best_err {
                best_err = err;
                best = cur[m - 1];
            }
        }
    }
    (best, best_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        let e = gk15(&|x: f64| re(x.powi(20)), -1.0, 1.0);
        assert!((e.value.re - 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let e = integrate(|x: f64| re(x.sqrt().ln()), 0.0, 1.0, 1e-13, 1e-13).unwrap();
        assert!((e.value.re + 0.5).abs() < 1e-11, "{}", e.value);
    }

    #[test]
    fn semi_infinite_rational() {
        // ∫_0^∞ dx / (1 + x²) = π/2
        let e = integrate_to_infinity(|x| re(1.0 / (1.0 + x * x)), 0.0, 1e-14, 1e-13).unwrap();
        assert!((e.value.re - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        for n in [1usize, 2, 5, 16, 40] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 2;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((s - exact).abs() < 1e-13, "n={n}: {s} vs {exact}");
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut sums = Vec::new();
        let mut s = 0.0;
        for k in 1..=15 {
            s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            sums.push(re(s));
        }
        let (v, _) = wynn_epsilon(&sums);
        assert!((v.re - std::f64::consts::LN_2).abs() < 1e-10, "{v}");
    }

    #[test]
    fn nonconvergence_is_reported() {
        let r = integrate_limited(&|x: f64| re(1.0 / x), 0.0, 1.0, 1e-12, 1e-12, 50);
        assert!(matches!(r, Err(TeigError::QuadratureNotConverged { .. })));
    }
}
