//! Complex numbers carried as `mantissa * 2^exponent`.
//!
//! Bessel values along counting contours range from `1/(2^400 400!)` to
//! `e^{500}`, far outside `f64`. Every arithmetic result is renormalised so the
//! mantissa modulus sits in `[1, 2)`; zero is the unique pair `(0, 0)`.

use std::fmt;
use std::ops::{Div, Mul, Neg, Sub, Add};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Exact `2^k` for `k` in the normal range, falling back to `powi` outside it.
#[inline]
pub(crate) fn exp2i(k: i32) -> f64 {
    if (-1022..=1023).contains(&k) {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        2f64.powi(k)
    }
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    mantissa: Complex64,
    exponent: i32,
}

impl ScaledComplex {
    pub const ZERO: Self = Self {
        mantissa: Complex64::new(0.0, 0.0),
        exponent: 0,
    };
    pub const ONE: Self = Self {
        mantissa: Complex64::new(1.0, 0.0),
        exponent: 0,
    };

    /// Builds `mantissa * 2^exponent` and normalises it.
    pub fn new(mantissa: Complex64, exponent: i32) -> Self {
        Self::normalize(mantissa, exponent as i64)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::normalize(z, 0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::normalize(Complex64::new(x, 0.0), 0)
    }

    fn normalize(m: Complex64, e: i64) -> Self {
        let r = m.norm();
        if r == 0.0 || !r.is_finite() {
            if r == 0.0 {
                return Self::ZERO;
            }
            // Non-finite values stay non-finite so callers notice.
            return Self {
                mantissa: m,
                exponent: e.clamp(i32::MIN as i64, i32::MAX as i64) as i32,
            };
        }
        let mut shift = r.log2().floor() as i32;
        // two factors: a single 2^-shift overflows for subnormal input
        let half = shift / 2;
        let mut scaled = m * exp2i(-half) * exp2i(half - shift);
        // log2 can be off by one ulp at exact powers of two.
        let mut rs = scaled.norm();
        while rs >= 2.0 {
            scaled *= 0.5;
            shift += 1;
            rs = scaled.norm();
        }
        while rs < 1.0 {
            scaled *= 2.0;
            shift -= 1;
            rs = scaled.norm();
        }
        let exponent = e + shift as i64;
        Self {
            mantissa: scaled,
            exponent: exponent.clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2) as i32,
        }
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite() && self.mantissa.im.is_finite()
    }

    /// Converts to a plain complex number; overflows to infinity and
    /// underflows to zero.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let e = self.exponent;
        if e > 1100 {
            return Complex64::new(
                f64::INFINITY.copysign(self.mantissa.re),
                f64::INFINITY.copysign(self.mantissa.im),
            );
        }
        if e < -1200 {
            return Complex64::new(0.0, 0.0);
        }
        // Split the shift so neither factor under/overflows on its own.
        let half = e / 2;
        self.mantissa * exp2i(half) * exp2i(e - half)
    }

    /// Natural log of the modulus.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mantissa.norm().ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    /// Base-2 log of the modulus.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mantissa.norm().log2() + self.exponent as f64
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    pub fn conj(&self) -> Self {
        Self {
            mantissa: self.mantissa.conj(),
            exponent: self.exponent,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::normalize(self.mantissa * s, self.exponent as i64)
    }

    /// Multiplication by `2^k`, exact.
    pub fn mul_pow2(&self, k: i32) -> Self {
        if self.is_zero() {
            return *self;
        }
        Self {
            mantissa: self.mantissa,
            exponent: self.exponent + k,
        }
    }

    pub fn recip(&self) -> Self {
        if self.is_zero() {
            return Self {
                mantissa: Complex64::new(f64::INFINITY, 0.0),
                exponent: 0,
            };
        }
        Self::normalize(self.mantissa.inv(), -(self.exponent as i64))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut result = Self::ONE;
        let mut base = *self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            k >>= 1;
        }
        result
    }

    /// Relative distance `|a - b| / max(|a|, |b|)`, computed without leaving
    /// the scaled representation.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        let diff = *self - *other;
        let scale = if self.log2_abs() >= other.log2_abs() {
            *self
        } else {
            *other
        };
        (diff / scale).to_complex().norm()
    }
}

impl Default for ScaledComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} + {}i) * 2^{}",
            self.mantissa.re, self.mantissa.im, self.exponent
        )
    }
}

impl fmt::Display for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent.abs() < 1000 {
            write!(f, "{}", self.to_complex())
        } else {
            fmt::Debug::fmt(self, f)
        }
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl From<f64> for ScaledComplex {
    fn from(x: f64) -> Self {
        Self::from_real(x)
    }
}

impl Mul for ScaledComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::normalize(
            self.mantissa * rhs.mantissa,
            self.exponent as i64 + rhs.exponent as i64,
        )
    }
}

impl Div for ScaledComplex {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Add for ScaledComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = big.exponent as i64 - small.exponent as i64;
        if gap > 60 {
            return big;
        }
        Self::normalize(
            big.mantissa + small.mantissa * exp2i(-(gap as i32)),
            big.exponent as i64,
        )
    }
}

impl Neg for ScaledComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Sub for ScaledComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}
