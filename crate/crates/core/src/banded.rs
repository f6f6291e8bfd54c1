//! Complex band matrices with an LU factorisation using partial pivoting.
//!
//! Storage follows the column-oriented band layout of LAPACK's `gbtrf`:
//! column `j` keeps rows `j - kl - ku ..= j + kl`, the extra `kl`
//! superdiagonals holding fill-in created by row interchanges.

use num_complex::Complex64;

use crate::error::{Result, TeigError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            data: vec![ZERO; ld * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        // row i sits at offset kl + ku + i - j inside column j
        let off = (self.kl + self.ku + i).checked_sub(j)?;
        (off < self.ld).then_some(j * self.ld + off)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j <= i + self.ku && i <= j + self.kl
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if !self.in_band(i, j) {
            return ZERO;
        }
        self.data[self.slot(i, j).expect("in band")]
    }

    /// Panics when `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j).expect("in band");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Infinity norm (largest absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn row_norm_inf(&self, i: usize) -> f64 {
        self.row_range(i).map(|j| self.get(i, j).norm()).sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `self + s * other` for matrices of identical band shape.
    pub fn axpy(&self, s: Complex64, other: &BandMatrix) -> BandMatrix {
        assert_eq!((self.n, self.kl, self.ku), (other.n, other.kl, other.ku));
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o += s * b;
        }
        out
    }

    pub fn factor(&self) -> Result<BandLu> {
        let mut lu = self.clone();
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.get(k, k).norm();
            for i in k + 1..=last_row {
                let v = lu.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 {
                return Err(TeigError::SingularSystem {
                    condition: f64::INFINITY,
                });
            }
            let last_col = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (lu.raw(k, j), lu.raw(p, j));
                    lu.data.swap(a, b);
                }
            }
            let pivot = lu.data[lu.raw(k, k)];
            for i in k + 1..=last_row {
                let s = lu.raw(i, k);
                if lu.data[s] == ZERO {
                    continue;
                }
                let l = lu.data[s] / pivot;
                lu.data[s] = l;
                for j in k + 1..=last_col {
                    let u = lu.data[lu.raw(k, j)];
                    let t = lu.raw(i, j);
                    lu.data[t] -= l * u;
                }
            }
        }
        Ok(BandLu { lu, piv })
    }

    /// Slot of an entry inside the fill-in band; valid for `j <= i + kl + ku`.
    fn raw(&self, i: usize, j: usize) -> usize {
        self.slot(i, j).expect("entry inside fill-in band")
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    lu: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.n;
        let (kl, ku) = (self.lu.kl, self.lu.ku);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == ZERO {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.lu.data[self.lu.raw(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + ku + kl).min(n - 1) {
                s -= self.lu.data[self.lu.raw(k, j)] * x[j];
            }
            x[k] = s / self.lu.data[self.lu.raw(k, k)];
        }
        x
    }

    /// `log det`, with the imaginary part defined modulo `2π`.
    pub fn log_det(&self) -> Complex64 {
        let mut acc = ZERO;
        let mut flips = 0usize;
        for k in 0..self.lu.n {
            acc += self.lu.data[self.lu.raw(k, k)].ln();
            if self.piv[k] != k {
                flips += 1;
            }
        }
        if flips % 2 == 1 {
            acc += Complex64::new(0.0, std::f64::consts::PI);
        }
        acc
    }
}
