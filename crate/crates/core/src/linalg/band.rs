use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Square complex band matrix with `kl` sub- and `ku` super-diagonals,
/// stored row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix { n, kl, ku, data: vec![ZERO; n * (kl + ku + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku || i >= self.n || j >= self.n {
            return None;
        }
        Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.slot(i, j).map_or(ZERO, |s| self.data[s])
    }

    /// Adds `z` at `(i, j)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, z: C64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] += z;
    }

    /// Column range that may hold nonzeros in row `i`.
    pub fn row_range(&self, i: usize) -> core::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        for i in 0..self.n {
            out[i] = self.row_range(i).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn adjoint_matvec(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        for i in 0..self.n {
            for j in self.row_range(i) {
                out[j] += self.get(i, j).conj() * x[i];
            }
        }
    }

    /// `alpha * self + beta * D` for a diagonal `D`.
    pub fn scaled_plus_diagonal(&self, alpha: C64, beta: C64, diag: &[f64]) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|z| *z *= alpha);
        for (i, d) in diag.iter().enumerate() {
            out.add(i, i, beta * *d);
        }
        out
    }

    pub fn factor(&self) -> Result<BandLu> {
        BandLu::new(self)
    }
}

/// LU factorisation with partial pivoting of a [`BandMatrix`].
///
/// Row `k` of `U` is stored with columns `k ..= k + ku + kl`; the multipliers
/// of elimination step `k` are kept separately so pivots can be replayed in
/// order during the solve.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    upper: Vec<C64>,
    lower: Vec<C64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn new(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let width = a.kl + a.ku + 1;
        // Working rows span columns [i - kl, i + ku + kl].
        let wrow = 2 * kl + a.ku + 1;
        let mut w = vec![ZERO; n * wrow];
        let at = |i: usize, j: usize| -> usize { i * wrow + (j + kl - i) };
        for i in 0..n {
            for j in a.row_range(i) {
                w[at(i, j)] = a.get(i, j);
            }
        }
        let mut lower = vec![ZERO; n * kl.max(1)];
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + a.ku + kl).min(n - 1);
            let mut p = k;
            let mut best = w[at(k, k)].norm();
            for r in k + 1..=last_row {
                let v = w[at(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::LinAlg(alloc::format!("zero pivot in column {k}")));
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    w.swap(at(k, j), at(p, j));
                }
            }
            let pivot = w[at(k, k)];
            for r in k + 1..=last_row {
                let l = w[at(r, k)] / pivot;
                lower[k * kl + (r - k - 1)] = l;
                if l != ZERO {
                    for j in k + 1..=last_col {
                        let u = w[at(k, j)];
                        w[at(r, j)] -= l * u;
                    }
                }
                w[at(r, k)] = ZERO;
            }
        }
        let mut upper = vec![ZERO; n * width];
        for k in 0..n {
            for j in k..(k + width).min(n) {
                upper[k * width + (j - k)] = w[at(k, j)];
            }
        }
        Ok(BandLu { n, kl, width, upper, lower, pivots })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + self.kl).min(n - 1) {
                b[r] -= self.lower[k * self.kl + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let row = &self.upper[k * self.width..(k + 1) * self.width];
            let mut s = b[k];
            for j in k + 1..(k + self.width).min(n) {
                s -= row[j - k] * b[j];
            }
            b[k] = s / row[0];
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        // U^H y = b (forward)
        for k in 0..n {
            let row = &self.upper[k * self.width..(k + 1) * self.width];
            b[k] /= row[0].conj();
            let yk = b[k];
            for j in k + 1..(k + self.width).min(n) {
                b[j] -= row[j - k].conj() * yk;
            }
        }
        // x = P_0^T L_0^H ... P_{n-1}^T L_{n-1}^H y
        for k in (0..n).rev() {
            let mut s = ZERO;
            for r in k + 1..=(k + self.kl).min(n - 1) {
                s += self.lower[k * self.kl + (r - k - 1)].conj() * b[r];
            }
            b[k] -= s;
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}
