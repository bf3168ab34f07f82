use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn adjoint_matvec(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        for i in 0..self.rows {
            let xi = x[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: C64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn add_assign(&mut self, other: &Self, s: C64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `diag(left) * self * diag(right)`.
    pub fn scale_rows_cols(&mut self, left: &[f64], right: &[f64]) {
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.data[i * self.cols + j] *= left[i] * right[j];
            }
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Repeated squaring: `self^(2^k)`.
    pub fn square_times(&self, k: u32) -> Self {
        let mut m = self.clone();
        for _ in 0..k {
            m = m.matmul(&m);
        }
        m
    }

    /// `exp(self)` by scaling and squaring with a degree-18 Taylor
    /// polynomial on `self / 2^s`, `||self / 2^s||_1 <= 1/2`.
    pub fn expm(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let norm = self.norm_one();
        let s = if norm > 0.5 { libm::ceil(libm::log2(norm / 0.5)) as u32 } else { 0 };
        let mut a = self.clone();
        a.scale(C64::new(libm::ldexp(1.0, -(s as i32)), 0.0));
        let n = self.rows;
        let mut result = Self::identity(n);
        let mut term = Self::identity(n);
        for k in 1..=18 {
            term = term.matmul(&a);
            term.scale(C64::new(1.0 / k as f64, 0.0));
            result.add_assign(&term, C64::new(1.0, 0.0));
            if term.norm_one() < 1e-18 * result.norm_one() {
                break;
            }
        }
        result.square_times(s)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal_and_rotation() {
        let mut d = DenseMatrix::zeros(2, 2);
        d[(0, 0)] = C64::new(-3.0, 0.0);
        d[(1, 1)] = C64::new(0.5, 2.0);
        let e = d.expm();
        assert!((e[(0, 0)] - C64::new(-3.0, 0.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - C64::new(0.5, 2.0).exp()).norm() < 1e-13);

        // exp([[0, t], [-t, 0]]) is a rotation by t
        let t = 7.3;
        let r = DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(t, 0.0),
            (1, 0) => C64::new(-t, 0.0),
            _ => ZERO,
        })
        .expm();
        assert!((r[(0, 0)].re - libm::cos(t)).abs() < 1e-12);
        assert!((r[(0, 1)].re - libm::sin(t)).abs() < 1e-12);
    }

    #[test]
    fn adjoint_matvec_agrees_with_explicit_adjoint() {
        let m = DenseMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 - j as f64, (i * j) as f64));
        let x = [C64::new(1.0, 2.0), C64::new(-1.0, 0.5), C64::new(0.0, 1.0)];
        let mut a = [ZERO; 3];
        let mut b = [ZERO; 3];
        m.adjoint_matvec(&x, &mut a);
        m.adjoint().matvec(&x, &mut b);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
