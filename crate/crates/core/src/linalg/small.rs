//! Closed-form helpers for real and complex 2x2 matrices. One-dimensional
//! data uses only the `[0][0]` entry, selected by `dim`.

#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64 as C64;

use crate::fields::{Mat2, RMat2, Vec2};

pub fn sym_anti(m: &RMat2) -> (RMat2, RMat2) {
    let off_s = 0.5 * (m[0][1] + m[1][0]);
    let off_a = 0.5 * (m[0][1] - m[1][0]);
    (
        [[m[0][0], off_s], [off_s, m[1][1]]],
        [[0.0, off_a], [-off_a, 0.0]],
    )
}

/// Eigenvalues `(min, max)` of a real symmetric matrix.
pub fn sym_eigenvalues(m: &RMat2, dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (m[0][0], m[0][0]);
    }
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let r = libm::hypot(half_diff, m[0][1]);
    (mean - r, mean + r)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &RMat2, dim: usize) -> RMat2 {
    let l00 = m[0][0].sqrt();
    if dim == 1 {
        return [[l00, 0.0], [0.0, 0.0]];
    }
    let l10 = m[1][0] / l00;
    let l11 = (m[1][1] - l10 * l10).sqrt();
    [[l00, 0.0], [l10, l11]]
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(m: &RMat2, dim: usize) -> RMat2 {
    if dim == 1 {
        return [[1.0 / m[0][0], 0.0], [0.0, 0.0]];
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

/// `L^{-1} S L^{-T}` for real `S`.
fn congruence(l: &RMat2, s: &RMat2, dim: usize) -> RMat2 {
    if dim == 1 {
        return [[s[0][0] / (l[0][0] * l[0][0]), 0.0], [0.0, 0.0]];
    }
    // L^{-1} = [[1/l00, 0], [-l10/(l00 l11), 1/l11]]
    let li = [[1.0 / l[0][0], 0.0], [-l[1][0] / (l[0][0] * l[1][1]), 1.0 / l[1][1]]];
    let mut t = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            t[i][j] = (0..2).map(|k| li[i][k] * s[k][j]).sum();
        }
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (0..2).map(|k| t[i][k] * li[j][k]).sum();
        }
    }
    out
}

/// Largest singular value of a real 2x2 matrix.
pub fn sigma_max(b: &RMat2) -> f64 {
    let btb = [
        [b[0][0] * b[0][0] + b[1][0] * b[1][0], b[0][0] * b[0][1] + b[1][0] * b[1][1]],
        [b[0][1] * b[0][0] + b[1][1] * b[1][0], b[0][1] * b[0][1] + b[1][1] * b[1][1]],
    ];
    sym_eigenvalues(&btb, 2).1.max(0.0).sqrt()
}

/// Least `alpha >= 0` with `|<S xi, eta>| <= alpha <A0s xi, xi>^{1/2} <A0s eta, eta>^{1/2}`
/// for all real `xi, eta`.
pub fn relative_bound(a0s: &RMat2, s: &RMat2, dim: usize) -> f64 {
    let l = cholesky(a0s, dim);
    let b = congruence(&l, s, dim);
    if dim == 1 {
        return b[0][0].abs();
    }
    sigma_max(&b)
}

/// Same as [`relative_bound`] for a complex matrix and complex `xi, eta`.
pub fn relative_bound_complex(a0s: &RMat2, a: &Mat2, dim: usize) -> f64 {
    let l = cholesky(a0s, dim);
    let re = congruence(&l, &[[a[0][0].re, a[0][1].re], [a[1][0].re, a[1][1].re]], dim);
    let im = congruence(&l, &[[a[0][0].im, a[0][1].im], [a[1][0].im, a[1][1].im]], dim);
    if dim == 1 {
        return libm::hypot(re[0][0], im[0][0]);
    }
    let b = [
        [C64::new(re[0][0], im[0][0]), C64::new(re[0][1], im[0][1])],
        [C64::new(re[1][0], im[1][0]), C64::new(re[1][1], im[1][1])],
    ];
    // B^H B is Hermitian: eigenvalues from trace and determinant
    let mut h = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = (0..2).map(|k| b[k][i].conj() * b[k][j]).sum();
        }
    }
    let mean = 0.5 * (h[0][0].re + h[1][1].re);
    let half_diff = 0.5 * (h[0][0].re - h[1][1].re);
    let r = libm::hypot(half_diff, h[0][1].norm());
    (mean + r).max(0.0).sqrt()
}

/// `<M v, v>` for real symmetric `M` and the real part of `v`.
pub fn quad_re(m: &RMat2, v: &Vec2, dim: usize) -> f64 {
    let x = [v[0].re, v[1].re];
    quad(m, &x, dim)
}

/// `<M v, v>` for real symmetric `M` and the imaginary part of `v`.
pub fn quad_im(m: &RMat2, v: &Vec2, dim: usize) -> f64 {
    let x = [v[0].im, v[1].im];
    quad(m, &x, dim)
}

pub fn quad(m: &RMat2, x: &[f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        return m[0][0] * x[0] * x[0];
    }
    m[0][0] * x[0] * x[0] + (m[0][1] + m[1][0]) * x[0] * x[1] + m[1][1] * x[1] * x[1]
}

/// Real bilinear pairing `<M x, y>`.
pub fn bilinear(m: &RMat2, x: &[f64; 2], y: &[f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        return m[0][0] * x[0] * y[0];
    }
    (m[0][0] * x[0] + m[0][1] * x[1]) * y[0] + (m[1][0] * x[0] + m[1][1] * x[1]) * y[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force maximisation of |<S xi, eta>| / (<A xi,xi><A eta,eta>)^{1/2}
    /// over unit vectors on a fine angular grid.
    fn angular_oracle(a: &RMat2, s: &RMat2) -> f64 {
        let n = 2000;
        let mut best = 0.0f64;
        for i in 0..n {
            let t = core::f64::consts::PI * i as f64 / n as f64;
            let xi = [libm::cos(t), libm::sin(t)];
            for j in 0..n {
                let u = core::f64::consts::PI * j as f64 / n as f64;
                let eta = [libm::cos(u), libm::sin(u)];
                let num = bilinear(s, &xi, &eta, 2).abs();
                let den = (quad(a, &xi, 2) * quad(a, &eta, 2)).sqrt();
                best = best.max(num / den);
            }
        }
        best
    }

    #[test]
    fn symmetric_relative_bound_matches_angular_oracle() {
        let a = [[1.0, 0.0], [0.0, 4.0]];
        let s = [[0.0, 1.0], [1.0, 0.0]];
        let exact = relative_bound(&a, &s, 2);
        assert!((exact - 0.5).abs() < 1e-14);
        assert!((angular_oracle(&a, &s) - 0.5).abs() < 1e-5);
    }

    #[test]
    fn antisymmetric_relative_bound_matches_angular_oracle() {
        let a = [[1.0, 0.0], [0.0, 1.0]];
        let s = [[0.0, 1.0], [-1.0, 0.0]];
        assert!((relative_bound(&a, &s, 2) - 1.0).abs() < 1e-14);
        assert!((angular_oracle(&a, &s) - 1.0).abs() < 1e-5);

        let a = [[2.0, 0.5], [0.5, 1.0]];
        let s = [[0.0, 0.7], [-0.7, 0.0]];
        assert!((relative_bound(&a, &s, 2) - angular_oracle(&a, &s)).abs() < 1e-5);
    }

    #[test]
    fn eigenvalues_of_diagonal_and_rotated() {
        assert_eq!(sym_eigenvalues(&[[1.0, 0.0], [0.0, 4.0]], 2), (1.0, 4.0));
        let (lo, hi) = sym_eigenvalues(&[[2.0, 1.0], [1.0, 2.0]], 2);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
    }

    #[test]
    fn complex_bound_of_identity_plus_i() {
        let a0s = [[1.0, 0.0], [0.0, 1.0]];
        let one_i = C64::new(1.0, 1.0);
        let z = C64::new(0.0, 0.0);
        let c = relative_bound_complex(&a0s, &[[one_i, z], [z, one_i]], 2);
        assert!((c - 2f64.sqrt()).abs() < 1e-14);
    }
}
