//! Linear algebra used by the discretisation: closed-form 2x2 helpers, a
//! banded complex LU with adjoint solves, and a small dense complex matrix.

mod band;
mod dense;
pub mod small;

pub use band::{BandLu, BandMatrix};
pub use dense::DenseMatrix;

use num_complex::Complex64 as C64;

/// A square linear map that can also apply its conjugate transpose.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], out: &mut [C64]);
    fn apply_adjoint(&self, x: &[C64], out: &mut [C64]);
}

impl LinearMap for DenseMatrix {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.rows(), self.cols());
        self.rows()
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        self.matvec(x, out)
    }

    fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        self.adjoint_matvec(x, out)
    }
}

/// Dense matrix of `map` (column `j` is `map` applied to `e_j`).
pub fn materialize(map: &dyn LinearMap) -> DenseMatrix {
    let n = map.dim();
    let mut m = DenseMatrix::zeros(n, n);
    let mut e = alloc::vec![C64::new(0.0, 0.0); n];
    let mut col = alloc::vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        map.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = C64::new(0.0, 0.0);
    }
    m
}
