//! Structured grids and sampled coefficient fields.
//!
//! Nodes are numbered row-major with `x` running fastest:
//! `index = j * nx + i`. One-dimensional grids use only the first axis and
//! keep the second component of vectors and matrices at zero.

use alloc::string::ToString;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::linalg::small;
use crate::{Error, Result};

/// Complex 2-vector; in 1-D only the first entry is used.
pub type Vec2 = [C64; 2];
/// Complex 2x2 matrix; in 1-D only `[0][0]` is used.
pub type Mat2 = [[C64; 2]; 2];
/// Real 2x2 matrix; in 1-D only `[0][0]` is used.
pub type RMat2 = [[f64; 2]; 2];

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    n: [usize; 2],
    bc: Boundary,
}

impl Grid {
    pub fn new_1d(a: f64, b: f64, n: usize, bc: Boundary) -> Result<Self> {
        Self::build(1, [a, 0.0], [b, 0.0], [n, 1], bc, DEFAULT_NODE_CAP)
    }

    pub fn new_2d(x: (f64, f64), y: (f64, f64), n: [usize; 2], bc: Boundary) -> Result<Self> {
        Self::build(2, [x.0, y.0], [x.1, y.1], n, bc, DEFAULT_NODE_CAP)
    }

    /// General constructor with an explicit node cap.
    pub fn build(
        dim: usize,
        lower: [f64; 2],
        upper: [f64; 2],
        n: [usize; 2],
        bc: Boundary,
        cap: usize,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::BadGrid(alloc::format!("dimension {dim} (only 1 or 2)")));
        }
        for k in 0..dim {
            if n[k] < 3 {
                return Err(Error::BadGrid(alloc::format!("axis {k} has {} nodes (< 3)", n[k])));
            }
            if !(lower[k].is_finite() && upper[k].is_finite() && upper[k] > lower[k]) {
                return Err(Error::BadGrid(alloc::format!(
                    "axis {k} extent [{}, {}] is empty",
                    lower[k],
                    upper[k]
                )));
            }
        }
        let (lower, upper, n) = if dim == 1 {
            ([lower[0], 0.0], [upper[0], 0.0], [n[0], 1])
        } else {
            (lower, upper, n)
        };
        let total = n[0].checked_mul(n[1]).unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::BadGrid(alloc::format!("{total} nodes exceed the cap of {cap}")));
        }
        Ok(Grid { dim, lower, upper, n, bc })
    }

    pub fn with_bc(mut self, bc: Boundary) -> Self {
        self.bc = bc;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bc(&self) -> Boundary {
        self.bc
    }

    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        self.upper
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        if axis >= self.dim {
            return 1.0;
        }
        (self.upper[axis] - self.lower[axis]) / (self.n[axis] - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n[0], idx / self.n[0])
    }

    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        let x = self.lower[0] + i as f64 * self.spacing(0);
        let y = if self.dim == 2 {
            self.lower[1] + j as f64 * self.spacing(1)
        } else {
            0.0
        };
        [x, y]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        let on_x = i == 0 || i + 1 == self.n[0];
        let on_y = self.dim == 2 && (j == 0 || j + 1 == self.n[1]);
        on_x || on_y
    }

    /// Trapezoidal quadrature weights (half weight per boundary axis).
    pub fn weights(&self) -> Vec<f64> {
        let cell: f64 = (0..self.dim).map(|k| self.spacing(k)).product();
        (0..self.node_count())
            .map(|idx| {
                let (i, j) = self.ij(idx);
                let mut w = cell;
                if i == 0 || i + 1 == self.n[0] {
                    w *= 0.5;
                }
                if self.dim == 2 && (j == 0 || j + 1 == self.n[1]) {
                    w *= 0.5;
                }
                w
            })
            .collect()
    }

    /// Same box, `n` replaced (used by refinement sweeps).
    pub fn refined(&self, n: [usize; 2]) -> Result<Self> {
        Self::build(self.dim, self.lower, self.upper, n, self.bc, usize::MAX)
    }
}

fn check_finite(field: &str, node: usize, z: C64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidField {
            field: field.to_string(),
            node,
            reason: "non-finite entry".to_string(),
        })
    }
}

fn check_len(field: &str, grid: &Grid, len: usize) -> Result<()> {
    if len == grid.node_count() {
        Ok(())
    } else {
        Err(Error::InvalidField {
            field: field.to_string(),
            node: len.min(grid.node_count()),
            reason: alloc::format!("{len} values for {} nodes", grid.node_count()),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<C64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        check_len("scalar", &grid, values.len())?;
        for (k, &z) in values.iter().enumerate() {
            check_finite("scalar", k, z)?;
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> C64) -> Result<Self> {
        let values = (0..grid.node_count()).map(|k| f(grid.coord(k))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, z: C64) -> Result<Self> {
        Self::new(grid, alloc::vec![z; grid.node_count()])
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: alloc::vec![C64::new(0.0, 0.0); grid.node_count()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<Vec2>,
}

impl VectorField {
    pub fn new(grid: Grid, mut values: Vec<Vec2>) -> Result<Self> {
        check_len("vector", &grid, values.len())?;
        for (k, v) in values.iter_mut().enumerate() {
            if grid.dim() == 1 {
                v[1] = C64::new(0.0, 0.0);
            }
            for &z in v.iter() {
                check_finite("vector", k, z)?;
            }
        }
        Ok(VectorField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Vec2) -> Result<Self> {
        let values = (0..grid.node_count()).map(|k| f(grid.coord(k))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, v: Vec2) -> Result<Self> {
        Self::new(grid, alloc::vec![v; grid.node_count()])
    }

    pub fn zeros(grid: Grid) -> Self {
        let z = C64::new(0.0, 0.0);
        VectorField { grid, values: alloc::vec![[z, z]; grid.node_count()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    values: Vec<Mat2>,
}

impl MatrixField {
    pub fn new(grid: Grid, mut values: Vec<Mat2>) -> Result<Self> {
        check_len("matrix", &grid, values.len())?;
        let zero = C64::new(0.0, 0.0);
        for (k, m) in values.iter_mut().enumerate() {
            if grid.dim() == 1 {
                m[0][1] = zero;
                m[1][0] = zero;
                m[1][1] = zero;
            }
            for row in m.iter() {
                for &z in row {
                    check_finite("matrix", k, z)?;
                }
            }
        }
        Ok(MatrixField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Mat2) -> Result<Self> {
        let values = (0..grid.node_count()).map(|k| f(grid.coord(k))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, m: Mat2) -> Result<Self> {
        Self::new(grid, alloc::vec![m; grid.node_count()])
    }

    /// `c * I` everywhere.
    pub fn scaled_identity(grid: Grid, c: C64) -> Result<Self> {
        let z = C64::new(0.0, 0.0);
        Self::constant(grid, [[c, z], [z, c]])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }
}

/// Real symmetric / anti-symmetric parts of `A = A0 + i A1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub grid: Grid,
    pub a0s: Vec<RMat2>,
    pub a0a: Vec<RMat2>,
    pub a1s: Vec<RMat2>,
    pub a1a: Vec<RMat2>,
}

pub fn decompose(a: &MatrixField) -> Result<Decomposition> {
    let n = a.values.len();
    let mut out = Decomposition {
        grid: a.grid,
        a0s: Vec::with_capacity(n),
        a0a: Vec::with_capacity(n),
        a1s: Vec::with_capacity(n),
        a1a: Vec::with_capacity(n),
    };
    for (k, m) in a.values.iter().enumerate() {
        for row in m {
            for &z in row {
                check_finite("A", k, z)?;
            }
        }
        let re = [[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]];
        let im = [[m[0][0].im, m[0][1].im], [m[1][0].im, m[1][1].im]];
        let (s0, a0) = small::sym_anti(&re);
        let (s1, a1) = small::sym_anti(&im);
        out.a0s.push(s0);
        out.a0a.push(a0);
        out.a1s.push(s1);
        out.a1a.push(a1);
    }
    Ok(out)
}

impl Decomposition {
    pub fn reassemble(&self) -> MatrixField {
        let values = (0..self.a0s.len())
            .map(|k| {
                let mut m = [[C64::new(0.0, 0.0); 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        m[r][c] = C64::new(
                            self.a0s[k][r][c] + self.a0a[k][r][c],
                            self.a1s[k][r][c] + self.a1a[k][r][c],
                        );
                    }
                }
                m
            })
            .collect();
        MatrixField { grid: self.grid, values }
    }
}

/// Ellipticity bounds `(c1, c2)`: extreme eigenvalues of `A0s` over all nodes.
pub fn validate_ellipticity(dec: &Decomposition) -> Result<(f64, f64)> {
    let dim = dec.grid.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, m) in dec.a0s.iter().enumerate() {
        let (l0, l1) = small::sym_eigenvalues(m, dim);
        if !(l0 > 1e-12) {
            return Err(Error::NotElliptic { node: k, eigenvalue: l0 });
        }
        lo = lo.min(l0);
        hi = hi.max(l1);
    }
    Ok((lo, hi))
}

/// Coefficient data of one operator on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub a: MatrixField,
    pub b1: VectorField,
    pub b2: VectorField,
    pub q: ScalarField,
}

impl CoefficientSet {
    pub fn new(a: MatrixField, b1: VectorField, b2: VectorField, q: ScalarField) -> Result<Self> {
        let g = a.grid;
        if b1.grid != g || b2.grid != g || q.grid != g {
            return Err(Error::GridMismatch);
        }
        validate_ellipticity(&decompose(&a)?)?;
        Ok(CoefficientSet { a, b1, b2, q })
    }

    /// Pure diffusion `-div(A grad u)`.
    pub fn diffusion(a: MatrixField) -> Result<Self> {
        let g = a.grid;
        Self::new(a, VectorField::zeros(g), VectorField::zeros(g), ScalarField::zeros(g))
    }

    /// `-Laplace` on `grid`.
    pub fn laplacian(grid: Grid) -> Result<Self> {
        Self::diffusion(MatrixField::scaled_identity(grid, C64::new(1.0, 0.0))?)
    }

    pub fn grid(&self) -> &Grid {
        &self.a.grid
    }

    /// Coefficients of the formal adjoint: `(A^*, -conj b2, -conj b1, conj Q)`.
    pub fn adjoint(&self) -> Self {
        let a = self
            .a
            .values
            .iter()
            .map(|m| [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
            .collect();
        let neg_conj = |f: &VectorField| VectorField {
            grid: f.grid,
            values: f.values.iter().map(|v| [-v[0].conj(), -v[1].conj()]).collect(),
        };
        CoefficientSet {
            a: MatrixField { grid: self.a.grid, values: a },
            b1: neg_conj(&self.b2),
            b2: neg_conj(&self.b1),
            q: ScalarField { grid: self.q.grid, values: self.q.values.iter().map(|z| z.conj()).collect() },
        }
    }

    /// Same operator with `extra` added to the potential.
    pub fn with_added_potential(&self, extra: &ScalarField) -> Result<Self> {
        if extra.grid != self.q.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.q.values.iter().zip(&extra.values).map(|(a, b)| a + b).collect();
        Ok(CoefficientSet { q: ScalarField::new(self.q.grid, values)?, ..self.clone() })
    }

    /// Same operator with `A` replaced.
    pub fn with_diffusion(&self, a: MatrixField) -> Result<Self> {
        Self::new(a, self.b1.clone(), self.b2.clone(), self.q.clone())
    }
}
