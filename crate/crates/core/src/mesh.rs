//! Discrete calculus on structured grids.
//!
//! Two gradient discretisations live here:
//!
//! * [`grad`]: nodal centred differences, used for pointwise diagnostics.
//! * [`GradSample`]: corner samples of every cell. Each cell contributes one
//!   sample per corner with weight `|cell| / 2^dim`; the component along axis
//!   `k` is the difference quotient over the cell edge in direction `k` that
//!   touches the corner, and values are taken at the corner node. All forms
//!   are quadratures over these samples, which makes `t(u, v)` exactly the
//!   pairing of the assembled operator and reproduces the textbook stencils.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::fields::{Boundary, Grid, ScalarField, Vec2};
use crate::{Error, Result};

/// Default regularisation threshold for `sgn u` and negative powers of `|u|`.
pub const DEFAULT_FLOOR: f64 = 1e-30;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Complex nodal values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        Ok(GridFunction { values: ScalarField::new(grid, values)?.values().to_vec(), grid })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> C64) -> Result<Self> {
        Self::new(grid, (0..grid.node_count()).map(|k| f(grid.coord(k))).collect())
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: vec![ZERO; grid.node_count()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Nodewise image under `f`.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&z| f(z)).collect())
    }

    pub fn scaled(&self, s: C64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Zeroes the boundary nodes (used to make probes admissible for Dirichlet).
    pub fn with_zero_boundary(mut self) -> Self {
        for k in 0..self.values.len() {
            if self.grid.is_boundary(k) {
                self.values[k] = ZERO;
            }
        }
        self
    }
}

/// Nodal gradient of a grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteGradient {
    pub grid: Grid,
    pub values: Vec<Vec2>,
}

/// Centred second-order gradient. At boundary nodes Neumann grids use ghost
/// reflection (normal component zero) and Dirichlet grids use the one-sided
/// second-order formula.
pub fn grad(u: &GridFunction) -> DiscreteGradient {
    let g = u.grid;
    let [nx, ny] = g.n();
    let mut values = vec![[ZERO; 2]; g.node_count()];
    for idx in 0..g.node_count() {
        let (i, j) = g.ij(idx);
        for (axis, (pos, len)) in [(i, nx), (j, ny)].into_iter().enumerate().take(g.dim()) {
            let h = g.spacing(axis);
            let at = |p: usize| {
                if axis == 0 {
                    u.values[g.index(p, j)]
                } else {
                    u.values[g.index(i, p)]
                }
            };
            values[idx][axis] = if pos > 0 && pos + 1 < len {
                (at(pos + 1) - at(pos - 1)) / (2.0 * h)
            } else {
                match g.bc() {
                    Boundary::Neumann => ZERO,
                    Boundary::Dirichlet if pos == 0 => {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    }
                    Boundary::Dirichlet => {
                        (3.0 * at(len - 1) - 4.0 * at(len - 2) + at(len - 3)) / (2.0 * h)
                    }
                }
            };
        }
    }
    DiscreteGradient { grid: g, values }
}

/// Trapezoidal `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(u: &GridFunction, p: f64) -> f64 {
    lp_norm_weighted(&u.values, &u.grid.weights(), p)
}

pub fn lp_norm_weighted(values: &[C64], weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let s: f64 = values.iter().zip(weights).map(|(z, w)| w * z.norm().powf(p)).sum();
    s.powf(1.0 / p)
}

/// `(u, v) = sum w u conj(v)` with trapezoidal weights.
pub fn inner(u: &GridFunction, v: &GridFunction) -> Result<C64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    Ok(u.grid.weights().iter().zip(u.values.iter().zip(&v.values)).map(|(w, (a, b))| a * b.conj() * *w).sum())
}

/// Output of [`signum_maps`].
#[derive(Clone, Debug)]
pub struct SignumMaps {
    pub absu: Vec<f64>,
    pub sgnu: Vec<C64>,
    /// `Im(conj(sgn u) grad u)`, nodal.
    pub eta: Vec<[f64; 2]>,
    /// `u |u|^{p/2 - 1}`.
    pub v_p: GridFunction,
    /// `u |u|^{p - 2}`.
    pub w_p: GridFunction,
    /// Nodes with `|u| <= floor`.
    pub floored: usize,
}

impl SignumMaps {
    /// More than 0.1% of nodes were floored.
    pub fn floor_flag(&self) -> bool {
        self.floored * 1000 > self.absu.len()
    }
}

/// `|u|^e` with `|u|` replaced by `max(|u|, floor)` when `e < 0`.
pub fn floored_power(r: f64, e: f64, floor: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e < 0.0 {
        r.max(floor).powf(e)
    } else {
        r.powf(e)
    }
}

pub fn signum_maps(u: &GridFunction, p: f64, floor: f64) -> Result<SignumMaps> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let absu = u.abs();
    let mut floored = 0;
    let sgnu: Vec<C64> = u
        .values
        .iter()
        .zip(&absu)
        .map(|(z, &r)| {
            if r > floor {
                z / r
            } else {
                floored += 1;
                ZERO
            }
        })
        .collect();
    let g = grad(u);
    let eta = sgnu
        .iter()
        .zip(&g.values)
        .map(|(s, gv)| [(s.conj() * gv[0]).im, (s.conj() * gv[1]).im])
        .collect();
    let v_p = u.values.iter().zip(&absu).map(|(z, &r)| z * floored_power(r, 0.5 * p - 1.0, floor)).collect();
    let w_p = u.values.iter().zip(&absu).map(|(z, &r)| z * floored_power(r, p - 2.0, floor)).collect();
    Ok(SignumMaps {
        absu,
        sgnu,
        eta,
        v_p: GridFunction::new(u.grid, v_p)?,
        w_p: GridFunction::new(u.grid, w_p)?,
        floored,
    })
}

/// `v |v|^{e}` nodewise, floored for negative `e`.
pub fn power_map(values: &[C64], e: f64, floor: f64) -> Vec<C64> {
    values.iter().map(|z| z * floored_power(z.norm(), e, floor)).collect()
}

/// One corner sample of a cell (see the module docs).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradSample {
    pub node: usize,
    pub weight: f64,
    /// `(lo, hi)` node pair of the edge along each axis.
    pub edges: [(usize, usize); 2],
    /// `1 / h_k`, zero for an unused axis.
    pub inv_h: [f64; 2],
}

impl GradSample {
    pub fn grad(&self, u: &[C64]) -> Vec2 {
        let mut g = [ZERO; 2];
        for k in 0..2 {
            let (lo, hi) = self.edges[k];
            g[k] = (u[hi] - u[lo]) * self.inv_h[k];
        }
        g
    }

    pub fn grad_real(&self, r: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..2 {
            let (lo, hi) = self.edges[k];
            g[k] = (r[hi] - r[lo]) * self.inv_h[k];
        }
        g
    }

    /// Phase gradient `eta` on each edge, see [`edge_eta`].
    pub fn eta(&self, u: &[C64]) -> [f64; 2] {
        let mut e = [0.0; 2];
        for k in 0..2 {
            let (lo, hi) = self.edges[k];
            e[k] = edge_eta(u[lo], u[hi]) * self.inv_h[k];
        }
        e
    }
}

/// Edge difference of the phase, scaled so that
/// `|hi - lo|^2 = (|hi| - |lo|)^2 + edge_eta(lo, hi)^2` holds exactly:
/// `2 sqrt(|lo| |hi|) sin(dtheta / 2)` with `dtheta = arg(hi conj(lo))`.
pub fn edge_eta(lo: C64, hi: C64) -> f64 {
    let (rl, rh) = (lo.norm(), hi.norm());
    if rl == 0.0 || rh == 0.0 {
        return 0.0;
    }
    let dtheta = (hi * lo.conj()).arg();
    2.0 * (rl * rh).sqrt() * (0.5 * dtheta).sin()
}

/// Corner samples of every cell. Sample weights summed per node give the
/// trapezoidal weights.
pub fn grad_samples(grid: &Grid) -> Vec<GradSample> {
    let [nx, ny] = grid.n();
    let hx = grid.spacing(0);
    let mut out = Vec::new();
    if grid.dim() == 1 {
        for i in 0..nx - 1 {
            for c in [i, i + 1] {
                out.push(GradSample {
                    node: c,
                    weight: 0.5 * hx,
                    edges: [(i, i + 1), (c, c)],
                    inv_h: [1.0 / hx, 0.0],
                });
            }
        }
        return out;
    }
    let hy = grid.spacing(1);
    let w = 0.25 * hx * hy;
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            for cj in [j, j + 1] {
                for ci in [i, i + 1] {
                    out.push(GradSample {
                        node: grid.index(ci, cj),
                        weight: w,
                        edges: [
                            (grid.index(i, cj), grid.index(i + 1, cj)),
                            (grid.index(ci, j), grid.index(ci, j + 1)),
                        ],
                        inv_h: [1.0 / hx, 1.0 / hy],
                    });
                }
            }
        }
    }
    out
}
