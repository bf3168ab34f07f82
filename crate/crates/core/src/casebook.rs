//! Worked examples: Hardy thresholds, the Neumann counterexample, invariance
//! under divergence-free antisymmetric diffusion, drift synthesis.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
use num_complex::Complex64 as C64;

use crate::constants::{synthesize_drift, StructuralConstants};
use crate::fields::{Boundary, CoefficientSet, Grid, MatrixField, ScalarField, VectorField};
use crate::forms::FormContext;
use crate::intervals::{self, Mode};
use crate::mesh::GridFunction;
use crate::probes::{random_probes, ProbeKind};
use crate::semigroup::{dissipativity_functional, DiscreteOperator};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HardyThresholds {
    pub beta: f64,
    pub n_dim: f64,
    pub p_minus: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::intervals::inf_as_null"))]
    pub p_plus: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::intervals::inf_as_null"))]
    pub p_max: f64,
    pub p_min: f64,
}

/// `p_-/+ = 2 / (1 +/- sqrt(1 - beta))` and the extended pair
/// `p_max = N/(N-2) p_+`, `p_min = p_max'`.
pub fn hardy(beta: f64, n_dim: f64) -> Result<HardyThresholds> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BadParameter(format!("beta = {beta} must lie in (0, 1)")));
    }
    let r = (1.0 - beta).sqrt();
    let p_minus = 2.0 / (1.0 + r);
    let p_plus = 2.0 / (1.0 - r);
    let (p_min, p_max) = intervals::extended_endpoints(p_minus, p_plus, n_dim)?;
    Ok(HardyThresholds { beta, n_dim, p_minus, p_plus, p_max, p_min })
}

/// `a/b` when a continued-fraction convergent with `b <= 10^6` matches `x`
/// to 12 significant digits, otherwise `x` to 12 significant digits.
pub fn render_rational(x: f64) -> String {
    if !x.is_finite() {
        return if x > 0.0 { "inf".into() } else if x < 0.0 { "-inf".into() } else { "nan".into() };
    }
    let tol = 1e-12 * x.abs().max(1e-300);
    let (mut h0, mut h1) = (0.0f64, 1.0f64);
    let (mut k0, mut k1) = (1.0f64, 0.0f64);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > 1e6 {
            break;
        }
        if (h2 / k2 - x).abs() <= tol {
            return if k2 == 1.0 { format!("{h2}") } else { format!("{h2}/{k2}") };
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    format_sig(x, 12)
}

/// `x` with `digits` significant digits, trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').into()
    } else {
        s
    }
}

/// Profile `tau` of the counterexample: `tau(0) = tau'(0) = tau'(1) = 0`,
/// `tau > 0` on `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Bump {
    /// `x^2 (3 - 2x)`
    #[default]
    Cubic,
    /// `x^3 (10 - 15x + 6x^2)`
    Quintic,
}

impl Bump {
    pub fn tau(self, x: f64) -> f64 {
        match self {
            Bump::Cubic => x * x * (3.0 - 2.0 * x),
            Bump::Quintic => x * x * x * (10.0 + x * (-15.0 + 6.0 * x)),
        }
    }

    pub fn dtau(self, x: f64) -> f64 {
        match self {
            Bump::Cubic => 6.0 * x * (1.0 - x),
            Bump::Quintic => 30.0 * x * x * (1.0 - x) * (1.0 - x),
        }
    }
}

/// Constants of the counterexample: `alpha_s = 1`, `beta' = 0`, `B' = 1`.
pub fn counterexample_constants() -> StructuralConstants {
    let mut c = StructuralConstants::default();
    c.alpha_s = 1.0;
    c.b_prime = 1.0;
    c
}

/// Same, with `beta' > 0`: the drift bound only gets weaker, and the
/// excluded case `beta' = 0 < alpha_s B'` is avoided.
pub fn counterexample_constants_with(beta_prime: f64) -> StructuralConstants {
    let mut c = counterexample_constants();
    c.beta_prime = beta_prime;
    c
}

/// `A = 1 + i`, `b1 = -i`, `b2 = Q = 0` on `(0, 1)` with Neumann conditions.
pub fn counterexample_coefficients(n: usize) -> Result<CoefficientSet> {
    let g = Grid::new_1d(0.0, 1.0, n, Boundary::Neumann)?;
    CoefficientSet::new(
        MatrixField::scaled_identity(g, C64::new(1.0, 1.0))?,
        VectorField::constant(g, [C64::new(0.0, -1.0), C64::new(0.0, 0.0)])?,
        VectorField::zeros(g),
        ScalarField::zeros(g),
    )
}

/// Default exponent `4 + 2 sqrt 2` (upper end of `I`).
pub const COUNTEREXAMPLE_P: f64 = 4.0 + 2.0 * SQRT_2;

/// Default `r = 1 - sqrt 2 - i`.
pub const COUNTEREXAMPLE_R: C64 = C64::new(1.0 - SQRT_2, -1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterexampleOptions {
    pub p: f64,
    pub r: C64,
    pub bump: Bump,
    /// Quadrature nodes (odd).
    pub quad_nodes: usize,
    /// Grid for the discrete operator; `None` skips it.
    pub grid_nodes: Option<usize>,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        CounterexampleOptions { p: COUNTEREXAMPLE_P, r: COUNTEREXAMPLE_R, bump: Bump::Cubic, quad_nodes: 2049, grid_nodes: Some(2049) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterexampleRow {
    pub lambda: f64,
    /// `(e^{p Re r lambda tau(1)} - 1) / (p Re r)` when the `lambda^2` term vanishes.
    pub closed_form: Option<f64>,
    pub quadrature: f64,
    pub discrete: Option<f64>,
    pub lp_norm: f64,
}

fn simpson(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = if n % 2 == 0 { n + 1 } else { n.max(3) };
    let h = 1.0 / (n - 1) as f64;
    let mut s = f(0.0) + f(1.0);
    for k in 1..n - 1 {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0
}

/// Coefficient of `lambda^2 int tau'^2 |u|^p` in `Re <L u, u|u|^{p-2}>`.
pub fn quadratic_coefficient(p: f64, r: C64) -> f64 {
    let a = r.re;
    (C64::new(1.0, 1.0) * r * (r.conj() + (p - 2.0) * a)).re
}

/// `r = a - i` minimising the `lambda^2` coefficient at exponent `p`; that
/// coefficient is negative exactly when `|p - 2| > 2 sqrt(p - 1)`.
pub fn steepest_r(p: f64) -> C64 {
    C64::new(-(p - 2.0) / (2.0 * (p - 1.0)), -1.0)
}

/// `u_lambda = exp(lambda r tau)` on `grid`.
pub fn u_lambda(grid: &Grid, lambda: f64, r: C64, bump: Bump) -> Result<GridFunction> {
    GridFunction::from_fn(*grid, |x| (r * (lambda * bump.tau(x[0]))).exp())
}

/// `Re <L u_lambda, u_lambda |u_lambda|^{p-2}>` three ways, and `||u_lambda||_p`.
pub fn neumann_counterexample(lambdas: &[f64], opts: &CounterexampleOptions) -> Result<Vec<CounterexampleRow>> {
    let (p, r, bump) = (opts.p, opts.r, opts.bump);
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let c2 = quadratic_coefficient(p, r);
    let pa = p * r.re;
    let op = match opts.grid_nodes {
        Some(n) => Some(DiscreteOperator::assemble(&FormContext::new(&counterexample_coefficients(n)?)?)?),
        None => None,
    };
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let up = |x: f64| (pa * lambda * bump.tau(x)).exp();
        let quadrature = simpson(opts.quad_nodes, |x| {
            let d = bump.dtau(x);
            (lambda * lambda * c2 * d * d + lambda * r.im * d) * up(x)
        });
        let closed_form = (c2.abs() <= 1e-12 && pa != 0.0)
            .then(|| r.im * ((pa * lambda * bump.tau(1.0)).exp() - 1.0) / pa);
        let lp_norm = simpson(opts.quad_nodes, up).powf(1.0 / p);
        let discrete = match &op {
            Some(op) => {
                let u = u_lambda(op.grid(), lambda, r, bump)?;
                Some(dissipativity_functional(op, &op.to_dofs(&u)?, p, 0.0)?)
            }
            None => None,
        };
        rows.push(CounterexampleRow { lambda, closed_form, quadrature, discrete, lp_norm });
    }
    Ok(rows)
}

/// Limit of the functional as `lambda -> infinity` at the default exponent.
pub fn counterexample_limit() -> f64 {
    -1.0 / 8.0f64.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error: f64,
    /// `log2(previous error / error)` for halved `h`.
    pub order: Option<f64>,
}

/// Discrete functional against the quadrature value under refinement.
pub fn counterexample_convergence(lambda: f64, grids: &[usize], opts: &CounterexampleOptions) -> Result<Vec<ConvergenceRow>> {
    let mut out: Vec<ConvergenceRow> = Vec::new();
    for &n in grids {
        let o = CounterexampleOptions { grid_nodes: Some(n), ..*opts };
        let row = neumann_counterexample(&[lambda], &o)?[0];
        let reference = row.closed_form.unwrap_or(row.quadrature);
        let error = (row.discrete.unwrap_or(f64::NAN) - reference).abs();
        let h = 1.0 / (n - 1) as f64;
        let order = out.last().map(|prev| (prev.error / error).ln() / (prev.h / h).ln());
        out.push(ConvergenceRow { n, h, error, order });
    }
    Ok(out)
}

/// At an interior exponent: `value + omega_hat_p ||u||_p^p >= 0` for each row
/// (declared-coercivity mode, since `beta' = 0`).
pub fn interior_margins(lambdas: &[f64], p: f64, opts: &CounterexampleOptions) -> Result<Vec<f64>> {
    let om = intervals::omega_hat(&counterexample_constants(), p, Mode::DeclaredCoercivity)?;
    let rows = neumann_counterexample(lambdas, &CounterexampleOptions { p, ..*opts })?;
    Ok(rows.iter().map(|r| r.discrete.unwrap_or(r.quadrature) + om * r.lp_norm.powf(p)).collect())
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvarianceRow {
    pub c: f64,
    /// `max |t_c(u, v) - t_0(u, v)|` over probe pairs.
    pub deviation: f64,
    /// `deviation / max(h0(u) + |u|^2)`.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvarianceReport {
    pub bc: Boundary,
    pub probes: usize,
    pub rows: Vec<InvarianceRow>,
    /// Nonzero deviations are expected without compact support.
    pub expected_nonzero: bool,
}

impl InvarianceReport {
    pub fn max_relative(&self) -> f64 {
        self.rows.iter().map(|r| r.relative).fold(0.0, f64::max)
    }
}

/// Adds `A1a = c [[0, 1], [-1, 0]]` (that is `A = I + i c J`) on a square
/// grid and compares the forms with `c = 0`.
pub fn divergence_free_invariance(c_list: &[f64], n: usize, bc: Boundary, probes: usize, seed: u64) -> Result<InvarianceReport> {
    let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), [n, n], bc)?;
    let base = FormContext::new(&CoefficientSet::laplacian(g)?)?;
    let ps = random_probes(&g, ProbeKind::Complex, probes, seed);
    let scale = ps.iter().map(|u| base.h0_raw(u.values()) + base.norm_sq(u.values())).fold(0.0, f64::max);
    let mut rows = Vec::new();
    for &c in c_list {
        let j = C64::new(0.0, c);
        let a = MatrixField::constant(g, [[C64::new(1.0, 0.0), j], [-j, C64::new(1.0, 0.0)]])?;
        let ctx = FormContext::new(&base.coefficients().with_diffusion(a)?)?;
        let mut deviation = 0.0f64;
        for (k, u) in ps.iter().enumerate() {
            let v = &ps[(k + 1) % ps.len()];
            for (x, y) in [(u, u), (u, v)] {
                deviation = deviation.max((ctx.t_raw(x.values(), y.values()) - base.t_raw(x.values(), y.values())).norm());
            }
        }
        rows.push(InvarianceRow { c, deviation, relative: deviation / scale });
    }
    Ok(InvarianceReport { bc, probes, rows, expected_nonzero: bc == Boundary::Neumann })
}

/// `(beta', B')` from `(alpha_a, beta_hat, B_hat)`.
pub fn drift_synthesis_demo(alpha_a: f64, beta_hat: f64, b_hat: f64) -> Result<(f64, f64)> {
    synthesize_drift(alpha_a, beta_hat, b_hat)
}

/// Two-dimensional stand-in for a Hardy potential on `[-1, 1]^2`:
/// `Q = -beta (N-2)^2 / 4 / max(|x|^2, eps)`, Dirichlet. Returns the
/// coefficients and the absorption weight `U = -Q`. Qualitative only.
pub fn hardy_surrogate(beta: f64, n_dim: f64, n: usize, eps: f64) -> Result<(CoefficientSet, Vec<f64>)> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BadParameter(format!("beta = {beta} must lie in (0, 1)")));
    }
    let g = Grid::new_2d((-1.0, 1.0), (-1.0, 1.0), [n, n], Boundary::Dirichlet)?;
    let k = beta * (n_dim - 2.0) * (n_dim - 2.0) / 4.0;
    let u: Vec<f64> = (0..g.node_count())
        .map(|i| {
            let x = g.coord(i);
            k / (x[0] * x[0] + x[1] * x[1]).max(eps)
        })
        .collect();
    let q = ScalarField::new(g, u.iter().map(|&v| C64::new(-v, 0.0)).collect())?;
    let cs = CoefficientSet::laplacian(g)?.with_added_potential(&q)?;
    Ok((cs, u))
}
