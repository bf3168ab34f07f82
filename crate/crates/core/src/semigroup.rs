//! Discrete operator, time stepping, `p -> r` norm estimation and the
//! semigroup audits built on them.
//!
//! The operator is assembled from the same corner samples as
//! [`FormContext::t_raw`], so `v^H K u = t_h(u, v)` holds to rounding. With
//! the lumped mass `M` the discrete generator is `L_h = M^{-1} K` and the
//! evolution is `M u' = -K u`. Dirichlet problems keep interior nodes only.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::{c_p, StructuralConstants};
use crate::fields::{Boundary, Grid, ScalarField};
use crate::forms::FormContext;
use crate::intervals::{self, Mode};
use crate::linalg::{materialize, BandLu, BandMatrix, DenseMatrix, LinearMap};
use crate::mesh::{self, GridFunction, DEFAULT_FLOOR};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `K` (stiffness, banded, over the degrees of freedom) and lumped mass.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    grid: Grid,
    dof_nodes: Vec<usize>,
    node_dof: Vec<Option<usize>>,
    k: BandMatrix,
    mass: Vec<f64>,
}

impl DiscreteOperator {
    pub fn assemble(ctx: &FormContext) -> Result<Self> {
        let grid = *ctx.grid();
        let cs = ctx.coefficients();
        let n_nodes = grid.node_count();
        let dirichlet = grid.bc() == Boundary::Dirichlet;
        let mut node_dof = vec![None; n_nodes];
        let mut dof_nodes = Vec::new();
        for (k, slot) in node_dof.iter_mut().enumerate() {
            if !(dirichlet && grid.is_boundary(k)) {
                *slot = Some(dof_nodes.len());
                dof_nodes.push(k);
            }
        }
        if dof_nodes.is_empty() {
            return Err(Error::Assembly("no degrees of freedom".to_string()));
        }
        let weights = ctx.weights();
        let mass: Vec<f64> = dof_nodes.iter().map(|&k| weights[k]).collect();
        if let Some(i) = mass.iter().position(|&m| !(m > 0.0)) {
            return Err(Error::Assembly(alloc::format!("singular mass at degree of freedom {i}")));
        }

        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        for s in ctx.samples() {
            let c = s.node;
            let a = &cs.a.values()[c];
            let b1 = &cs.b1.values()[c];
            let b2 = &cs.b2.values()[c];
            // rows/cols: (grad_0, grad_1, value)
            let mut blk = [[ZERO; 3]; 3];
            for j in 0..2 {
                for k in 0..2 {
                    blk[j][k] = a[j][k];
                }
                blk[2][j] = b1[j];
                blk[j][2] = -b2[j];
            }
            blk[2][2] = cs.q.values()[c];
            let mut stencil: Vec<(usize, [f64; 3])> = Vec::with_capacity(5);
            for ax in 0..2 {
                if s.inv_h[ax] == 0.0 {
                    continue;
                }
                let (lo, hi) = s.edges[ax];
                let mut e = [0.0; 3];
                e[ax] = s.inv_h[ax];
                stencil.push((hi, e));
                e[ax] = -s.inv_h[ax];
                stencil.push((lo, e));
            }
            stencil.push((c, [0.0, 0.0, 1.0]));
            for &(vn, cv) in &stencil {
                let Some(row) = node_dof[vn] else { continue };
                for &(un, cu) in &stencil {
                    let Some(col) = node_dof[un] else { continue };
                    let mut z = ZERO;
                    for (r, &x) in cv.iter().enumerate() {
                        if x == 0.0 {
                            continue;
                        }
                        for (q, &y) in cu.iter().enumerate() {
                            if y != 0.0 {
                                z += blk[r][q] * (x * y);
                            }
                        }
                    }
                    if z != ZERO {
                        triplets.push((row, col, z * s.weight));
                    }
                }
            }
        }
        let (mut kl, mut ku) = (0, 0);
        for &(i, j, _) in &triplets {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let mut k = BandMatrix::zeros(dof_nodes.len(), kl, ku);
        for (i, j, z) in triplets {
            k.add(i, j, z);
        }
        Ok(DiscreteOperator { grid, dof_nodes, node_dof, k, mass })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dofs(&self) -> usize {
        self.dof_nodes.len()
    }

    pub fn dof_nodes(&self) -> &[usize] {
        &self.dof_nodes
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> &BandMatrix {
        &self.k
    }

    pub fn to_dofs(&self, u: &GridFunction) -> Result<Vec<C64>> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.dof_nodes.iter().map(|&k| u.values()[k]).collect())
    }

    /// Nodal values; eliminated boundary nodes are zero.
    pub fn from_dofs(&self, x: &[C64]) -> GridFunction {
        let mut v = vec![ZERO; self.grid.node_count()];
        for (&k, &z) in self.dof_nodes.iter().zip(x) {
            v[k] = z;
        }
        GridFunction::new(self.grid, v).expect("finite values")
    }

    /// Nodal real array restricted to the degrees of freedom.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_nodes.iter().map(|&k| nodal[k]).collect()
    }

    pub fn node_dof(&self, node: usize) -> Option<usize> {
        self.node_dof[node]
    }

    /// `K x`.
    pub fn apply_k(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; x.len()];
        self.k.matvec(x, &mut out);
        out
    }

    /// `L_h x = M^{-1} K x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = self.apply_k(x);
        out.iter_mut().zip(&self.mass).for_each(|(z, m)| *z /= *m);
        out
    }

    /// `t_h(u, v) = v^H K u`.
    pub fn form(&self, u: &[C64], v: &[C64]) -> C64 {
        self.apply_k(u).iter().zip(v).map(|(a, b)| a * b.conj()).sum()
    }

    /// `<f, g>_h = sum m f conj(g)`.
    pub fn pairing(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).zip(&self.mass).map(|((a, b), m)| a * b.conj() * *m).sum()
    }

    pub fn dense_l(&self) -> DenseMatrix {
        let n = self.dofs();
        DenseMatrix::from_fn(n, n, |i, j| self.k.get(i, j) / self.mass[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    Trapezoid,
}

/// One factored time step `u -> T u`.
#[derive(Clone, Debug)]
pub struct Stepper {
    lu: BandLu,
    explicit: Option<BandMatrix>,
    mass: Vec<f64>,
    dt: f64,
    scheme: Scheme,
}

impl Stepper {
    pub fn new(op: &DiscreteOperator, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::BadParameter(alloc::format!("dt = {dt} must be positive")));
        }
        let theta = match scheme {
            Scheme::ImplicitEuler => 1.0,
            Scheme::Trapezoid => 0.5,
        };
        let lhs = op.k.scaled_plus_diagonal(C64::new(theta * dt, 0.0), ONE, &op.mass);
        let explicit = (scheme == Scheme::Trapezoid)
            .then(|| op.k.scaled_plus_diagonal(C64::new(-0.5 * dt, 0.0), ONE, &op.mass));
        Ok(Stepper { lu: lhs.factor()?, explicit, mass: op.mass.clone(), dt, scheme })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn step(&self, u: &mut [C64]) {
        match &self.explicit {
            Some(b) => {
                let rhs = u.to_vec();
                b.matvec(&rhs, u);
            }
            None => u.iter_mut().zip(&self.mass).for_each(|(z, m)| *z *= *m),
        }
        self.lu.solve_in_place(u);
    }

    /// Conjugate transpose of [`Stepper::step`] (Euclidean).
    pub fn step_adjoint(&self, u: &mut [C64]) {
        self.lu.solve_adjoint_in_place(u);
        match &self.explicit {
            Some(b) => {
                let rhs = u.to_vec();
                b.adjoint_matvec(&rhs, u);
            }
            None => u.iter_mut().zip(&self.mass).for_each(|(z, m)| *z *= *m),
        }
    }
}

/// One step of length `dt`.
pub fn step(op: &DiscreteOperator, u: &[C64], dt: f64, scheme: Scheme) -> Result<Vec<C64>> {
    let s = Stepper::new(op, dt, scheme)?;
    let mut v = u.to_vec();
    s.step(&mut v);
    Ok(v)
}

/// Time-`t` solution operator on the degrees of freedom.
#[derive(Clone, Debug)]
pub enum Propagator {
    Dense(DenseMatrix),
    Stepped { stepper: Stepper, steps: usize },
}

impl Propagator {
    /// `exp(-t L_h)` by scaling and squaring.
    pub fn exact(op: &DiscreteOperator, t: f64) -> Self {
        let mut l = op.dense_l();
        l.scale(C64::new(-t, 0.0));
        Propagator::Dense(l.expm())
    }

    /// `ceil(t / dt_max)` equal steps.
    pub fn stepped(op: &DiscreteOperator, t: f64, dt_max: f64, scheme: Scheme) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::BadParameter(alloc::format!("t = {t} must be positive")));
        }
        let steps = (t / dt_max).ceil().max(1.0) as usize;
        Ok(Propagator::Stepped { stepper: Stepper::new(op, t / steps as f64, scheme)?, steps })
    }

    /// Dense when the system has at most `dense_limit` unknowns.
    pub fn auto(op: &DiscreteOperator, t: f64, opts: &AuditOptions) -> Result<Self> {
        if op.dofs() <= opts.dense_limit {
            Ok(Self::exact(op, t))
        } else {
            Self::stepped(op, t, opts.dt, opts.scheme)
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Propagator::Dense(_) => "expm".to_string(),
            Propagator::Stepped { stepper, steps } => {
                alloc::format!("{:?} x{} dt={:.3e}", stepper.scheme(), steps, stepper.dt())
            }
        }
    }

    pub fn matrix(&self) -> DenseMatrix {
        match self {
            Propagator::Dense(m) => m.clone(),
            other => materialize(other),
        }
    }
}

impl LinearMap for Propagator {
    fn dim(&self) -> usize {
        match self {
            Propagator::Dense(m) => m.rows(),
            Propagator::Stepped { stepper, .. } => stepper.dim(),
        }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        match self {
            Propagator::Dense(m) => m.matvec(x, out),
            Propagator::Stepped { stepper, steps } => {
                out.copy_from_slice(x);
                for _ in 0..*steps {
                    stepper.step(out);
                }
            }
        }
    }

    fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        match self {
            Propagator::Dense(m) => m.adjoint_matvec(x, out),
            Propagator::Stepped { stepper, steps } => {
                out.copy_from_slice(x);
                for _ in 0..*steps {
                    stepper.step_adjoint(out);
                }
            }
        }
    }
}

/// `diag(left) B diag(right)` as a map.
struct Scaled<'a> {
    inner: &'a dyn LinearMap,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl LinearMap for Scaled<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        let y: Vec<C64> = x.iter().zip(&self.right).map(|(z, r)| z * *r).collect();
        self.inner.apply(&y, out);
        out.iter_mut().zip(&self.left).for_each(|(z, l)| *z *= *l);
    }

    fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        let y: Vec<C64> = x.iter().zip(&self.left).map(|(z, l)| z * *l).collect();
        self.inner.apply_adjoint(&y, out);
        out.iter_mut().zip(&self.right).for_each(|(z, r)| *z *= *r);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { restarts: 4, max_iter: 500, tol: 1e-13, seed: 42 }
    }
}

/// A lower bound for an operator norm (exact for `p = 1` or `r = inf`).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormEstimate {
    pub value: f64,
    pub exact: bool,
    pub restarts: usize,
    /// Best minus worst restart value.
    pub spread: f64,
    pub iterations: usize,
}

fn lp(x: &[C64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let mx = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if mx == 0.0 {
        return 0.0;
    }
    mx * x.iter().map(|z| (z.norm() / mx).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `|y|^{q-1} sgn y`, scaled so its largest entry has modulus one.
fn duality_map(y: &[C64], q: f64) -> Vec<C64> {
    let mx = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if mx == 0.0 {
        return y.to_vec();
    }
    y.iter()
        .map(|z| {
            let r = z.norm();
            if r == 0.0 {
                ZERO
            } else {
                z / r * (r / mx).powf(q - 1.0)
            }
        })
        .collect()
}

fn conj_exp(p: f64) -> f64 {
    intervals::dual(p)
}

/// `||B||_{p -> r}` in the norms `(sum m |x|^p)^{1/p}` (unweighted when
/// `weights` is `None`).
pub fn opnorm_pr(map: &dyn LinearMap, weights: Option<&[f64]>, p: f64, r: f64, opts: &NormOptions) -> Result<NormEstimate> {
    if !(p >= 1.0) || !(r >= 1.0) {
        return Err(Error::BadExponent(if p >= 1.0 { r } else { p }));
    }
    let n = map.dim();
    let scaled;
    let b: &dyn LinearMap = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::GridMismatch);
            }
            let pw = |e: f64| -> Vec<f64> { w.iter().map(|m| if e == 0.0 { 1.0 } else { m.powf(e) }).collect() };
            let inv = |q: f64| if q.is_infinite() { 0.0 } else { 1.0 / q };
            scaled = Scaled { inner: map, left: pw(inv(r)), right: pw(-inv(p)) };
            &scaled
        }
        None => map,
    };
    if r.is_infinite() || p == 1.0 {
        let m = materialize(b);
        let value = if r.is_infinite() {
            let q = conj_exp(p);
            (0..n).map(|i| lp(m.row(i), q)).fold(0.0, f64::max)
        } else {
            let col: Vec<C64> = vec![ZERO; n];
            (0..n)
                .map(|j| {
                    let mut c = col.clone();
                    for (i, z) in c.iter_mut().enumerate() {
                        *z = m[(i, j)];
                    }
                    lp(&c, r)
                })
                .fold(0.0, f64::max)
        };
        return Ok(NormEstimate { value, exact: true, restarts: 0, spread: 0.0, iterations: 0 });
    }
    let (mut best, mut worst, mut iters) = boyd(b, p, r, opts);
    // the same norm seen from the adjoint side; a second set of local maxima
    if (p, r) != (2.0, 2.0) {
        let (bd, wd, it) = boyd(&Adjoint(b), conj_exp(r), conj_exp(p), opts);
        best = best.max(bd);
        worst = worst.min(wd);
        iters += it;
    }
    Ok(NormEstimate { value: best, exact: false, restarts: opts.restarts.max(1), spread: best - worst, iterations: iters })
}

struct Adjoint<'a>(&'a dyn LinearMap);

impl LinearMap for Adjoint<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        self.0.apply_adjoint(x, out);
    }

    fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        self.0.apply(x, out);
    }
}

/// Boyd's nonlinear power iteration: best and worst restart value and the
/// iteration count.
fn boyd(b: &dyn LinearMap, p: f64, r: f64, opts: &NormOptions) -> (f64, f64, usize) {
    let n = b.dim();
    let pd = conj_exp(p);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = 0.0f64;
    let mut worst = f64::INFINITY;
    let mut iters = 0;
    let mut y = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    for restart in 0..opts.restarts.max(1) {
        let mut x: Vec<C64> = match restart {
            0 => vec![ONE; n],
            1 => (0..n).map(|_| C64::new(rng.gen_range(0.0..1.0), 0.0)).collect(),
            _ => (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        };
        let nx = lp(&x, p);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut val = 0.0f64;
        for _ in 0..opts.max_iter {
            iters += 1;
            b.apply(&x, &mut y);
            let new = lp(&y, r);
            if new == 0.0 {
                val = 0.0;
                break;
            }
            let converged = (new - val).abs() <= opts.tol * new;
            val = val.max(new);
            if converged {
                break;
            }
            b.apply_adjoint(&duality_map(&y, r), &mut z);
            let xn = duality_map(&z, pd);
            let nx = lp(&xn, p);
            if nx == 0.0 {
                break;
            }
            x = xn.into_iter().map(|v| v / nx).collect();
        }
        best = best.max(val);
        worst = worst.min(val);
    }
    (best, worst, iters)
}

pub fn opnorm_p(map: &dyn LinearMap, weights: Option<&[f64]>, p: f64, opts: &NormOptions) -> Result<NormEstimate> {
    opnorm_pr(map, weights, p, p, opts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditOptions {
    /// Relative slack on `exp(omega t)`.
    pub tol: f64,
    pub norm: NormOptions,
    /// Largest system evolved by the dense exponential.
    pub dense_limit: usize,
    /// Step for stepped propagators.
    pub dt: f64,
    pub scheme: Scheme,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { tol: 1e-3, norm: NormOptions::default(), dense_limit: 600, dt: 1e-4, scheme: Scheme::ImplicitEuler }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING-KEBAB-CASE"))]
pub enum AuditStatus {
    Pass,
    Breach,
    ExpectNoGuarantee,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryRow {
    pub p: f64,
    pub t: f64,
    pub measured: f64,
    pub bound: Option<f64>,
    pub margin: Option<f64>,
    pub status: AuditStatus,
    pub method: String,
    pub restart_spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryReport {
    pub mode: Mode,
    pub tol: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryReport {
    pub fn breaches(&self) -> usize {
        self.rows.iter().filter(|r| r.status == AuditStatus::Breach).count()
    }
}

/// Measures `||S(t)||_{p -> p}` against `exp(omega_hat_p t)`. Exponents
/// outside `I` (or refused by `mode`) are reported without a bound.
pub fn quasi_contractivity_audit(
    op: &DiscreteOperator,
    constants: &StructuralConstants,
    mode: Mode,
    p_list: &[f64],
    t_list: &[f64],
    opts: &AuditOptions,
) -> Result<TrajectoryReport> {
    let mut ts = t_list.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();
    let interval = intervals::interval_i(constants);
    let mut rows = Vec::new();
    for &t in &ts {
        let prop = Propagator::auto(op, t, opts)?;
        for &p in p_list {
            let est = opnorm_p(&prop, Some(op.mass()), p, &opts.norm)?;
            let in_i = interval.map_or(false, |i| i.contains(p));
            let omega = if in_i { intervals::omega_hat(constants, p, mode).ok() } else { None };
            let bound = omega.map(|w| (w * t).exp());
            let (margin, status) = match bound {
                Some(b) => {
                    let ok = est.value <= b * (1.0 + opts.tol);
                    (Some(b - est.value), if ok { AuditStatus::Pass } else { AuditStatus::Breach })
                }
                None => (None, AuditStatus::ExpectNoGuarantee),
            };
            rows.push(TrajectoryRow {
                p,
                t,
                measured: est.value,
                bound,
                margin,
                status,
                method: prop.describe(),
                restart_spread: est.spread,
            });
        }
    }
    Ok(TrajectoryReport { mode, tol: opts.tol, rows })
}

/// `Re <(omega + L_h) u, u |u|^{p-2}>_h` on degrees of freedom.
pub fn dissipativity_functional(op: &DiscreteOperator, u: &[C64], p: f64, omega: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let w = mesh::power_map(u, p - 2.0, DEFAULT_FLOOR);
    let ku = op.apply_k(u);
    Ok(ku
        .iter()
        .zip(u)
        .zip(&w)
        .zip(op.mass())
        .map(|(((k, x), w), m)| ((k + x * (omega * m)) * w.conj()).re)
        .sum())
}

/// `(eps_p h0(|v|) - omega_hat |v|^2, eps h0(v) - (omega_hat + eps/(1-eps) B_hat) |v|^2)`
/// for `v = u |u|^{p/2-1}`.
pub fn dissipativity_lower_bounds(
    ctx: &FormContext,
    constants: &StructuralConstants,
    u: &GridFunction,
    p: f64,
    mode: Mode,
    eps: f64,
) -> Result<(f64, f64)> {
    let v = mesh::power_map(u.values(), 0.5 * p - 1.0, DEFAULT_FLOOR);
    let absv: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    let om = intervals::omega_hat(constants, p, mode)?;
    let bh = intervals::b_hat_p(constants, p, mode)?;
    let n = ctx.norm_sq(&v);
    let first = intervals::eps_p(constants, p) * ctx.h0_real(&absv) - om * n;
    let second = eps * ctx.h0_raw(&v) - (om + eps / (1.0 - eps) * bh) * n;
    Ok((first, second))
}

/// `|Im <L u, w>| / Re <(L + omega + mu) u, w>` with `w = u |u|^{p-2}`.
pub fn sectoriality_ratio(op: &DiscreteOperator, u: &[C64], p: f64, shift: f64) -> Result<f64> {
    let w = mesh::power_map(u, p - 2.0, DEFAULT_FLOOR);
    let ku = op.apply_k(u);
    let z: C64 = ku.iter().zip(&w).map(|(k, w)| k * w.conj()).sum();
    let re = dissipativity_functional(op, u, p, shift)?;
    Ok(z.im.abs() / re)
}

/// `||S(t+s) f - S(t) S(s) f||_2 / ||f||_2`.
pub fn semigroup_defect(op: &DiscreteOperator, f: &[C64], t: f64, s: f64, opts: &AuditOptions) -> Result<f64> {
    let apply = |prop: &Propagator, x: &[C64]| {
        let mut out = vec![ZERO; x.len()];
        prop.apply(x, &mut out);
        out
    };
    let whole = apply(&Propagator::auto(op, t + s, opts)?, f);
    let split = apply(&Propagator::auto(op, t, opts)?, &apply(&Propagator::auto(op, s, opts)?, f));
    let diff: Vec<C64> = whole.iter().zip(&split).map(|(a, b)| a - b).collect();
    let nrm = |x: &[C64]| op.pairing(x, x).re.sqrt();
    Ok(nrm(&diff) / nrm(f))
}

/// `D_{U^{1/p}} (lambda M + K)^{-1} M`.
struct WeightedResolvent {
    lu: BandLu,
    mass: Vec<f64>,
    weight: Vec<f64>,
}

impl LinearMap for WeightedResolvent {
    fn dim(&self) -> usize {
        self.mass.len()
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        for ((o, z), m) in out.iter_mut().zip(x).zip(&self.mass) {
            *o = z * *m;
        }
        self.lu.solve_in_place(out);
        out.iter_mut().zip(&self.weight).for_each(|(z, w)| *z *= *w);
    }

    fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        for ((o, z), w) in out.iter_mut().zip(x).zip(&self.weight) {
            *o = z * *w;
        }
        self.lu.solve_adjoint_in_place(out);
        out.iter_mut().zip(&self.mass).for_each(|(z, m)| *z *= *m);
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResolventRow {
    pub lambda: f64,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Checks `U(v_p(u)) <= Re <L u, w_p(u)>` on `probes`, then measures
/// `||U^{1/p} (lambda + L)^{-1}||_{p -> p}` against `lambda^{-1/p'}`.
pub fn resolvent_weight_bound(
    op: &DiscreteOperator,
    u_weight: &ScalarField,
    p: f64,
    lambdas: &[f64],
    probes: &[GridFunction],
    opts: &AuditOptions,
) -> Result<Vec<ResolventRow>> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    if u_weight.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let u_nodal: Vec<f64> = u_weight.values().iter().map(|z| z.re).collect();
    if let Some(k) = u_nodal.iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::BadWeight(k));
    }
    let u_dof = op.restrict(&u_nodal);
    for (idx, probe) in probes.iter().enumerate() {
        let u = op.to_dofs(probe)?;
        let v = mesh::power_map(&u, 0.5 * p - 1.0, DEFAULT_FLOOR);
        let lhs: f64 = v.iter().zip(&u_dof).zip(op.mass()).map(|((z, w), m)| z.norm_sqr() * w * m).sum();
        let rhs = dissipativity_functional(op, &u, p, 0.0)?;
        if lhs > rhs * (1.0 + 1e-10) + 1e-14 {
            return Err(Error::HypothesisUnmet { probe: idx, lhs, rhs });
        }
    }
    let weight: Vec<f64> = u_dof.iter().map(|w| w.powf(1.0 / p)).collect();
    let mut rows = Vec::new();
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(Error::BadParameter(alloc::format!("lambda = {lambda} must be positive")));
        }
        let lu = op.k.scaled_plus_diagonal(ONE, C64::new(lambda, 0.0), op.mass()).factor()?;
        let map = WeightedResolvent { lu, mass: op.mass().to_vec(), weight: weight.clone() };
        let measured = if weight.iter().all(|&w| w == 0.0) { 0.0 } else { opnorm_p(&map, Some(op.mass()), p, &opts.norm)?.value };
        let bound = lambda.powf(-1.0 / conj_exp(p));
        rows.push(ResolventRow { lambda, measured, bound, margin: bound - measured, pass: measured <= bound * (1.0 + opts.tol) });
    }
    Ok(rows)
}

/// `rho^{-1} S rho` for a positive weight.
struct Twisted<'a> {
    inner: &'a dyn LinearMap,
    rho: Vec<f64>,
}

impl LinearMap for Twisted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        let y: Vec<C64> = x.iter().zip(&self.rho).map(|(z, r)| z * *r).collect();
        self.inner.apply(&y, out);
        out.iter_mut().zip(&self.rho).for_each(|(z, r)| *z /= *r);
    }

    fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        let y: Vec<C64> = x.iter().zip(&self.rho).map(|(z, r)| z / *r).collect();
        self.inner.apply_adjoint(&y, out);
        out.iter_mut().zip(&self.rho).for_each(|(z, r)| *z *= *r);
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthRow {
    pub xi: [f64; 2],
    pub t: f64,
    pub measured: f64,
    pub ceiling: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthFit {
    pub p: f64,
    /// Fitted coefficient of `|xi|^2 t` in `log N`.
    pub mu: f64,
    /// Fitted coefficient of `t`.
    pub omega: f64,
    pub rows: Vec<GrowthRow>,
    /// Whether every measured value stays below its ceiling (when given).
    pub within_ceiling: bool,
}

/// Least squares for `y = a x1 + b x2`.
fn fit2(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x1, x2, y) in rows {
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * y;
        r2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return (if s11 > 0.0 { r1 / s11 } else { 0.0 }, 0.0);
    }
    ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
}

/// Measures `||rho_xi^{-1} S(t) rho_xi||_{p -> p}` with
/// `rho_xi = exp(-<xi, x - centre>)` and fits `log N = mu |xi|^2 t + omega t`.
/// With `constants`, each row also gets the ceiling
/// `exp((omega_p + mu_p + c2 |xi|^2 (C_p / mu_p + 1)) t)`.
pub fn weighted_growth_audit(
    op: &DiscreteOperator,
    ctx: &FormContext,
    p: f64,
    xi_list: &[[f64; 2]],
    t_list: &[f64],
    constants: Option<(&StructuralConstants, Mode)>,
    opts: &AuditOptions,
) -> Result<GrowthFit> {
    let grid = *op.grid();
    let centre = [0.5 * (grid.lower()[0] + grid.upper()[0]), 0.5 * (grid.lower()[1] + grid.upper()[1])];
    let (_, c2) = crate::fields::validate_ellipticity(ctx.decomposition())?;
    let ceiling_rates = match constants {
        Some((c, mode)) => {
            let (mu, om) = intervals::mu_omega_for(c, p, None, mode)?;
            Some((mu, om, c_p(c, p)))
        }
        None => None,
    };
    let mut rows = Vec::new();
    for &t in t_list {
        let prop = Propagator::auto(op, t, opts)?;
        for xi in xi_list {
            let rho: Vec<f64> = op
                .dof_nodes()
                .iter()
                .map(|&k| {
                    let x = grid.coord(k);
                    (-(xi[0] * (x[0] - centre[0]) + xi[1] * (x[1] - centre[1]))).exp()
                })
                .collect();
            let tw = Twisted { inner: &prop, rho };
            let measured = opnorm_p(&tw, Some(op.mass()), p, &opts.norm)?.value;
            let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
            let ceiling = ceiling_rates.map(|(mu, om, cp)| ((om + mu + c2 * xi2 * (cp / mu + 1.0)) * t).exp());
            rows.push(GrowthRow { xi: *xi, t, measured, ceiling });
        }
    }
    let data: Vec<(f64, f64, f64)> =
        rows.iter().map(|r| ((r.xi[0] * r.xi[0] + r.xi[1] * r.xi[1]) * r.t, r.t, r.measured.ln())).collect();
    let (mu, omega) = fit2(&data);
    let within_ceiling = rows.iter().all(|r| r.ceiling.map_or(true, |c| r.measured <= c * (1.0 + opts.tol)));
    Ok(GrowthFit { p, mu, omega, rows, within_ceiling })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothingFit {
    pub p: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::intervals::inf_as_null"))]
    pub r: f64,
    pub rows: Vec<(f64, f64)>,
    /// `N(t) ~ constant * t^(-exponent)`.
    pub exponent: f64,
    pub constant: f64,
    /// Largest relative deviation from the fitted power law.
    pub max_rel_dev: f64,
    pub pass: bool,
}

/// `||S(t)||_{p -> r}` on `t_list` with a power-law fit; passes when every
/// point lies within 10% of the fit.
pub fn smoothing_audit(op: &DiscreteOperator, p: f64, r: f64, t_list: &[f64], opts: &AuditOptions) -> Result<SmoothingFit> {
    let mut rows = Vec::new();
    for &t in t_list {
        let prop = Propagator::auto(op, t, opts)?;
        let est = opnorm_pr(&prop, Some(op.mass()), p, r, &opts.norm)?;
        rows.push((t, est.value));
    }
    let data: Vec<(f64, f64, f64)> = rows.iter().map(|&(t, n)| (-t.ln(), 1.0, n.ln())).collect();
    let (exponent, logc) = fit2(&data);
    let constant = logc.exp();
    let max_rel_dev =
        rows.iter().map(|&(t, n)| (n / (constant * t.powf(-exponent)) - 1.0).abs()).fold(0.0, f64::max);
    Ok(SmoothingFit { p, r, rows, exponent, constant, max_rel_dev, pass: max_rel_dev <= 0.1 })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationReport {
    pub p: f64,
    /// Sorted, deduplicated truncation levels.
    pub levels: Vec<f64>,
    /// `gaps[k] = max_f sup_t ||S_{m_k} f - S_{m_{k+1}} f||_p`.
    pub gaps: Vec<f64>,
    pub monotone: bool,
}

/// Evolves `f` under `Q + (U - m)^+` for each level `m` and records the
/// Cauchy gaps between consecutive levels (implicit Euler, step `dt`).
pub fn truncation_convergence(
    ctx: &FormContext,
    u_abs: &[f64],
    p: f64,
    levels: &[f64],
    t_final: f64,
    dt: f64,
    corpus: &[GridFunction],
) -> Result<TruncationReport> {
    let grid = *ctx.grid();
    if u_abs.len() != grid.node_count() {
        return Err(Error::GridMismatch);
    }
    let mut ms = levels.to_vec();
    ms.sort_by(|a, b| a.total_cmp(b));
    ms.dedup();
    if ms.len() < 2 {
        return Err(Error::BadParameter("need at least two truncation levels".to_string()));
    }
    let base = ctx.coefficients();
    let mut ops = Vec::new();
    for &m in &ms {
        let extra = ScalarField::new(grid, u_abs.iter().map(|&u| C64::new((u - m).max(0.0), 0.0)).collect())?;
        let op = DiscreteOperator::assemble(&FormContext::new(&base.with_added_potential(&extra)?)?)?;
        ops.push(op);
    }
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let steppers = ops.iter().map(|op| Stepper::new(op, dt, Scheme::ImplicitEuler)).collect::<Result<Vec<_>>>()?;
    let mass = ops[0].mass().to_vec();
    let mut gaps = vec![0.0f64; ms.len() - 1];
    for f in corpus {
        let f0 = ops[0].to_dofs(f)?;
        let mut states: Vec<Vec<C64>> = vec![f0; ms.len()];
        for _ in 0..steps {
            for (s, st) in states.iter_mut().zip(&steppers) {
                st.step(s);
            }
            for k in 0..gaps.len() {
                let d: Vec<C64> = states[k].iter().zip(&states[k + 1]).map(|(a, b)| a - b).collect();
                gaps[k] = gaps[k].max(mesh::lp_norm_weighted(&d, &mass, p));
            }
        }
    }
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(TruncationReport { p, levels: ms, gaps, monotone })
}

/// `||u||_p` on degrees of freedom.
pub fn dof_norm(op: &DiscreteOperator, u: &[C64], p: f64) -> f64 {
    mesh::lp_norm_weighted(u, op.mass(), p)
}

/// Largest eigenvalue bound `max |L_h|` used to pick safe step sizes.
pub fn stiffness_scale(op: &DiscreteOperator) -> f64 {
    let n = op.dofs();
    (0..n)
        .map(|i| op.k.row_range(i).map(|j| op.k.get(i, j).norm()).sum::<f64>() / op.mass[i])
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{CoefficientSet, MatrixField, VectorField};
    use crate::probes::{random_probes, ProbeKind};
    use core::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn heat(n: usize, bc: Boundary) -> (FormContext, DiscreteOperator) {
        let g = Grid::new_1d(0.0, 1.0, n, bc).unwrap();
        let ctx = FormContext::new(&CoefficientSet::laplacian(g).unwrap()).unwrap();
        let op = DiscreteOperator::assemble(&ctx).unwrap();
        (ctx, op)
    }

    fn example(n: usize) -> (FormContext, DiscreteOperator) {
        let g = Grid::new_1d(0.0, 1.0, n, Boundary::Neumann).unwrap();
        let cs = CoefficientSet::new(
            MatrixField::scaled_identity(g, c(1.0, 1.0)).unwrap(),
            VectorField::constant(g, [c(0.0, -1.0), c(0.0, 0.0)]).unwrap(),
            VectorField::zeros(g),
            ScalarField::zeros(g),
        )
        .unwrap();
        let ctx = FormContext::new(&cs).unwrap();
        let op = DiscreteOperator::assemble(&ctx).unwrap();
        (ctx, op)
    }

    #[test]
    fn dirichlet_laplacian_is_the_three_point_stencil() {
        let (_, op) = heat(5, Boundary::Dirichlet);
        let h = 0.25;
        let l = op.dense_l();
        assert_eq!(op.dofs(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = match (i as i64 - j as i64).abs() {
                    0 => 2.0,
                    1 => -1.0,
                    _ => 0.0,
                } / (h * h);
                assert!((l[(i, j)] - c(want, 0.0)).norm() < 1e-10, "{i} {j}");
            }
        }
    }

    #[test]
    fn operator_reproduces_the_form() {
        let (ctx, op) = example(33);
        let ps = random_probes(op.grid(), ProbeKind::Complex, 5, 3);
        for u in &ps {
            for v in &ps {
                let a = op.form(&op.to_dofs(u).unwrap(), &op.to_dofs(v).unwrap());
                let b = ctx.form_t(u, v).unwrap();
                assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn hermitian_data_gives_a_self_adjoint_operator() {
        let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), [7, 6], Boundary::Neumann).unwrap();
        let a = MatrixField::from_fn(g, |x| [[c(2.0 + x[0], 0.0), c(0.3, 0.4)], [c(0.3, -0.4), c(1.0, 0.0)]]).unwrap();
        let q = ScalarField::from_fn(g, |x| c(x[1] - 0.5, 0.0)).unwrap();
        let cs = CoefficientSet::new(a, VectorField::zeros(g), VectorField::zeros(g), q).unwrap();
        let op = DiscreteOperator::assemble(&FormContext::new(&cs).unwrap()).unwrap();
        let ps = random_probes(&g, ProbeKind::Complex, 4, 8);
        for u in &ps {
            for v in &ps {
                let (x, y) = (op.to_dofs(u).unwrap(), op.to_dofs(v).unwrap());
                let lhs = op.pairing(&op.apply(&x), &y);
                let rhs = op.pairing(&x, &op.apply(&y));
                assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn example_operator_matches_exact_pairing() {
        // u = cos(pi x), v = cos(2 pi x) + i x^2(1-x)^2 ... compare with exact integrals
        let exact = |n: usize| {
            let (_, op) = example(n);
            let g = *op.grid();
            let u = GridFunction::from_fn(g, |x| c((PI * x[0]).cos(), 0.0)).unwrap();
            let v = GridFunction::from_fn(g, |x| c((2.0 * PI * x[0]).cos(), 0.0)).unwrap();
            let z = op.form(&op.to_dofs(&u).unwrap(), &op.to_dofs(&v).unwrap());
            // (1+i) int u'v' - i int u' v with int u'v' = 0, int u' v = -pi int sin(pi x) cos(2 pi x) = 2/3
            (z - c(0.0, -1.0) * c(2.0 / 3.0, 0.0)).norm()
        };
        let (e1, e2) = (exact(65), exact(129));
        assert!(e2 < 1e-3);
        assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
    }

    #[test]
    fn near_zero_operator_step_and_trapezoid_ratio() {
        let g = Grid::new_1d(0.0, 1.0, 9, Boundary::Neumann).unwrap();
        let cs = CoefficientSet::new(
            MatrixField::scaled_identity(g, c(1e-10, 0.0)).unwrap(),
            VectorField::zeros(g),
            VectorField::zeros(g),
            ScalarField::zeros(g),
        )
        .unwrap();
        let op = DiscreteOperator::assemble(&FormContext::new(&cs).unwrap()).unwrap();
        let u: Vec<C64> = (0..9).map(|k| c(k as f64, 1.0)).collect();
        let v = step(&op, &u, 0.1, Scheme::Trapezoid).unwrap();
        assert!(u.iter().zip(&v).all(|(a, b)| (a - b).norm() < 1e-6));

        let (_, op) = heat(33, Boundary::Dirichlet);
        let g = *op.grid();
        let h = g.spacing(0);
        let lam = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        let m = op.to_dofs(&GridFunction::from_fn(g, |x| c((PI * x[0]).sin(), 0.0)).unwrap()).unwrap();
        let dt = 0.01;
        let s = step(&op, &m, dt, Scheme::Trapezoid).unwrap();
        let ratio = (1.0 - dt * lam / 2.0) / (1.0 + dt * lam / 2.0);
        for (a, b) in s.iter().zip(&m) {
            assert!((a - b * ratio).norm() < 1e-12);
        }
    }

    #[test]
    fn heat_decay_of_the_first_mode() {
        let (_, op) = heat(257, Boundary::Dirichlet);
        let g = *op.grid();
        let u0 = op.to_dofs(&GridFunction::from_fn(g, |x| c((PI * x[0]).sin(), 0.0)).unwrap()).unwrap();
        let t = 0.1;
        let prop = Propagator::stepped(&op, t, 1e-3, Scheme::Trapezoid).unwrap();
        let mut u = vec![ZERO; u0.len()];
        prop.apply(&u0, &mut u);
        let ratio = dof_norm(&op, &u, 2.0) / dof_norm(&op, &u0, 2.0);
        assert!((ratio / (-PI * PI * t).exp() - 1.0).abs() < 0.01);
    }

    #[test]
    fn norm_estimates_on_simple_matrices() {
        let opts = NormOptions::default();
        let id = DenseMatrix::identity(6);
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!((opnorm_p(&id, None, p, &opts).unwrap().value - 1.0).abs() < 1e-14);
        }
        let mut d = DenseMatrix::zeros(2, 2);
        d[(0, 0)] = c(2.0, 0.0);
        d[(1, 1)] = c(1.0, 0.0);
        for p in [1.0, 1.3, 2.0, 4.0, f64::INFINITY] {
            assert!((opnorm_p(&d, None, p, &opts).unwrap().value - 2.0).abs() < 1e-12);
        }
    }

    /// Cyclic Jacobi eigenvalues of a real symmetric matrix.
    fn jacobi_max_eig(mut a: Vec<Vec<f64>>) -> f64 {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * cs;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = cs * akp - sn * akq;
                        a[k][q] = sn * akp + cs * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = cs * apk - sn * aqk;
                        a[q][k] = sn * apk + cs * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn two_norm_matches_singular_value_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50;
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let btb: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| b[k][i] * b[k][j]).sum()).collect()).collect();
        let sigma = jacobi_max_eig(btb).sqrt();
        let m = DenseMatrix::from_fn(n, n, |i, j| c(b[i][j], 0.0));
        let est = opnorm_p(&m, None, 2.0, &NormOptions::default()).unwrap();
        assert!((est.value - sigma).abs() <= 1e-8 * sigma, "{} {}", est.value, sigma);
    }

    #[test]
    fn weighted_exact_norms_agree_with_power_iteration_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 12;
        let m = DenseMatrix::from_fn(n, n, |_, _| c(rng.gen_range(0.0..1.0), 0.0));
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let opts = NormOptions::default();
        let one = opnorm_p(&m, Some(&w), 1.0, &opts).unwrap().value;
        let near = opnorm_p(&m, Some(&w), 1.0001, &opts).unwrap().value;
        assert!((one - near).abs() < 1e-2 * one);
        let inf = opnorm_p(&m, Some(&w), f64::INFINITY, &opts).unwrap().value;
        let big = opnorm_p(&m, Some(&w), 2000.0, &opts).unwrap().value;
        assert!((inf - big).abs() < 1e-2 * inf);
    }

    #[test]
    fn heat_semigroup_is_contractive() {
        let (_, op) = heat(65, Boundary::Dirichlet);
        let c0 = StructuralConstants::default();
        let opts = AuditOptions::default();
        let rep = quasi_contractivity_audit(&op, &c0, Mode::Thm13, &[1.5, 2.0, 4.0], &[0.01, 0.1], &opts).unwrap();
        for r in &rep.rows {
            assert_eq!(r.status, AuditStatus::Pass);
            assert!(r.measured <= 1.0 + 1e-8, "{r:?}");
        }
    }

    #[test]
    fn semigroup_property_holds() {
        let (_, op) = example(65);
        let f = op.to_dofs(&random_probes(op.grid(), ProbeKind::Complex, 1, 2)[0]).unwrap();
        let d = semigroup_defect(&op, &f, 0.03, 0.05, &AuditOptions::default()).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn dissipativity_of_real_symmetric_forms() {
        let (_, op) = heat(65, Boundary::Neumann);
        for u in random_probes(op.grid(), ProbeKind::Complex, 20, 4) {
            let x = op.to_dofs(&u).unwrap();
            for p in [1.5, 3.0, 8.0] {
                assert!(dissipativity_functional(&op, &x, p, 0.0).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn resolvent_weight_examples() {
        let (ctx, op) = heat(65, Boundary::Dirichlet);
        let g = *op.grid();
        let p = 3.0;
        let probes = crate::probes::standard_family(&g, ProbeKind::Complex, 6, 1);
        let opts = AuditOptions::default();
        let zero = resolvent_weight_bound(&op, &ScalarField::zeros(g), p, &[1.0], &probes, &opts).unwrap();
        assert_eq!(zero[0].measured, 0.0);
        // a(v) >= lambda1 |v|^2 and Re <Lu, w> >= 4/(p p') a(v_p)
        let phi = crate::probes::tensor_mode(&g, 1, 0);
        let phic: Vec<C64> = phi.iter().map(|&x| c(x, 0.0)).collect();
        let lambda1 = ctx.a_raw(&phic) / ctx.norm_sq(&phic);
        let kappa = 0.5 * 4.0 / (p * intervals::dual(p)) * lambda1;
        let u = ScalarField::constant(g, c(kappa, 0.0)).unwrap();
        let rows = resolvent_weight_bound(&op, &u, p, &[1.0, 10.0, 100.0], &probes, &opts).unwrap();
        assert!(rows.iter().all(|r| r.pass && r.margin >= 0.0), "{rows:?}");
        let u4 = ScalarField::constant(g, c(4.0 * kappa, 0.0)).unwrap();
        assert!(matches!(
            resolvent_weight_bound(&op, &u4, p, &[1.0], &probes, &opts),
            Err(Error::HypothesisUnmet { .. })
        ));
    }

    #[test]
    fn bounded_absorption_has_zero_gaps_past_its_sup() {
        let (ctx, _) = heat(33, Boundary::Dirichlet);
        let g = *ctx.grid();
        let u: Vec<f64> = (0..g.node_count()).map(|k| 5.0 * g.coord(k)[0]).collect();
        let corpus = random_probes(&g, ProbeKind::Real, 2, 3);
        let rep = truncation_convergence(&ctx, &u, 2.0, &[10.0, 1.0, 6.0], 0.05, 1e-3, &corpus).unwrap();
        assert_eq!(rep.levels, vec![1.0, 6.0, 10.0]);
        assert!(rep.gaps[0] > 0.0);
        assert_eq!(rep.gaps[1], 0.0);
        assert!(rep.monotone);
    }

    #[test]
    fn twisted_heat_growth_at_xi_zero_is_contractive() {
        let (ctx, op) = heat(129, Boundary::Dirichlet);
        let fit = weighted_growth_audit(&op, &ctx, 2.0, &[[0.0, 0.0]], &[0.01], None, &AuditOptions::default()).unwrap();
        assert!(fit.rows[0].measured <= 1.0 + 1e-10);
    }
}
