//! Quadrature of the sesquilinear form
//!
//! ```text
//! t(u, v) = <A grad u, grad v> + <b1 . grad u, v> - <b2 u, grad v> + <Q u, v>
//! ```
//!
//! over the corner samples of [`crate::mesh::grad_samples`], together with the
//! reference forms `a`, `h0`, the functional `tau_p` and the inequality audits
//! built on them.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::constants::StructuralConstants;
use crate::fields::{decompose, Boundary, CoefficientSet, Decomposition, Grid};
use crate::intervals::{self, Mode};
use crate::linalg::small;
use crate::mesh::{self, GradSample, GridFunction, DEFAULT_FLOOR};
use crate::{Error, Result};

/// Everything needed to evaluate the forms of one coefficient set.
#[derive(Clone, Debug)]
pub struct FormContext {
    cs: CoefficientSet,
    dec: Decomposition,
    samples: Vec<GradSample>,
    weights: Vec<f64>,
    v_plus: Vec<f64>,
    v_minus: Vec<f64>,
    w: Vec<f64>,
    u_hat: Vec<f64>,
}

/// `1 - 2/p`, with `p = inf` giving 1.
pub fn one_minus_two_over(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        1.0 - 2.0 / p
    }
}

impl FormContext {
    pub fn new(cs: &CoefficientSet) -> Result<Self> {
        let dec = decompose(&cs.a)?;
        crate::fields::validate_ellipticity(&dec)?;
        let grid = *cs.grid();
        let dim = grid.dim();
        let q = cs.q.values();
        let v_plus = q.iter().map(|z| z.re.max(0.0)).collect();
        let v_minus = q.iter().map(|z| (-z.re).max(0.0)).collect();
        let w = q.iter().map(|z| z.im).collect();
        let u_hat = (0..grid.node_count())
            .map(|k| {
                let b = [
                    cs.b1.values()[k][0].re + cs.b2.values()[k][0].re,
                    cs.b1.values()[k][1].re + cs.b2.values()[k][1].re,
                ];
                0.25 * small::quad(&small::spd_inverse(&dec.a0s[k], dim), &b, dim)
            })
            .collect();
        Ok(FormContext {
            cs: cs.clone(),
            dec,
            samples: mesh::grad_samples(&grid),
            weights: grid.weights(),
            v_plus,
            v_minus,
            w,
            u_hat,
        })
    }

    /// Context of the adjoint data `(A^*, -conj b2, -conj b1, conj Q)`.
    pub fn adjoint(&self) -> Result<Self> {
        Self::new(&self.cs.adjoint())
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.cs
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.dec
    }

    pub fn grid(&self) -> &Grid {
        self.cs.grid()
    }

    pub fn samples(&self) -> &[GradSample] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn v_plus(&self) -> &[f64] {
        &self.v_plus
    }

    pub fn v_minus(&self) -> &[f64] {
        &self.v_minus
    }

    /// `Im Q`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Nodal values of the drift-square potential `1/4 <A0s^{-1} Re(b1+b2), Re(b1+b2)>`.
    pub fn u_hat_potential(&self) -> &[f64] {
        &self.u_hat
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Integrand of `t(u, v)` at one sample, given the sample gradients.
    fn t_sample(&self, s: &GradSample, gu: &[C64; 2], gv: &[C64; 2], uc: C64, vc: C64) -> C64 {
        let c = s.node;
        let a = &self.cs.a.values()[c];
        let b1 = &self.cs.b1.values()[c];
        let b2 = &self.cs.b2.values()[c];
        let mut z = C64::new(0.0, 0.0);
        for j in 0..2 {
            for k in 0..2 {
                z += a[j][k] * gu[k] * gv[j].conj();
            }
            z += b1[j] * gu[j] * vc.conj();
            z -= b2[j] * uc * gv[j].conj();
        }
        z + self.cs.q.values()[c] * uc * vc.conj()
    }

    /// `t(u, v)` on raw nodal arrays.
    pub fn t_raw(&self, u: &[C64], v: &[C64]) -> C64 {
        self.samples
            .iter()
            .map(|s| self.t_sample(s, &s.grad(u), &s.grad(v), u[s.node], v[s.node]) * s.weight)
            .sum()
    }

    pub fn form_t(&self, u: &GridFunction, v: &GridFunction) -> Result<C64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.t_raw(u.values(), v.values()))
    }

    /// `a(r)` for a real nodal array.
    pub fn a_real(&self, r: &[f64]) -> f64 {
        let dim = self.grid().dim();
        self.samples.iter().map(|s| s.weight * small::quad(&self.dec.a0s[s.node], &s.grad_real(r), dim)).sum()
    }

    pub fn a_raw(&self, u: &[C64]) -> f64 {
        let dim = self.grid().dim();
        self.samples
            .iter()
            .map(|s| {
                let g = s.grad(u);
                let m = &self.dec.a0s[s.node];
                s.weight * (small::quad_re(m, &g, dim) + small::quad_im(m, &g, dim))
            })
            .sum()
    }

    pub fn form_a(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.a_raw(u.values()))
    }

    /// `sum m V |u|^2` for a nodal potential `V`.
    pub fn potential(&self, pot: &[f64], u: &[C64]) -> f64 {
        pot.iter().zip(u).zip(&self.weights).map(|((p, z), w)| p * z.norm_sqr() * w).sum()
    }

    pub fn norm_sq(&self, u: &[C64]) -> f64 {
        u.iter().zip(&self.weights).map(|(z, w)| z.norm_sqr() * w).sum()
    }

    pub fn h0_raw(&self, u: &[C64]) -> f64 {
        self.a_raw(u) + self.potential(&self.v_plus, u)
    }

    pub fn h0_real(&self, r: &[f64]) -> f64 {
        let pot: f64 = self.v_plus.iter().zip(r).zip(&self.weights).map(|((p, x), w)| p * x * x * w).sum();
        self.a_real(r) + pot
    }

    pub fn form_h0(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.h0_raw(u.values()))
    }

    /// Per-sample pieces of `tau_p`: `(Re t(v,v), a(|v|), |<A1s xi, eta>|,
    /// <A1s xi, eta>, |v| Re(b1+b2) . xi)`, each already weighted.
    fn tau_parts(&self, v: &[C64]) -> [f64; 5] {
        let dim = self.grid().dim();
        let absv: Vec<f64> = v.iter().map(|z| z.norm()).collect();
        let mut acc = [0.0; 5];
        for s in &self.samples {
            let c = s.node;
            let gv = s.grad(v);
            let xi = s.grad_real(&absv);
            let eta = s.eta(v);
            let re_t = self.t_sample(s, &gv, &gv, v[c], v[c]).re;
            let a_abs = small::quad(&self.dec.a0s[c], &xi, dim);
            let cross = small::bilinear(&self.dec.a1s[c], &xi, &eta, dim);
            let b1 = &self.cs.b1.values()[c];
            let b2 = &self.cs.b2.values()[c];
            let drift: f64 = (0..dim).map(|k| (b1[k].re + b2[k].re) * xi[k]).sum::<f64>() * absv[c];
            let w = s.weight;
            acc[0] += w * re_t;
            acc[1] += w * a_abs;
            acc[2] += w * cross.abs();
            acc[3] += w * cross;
            acc[4] += w * drift;
        }
        acc
    }

    pub fn tau_raw(&self, v: &[C64], p: f64) -> f64 {
        let c = one_minus_two_over(p);
        let [re_t, a_abs, abs_cross, _, drift] = self.tau_parts(v);
        re_t - c * c * a_abs - 2.0 * c.abs() * abs_cross - c * drift
    }

    /// `tau_p(v)` for `p in [1, inf]`.
    pub fn tau_p(&self, v: &GridFunction, p: f64) -> Result<f64> {
        self.check(v)?;
        if !(p >= 1.0) {
            return Err(Error::BadExponent(p));
        }
        Ok(self.tau_raw(v.values(), p))
    }

    /// `U_hat(v) = sum m U_hat |v|^2`.
    pub fn u_hat(&self, v: &GridFunction) -> Result<f64> {
        self.check(v)?;
        Ok(self.potential(&self.u_hat, v.values()))
    }

    /// Nodal `W_rho = <A0s grad rho, grad rho> / rho^2`, computed from
    /// `grad log rho`.
    pub fn w_rho_potential(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let grid = *self.grid();
        if rho.len() != grid.node_count() {
            return Err(Error::GridMismatch);
        }
        if let Some(k) = rho.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::BadWeight(k));
        }
        // one-sided differences at the boundary regardless of the grid's bc
        let lg = GridFunction::from_real(grid.with_bc(Boundary::Dirichlet), &rho.iter().map(|r| r.ln()).collect::<Vec<_>>())?;
        let g = mesh::grad(&lg);
        let dim = grid.dim();
        Ok(g.values
            .iter()
            .zip(&self.dec.a0s)
            .map(|(gv, m)| small::quad(m, &[gv[0].re, gv[1].re], dim))
            .collect())
    }

    /// `W_rho(v) = sum m W_rho |v|^2`.
    pub fn w_rho(&self, rho: &[f64], v: &GridFunction) -> Result<f64> {
        self.check(v)?;
        Ok(self.potential(&self.w_rho_potential(rho)?, v.values()))
    }
}

/// Result of [`check_accretivity_identity`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AccretivityCheck {
    /// `Re t(u, w_p(u)) - tau_p(v_p(u))`; nonnegative up to discretisation error.
    pub residual: f64,
    /// `2|1-2/p| int |<A1s xi, eta>| - 2(1-2/p) int <A1s xi, eta>`, the part of
    /// the residual that survives in the continuum when `A1s != 0`.
    pub a1s_gap: f64,
    /// `residual - a1s_gap`; tends to zero under refinement.
    pub identity_defect: f64,
    /// `|Im t(u, w_p(u))| / (h0 + 1)(v_p(u))`.
    pub im_ratio: f64,
}

/// Evaluates both sides of the accretivity estimate for `w = u|u|^{p-2}`,
/// `v = u|u|^{p/2-1}` (no truncation).
pub fn check_accretivity_identity(ctx: &FormContext, u: &GridFunction, p: f64) -> Result<AccretivityCheck> {
    ctx.check(u)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let v = mesh::power_map(u.values(), 0.5 * p - 1.0, DEFAULT_FLOOR);
    let w = mesh::power_map(u.values(), p - 2.0, DEFAULT_FLOOR);
    let t_uw = ctx.t_raw(u.values(), &w);
    let c = one_minus_two_over(p);
    let [re_t, a_abs, abs_cross, cross, drift] = ctx.tau_parts(&v);
    let tau = re_t - c * c * a_abs - 2.0 * c.abs() * abs_cross - c * drift;
    let residual = t_uw.re - tau;
    let a1s_gap = 2.0 * c.abs() * abs_cross - 2.0 * c * cross;
    Ok(AccretivityCheck {
        residual,
        a1s_gap,
        identity_defect: residual - a1s_gap,
        im_ratio: t_uw.im.abs() / (ctx.h0_raw(&v) + ctx.norm_sq(&v)),
    })
}

/// Margin in the lower bound for `tau_p`:
/// `tau_p(v) - [(eps_p - e - e/(1-e) delta_p^2) h0(|v|) + e h0(v) - (omega_hat_p + e/(1-e) B_hat_p) |v|^2]`.
pub fn tau_lower_bound_check(
    constants: &StructuralConstants,
    ctx: &FormContext,
    v: &GridFunction,
    p: f64,
    eps: f64,
    mode: Mode,
) -> Result<f64> {
    ctx.check(v)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::BadParameter(alloc::format!("eps = {eps} not in [0, 1)")));
    }
    let ep = intervals::eps_p(constants, p);
    let dp = intervals::delta_p(constants, p);
    let om = intervals::omega_hat(constants, p, mode)?;
    let bh = intervals::b_hat_p(constants, p, mode)?;
    let k = eps / (1.0 - eps);
    let vals = v.values();
    let absv: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
    let bound = (ep - eps - k * dp * dp) * ctx.h0_real(&absv) + eps * ctx.h0_raw(vals) - (om + k * bh) * ctx.norm_sq(vals);
    Ok(ctx.tau_raw(vals, p) - bound)
}

/// Two-sided information about `omega_tilde_p`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OmegaBracket {
    /// `max_v -tau_p(v) / |v|^2` over the probes (a lower bound).
    pub lower: f64,
    /// `omega_hat_p`, when the mode admits it.
    pub upper: Option<f64>,
}

pub fn omega_tilde_bracket(
    ctx: &FormContext,
    constants: &StructuralConstants,
    p: f64,
    probes: &[GridFunction],
    mode: Mode,
) -> Result<OmegaBracket> {
    let mut lower = f64::NEG_INFINITY;
    for v in probes {
        ctx.check(v)?;
        let n = ctx.norm_sq(v.values());
        if n > 0.0 {
            lower = lower.max(-ctx.tau_raw(v.values(), p) / n);
        }
    }
    Ok(OmegaBracket { lower, upper: intervals::omega_hat(constants, p, mode).ok() })
}
