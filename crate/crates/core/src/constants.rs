//! Structural constants of an operator: pointwise matrix bounds, form
//! bounds of the lower-order terms measured on probe families, and the
//! drift pair `(beta', B')` synthesised from them.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::fields::{CoefficientSet, Decomposition, Grid};
use crate::forms::FormContext;
use crate::linalg::small;
use crate::mesh::GridFunction;
use crate::probes::{self, ProbeKind};
use crate::{Error, Result};

/// Safety factor applied to every measured slope and offset.
pub const INFLATION: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Provenance {
    #[default]
    Declared,
    Measured,
    Synthesized,
}

#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct StructuralConstants {
    pub alpha_s: f64,
    pub alpha_a: f64,
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub m: f64,
    pub beta_prime: f64,
    #[cfg_attr(feature = "serde", serde(rename = "B_prime"))]
    pub b_prime: f64,
    pub beta1: f64,
    #[cfg_attr(feature = "serde", serde(rename = "B1"))]
    pub b1: f64,
    pub beta2: f64,
    #[cfg_attr(feature = "serde", serde(rename = "B2"))]
    pub b2: f64,
    pub gamma: f64,
    #[cfg_attr(feature = "serde", serde(rename = "Gamma"))]
    pub gamma_cap: f64,
    pub beta_hat: f64,
    #[cfg_attr(feature = "serde", serde(rename = "B_hat"))]
    pub b_hat: f64,
    pub c_hat: f64,
    pub c3: f64,
    pub provenance: BTreeMap<String, Provenance>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub grid: Option<Grid>,
}

/// Names of the numeric fields as they appear in JSON.
pub const FIELD_NAMES: [&str; 15] = [
    "alpha_s", "alpha_a", "M", "beta_prime", "B_prime", "beta1", "B1", "beta2", "B2", "gamma", "Gamma", "beta_hat",
    "B_hat", "c_hat", "c3",
];

impl StructuralConstants {
    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "alpha_s" => &mut self.alpha_s,
            "alpha_a" => &mut self.alpha_a,
            "M" => &mut self.m,
            "beta_prime" => &mut self.beta_prime,
            "B_prime" => &mut self.b_prime,
            "beta1" => &mut self.beta1,
            "B1" => &mut self.b1,
            "beta2" => &mut self.beta2,
            "B2" => &mut self.b2,
            "gamma" => &mut self.gamma,
            "Gamma" => &mut self.gamma_cap,
            "beta_hat" => &mut self.beta_hat,
            "B_hat" => &mut self.b_hat,
            "c_hat" => &mut self.c_hat,
            "c3" => &mut self.c3,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.clone().slot(name).map(|v| *v)
    }

    /// Sets one field and records its provenance.
    pub fn set(&mut self, name: &str, value: f64, prov: Provenance) -> Result<()> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::BadParameter(alloc::format!("{name} = {value} must be finite and >= 0")));
        }
        let slot = self.slot(name).ok_or_else(|| Error::BadParameter(alloc::format!("unknown constant `{name}`")))?;
        *slot = value;
        self.provenance.insert(name.to_string(), prov);
        Ok(())
    }

    /// Marks every field without a provenance entry as declared.
    pub fn declare_rest(&mut self) {
        for name in FIELD_NAMES {
            self.provenance.entry(name.to_string()).or_insert(Provenance::Declared);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for name in FIELD_NAMES {
            let v = self.get(name).unwrap_or(0.0);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::BadParameter(alloc::format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// `beta' > 0` or `alpha_s B' = 0`.
    pub fn closed_form_admissible(&self) -> bool {
        self.beta_prime > 0.0 || self.alpha_s * self.b_prime == 0.0
    }
}

/// Least `alpha_s` with `|<A1s xi, eta>| <= alpha_s |xi|_{A0s} |eta|_{A0s}`
/// at every node.
pub fn alpha_s_of(dec: &Decomposition) -> Result<f64> {
    crate::fields::validate_ellipticity(dec)?;
    let dim = dec.grid.dim();
    Ok(dec.a0s.iter().zip(&dec.a1s).map(|(a, s)| small::relative_bound(a, s, dim)).fold(0.0, f64::max))
}

/// `(alpha_a, M)`: the same bound for `A1a` and `A0a`.
pub fn anti_bounds(dec: &Decomposition) -> Result<(f64, f64)> {
    crate::fields::validate_ellipticity(dec)?;
    let dim = dec.grid.dim();
    if dim == 1 {
        return Ok((0.0, 0.0));
    }
    let fold = |anti: &[[[f64; 2]; 2]]| {
        dec.a0s.iter().zip(anti).map(|(a, s)| small::relative_bound(a, s, dim)).fold(0.0, f64::max)
    };
    Ok((fold(&dec.a1a), fold(&dec.a0a)))
}

/// Least `c3` with `|<A xi, eta>| <= c3 |xi|_{A0s} |eta|_{A0s}` for complex
/// `xi, eta`.
pub fn c3_of(cs: &CoefficientSet, dec: &Decomposition) -> f64 {
    let dim = dec.grid.dim();
    cs.a.values().iter().zip(&dec.a0s).map(|(a, s)| small::relative_bound_complex(s, a, dim)).fold(0.0, f64::max)
}

/// `C_p = 2 (M^2 + (1-2/p)^2 + c_hat) + alpha_s^2`.
pub fn c_p(c: &StructuralConstants, p: f64) -> f64 {
    let q = crate::forms::one_minus_two_over(p);
    2.0 * (c.m * c.m + q * q + c.c_hat) + c.alpha_s * c.alpha_s
}

/// `(beta', B')` from `(alpha_a, beta_hat, B_hat)`:
/// `beta' = 2 alpha_a + beta_hat`, `B' = (1 + 2 alpha_a / beta_hat) B_hat`.
pub fn synthesize_drift(alpha_a: f64, beta_hat: f64, b_hat: f64) -> Result<(f64, f64)> {
    if beta_hat > 0.0 {
        return Ok((2.0 * alpha_a + beta_hat, (1.0 + 2.0 * alpha_a / beta_hat) * b_hat));
    }
    if alpha_a * b_hat == 0.0 {
        return Ok((2.0 * alpha_a, b_hat));
    }
    Err(Error::BadParameter(
        "beta_hat = 0 with alpha_a * B_hat > 0: B' is unbounded; give beta_hat > 0".to_string(),
    ))
}

/// How a `(slope, offset)` pair is picked from a trade-off curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Policy {
    /// Least slope that needs no offset (offset only for probes with
    /// vanishing reference form).
    ZeroOffset,
    /// Slope zero, offset `max y`.
    ZeroSlope,
    /// Slope from the upper half of the probes by reference form, offset
    /// covering the rest.
    #[default]
    Asymptotic,
}

/// Normalised probe data `(x, y) = (h0(u), lhs(u)) / |u|^2`. Any `(s, o)`
/// with `y <= s x + o` on every point is admissible on the family.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeoffCurve {
    pub points: Vec<(f64, f64)>,
}

impl TradeoffCurve {
    /// Least offset admissible with `slope`.
    pub fn offset_for(&self, slope: f64) -> f64 {
        self.points.iter().map(|&(x, y)| y - slope * x).fold(0.0, f64::max)
    }

    /// Least slope admissible with `offset`, or `None` if no slope suffices.
    pub fn slope_for(&self, offset: f64) -> Option<f64> {
        let mut s: f64 = 0.0;
        for &(x, y) in &self.points {
            if y > offset {
                if x <= 0.0 {
                    return None;
                }
                s = s.max((y - offset) / x);
            }
        }
        Some(s)
    }

    /// Inflated `(slope, offset)` chosen by `policy`.
    pub fn select(&self, policy: Policy) -> (f64, f64) {
        let (s, o) = match policy {
            Policy::ZeroSlope => (0.0, self.offset_for(0.0)),
            Policy::ZeroOffset => {
                let s = self.points.iter().filter(|p| p.0 > 0.0).map(|&(x, y)| y / x).fold(0.0, f64::max);
                (s, self.offset_for(s))
            }
            Policy::Asymptotic => {
                let mut xs: Vec<f64> = self.points.iter().map(|p| p.0).collect();
                xs.sort_by(|a, b| a.total_cmp(b));
                let med = xs.get(xs.len() / 2).copied().unwrap_or(0.0);
                let s = self
                    .points
                    .iter()
                    .filter(|p| p.0 >= med && p.0 > 0.0)
                    .map(|&(x, y)| y / x)
                    .fold(0.0, f64::max);
                (s, self.offset_for(s))
            }
        };
        (INFLATION * s, INFLATION * o)
    }

    /// Sampled admissible curve `(slope, least offset)` for slopes up to
    /// `s_max`.
    pub fn admissible(&self, s_max: f64, samples: usize) -> Vec<(f64, f64)> {
        (0..=samples)
            .map(|k| {
                let s = s_max * k as f64 / samples.max(1) as f64;
                (s, self.offset_for(s))
            })
            .collect()
    }
}

/// Policy per inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundPolicy {
    pub drift: Policy,
    pub gamma: Policy,
    pub beta_hat: Policy,
}

/// Measured form bounds with the probe data behind them.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftBounds {
    pub beta1: f64,
    pub b1: f64,
    pub beta2: f64,
    pub b2: f64,
    pub gamma: f64,
    pub gamma_cap: f64,
    pub beta_hat: f64,
    pub b_hat: f64,
    pub c_hat: f64,
    pub curve_beta1: TradeoffCurve,
    pub curve_beta2: TradeoffCurve,
    pub curve_gamma: TradeoffCurve,
    /// Points for `<A0s^{-1} Im(b1+b2), Im(b1+b2)>`; slope is `beta_hat^2`.
    pub curve_beta_hat: TradeoffCurve,
}

/// `int u Re(b) . grad u` for real `u` (sample quadrature).
fn drift_pairing(ctx: &FormContext, which: usize, u: &[f64]) -> f64 {
    let dim = ctx.grid().dim();
    let b = if which == 1 { ctx.coefficients().b1.values() } else { ctx.coefficients().b2.values() };
    ctx.samples()
        .iter()
        .map(|s| {
            let g = s.grad_real(u);
            let bc = &b[s.node];
            s.weight * u[s.node] * (0..dim).map(|k| bc[k].re * g[k]).sum::<f64>()
        })
        .sum()
}

/// Nodal `<A0s^{-1} Im(b1+b2), Im(b1+b2)>`.
fn im_drift_potential(ctx: &FormContext) -> Vec<f64> {
    let dim = ctx.grid().dim();
    let cs = ctx.coefficients();
    (0..ctx.grid().node_count())
        .map(|k| {
            let b = [cs.b1.values()[k][0].im + cs.b2.values()[k][0].im, cs.b1.values()[k][1].im + cs.b2.values()[k][1].im];
            small::quad(&small::spd_inverse(&ctx.decomposition().a0s[k], dim), &b, dim)
        })
        .collect()
}

/// Nonnegative probe family: absolute values of modes below `kmax` plus
/// random nonnegative combinations.
pub fn nonnegative_family(grid: &Grid, kmax: usize, seed: u64) -> Vec<GridFunction> {
    probes::standard_family(grid, ProbeKind::Nonnegative, kmax, seed)
}

/// Measures every form bound on `family` (nonnegative real probes).
pub fn drift_bounds(ctx: &FormContext, family: &[GridFunction], policy: BoundPolicy) -> Result<DriftBounds> {
    let pim = im_drift_potential(ctx);
    let mut curves = [TradeoffCurve::default(), TradeoffCurve::default(), TradeoffCurve::default(), TradeoffCurve::default()];
    let mut c_hat: f64 = 0.0;
    for u in family {
        if u.grid() != ctx.grid() {
            return Err(Error::GridMismatch);
        }
        let r: Vec<f64> = u.values().iter().map(|z| z.norm()).collect();
        let n2 = ctx.norm_sq(u.values());
        if !(n2 > 0.0) {
            continue;
        }
        let x = ctx.h0_real(&r) / n2;
        // (-1)^j <(Re b_j) u, grad u>
        curves[0].points.push((x, -drift_pairing(ctx, 1, &r) / n2));
        curves[1].points.push((x, drift_pairing(ctx, 2, &r) / n2));
        curves[2].points.push((x, ctx.potential(ctx.v_minus(), u.values()) / n2));
        curves[3].points.push((x, ctx.potential(&pim, u.values()) / n2));
        let uh = ctx.potential(ctx.u_hat_potential(), u.values()) / n2;
        c_hat = c_hat.max(uh / (x + 1.0));
    }
    let (beta1, b1) = curves[0].select(policy.drift);
    let (beta2, b2) = curves[1].select(policy.drift);
    let (gamma, gamma_cap) = curves[2].select(policy.gamma);
    let (bh2, b_hat) = curves[3].select(policy.beta_hat);
    let [c1, c2, cg, cb] = curves;
    Ok(DriftBounds {
        beta1,
        b1,
        beta2,
        b2,
        gamma,
        gamma_cap,
        beta_hat: bh2.sqrt(),
        b_hat,
        c_hat: INFLATION * c_hat,
        curve_beta1: c1,
        curve_beta2: c2,
        curve_gamma: cg,
        curve_beta_hat: cb,
    })
}

/// `NotFormBounded` when a slope measured on successively finer grids keeps
/// growing (each step by more than 25%, overall more than doubling).
pub fn ensure_form_bounded(name: &str, slopes: &[f64]) -> Result<()> {
    if slopes.len() < 3 {
        return Ok(());
    }
    let growing = slopes.windows(2).all(|w| w[1] > 1.25 * w[0] && w[1] > 1e-12);
    if growing && slopes[slopes.len() - 1] > 2.0 * slopes[0] {
        return Err(Error::NotFormBounded(name.to_string()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureOptions {
    pub kmax: usize,
    pub seed: u64,
    pub policy: BoundPolicy,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { kmax: 6, seed: 42, policy: BoundPolicy::default() }
    }
}

/// All constants of `cs` on its grid, with `(beta', B')` synthesised.
pub fn measure(cs: &CoefficientSet, opts: &MeasureOptions) -> Result<(StructuralConstants, DriftBounds)> {
    let ctx = FormContext::new(cs)?;
    let dec = ctx.decomposition();
    let mut c = StructuralConstants { grid: Some(*cs.grid()), ..Default::default() };
    let m = Provenance::Measured;
    c.set("alpha_s", alpha_s_of(dec)?, m)?;
    let (aa, mm) = anti_bounds(dec)?;
    c.set("alpha_a", aa, m)?;
    c.set("M", mm, m)?;
    c.set("c3", c3_of(cs, dec), m)?;
    let family = nonnegative_family(cs.grid(), opts.kmax, opts.seed);
    let d = drift_bounds(&ctx, &family, opts.policy)?;
    for (name, v) in [
        ("beta1", d.beta1),
        ("B1", d.b1),
        ("beta2", d.beta2),
        ("B2", d.b2),
        ("gamma", d.gamma),
        ("Gamma", d.gamma_cap),
        ("beta_hat", d.beta_hat),
        ("B_hat", d.b_hat),
        ("c_hat", d.c_hat),
    ] {
        c.set(name, v, m)?;
    }
    let (bp, bpc) = synthesize_drift(aa, d.beta_hat, d.b_hat)?;
    c.set("beta_prime", bp, Provenance::Synthesized)?;
    c.set("B_prime", bpc, Provenance::Synthesized)?;
    Ok((c, d))
}

/// Worst case of one inequality over an audit family.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditEntry {
    pub name: String,
    /// `min (rhs - lhs) / (|rhs| + |lhs| + 1)` over the probes.
    pub worst_margin: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditReport {
    pub probes: usize,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.violations == 0)
    }
}

const AUDIT_TOL: f64 = 1e-9;

/// Checks declared constants against `ctx` on [`probes::RANDOM_PROBES`]
/// random probes per inequality.
pub fn spot_audit(c: &StructuralConstants, ctx: &FormContext, seed: u64) -> Result<AuditReport> {
    let grid = *ctx.grid();
    let nonneg = probes::random_probes(&grid, ProbeKind::Nonnegative, probes::RANDOM_PROBES, seed);
    let complex = probes::random_probes(&grid, ProbeKind::Complex, probes::RANDOM_PROBES, seed ^ 0x9e37_79b9);
    let pim = im_drift_potential(ctx);
    let mut entries = Vec::new();
    let mut push = |name: &str, pairs: &mut dyn Iterator<Item = (f64, f64)>| {
        let mut worst = f64::INFINITY;
        let mut bad = 0;
        for (lhs, rhs) in pairs {
            let m = (rhs - lhs) / (rhs.abs() + lhs.abs() + 1.0);
            worst = worst.min(m);
            if m < -AUDIT_TOL {
                bad += 1;
            }
        }
        entries.push(AuditEntry { name: name.to_string(), worst_margin: worst, violations: bad });
    };
    let data: Vec<(Vec<f64>, f64, f64)> = nonneg
        .iter()
        .map(|u| {
            let r: Vec<f64> = u.values().iter().map(|z| z.re).collect();
            let h = ctx.h0_real(&r);
            let n = ctx.norm_sq(u.values());
            (r, h, n)
        })
        .collect();
    push("beta1", &mut data.iter().map(|(r, h, n)| (-drift_pairing(ctx, 1, r), c.beta1 * h + c.b1 * n)));
    push("beta2", &mut data.iter().map(|(r, h, n)| (drift_pairing(ctx, 2, r), c.beta2 * h + c.b2 * n)));
    push(
        "gamma",
        &mut nonneg.iter().zip(&data).map(|(u, (_, h, n))| (ctx.potential(ctx.v_minus(), u.values()), c.gamma * h + c.gamma_cap * n)),
    );
    push(
        "beta_hat",
        &mut nonneg
            .iter()
            .zip(&data)
            .map(|(u, (_, h, n))| (ctx.potential(&pim, u.values()), c.beta_hat * c.beta_hat * h + c.b_hat * n)),
    );
    push(
        "c_hat",
        &mut nonneg
            .iter()
            .zip(&data)
            .map(|(u, (_, h, n))| (ctx.potential(ctx.u_hat_potential(), u.values()), c.c_hat * (h + n))),
    );
    push("beta_prime", &mut complex.iter().map(|u| beta_prime_sides(c, ctx, u.values())));
    Ok(AuditReport { probes: probes::RANDOM_PROBES, entries })
}

/// Both sides of
/// `Im <A1a grad u - u Im(b1+b2), grad u> <= (beta'^2 h0(|u|) + B' |u|^2)^{1/2} a(eta)^{1/2}`.
fn beta_prime_sides(c: &StructuralConstants, ctx: &FormContext, u: &[num_complex::Complex64]) -> (f64, f64) {
    let dim = ctx.grid().dim();
    let cs = ctx.coefficients();
    let dec = ctx.decomposition();
    let mut lhs = 0.0;
    let mut a_eta = 0.0;
    for s in ctx.samples() {
        let k = s.node;
        let g = s.grad(u);
        let mut z = num_complex::Complex64::new(0.0, 0.0);
        for j in 0..dim {
            for l in 0..dim {
                z += dec.a1a[k][j][l] * g[l] * g[j].conj();
            }
            let imb = cs.b1.values()[k][j].im + cs.b2.values()[k][j].im;
            z -= u[k] * imb * g[j].conj();
        }
        lhs += s.weight * z.im;
        a_eta += s.weight * small::quad(&dec.a0s[k], &s.eta(u), dim);
    }
    let absu: Vec<f64> = u.iter().map(|z| z.norm()).collect();
    let rhs = ((c.beta_prime * c.beta_prime * ctx.h0_real(&absu) + c.b_prime * ctx.norm_sq(u)).max(0.0) * a_eta).sqrt();
    (lhs, rhs)
}
