//! Closed-form admissibility interval and growth bounds.
//!
//! Everything is a function of `s = 1/p`; `p = inf` is `s = 0`. With
//! `alpha = alpha_s` and `b = beta'/2`,
//!
//! ```text
//! delta_p = alpha |1 - 2s| + b
//! eps_p   = 4 s (1 - s) - 2 s beta1 - 2 (1 - s) beta2 - delta_p^2 - gamma
//! ```
//!
//! is the minimum of two concave quadratics in `s` (one per sign of
//! `1 - 2s`), so `I = {p in [1, inf) : eps_p >= 0}` is an interval whose
//! endpoints are roots of those quadratics.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;

use crate::constants::StructuralConstants;
use crate::{Error, Result};

/// An exponent stored as `s = 1/p in [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent {
    s: f64,
}

impl Exponent {
    pub const INFINITY: Exponent = Exponent { s: 0.0 };

    pub fn from_p(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Self::INFINITY);
        }
        if !(p >= 1.0) {
            return Err(Error::BadExponent(p));
        }
        Ok(Exponent { s: 1.0 / p })
    }

    pub fn from_s(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::BadExponent(if s == 0.0 { f64::INFINITY } else { 1.0 / s }));
        }
        Ok(Exponent { s })
    }

    pub fn s(self) -> f64 {
        self.s
    }

    pub fn p(self) -> f64 {
        if self.s == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.s
        }
    }

    /// `p'` with `1/p + 1/p' = 1`.
    pub fn dual(self) -> Self {
        Exponent { s: 1.0 - self.s }
    }

    pub fn is_infinite(self) -> bool {
        self.s == 0.0
    }
}

/// Dual exponent of `p` (`1 <-> inf`).
pub fn dual(p: f64) -> f64 {
    Exponent::from_p(p).map(|e| e.dual().p()).unwrap_or(f64::NAN)
}

fn s_of(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Which growth statement the caller relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Mode {
    /// Closed-form bound; requires `beta' > 0` or `alpha_s B' = 0`.
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "thm1.3"))]
    Thm13,
    /// Coercivity of `tau_p` is declared by the user; the closed-form
    /// expressions are evaluated without the `alpha_s B' = 0` guard.
    #[cfg_attr(feature = "serde", serde(rename = "thm1.5"))]
    DeclaredCoercivity,
}

pub fn delta_s(c: &StructuralConstants, s: f64) -> f64 {
    c.alpha_s * (1.0 - 2.0 * s).abs() + 0.5 * c.beta_prime
}

pub fn delta_p(c: &StructuralConstants, p: f64) -> f64 {
    delta_s(c, s_of(p))
}

pub fn eps_s(c: &StructuralConstants, s: f64) -> f64 {
    let d = delta_s(c, s);
    4.0 * s * (1.0 - s) - 2.0 * s * c.beta1 - 2.0 * (1.0 - s) * c.beta2 - d * d - c.gamma
}

pub fn eps_p(c: &StructuralConstants, p: f64) -> f64 {
    eps_s(c, s_of(p))
}

/// Fails in [`Mode::Thm13`] when `beta' = 0` and `alpha_s B' > 0`.
pub fn check_mode(c: &StructuralConstants, mode: Mode) -> Result<()> {
    let prod = c.alpha_s * c.b_prime;
    if mode == Mode::Thm13 && c.beta_prime == 0.0 && prod > 0.0 {
        return Err(Error::ModeError(prod));
    }
    Ok(())
}

pub fn b_hat_p(c: &StructuralConstants, p: f64, mode: Mode) -> Result<f64> {
    check_mode(c, mode)?;
    let s = s_of(p);
    Ok(if c.beta_prime > 0.0 {
        0.25 * c.b_prime + c.alpha_s * c.b_prime / (2.0 * c.beta_prime) * (1.0 - 2.0 * s).abs()
    } else {
        0.25 * c.b_prime
    })
}

pub fn omega_hat(c: &StructuralConstants, p: f64, mode: Mode) -> Result<f64> {
    let s = s_of(p);
    Ok(2.0 * s * c.b1 + 2.0 * (1.0 - s) * c.b2 + c.gamma_cap + b_hat_p(c, p, mode)?)
}

/// `2 sqrt(p - 1) - alpha_s |p - 2|`; nonnegative exactly when the
/// drift-free interval contains `p`.
pub fn dissipativity_margin(alpha_s: f64, p: f64) -> f64 {
    2.0 * (p - 1.0).sqrt() - alpha_s * (p - 2.0).abs()
}

/// Closed `p`-interval; `upper` may be `f64::INFINITY` (unbounded, with
/// `inf` itself never a member).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lower: f64,
    #[cfg_attr(feature = "serde", serde(with = "inf_as_null"))]
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, p: f64) -> bool {
        p.is_finite() && p >= self.lower && p <= self.upper
    }

    pub fn interior_contains(&self, p: f64) -> bool {
        p.is_finite() && p > self.lower && p < self.upper
    }

    pub fn interior_nonempty(&self) -> bool {
        self.upper > self.lower
    }

    pub fn is_bounded(&self) -> bool {
        self.upper.is_finite()
    }
}

#[cfg(feature = "serde")]
pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_some(x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Coefficients `(a2, a1, a0)` of the branch quadratic valid for
/// `s >= 1/2` (`upper = true`) or `s <= 1/2`.
fn branch(c: &StructuralConstants, upper: bool) -> (f64, f64, f64) {
    let a = c.alpha_s;
    let b = 0.5 * c.beta_prime;
    let sign = if upper { -1.0 } else { 1.0 };
    let a2 = -4.0 - 4.0 * a * a;
    let a1 = 4.0 - 2.0 * c.beta1 + 2.0 * c.beta2 + 4.0 * a * a + sign * 4.0 * a * b;
    let a0 = -2.0 * c.beta2 - (a + sign * b).powi(2) - c.gamma;
    (a2, a1, a0)
}

/// Real roots of `a2 s^2 + a1 s + a0` (with `a2 < 0`), ascending, polished
/// by Newton steps.
fn concave_roots(a2: f64, a1: f64, a0: f64) -> Option<(f64, f64)> {
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (a1 + a1.signum() * sq);
    let (r1, r2) = if q != 0.0 { (q / a2, a0 / q) } else { (0.0, 0.0) };
    let polish = |mut r: f64| {
        for _ in 0..4 {
            let f = (a2 * r + a1) * r + a0;
            let d = 2.0 * a2 * r + a1;
            if d == 0.0 || f == 0.0 {
                break;
            }
            r -= f / d;
        }
        r
    };
    let (r1, r2) = (polish(r1), polish(r2));
    Some((r1.min(r2), r1.max(r2)))
}

/// `{s in [0, 1] : eps(s) >= 0}` as `(s_lo, s_hi)`.
pub fn feasible_s(c: &StructuralConstants) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (upper, dom) in [(false, (0.0, 0.5)), (true, (0.5, 1.0))] {
        let (a2, a1, a0) = branch(c, upper);
        if let Some((r1, r2)) = concave_roots(a2, a1, a0) {
            let (l, h) = (r1.max(dom.0), r2.min(dom.1));
            if l <= h {
                lo = lo.min(l);
                hi = hi.max(h);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// The interval `I`, or `None` when it is empty.
pub fn interval_i(c: &StructuralConstants) -> Option<Interval> {
    let (s_lo, s_hi) = feasible_s(c)?;
    if s_hi <= 0.0 {
        return None;
    }
    let lower = 1.0 / s_hi;
    let upper = if s_lo <= 0.0 { f64::INFINITY } else { 1.0 / s_lo };
    Some(Interval { lower, upper })
}

/// Largest `e < 1` with `e + e/(1-e) delta_p^2 <= eps_p`, capped at 0.999.
pub fn max_eps(c: &StructuralConstants, p: f64) -> Result<f64> {
    let ep = eps_p(c, p);
    if !(ep > 0.0) || !p.is_finite() {
        return Err(Error::OutsideInterval(p));
    }
    let d2 = delta_p(c, p).powi(2);
    let b = 1.0 + d2 + ep;
    let root = 0.5 * (b - (b * b - 4.0 * ep).max(0.0).sqrt());
    // the smaller root of e^2 - b e + eps_p; use the stable form
    let stable = if root > 0.0 { ep / (0.5 * (b + (b * b - 4.0 * ep).max(0.0).sqrt())) } else { root };
    Ok(stable.min(0.999))
}

/// `(mu_p, omega_p)` for `p` in the interior of `I`.
pub fn mu_omega_for(c: &StructuralConstants, p: f64, eps_choice: Option<f64>, mode: Mode) -> Result<(f64, f64)> {
    let emax = max_eps(c, p)?;
    let e = match eps_choice {
        None => emax,
        Some(e) => {
            let d2 = delta_p(c, p).powi(2);
            if !(e > 0.0 && e < 1.0) || e + e / (1.0 - e) * d2 > eps_p(c, p) * (1.0 + 1e-12) {
                return Err(Error::BadParameter(alloc::format!("eps = {e} violates e + e/(1-e) delta^2 <= eps_p")));
            }
            e
        }
    };
    let om = omega_hat(c, p, mode)? + e / (1.0 - e) * b_hat_p(c, p, mode)?;
    Ok((e, om))
}

/// `(eps, omega_p(eps))` along `eps in (0, eps_max]`.
pub fn tradeoff_curve(c: &StructuralConstants, p: f64, mode: Mode, samples: usize) -> Result<Vec<(f64, f64)>> {
    let emax = max_eps(c, p)?;
    (1..=samples.max(1))
        .map(|k| {
            let e = emax * k as f64 / samples.max(1) as f64;
            mu_omega_for(c, p, Some(e), mode)
        })
        .collect()
}

/// `p_max = N/(N-2) p_plus`, `p_min = (N/(N-2) p_minus')'`; `n_dim` may be
/// infinite (factor 1).
pub fn extended_endpoints(p_minus: f64, p_plus: f64, n_dim: f64) -> Result<(f64, f64)> {
    if !(n_dim >= 3.0) {
        return Err(Error::BadParameter(alloc::format!(
            "extended endpoints need N >= 3 (got {n_dim}); in one or two dimensions use the smoothing audit"
        )));
    }
    if !(p_minus >= 1.0 && p_plus >= p_minus) {
        return Err(Error::BadParameter(alloc::format!("endpoints [{p_minus}, {p_plus}]")));
    }
    let f = if n_dim.is_infinite() { 1.0 } else { n_dim / (n_dim - 2.0) };
    let p_max = f * p_plus;
    let p_min = dual(f * dual(p_minus));
    Ok((p_min, p_max))
}

/// One row of the `p` table.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentRow {
    #[cfg_attr(feature = "serde", serde(with = "inf_as_null"))]
    pub p: f64,
    pub s: f64,
    pub eps: f64,
    pub delta: f64,
    pub b_hat: Option<f64>,
    pub omega_hat: Option<f64>,
    pub in_i: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MuOmega {
    pub p: f64,
    pub mu: f64,
    pub omega: f64,
}

/// `J` is only ever bracketed: `I` is an inner bound.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JBracket {
    pub inner: Option<Interval>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalReport {
    pub constants: StructuralConstants,
    pub mode: Mode,
    pub interval: Option<Interval>,
    pub interior_nonempty: bool,
    pub rows: Vec<ExponentRow>,
    pub mu_omega: Vec<MuOmega>,
    pub extended: Option<(f64, f64)>,
    pub j: JBracket,
    pub mode_note: Option<String>,
}

/// Evaluates everything on the `p` grid. `n_dim` (if given) adds the
/// extended endpoints computed from `I`.
pub fn interval_report(c: &StructuralConstants, mode: Mode, p_grid: &[f64], n_dim: Option<f64>) -> Result<IntervalReport> {
    c.validate()?;
    let interval = interval_i(c);
    let mode_note = check_mode(c, mode).err().map(|e| alloc::format!("{e}"));
    let rows = p_grid
        .iter()
        .map(|&p| {
            let e = Exponent::from_p(p)?;
            Ok(ExponentRow {
                p,
                s: e.s(),
                eps: eps_s(c, e.s()),
                delta: delta_s(c, e.s()),
                b_hat: b_hat_p(c, p, mode).ok(),
                omega_hat: omega_hat(c, p, mode).ok(),
                in_i: interval.map_or(false, |i| i.contains(p)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mu_omega = p_grid
        .iter()
        .filter_map(|&p| mu_omega_for(c, p, None, mode).ok().map(|(mu, omega)| MuOmega { p, mu, omega }))
        .collect();
    let extended = match (n_dim, interval) {
        (Some(n), Some(i)) => Some(extended_endpoints(i.lower, i.upper, n)?),
        _ => None,
    };
    Ok(IntervalReport {
        constants: c.clone(),
        mode,
        interval,
        interior_nonempty: interval.map_or(false, |i| i.interior_nonempty()),
        rows,
        mu_omega,
        extended,
        j: JBracket { inner: interval, status: String::from("bracketed") },
        mode_note,
    })
}
