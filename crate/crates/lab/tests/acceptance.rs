//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! the raw standard error stream (so it shows even for passing tests) and
//! then asserts its verdict. Tests share a lock so the timings are not
//! distorted by each other.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semigroup_core::casebook::{self, CounterexampleOptions};
use semigroup_core::constants::StructuralConstants;
use semigroup_core::fields::{Boundary, CoefficientSet, Grid, MatrixField, ScalarField, VectorField};
use semigroup_core::forms::{check_accretivity_identity, tau_lower_bound_check, FormContext};
use semigroup_core::intervals::{self, dual, Mode};
use semigroup_core::linalg::DenseMatrix;
use semigroup_core::mesh::GridFunction;
use semigroup_core::probes::{random_probes, ProbeKind};
use semigroup_core::semigroup::{
    opnorm_p, opnorm_pr, quasi_contractivity_audit, weighted_growth_audit, AuditOptions, AuditStatus, DiscreteOperator,
    NormOptions, Propagator, Scheme,
};
use semigroup_core::C64;
use semigroup_lab::dsl::{parse_expr, Point};

static SERIAL: Mutex<()> = Mutex::new(());

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn say(line: &str) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{line}");
}

/// Runs `body` under the lock, prints the verdict line, then asserts.
fn criterion(id: u32, name: &str, limit: Duration, body: impl FnOnce() -> (bool, String)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (ok, detail) = body();
    let took = start.elapsed();
    let in_time = took <= limit;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    say(&format!(
        "[{verdict}] {id:02} {name}: {detail} ({:.2} s, limit {} s)",
        took.as_secs_f64(),
        limit.as_secs()
    ));
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
    assert!(in_time, "criterion {id} ({name}) took {took:?}, limit {limit:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = semigroup_lab::run_with(std::iter::once("semigroup-lab").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
}

fn example_constants() -> StructuralConstants {
    StructuralConstants { alpha_s: 1.0, b_prime: 1.0, ..Default::default() }
}

#[test]
fn c01_interval_endpoints() {
    criterion(1, "interval endpoints", secs(1), || {
        let i = intervals::interval_i(&example_constants()).unwrap();
        let (lo, hi) = (4.0 - 2.0 * SQRT_2, 4.0 + 2.0 * SQRT_2);
        let end_err = (i.lower - lo).abs().max((i.upper - hi).abs());
        let c = example_constants();
        let eps_err = intervals::eps_p(&c, i.lower).abs().max(intervals::eps_p(&c, i.upper).abs());
        let (code, out) = run_cli(&["interval", "--alpha-s", "1", "--beta-prime", "0", "--B-prime", "1"]);
        let printed = out.lines().next() == Some("I = [1.171573, 6.828427]");
        let ok = end_err <= 1e-10 && eps_err <= 1e-12 && code == 0 && printed;
        (ok, format!("endpoint error {end_err:.1e}, |eps| at endpoints {eps_err:.1e}, cli `{}`", out.lines().next().unwrap_or("")))
    });
}

#[test]
fn c02_dissipativity_sign_equivalence() {
    criterion(2, "sign of eps_p vs 2 sqrt(p-1) - alpha_s |p-2|", secs(1), || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (mut agree, mut ties, mut bad) = (0, 0, 0);
        for _ in 0..10_000 {
            let a = 5.0 * (1.0 - rng.gen::<f64>());
            let p = 1.0 + 49.0 * (1.0 - rng.gen::<f64>());
            let c = StructuralConstants { alpha_s: a, ..Default::default() };
            let e = intervals::eps_p(&c, p);
            let m = intervals::dissipativity_margin(a, p);
            if e.abs() <= 1e-10 || m.abs() <= 1e-10 {
                ties += 1;
            } else if (e > 0.0) == (m > 0.0) {
                agree += 1;
            } else {
                bad += 1;
            }
        }
        (bad == 0, format!("{agree} agree, {bad} disagree, {ties} ties excluded"))
    });
}

#[test]
fn c03_hardy_thresholds() {
    criterion(3, "Hardy thresholds", secs(1), || {
        let (code, out) = run_cli(&["example", "hardy", "--beta", "0.75", "--N", "5"]);
        let head: Vec<&str> = out.lines().take(4).collect();
        let printed = code == 0 && head == ["p_minus = 4/3", "p_plus = 4", "p_max = 20/3", "p_min = 20/17"];
        let mut worst: f64 = 0.0;
        for k in 1..=9 {
            let h = casebook::hardy(k as f64 / 10.0, 5.0).unwrap();
            worst = worst.max((h.p_min - h.p_max / (h.p_max - 1.0)).abs());
            worst = worst.max((1.0 / h.p_minus + 1.0 / h.p_plus - 1.0).abs());
        }
        (printed && worst <= 1e-12, format!("printed {}, duality defect {worst:.1e}", head.join(", ")))
    });
}

#[test]
fn c04_counterexample_limit() {
    criterion(4, "counterexample limit", secs(30), || {
        let opts = CounterexampleOptions::default();
        let row = casebook::neumann_counterexample(&[10.0], &opts).unwrap()[0];
        let limit = -1.0 / 8f64.sqrt();
        let closed = row.closed_form.unwrap_or(f64::NAN);
        let e_closed = (closed - limit).abs();
        let e_quad = (row.quadrature - closed).abs();
        let e_disc = (row.discrete.unwrap_or(f64::NAN) - closed).abs();
        let conv = casebook::counterexample_convergence(10.0, &[129, 257, 513, 1025, 2049], &opts).unwrap();
        for r in &conv {
            say(&format!(
                "       n = {:5}  h = {:.3e}  error = {:.3e}  order = {}",
                r.n,
                r.h,
                r.error,
                r.order.map_or("-".into(), |o| format!("{o:.2}"))
            ));
        }
        let lam = [5.0, 10.0, 20.0, 40.0];
        let rows = casebook::neumann_counterexample(&lam, &CounterexampleOptions { grid_nodes: None, ..opts }).unwrap();
        let norms_fall = rows.windows(2).all(|w| w[1].lp_norm < w[0].lp_norm);
        let trend = rows.windows(2).all(|w| {
            let d = |r: &casebook::CounterexampleRow| (r.closed_form.unwrap_or(f64::NAN) - limit).abs();
            d(&w[1]) <= d(&w[0]) + 1e-12
        });
        let ok = e_closed <= 1e-10 && e_quad <= 1e-6 && e_disc <= 1e-3 && norms_fall && trend;
        (
            ok,
            format!(
                "closed form {closed:.12} (|. + 1/sqrt 8| = {e_closed:.1e}), quadrature error {e_quad:.1e}, discrete error {e_disc:.1e}, ||u||_p decreasing {norms_fall}"
            ),
        )
    });
}

/// Complex drifts and potential, real diffusion: the accretivity estimate
/// is an identity in the continuum.
fn accretivity_coefficients(n: usize, real_diffusion: bool) -> CoefficientSet {
    let g = Grid::new_1d(0.0, 1.0, n, Boundary::Neumann).unwrap();
    let z = c(0.0, 0.0);
    let im = if real_diffusion { 0.0 } else { 0.4 };
    let a = MatrixField::from_fn(g, |x| [[c(1.5 + x[0].sin(), im * x[0]), z], [z, z]]).unwrap();
    let b1 = VectorField::from_fn(g, |x| [c(0.3 * x[0], -0.7), z]).unwrap();
    let b2 = VectorField::from_fn(g, |x| [c(-0.2, 0.5 * x[0].cos()), z]).unwrap();
    let q = ScalarField::from_fn(g, |x| c(x[0] - 0.5, 0.3)).unwrap();
    CoefficientSet::new(a, b1, b2, q).unwrap()
}

#[test]
fn c05_accretivity_identity() {
    criterion(5, "accretivity identity under refinement", secs(20), || {
        let grids = [65, 129, 257];
        let u_of = |g: Grid| GridFunction::from_fn(g, |x| c(1.0 + x[0] * x[0], 2.0 * x[0]).powc(c(1.0, 0.5))).unwrap();
        let mut ok = true;
        let mut parts = Vec::new();
        for p in [1.5, 3.0, 6.0] {
            let mut res = Vec::new();
            let mut def = Vec::new();
            for &n in &grids {
                let ctx = FormContext::new(&accretivity_coefficients(n, true)).unwrap();
                res.push(check_accretivity_identity(&ctx, &u_of(*ctx.grid()), p).unwrap().residual);
                let ctx = FormContext::new(&accretivity_coefficients(n, false)).unwrap();
                def.push(check_accretivity_identity(&ctx, &u_of(*ctx.grid()), p).unwrap().identity_defect);
            }
            let order = |v: &[f64]| (v[0].abs() / v[1].abs()).log2().min((v[1].abs() / v[2].abs()).log2());
            let (o_res, o_def) = (order(&res), order(&def));
            ok &= o_res >= 1.5 && o_def >= 1.5 && res[2] >= -1e-8 && res.windows(2).all(|w| w[1].abs() < w[0].abs());
            parts.push(format!("p = {p}: residual {:.2e} (order {o_res:.2}), complex-A defect order {o_def:.2}", res[2]));
        }
        (ok, parts.join("; "))
    });
}

#[test]
fn c06_tau_lower_bound_sweep() {
    criterion(6, "tau lower bound sweep", secs(60), || {
        let ctx = FormContext::new(&casebook::counterexample_coefficients(129).unwrap()).unwrap();
        let mut probes = random_probes(ctx.grid(), ProbeKind::Complex, 250, 42);
        probes.extend(random_probes(ctx.grid(), ProbeKind::Nonvanishing, 250, 43));
        let c = casebook::counterexample_constants_with(0.1);
        let mut worst = f64::INFINITY;
        for p in [2.0, 4.0, 6.0] {
            let em = intervals::max_eps(&c, p).unwrap();
            for eps in [0.0, 0.5 * em] {
                for v in &probes {
                    worst = worst.min(tau_lower_bound_check(&c, &ctx, v, p, eps, Mode::Thm13).unwrap());
                }
            }
        }
        // literal constants (beta' = 0) in declared mode, for the record
        let lit = casebook::counterexample_constants();
        let mut lit_worst = f64::INFINITY;
        for p in [2.0, 4.0, 6.0] {
            let em = intervals::max_eps(&lit, p).unwrap();
            for eps in [0.0, 0.5 * em] {
                for v in &probes {
                    lit_worst = lit_worst.min(tau_lower_bound_check(&lit, &ctx, v, p, eps, Mode::DeclaredCoercivity).unwrap());
                }
            }
        }
        say(&format!("       info: beta' = 0 in declared mode gives worst margin {lit_worst:.3} (no guarantee there)"));
        (worst >= -1e-8, format!("{} probes, beta' = 0.1: worst margin {worst:.3e}", probes.len()))
    });
}

#[test]
fn c07_quasi_contractivity() {
    criterion(7, "quasi-contractivity", secs(120), || {
        let g = Grid::new_1d(0.0, 1.0, 257, Boundary::Dirichlet).unwrap();
        let heat = DiscreteOperator::assemble(&FormContext::new(&CoefficientSet::laplacian(g).unwrap()).unwrap()).unwrap();
        let opts = AuditOptions::default();
        let mut heat_worst: f64 = 0.0;
        for t in [0.01, 0.1] {
            let prop = Propagator::auto(&heat, t, &opts).unwrap();
            for p in [1.5, 2.0, 4.0] {
                heat_worst = heat_worst.max(opnorm_p(&prop, Some(heat.mass()), p, &opts.norm).unwrap().value);
            }
        }
        let ex = DiscreteOperator::assemble(&FormContext::new(&casebook::counterexample_coefficients(257).unwrap()).unwrap()).unwrap();
        let c = casebook::counterexample_constants_with(0.1);
        let ts = [0.01, 0.1, 0.5];
        let rep = quasi_contractivity_audit(&ex, &c, Mode::Thm13, &[4.0], &ts, &opts).unwrap();
        let ex_ok = rep.rows.iter().all(|r| r.status == AuditStatus::Pass);
        let ratios: Vec<String> = rep.rows.iter().map(|r| format!("{:.5}/{:.5}", r.measured, r.bound.unwrap_or(f64::NAN))).collect();
        let lit = quasi_contractivity_audit(&ex, &casebook::counterexample_constants(), Mode::DeclaredCoercivity, &[4.0], &ts, &opts).unwrap();
        let lit_rows: Vec<String> =
            lit.rows.iter().map(|r| format!("t = {}: {:.5} vs {:.5}", r.t, r.measured, r.bound.unwrap_or(f64::NAN))).collect();
        say(&format!("       info: beta' = 0, declared mode, omega_hat_4 = 1/4: {}", lit_rows.join(", ")));
        (
            heat_worst <= 1.0 + 1e-6 && ex_ok,
            format!("heat max norm {heat_worst:.6}; example p = 4 measured/bound {}", ratios.join(", ")),
        )
    });
}

fn general_2d(n: usize) -> CoefficientSet {
    let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), [n, n], Boundary::Neumann).unwrap();
    let a = MatrixField::from_fn(g, |x| [[c(2.0 + x[1], 0.3), c(0.4, -0.5 * x[0])], [c(-0.1, 0.2), c(1.5, 0.1 * x[1])]]).unwrap();
    let b1 = VectorField::from_fn(g, |x| [c(0.2, x[0]), c(-0.4, 0.1)]).unwrap();
    let b2 = VectorField::from_fn(g, |x| [c(0.1 * x[1], -0.3), c(0.5, 0.2)]).unwrap();
    let q = ScalarField::from_fn(g, |x| c(-1.0 + x[0] * x[1], 0.7)).unwrap();
    CoefficientSet::new(a, b1, b2, q).unwrap()
}

#[test]
fn c08_duality() {
    criterion(8, "duality", secs(30), || {
        let ctx = FormContext::new(&general_2d(17)).unwrap();
        let adj = ctx.adjoint().unwrap();
        let mut tau_dev: f64 = 0.0;
        let probes = random_probes(ctx.grid(), ProbeKind::Complex, 200, 42);
        for (k, v) in probes.iter().enumerate() {
            let p = [1.3, 2.0, 3.0, 7.5][k % 4];
            let a = ctx.tau_raw(v.values(), p);
            let b = adj.tau_raw(v.values(), dual(p));
            tau_dev = tau_dev.max((a - b).abs() / (1.0 + a.abs()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let opts = NormOptions::default();
        let mut norm_dev: f64 = 0.0;
        // nonnegative entries (the iteration reaches the global maximum), signed, complex
        for (k, p) in [1.5, 3.0, 4.0, 1.25, 6.0].into_iter().enumerate() {
            let m = DenseMatrix::from_fn(100, 100, |_, _| match k {
                0 | 1 => c(rng.gen_range(0.0..1.0), 0.0),
                2 => c(rng.gen_range(-1.0..1.0), 0.0),
                _ => c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            });
            let a = opnorm_p(&m, None, p, &opts).unwrap().value;
            let b = opnorm_p(&m.adjoint(), None, dual(p), &opts).unwrap().value;
            norm_dev = norm_dev.max((a - b).abs() / a);
        }
        (
            tau_dev <= 1e-10 && norm_dev <= 1e-6,
            format!("tau duality defect {tau_dev:.1e} on 200 probes, opnorm relative gap {norm_dev:.1e}"),
        )
    });
}

#[test]
fn c09_weighted_growth() {
    criterion(9, "weighted growth rate", secs(60), || {
        let g = Grid::new_1d(0.0, 4.0, 1025, Boundary::Dirichlet).unwrap();
        let ctx = FormContext::new(&CoefficientSet::laplacian(g).unwrap()).unwrap();
        let op = DiscreteOperator::assemble(&ctx).unwrap();
        let opts = AuditOptions { norm: NormOptions { restarts: 2, tol: 1e-10, ..Default::default() }, ..Default::default() };
        let xi = [[1.0, 0.0], [2.0, 0.0], [4.0, 0.0]];
        let fit = weighted_growth_audit(&op, &ctx, 2.0, &xi, &[0.0125, 0.025, 0.05], None, &opts).unwrap();
        ((0.95..=1.05).contains(&fit.mu), format!("fitted mu = {:.4}, omega = {:.4}", fit.mu, fit.omega))
    });
}

fn smoothing_norms(ts: &[f64]) -> Vec<f64> {
    let g = Grid::new_1d(0.0, 2.0, 1025, Boundary::Dirichlet).unwrap();
    let op = DiscreteOperator::assemble(&FormContext::new(&CoefficientSet::laplacian(g).unwrap()).unwrap()).unwrap();
    ts.iter()
        .map(|&t| {
            let prop = Propagator::stepped(&op, t, t / 200.0, Scheme::ImplicitEuler).unwrap();
            opnorm_pr(&prop, Some(op.mass()), 2.0, f64::INFINITY, &NormOptions::default()).unwrap().value
        })
        .collect()
}

const SMOOTHING_T: [f64; 4] = [1e-3, 2e-3, 5e-3, 1e-2];

#[test]
fn c10_smoothing() {
    criterion(10, "2 -> inf smoothing vs (4 pi t)^(-1/4)", secs(30), || {
        let ns = smoothing_norms(&SMOOTHING_T);
        let dev = SMOOTHING_T.iter().zip(&ns).map(|(t, n)| (n / (4.0 * PI * t).powf(-0.25) - 1.0).abs()).fold(0.0, f64::max);
        let row: Vec<String> = SMOOTHING_T.iter().zip(&ns).map(|(t, n)| format!("{t}: {n:.4}")).collect();
        (dev <= 0.1, format!("max relative deviation {dev:.3}; measured {}", row.join(", ")))
    });
}

#[test]
fn c10b_smoothing_exact_kernel() {
    criterion(10, "2 -> inf smoothing vs (8 pi t)^(-1/4) (exact heat kernel)", secs(30), || {
        let ns = smoothing_norms(&SMOOTHING_T);
        let dev = SMOOTHING_T.iter().zip(&ns).map(|(t, n)| (n / (8.0 * PI * t).powf(-0.25) - 1.0).abs()).fold(0.0, f64::max);
        (dev <= 0.01, format!("max relative deviation {dev:.2e}"))
    });
}

#[test]
fn c11_divergence_free_invariance() {
    criterion(11, "divergence-free invariance", secs(30), || {
        let r = casebook::divergence_free_invariance(&[0.0, 1.0, 5.0], 33, Boundary::Dirichlet, 100, 42).unwrap();
        let n = casebook::divergence_free_invariance(&[5.0], 33, Boundary::Neumann, 20, 42).unwrap();
        say(&format!("       info: Neumann boundary, relative deviation {:.2e} (expected nonzero)", n.max_relative()));
        (r.max_relative() <= 1e-10, format!("100 probes, max deviation / energy {:.1e}", r.max_relative()))
    });
}

#[test]
fn c12_parser() {
    criterion(12, "parser corpus", secs(1), || {
        let mut failures = Vec::new();
        for (src, _) in common::CORPUS {
            let ast = match parse_expr(src) {
                Ok(a) => a,
                Err(e) => {
                    failures.push(format!("{src}: {e}"));
                    continue;
                }
            };
            if parse_expr(&ast.to_string()).as_ref() != Ok(&ast) {
                failures.push(format!("{src}: round trip"));
            }
            for (x, y) in common::POINTS {
                let a = ast.eval(Point { x, y });
                let b = common::reference_eval(src, x, y).unwrap();
                if a != b && !common::close(a, b, 0.0) {
                    failures.push(format!("{src} at ({x}, {y}): {a} vs {b}"));
                }
            }
        }
        for (src, pos) in common::MALFORMED {
            match parse_expr(src) {
                Err(e) if e.position() == pos => {}
                other => failures.push(format!("{src:?}: {other:?}")),
            }
        }
        (
            failures.is_empty(),
            format!(
                "{} expressions, {} malformed inputs, failures: {}",
                common::CORPUS.len(),
                common::MALFORMED.len(),
                if failures.is_empty() { "none".into() } else { failures.join("; ") }
            ),
        )
    });
}
