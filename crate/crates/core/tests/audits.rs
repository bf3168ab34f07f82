use semigroup_core::casebook::*;
use semigroup_core::constants::StructuralConstants;
use semigroup_core::fields::{Boundary, CoefficientSet, Grid, MatrixField};
use semigroup_core::forms::{tau_lower_bound_check, FormContext};
use semigroup_core::intervals::{self, Mode};
use semigroup_core::mesh::lp_norm_weighted;
use semigroup_core::probes::{random_probes, standard_family, ProbeKind};
use semigroup_core::semigroup::*;
use semigroup_core::C64;

fn example(n: usize) -> (FormContext, DiscreteOperator) {
    let ctx = FormContext::new(&counterexample_coefficients(n).unwrap()).unwrap();
    let op = DiscreteOperator::assemble(&ctx).unwrap();
    (ctx, op)
}

#[test]
fn tau_lower_bound_holds_with_positive_beta_prime() {
    let (ctx, _) = example(129);
    let c = counterexample_constants_with(0.1);
    let probes = standard_family(ctx.grid(), ProbeKind::Complex, 6, 3);
    for p in [2.0, 4.0, 6.0] {
        let em = intervals::max_eps(&c, p).unwrap();
        for eps in [0.0, 0.5 * em] {
            for v in &probes {
                let m = tau_lower_bound_check(&c, &ctx, v, p, eps, Mode::Thm13).unwrap();
                assert!(m >= -1e-8, "p = {p}, eps = {eps}: {m}");
            }
        }
    }
}

#[test]
fn literal_constants_are_refused_in_the_default_mode() {
    let c = counterexample_constants();
    assert!(intervals::omega_hat(&c, 4.0, Mode::Thm13).is_err());
    assert_eq!(intervals::omega_hat(&c, 4.0, Mode::DeclaredCoercivity).unwrap(), 0.25);
}

#[test]
fn display_inequality_holds_on_probes() {
    let (ctx, op) = example(129);
    let c = counterexample_constants_with(0.1);
    for p in [3.0, 4.0, 5.0] {
        let om = intervals::omega_hat(&c, p, Mode::Thm13).unwrap();
        let ep = intervals::eps_p(&c, p);
        for u in random_probes(ctx.grid(), ProbeKind::Nonvanishing, 20, 5) {
            let x = op.to_dofs(&u).unwrap();
            let lhs = dissipativity_functional(&op, &x, p, om).unwrap();
            let (first, _) = dissipativity_lower_bounds(&ctx, &c, &u, p, Mode::Thm13, 0.0).unwrap();
            let absv: Vec<f64> = x.iter().map(|z| z.norm().powf(0.5 * p)).collect();
            assert!(lhs >= ep * ctx.h0_real(&absv) - 1e-3 * (1.0 + lhs.abs()), "p = {p}");
            assert!(first <= ep * ctx.h0_real(&absv) + 1e-9);
        }
    }
}

#[test]
fn outside_the_interval_the_functional_breaks_down() {
    let (_, op) = example(1025);
    let p = 8.0;
    let r = steepest_r(p);
    let ratio = |lambda: f64| {
        let u = op.to_dofs(&u_lambda(op.grid(), lambda, r, Bump::Cubic).unwrap()).unwrap();
        dissipativity_functional(&op, &u, p, 1.0).unwrap() / lp_norm_weighted(&u, op.mass(), p).powf(p)
    };
    assert!(ratio(10.0) < 0.0);
    assert!(ratio(20.0) < ratio(10.0));
}

#[test]
fn example_audit_marks_exponents_outside_the_interval() {
    let (_, op) = example(129);
    let c = counterexample_constants_with(0.1);
    let rep = quasi_contractivity_audit(&op, &c, Mode::Thm13, &[4.0, 8.0], &[0.05], &AuditOptions::default()).unwrap();
    assert_eq!(rep.rows[0].status, AuditStatus::Pass);
    assert_eq!(rep.rows[1].status, AuditStatus::ExpectNoGuarantee);
    assert!(rep.rows[1].bound.is_none());
}

#[test]
fn growth_stays_below_the_weighted_ceiling() {
    let g = Grid::new_1d(0.0, 4.0, 257, Boundary::Dirichlet).unwrap();
    let cs = CoefficientSet::laplacian(g).unwrap().with_diffusion(MatrixField::scaled_identity(g, C64::new(2.0, 0.0)).unwrap()).unwrap();
    let ctx = FormContext::new(&cs).unwrap();
    let op = DiscreteOperator::assemble(&ctx).unwrap();
    let c = StructuralConstants::default();
    let fit = weighted_growth_audit(&op, &ctx, 2.0, &[[1.0, 0.0], [2.0, 0.0]], &[0.01, 0.02], Some((&c, Mode::Thm13)), &AuditOptions::default()).unwrap();
    assert!(fit.within_ceiling, "{fit:?}");
    assert!((fit.mu - 2.0).abs() < 0.15, "{}", fit.mu);
}

#[test]
fn smoothing_from_p_to_p_has_no_singularity() {
    let g = Grid::new_1d(0.0, 1.0, 65, Boundary::Dirichlet).unwrap();
    let op = DiscreteOperator::assemble(&FormContext::new(&CoefficientSet::laplacian(g).unwrap()).unwrap()).unwrap();
    let fit = smoothing_audit(&op, 2.0, 2.0, &[1e-3, 3e-3, 1e-2], &AuditOptions::default()).unwrap();
    assert!(fit.exponent.abs() < 0.05, "{fit:?}");
    assert!(fit.rows.iter().all(|&(_, n)| n <= 1.0 + 1e-10));
}

#[test]
fn sectoriality_ratio_is_bounded_on_probes() {
    let (_, op) = example(129);
    let c = counterexample_constants_with(0.1);
    let p = 4.0;
    let (mu, om) = intervals::mu_omega_for(&c, p, None, Mode::Thm13).unwrap();
    let worst = random_probes(op.grid(), ProbeKind::Nonvanishing, 30, 1)
        .iter()
        .map(|u| sectoriality_ratio(&op, &op.to_dofs(u).unwrap(), p, om + mu).unwrap())
        .fold(0.0, f64::max);
    assert!(worst.is_finite() && worst > 0.0);
    assert!(worst <= 10.0 / mu, "{worst}");
}
