//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use semigroup_core::casebook::{self, Bump, CounterexampleOptions};
use semigroup_core::constants::{self, MeasureOptions, Provenance, StructuralConstants, FIELD_NAMES};
use semigroup_core::fields::Boundary;
use semigroup_core::forms::{self, FormContext};
use semigroup_core::intervals::{self, Interval, Mode};
use semigroup_core::mesh::{self, GridFunction, DEFAULT_FLOOR};
use semigroup_core::probes::{self, ProbeKind};
use semigroup_core::semigroup::{self as sg, AuditOptions, AuditStatus, DiscreteOperator, NormOptions, Scheme};

use crate::config::Config;
use crate::report::{flag, num, opt, Format, Report, Table, Verdict};

const DEFAULT_P: &str = "1.25,1.5,2,3,4,6,8";

#[derive(Debug, Parser)]
#[command(name = "semigroup-lab", version, about = "Constants, intervals and semigroup audits for divergence-form operators")]
pub struct Cli {
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Seed for every randomised routine.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SEMIGROUP_LAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure the structural constants of a problem and report the interval.
    Analyze(AnalyzeArgs),
    /// Interval and growth bounds from declared constants only.
    Interval(IntervalArgs),
    /// Evolve the semigroup and audit norms.
    Simulate(SimulateArgs),
    /// Run the form identity and inequality checks.
    Verify(VerifyArgs),
    /// Worked examples.
    #[command(subcommand)]
    Example(Example),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "thm1.3")]
    Thm13,
    #[value(name = "thm1.5")]
    Declared,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Thm13 => Mode::Thm13,
            ModeArg::Declared => Mode::DeclaredCoercivity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Euler,
    Trapezoid,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Euler => Scheme::ImplicitEuler,
            SchemeArg::Trapezoid => Scheme::Trapezoid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AuditKind {
    Quasi,
    Growth,
    Smoothing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BumpArg {
    Cubic,
    Quintic,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// JSON problem file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the mode given in the file.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Highest mode index in the measuring family.
    #[arg(long, default_value_t = 6)]
    pub kmax: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Exponents for the table.
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_P)]
    pub p: Vec<f64>,
    /// Dimension for the extended endpoints.
    #[arg(long = "N")]
    pub n_dim: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct ConstantFlags {
    #[arg(long = "alpha-s")]
    pub alpha_s: Option<f64>,
    #[arg(long = "alpha-a")]
    pub alpha_a: Option<f64>,
    #[arg(long = "M")]
    pub m: Option<f64>,
    #[arg(long = "beta-prime")]
    pub beta_prime: Option<f64>,
    #[arg(long = "B-prime")]
    pub b_prime: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long = "B1")]
    pub b1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long = "B2")]
    pub b2: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "Gamma")]
    pub gamma_cap: Option<f64>,
    #[arg(long = "beta-hat")]
    pub beta_hat: Option<f64>,
    #[arg(long = "B-hat")]
    pub b_hat: Option<f64>,
    #[arg(long = "c-hat")]
    pub c_hat: Option<f64>,
}

impl ConstantFlags {
    fn pairs(&self) -> [(&'static str, Option<f64>); 14] {
        [
            ("alpha_s", self.alpha_s),
            ("alpha_a", self.alpha_a),
            ("M", self.m),
            ("beta_prime", self.beta_prime),
            ("B_prime", self.b_prime),
            ("beta1", self.beta1),
            ("B1", self.b1),
            ("beta2", self.beta2),
            ("B2", self.b2),
            ("gamma", self.gamma),
            ("Gamma", self.gamma_cap),
            ("beta_hat", self.beta_hat),
            ("B_hat", self.b_hat),
            ("c_hat", self.c_hat),
        ]
    }
}

#[derive(Debug, Args)]
pub struct IntervalArgs {
    #[command(flatten)]
    pub constants: ConstantFlags,
    /// JSON file with constants; flags override its entries.
    #[arg(long = "constants")]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "thm1.3")]
    pub mode: ModeArg,
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_P)]
    pub p: Vec<f64>,
    /// Dimension for the extended endpoints.
    #[arg(long = "N")]
    pub n_dim: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "quasi")]
    pub audit: AuditKind,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    /// Twist vectors for the growth audit: `1,2,4` (along x) or `1:0.5,0:2`.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub xi: Vec<String>,
    /// Target exponent for the smoothing audit.
    #[arg(long, default_value = "inf")]
    pub r: f64,
    /// Step size for stepped propagators.
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, value_enum, default_value = "euler")]
    pub scheme: SchemeArg,
    /// Largest system propagated by the dense exponential.
    #[arg(long, default_value_t = 600)]
    pub dense_limit: usize,
    /// Relative slack on bounds.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_delimiter = ',', default_value = "1.5,3,6")]
    pub p: Vec<f64>,
    /// Random probes per check.
    #[arg(long, default_value_t = 100)]
    pub probes: usize,
    /// Allowed relative deficit in the accretivity estimate.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Example {
    /// Thresholds for the inverse-square potential.
    Hardy {
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        #[arg(long = "N", default_value_t = 3.0)]
        n_dim: f64,
    },
    /// One-dimensional Neumann problem whose functional tends to a negative limit.
    Counterexample {
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20")]
        lambda: Vec<f64>,
        #[arg(long)]
        p: Option<f64>,
        /// Grid nodes for the discrete operator (0 skips it).
        #[arg(long, default_value_t = 2049)]
        n: usize,
        #[arg(long, value_enum, default_value = "cubic")]
        bump: BumpArg,
        /// Also tabulate the discrete error under refinement.
        #[arg(long)]
        convergence: bool,
    },
    /// Forms with and without a constant divergence-free antisymmetric part.
    Invariance {
        #[arg(long, value_delimiter = ',', default_value = "0,1,5")]
        c: Vec<f64>,
        #[arg(long, default_value_t = 33)]
        n: usize,
        #[arg(long, value_enum, default_value = "dirichlet")]
        bc: BcArg,
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
    /// `(beta', B')` from `(alpha_a, beta_hat, B_hat)`.
    Synthesis {
        #[arg(long = "alpha-a")]
        alpha_a: f64,
        #[arg(long = "beta-hat")]
        beta_hat: f64,
        #[arg(long = "B-hat")]
        b_hat: f64,
    },
    /// Truncated inverse-square potentials on a planar surrogate (qualitative).
    Truncation {
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        #[arg(long = "N", default_value_t = 3.0)]
        n_dim: f64,
        #[arg(long, default_value_t = 41)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "10,40,160,640")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 8)]
        probes: usize,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code: 0 pass, 2 breach, 1 usage or input error.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Table
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(report) => {
            if let Err(e) = report.write(format, out) {
                let _ = writeln!(err, "error: {e}");
                return 1;
            }
            report.verdict.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

/// [`run_with`] on the process arguments and standard streams.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Analyze(a) => analyze(a, cli.seed),
        Command::Interval(a) => interval(a),
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Verify(a) => verify(a, cli.seed),
        Command::Example(e) => example(e, cli.seed),
    }
}

fn check_exponents(ps: &[f64]) -> Result<()> {
    if let Some(p) = ps.iter().find(|p| !(**p >= 1.0)) {
        bail!("exponent p = {p} must be >= 1");
    }
    Ok(())
}

fn check_times(ts: &[f64]) -> Result<()> {
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        bail!("time t = {t} must be positive and finite");
    }
    Ok(())
}

struct Loaded {
    ctx: FormContext,
    constants: StructuralConstants,
    mode: Mode,
}

fn load(a: &ProblemArgs, seed: u64) -> Result<Loaded> {
    let cfg = Config::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    let problem = cfg.build().with_context(|| format!("building coefficients from {}", a.config.display()))?;
    let ctx = FormContext::new(&problem.coefficients)?;
    let all_declared = FIELD_NAMES.iter().all(|n| *n == "c3" || problem.declared.contains_key(*n));
    let constants = if all_declared {
        problem.declared_constants()?
    } else {
        let (measured, _) = constants::measure(&problem.coefficients, &MeasureOptions { kmax: a.kmax, seed, ..Default::default() })?;
        problem.apply_declared(&measured)?
    };
    let mode = a.mode.map(Mode::from).unwrap_or(problem.mode);
    Ok(Loaded { ctx, constants, mode })
}

pub fn interval_line(i: Option<Interval>) -> String {
    match i {
        Some(i) if i.upper.is_finite() => format!("I = [{:.6}, {:.6}]", i.lower, i.upper),
        Some(i) => format!("I = [{:.6}, inf)", i.lower),
        None => "I = empty".to_string(),
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Thm13 => "thm1.3",
        Mode::DeclaredCoercivity => "thm1.5",
    }
}

fn constants_table(c: &StructuralConstants) -> Table {
    let mut t = Table::new("constants", &["name", "value", "provenance"]);
    for name in FIELD_NAMES {
        let prov = match c.provenance.get(name) {
            Some(Provenance::Declared) => "declared",
            Some(Provenance::Measured) => "measured",
            Some(Provenance::Synthesized) => "synthesized",
            None => "",
        };
        t.push(vec![name.to_string(), num(c.get(name).unwrap_or(0.0)), prov.to_string()]);
    }
    t
}

fn interval_report(c: &StructuralConstants, mode: Mode, ps: &[f64], n_dim: Option<f64>) -> Result<Report> {
    check_exponents(ps)?;
    let r = intervals::interval_report(c, mode, ps, n_dim)?;
    let mut lines = vec![interval_line(r.interval), format!("mode = {}", mode_name(mode))];
    if let Some((lo, hi)) = r.extended {
        lines.push(format!("extended = [{:.6}, {}]", lo, if hi.is_finite() { format!("{hi:.6}") } else { "inf".into() }));
    }
    if let Some(note) = &r.mode_note {
        lines.push(format!("note: {note}"));
    }
    let mut rows = Table::new("exponents", &["p", "eps_p", "delta_p", "B_hat_p", "omega_hat_p", "in_I"]);
    for row in &r.rows {
        rows.push(vec![num(row.p), num(row.eps), num(row.delta), opt(row.b_hat), opt(row.omega_hat), flag(row.in_i)]);
    }
    let mut mo = Table::new("growth", &["p", "mu", "omega"]);
    for m in &r.mu_omega {
        mo.push(vec![num(m.p), num(m.mu), num(m.omega)]);
    }
    Ok(Report { lines, tables: vec![constants_table(c), rows, mo], json: json!({ "report": r }), verdict: Verdict::Pass })
}

fn analyze(a: &AnalyzeArgs, seed: u64) -> Result<Report> {
    let l = load(&a.problem, seed)?;
    interval_report(&l.constants, l.mode, &a.p, a.n_dim)
}

fn interval(a: &IntervalArgs) -> Result<Report> {
    let mut c = match &a.file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut c: StructuralConstants = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            c.provenance.clear();
            c
        }
        None => StructuralConstants::default(),
    };
    for (name, v) in a.constants.pairs() {
        if let Some(v) = v {
            c.set(name, v, Provenance::Declared).with_context(|| format!("--{name}"))?;
        }
    }
    c.declare_rest();
    interval_report(&c, a.mode.into(), &a.p, a.n_dim)
}

fn parse_xi(items: &[String], dim: usize) -> Result<Vec<[f64; 2]>> {
    items
        .iter()
        .map(|s| {
            let parts: Vec<&str> = s.split(':').collect();
            let num = |t: &str| t.trim().parse::<f64>().with_context(|| format!("--xi: `{t}` is not a number"));
            match parts.as_slice() {
                [x] => Ok([num(x)?, 0.0]),
                [x, y] if dim == 2 => Ok([num(x)?, num(y)?]),
                _ => bail!("--xi: `{s}` should be `x` or, on planar grids, `x:y`"),
            }
        })
        .collect()
}

fn status_name(s: AuditStatus) -> &'static str {
    match s {
        AuditStatus::Pass => "PASS",
        AuditStatus::Breach => "BREACH",
        AuditStatus::ExpectNoGuarantee => "EXPECTED",
    }
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<Report> {
    check_exponents(&a.p)?;
    check_times(&a.t)?;
    if !(a.dt > 0.0) {
        bail!("--dt must be positive");
    }
    let l = load(&a.problem, seed)?;
    let op = DiscreteOperator::assemble(&l.ctx)?;
    let opts = AuditOptions {
        tol: a.tol,
        norm: NormOptions { restarts: a.restarts.max(1), seed, ..Default::default() },
        dense_limit: a.dense_limit,
        dt: a.dt,
        scheme: a.scheme.into(),
    };
    let mut lines = vec![
        interval_line(intervals::interval_i(&l.constants)),
        format!("mode = {}, dofs = {}", mode_name(l.mode), op.dofs()),
    ];
    if let Err(e) = intervals::check_mode(&l.constants, l.mode) {
        lines.push(format!("note: {e}"));
    }
    match a.audit {
        AuditKind::Quasi => {
            let mut ts = a.t.clone();
            ts.sort_by(|x, y| x.total_cmp(y));
            ts.dedup();
            let parts = ts
                .par_iter()
                .map(|&t| sg::quasi_contractivity_audit(&op, &l.constants, l.mode, &a.p, &[t], &opts))
                .collect::<semigroup_core::Result<Vec<_>>>()?;
            let rows: Vec<_> = parts.into_iter().flat_map(|r| r.rows).collect();
            let report = sg::TrajectoryReport { mode: l.mode, tol: opts.tol, rows };
            let mut t = Table::new("trajectory", &["p", "t", "measured", "bound", "margin", "status", "method"]);
            for r in &report.rows {
                t.push(vec![num(r.p), num(r.t), num(r.measured), opt(r.bound), opt(r.margin), status_name(r.status).into(), r.method.clone()]);
            }
            let verdict = Verdict::Pass.and(report.breaches() == 0);
            lines.push(format!("breaches = {}", report.breaches()));
            Ok(Report { lines, tables: vec![t], json: json!({ "constants": l.constants, "trajectory": report }), verdict })
        }
        AuditKind::Growth => {
            let xi = parse_xi(&a.xi, op.grid().dim())?;
            let fits = a
                .p
                .par_iter()
                .map(|&p| {
                    let with = intervals::mu_omega_for(&l.constants, p, None, l.mode).is_ok();
                    let c = if with { Some((&l.constants, l.mode)) } else { None };
                    sg::weighted_growth_audit(&op, &l.ctx, p, &xi, &a.t, c, &opts)
                })
                .collect::<semigroup_core::Result<Vec<_>>>()?;
            let mut t = Table::new("growth", &["p", "xi_x", "xi_y", "t", "measured", "ceiling"]);
            let mut verdict = Verdict::Pass;
            for f in &fits {
                lines.push(format!("p = {}: mu = {}, omega = {}, within ceiling = {}", num(f.p), num(f.mu), num(f.omega), flag(f.within_ceiling)));
                verdict = verdict.and(f.within_ceiling);
                for r in &f.rows {
                    t.push(vec![num(f.p), num(r.xi[0]), num(r.xi[1]), num(r.t), num(r.measured), opt(r.ceiling)]);
                }
            }
            Ok(Report { lines, tables: vec![t], json: json!({ "constants": l.constants, "growth": fits }), verdict })
        }
        AuditKind::Smoothing => {
            if !(a.r >= 1.0) {
                bail!("--r must be >= 1");
            }
            let fits = a
                .p
                .par_iter()
                .map(|&p| sg::smoothing_audit(&op, p, a.r, &a.t, &opts))
                .collect::<semigroup_core::Result<Vec<_>>>()?;
            let mut t = Table::new("smoothing", &["p", "r", "t", "norm"]);
            for f in &fits {
                lines.push(format!(
                    "p = {} -> r = {}: norm ~ {} t^-{} (max deviation {})",
                    num(f.p),
                    num(f.r),
                    num(f.constant),
                    num(f.exponent),
                    num(f.max_rel_dev)
                ));
                for &(tt, n) in &f.rows {
                    t.push(vec![num(f.p), num(f.r), num(tt), num(n)]);
                }
            }
            Ok(Report { lines, tables: vec![t], json: json!({ "smoothing": fits }), verdict: Verdict::Pass })
        }
    }
}

struct CheckRow {
    check: String,
    p: Option<f64>,
    worst: Option<f64>,
    tol: Option<f64>,
    status: &'static str,
}

fn verdict_of(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "BREACH"
    }
}

fn verify(a: &VerifyArgs, seed: u64) -> Result<Report> {
    check_exponents(&a.p)?;
    if let Some(p) = a.p.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
        bail!("verify needs finite exponents p > 1, got {p}");
    }
    let l = load(&a.problem, seed)?;
    let ctx = &l.ctx;
    let c = &l.constants;
    let grid = *ctx.grid();
    let adj = ctx.adjoint()?;
    let nonvanishing = probes::random_probes(&grid, ProbeKind::Nonvanishing, a.probes, seed);
    let complex = probes::random_probes(&grid, ProbeKind::Complex, a.probes, seed.wrapping_add(1));
    let interval = intervals::interval_i(c);
    let energy = |v: &[semigroup_core::C64]| ctx.h0_raw(v) + ctx.norm_sq(v);
    let per_p = a
        .p
        .par_iter()
        .map(|&p| -> semigroup_core::Result<Vec<CheckRow>> {
            let mut rows = Vec::new();
            let mut worst = f64::INFINITY;
            for u in &nonvanishing {
                let chk = forms::check_accretivity_identity(ctx, u, p)?;
                let v = mesh::power_map(u.values(), 0.5 * p - 1.0, DEFAULT_FLOOR);
                worst = worst.min(chk.residual / energy(&v));
            }
            rows.push(CheckRow { check: "accretivity".into(), p: Some(p), worst: Some(worst), tol: Some(a.tol), status: verdict_of(worst >= -a.tol) });

            let pd = intervals::dual(p);
            let mut dev: f64 = 0.0;
            for v in &complex {
                let t1 = ctx.tau_raw(v.values(), p);
                let t2 = adj.tau_raw(v.values(), pd);
                dev = dev.max((t1 - t2).abs() / (t1.abs() + 1.0));
            }
            rows.push(CheckRow { check: "tau duality".into(), p: Some(p), worst: Some(dev), tol: Some(1e-10), status: verdict_of(dev <= 1e-10) });

            let admissible = interval.is_some_and(|i| i.interior_contains(p));
            let omega = intervals::omega_hat(c, p, l.mode);
            match (admissible, omega) {
                (true, Ok(_)) => {
                    let emax = intervals::max_eps(c, p)?;
                    for eps in [0.0, 0.5 * emax] {
                        let mut worst = f64::INFINITY;
                        for v in &complex {
                            let m = forms::tau_lower_bound_check(c, ctx, v, p, eps, l.mode)?;
                            worst = worst.min(m / energy(v.values()));
                        }
                        rows.push(CheckRow {
                            check: format!("tau lower bound (eps = {})", num(eps)),
                            p: Some(p),
                            worst: Some(worst),
                            tol: Some(1e-8),
                            status: verdict_of(worst >= -1e-8),
                        });
                    }
                    let b = forms::omega_tilde_bracket(ctx, c, p, &complex, l.mode)?;
                    let up = b.upper.unwrap_or(f64::INFINITY);
                    let ok = b.lower <= up + 1e-9 * (1.0 + up.abs());
                    rows.push(CheckRow { check: "omega bracket".into(), p: Some(p), worst: Some(up - b.lower), tol: None, status: verdict_of(ok) });
                }
                _ => rows.push(CheckRow { check: "tau lower bound".into(), p: Some(p), worst: None, tol: None, status: "EXPECTED" }),
            }
            Ok(rows)
        })
        .collect::<semigroup_core::Result<Vec<_>>>()?;
    let mut rows: Vec<CheckRow> = per_p.into_iter().flatten().collect();
    let audit = constants::spot_audit(c, ctx, seed)?;
    for e in &audit.entries {
        rows.push(CheckRow {
            check: format!("constant {}", e.name),
            p: None,
            worst: Some(e.worst_margin),
            tol: None,
            status: verdict_of(e.violations == 0),
        });
    }
    let mut t = Table::new("checks", &["check", "p", "worst", "tol", "status"]);
    let mut js = Vec::new();
    for r in &rows {
        t.push(vec![r.check.clone(), opt(r.p), opt(r.worst), opt(r.tol), r.status.into()]);
        js.push(json!({ "check": r.check, "p": r.p, "worst": r.worst, "tol": r.tol, "status": r.status }));
    }
    let breaches = rows.iter().filter(|r| r.status == "BREACH").count();
    let lines = vec![interval_line(interval), format!("mode = {}, breaches = {}", mode_name(l.mode), breaches)];
    Ok(Report {
        lines,
        tables: vec![t],
        json: json!({ "constants": c, "checks": js, "spot_audit": audit }),
        verdict: Verdict::Pass.and(breaches == 0),
    })
}

fn example(e: &Example, seed: u64) -> Result<Report> {
    match e {
        Example::Hardy { beta, n_dim } => {
            let h = casebook::hardy(*beta, *n_dim)?;
            let named = [("p_minus", h.p_minus), ("p_plus", h.p_plus), ("p_max", h.p_max), ("p_min", h.p_min)];
            let lines = named.iter().map(|(n, v)| format!("{n} = {}", casebook::render_rational(*v))).collect();
            let mut t = Table::new("hardy", &["name", "value", "decimal"]);
            for (n, v) in named {
                t.push(vec![n.into(), casebook::render_rational(v), num(v)]);
            }
            let rendered: serde_json::Map<String, serde_json::Value> =
                named.iter().map(|(n, v)| (n.to_string(), json!(casebook::render_rational(*v)))).collect();
            Ok(Report { lines, tables: vec![t], json: json!({ "thresholds": h, "rendered": rendered }), verdict: Verdict::Pass })
        }
        Example::Counterexample { lambda, p, n, bump, convergence } => {
            let opts = CounterexampleOptions {
                p: p.unwrap_or(casebook::COUNTEREXAMPLE_P),
                bump: match bump {
                    BumpArg::Cubic => Bump::Cubic,
                    BumpArg::Quintic => Bump::Quintic,
                },
                grid_nodes: if *n == 0 { None } else { Some(*n) },
                ..Default::default()
            };
            check_exponents(&[opts.p])?;
            let rows = casebook::neumann_counterexample(lambda, &opts)?;
            let mut t = Table::new("functional", &["lambda", "closed_form", "quadrature", "discrete", "lp_norm"]);
            for r in &rows {
                t.push(vec![num(r.lambda), opt(r.closed_form), num(r.quadrature), opt(r.discrete), num(r.lp_norm)]);
            }
            let lines = vec![
                format!("p = {}, r = {}{:+}i", num(opts.p), num(opts.r.re), num(opts.r.im)),
                format!("lambda^2 coefficient = {}", num(casebook::quadratic_coefficient(opts.p, opts.r))),
                format!("limit = {}", num(casebook::counterexample_limit())),
            ];
            let mut tables = vec![t];
            let mut conv_rows = Vec::new();
            if *convergence {
                let lam = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                conv_rows = casebook::counterexample_convergence(lam, &[129, 257, 513, 1025, 2049], &opts)?;
                let mut ct = Table::new("convergence", &["n", "h", "error", "order"]);
                for r in &conv_rows {
                    ct.push(vec![r.n.to_string(), num(r.h), num(r.error), opt(r.order)]);
                }
                tables.push(ct);
            }
            Ok(Report { lines, tables, json: json!({ "options": opts, "rows": rows, "convergence": conv_rows }), verdict: Verdict::Pass })
        }
        Example::Invariance { c, n, bc, probes, .. } => {
            let bc = match bc {
                BcArg::Dirichlet => Boundary::Dirichlet,
                BcArg::Neumann => Boundary::Neumann,
            };
            let r = casebook::divergence_free_invariance(c, *n, bc, *probes, seed)?;
            let mut t = Table::new("invariance", &["c", "deviation", "relative"]);
            for row in &r.rows {
                t.push(vec![num(row.c), num(row.deviation), num(row.relative)]);
            }
            let ok = r.expected_nonzero || r.max_relative() <= 1e-10;
            let mut lines = vec![format!("max relative deviation = {}", num(r.max_relative()))];
            if r.expected_nonzero {
                lines.push("EXPECTED: the boundary term does not vanish without compact support".into());
            }
            Ok(Report { lines, tables: vec![t], json: json!({ "invariance": r }), verdict: Verdict::Pass.and(ok) })
        }
        Example::Synthesis { alpha_a, beta_hat, b_hat } => {
            let (bp, bpc) = casebook::drift_synthesis_demo(*alpha_a, *beta_hat, *b_hat)?;
            let mut t = Table::new("synthesis", &["beta_prime", "B_prime"]);
            t.push(vec![num(bp), num(bpc)]);
            Ok(Report {
                lines: vec![format!("beta_prime = {}", num(bp)), format!("B_prime = {}", num(bpc))],
                tables: vec![t],
                json: json!({ "beta_prime": bp, "B_prime": bpc }),
                verdict: Verdict::Pass,
            })
        }
        Example::Truncation { beta, n_dim, n, p, levels, t, dt, probes } => {
            check_exponents(&[*p])?;
            check_times(&[*t, *dt])?;
            let h = 2.0 / (*n as f64 - 1.0);
            let (cs, u) = casebook::hardy_surrogate(*beta, *n_dim, *n, h * h)?;
            let ctx = FormContext::new(&cs)?;
            let corpus: Vec<GridFunction> = probes::random_probes(cs.grid(), ProbeKind::Real, *probes, seed);
            let r = sg::truncation_convergence(&ctx, &u, *p, levels, *t, *dt, &corpus)?;
            let mut tab = Table::new("truncation", &["m_lo", "m_hi", "gap"]);
            for (k, g) in r.gaps.iter().enumerate() {
                tab.push(vec![num(r.levels[k]), num(r.levels[k + 1]), num(*g)]);
            }
            let lines = vec![
                "qualitative: planar surrogate with a regularised potential".to_string(),
                format!("monotone = {}", flag(r.monotone)),
            ];
            Ok(Report { lines, tables: vec![tab], json: json!({ "truncation": r }), verdict: Verdict::Pass })
        }
    }
}
