//! Computable L^p theory for second-order divergence-form operators
//!
//! ```text
//! L u = -div(A grad u) + b1 . grad u + div(b2 u) + Q u
//! ```
//!
//! with complex, possibly singular coefficients on axis-aligned boxes in one
//! or two dimensions.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the coefficient
//! language and the command-line front end live in `semigroup-lab`.
//!
//! Module map:
//!
//! * [`fields`]: grids, sampled coefficient fields, symmetric/anti-symmetric
//!   splitting of the diffusion matrix.
//! * [`constants`]: structural constants (alpha_s, beta', B', beta_j, B_j,
//!   gamma, Gamma, ...) measured from a coefficient set or declared.
//! * [`intervals`]: closed-form admissibility interval, growth bounds and
//!   coercivity parameters as functions of `1/p`.
//! * [`mesh`]: discrete calculus and the nonlinear maps `|u|`, `sgn u`,
//!   `eta(u)`, `u|u|^{p/2-1}`, `u|u|^{p-2}`.
//! * [`forms`]: quadrature of the sesquilinear form, the reference Dirichlet
//!   form and the functional `tau_p`, plus inequality audits.
//! * [`semigroup`]: operator assembly, time stepping, `p -> p` norm
//!   estimation and the semigroup audits.
//! * [`casebook`]: closed-form reproductions of the worked examples.
#![no_std]

extern crate alloc;

pub mod casebook;
pub mod constants;
mod error;
pub mod fields;
pub mod forms;
pub mod intervals;
pub mod linalg;
pub mod mesh;
pub mod probes;
pub mod semigroup;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
