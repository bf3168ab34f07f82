//! Seeded probe families used to measure form bounds and to audit
//! inequalities: boundary-compatible Fourier modes plus random smooth
//! combinations of them.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::{Boundary, Grid};
use crate::mesh::GridFunction;

/// Number of random probes in the standard family.
pub const RANDOM_PROBES: usize = 100;

/// One-dimensional mode `k` on axis `axis`: `sin(k pi s)` (Dirichlet, `k >= 1`)
/// or `cos(k pi s)` (Neumann, `k >= 0`) with `s` the normalised coordinate.
fn mode_1d(grid: &Grid, axis: usize, k: usize, x: f64) -> f64 {
    let (a, b) = (grid.lower()[axis], grid.upper()[axis]);
    let s = (x - a) / (b - a);
    match grid.bc() {
        Boundary::Dirichlet => (k as f64 * PI * s).sin(),
        Boundary::Neumann => (k as f64 * PI * s).cos(),
    }
}

fn first_mode(bc: Boundary) -> usize {
    match bc {
        Boundary::Dirichlet => 1,
        Boundary::Neumann => 0,
    }
}

/// Tensor-product mode `(kx, ky)` as nodal values.
pub fn tensor_mode(grid: &Grid, kx: usize, ky: usize) -> Vec<f64> {
    (0..grid.node_count())
        .map(|idx| {
            let c = grid.coord(idx);
            let mut v = mode_1d(grid, 0, kx, c[0]);
            if grid.dim() == 2 {
                v *= mode_1d(grid, 1, ky, c[1]);
            }
            v
        })
        .collect()
}

/// All tensor modes with per-axis index below `kmax`.
pub fn mode_probes(grid: &Grid, kmax: usize) -> Vec<GridFunction> {
    let k0 = first_mode(grid.bc());
    let ky_range = if grid.dim() == 2 { k0..kmax.max(k0 + 1) } else { 0..1 };
    let mut out = Vec::new();
    for ky in ky_range {
        for kx in k0..kmax.max(k0 + 1) {
            let v = tensor_mode(grid, kx, ky);
            out.push(GridFunction::from_real(*grid, &v).expect("finite mode"));
        }
    }
    out
}

/// What kind of random probe to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeKind {
    /// Complex combination of modes.
    Complex,
    /// Real combination of modes.
    Real,
    /// Absolute value of a real combination (admissible for `u >= 0`
    /// inequalities; vanishes on a Dirichlet boundary).
    Nonnegative,
    /// `exp` of a complex combination times a positive real envelope; never
    /// vanishes in the interior.
    Nonvanishing,
}

/// Random smooth combination of low modes with coefficients decaying like
/// `1 / (1 + k)^2`, drawn from `rng`.
pub fn random_smooth(grid: &Grid, kind: ProbeKind, rng: &mut ChaCha8Rng) -> GridFunction {
    let k0 = first_mode(grid.bc());
    let kmax = k0 + rng.gen_range(2..8);
    let kymax = if grid.dim() == 2 { kmax } else { 1 };
    let mut re = alloc::vec![0.0; grid.node_count()];
    let mut im = alloc::vec![0.0; grid.node_count()];
    let kys = if grid.dim() == 2 { k0..kymax } else { 0..1 };
    for ky in kys {
        for kx in k0..kmax {
            let decay = 1.0 / ((1 + kx + ky) as f64).powi(2);
            let a = rng.gen_range(-1.0..1.0) * decay;
            let b = rng.gen_range(-1.0..1.0) * decay;
            let m = tensor_mode(grid, kx, ky);
            for (idx, mv) in m.iter().enumerate() {
                re[idx] += a * mv;
                im[idx] += b * mv;
            }
        }
    }
    let scale = rng.gen_range(0.2..5.0);
    let values: Vec<C64> = match kind {
        ProbeKind::Complex => re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b) * scale).collect(),
        ProbeKind::Real => re.iter().map(|&a| C64::new(a * scale, 0.0)).collect(),
        ProbeKind::Nonnegative => re.iter().map(|&a| C64::new(a.abs() * scale, 0.0)).collect(),
        ProbeKind::Nonvanishing => {
            let env = envelope(grid);
            re.iter()
                .zip(&im)
                .zip(&env)
                .map(|((&a, &b), &e)| C64::new(a, 3.0 * b).exp() * e * scale)
                .collect()
        }
    };
    GridFunction::new(*grid, values).expect("finite probe")
}

/// Positive envelope: 1 on Neumann grids, product of `sin` bumps on
/// Dirichlet grids (zero only on the boundary).
fn envelope(grid: &Grid) -> Vec<f64> {
    match grid.bc() {
        Boundary::Neumann => alloc::vec![1.0; grid.node_count()],
        Boundary::Dirichlet => tensor_mode(grid, 1, 1),
    }
}

/// `count` random probes from seed `seed`.
pub fn random_probes(grid: &Grid, kind: ProbeKind, count: usize, seed: u64) -> Vec<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_smooth(grid, kind, &mut rng)).collect()
}

/// Modes up to `kmax` followed by [`RANDOM_PROBES`] random probes of `kind`.
/// For [`ProbeKind::Nonnegative`] the modes are replaced by their absolute
/// values.
pub fn standard_family(grid: &Grid, kind: ProbeKind, kmax: usize, seed: u64) -> Vec<GridFunction> {
    let mut out: Vec<GridFunction> = mode_probes(grid, kmax)
        .into_iter()
        .map(|m| if kind == ProbeKind::Nonnegative { m.map(|z| C64::new(z.norm(), 0.0)).unwrap() } else { m })
        .collect();
    out.extend(random_probes(grid, kind, RANDOM_PROBES, seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_probes_vanish_on_the_boundary() {
        let g = Grid::new_2d((0.0, 1.0), (0.0, 2.0), [9, 11], Boundary::Dirichlet).unwrap();
        for u in standard_family(&g, ProbeKind::Complex, 4, 7) {
            for k in 0..g.node_count() {
                if g.is_boundary(k) {
                    assert!(u.values()[k].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn families_are_deterministic_and_typed() {
        let g = Grid::new_1d(0.0, 1.0, 33, Boundary::Neumann).unwrap();
        let a = random_probes(&g, ProbeKind::Nonnegative, 5, 42);
        let b = random_probes(&g, ProbeKind::Nonnegative, 5, 42);
        assert_eq!(a, b);
        assert!(a.iter().all(|u| u.values().iter().all(|z| z.re >= 0.0 && z.im == 0.0)));
        let nv = random_probes(&g, ProbeKind::Nonvanishing, 5, 1);
        assert!(nv.iter().all(|u| u.values().iter().all(|z| z.norm() > 0.0)));
    }
}
