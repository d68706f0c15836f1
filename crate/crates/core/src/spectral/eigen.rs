use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::generator::GeneratorOperator;
use super::sym::SymOperator;
use crate::error::Result;

/// Dimension from which the iterative solver replaces the dense one.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub gap: f64,
    pub method: EigenMethod,
    /// `|S x - lambda x|` of the returned eigenvector.
    pub residual: f64,
    pub n: usize,
}

/// Sorted spectrum of a dense symmetric operator.
pub fn dense_spectrum(op: &SymOperator) -> Vec<f64> {
    let eig = SymmetricEigen::new(op.to_dense());
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Second-smallest eigenvalue of the symmetrized `-G`.
pub fn spectral_gap(gen: &GeneratorOperator) -> Result<GapReport> {
    let op = gen.symmetrized()?;
    gap_of(&op)
}

pub fn gap_of(op: &SymOperator) -> Result<GapReport> {
    let n = op.n();
    if n < 2 {
        return Ok(GapReport { gap: 0.0, method: EigenMethod::Dense, residual: 0.0, n });
    }
    if n < DENSE_LIMIT {
        let spec = dense_spectrum(op);
        return Ok(GapReport { gap: spec[1].max(0.0), method: EigenMethod::Dense, residual: 0.0, n });
    }
    let res = op.lanczos_lowest(true, 1e-10, 20_000)?;
    Ok(GapReport { gap: res.value.max(0.0), method: EigenMethod::Lanczos, residual: res.residual, n })
}

/// `Dirichlet form / variance` of `f` under `gen`.
pub fn rayleigh_quotient(gen: &GeneratorOperator, f: &[f64]) -> f64 {
    gen.dirichlet_form(f) / gen.variance(f)
}

/// Smallest Rayleigh quotient over `samples` random test functions and the
/// coordinate functions of the state space; an upper bound on the gap.
pub fn rayleigh_upper_bound(gen: &GeneratorOperator, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = gen.n();
    let mut best = f64::INFINITY;
    let mut consider = |f: &[f64]| {
        let v = gen.variance(f);
        if v > 1e-14 {
            best = best.min(gen.dirichlet_form(f) / v);
        }
    };
    for _ in 0..samples {
        let f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        consider(&f);
    }
    if let Some(space) = &gen.space {
        for j in 0..space.sites() {
            let f: Vec<f64> = (0..n).map(|i| space.coord(i, j) as f64).collect();
            consider(&f);
            let h: Vec<f64> = (0..n).map(|i| space.configuration(i).0[j] as f64).collect();
            consider(&h);
        }
    }
    best
}
