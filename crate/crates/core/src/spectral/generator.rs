//! Sparse generators on enumerated state spaces.

use rayon::prelude::*;
use std::io::Write;

use crate::dynamics::rates::jump_rate;
use crate::error::{Result, SosError};
use crate::model::config::Move;
use crate::model::enumerate::{EnumeratedMeasure, StateSpace};
use crate::model::params::ModelParams;

use super::sym::SymOperator;

/// Off-diagonal rates in compressed rows; the diagonal is the negative row
/// sum, so rows sum to zero by construction.
#[derive(Clone, Debug)]
pub struct GeneratorOperator {
    pub space: Option<StateSpace>,
    pub log_pi: Vec<f64>,
    pub pi: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl GeneratorOperator {
    /// From per-row lists of `(target, rate)` and log stationary weights
    /// (normalized here).
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, log_weights: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if log_weights.len() != n {
            return Err(SosError::LengthMismatch { expected: n, got: log_weights.len() });
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, row) in rows.into_iter().enumerate() {
            let mut sum = 0.0;
            for (j, r) in row {
                if j >= n {
                    return Err(SosError::Precondition(format!("row {i} points at state {j} of {n}")));
                }
                if j != i && r > 0.0 {
                    cols.push(j);
                    vals.push(r);
                    sum += r;
                }
            }
            diag.push(-sum);
            row_ptr.push(cols.len());
        }
        let log_z = crate::model::enumerate::log_sum_exp(&log_weights);
        let log_pi: Vec<f64> = log_weights.iter().map(|lw| lw - log_z).collect();
        let pi = log_pi.iter().map(|l| l.exp()).collect();
        Ok(GeneratorOperator { space: None, log_pi, pi, row_ptr, cols, vals, diag })
    }

    /// Dense rate matrix (off-diagonal entries only are read).
    pub fn from_dense(rates: &[Vec<f64>], pi: &[f64]) -> Result<Self> {
        let rows = rates.iter().map(|r| r.iter().copied().enumerate().collect()).collect();
        Self::from_rows(rows, pi.iter().map(|p| p.ln()).collect())
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, r)| r)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(G f)_i = sum_j G_ij f_j`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n())
            .into_par_iter()
            .map(|i| self.diag[i] * f[i] + self.row(i).map(|(j, r)| r * f[j]).sum::<f64>())
            .collect()
    }

    /// Largest log-space defect `|log(pi_i G_ij) - log(pi_j G_ji)|` over all
    /// transitions, with the offending pair.
    pub fn reversibility_defect(&self) -> (f64, usize, usize) {
        (0..self.n())
            .into_par_iter()
            .map(|i| {
                let mut worst = (0.0, i, i);
                for (j, r) in self.row(i) {
                    let back = self.rate(j, i);
                    let d = if back > 0.0 {
                        ((self.log_pi[i] + r.ln()) - (self.log_pi[j] + back.ln())).abs()
                    } else {
                        f64::INFINITY
                    };
                    if d > worst.0 {
                        worst = (d, i, j);
                    }
                }
                worst
            })
            .reduce(|| (0.0, 0, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a })
    }

    pub fn check_reversible(&self, tol: f64) -> Result<()> {
        let (defect, i, j) = self.reversibility_defect();
        if defect > tol {
            return Err(SosError::NotReversible { i, j, defect });
        }
        Ok(())
    }

    /// `S = D^{1/2} (-G) D^{-1/2}` with `S_ij = -sqrt(G_ij G_ji)`, together
    /// with its ground state `sqrt(pi)`.
    pub fn symmetrized(&self) -> Result<SymOperator> {
        self.check_reversible(1e-9)?;
        let vals: Vec<f64> = (0..self.n())
            .into_par_iter()
            .flat_map_iter(|i| self.row(i).map(move |(j, r)| (r * self.rate(j, i)).sqrt()).collect::<Vec<_>>())
            .collect();
        let ground: Vec<f64> = self.pi.iter().map(|p| p.sqrt()).collect();
        Ok(SymOperator::new(
            self.diag.iter().map(|d| -d).collect(),
            self.row_ptr.clone(),
            self.cols.clone(),
            vals,
            Some(ground),
        ))
    }

    /// Coordinate-format dump, one `i j rate` triple per line.
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n() {
            writeln!(out, "{i} {i} {:e}", self.diag[i])?;
            for (j, r) in self.row(i) {
                writeln!(out, "{i} {j} {r:e}")?;
            }
        }
        Ok(())
    }

    /// `(f, -G f)_pi`.
    pub fn dirichlet_form(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n() {
            for (j, r) in self.row(i) {
                let d = f[j] - f[i];
                acc += self.pi[i] * r * d * d;
            }
        }
        0.5 * acc
    }

    pub fn variance(&self, f: &[f64]) -> f64 {
        let mean: f64 = self.pi.iter().zip(f).map(|(p, x)| p * x).sum();
        self.pi.iter().zip(f).map(|(p, x)| p * (x - mean) * (x - mean)).sum()
    }
}

/// The single-site generator of `params` on its enumerated space. For the
/// auxiliary kind, moves leaving the truncation `|eta_i| <= r` are dropped;
/// for the constrained kind those moves already have rate zero.
pub fn build_generator(params: &ModelParams, r: u32) -> Result<GeneratorOperator> {
    let measure = EnumeratedMeasure::for_params(params, r)?;
    let space = measure.space.clone();
    let len = params.len;
    let rows: Vec<Vec<(usize, f64)>> = (0..space.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, idx| {
            space.heights_into(idx, buf);
            Move::all(len)
                .filter_map(|mv| {
                    let j = space.neighbor(idx, mv)?;
                    let rate = jump_rate(buf, mv, params);
                    (rate > 0.0).then_some((j, rate))
                })
                .collect()
        })
        .collect();
    let mut g = GeneratorOperator::from_rows(rows, measure.log_weights)?;
    g.space = Some(space);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{PotentialCatalog, PotentialShape};
    use crate::model::params::MeasureKind;

    #[test]
    fn one_site_is_unit_rate_path() {
        let p = ModelParams::constrained(1, 1, 2.0).unwrap();
        let g = build_generator(&p, 0).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.rate(0, 1), 1.0);
        assert_eq!(g.rate(1, 0), 1.0);
        assert_eq!(g.rate(1, 2), 1.0);
        assert_eq!(g.rate(0, 2), 0.0);
        assert_eq!(g.diag(1), -2.0);
    }

    #[test]
    fn rows_sum_to_zero_and_reversible_with_catalog() {
        let cat = PotentialCatalog::new(vec![PotentialShape::horizontal_bar(2, 0.02), PotentialShape::vertical_bar(2, -0.01)], 2.0).unwrap();
        for kind in [MeasureKind::Constrained, MeasureKind::Auxiliary] {
            let p = ModelParams::constrained(3, 1, 1.4).unwrap().with_catalog(cat.clone()).with_kind(kind).unwrap();
            let g = build_generator(&p, 2).unwrap();
            for i in 0..g.n() {
                let s: f64 = g.diag(i) + g.row(i).map(|(_, r)| r).sum::<f64>();
                assert_eq!(s, 0.0);
            }
            let (defect, _, _) = g.reversibility_defect();
            assert!(defect < 1e-12, "{defect}");
        }
    }

    #[test]
    fn non_reversible_rejected() {
        // cycle 0 -> 1 -> 2 -> 0 with uniform pi
        let rates = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
        let g = GeneratorOperator::from_dense(&rates, &[1.0 / 3.0; 3]).unwrap();
        assert!(matches!(g.symmetrized(), Err(SosError::NotReversible { .. })));
    }
}
