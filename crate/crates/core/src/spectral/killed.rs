//! The generator killed on leaving a region: survival probabilities, mean
//! exit times and the bottom of its spectrum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::eigen::DENSE_LIMIT;
use super::expm::expm;
use super::generator::GeneratorOperator;
use super::sym::SymOperator;
use crate::dynamics::rates::jump_rate;
use crate::error::{Result, SosError};
use crate::model::config::{Configuration, Move};
use crate::model::energy::log_weight_of;
use crate::model::enumerate::{log_sum_exp, StateSpace, DEFAULT_SIZE_CAP};
use crate::model::params::ModelParams;

/// Largest dimension for which survival uses the dense exponential.
pub const DENSE_EXPM_LIMIT: usize = 400;

/// Restriction of a generator to a region `A`, with the full diagonal kept
/// so that jumps out of `A` kill the process. Stored symmetrized:
/// `K = D^{1/2} (-G_A) D^{-1/2}` with `D = diag(pi_A)`.
#[derive(Clone, Debug)]
pub struct KilledOperator {
    pub states: Vec<Configuration>,
    /// Stationary law of the full chain conditioned on `A`.
    pub pi: Vec<f64>,
    /// Rate of jumping out of `A` from each state.
    pub escape: Vec<f64>,
    op: SymOperator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalMethod {
    Expm,
    Krylov,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurvivalReport {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub method: SurvivalMethod,
    /// A posteriori error estimate (Krylov) or 0 for the dense path.
    pub error_estimate: f64,
}

impl KilledOperator {
    fn assemble(states: Vec<Configuration>, log_w: Vec<f64>, rows: Vec<Vec<(usize, f64)>>, diag: Vec<f64>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(SosError::EmptyRegion("A"));
        }
        let log_z = log_sum_exp(&log_w);
        let pi: Vec<f64> = log_w.iter().map(|l| (l - log_z).exp()).collect();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut escape = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            let mut inside = 0.0;
            for &(j, r) in row {
                let back = rows[j].iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
                cols.push(j);
                vals.push((r * back).sqrt());
                inside += r;
            }
            escape.push((diag[i] - inside).max(0.0));
            row_ptr.push(cols.len());
        }
        let ground = pi.iter().map(|p| p.sqrt()).collect();
        Ok(KilledOperator { states, pi, escape, op: SymOperator::new(diag, row_ptr, cols, vals, Some(ground)) })
    }

    /// Exact killed operator of `params` on `{|phi|_inf <= a}`: off-diagonal
    /// rates inside the box, diagonal equal to the total rate of all `2L`
    /// moves. Needs no truncation for either measure kind.
    pub fn on_region(params: &ModelParams, a: i32) -> Result<Self> {
        if a < 0 {
            return Err(SosError::EmptyRegion("A"));
        }
        let space = StateSpace::height_box(params.len, a as u32, DEFAULT_SIZE_CAP)?;
        let built: Vec<(f64, Vec<(usize, f64)>, f64)> = (0..space.len())
            .into_par_iter()
            .map(|idx| {
                let cfg = space.configuration(idx);
                let lw = log_weight_of(cfg.heights(), params);
                let mut row = Vec::new();
                let mut total = 0.0;
                for mv in Move::all(params.len) {
                    let r = jump_rate(cfg.heights(), mv, params);
                    total += r;
                    if r > 0.0 {
                        if let Some(j) = space.neighbor(idx, mv) {
                            row.push((j, r));
                        }
                    }
                }
                (lw, row, total)
            })
            .collect();
        let mut states = Vec::with_capacity(space.len());
        let mut log_w = Vec::with_capacity(space.len());
        let mut rows = Vec::with_capacity(space.len());
        let mut diag = Vec::with_capacity(space.len());
        for (idx, (lw, row, total)) in built.into_iter().enumerate() {
            if lw == f64::NEG_INFINITY {
                return Err(SosError::Precondition(format!("region contains zero-mass state {}", space.configuration(idx))));
            }
            states.push(space.configuration(idx));
            log_w.push(lw);
            rows.push(row);
            diag.push(total);
        }
        Self::assemble(states, log_w, rows, diag)
    }

    /// Region `A` of `params` (`|phi|_inf <= (1 - eps) L / 2`).
    pub fn on_region_a(params: &ModelParams) -> Result<Self> {
        Self::on_region(params, params.region_a_height())
    }

    /// Restriction of an assembled generator to the states satisfying
    /// `inside`, keeping its diagonal.
    pub fn restrict(gen: &GeneratorOperator, inside: impl Fn(&Configuration) -> bool) -> Result<Self> {
        let space = gen.space.as_ref().ok_or_else(|| SosError::Precondition("generator has no state space".into()))?;
        let mut local = vec![usize::MAX; gen.n()];
        let mut states = Vec::new();
        for (idx, slot) in local.iter_mut().enumerate() {
            let cfg = space.configuration(idx);
            if inside(&cfg) {
                *slot = states.len();
                states.push(cfg);
            }
        }
        let mut log_w = Vec::with_capacity(states.len());
        let mut rows = Vec::with_capacity(states.len());
        let mut diag = Vec::with_capacity(states.len());
        for idx in 0..gen.n() {
            if local[idx] == usize::MAX {
                continue;
            }
            log_w.push(gen.log_pi[idx]);
            rows.push(gen.row(idx).filter(|&(j, _)| local[j] != usize::MAX).map(|(j, r)| (local[j], r)).collect());
            diag.push(-gen.diag(idx));
        }
        Self::assemble(states, log_w, rows, diag)
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, cfg: &Configuration) -> Option<usize> {
        self.states.binary_search_by(|s| colex(s, cfg)).ok().or_else(|| self.states.iter().position(|s| s == cfg))
    }

    pub fn symmetric(&self) -> &SymOperator {
        &self.op
    }

    /// Smallest eigenvalue of `-G_A` (Dirichlet eigenvalue): the decay
    /// rate of the survival probability.
    pub fn bottom_eigenvalue(&self) -> Result<f64> {
        if self.n() < DENSE_LIMIT {
            let eig = SymmetricEigen::new(self.op.to_dense());
            return Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min));
        }
        Ok(self.op.lanczos_lowest(false, 1e-10, 20_000)?.value)
    }

    /// `inf { (f, -G_A f)_pi / Var_pi(f) : f on A }`, i.e. the bottom of
    /// `-G_A` compressed to functions orthogonal to constants.
    pub fn variational_gap(&self) -> Result<f64> {
        let g = self.op.ground().expect("killed operator keeps sqrt(pi)");
        if self.n() == 1 {
            return Ok(f64::INFINITY);
        }
        if self.n() < DENSE_LIMIT {
            let mut m = self.op.to_dense();
            let gv = DVector::from_column_slice(g);
            let p = DMatrix::identity(self.n(), self.n()) - &gv * gv.transpose();
            m = &p * m * &p;
            let lift = 2.0 * self.op.spectral_bound() + 1.0;
            m += &gv * gv.transpose() * lift;
            let eig = SymmetricEigen::new(m);
            return Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min));
        }
        Ok(self.op.lanczos_lowest(true, 1e-10, 20_000)?.value)
    }

    fn check_start(&self, start: &[f64]) -> Result<()> {
        if start.len() != self.n() {
            return Err(SosError::LengthMismatch { expected: self.n(), got: start.len() });
        }
        Ok(())
    }

    /// `P_nu(tau > t)` for a start distribution `nu` on the states of `A`.
    pub fn survival_curve(&self, start: &[f64], times: &[f64]) -> Result<SurvivalReport> {
        self.check_start(start)?;
        let sq: Vec<f64> = self.pi.iter().map(|p| p.sqrt()).collect();
        // P(t) = < nu / sqrt(pi), exp(-t K) sqrt(pi) >
        let left: Vec<f64> = start.iter().zip(&sq).map(|(v, s)| v / s).collect();
        if self.n() <= DENSE_EXPM_LIMIT {
            let k = self.op.to_dense();
            let survival = times
                .iter()
                .map(|&t| {
                    let e = expm(&(-&k * t));
                    let w = e * DVector::from_column_slice(&sq);
                    left.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            return Ok(SurvivalReport { times: times.to_vec(), survival, method: SurvivalMethod::Expm, error_estimate: 0.0 });
        }
        let mut err = 0.0f64;
        let mut survival = Vec::with_capacity(times.len());
        for &t in times {
            let (w, e) = self.op.expm_action(&sq, t, 1e-10);
            err = err.max(e);
            survival.push(left.iter().zip(&w).map(|(a, b)| a * b).sum());
        }
        Ok(SurvivalReport { times: times.to_vec(), survival, method: SurvivalMethod::Krylov, error_estimate: err })
    }

    /// Point mass at state `i`.
    pub fn point_mass(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n()];
        v[i] = 1.0;
        v
    }

    /// Spectral decomposition of the survival function for repeated
    /// evaluation: `P(t) = sum_k c_k exp(-lambda_k t)`.
    pub fn survival_function(&self, start: &[f64]) -> Result<SurvivalFunction> {
        self.check_start(start)?;
        if self.n() >= DENSE_LIMIT {
            return Err(SosError::Precondition("spectral survival function needs a dense-sized region".into()));
        }
        let eig = SymmetricEigen::new(self.op.to_dense());
        let sq = DVector::from_iterator(self.n(), self.pi.iter().map(|p| p.sqrt()));
        let left = DVector::from_iterator(self.n(), start.iter().zip(sq.iter()).map(|(v, s)| v / s));
        let a = eig.eigenvectors.transpose() * sq;
        let b = eig.eigenvectors.transpose() * left;
        let terms = (0..self.n()).map(|k| (eig.eigenvalues[k], a[k] * b[k])).collect();
        Ok(SurvivalFunction { terms })
    }

    /// `||nu / pi||_{L^2(pi)}`: the constant in `P_nu(tau > t) <= C exp(-lambda t)`.
    pub fn norm_factor(&self, start: &[f64]) -> f64 {
        start.iter().zip(&self.pi).map(|(v, p)| v * v / p).sum::<f64>().sqrt()
    }

    /// `E_phi[tau]` for every state, from `(-G_A) u = 1`.
    pub fn mean_exit_times(&self) -> Result<Vec<f64>> {
        let sq: Vec<f64> = self.pi.iter().map(|p| p.sqrt()).collect();
        let w = if self.n() < DENSE_LIMIT {
            let lu = self.op.to_dense().lu();
            let sol = lu
                .solve(&DVector::from_column_slice(&sq))
                .ok_or_else(|| SosError::Precondition("killed operator is singular: A has no exit".into()))?;
            sol.iter().copied().collect::<Vec<_>>()
        } else {
            self.op.solve_cg(&sq, 1e-12, 100_000)?
        };
        Ok(w.iter().zip(&sq).map(|(w, s)| w / s).collect())
    }
}

fn colex(a: &Configuration, b: &Configuration) -> std::cmp::Ordering {
    a.0.iter().rev().cmp(b.0.iter().rev())
}

/// Sum of exponentials representing a survival curve.
#[derive(Clone, Debug)]
pub struct SurvivalFunction {
    terms: Vec<(f64, f64)>,
}

impl SurvivalFunction {
    pub fn at(&self, t: f64) -> f64 {
        self.terms.iter().map(|(l, c)| c * (-l * t).exp()).sum::<f64>().clamp(0.0, 1.0)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.at(t)
    }

    /// `E[tau] = sum_k c_k / lambda_k`.
    pub fn mean(&self) -> f64 {
        self.terms.iter().map(|(l, c)| c / l).sum()
    }

    /// Smallest `t` with `P(tau > t) <= 1/2`, by bisection.
    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let mut hi = 1.0;
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
