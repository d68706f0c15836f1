//! Exact conditional structure of the gradient measure on a truncated grid.
//!
//! With coordinate 1 least significant, the tail `(eta_j, ..., eta_L)` of a
//! state is `index / stride_j`, so marginals of tails and conditional
//! expectations given tails are block sums over contiguous index ranges.
//! Tables are indexed 0-based: level `j` holds functions of the tail that
//! starts at coordinate `j`, level `0` is the full state and level `L` the
//! empty tail.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, SosError};
use crate::model::enumerate::{EnumeratedMeasure, StateSpace};
use crate::model::enumerate::Coordinates;
use crate::model::params::{MeasureKind, ModelParams};

#[derive(Clone, Debug)]
pub struct GradientTables {
    pub space: StateSpace,
    pub pi: Vec<f64>,
    /// `marginals[j][t]`: probability that the tail from `j` equals `t`.
    marginals: Vec<Vec<f64>>,
}

impl GradientTables {
    pub fn new(params: &ModelParams, r: u32) -> Result<Self> {
        if params.kind != MeasureKind::Auxiliary {
            return Err(SosError::Precondition("gradient tables need the auxiliary measure".into()));
        }
        let measure = EnumeratedMeasure::for_params(params, r)?;
        Ok(Self::from_measure(&measure))
    }

    pub fn from_measure(measure: &EnumeratedMeasure) -> Self {
        assert_eq!(measure.space.coords(), Coordinates::Gradient);
        let space = measure.space.clone();
        let pi = measure.probs();
        let mut marginals = vec![pi.clone()];
        for j in 0..space.sites() {
            let n = space.radix()[j];
            let next: Vec<f64> = marginals[j].chunks(n).map(|c| c.iter().sum()).collect();
            marginals.push(next);
        }
        GradientTables { space, pi, marginals }
    }

    pub fn sites(&self) -> usize {
        self.space.sites()
    }

    pub fn marginal(&self, j: usize) -> &[f64] {
        &self.marginals[j]
    }

    /// Number of tails starting at `j`.
    pub fn tails(&self, j: usize) -> usize {
        self.marginals[j].len()
    }

    /// `F_j(t) = nu(eta_j | eta_{alpha_{j+1}})` for the tail `t` from `j`.
    pub fn conditional(&self, j: usize, t: usize) -> f64 {
        let n = self.space.radix()[j];
        self.marginals[j][t] / self.marginals[j + 1][t / n]
    }

    /// Value of coordinate `j` in the tail `t` from `j`.
    pub fn head(&self, j: usize, t: usize) -> i32 {
        (t % self.space.radix()[j]) as i32 + self.space.lows()[j]
    }

    /// Offset of `+delta_i` in the index of a tail from `j <= i`.
    pub fn shift(&self, j: usize, i: usize) -> usize {
        self.space.strides()[i] / self.space.strides()[j]
    }

    /// Can coordinate `i` of the tail `t` (from `j`) be raised by one?
    pub fn can_raise(&self, j: usize, i: usize, t: usize) -> bool {
        let digit = (t / self.shift(j, i)) % self.space.radix()[i];
        digit + 1 < self.space.radix()[i]
    }

    /// `E[f | eta_{alpha_j}]` for every level `j = 0..=L`.
    pub fn conditional_expectations(&self, f: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(f.len(), self.space.len());
        let mut out = vec![f.to_vec()];
        for j in 0..self.sites() {
            let n = self.space.radix()[j];
            let m = &self.marginals[j];
            let prev = &out[j];
            let next: Vec<f64> = (0..self.tails(j + 1))
                .map(|t| {
                    let r = t * n..(t + 1) * n;
                    let mass = self.marginals[j + 1][t];
                    if mass == 0.0 {
                        0.0
                    } else {
                        m[r.clone()].iter().zip(&prev[r]).map(|(p, v)| p * v).sum::<f64>() / mass
                    }
                })
                .collect();
            out.push(next);
        }
        out
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        self.pi.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    pub fn variance(&self, f: &[f64]) -> f64 {
        let m = self.mean(f);
        self.pi.iter().zip(f).map(|(p, v)| p * (v - m) * (v - m)).sum()
    }

    /// `E[(f(eta + delta_i) - f(eta))^2]` over states where the shift stays
    /// in the grid.
    pub fn raise_energy(&self, f: &[f64], i: usize) -> f64 {
        let s = self.space.strides()[i];
        (0..self.space.len())
            .filter(|&idx| self.can_raise(0, i, idx))
            .map(|idx| self.pi[idx] * (f[idx + s] - f[idx]).powi(2))
            .sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceDecomposition {
    pub variance: f64,
    /// `E[Var(f_j | eta_{alpha_{j+1}})]` for `j = 1..=L`.
    pub summands: Vec<f64>,
    pub residual: f64,
}

/// The martingale identity `Var(f) = sum_j E[Var(f_j | eta_{alpha_{j+1}})]`.
pub fn variance_decomposition(tables: &GradientTables, f: &[f64]) -> VarianceDecomposition {
    let fe = tables.conditional_expectations(f);
    let summands: Vec<f64> = (0..tables.sites())
        .map(|j| {
            let n = tables.space.radix()[j];
            tables.marginals[j]
                .iter()
                .enumerate()
                .map(|(t, m)| m * (fe[j][t] - fe[j + 1][t / n]).powi(2))
                .sum()
        })
        .collect();
    let variance = tables.variance(f);
    let residual = (variance - summands.iter().sum::<f64>()).abs();
    VarianceDecomposition { variance, summands, residual }
}

/// Both sides of
/// `delta_i^+ f_i = E(delta_i^+ f | eta_{alpha_i}) + sum_{j<i} E(f_j^+ V_{i,j} | eta_{alpha_i})`
/// at every tail from `i` whose `i`-th coordinate can be raised; `i` is
/// 1-based, `2 <= i <= L`. Returns the largest absolute difference.
pub fn derivative_identity(tables: &GradientTables, f: &[f64], i: usize) -> Result<f64> {
    let len = tables.sites();
    if i < 2 || i > len {
        return Err(SosError::InvalidParam { field: "i", reason: format!("must lie in 2..={len}, got {i}") });
    }
    let ii = i - 1;
    let fe = tables.conditional_expectations(f);
    let stride_i = tables.space.strides()[ii];
    let mut worst = 0.0f64;
    for t in 0..tables.tails(ii) {
        if !tables.can_raise(ii, ii, t) {
            continue;
        }
        let lhs = fe[ii][t + 1] - fe[ii][t];
        let mass = tables.marginals[ii][t];
        let block = t * stride_i..(t + 1) * stride_i;
        let mut rhs: f64 = block.map(|idx| tables.pi[idx] * (f[idx + stride_i] - f[idx])).sum::<f64>() / mass;
        for j in 0..ii {
            let width = tables.shift(j, ii);
            let s = width;
            let mut acc = 0.0;
            for tj in t * width..(t + 1) * width {
                let v = tables.conditional(j, tj + s) / tables.conditional(j, tj) - 1.0;
                acc += tables.marginals[j][tj] * fe[j][tj + s] * v;
            }
            rhs += acc / mass;
        }
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioCheck {
    /// 1-based site of the conditioned coordinate.
    pub j: usize,
    /// 1-based site of the shifted tail coordinate, for the second family.
    pub i: Option<usize>,
    pub eta_j: i32,
    pub log_ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioBoundsReport {
    pub checked: usize,
    pub violations: Vec<RatioCheck>,
    /// Smallest distance from a log ratio to the nearer edge of its band.
    pub min_slack: f64,
    /// Largest `|log ratio - centre|` in each family.
    pub max_drift_deviation: f64,
    pub max_tail_deviation: f64,
}

impl RatioBoundsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Conditional-ratio bounds for `2 <= j <= L` (the base coordinate is
/// uniform and excluded):
/// `nu(eta_j + 1 | tail) / nu(eta_j | tail)` within
/// `exp[-beta s(eta_j) ± 8 e^{-m}]`, `s(x) = |x + 1| - |x|`, and
/// `nu(eta_j | tail + delta_i) / nu(eta_j | tail)` within `exp[± 16 e^{-m(i-j)}]`.
pub fn ratio_bounds(tables: &GradientTables, beta: f64, decay_mass: f64) -> RatioBoundsReport {
    let len = tables.sites();
    let mut rep = RatioBoundsReport {
        checked: 0,
        violations: Vec::new(),
        min_slack: f64::INFINITY,
        max_drift_deviation: 0.0,
        max_tail_deviation: 0.0,
    };
    let record = |rep: &mut RatioBoundsReport, c: RatioCheck, centre: f64, drift: bool| {
        rep.checked += 1;
        let dev = (c.log_ratio - centre).abs();
        if drift {
            rep.max_drift_deviation = rep.max_drift_deviation.max(dev);
        } else {
            rep.max_tail_deviation = rep.max_tail_deviation.max(dev);
        }
        let slack = (c.log_ratio - c.lower).min(c.upper - c.log_ratio);
        rep.min_slack = rep.min_slack.min(slack);
        if slack < 0.0 {
            rep.violations.push(c);
        }
    };
    let eps1 = 8.0 * (-decay_mass).exp();
    for j in 1..len {
        for t in 0..tables.tails(j) {
            let x = tables.head(j, t);
            let lr = |a: usize, b: usize| tables.conditional(j, a).ln() - tables.conditional(j, b).ln();
            if tables.can_raise(j, j, t) {
                let centre = -beta * ((x + 1).abs() - x.abs()) as f64;
                let c = RatioCheck { j: j + 1, i: None, eta_j: x, log_ratio: lr(t + 1, t), lower: centre - eps1, upper: centre + eps1 };
                record(&mut rep, c, centre, true);
            }
            for i in j + 1..len {
                if !tables.can_raise(j, i, t) {
                    continue;
                }
                let eps2 = 16.0 * (-decay_mass * (i - j) as f64).exp();
                let s = tables.shift(j, i);
                let c = RatioCheck { j: j + 1, i: Some(i + 1), eta_j: x, log_ratio: lr(t + s, t), lower: -eps2, upper: eps2 };
                record(&mut rep, c, 0.0, false);
            }
        }
    }
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct OneSiteGap {
    pub gap: f64,
    /// `1 / gap`, the constant in `Var(f | tail) <= K E[(delta_j^+ f)^2 | tail]`.
    pub constant: f64,
    /// Largest `Var / (K E[(delta^+ f)^2])` over the probe functions; at most 1.
    pub worst_probe: f64,
}

/// Gap of the birth-death chain on coordinate `j` (1-based) under
/// `nu(. | tail)` with Dirichlet form `sum_x p(x) (f(x+1) - f(x))^2`; `tail`
/// indexes the tail from `j + 1`.
pub fn one_site_gap(tables: &GradientTables, j: usize, tail: usize) -> Result<OneSiteGap> {
    let len = tables.sites();
    if j < 1 || j > len {
        return Err(SosError::InvalidParam { field: "j", reason: format!("must lie in 1..={len}, got {j}") });
    }
    let jj = j - 1;
    if tail >= tables.tails(jj + 1) {
        return Err(SosError::InvalidParam { field: "tail", reason: format!("index {tail} out of range") });
    }
    let n = tables.space.radix()[jj];
    let p: Vec<f64> = (0..n).map(|x| tables.conditional(jj, tail * n + x)).collect();
    // P^{-1/2} A P^{-1/2} for the path Laplacian A with conductance p_x on x ~ x+1
    let mut s = DMatrix::<f64>::zeros(n, n);
    for x in 0..n - 1 {
        let w = p[x];
        s[(x, x)] += w / p[x];
        s[(x + 1, x + 1)] += w / p[x + 1];
        let off = w / (p[x] * p[x + 1]).sqrt();
        s[(x, x + 1)] -= off;
        s[(x + 1, x)] -= off;
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    let gap = if n > 1 { ev[1] } else { f64::INFINITY };
    let constant = 1.0 / gap;
    let mut worst: f64 = 0.0;
    let probes: Vec<Vec<f64>> = vec![
        (0..n).map(|x| x as f64).collect(),
        (0..n).map(|x| (x as f64 - (n / 2) as f64).abs()).collect(),
        (0..n).map(|x| ((x * 7919) % 13) as f64).collect(),
        (0..n).map(|x| if x < n / 2 { 0.0 } else { 1.0 }).collect(),
    ];
    for f in probes {
        let mean: f64 = p.iter().zip(&f).map(|(a, b)| a * b).sum();
        let var: f64 = p.iter().zip(&f).map(|(a, b)| a * (b - mean).powi(2)).sum();
        let form: f64 = (0..n - 1).map(|x| p[x] * (f[x + 1] - f[x]).powi(2)).sum();
        if form > 0.0 {
            worst = worst.max(var / (constant * form));
        }
    }
    Ok(OneSiteGap { gap, constant, worst_probe: worst })
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub functions: usize,
    /// Largest `sum_i E[(delta_i^+ f_i)^2] / sum_i E[(delta_i^+ f)^2]`.
    pub worst_ratio: f64,
    pub passed: bool,
}

/// `sum_i E[(delta_i^+ f_i)^2]` and `sum_i E[(delta_i^+ f)^2]`, both over
/// the states where the shift stays inside the grid.
pub fn domination_sides(tables: &GradientTables, f: &[f64]) -> (f64, f64) {
    let fe = tables.conditional_expectations(f);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..tables.sites() {
        rhs += tables.raise_energy(f, i);
        for t in 0..tables.tails(i) {
            if tables.can_raise(i, i, t) {
                lhs += tables.marginals[i][t] * (fe[i][t + 1] - fe[i][t]).powi(2);
            }
        }
    }
    (lhs, rhs)
}

pub fn form_domination(tables: &GradientTables, functions: &[Vec<f64>]) -> DominationReport {
    let mut worst: f64 = 0.0;
    for f in functions {
        let (lhs, rhs) = domination_sides(tables, f);
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    DominationReport { functions: functions.len(), worst_ratio: worst, passed: worst <= 4.0 }
}
