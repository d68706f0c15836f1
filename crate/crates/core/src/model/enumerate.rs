//! Finite truncations of the configuration space and exact normalization.
//!
//! States are indexed in mixed radix with coordinate 1 least significant,
//! so the tail `(x_j, ..., x_L)` of a state is `index / stride_j` and every
//! fixed tail owns one contiguous block of `stride_j` indices.

use rayon::prelude::*;

use super::config::{Configuration, GradientConfiguration, Move};
use super::energy::log_weight_of;
use super::params::{MeasureKind, ModelParams};
use crate::error::{Result, SosError};

pub const DEFAULT_SIZE_CAP: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coordinates {
    /// Coordinates are the heights themselves.
    Heights,
    /// Coordinates are `(eta_1, ..., eta_L)`.
    Gradient,
}

#[derive(Clone, Debug)]
pub struct StateSpace {
    coords: Coordinates,
    lows: Vec<i32>,
    radix: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
    /// Height-variable truncation, when the space is truncated.
    truncation: Option<u32>,
}

impl StateSpace {
    fn build(coords: Coordinates, bounds: Vec<(i32, i32)>, truncation: Option<u32>, cap: usize) -> Result<Self> {
        let estimate: u128 = bounds.iter().map(|(lo, hi)| (hi - lo + 1) as u128).product();
        if estimate > cap as u128 {
            return Err(SosError::TooLarge { estimate, cap });
        }
        let lows = bounds.iter().map(|b| b.0).collect();
        let radix: Vec<usize> = bounds.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect();
        let mut strides = Vec::with_capacity(radix.len());
        let mut s = 1usize;
        for r in &radix {
            strides.push(s);
            s *= r;
        }
        Ok(StateSpace { coords, lows, radix, strides, size: s, truncation })
    }

    /// `{-a, ..., a}^L` in height coordinates.
    pub fn height_box(len: usize, a: u32, cap: usize) -> Result<Self> {
        let a = a as i32;
        Self::build(Coordinates::Heights, vec![(-a, a); len], None, cap)
    }

    /// `|eta_1| <= m`, `|eta_i| <= r` for `i >= 2`.
    pub fn gradient_box(len: usize, m: u32, r: u32, cap: usize) -> Result<Self> {
        let mut bounds = vec![(-(r as i32), r as i32); len];
        bounds[0] = (-(m as i32), m as i32);
        Self::build(Coordinates::Gradient, bounds, Some(r), cap)
    }

    /// The natural enumerable space of the measure: the box for the
    /// constrained kind, the truncated gradient space for the auxiliary one.
    pub fn for_params(params: &ModelParams, r: u32) -> Result<Self> {
        Self::for_params_capped(params, r, DEFAULT_SIZE_CAP)
    }

    pub fn for_params_capped(params: &ModelParams, r: u32, cap: usize) -> Result<Self> {
        let m = params.bound.finite().ok_or_else(|| {
            SosError::Precondition("enumeration needs a finite height bound M".into())
        })? as u32;
        match params.kind {
            MeasureKind::Constrained => Self::height_box(params.len, m, cap),
            MeasureKind::Auxiliary => Self::gradient_box(params.len, m, r, cap),
        }
    }

    pub fn coords(&self) -> Coordinates {
        self.coords
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Number of sites `L`.
    pub fn sites(&self) -> usize {
        self.radix.len()
    }

    pub fn radix(&self) -> &[usize] {
        &self.radix
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn lows(&self) -> &[i32] {
        &self.lows
    }

    pub fn truncation(&self) -> Option<u32> {
        self.truncation
    }

    /// Coordinate `j` (0-based) of state `idx`.
    #[inline]
    pub fn coord(&self, idx: usize, j: usize) -> i32 {
        ((idx / self.strides[j]) % self.radix[j]) as i32 + self.lows[j]
    }

    pub fn decode_into(&self, idx: usize, out: &mut Vec<i32>) {
        out.clear();
        let mut rest = idx;
        for (r, lo) in self.radix.iter().zip(&self.lows) {
            out.push((rest % r) as i32 + lo);
            rest /= r;
        }
    }

    pub fn decode(&self, idx: usize) -> Vec<i32> {
        let mut v = Vec::with_capacity(self.sites());
        self.decode_into(idx, &mut v);
        v
    }

    pub fn encode(&self, coords: &[i32]) -> Option<usize> {
        if coords.len() != self.sites() {
            return None;
        }
        let mut idx = 0;
        for j in 0..coords.len() {
            let off = coords[j] - self.lows[j];
            if off < 0 || off as usize >= self.radix[j] {
                return None;
            }
            idx += off as usize * self.strides[j];
        }
        Some(idx)
    }

    /// Height profile of state `idx`.
    pub fn heights_into(&self, idx: usize, out: &mut Vec<i32>) {
        self.decode_into(idx, out);
        if self.coords == Coordinates::Gradient {
            for k in 1..out.len() {
                out[k] += out[k - 1];
            }
        }
    }

    pub fn configuration(&self, idx: usize) -> Configuration {
        let mut h = Vec::with_capacity(self.sites());
        self.heights_into(idx, &mut h);
        Configuration(h)
    }

    pub fn gradient(&self, idx: usize) -> GradientConfiguration {
        let mut h = Vec::with_capacity(self.sites());
        self.heights_into(idx, &mut h);
        Configuration(h).to_gradient()
    }

    pub fn index_of(&self, cfg: &Configuration) -> Option<usize> {
        match self.coords {
            Coordinates::Heights => self.encode(cfg.heights()),
            Coordinates::Gradient => self.encode(&cfg.to_gradient().0),
        }
    }

    /// Index of `phi ± delta_k` when it stays inside the truncation.
    pub fn neighbor(&self, idx: usize, mv: Move) -> Option<usize> {
        let k = mv.site - 1;
        let d = mv.direction.delta();
        let shift = |idx: usize, j: usize, d: i32| -> Option<usize> {
            let c = self.coord(idx, j) + d;
            if c < self.lows[j] || (c - self.lows[j]) as usize >= self.radix[j] {
                return None;
            }
            Some(if d > 0 { idx + self.strides[j] } else { idx - self.strides[j] })
        };
        match self.coords {
            Coordinates::Heights => shift(idx, k, d),
            Coordinates::Gradient => {
                let first = shift(idx, k, d)?;
                if k + 1 < self.sites() {
                    shift(first, k + 1, -d)
                } else {
                    Some(first)
                }
            }
        }
    }
}

/// Log-weights of every state of a space, with their normalization.
#[derive(Clone, Debug)]
pub struct EnumeratedMeasure {
    pub space: StateSpace,
    pub log_weights: Vec<f64>,
    pub log_z: f64,
}

impl EnumeratedMeasure {
    pub fn new(space: StateSpace, params: &ModelParams) -> Self {
        let log_weights: Vec<f64> = (0..space.len())
            .into_par_iter()
            .map_init(Vec::new, |buf, idx| {
                space.heights_into(idx, buf);
                log_weight_of(buf, params)
            })
            .collect();
        let log_z = log_sum_exp(&log_weights);
        EnumeratedMeasure { space, log_weights, log_z }
    }

    pub fn for_params(params: &ModelParams, r: u32) -> Result<Self> {
        Ok(Self::new(StateSpace::for_params(params, r)?, params))
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn prob(&self, idx: usize) -> f64 {
        (self.log_weights[idx] - self.log_z).exp()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| (lw - self.log_z).exp()).collect()
    }

    /// `exp(log_weight) / Z`; exactly 0 for zero-mass states.
    pub fn probability(&self, cfg: &Configuration) -> Result<f64> {
        match self.space.index_of(cfg) {
            Some(idx) => Ok(self.prob(idx)),
            None => Err(SosError::Precondition(format!("{cfg} lies outside the enumerated space"))),
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PartitionReport {
    pub z: f64,
    pub log_z: f64,
    pub space_size: usize,
    pub truncation: Option<u32>,
    /// `(Z_{R+1} - Z_R) / Z_{R+1}` for the auxiliary kind.
    pub tail_increment: Option<f64>,
    pub converged: Option<bool>,
}

pub const CONVERGENCE_TOL: f64 = 1e-12;

pub fn partition_function(params: &ModelParams, r: u32) -> Result<PartitionReport> {
    let measure = EnumeratedMeasure::for_params(params, r)?;
    let mut report = PartitionReport {
        z: measure.z(),
        log_z: measure.log_z,
        space_size: measure.space.len(),
        truncation: measure.space.truncation(),
        tail_increment: None,
        converged: None,
    };
    if params.kind == MeasureKind::Auxiliary {
        let next = EnumeratedMeasure::for_params(params, r + 1)?;
        let inc = 1.0 - (measure.log_z - next.log_z).exp();
        report.tail_increment = Some(inc);
        report.converged = Some(inc.abs() < CONVERGENCE_TOL);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{PotentialCatalog, PotentialShape};
    use std::collections::HashMap;

    #[test]
    fn constrained_small_partition_functions() {
        let p = ModelParams::constrained(1, 1, 2.0).unwrap();
        assert!((partition_function(&p, 0).unwrap().z - 3.0).abs() < 1e-14);
        let beta: f64 = 0.7;
        let p = ModelParams::constrained(2, 1, beta).unwrap();
        let expect = 3.0 + 4.0 * (-beta).exp() + 2.0 * (-2.0 * beta).exp();
        assert!((partition_function(&p, 0).unwrap().z - expect).abs() < 1e-13);
    }

    #[test]
    fn auxiliary_partition_converges_to_geometric_series() {
        let beta: f64 = 2.0;
        let p = ModelParams::auxiliary(2, 1, beta).unwrap();
        let q = (-beta).exp();
        let exact = 3.0 * (1.0 + 2.0 * q / (1.0 - q));
        let mut prev_err = f64::INFINITY;
        for r in [2, 4, 8, 16] {
            let rep = partition_function(&p, r).unwrap();
            let err = (rep.z - exact).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-12);
        assert_eq!(partition_function(&p, 16).unwrap().converged, Some(true));
        assert_eq!(partition_function(&p, 2).unwrap().converged, Some(false));
    }

    #[test]
    fn probabilities_normalize() {
        let p = ModelParams::constrained(1, 1, 1.0).unwrap();
        let m = EnumeratedMeasure::for_params(&p, 0).unwrap();
        for h in -1..=1 {
            assert!((m.probability(&Configuration(vec![h])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = ModelParams::constrained(2, 1, 1.0).unwrap();
        let m = EnumeratedMeasure::for_params(&p, 0).unwrap();
        let z = 3.0 + 4.0 * (-1.0f64).exp() + 2.0 * (-2.0f64).exp();
        assert!((m.probability(&Configuration(vec![0, 0])).unwrap() - 1.0 / z).abs() < 1e-15);
        let cat = PotentialCatalog::new(vec![PotentialShape::horizontal_bar(2, 0.01)], 3.0).unwrap();
        let a = ModelParams::auxiliary(3, 2, 1.5).unwrap().with_catalog(cat);
        let m = EnumeratedMeasure::for_params(&a, 3).unwrap();
        assert!((m.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_cap_refuses_with_estimate() {
        let p = ModelParams::auxiliary(12, 3, 1.0).unwrap();
        match StateSpace::for_params(&p, 9) {
            Err(SosError::TooLarge { estimate, .. }) => assert_eq!(estimate, 7 * 19u128.pow(11)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn index_bijection_and_neighbors() {
        for space in [StateSpace::height_box(3, 2, 1000).unwrap(), StateSpace::gradient_box(3, 1, 2, 1000).unwrap()] {
            for idx in 0..space.len() {
                let cfg = space.configuration(idx);
                assert_eq!(space.index_of(&cfg), Some(idx));
                for mv in Move::all(3) {
                    let target = cfg.apply(mv);
                    assert_eq!(space.neighbor(idx, mv), space.index_of(&target));
                }
            }
        }
    }

    #[test]
    fn gradient_pushforward_matches_direct_weights() {
        // Law of eta under the enumerated profile measure, built by hashing
        // profiles, against the normalized gradient weights.
        use crate::model::energy::gradient_log_weight;
        let cat = PotentialCatalog::new(vec![PotentialShape::vertical_bar(2, 0.02), PotentialShape::single(0.01)], 3.0).unwrap();
        let p = ModelParams::auxiliary(3, 2, 1.2).unwrap().with_catalog(cat);
        let m = EnumeratedMeasure::for_params(&p, 3).unwrap();
        let mut law: HashMap<Vec<i32>, f64> = HashMap::new();
        for idx in 0..m.space.len() {
            *law.entry(m.space.configuration(idx).to_gradient().0).or_default() += m.prob(idx);
        }
        let mut direct = Vec::new();
        for idx in 0..m.space.len() {
            let g = m.space.gradient(idx);
            direct.push((g.0.clone(), gradient_log_weight(&g, &p).unwrap()));
        }
        let lz = log_sum_exp(&direct.iter().map(|d| d.1).collect::<Vec<_>>());
        let tv: f64 = direct.iter().map(|(g, lw)| ((lw - lz).exp() - law[g]).abs()).sum::<f64>() / 2.0;
        assert!(tv < 1e-12);
    }
}
