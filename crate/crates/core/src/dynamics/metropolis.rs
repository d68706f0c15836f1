use rand::Rng;

use crate::error::{Result, SosError};
use crate::model::config::{Configuration, Move};
use crate::model::energy::{log_weight_delta, log_weight_of};
use crate::model::params::ModelParams;

/// Single-site Metropolis chain for the measure of `params` restricted to
/// `{|phi|_inf <= bound}`.
pub struct RegionMetropolis<'a> {
    params: &'a ModelParams,
    bound: i32,
    heights: Vec<i32>,
    pub proposed: u64,
    pub accepted: u64,
}

impl<'a> RegionMetropolis<'a> {
    pub fn new(start: &Configuration, params: &'a ModelParams, bound: i32) -> Result<Self> {
        params.check_len(start)?;
        if start.sup_norm() > bound || !params.in_support(start.heights()) {
            return Err(SosError::Precondition(format!("start {start} is outside the sampled region")));
        }
        Ok(RegionMetropolis { params, bound, heights: start.0.clone(), proposed: 0, accepted: 0 })
    }

    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    pub fn state(&self) -> Configuration {
        Configuration(self.heights.clone())
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.proposed += 1;
        let mv = Move::from_slot(rng.gen_range(0..2 * self.heights.len()));
        let k = mv.site - 1;
        if (self.heights[k] + mv.direction.delta()).abs() > self.bound {
            return;
        }
        let d = log_weight_delta(&self.heights, mv, self.params);
        if d >= 0.0 || rng.gen::<f64>() < d.exp() {
            self.heights[k] += mv.direction.delta();
            self.accepted += 1;
        }
    }

    /// Proposes `phi + s` for `s = ±1`; `H` is shift invariant, so only the
    /// long-range energy and the region decide.
    pub fn shift<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.proposed += 1;
        let s = if rng.gen::<bool>() { 1 } else { -1 };
        let next: Vec<i32> = self.heights.iter().map(|h| h + s).collect();
        if next.iter().any(|h| h.abs() > self.bound) || !self.params.in_support(&next) {
            return;
        }
        let d = log_weight_of(&next, self.params) - log_weight_of(&self.heights, self.params);
        if d >= 0.0 || rng.gen::<f64>() < d.exp() {
            self.heights = next;
            self.accepted += 1;
        }
    }

    /// `L` proposals.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for _ in 0..self.heights.len() {
            self.step(rng);
        }
    }
}
