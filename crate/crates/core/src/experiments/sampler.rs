//! Draws from the measure conditioned on `B = {|phi|_inf <= alpha L}`.

use rand::Rng;
use serde::Serialize;

use crate::dynamics::metropolis::RegionMetropolis;
use crate::dynamics::rng::{Purpose, RngSpec};
use crate::error::{Result, SosError};
use crate::model::config::Configuration;
use crate::model::energy::log_weight_of;
use crate::model::enumerate::{log_sum_exp, StateSpace, DEFAULT_SIZE_CAP};
use crate::model::params::ModelParams;

/// Largest `L` sampled by enumerating `B`.
pub const EXACT_MAX_LEN: usize = 6;

const GR_CHAINS: usize = 4;
const GR_TARGET: f64 = 1.05;
const MAX_BURN_IN: usize = 1 << 14;
const THIN_DIVISOR: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct SamplerDiagnostics {
    pub exact: bool,
    /// Sweeps each chain runs before its first draw.
    pub burn_in_sweeps: usize,
    /// Potential scale reduction of the height sum and the energy.
    pub r_hat: Option<f64>,
}

#[derive(Clone, Debug)]
enum Backend {
    Exact { states: Vec<Vec<i32>>, cdf: Vec<f64> },
    Chain { burn_in: usize, thin: usize },
}

#[derive(Clone, Debug)]
pub struct ConditionedSampler {
    params: ModelParams,
    bound: i32,
    backend: Backend,
    pub diagnostics: SamplerDiagnostics,
}

impl ConditionedSampler {
    /// Conditioned on `B` of `params`.
    pub fn region_b(params: &ModelParams, seed: u64) -> Result<Self> {
        Self::new(params, params.region_b_height(), seed)
    }

    pub fn new(params: &ModelParams, bound: i32, seed: u64) -> Result<Self> {
        if bound < 0 {
            return Err(SosError::EmptyRegion("B"));
        }
        if params.len <= EXACT_MAX_LEN {
            let space = StateSpace::height_box(params.len, bound as u32, DEFAULT_SIZE_CAP)?;
            let mut states = Vec::with_capacity(space.len());
            let mut lw = Vec::with_capacity(space.len());
            let mut buf = Vec::new();
            for idx in 0..space.len() {
                space.heights_into(idx, &mut buf);
                let w = log_weight_of(&buf, params);
                if w > f64::NEG_INFINITY {
                    states.push(buf.clone());
                    lw.push(w);
                }
            }
            if states.is_empty() {
                return Err(SosError::EmptyRegion("B"));
            }
            let lz = log_sum_exp(&lw);
            let mut acc = 0.0;
            let cdf = lw
                .iter()
                .map(|w| {
                    acc += (w - lz).exp();
                    acc
                })
                .collect();
            return Ok(ConditionedSampler {
                params: params.clone(),
                bound,
                backend: Backend::Exact { states, cdf },
                diagnostics: SamplerDiagnostics { exact: true, burn_in_sweeps: 0, r_hat: None },
            });
        }
        let (burn_in, r_hat) = calibrate(params, bound, seed)?;
        Ok(ConditionedSampler {
            params: params.clone(),
            bound,
            backend: Backend::Chain { burn_in, thin: (burn_in / THIN_DIVISOR).max(1) },
            diagnostics: SamplerDiagnostics { exact: false, burn_in_sweeps: burn_in, r_hat: Some(r_hat) },
        })
    }

    /// `n` draws; replica `r` depends only on `(seed, r)` for the exact
    /// backend and on `(seed, n)` for the chain backend, where draws are
    /// thinned states of dispersed chains taken in turn.
    pub fn draws(&self, seed: u64, n: usize) -> Result<Vec<Configuration>> {
        match &self.backend {
            Backend::Exact { states, cdf } => Ok((0..n as u64)
                .map(|r| {
                    let mut rng = RngSpec::replica(seed, r, Purpose::Sampler).rng();
                    let u: f64 = rng.gen::<f64>() * cdf[cdf.len() - 1];
                    let i = cdf.partition_point(|c| *c < u).min(states.len() - 1);
                    Configuration(states[i].clone())
                })
                .collect()),
            Backend::Chain { burn_in, thin } => {
                let per_chain = n.div_ceil(GR_CHAINS);
                let mut pools = Vec::with_capacity(GR_CHAINS);
                for (c, h0) in dispersed_starts(self.bound).into_iter().enumerate() {
                    let mut rng = RngSpec::replica(seed, c as u64, Purpose::Sampler).rng();
                    let mut chain = RegionMetropolis::new(&Configuration::flat(self.params.len, h0), &self.params, self.bound)?;
                    for _ in 0..*burn_in {
                        sweep(&mut chain, &mut rng);
                    }
                    let mut pool = Vec::with_capacity(per_chain);
                    for _ in 0..per_chain {
                        for _ in 0..*thin {
                            sweep(&mut chain, &mut rng);
                        }
                        pool.push(chain.state());
                    }
                    pools.push(pool);
                }
                Ok((0..n).map(|r| pools[r % GR_CHAINS][r / GR_CHAINS].clone()).collect())
            }
        }
    }
}

fn dispersed_starts(bound: i32) -> [i32; GR_CHAINS] {
    [bound, -bound, 0, bound / 2]
}

fn sweep<R: Rng + ?Sized>(chain: &mut RegionMetropolis, rng: &mut R) {
    chain.sweep(rng);
    chain.shift(rng);
}

fn observables(h: &[i32]) -> [f64; 2] {
    let sum: i32 = h.iter().sum();
    let steps: i32 = h.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    [sum as f64, steps as f64]
}

/// Gelman-Rubin statistic for `chains` of equal length.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var = (n - 1.0) / n * w + b / n;
    (var / w).sqrt()
}

/// Doubles the run length of dispersed chains until both observables have
/// `R_hat` below the target over the second half.
fn calibrate(params: &ModelParams, bound: i32, seed: u64) -> Result<(usize, f64)> {
    let mut sweeps = 16;
    loop {
        let mut traces = vec![vec![Vec::new(); GR_CHAINS]; 2];
        for (c, h0) in dispersed_starts(bound).into_iter().enumerate() {
            let mut rng = RngSpec::replica(seed, c as u64, Purpose::Sampler).rng();
            rng.set_stream(u64::MAX - c as u64);
            let mut chain = RegionMetropolis::new(&Configuration::flat(params.len, h0), params, bound)?;
            for s in 0..sweeps {
                sweep(&mut chain, &mut rng);
                if s >= sweeps / 2 {
                    for (k, v) in observables(chain.heights()).into_iter().enumerate() {
                        traces[k][c].push(v);
                    }
                }
            }
        }
        let r_hat = traces.iter().map(|t| gelman_rubin(t)).fold(0.0, f64::max);
        if r_hat < GR_TARGET {
            return Ok((sweeps, r_hat));
        }
        if sweeps >= MAX_BURN_IN {
            log::warn!("sampler burn-in capped at {sweeps} sweeps with R_hat {r_hat:.3}");
            return Ok((sweeps, r_hat));
        }
        sweeps *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::stats::proportion;

    #[test]
    fn exact_draws_stay_in_b_and_match_law() {
        let p = ModelParams::constrained(3, 2, 1.0).unwrap().with_region(0.1, 0.34).unwrap();
        assert_eq!(p.region_b_height(), 1);
        let s = ConditionedSampler::region_b(&p, 1).unwrap();
        assert!(s.diagnostics.exact);
        // P(flat 0) = 1 / Z_B with Z_B over {-1,0,1}^3
        let mut z = 0.0;
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1i32 {
                    z += (-((b - a as i32).abs() + (c - b).abs()) as f64).exp();
                }
            }
        }
        let n = 20_000;
        let mut hits = 0;
        for cfg in s.draws(9, n as usize).unwrap() {
            assert!(cfg.sup_norm() <= 1);
            if cfg.0 == vec![0, 0, 0] {
                hits += 1;
            }
        }
        let pr = proportion(hits, n);
        let exact = 1.0 / z;
        assert!(pr.lower - 0.01 <= exact && exact <= pr.upper + 0.01, "{pr:?} vs {exact}");
    }

    #[test]
    fn chain_sampler_converges_and_is_deterministic() {
        let p = ModelParams::constrained(10, 5, 2.0).unwrap();
        let s = ConditionedSampler::region_b(&p, 3).unwrap();
        assert!(!s.diagnostics.exact);
        assert!(s.diagnostics.r_hat.unwrap() < GR_TARGET);
        let a = s.draws(4, 40).unwrap();
        assert_eq!(a, s.draws(4, 40).unwrap());
        assert!(a.iter().all(|c| p.in_region_b(c.heights())));
    }

    #[test]
    fn gelman_rubin_flags_separated_chains() {
        let same = vec![vec![1.0, 2.0, 1.5, 1.2], vec![1.1, 1.9, 1.4, 1.6]];
        assert!(gelman_rubin(&same) < 1.2);
        let apart = vec![vec![0.0, 0.1, 0.2, 0.1], vec![5.0, 5.1, 5.2, 5.1]];
        assert!(gelman_rubin(&apart) > 3.0);
    }
}
