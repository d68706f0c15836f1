//! Monte Carlo estimates from the basic coupling.

use rayon::prelude::*;
use serde::Serialize;

use super::exit::exit_times_from;
use super::sampler::ConditionedSampler;
use super::stats::{ks_two_sample, proportion, KsResult, Proportion};
use crate::dynamics::coupling::{couple_with, StopRule};
use crate::dynamics::deviation::{rate_ratio_deviation, DeviationReport};
use crate::dynamics::rng::{Purpose, RngSpec};
use crate::error::{Result, SosError};
use crate::model::config::Configuration;
use crate::model::params::ModelParams;

#[derive(Clone, Debug, Serialize)]
pub struct FidelityReport {
    #[serde(rename = "L")]
    pub len: usize,
    pub t: f64,
    /// `P(sigma <= t, sigma <= tau_bar)`.
    pub decoupling: Proportion,
    /// `decoupling / (L t)`.
    pub normalized: f64,
    pub normalized_upper: f64,
    pub deviation: Option<DeviationReport>,
}

/// Starts are drawn from `mu(. | A)`.
pub fn coupling_fidelity(params: &ModelParams, t: f64, replicas: usize, seed: u64, with_deviation: bool) -> Result<FidelityReport> {
    let a = params.region_a_height();
    let sampler = ConditionedSampler::new(params, a, seed)?;
    let starts = sampler.draws(seed, replicas)?;
    let hits: Vec<bool> = starts
        .par_iter()
        .enumerate()
        .map(|(r, start)| {
            let mut rng = RngSpec::replica(seed, r as u64, Purpose::Coupling).rng();
            let tr = couple_with(start, t, params, &mut rng, StopRule::Decoupling, false)?;
            Ok(tr.decoupled_by(t))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = hits.iter().filter(|h| **h).count() as u64;
    let decoupling = proportion(k, replicas as u64);
    let scale = params.len as f64 * t;
    let deviation = if with_deviation { Some(rate_ratio_deviation(params, 20_000, RngSpec::new(seed, 0))?) } else { None };
    Ok(FidelityReport {
        len: params.len,
        t,
        normalized: decoupling.estimate / scale,
        normalized_upper: decoupling.upper / scale,
        decoupling,
        deviation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalCheck {
    pub replicas: usize,
    pub censored_coupled: usize,
    pub censored_direct: usize,
    /// Exit times from `A` of the constrained coordinate of the coupling
    /// against those of the plain simulator.
    pub ks: KsResult,
}

/// The constrained marginal of the coupling against the direct simulator,
/// through exit times from `A` on independent streams.
pub fn coupling_marginal(start: &Configuration, params: &ModelParams, replicas: usize, seed: u64, horizon: f64) -> Result<MarginalCheck> {
    if !params.in_region_a(start.heights()) {
        return Err(SosError::Precondition(format!("start {start} is not inside A")));
    }
    let coupled: Vec<(f64, bool)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngSpec::replica(seed, r, Purpose::Coupling).rng();
            let tr = couple_with(start, horizon, params, &mut rng, StopRule::PhiExit, false)?;
            Ok(tr.tau.map_or((horizon, true), |t| (t, false)))
        })
        .collect::<Result<Vec<_>>>()?;
    let direct = exit_times_from(start, params, replicas, seed.wrapping_add(0x9e37_79b9), horizon)?;
    let a: Vec<f64> = coupled.iter().map(|c| c.0).collect();
    let b: Vec<f64> = direct.iter().map(|s| s.time).collect();
    Ok(MarginalCheck {
        replicas,
        censored_coupled: coupled.iter().filter(|c| c.1).count(),
        censored_direct: direct.iter().filter(|s| s.censored).count(),
        ks: ks_two_sample(&a, &b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_potential_never_decouples_inside_a() {
        let p = ModelParams::constrained(6, 3, 2.0).unwrap();
        let rep = coupling_fidelity(&p, 5.0, 200, 1, false).unwrap();
        assert_eq!(rep.decoupling.successes, 0);
        assert!((rep.decoupling.upper - 3.0 / 200.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_matches_simulator() {
        let p = ModelParams::constrained(4, 2, 1.0).unwrap();
        let chk = coupling_marginal(&Configuration::flat(4, 0), &p, 2000, 5, 1e6).unwrap();
        assert_eq!(chk.censored_coupled + chk.censored_direct, 0);
        assert!(chk.ks.passes(0.01), "{chk:?}");
    }
}
