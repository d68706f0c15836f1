//! Exit times from `A` and their scaling with `L`.

use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use super::sampler::{ConditionedSampler, SamplerDiagnostics};
use super::stats::{censored_median, ks_one_sample, log_log_fit, KsResult, LinearFit, MedianEstimate};
use crate::dynamics::gillespie::{exit_time_with, ExitSample};
use crate::dynamics::rng::{Purpose, RngSpec};
use crate::error::Result;
use crate::model::catalog::PotentialCatalog;
use crate::model::config::Configuration;
use crate::model::params::ModelParams;
use crate::spectral::killed::KilledOperator;

/// Exit samples for `replicas` independent starts drawn from `mu(. | B)`.
pub fn exit_times(params: &ModelParams, replicas: usize, seed: u64, horizon: f64) -> Result<(Vec<ExitSample>, SamplerDiagnostics)> {
    let sampler = ConditionedSampler::region_b(params, seed)?;
    let starts = sampler.draws(seed, replicas)?;
    let samples = starts
        .par_iter()
        .enumerate()
        .map(|(r, start)| {
            let r = r as u64;
            let mut rng = RngSpec::replica(seed, r, Purpose::Dynamics).rng();
            exit_time_with(start, params, &mut rng, horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((samples, sampler.diagnostics.clone()))
}

/// Exit samples from a fixed start.
pub fn exit_times_from(start: &Configuration, params: &ModelParams, replicas: usize, seed: u64, horizon: f64) -> Result<Vec<ExitSample>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngSpec::replica(seed, r, Purpose::Dynamics).rng();
            exit_time_with(start, params, &mut rng, horizon)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExitLawCheck {
    pub replicas: usize,
    pub censored: usize,
    pub ks: KsResult,
    pub mc_median: Option<MedianEstimate>,
    pub exact_median: f64,
    pub exact_mean: f64,
}

/// Monte Carlo exit times from `start` against the survival curve of the
/// killed generator.
pub fn exit_law_check(start: &Configuration, params: &ModelParams, replicas: usize, seed: u64) -> Result<ExitLawCheck> {
    let killed = KilledOperator::on_region_a(params)?;
    let i = killed
        .index_of(start)
        .ok_or_else(|| crate::error::SosError::Precondition(format!("start {start} is not inside A")))?;
    let surv = killed.survival_function(&killed.point_mass(i))?;
    let exact_median = surv.median();
    let horizon = 200.0 * exact_median.max(1.0);
    let samples = exit_times_from(start, params, replicas, seed, horizon)?;
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let censored: Vec<bool> = samples.iter().map(|s| s.censored).collect();
    let ks = ks_one_sample(&times, |t| surv.cdf(t));
    Ok(ExitLawCheck {
        replicas,
        censored: censored.iter().filter(|c| **c).count(),
        ks,
        mc_median: censored_median(&times, &censored),
        exact_median,
        exact_mean: surv.mean(),
    })
}

#[derive(Clone, Debug)]
pub struct ExitScalingConfig {
    pub lens: Vec<usize>,
    pub beta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Censoring time as a multiple of `L^3`.
    pub horizon_factor: f64,
    pub catalog: Arc<PotentialCatalog>,
}

impl Default for ExitScalingConfig {
    fn default() -> Self {
        ExitScalingConfig {
            lens: vec![8, 12, 16, 24],
            beta: 3.0,
            eps: 0.1,
            alpha: 0.2,
            replicas: 200,
            seed: 1,
            horizon_factor: 1e4,
            catalog: Arc::new(PotentialCatalog::empty()),
        }
    }
}

impl ExitScalingConfig {
    pub fn params(&self, len: usize) -> Result<ModelParams> {
        ModelParams::constrained(len, ModelParams::half_box(len), self.beta)?
            .with_shared_catalog(self.catalog.clone())
            .with_region(self.eps, self.alpha)
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "Ls": self.lens,
            "beta": self.beta,
            "eps": self.eps,
            "alpha": self.alpha,
            "replicas": self.replicas,
            "seed": self.seed,
            "horizon_factor": self.horizon_factor,
            "catalog": if self.catalog.is_empty() { serde_json::Value::Null } else {
                serde_json::from_str(&self.catalog.to_json_string()).expect("catalog JSON reparses")
            },
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExitPoint {
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "M")]
    pub m: u32,
    pub beta: f64,
    pub a: i32,
    pub b: i32,
    pub replicas: usize,
    pub censored: usize,
    pub median: Option<f64>,
    pub median_lower: Option<f64>,
    pub median_upper: Option<f64>,
    pub median_se: Option<f64>,
    pub mean_jumps: f64,
    pub sampler_exact: bool,
    pub sampler_r_hat: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ExitPoint>,
    /// Fit of `log median` against `log L` over uncensored-median points.
    pub fit: Option<LinearFit>,
    pub excluded: Vec<usize>,
}

impl ScalingReport {
    /// Slope inside `[lo, hi]`, fitted on at least four points.
    pub fn slope_within(&self, lo: f64, hi: f64) -> bool {
        self.fit.as_ref().is_some_and(|f| f.n >= 4 && f.slope >= lo && f.slope <= hi)
    }
}

pub fn exit_point(cfg: &ExitScalingConfig, len: usize) -> Result<ExitPoint> {
    let p = cfg.params(len)?;
    let horizon = cfg.horizon_factor * (len as f64).powi(3);
    let (samples, diag) = exit_times(&p, cfg.replicas, cfg.seed ^ ((len as u64) << 32), horizon)?;
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let censored: Vec<bool> = samples.iter().map(|s| s.censored).collect();
    let med = censored_median(&times, &censored);
    if med.is_none() {
        log::warn!("L = {len}: median censored at horizon {horizon}");
    }
    Ok(ExitPoint {
        len,
        m: ModelParams::half_box(len),
        beta: cfg.beta,
        a: p.region_a_height(),
        b: p.region_b_height(),
        replicas: cfg.replicas,
        censored: censored.iter().filter(|c| **c).count(),
        median: med.map(|m| m.median),
        median_lower: med.map(|m| m.lower),
        median_upper: med.map(|m| m.upper),
        median_se: med.map(|m| m.se),
        mean_jumps: samples.iter().map(|s| s.jumps as f64).sum::<f64>() / samples.len().max(1) as f64,
        sampler_exact: diag.exact,
        sampler_r_hat: diag.r_hat,
    })
}

pub fn exit_time_scaling(cfg: &ExitScalingConfig) -> Result<ScalingReport> {
    let mut points = Vec::new();
    for &len in &cfg.lens {
        let pt = exit_point(cfg, len)?;
        log::info!("exit scaling L = {len}: median {:?}, censored {}", pt.median, pt.censored);
        points.push(pt);
    }
    Ok(scaling_from_points(points))
}

pub fn scaling_from_points(points: Vec<ExitPoint>) -> ScalingReport {
    let (mut xs, mut ys, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for p in &points {
        match p.median {
            Some(m) if m > 0.0 => {
                xs.push(p.len as f64);
                ys.push(m);
            }
            _ => excluded.push(p.len),
        }
    }
    let fit = if xs.len() >= 4 { log_log_fit(&xs, &ys) } else { None };
    ScalingReport { points, fit, excluded }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_length_reproduces_under_seed() {
        let cfg = ExitScalingConfig { lens: vec![6], replicas: 8, beta: 2.0, ..Default::default() };
        let a = exit_point(&cfg, 6).unwrap();
        let b = exit_point(&cfg, 6).unwrap();
        assert_eq!(a.median, b.median);
        assert!(a.sampler_exact);
        assert_eq!((a.a, a.b), (2, 1));
    }

    #[test]
    fn fit_needs_four_uncensored_points() {
        let mk = |len: usize, median: Option<f64>| ExitPoint {
            len,
            m: 1,
            beta: 3.0,
            a: 1,
            b: 1,
            replicas: 1,
            censored: 0,
            median,
            median_lower: None,
            median_upper: None,
            median_se: None,
            mean_jumps: 0.0,
            sampler_exact: true,
            sampler_r_hat: None,
        };
        let r = scaling_from_points(vec![mk(8, Some(1.0)), mk(12, Some(3.4)), mk(16, None), mk(24, Some(27.0))]);
        assert!(r.fit.is_none());
        assert_eq!(r.excluded, vec![16]);
        let pts: Vec<ExitPoint> = [8usize, 12, 16, 24].iter().map(|&l| mk(l, Some((l as f64).powi(3)))).collect();
        let r = scaling_from_points(pts);
        assert!(r.slope_within(2.99, 3.01));
    }

    #[test]
    fn small_exit_law_matches_killed_operator() {
        let p = ModelParams::constrained(2, 1, 1.0).unwrap().with_region(0.1, 0.2).unwrap();
        let chk = exit_law_check(&Configuration::flat(2, 0), &p, 2000, 3).unwrap();
        assert_eq!(chk.censored, 0);
        assert!(chk.ks.passes(0.01), "{chk:?}");
    }
}
