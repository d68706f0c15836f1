//! Spectral gaps of the auxiliary dynamics over an `(L, M)` grid.

use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::error::Result;
use crate::model::catalog::PotentialCatalog;
use crate::model::enumerate::partition_function;
use crate::model::params::ModelParams;
use crate::spectral::eigen::{spectral_gap, EigenMethod};
use crate::spectral::generator::build_generator;

#[derive(Clone, Debug)]
pub struct GapScalingConfig {
    pub grid: Vec<(usize, u32)>,
    pub beta: f64,
    pub r: u32,
    /// Largest relative partition-function increment `R -> R+1` accepted
    /// as converged.
    pub truncation_tol: f64,
    pub catalog: Arc<PotentialCatalog>,
}

impl GapScalingConfig {
    pub fn desk_grid() -> Vec<(usize, u32)> {
        (2..=6).flat_map(|l| (1..=3).map(move |m| (l, m))).collect()
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": self.grid,
            "beta": self.beta,
            "R": self.r,
            "truncation_tol": self.truncation_tol,
            "catalog": if self.catalog.is_empty() { serde_json::Value::Null } else {
                serde_json::from_str(&self.catalog.to_json_string()).expect("catalog JSON reparses")
            },
        })
    }
}

impl Default for GapScalingConfig {
    fn default() -> Self {
        GapScalingConfig { grid: Self::desk_grid(), beta: 2.0, r: 4, truncation_tol: 1e-3, catalog: Arc::new(PotentialCatalog::empty()) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapPoint {
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "M")]
    pub m: u32,
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: u32,
    pub space_size: usize,
    pub gap: f64,
    /// `gap L max(L, M^2)`.
    pub normalized: f64,
    pub method: EigenMethod,
    pub residual: f64,
    pub tail_increment: f64,
    pub truncation_flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapScalingReport {
    pub points: Vec<GapPoint>,
    pub min_normalized: f64,
    pub max_normalized: f64,
    /// `min > 0` and `max <= 10 min`.
    pub within_decade: bool,
}

pub fn gap_point(len: usize, m: u32, cfg: &GapScalingConfig) -> Result<GapPoint> {
    let p = ModelParams::auxiliary(len, m, cfg.beta)?.with_shared_catalog(cfg.catalog.clone());
    let gen = build_generator(&p, cfg.r)?;
    let rep = spectral_gap(&gen)?;
    let tail = if len > 1 { partition_function(&p, cfg.r)?.tail_increment.unwrap_or(0.0) } else { 0.0 };
    let scale = len as f64 * (len as f64).max((m * m) as f64);
    Ok(GapPoint {
        len,
        m,
        beta: cfg.beta,
        r: cfg.r,
        space_size: gen.n(),
        gap: rep.gap,
        normalized: rep.gap * scale,
        method: rep.method,
        residual: rep.residual,
        tail_increment: tail,
        truncation_flagged: tail.abs() > cfg.truncation_tol,
    })
}

pub fn gap_scaling(cfg: &GapScalingConfig) -> Result<GapScalingReport> {
    let points = cfg.grid.par_iter().map(|&(l, m)| gap_point(l, m, cfg)).collect::<Result<Vec<_>>>()?;
    let min = points.iter().map(|p| p.normalized).fold(f64::INFINITY, f64::min);
    let max = points.iter().map(|p| p.normalized).fold(0.0, f64::max);
    Ok(GapScalingReport { points, min_normalized: min, max_normalized: max, within_decade: min > 0.0 && max <= 10.0 * min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_site_point_is_the_uniform_path() {
        // L = 1, M = 1: unit-rate path on {-1, 0, 1}, gap 1
        let cfg = GapScalingConfig { grid: vec![(1, 1)], ..Default::default() };
        let rep = gap_scaling(&cfg).unwrap();
        assert!((rep.points[0].gap - 1.0).abs() < 1e-12);
        assert_eq!(rep.points[0].normalized, rep.points[0].gap);
    }

    #[test]
    fn small_grid_normalized_band() {
        let cfg = GapScalingConfig { grid: vec![(2, 1), (2, 2), (3, 1), (3, 2)], r: 3, ..Default::default() };
        let rep = gap_scaling(&cfg).unwrap();
        assert!(rep.min_normalized > 0.0);
        assert!(rep.within_decade, "{rep:?}");
    }
}
