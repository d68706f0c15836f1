//! The density of the conditioned box measure against the auxiliary measure.

use serde::Serialize;

use crate::error::{Result, SosError};
use crate::model::config::Configuration;
use crate::model::energy::{long_range_energy, log_weight_of};
use crate::model::enumerate::{log_sum_exp, partition_function, StateSpace, DEFAULT_SIZE_CAP};
use crate::model::params::{MeasureKind, ModelParams, Strip};

#[derive(Clone, Debug, Serialize)]
pub struct RnReport {
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "M")]
    pub m: i32,
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: u32,
    pub b: i32,
    /// `sup_{phi in B} mu(phi | B) / mu_bar(phi)`.
    pub sup_ratio: f64,
    pub maximizer: Configuration,
    /// `sup_B |W^inf - W^box|`.
    pub w_hat: f64,
    pub mu_bar_b: f64,
    /// `e^{w_hat} / mu_bar(B)`; holds when `W^box <= W^inf` on `B`.
    pub bound: f64,
    /// `e^{2 w_hat} / mu_bar(B)`, valid for any sign of the potential.
    pub general_bound: f64,
    pub slack: f64,
    pub box_below_infinite: bool,
    pub passed: bool,
    pub tail_increment: Option<f64>,
}

/// Exact over `B`; the auxiliary normalization is enumerated at truncation
/// `r`. `mu_bar(B)` and `mu(. | B)` share that normalization, so the
/// comparison itself does not depend on `r`.
pub fn radon_nikodym_bound(params: &ModelParams, r: u32) -> Result<RnReport> {
    if params.kind != MeasureKind::Constrained {
        return Err(SosError::Precondition("pass the constrained parameters".into()));
    }
    let m = params.bound.finite().expect("constrained bound is finite");
    let b = params.region_b_height();
    if b < 0 {
        return Err(SosError::EmptyRegion("B"));
    }
    let aux = params.with_kind(MeasureKind::Auxiliary)?;
    let part = partition_function(&aux, r)?;
    let space = StateSpace::height_box(params.len, b as u32, DEFAULT_SIZE_CAP)?;
    let mut log_mu = Vec::with_capacity(space.len());
    let mut log_bar = Vec::with_capacity(space.len());
    let mut w_hat: f64 = 0.0;
    let mut below = true;
    let mut buf = Vec::new();
    for idx in 0..space.len() {
        space.heights_into(idx, &mut buf);
        let w_inf = long_range_energy(&buf, &params.catalog, Strip::Infinite);
        let w_box = long_range_energy(&buf, &params.catalog, Strip::Box(m as u32));
        w_hat = w_hat.max((w_inf - w_box).abs());
        below &= w_box <= w_inf + 1e-15;
        log_mu.push(log_weight_of(&buf, params));
        log_bar.push(log_weight_of(&buf, &aux) - part.log_z);
    }
    let log_zb = log_sum_exp(&log_mu);
    let mu_bar_b = log_sum_exp(&log_bar).exp();
    let (mut sup, mut arg) = (f64::NEG_INFINITY, 0);
    for i in 0..space.len() {
        let lr = log_mu[i] - log_zb - log_bar[i];
        if lr > sup {
            sup = lr;
            arg = i;
        }
    }
    let sup_ratio = sup.exp();
    let bound = w_hat.exp() / mu_bar_b;
    Ok(RnReport {
        len: params.len,
        m,
        beta: params.beta,
        r,
        b,
        sup_ratio,
        maximizer: space.configuration(arg),
        w_hat,
        mu_bar_b,
        bound,
        general_bound: (2.0 * w_hat).exp() / mu_bar_b,
        slack: bound / sup_ratio,
        box_below_infinite: below,
        passed: sup_ratio <= bound * (1.0 + 1e-12),
        tail_increment: part.tail_increment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{PotentialCatalog, PotentialShape};

    #[test]
    fn zero_potential_reduces_to_inverse_mass() {
        let p = ModelParams::constrained(4, 2, 2.0).unwrap().with_region(0.1, 0.25).unwrap();
        let rep = radon_nikodym_bound(&p, 6).unwrap();
        assert_eq!(rep.w_hat, 0.0);
        // with W = 0 both measures agree on B up to normalization
        assert!((rep.sup_ratio * rep.mu_bar_b - 1.0).abs() < 1e-12);
        assert!(rep.passed);
    }

    #[test]
    fn long_bar_sees_the_box() {
        let cat = PotentialCatalog::new(vec![PotentialShape::vertical_bar(4, 0.02)], 1.0).unwrap();
        let p = ModelParams::constrained(4, 2, 1.5).unwrap().with_catalog(cat).with_region(0.1, 0.25).unwrap();
        let rep = radon_nikodym_bound(&p, 5).unwrap();
        assert!(rep.w_hat > 0.0);
        assert!(rep.box_below_infinite);
        assert!(rep.passed, "{rep:?}");
        assert!(rep.general_bound >= rep.bound);
    }

    #[test]
    fn smaller_b_gives_larger_bound() {
        let p = ModelParams::constrained(5, 2, 1.0).unwrap();
        let wide = radon_nikodym_bound(&p.clone().with_region(0.1, 0.4).unwrap(), 4).unwrap();
        let narrow = radon_nikodym_bound(&p.with_region(0.1, 0.2).unwrap(), 4).unwrap();
        assert!(narrow.b < wide.b);
        assert!(narrow.bound > wide.bound);
    }
}
