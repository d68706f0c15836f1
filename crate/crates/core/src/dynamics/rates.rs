use std::collections::HashSet;

use crate::model::config::{Configuration, Move};
use crate::model::energy::log_weight_delta;
use crate::model::geometry::{move_window, DualSite};
use crate::model::params::ModelParams;

/// `c(phi, phi ± delta_k) = (mu(psi) / mu(phi))^{1/2}`, zero out of and into
/// zero-mass states. The normalization never enters.
pub fn jump_rate(heights: &[i32], mv: Move, params: &ModelParams) -> f64 {
    if !params.in_support(heights) {
        return 0.0;
    }
    let d = log_weight_delta(heights, mv, params);
    if d == f64::NEG_INFINITY {
        0.0
    } else {
        (0.5 * d).exp()
    }
}

pub fn jump_rate_cfg(cfg: &Configuration, mv: Move, params: &ModelParams) -> f64 {
    jump_rate(cfg.heights(), mv, params)
}

/// Total escape rate `sum over the 2L moves`.
pub fn total_rate(heights: &[i32], params: &ModelParams) -> f64 {
    Move::all(heights.len()).map(|mv| jump_rate(heights, mv, params)).sum()
}

/// `sum_s |w_s| * #{translates of s meeting the move window}`, an upper
/// bound on `|W(psi) - W(phi)|` for any single-site move, in either strip.
pub fn long_range_move_bound(params: &ModelParams) -> f64 {
    let window: Vec<DualSite> = move_window(Move::up(1), 0).collect();
    params
        .catalog
        .shapes()
        .iter()
        .map(|s| {
            let translates: HashSet<(i32, i32)> =
                window.iter().flat_map(|p| s.sites().iter().map(move |o| (p.i - o.i, p.j - o.j))).collect();
            s.weight().abs() * translates.len() as f64
        })
        .sum()
}

/// `c_max = exp(beta + 2 w)` with `w` from [`long_range_move_bound`]. Since
/// `|Delta H| <= 2` and `|Delta W| <= w`, every rate of both processes is at
/// most `exp(beta + w / 2)`.
pub fn rate_bound(params: &ModelParams) -> f64 {
    (params.beta + 2.0 * long_range_move_bound(params)).exp()
}
