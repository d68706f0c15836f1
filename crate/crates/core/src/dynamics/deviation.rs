//! Closeness of the constrained and auxiliary rates on `A`.

use rayon::prelude::*;
use serde::Serialize;

use super::metropolis::RegionMetropolis;
use super::rates::jump_rate;
use super::rng::RngSpec;
use crate::error::{Result, SosError};
use crate::model::config::{Configuration, Move};
use crate::model::enumerate::StateSpace;
use crate::model::params::{MeasureKind, ModelParams};

/// Largest `A`-slice enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 2_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct DeviationReport {
    /// `sup |c_bar / c - 1|` over examined states in `A` and moves with `c > 0`.
    pub deviation: f64,
    pub maximizer: Option<(Configuration, Move)>,
    /// Moves with `c = 0` but `c_bar > 0`, kept out of the ratio.
    pub edge_moves: u64,
    pub states_examined: usize,
    pub exhaustive: bool,
}

fn scan(heights: &[i32], params: &ModelParams, aux: &ModelParams) -> (f64, Option<Move>, u64) {
    let mut best = (0.0, None, 0);
    for mv in Move::all(heights.len()) {
        let c = jump_rate(heights, mv, params);
        let cb = jump_rate(heights, mv, aux);
        if c == 0.0 {
            if cb > 0.0 {
                best.2 += 1;
            }
            continue;
        }
        let dev = (cb / c - 1.0).abs();
        if best.1.is_none() || dev > best.0 {
            best.0 = dev;
            best.1 = Some(mv);
        }
    }
    best
}

/// Exhaustive over `A` when it has at most [`EXHAUSTIVE_LIMIT`] states,
/// otherwise over `sample_size` Metropolis draws from `mu` restricted to `A`.
pub fn rate_ratio_deviation(params: &ModelParams, sample_size: usize, spec: RngSpec) -> Result<DeviationReport> {
    if params.kind != MeasureKind::Constrained {
        return Err(SosError::Precondition("rate deviation is measured from the constrained process".into()));
    }
    let aux = params.with_kind(MeasureKind::Auxiliary)?;
    let a = params.region_a_height();
    if a < 0 {
        return Err(SosError::EmptyRegion("A"));
    }
    let estimate = (2 * a as u128 + 1).pow(params.len as u32);
    let exhaustive = estimate <= EXHAUSTIVE_LIMIT as u128;
    let (count, states): (usize, Box<dyn Fn(usize) -> Configuration + Sync>) = if exhaustive {
        let space = StateSpace::height_box(params.len, a as u32, EXHAUSTIVE_LIMIT)?;
        (space.len(), Box::new(move |i| space.configuration(i)))
    } else {
        let mut rng = spec.rng();
        let mut chain = RegionMetropolis::new(&Configuration::flat(params.len, 0), params, a)?;
        for _ in 0..1000 {
            chain.sweep(&mut rng);
        }
        let mut draws = Vec::with_capacity(sample_size);
        for _ in 0..sample_size {
            for _ in 0..10 {
                chain.sweep(&mut rng);
            }
            draws.push(chain.state());
        }
        (draws.len(), Box::new(move |i| draws[i].clone()))
    };
    let best = (0..count)
        .into_par_iter()
        .map(|i| {
            let cfg = states(i);
            let (dev, mv, edges) = scan(cfg.heights(), params, &aux);
            (dev, mv.map(|m| (cfg, m)), edges)
        })
        .reduce(
            || (0.0, None, 0),
            |x, y| {
                let edges = x.2 + y.2;
                // ties resolved towards the smaller configuration for determinism
                let pick_y = match (&x.1, &y.1) {
                    (None, _) => true,
                    (_, None) => false,
                    (Some(a), Some(b)) => y.0 > x.0 || (y.0 == x.0 && b < a),
                };
                if pick_y {
                    (y.0, y.1, edges)
                } else {
                    (x.0, x.1, edges)
                }
            },
        );
    Ok(DeviationReport { deviation: best.0, maximizer: best.1, edge_moves: best.2, states_examined: count, exhaustive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{PotentialCatalog, PotentialShape};

    #[test]
    fn zero_potential_gives_zero_deviation() {
        let p = ModelParams::constrained(6, 3, 2.0).unwrap();
        let rep = rate_ratio_deviation(&p, 0, RngSpec::new(0, 0)).unwrap();
        assert!(rep.exhaustive);
        assert_eq!(rep.deviation, 0.0);
    }

    #[test]
    fn reflection_invariant() {
        let cat = PotentialCatalog::new(vec![PotentialShape::vertical_bar(4, 0.002)], 1.0).unwrap();
        let p = ModelParams::constrained(6, 3, 2.0).unwrap().with_catalog(cat).with_region(0.5, 0.2).unwrap();
        let rep = rate_ratio_deviation(&p, 0, RngSpec::new(0, 0)).unwrap();
        assert!(rep.deviation > 0.0);
        let (cfg, mv) = rep.maximizer.unwrap();
        let aux = p.with_kind(MeasureKind::Auxiliary).unwrap();
        let refl = cfg.reflected();
        let rmv = mv.reverse();
        let dev = |c: &Configuration, m: Move| (jump_rate(c.heights(), m, &aux) / jump_rate(c.heights(), m, &p) - 1.0).abs();
        assert!((dev(&cfg, mv) - dev(&refl, rmv)).abs() < 1e-12);
    }
}
