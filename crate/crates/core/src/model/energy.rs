//! Nearest-neighbour and long-range energies, and log-weights of both
//! Gibbs measures. Zero mass is encoded in-band as `f64::NEG_INFINITY`.

use super::catalog::{PotentialCatalog, PotentialShape};
use super::config::{Configuration, GradientConfiguration, Move};
use super::geometry::{move_window, DualSite, HeightView};
use super::params::{MeasureKind, ModelParams, Strip};
use crate::error::{Result, SosError};

/// `sum_{k=1}^{L-1} |phi_{k+1} - phi_k|` with free ends.
pub fn hamiltonian(heights: &[i32]) -> i64 {
    heights.windows(2).map(|w| (w[1] as i64 - w[0] as i64).abs()).sum()
}

/// Change of the nearest-neighbour energy under a single-site move.
pub fn hamiltonian_delta(heights: &[i32], mv: Move) -> i64 {
    let k = mv.site - 1;
    let h = heights[k] as i64;
    let hn = h + mv.direction.delta() as i64;
    let mut d = 0;
    if k > 0 {
        let l = heights[k - 1] as i64;
        d += (hn - l).abs() - (h - l).abs();
    }
    if k + 1 < heights.len() {
        let r = heights[k + 1] as i64;
        d += (hn - r).abs() - (h - r).abs();
    }
    d
}

fn translate_inside(shape: &PotentialShape, di: i32, dj: i32, strip: Strip, len: usize) -> bool {
    let (i0, i1, j0, j1) = shape.bbox();
    // x + 1/2 in [-1/2, L + 1/2]
    if i0 + di < -1 || i1 + di > len as i32 {
        return false;
    }
    match strip {
        Strip::Infinite => true,
        // y + 1/2 in [-(M + 1/2), M + 1/2]
        Strip::Box(m) => j0 + dj >= -(m as i32) - 1 && j1 + dj <= m as i32,
    }
}

fn translates_touching(shape: &PotentialShape, sites: &[DualSite], buf: &mut Vec<(i32, i32)>) {
    buf.clear();
    for p in sites {
        for o in shape.sites() {
            buf.push((p.i - o.i, p.j - o.j));
        }
    }
    buf.sort_unstable();
    buf.dedup();
}

/// Sum of the weights of all catalog translates that meet the attached set
/// and lie inside `strip`, each translate counted once.
pub fn long_range_energy(heights: &[i32], catalog: &PotentialCatalog, strip: Strip) -> f64 {
    if catalog.is_empty() {
        return 0.0;
    }
    let attached = HeightView::new(heights).attached_sites();
    let mut buf = Vec::new();
    let mut total = 0.0;
    for shape in catalog.shapes() {
        translates_touching(shape, &attached, &mut buf);
        let count = buf
            .iter()
            .filter(|&&(di, dj)| translate_inside(shape, di, dj, strip, heights.len()))
            .count();
        total += shape.weight() * count as f64;
    }
    debug_assert!(total.is_finite());
    total
}

/// `W(phi ± delta_k) - W(phi)` evaluated locally: only translates meeting
/// the symmetric difference of the two attached sets can contribute.
pub fn long_range_delta(heights: &[i32], mv: Move, catalog: &PotentialCatalog, strip: Strip) -> f64 {
    if catalog.is_empty() {
        return 0.0;
    }
    let before = HeightView::new(heights);
    let after = HeightView::after(heights, mv);
    let changed: Vec<DualSite> = move_window(mv, heights[mv.site - 1])
        .filter(|&s| before.is_attached(s) != after.is_attached(s))
        .collect();
    if changed.is_empty() {
        return 0.0;
    }
    let mut buf = Vec::new();
    let mut delta = 0.0;
    for shape in catalog.shapes() {
        translates_touching(shape, &changed, &mut buf);
        let mut net = 0i64;
        for &(di, dj) in &buf {
            if !translate_inside(shape, di, dj, strip, heights.len()) {
                continue;
            }
            let hit = |v: &HeightView| shape.sites().iter().any(|o| v.is_attached(o.offset(di, dj)));
            net += i64::from(hit(&after)) - i64::from(hit(&before));
        }
        delta += shape.weight() * net as f64;
    }
    delta
}

/// Log of the unnormalized weight, `-inf` outside the support.
pub fn log_weight(cfg: &Configuration, params: &ModelParams) -> f64 {
    log_weight_of(cfg.heights(), params)
}

pub fn log_weight_of(heights: &[i32], params: &ModelParams) -> f64 {
    if !params.in_support(heights) {
        return f64::NEG_INFINITY;
    }
    -params.beta * hamiltonian(heights) as f64 - long_range_energy(heights, &params.catalog, params.strip())
}

/// `log w(phi ± delta_k) - log w(phi)` for `phi` in the support; `-inf`
/// when the target has zero mass.
pub fn log_weight_delta(heights: &[i32], mv: Move, params: &ModelParams) -> f64 {
    let k = mv.site - 1;
    let target = heights[k] + mv.direction.delta();
    if let Some(m) = params.bound.finite() {
        let constrained_site = match params.kind {
            MeasureKind::Constrained => true,
            MeasureKind::Auxiliary => k == 0,
        };
        if constrained_site && target.abs() > m {
            return f64::NEG_INFINITY;
        }
    }
    -params.beta * hamiltonian_delta(heights, mv) as f64 - long_range_delta(heights, mv, &params.catalog, params.strip())
}

/// Log-weight written in gradient variables (auxiliary measure only):
/// `-beta sum_{i>=2} |eta_i| - W^inf(T eta)` on `|eta_1| <= M`.
pub fn gradient_log_weight(g: &GradientConfiguration, params: &ModelParams) -> Result<f64> {
    if params.kind != MeasureKind::Auxiliary {
        return Err(SosError::Precondition("gradient weights are defined for the auxiliary measure".into()));
    }
    if let Some(m) = params.bound.finite() {
        if g.0[0].abs() > m {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let steps: i64 = g.0.iter().skip(1).map(|e| (*e as i64).abs()).sum();
    let phi = g.to_configuration();
    Ok(-params.beta * steps as f64 - long_range_energy(phi.heights(), &params.catalog, Strip::Infinite))
}
