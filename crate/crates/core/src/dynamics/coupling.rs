//! Basic coupling of the constrained process and the auxiliary process.
//!
//! Both are driven by the same marks: a single exponential clock of rate
//! `2 L c_max` carrying a uniformly chosen `(site, direction)` and a uniform
//! `U`. A process applies the move iff its own rate exceeds `U c_max`, which
//! is the per-site Poisson construction with the streams merged.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use std::io::Write;

use super::rates::{jump_rate, rate_bound};
use super::rng::RngSpec;
use crate::error::{Result, SosError};
use crate::model::config::{Configuration, Move};
use crate::model::params::{MeasureKind, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// Run to the horizon.
    Horizon,
    /// Stop once the constrained process has left `A`.
    PhiExit,
    /// Stop at the first of decoupling and the auxiliary exit.
    Decoupling,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingEvent {
    pub time: f64,
    pub mv: Move,
    pub u: f64,
    pub phi_moved: bool,
    pub phibar_moved: bool,
}

#[derive(Clone, Debug)]
pub struct CouplingTrace {
    pub start: Configuration,
    pub horizon: f64,
    pub c_max: f64,
    /// First time the two profiles differ.
    pub sigma: Option<f64>,
    /// Exit time of the constrained process from `A`.
    pub tau: Option<f64>,
    /// Exit time of the auxiliary process from `A`.
    pub tau_bar: Option<f64>,
    /// Clock value when the run stopped.
    pub end_time: f64,
    pub marks: u64,
    pub end_phi: Configuration,
    pub end_phibar: Configuration,
    /// Marks that moved at least one process, when recording was requested.
    pub events: Vec<CouplingEvent>,
    pub rng: RngSpec,
}

impl CouplingTrace {
    /// `sigma <= t` and `sigma <= tau_bar`.
    pub fn decoupled_by(&self, t: f64) -> bool {
        match self.sigma {
            Some(s) => s <= t && self.tau_bar.is_none_or(|tb| s <= tb),
            None => false,
        }
    }

    pub fn write_jsonl<W: Write>(&self, params: &ModelParams, mut out: W) -> Result<()> {
        let header = serde_json::json!({
            "header": {
                "params": params.echo(),
                "seed": self.rng.seed,
                "stream": self.rng.stream,
                "start": self.start,
                "horizon": self.horizon,
                "c_max": self.c_max,
                "sigma": self.sigma,
                "tau": self.tau,
                "tau_bar": self.tau_bar,
            }
        });
        writeln!(out, "{header}")?;
        for e in &self.events {
            let proc = match (e.phi_moved, e.phibar_moved) {
                (true, true) => "both",
                (true, false) => "phi",
                _ => "phibar",
            };
            let line = CoupledLine { t: e.time, k: e.mv.site, d: e.mv.direction.delta(), proc };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct CoupledLine {
    t: f64,
    k: usize,
    d: i32,
    proc: &'static str,
}

pub fn couple(start: &Configuration, horizon: f64, params: &ModelParams, spec: RngSpec) -> Result<CouplingTrace> {
    let mut rng = spec.rng();
    let mut trace = couple_with(start, horizon, params, &mut rng, StopRule::Horizon, true)?;
    trace.rng = spec;
    Ok(trace)
}

/// `params` describes the constrained process; the auxiliary one shares its
/// `L`, `M`, `beta`, catalog and regions.
pub fn couple_with<R: Rng + ?Sized>(
    start: &Configuration,
    horizon: f64,
    params: &ModelParams,
    rng: &mut R,
    stop: StopRule,
    record: bool,
) -> Result<CouplingTrace> {
    if params.kind != MeasureKind::Constrained {
        return Err(SosError::Precondition("couple() takes the constrained parameters".into()));
    }
    params.check_len(start)?;
    let aux = params.with_kind(MeasureKind::Auxiliary)?;
    if !params.in_support(start.heights()) || !aux.in_support(start.heights()) {
        return Err(SosError::Precondition(format!("start {start} has zero mass")));
    }
    let c_max = rate_bound(params);
    let len = params.len;
    let clock = 2.0 * len as f64 * c_max;
    let a = params.region_a_height();
    let mut phi = start.0.clone();
    let mut bar = start.0.clone();
    let mut tr = CouplingTrace {
        start: start.clone(),
        horizon,
        c_max,
        sigma: None,
        tau: None,
        tau_bar: None,
        end_time: 0.0,
        marks: 0,
        end_phi: start.clone(),
        end_phibar: start.clone(),
        events: Vec::new(),
        rng: RngSpec::new(0, 0),
    };
    if !params.in_region_a(&phi) {
        tr.tau = Some(0.0);
        tr.tau_bar = Some(0.0);
    }
    let mut t = 0.0;
    loop {
        let done = match stop {
            StopRule::Horizon => false,
            StopRule::PhiExit => tr.tau.is_some(),
            StopRule::Decoupling => tr.sigma.is_some() || tr.tau_bar.is_some(),
        };
        if done {
            break;
        }
        let hold: f64 = Exp1.sample(rng);
        let next = t + hold / clock;
        if next > horizon {
            t = horizon;
            break;
        }
        t = next;
        tr.marks += 1;
        let mv = Move::from_slot(rng.gen_range(0..2 * len));
        let u: f64 = rng.gen();
        let threshold = u * c_max;
        let phi_moved = jump_rate(&phi, mv, params) > threshold;
        let bar_moved = jump_rate(&bar, mv, &aux) > threshold;
        let k = mv.site - 1;
        let d = mv.direction.delta();
        if phi_moved {
            phi[k] += d;
            if tr.tau.is_none() && phi[k].abs() > a {
                tr.tau = Some(t);
            }
        }
        if bar_moved {
            bar[k] += d;
            if tr.tau_bar.is_none() && bar[k].abs() > a {
                tr.tau_bar = Some(t);
            }
        }
        if phi_moved != bar_moved && tr.sigma.is_none() {
            debug_assert!(phi != bar);
            tr.sigma = Some(t);
        }
        if record && (phi_moved || bar_moved) {
            tr.events.push(CouplingEvent { time: t, mv, u, phi_moved, phibar_moved: bar_moved });
        }
    }
    tr.end_time = t;
    tr.end_phi = Configuration(phi);
    tr.end_phibar = Configuration(bar);
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{PotentialCatalog, PotentialShape};

    #[test]
    fn zero_potential_far_from_box_never_decouples() {
        // A = {|phi| <= 2} well inside M = 8 over a short horizon.
        let p = ModelParams::constrained(4, 8, 3.0).unwrap().with_region(0.5, 0.2).unwrap();
        for s in 0..20 {
            let tr = couple(&Configuration::flat(4, 0), 5.0, &p, RngSpec::new(s, 0)).unwrap();
            if tr.end_phi.sup_norm() < 7 {
                assert_eq!(tr.sigma, None);
                assert_eq!(tr.end_phi, tr.end_phibar);
            }
        }
    }

    #[test]
    fn profiles_agree_before_sigma() {
        let cat = PotentialCatalog::new(vec![PotentialShape::vertical_bar(4, 0.004)], 1.0).unwrap();
        let p = ModelParams::constrained(4, 2, 1.0).unwrap().with_catalog(cat);
        let mut saw_sigma = false;
        for s in 0..40 {
            let tr = couple(&Configuration::flat(4, 0), 30.0, &p, RngSpec::new(s, 1)).unwrap();
            let sigma = tr.sigma.unwrap_or(f64::INFINITY);
            saw_sigma |= tr.sigma.is_some();
            let mut a = tr.start.clone();
            let mut b = tr.start.clone();
            for e in &tr.events {
                if e.phi_moved {
                    a.apply_in_place(e.mv);
                }
                if e.phibar_moved {
                    b.apply_in_place(e.mv);
                }
                if e.time < sigma {
                    assert_eq!(a, b);
                }
            }
            assert_eq!(a, tr.end_phi);
            assert_eq!(b, tr.end_phibar);
        }
        assert!(saw_sigma);
    }

    #[test]
    fn reproducible() {
        let p = ModelParams::constrained(3, 1, 1.0).unwrap();
        let a = couple(&Configuration::flat(3, 0), 20.0, &p, RngSpec::new(5, 5)).unwrap();
        let b = couple(&Configuration::flat(3, 0), 20.0, &p, RngSpec::new(5, 5)).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.sigma, b.sigma);
    }
}
