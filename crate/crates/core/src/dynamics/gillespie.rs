//! Event-driven realization of the single-site dynamics.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use std::io::Write;

use super::rates::jump_rate;
use super::rng::RngSpec;
use crate::error::{Result, SosError};
use crate::model::config::{Configuration, Move};
use crate::model::params::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub mv: Move,
    pub accepted: bool,
}

#[derive(Serialize)]
struct EventLine {
    t: f64,
    k: usize,
    d: i32,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start: Configuration,
    pub end: Configuration,
    pub events: Vec<TrajectoryEvent>,
    pub horizon: f64,
    /// Set when the total rate vanished before the horizon.
    pub absorbed: bool,
    pub rng: RngSpec,
}

impl Trajectory {
    /// JSON lines: a header echoing the parameters and seed, then one
    /// `{"t","k","d"}` object per event.
    pub fn write_jsonl<W: Write>(&self, params: &ModelParams, mut out: W) -> Result<()> {
        let header = serde_json::json!({
            "header": {
                "params": params.echo(),
                "seed": self.rng.seed,
                "stream": self.rng.stream,
                "start": self.start,
                "horizon": self.horizon,
                "absorbed": self.absorbed,
            }
        });
        writeln!(out, "{header}")?;
        for e in &self.events {
            let line = EventLine { t: e.time, k: e.mv.site, d: e.mv.direction.delta() };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
        Ok(())
    }
}

pub enum Step {
    Jump(Move),
    Horizon,
    Absorbed,
}

/// Gillespie state: current heights, the table of the `2L` rates and the
/// clock. Without long-range terms a move at `k` only changes the rates at
/// `k - 1, k, k + 1`; otherwise the table is rebuilt after every jump.
pub struct Gillespie<'a> {
    params: &'a ModelParams,
    heights: Vec<i32>,
    rates: Vec<f64>,
    time: f64,
    local: bool,
}

impl<'a> Gillespie<'a> {
    pub fn new(start: &Configuration, params: &'a ModelParams) -> Result<Self> {
        params.check_len(start)?;
        if !params.in_support(start.heights()) {
            return Err(SosError::Precondition(format!("start {start} has zero mass")));
        }
        let mut g = Gillespie {
            params,
            heights: start.0.clone(),
            rates: vec![0.0; 2 * start.len()],
            time: 0.0,
            local: params.catalog.is_empty(),
        };
        g.refresh_all();
        Ok(g)
    }

    fn refresh_all(&mut self) {
        for (slot, r) in self.rates.iter_mut().enumerate() {
            *r = jump_rate(&self.heights, Move::from_slot(slot), self.params);
        }
    }

    fn refresh_around(&mut self, site: usize) {
        let len = self.heights.len();
        for k in site.saturating_sub(1).max(1)..=(site + 1).min(len) {
            for mv in [Move::down(k), Move::up(k)] {
                self.rates[mv.slot()] = jump_rate(&self.heights, mv, self.params);
            }
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Advances to the next jump unless it falls after `horizon`, in which
    /// case the clock stops at `horizon`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, horizon: f64) -> Step {
        let total = self.total_rate();
        if total <= 0.0 {
            return Step::Absorbed;
        }
        let hold: f64 = Exp1.sample(rng);
        let t = self.time + hold / total;
        if t > horizon {
            self.time = horizon;
            return Step::Horizon;
        }
        self.time = t;
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut slot = None;
        for (s, &r) in self.rates.iter().enumerate() {
            if r > 0.0 {
                slot = Some(s);
                acc += r;
                if target < acc {
                    break;
                }
            }
        }
        let mv = Move::from_slot(slot.expect("positive total rate has a positive entry"));
        self.heights[mv.site - 1] += mv.direction.delta();
        if self.local {
            self.refresh_around(mv.site);
        } else {
            self.refresh_all();
        }
        Step::Jump(mv)
    }
}

/// Trajectory on `[0, horizon]`.
pub fn simulate(start: &Configuration, horizon: f64, params: &ModelParams, spec: RngSpec) -> Result<Trajectory> {
    if !(horizon >= 0.0) {
        return Err(SosError::InvalidParam { field: "horizon", reason: format!("must be >= 0, got {horizon}") });
    }
    let mut rng = spec.rng();
    let mut g = Gillespie::new(start, params)?;
    let mut events = Vec::new();
    let mut absorbed = false;
    loop {
        match g.step(&mut rng, horizon) {
            Step::Jump(mv) => events.push(TrajectoryEvent { time: g.time(), mv, accepted: true }),
            Step::Horizon => break,
            Step::Absorbed => {
                absorbed = true;
                break;
            }
        }
    }
    Ok(Trajectory { start: start.clone(), end: Configuration(g.heights.clone()), events, horizon, absorbed, rng: spec })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExitSample {
    /// Exit time, or the horizon when censored.
    pub time: f64,
    pub censored: bool,
    pub jumps: u64,
}

/// First time `|phi|_inf` exceeds the height of region `A`. Exits only
/// happen at jumps, so the returned time is exact.
pub fn exit_time_with<R: Rng + ?Sized>(
    start: &Configuration,
    params: &ModelParams,
    rng: &mut R,
    horizon: f64,
) -> Result<ExitSample> {
    if !params.in_region_a(start.heights()) {
        return Err(SosError::Precondition(format!("start {start} is not inside A")));
    }
    let a = params.region_a_height();
    let mut g = Gillespie::new(start, params)?;
    let mut jumps = 0;
    loop {
        match g.step(rng, horizon) {
            Step::Jump(mv) => {
                jumps += 1;
                if g.heights[mv.site - 1].abs() > a {
                    return Ok(ExitSample { time: g.time(), censored: false, jumps });
                }
            }
            Step::Horizon | Step::Absorbed => return Ok(ExitSample { time: horizon, censored: true, jumps }),
        }
    }
}

pub fn exit_time(start: &Configuration, params: &ModelParams, spec: RngSpec, horizon: f64) -> Result<ExitSample> {
    exit_time_with(start, params, &mut spec.rng(), horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{PotentialCatalog, PotentialShape};

    #[test]
    fn zero_horizon_is_empty() {
        let p = ModelParams::constrained(3, 2, 1.0).unwrap();
        let tr = simulate(&Configuration::flat(3, 0), 0.0, &p, RngSpec::new(1, 0)).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.end, tr.start);
    }

    #[test]
    fn deterministic_under_fixed_spec() {
        let cat = PotentialCatalog::new(vec![PotentialShape::horizontal_bar(2, 0.02)], 2.0).unwrap();
        let p = ModelParams::constrained(4, 2, 1.0).unwrap().with_catalog(cat);
        let a = simulate(&Configuration::flat(4, 0), 50.0, &p, RngSpec::new(9, 2)).unwrap();
        let b = simulate(&Configuration::flat(4, 0), 50.0, &p, RngSpec::new(9, 2)).unwrap();
        assert!(!a.events.is_empty());
        assert_eq!(a.events, b.events);
        let c = simulate(&Configuration::flat(4, 0), 50.0, &p, RngSpec::new(9, 3)).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn times_increase_and_moves_stay_in_support() {
        let p = ModelParams::constrained(3, 1, 0.5).unwrap();
        let tr = simulate(&Configuration::flat(3, 0), 200.0, &p, RngSpec::new(3, 0)).unwrap();
        let mut cfg = tr.start.clone();
        let mut last = 0.0;
        for e in &tr.events {
            assert!(e.time > last);
            last = e.time;
            cfg.apply_in_place(e.mv);
            assert!(cfg.sup_norm() <= 1);
        }
        assert_eq!(cfg, tr.end);
    }

    #[test]
    fn local_refresh_matches_full_table() {
        let p = ModelParams::constrained(5, 3, 1.1).unwrap();
        let mut g = Gillespie::new(&Configuration::flat(5, 0), &p).unwrap();
        let mut rng = RngSpec::new(4, 0).rng();
        for _ in 0..2000 {
            if let Step::Jump(_) = g.step(&mut rng, f64::INFINITY) {
                for slot in 0..10 {
                    assert_eq!(g.rates[slot], jump_rate(&g.heights, Move::from_slot(slot), &p));
                }
            }
        }
    }

    #[test]
    fn exit_precondition_and_censoring() {
        let p = ModelParams::constrained(2, 1, 1.0).unwrap().with_region(0.5, 0.2).unwrap();
        assert_eq!(p.region_a_height(), 0);
        assert!(exit_time(&Configuration(vec![1, 0]), &p, RngSpec::new(1, 0), 10.0).is_err());
        let s = exit_time(&Configuration(vec![0, 0]), &p, RngSpec::new(1, 0), 0.0).unwrap();
        assert!(s.censored);
        let s = exit_time(&Configuration(vec![0, 0]), &p, RngSpec::new(1, 0), 1e9).unwrap();
        assert!(!s.censored && s.jumps == 1);
    }

    #[test]
    fn jsonl_dump_has_header_and_events() {
        let p = ModelParams::constrained(2, 1, 1.0).unwrap();
        let tr = simulate(&Configuration::flat(2, 0), 5.0, &p, RngSpec::new(7, 0)).unwrap();
        let mut buf = Vec::new();
        tr.write_jsonl(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), tr.events.len() + 1);
        let head: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(head["header"]["seed"], 7);
        if let Some(l) = lines.get(1) {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            assert!(v["d"] == 1 || v["d"] == -1);
        }
    }
}
