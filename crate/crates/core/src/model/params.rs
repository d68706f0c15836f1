use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::catalog::PotentialCatalog;
use super::config::Configuration;
use crate::error::{Result, SosError};

/// Which Gibbs measure the weights and rates refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// `1{|phi|_inf <= M} exp(-beta H - W^M)`.
    Constrained,
    /// `1{|phi_1| <= M} exp(-beta H - W^inf)`.
    Auxiliary,
}

/// Height bound `M`, or the unbounded vertical strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightBound {
    Finite(u32),
    Infinite,
}

impl HeightBound {
    pub fn finite(self) -> Option<i32> {
        match self {
            HeightBound::Finite(m) => Some(m as i32),
            HeightBound::Infinite => None,
        }
    }
}

/// Region in which the long-range translates must lie: the box `V_L^M`
/// of half-height `M + 1/2`, or the strip `V_L^inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strip {
    Box(u32),
    Infinite,
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub len: usize,
    pub bound: HeightBound,
    pub beta: f64,
    pub catalog: Arc<PotentialCatalog>,
    pub kind: MeasureKind,
    pub region_eps: f64,
    pub region_alpha: f64,
}

impl ModelParams {
    pub fn new(len: usize, bound: HeightBound, beta: f64, kind: MeasureKind) -> Result<Self> {
        let p = ModelParams {
            len,
            bound,
            beta,
            catalog: Arc::new(PotentialCatalog::empty()),
            kind,
            region_eps: 0.1,
            region_alpha: 0.2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn constrained(len: usize, m: u32, beta: f64) -> Result<Self> {
        Self::new(len, HeightBound::Finite(m), beta, MeasureKind::Constrained)
    }

    pub fn auxiliary(len: usize, m: u32, beta: f64) -> Result<Self> {
        Self::new(len, HeightBound::Finite(m), beta, MeasureKind::Auxiliary)
    }

    pub fn with_catalog(mut self, catalog: PotentialCatalog) -> Self {
        self.catalog = Arc::new(catalog);
        self
    }

    pub fn with_shared_catalog(mut self, catalog: Arc<PotentialCatalog>) -> Self {
        self.catalog = catalog;
        self
    }

    pub fn with_region(mut self, eps: f64, alpha: f64) -> Result<Self> {
        self.region_eps = eps;
        self.region_alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_kind(&self, kind: MeasureKind) -> Result<Self> {
        let mut p = self.clone();
        p.kind = kind;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.len == 0 {
            return Err(SosError::InvalidParam { field: "L", reason: "must be at least 1".into() });
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(SosError::InvalidParam { field: "beta", reason: format!("must be finite and >= 0, got {}", self.beta) });
        }
        match (self.kind, self.bound) {
            (MeasureKind::Constrained, HeightBound::Infinite) => {
                return Err(SosError::InvalidParam { field: "M", reason: "constrained measure needs a finite height bound".into() })
            }
            (_, HeightBound::Finite(0)) => {
                return Err(SosError::InvalidParam { field: "M", reason: "must be positive".into() })
            }
            _ => {}
        }
        if !(self.region_eps > 0.0 && self.region_eps < 1.0) {
            return Err(SosError::InvalidParam { field: "eps", reason: format!("must lie in (0,1), got {}", self.region_eps) });
        }
        if !(self.region_alpha > 0.0 && self.region_alpha < 1.0) {
            return Err(SosError::InvalidParam { field: "alpha", reason: format!("must lie in (0,1), got {}", self.region_alpha) });
        }
        Ok(())
    }

    pub fn strip(&self) -> Strip {
        match (self.kind, self.bound) {
            (MeasureKind::Constrained, HeightBound::Finite(m)) => Strip::Box(m),
            _ => Strip::Infinite,
        }
    }

    /// Is `phi` in the support of the measure selected by `kind`?
    pub fn in_support(&self, heights: &[i32]) -> bool {
        match (self.kind, self.bound.finite()) {
            (_, None) => true,
            (MeasureKind::Constrained, Some(m)) => heights.iter().all(|h| h.abs() <= m),
            (MeasureKind::Auxiliary, Some(m)) => heights[0].abs() <= m,
        }
    }

    pub fn check_len(&self, cfg: &Configuration) -> Result<()> {
        if cfg.len() != self.len {
            return Err(SosError::LengthMismatch { expected: self.len, got: cfg.len() });
        }
        Ok(())
    }

    /// Largest integer height allowed inside `A = {|phi|_inf <= (1-eps) L/2}`.
    pub fn region_a_height(&self) -> i32 {
        ((1.0 - self.region_eps) * self.len as f64 / 2.0 + 1e-12).floor() as i32
    }

    /// Largest integer height allowed inside `B = {|phi|_inf <= alpha L}`.
    pub fn region_b_height(&self) -> i32 {
        (self.region_alpha * self.len as f64 + 1e-12).floor() as i32
    }

    pub fn in_region_a(&self, heights: &[i32]) -> bool {
        let a = self.region_a_height();
        heights.iter().all(|h| h.abs() <= a)
    }

    pub fn in_region_b(&self, heights: &[i32]) -> bool {
        let b = self.region_b_height();
        heights.iter().all(|h| h.abs() <= b)
    }

    /// Serializable summary, echoed at the top of every output file.
    pub fn echo(&self) -> serde_json::Value {
        let catalog = if self.catalog.is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(&self.catalog.to_json_string()).expect("catalog JSON reparses")
        };
        serde_json::json!({
            "L": self.len,
            "M": self.bound,
            "beta": self.beta,
            "kind": self.kind,
            "eps": self.region_eps,
            "alpha": self.region_alpha,
            "catalog": catalog,
        })
    }

    /// The box size `M = floor(L/2)` used by the exit-time statements.
    pub fn half_box(len: usize) -> u32 {
        (len / 2).max(1) as u32
    }
}
