//! Finite catalog of translation-invariant long-range potentials.
//!
//! Each shape is a connected set of dual sites carrying one weight; every
//! integer translate of the shape carries the same weight. The catalog also
//! declares the decay mass `m` against which the per-site tail bound
//! `sum_{Lambda ∋ p, diam >= k} |w| <= exp(-m k)` is checked.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use super::geometry::DualSite;
use crate::error::{Result, SosError};

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialShape {
    sites: Vec<DualSite>,
    weight: f64,
    diameter: f64,
    bbox: (i32, i32, i32, i32),
}

impl PotentialShape {
    /// Sites are deduplicated and sorted; the set must be nonempty and
    /// connected through nearest-neighbour bonds of the dual lattice.
    pub fn new(sites: impl IntoIterator<Item = DualSite>, weight: f64) -> Result<Self> {
        Self::build(sites, weight, 0)
    }

    fn build(sites: impl IntoIterator<Item = DualSite>, weight: f64, index: usize) -> Result<Self> {
        let set: BTreeSet<DualSite> = sites.into_iter().collect();
        if set.is_empty() {
            return Err(SosError::EmptyShape { index });
        }
        if !weight.is_finite() {
            return Err(SosError::Catalog(format!("shape #{index} has a non-finite weight")));
        }
        if !is_connected(&set) {
            return Err(SosError::DisconnectedShape { index });
        }
        let sites: Vec<DualSite> = set.into_iter().collect();
        let mut d2max = 0i64;
        for a in &sites {
            for b in &sites {
                let dx = (a.i - b.i) as i64;
                let dy = (a.j - b.j) as i64;
                d2max = d2max.max(dx * dx + dy * dy);
            }
        }
        let bbox = (
            sites.iter().map(|s| s.i).min().unwrap(),
            sites.iter().map(|s| s.i).max().unwrap(),
            sites.iter().map(|s| s.j).min().unwrap(),
            sites.iter().map(|s| s.j).max().unwrap(),
        );
        Ok(PotentialShape { sites, weight, diameter: (d2max as f64).sqrt(), bbox })
    }

    pub fn single(weight: f64) -> Self {
        Self::new([DualSite::new(0, 0)], weight).expect("single site is connected")
    }

    /// Straight horizontal run of `n` sites.
    pub fn horizontal_bar(n: i32, weight: f64) -> Self {
        Self::new((0..n).map(|i| DualSite::new(i, 0)), weight).expect("bar is connected")
    }

    /// Straight vertical run of `n` sites.
    pub fn vertical_bar(n: i32, weight: f64) -> Self {
        Self::new((0..n).map(|j| DualSite::new(0, j)), weight).expect("bar is connected")
    }

    pub fn sites(&self) -> &[DualSite] {
        &self.sites
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Euclidean diameter; 0 for a single site.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `(min i, max i, min j, max j)` of the offsets.
    pub fn bbox(&self) -> (i32, i32, i32, i32) {
        self.bbox
    }
}

fn is_connected(set: &BTreeSet<DualSite>) -> bool {
    let start = match set.iter().next() {
        Some(s) => *s,
        None => return false,
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = s.offset(di, dj);
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialCatalog {
    shapes: Vec<PotentialShape>,
    decay_mass: f64,
}

impl PotentialCatalog {
    pub fn new(shapes: Vec<PotentialShape>, decay_mass: f64) -> Result<Self> {
        if !(decay_mass > 0.0) || !decay_mass.is_finite() {
            return Err(SosError::InvalidParam {
                field: "decay_mass",
                reason: format!("must be positive and finite, got {decay_mass}"),
            });
        }
        Ok(PotentialCatalog { shapes, decay_mass })
    }

    /// The zero potential.
    pub fn empty() -> Self {
        PotentialCatalog { shapes: Vec::new(), decay_mass: 1.0 }
    }

    pub fn shapes(&self) -> &[PotentialShape] {
        &self.shapes
    }

    pub fn decay_mass(&self) -> f64 {
        self.decay_mass
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty() || self.shapes.iter().all(|s| s.weight == 0.0)
    }

    pub fn max_diameter(&self) -> f64 {
        self.shapes.iter().map(|s| s.diameter).fold(0.0, f64::max)
    }

    /// Exact check of the per-site tail bound for every integer `k >= 1`.
    ///
    /// By translation invariance the translates of a shape containing a
    /// fixed dual site are in bijection with its sites, so the left-hand side
    /// is the same at every site: `sum_{diam(s) >= k} |s| * |w_s|`.
    pub fn validate(&self) -> DecayReport {
        let kmax = self.max_diameter().floor() as u32;
        let mut rows = Vec::new();
        let mut first_failure = None;
        for k in 1..=kmax.max(1) {
            let tail: f64 = self
                .shapes
                .iter()
                .filter(|s| s.diameter >= k as f64)
                .map(|s| s.sites.len() as f64 * s.weight.abs())
                .sum();
            let bound = (-self.decay_mass * k as f64).exp();
            let passed = tail <= bound;
            if !passed && first_failure.is_none() {
                first_failure = Some(k);
            }
            rows.push(DecayRow { k, tail, bound, passed });
        }
        DecayReport { decay_mass: self.decay_mass, rows, first_failure }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: CatalogDoc = serde_json::from_str(text)?;
        let mut shapes = Vec::with_capacity(doc.shapes.len());
        for (index, s) in doc.shapes.into_iter().enumerate() {
            let mut sites = Vec::with_capacity(s.sites.len());
            for [x, y] in s.sites {
                let x2 = parse_half(&x)?;
                let y2 = parse_half(&y)?;
                let site = DualSite::from_doubled(x2, y2).ok_or_else(|| {
                    SosError::Catalog(format!("shape #{index}: ({x}, {y}) is not a dual site"))
                })?;
                sites.push(site);
            }
            shapes.push(PotentialShape::build(sites, s.weight, index)?);
        }
        PotentialCatalog::new(shapes, doc.decay_mass)
    }

    pub fn to_json_string(&self) -> String {
        let doc = CatalogDoc {
            decay_mass: self.decay_mass,
            shapes: self
                .shapes
                .iter()
                .map(|s| ShapeDoc {
                    sites: s
                        .sites
                        .iter()
                        .map(|d| {
                            let (x, y) = d.doubled();
                            [format!("{x}/2"), format!("{y}/2")]
                        })
                        .collect(),
                    weight: s.weight,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("catalog serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Parses `"p/2"` into `p`.
fn parse_half(s: &str) -> Result<i64> {
    let bad = || SosError::Catalog(format!("coordinate `{s}` is not of the form \"p/2\""));
    let (num, den) = s.trim().split_once('/').ok_or_else(bad)?;
    if den.trim() != "2" {
        return Err(bad());
    }
    num.trim().parse::<i64>().map_err(|_| bad())
}

#[derive(Serialize, Deserialize)]
struct CatalogDoc {
    decay_mass: f64,
    shapes: Vec<ShapeDoc>,
}

#[derive(Serialize, Deserialize)]
struct ShapeDoc {
    sites: Vec<[String; 2]>,
    weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub k: u32,
    pub tail: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub decay_mass: f64,
    pub rows: Vec<DecayRow>,
    /// Smallest `k` at which the tail exceeds `exp(-m k)`.
    pub first_failure: Option<u32>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_catalog_passes_for_any_mass() {
        for m in [0.01, 1.0, 50.0] {
            let cat = PotentialCatalog::new(vec![], m).unwrap();
            assert!(cat.validate().passed());
        }
    }

    #[test]
    fn single_site_has_zero_diameter_and_passes() {
        let m = 2.0;
        let cat = PotentialCatalog::new(vec![PotentialShape::single((-m as f64).exp())], m).unwrap();
        assert_eq!(cat.shapes()[0].diameter(), 0.0);
        assert!(cat.validate().passed());
    }

    #[test]
    fn domino_fails_at_first_k_it_exceeds() {
        // diameter 1: tail at k=1 is 2|w|
        let m = 2.0;
        let ok = PotentialCatalog::new(vec![PotentialShape::horizontal_bar(2, 0.49 * (-m as f64).exp())], m).unwrap();
        assert!(ok.validate().passed());
        let bad = PotentialCatalog::new(vec![PotentialShape::horizontal_bar(2, 0.51 * (-m as f64).exp())], m).unwrap();
        assert_eq!(bad.validate().first_failure, Some(1));
    }

    #[test]
    fn straight_tromino_fails_at_two() {
        // diameter 2, tail 3|w| at k = 1, 2; pick e^{-2m} < 3|w| <= e^{-m}
        let m = 2.0;
        let w = (-2.0 * m as f64).exp();
        let cat = PotentialCatalog::new(vec![PotentialShape::vertical_bar(3, w)], m).unwrap();
        let rep = cat.validate();
        assert!(rep.rows[0].passed);
        assert_eq!(rep.first_failure, Some(2));
    }

    #[test]
    fn disconnected_shape_rejected_by_index() {
        let doc = r#"{"decay_mass": 1.0, "shapes": [
            {"sites": [["1/2","1/2"]], "weight": 0.1},
            {"sites": [["1/2","1/2"], ["5/2","1/2"]], "weight": 0.1}]}"#;
        match PotentialCatalog::from_json_str(doc) {
            Err(SosError::DisconnectedShape { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_roundtrip_and_rational_parsing() {
        let doc = r#"{"decay_mass": 3.0, "shapes": [
            {"sites": [["-1/2","1/2"], ["1/2","1/2"]], "weight": 0.01}]}"#;
        let cat = PotentialCatalog::from_json_str(doc).unwrap();
        assert_eq!(cat.shapes()[0].sites(), &[DualSite::new(-1, 0), DualSite::new(0, 0)]);
        let again = PotentialCatalog::from_json_str(&cat.to_json_string()).unwrap();
        assert_eq!(again, cat);
        assert!(PotentialCatalog::from_json_str(r#"{"decay_mass":1,"shapes":[{"sites":[["1/3","1/2"]],"weight":1}]}"#).is_err());
        assert!(PotentialCatalog::from_json_str(r#"{"decay_mass":1,"shapes":[{"sites":[["2/2","1/2"]],"weight":1}]}"#).is_err());
    }
}
