//! Contour of a height profile and the dual-lattice sites attached to it.
//!
//! A dual site `(i, j)` stands for the point `(i + 1/2, j + 1/2)`. All
//! distances are evaluated exactly in doubled coordinates, where dual sites
//! have odd coordinates and the contour lies on even lines. A site is
//! attached when its distance to the contour is `1/2` or `1/sqrt(2)`, i.e.
//! a doubled squared distance of 1 or 2. No dual site is closer than `1/2`.

use serde::{Deserialize, Serialize};

use super::config::Move;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualSite {
    pub i: i32,
    pub j: i32,
}

impl DualSite {
    pub const fn new(i: i32, j: i32) -> Self {
        DualSite { i, j }
    }

    /// Builds a site from its doubled (odd) coordinates.
    pub fn from_doubled(x2: i64, y2: i64) -> Option<Self> {
        if x2.rem_euclid(2) != 1 || y2.rem_euclid(2) != 1 {
            return None;
        }
        Some(DualSite { i: ((x2 - 1) / 2) as i32, j: ((y2 - 1) / 2) as i32 })
    }

    pub fn doubled(self) -> (i64, i64) {
        (2 * self.i as i64 + 1, 2 * self.j as i64 + 1)
    }

    pub fn x(self) -> f64 {
        self.i as f64 + 0.5
    }

    pub fn y(self) -> f64 {
        self.j as f64 + 0.5
    }

    pub fn offset(self, di: i32, dj: i32) -> Self {
        DualSite { i: self.i + di, j: self.j + dj }
    }
}

/// Axis-aligned closed segment in doubled coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub x0: i64,
    pub x1: i64,
    pub y0: i64,
    pub y1: i64,
}

impl Segment {
    /// Squared distance from a point, doubled units (4x the true value).
    pub fn dist2(&self, px: i64, py: i64) -> i64 {
        let dx = axis_gap(px, self.x0, self.x1);
        let dy = axis_gap(py, self.y0, self.y1);
        dx * dx + dy * dy
    }
}

fn axis_gap(p: i64, lo: i64, hi: i64) -> i64 {
    if p < lo {
        lo - p
    } else if p > hi {
        p - hi
    } else {
        0
    }
}

/// The contour as a list of segments: `L` horizontal ones followed by the
/// `L - 1` vertical ones (degenerate points included for flat bonds).
pub fn contour(heights: &[i32]) -> Vec<Segment> {
    let len = heights.len() as i64;
    let mut segs = Vec::with_capacity(2 * heights.len());
    for (c, &h) in (1..=len).zip(heights) {
        segs.push(horizontal(c, h));
    }
    for c in 1..len {
        let a = heights[(c - 1) as usize];
        let b = heights[c as usize];
        segs.push(vertical(c, a, b));
    }
    segs
}

fn horizontal(c: i64, h: i32) -> Segment {
    Segment { x0: 2 * (c - 1), x1: 2 * c, y0: 2 * h as i64, y1: 2 * h as i64 }
}

fn vertical(c: i64, a: i32, b: i32) -> Segment {
    Segment { x0: 2 * c, x1: 2 * c, y0: 2 * a.min(b) as i64, y1: 2 * a.max(b) as i64 }
}

/// Heights with an optional single-site override, so that `phi ± delta_k`
/// can be inspected without cloning.
#[derive(Clone, Copy)]
pub struct HeightView<'a> {
    heights: &'a [i32],
    patch: Option<(usize, i32)>,
}

impl<'a> HeightView<'a> {
    pub fn new(heights: &'a [i32]) -> Self {
        HeightView { heights, patch: None }
    }

    pub fn after(heights: &'a [i32], mv: Move) -> Self {
        let k = mv.site - 1;
        HeightView { heights, patch: Some((k, heights[k] + mv.direction.delta())) }
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    /// Height at 0-based index.
    #[inline]
    pub fn get(&self, idx: usize) -> i32 {
        match self.patch {
            Some((k, h)) if k == idx => h,
            _ => self.heights[idx],
        }
    }

    /// O(1) membership test in the attached set: only the segments whose
    /// x-extent comes within one doubled unit of the site can be that close.
    pub fn is_attached(&self, site: DualSite) -> bool {
        let len = self.len() as i64;
        let (px, py) = site.doubled();
        let i = site.i as i64;
        for c in i.max(1)..=(i + 2).min(len) {
            if horizontal(c, self.get((c - 1) as usize)).dist2(px, py) <= 2 {
                return true;
            }
        }
        for c in i.max(1)..=(i + 1).min(len - 1) {
            let seg = vertical(c, self.get((c - 1) as usize), self.get(c as usize));
            if seg.dist2(px, py) <= 2 {
                return true;
            }
        }
        false
    }

    /// The attached set, sorted.
    pub fn attached_sites(&self) -> Vec<DualSite> {
        let len = self.len() as i32;
        let mut out = Vec::with_capacity(8 * self.len());
        for c in 1..=len {
            let h = self.get((c - 1) as usize);
            for i in (c - 2)..=c {
                out.push(DualSite::new(i, h - 1));
                out.push(DualSite::new(i, h));
            }
        }
        for c in 1..len {
            let a = self.get((c - 1) as usize);
            let b = self.get(c as usize);
            for j in (a.min(b) - 1)..=a.max(b) {
                out.push(DualSite::new(c - 1, j));
                out.push(DualSite::new(c, j));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn attached_sites(heights: &[i32]) -> Vec<DualSite> {
    HeightView::new(heights).attached_sites()
}

/// Dual sites whose attachment can change under `mv`, given the current
/// height `h` at the moved site. The window is the same for both directions.
pub fn move_window(mv: Move, h: i32) -> impl Iterator<Item = DualSite> {
    let k = mv.site as i32;
    (k - 2..=k).flat_map(move |i| (h - 2..=h + 1).map(move |j| DualSite::new(i, j)))
}
