use serde::{Deserialize, Serialize};
use std::fmt;

/// Integer height profile `(phi_1, ..., phi_L)` of the interface.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<i32>);

impl Configuration {
    pub fn flat(len: usize, height: i32) -> Self {
        Configuration(vec![height; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn heights(&self) -> &[i32] {
        &self.0
    }

    /// Height at 1-based site `k`.
    pub fn at(&self, k: usize) -> i32 {
        self.0[k - 1]
    }

    pub fn sup_norm(&self) -> i32 {
        self.0.iter().map(|h| h.abs()).max().unwrap_or(0)
    }

    pub fn shifted(&self, c: i32) -> Self {
        Configuration(self.0.iter().map(|h| h + c).collect())
    }

    pub fn reflected(&self) -> Self {
        Configuration(self.0.iter().map(|h| -h).collect())
    }

    /// `phi ± delta_k`.
    pub fn apply(&self, mv: Move) -> Self {
        let mut next = self.clone();
        next.apply_in_place(mv);
        next
    }

    pub fn apply_in_place(&mut self, mv: Move) {
        self.0[mv.site - 1] += mv.direction.delta();
    }

    pub fn to_gradient(&self) -> GradientConfiguration {
        let mut steps = Vec::with_capacity(self.0.len());
        let mut prev = 0;
        for (i, &h) in self.0.iter().enumerate() {
            steps.push(if i == 0 { h } else { h - prev });
            prev = h;
        }
        GradientConfiguration(steps)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, h) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, ")")
    }
}

/// Base height followed by the discrete derivatives:
/// `eta_1 = phi_1`, `eta_k = phi_k - phi_{k-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientConfiguration(pub Vec<i32>);

impl GradientConfiguration {
    pub fn steps(&self) -> &[i32] {
        &self.0
    }

    /// Partial sums, the inverse of [`Configuration::to_gradient`].
    pub fn to_configuration(&self) -> Configuration {
        let mut acc = 0;
        Configuration(
            self.0
                .iter()
                .map(|s| {
                    acc += s;
                    acc
                })
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Down,
    Up,
}

impl Direction {
    pub fn delta(self) -> i32 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }

    pub fn from_delta(d: i32) -> Option<Self> {
        match d {
            1 => Some(Direction::Up),
            -1 => Some(Direction::Down),
            _ => None,
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// Single-site update `phi -> phi ± delta_site`, `site` is 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Move {
    pub site: usize,
    pub direction: Direction,
}

impl Move {
    pub fn up(site: usize) -> Self {
        Move { site, direction: Direction::Up }
    }

    pub fn down(site: usize) -> Self {
        Move { site, direction: Direction::Down }
    }

    pub fn reverse(self) -> Self {
        Move { site: self.site, direction: self.direction.reverse() }
    }

    /// All `2L` moves, ordered by (site, direction) with `Down` first.
    pub fn all(len: usize) -> impl Iterator<Item = Move> {
        (1..=len).flat_map(|k| [Move::down(k), Move::up(k)])
    }

    /// Position of this move in the order produced by [`Move::all`].
    pub fn slot(self) -> usize {
        2 * (self.site - 1) + usize::from(self.direction == Direction::Up)
    }

    pub fn from_slot(slot: usize) -> Self {
        let site = slot / 2 + 1;
        if slot.is_multiple_of(2) {
            Move::down(site)
        } else {
            Move::up(site)
        }
    }
}
