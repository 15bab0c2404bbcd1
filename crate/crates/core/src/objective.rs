//! Perimeter-matching objective `J(C)`.

use serde::{Deserialize, Serialize};

use crate::geometry::{transform, CircleParams, Triplet};
use crate::imaging::EdgeMap;
use crate::raster::rasterize_circle;
use crate::scalar::Real;

/// Score of one candidate: `j_value = 1 - matches / n_s`, lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub j_value: f64,
    pub matches: usize,
    pub n_s: usize,
}

impl Fitness {
    /// Assigned to degenerate candidates and empty perimeters.
    pub const fn worst() -> Self {
        Self {
            j_value: 1.0,
            matches: 0,
            n_s: 0,
        }
    }

    pub fn from_counts(matches: usize, n_s: usize) -> Self {
        if n_s == 0 {
            return Self::worst();
        }
        assert!(matches <= n_s, "{matches} matches out of {n_s} points");
        Self {
            j_value: 1.0 - matches as f64 / n_s as f64,
            matches,
            n_s,
        }
    }

    /// Fraction of the perimeter found in the edge map.
    pub fn coverage(&self) -> f64 {
        1.0 - self.j_value
    }
}

/// `E(x, y)`: 1 when `(x, y)` is an in-bounds edge pixel, else 0.
#[inline]
pub fn edge_exists(edges: &EdgeMap, x: i64, y: i64) -> u8 {
    u8::from(edges.contains(x, y))
}

/// `J(C)` over the midpoint rasterization of `c`, clipped to the map.
pub fn evaluate<T: Real>(edges: &EdgeMap, c: &CircleParams<T>) -> Fitness {
    let Ok(s) = rasterize_circle(c, edges.width(), edges.height()) else {
        return Fitness::worst();
    };
    let matches = s
        .iter()
        .map(|p| usize::from(edge_exists(edges, i64::from(p.x), i64::from(p.y))))
        .sum();
    Fitness::from_counts(matches, s.len())
}

/// Scores index triplets against an edge map, treating collinear triplets
/// and radii outside `[r_min, r_max]` as worst.
#[derive(Debug, Clone, Copy)]
pub struct CircleObjective<'a> {
    edges: &'a EdgeMap,
    r_min: f64,
    r_max: f64,
}

impl<'a> CircleObjective<'a> {
    /// Radius bounded by `r_min` below and the image diagonal above.
    pub fn new(edges: &'a EdgeMap, r_min: f64) -> Self {
        Self {
            edges,
            r_min,
            r_max: edges.diagonal(),
        }
    }

    pub fn edges(&self) -> &'a EdgeMap {
        self.edges
    }

    pub fn feasible(&self, c: &CircleParams<f64>) -> bool {
        c.r >= self.r_min && c.r <= self.r_max
    }

    pub fn circle(&self, t: &Triplet) -> Option<CircleParams<f64>> {
        transform(t, self.edges).ok().filter(|c| self.feasible(c))
    }

    pub fn score(&self, t: &Triplet) -> Fitness {
        match self.circle(t) {
            Some(c) => evaluate(self.edges, &c),
            None => Fitness::worst(),
        }
    }
}
