//! Circle through three edge points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::EdgeMap;
use crate::scalar::Real;

/// Below this magnitude the determinant denominator marks the points as collinear.
pub const DET_EPSILON: f64 = 1e-9;

/// Center `(x0, y0)` and radius `r`, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CircleParams<T> {
    pub x0: T,
    pub y0: T,
    pub r: T,
}

impl<T: Real> CircleParams<T> {
    pub fn new(x0: T, y0: T, r: T) -> Self {
        Self { x0, y0, r }
    }

    pub fn is_valid(&self) -> bool {
        self.x0.is_finite() && self.y0.is_finite() && self.r.is_finite() && self.r > T::zero()
    }

    /// Signed distance from `(x, y)` to the circumference.
    pub fn radial_offset(&self, x: T, y: T) -> T {
        (x - self.x0).hypot(y - self.y0) - self.r
    }

    pub fn cast<U: Real>(&self) -> CircleParams<U> {
        CircleParams {
            x0: U::of(self.x0.to_f64_lossy()),
            y0: U::of(self.y0.to_f64_lossy()),
            r: U::of(self.r.to_f64_lossy()),
        }
    }
}

/// The three points are collinear or coincide; no finite circle passes through them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("degenerate triplet: points are collinear or not distinct")]
pub struct Degenerate;

/// Circumcircle of three points.
///
/// Coordinates are taken relative to `pi` before solving, which keeps the
/// result accurate far from the origin. The radius is measured to `pi`.
pub fn circle_from_points<T: Real>(
    pi: [T; 2],
    pj: [T; 2],
    pk: [T; 2],
) -> Result<CircleParams<T>, Degenerate> {
    let two = T::of(2.0);
    let (ux, uy) = (pj[0] - pi[0], pj[1] - pi[1]);
    let (vx, vy) = (pk[0] - pi[0], pk[1] - pi[1]);
    let cross = ux * vy - vx * uy;
    let denom = T::of(4.0) * cross;
    if !denom.is_finite() || denom.abs() < T::of(DET_EPSILON) {
        return Err(Degenerate);
    }
    let su = ux * ux + uy * uy;
    let sv = vx * vx + vy * vy;
    // det(A) and det(B) of the pairwise-differenced system, in local coordinates.
    let det_a = two * (su * vy - sv * uy);
    let det_b = two * (ux * sv - vx * su);
    let cx = det_a / denom;
    let cy = det_b / denom;
    let circle = CircleParams::new(pi[0] + cx, pi[1] + cy, cx.hypot(cy));
    if circle.is_valid() {
        Ok(circle)
    } else {
        Err(Degenerate)
    }
}

/// Three zero-based indexes into the edge vector: one harmony.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet(pub [usize; 3]);

impl Triplet {
    pub fn new(i: usize, j: usize, k: usize) -> Self {
        Self([i, j, k])
    }

    pub fn is_distinct(&self) -> bool {
        let [a, b, c] = self.0;
        a != b && a != c && b != c
    }
}

/// Maps a triplet of edge indexes to the circle through those edge points.
///
/// # Panics
///
/// If an index is out of range for `edges`.
pub fn transform(t: &Triplet, edges: &EdgeMap) -> Result<CircleParams<f64>, Degenerate> {
    let pts = edges.points();
    let [i, j, k] = t.0;
    assert!(
        i < pts.len() && j < pts.len() && k < pts.len(),
        "triplet {t:?} out of range for {} edge points",
        pts.len()
    );
    if !t.is_distinct() {
        return Err(Degenerate);
    }
    circle_from_points(pts[i].as_f64(), pts[j].as_f64(), pts[k].as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Point;

    fn close(c: CircleParams<f64>, x0: f64, y0: f64, r: f64) -> bool {
        (c.x0 - x0).abs() < 1e-12 && (c.y0 - y0).abs() < 1e-12 && (c.r - r).abs() < 1e-12
    }

    #[test]
    fn symmetric_triangle() {
        let c = circle_from_points([0.0, 0.0], [2.0, 0.0], [1.0, 1.0]).unwrap();
        assert!(close(c, 1.0, 0.0, 1.0), "{c:?}");
    }

    #[test]
    fn unit_circle() {
        let c = circle_from_points([1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]).unwrap();
        assert!(close(c, 0.0, 0.0, 1.0), "{c:?}");
    }

    #[test]
    fn collinear_and_coincident_are_degenerate() {
        assert_eq!(
            circle_from_points([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]),
            Err(Degenerate)
        );
        assert_eq!(
            circle_from_points([3.0, 4.0], [3.0, 4.0], [5.0, 1.0]),
            Err(Degenerate)
        );
    }

    #[test]
    fn works_in_single_precision() {
        let c = circle_from_points([1.0f32, 0.0], [0.0, 1.0], [-1.0, 0.0]).unwrap();
        assert!(c.x0.abs() < 1e-6 && c.y0.abs() < 1e-6 && (c.r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn transform_looks_up_points() {
        let edges = EdgeMap::from_points(
            8,
            8,
            [Point::new(1, 0), Point::new(0, 1), Point::new(2, 1)],
        )
        .unwrap();
        // row-major: (1,0), (0,1), (2,1)
        let c = transform(&Triplet::new(0, 1, 2), &edges).unwrap();
        let direct = circle_from_points([1.0, 0.0], [0.0, 1.0], [2.0, 1.0]).unwrap();
        assert_eq!(c, direct);
        assert_eq!(transform(&Triplet::new(0, 0, 2), &edges), Err(Degenerate));
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn transform_out_of_range_panics() {
        let edges = EdgeMap::from_points(4, 4, [Point::new(1, 1)]).unwrap();
        let _ = transform(&Triplet::new(0, 1, 2), &edges);
    }
}
