//! Midpoint circle rasterization of candidate circles.

use std::ops::Deref;

use thiserror::Error;

use crate::geometry::CircleParams;
use crate::imaging::Point;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RasterError {
    #[error("radius {0} rounds below one pixel")]
    EmptyRadius(f64),
    #[error("non-finite circle parameters")]
    NonFinite,
}

/// The test set `S`: perimeter pixels of a candidate, clipped and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

impl Deref for PointSet {
    type Target = [Point];

    fn deref(&self) -> &[Point] {
        &self.points
    }
}

/// First-octant offsets `(x, y)` with `0 <= x <= y` of the integer midpoint
/// circle of the given radius, starting at `(0, radius)`.
///
/// The decision variable starts at `1 - r` and is the midpoint circle function
/// evaluated between the two candidate pixels, less one quarter.
pub fn octant_offsets(radius: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity((radius as usize) * 3 / 4 + 2);
    let (mut x, mut y) = (0i64, radius);
    let mut p = 1 - radius;
    out.push((x, y));
    while x < y {
        x += 1;
        if p < 0 {
            p += 2 * x + 1;
        } else {
            y -= 1;
            p += 2 * (x - y) + 1;
        }
        if x <= y {
            out.push((x, y));
        }
    }
    out
}

/// Mirrors a first-octant offset into all eight octants.
#[inline]
pub fn eight_way((x, y): (i64, i64)) -> [(i64, i64); 8] {
    [
        (x, y),
        (y, x),
        (y, -x),
        (x, -y),
        (-x, -y),
        (-y, -x),
        (-y, x),
        (-x, y),
    ]
}

/// Rasterizes `c` with the midpoint circle algorithm.
///
/// Center and radius are rounded to the nearest integer first. Pixels outside
/// `[0, width) x [0, height)` are dropped and seam duplicates removed; the
/// result is ordered row-major.
pub fn rasterize_circle<T: Real>(
    c: &CircleParams<T>,
    width: usize,
    height: usize,
) -> Result<PointSet, RasterError> {
    let (x0, y0, r) = (c.x0.to_f64_lossy(), c.y0.to_f64_lossy(), c.r.to_f64_lossy());
    if !(x0.is_finite() && y0.is_finite() && r.is_finite()) {
        return Err(RasterError::NonFinite);
    }
    let radius = r.round();
    if radius < 1.0 {
        return Err(RasterError::EmptyRadius(r));
    }
    // Beyond this every pixel of the ring is far outside any image.
    if radius > 1e8 || x0.abs() > 1e9 || y0.abs() > 1e9 {
        return Ok(PointSet::default());
    }
    let (cx, cy, radius) = (x0.round() as i64, y0.round() as i64, radius as i64);
    let (w, h) = (width as i64, height as i64);

    let mut points: Vec<Point> = octant_offsets(radius)
        .into_iter()
        .flat_map(eight_way)
        .map(|(dx, dy)| (cx + dx, cy + dy))
        .filter(|&(x, y)| x >= 0 && y >= 0 && x < w && y < h)
        .map(|(x, y)| Point::new(x as i32, y as i32))
        .collect();
    points.sort_unstable_by_key(|p| (p.y, p.x));
    points.dedup();
    Ok(PointSet { points })
}
