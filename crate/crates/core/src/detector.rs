//! Single and multi-circle detection pipelines.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::CircleParams;
use crate::harmony_search::{self, HsaConfig};
use crate::imaging::{EdgeMap, GrayImage};
use crate::objective::{evaluate, CircleObjective, Fitness};
use crate::raster::rasterize_circle;

/// Version of the JSON report layout produced by [`DetectionReport::to_json`].
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub hsa: HsaConfig,
    /// Acceptance ceiling on `J`.
    pub m_th: f64,
    pub max_circles: usize,
    /// Half-width in pixels of the annulus removed around a detected circle.
    pub mask_band: f64,
    pub r_min: f64,
    /// Minimum matched perimeter fraction for validation.
    pub coverage_min: f64,
    /// Largest tolerated angular gap between matched perimeter pixels, degrees.
    pub max_gap_deg: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let m_th = 0.1;
        Self {
            hsa: HsaConfig::default(),
            m_th,
            max_circles: 10,
            mask_band: 2.0,
            r_min: 5.0,
            coverage_min: 1.0 - m_th,
            max_gap_deg: 90.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.m_th > 0.0 && self.m_th < 1.0) {
            return Err(format!("m_th must lie in (0, 1), got {}", self.m_th));
        }
        if self.max_circles < 1 {
            return Err("max_circles must be at least 1".into());
        }
        if !(self.mask_band >= 1.0) {
            return Err(format!("mask_band must be >= 1, got {}", self.mask_band));
        }
        if !(self.r_min >= 1.0) {
            return Err(format!("r_min must be >= 1, got {}", self.r_min));
        }
        if !(self.coverage_min > 0.0 && self.coverage_min <= 1.0) {
            return Err(format!(
                "coverage_min must lie in (0, 1], got {}",
                self.coverage_min
            ));
        }
        if !(self.max_gap_deg > 0.0) {
            return Err(format!("max_gap_deg must be positive, got {}", self.max_gap_deg));
        }
        self.hsa
            .for_edges(3)
            .validate()
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedCircle {
    pub params: CircleParams<f64>,
    pub j_value: f64,
    pub n_s: usize,
    /// 1 for the best detection.
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionStatus {
    Found,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub circles: Vec<DetectedCircle>,
    pub status: DetectionStatus,
    /// Wall-clock seconds spent detecting.
    pub elapsed: f64,
    pub evaluations: usize,
}

#[derive(Serialize, Deserialize)]
struct ReportCircleJson {
    x0: f64,
    y0: f64,
    r: f64,
    j: f64,
    rank: usize,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    schema_version: u32,
    status: DetectionStatus,
    circles: Vec<ReportCircleJson>,
    elapsed_s: Option<f64>,
    evaluations: usize,
}

impl DetectionReport {
    fn from_circles(mut circles: Vec<DetectedCircle>, elapsed: f64, evaluations: usize) -> Self {
        circles.sort_by(|a, b| a.j_value.total_cmp(&b.j_value));
        for (i, c) in circles.iter_mut().enumerate() {
            c.rank = i + 1;
        }
        let status = if circles.is_empty() {
            DetectionStatus::None
        } else {
            DetectionStatus::Found
        };
        Self {
            circles,
            status,
            elapsed,
            evaluations,
        }
    }

    /// Everything except timing agrees.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.circles == other.circles
            && self.status == other.status
            && self.evaluations == other.evaluations
    }

    /// JSON document; `elapsed_s` is null unless `with_timing`, so that
    /// seeded runs serialize byte-identically.
    pub fn to_json(&self, with_timing: bool) -> String {
        let doc = ReportJson {
            schema_version: REPORT_SCHEMA_VERSION,
            status: self.status,
            circles: self
                .circles
                .iter()
                .map(|c| ReportCircleJson {
                    x0: c.params.x0,
                    y0: c.params.y0,
                    r: c.params.r,
                    j: c.j_value,
                    rank: c.rank,
                })
                .collect(),
            elapsed_s: with_timing.then_some(self.elapsed),
            evaluations: self.evaluations,
        };
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }
}

/// Best circle found by one optimizer run, if the edge map admits a search.
fn best_circle(edges: &EdgeMap, cfg: &DetectorConfig, seed: u64) -> Option<(CircleParams<f64>, Fitness, usize)> {
    let objective = CircleObjective::new(edges, cfg.r_min);
    let hsa = cfg.hsa.for_edges(edges.len()).with_seed(seed);
    let outcome = harmony_search::run(&hsa, |t| objective.score(t)).ok()?;
    let circle = objective.circle(&outcome.best)?;
    Some((circle, outcome.fitness, outcome.trace.evaluations))
}

/// One optimizer run; reports the best circle when its `J` is within `m_th`.
pub fn detect_single(edges: &EdgeMap, cfg: &DetectorConfig) -> DetectionReport {
    let start = Instant::now();
    let mut circles = Vec::new();
    let mut evaluations = 0;
    if let Some((params, fitness, evals)) = best_circle(edges, cfg, cfg.hsa.seed) {
        evaluations = evals;
        if fitness.j_value <= cfg.m_th {
            circles.push(DetectedCircle {
                params,
                j_value: fitness.j_value,
                n_s: fitness.n_s,
                rank: 1,
            });
        }
    }
    DetectionReport::from_circles(circles, start.elapsed().as_secs_f64(), evaluations)
}

/// Repeated detection with masking: each accepted circle is erased from a
/// working copy of the map before the next run. Iteration `k` seeds the
/// optimizer with `seed + k`. Stops when the best `J` exceeds `m_th`, fewer
/// than three edges remain, masking removes nothing, or `max_circles`
/// iterations have run. Circles failing [`validate_circle`] are masked but
/// not reported.
pub fn detect_multi(edges: &EdgeMap, cfg: &DetectorConfig) -> DetectionReport {
    let start = Instant::now();
    let mut work = edges.clone();
    let mut circles = Vec::new();
    let mut evaluations = 0;
    for iteration in 0..cfg.max_circles {
        let seed = cfg.hsa.seed.wrapping_add(iteration as u64);
        let Some((params, fitness, evals)) = best_circle(&work, cfg, seed) else {
            break;
        };
        evaluations += evals;
        if fitness.j_value > cfg.m_th {
            break;
        }
        if validate_circle(&work, &params, cfg) {
            circles.push(DetectedCircle {
                params,
                j_value: fitness.j_value,
                n_s: fitness.n_s,
                rank: 0,
            });
        }
        let before = work.len();
        work = mask_circle(&work, &params, cfg.mask_band);
        if work.len() == before {
            break;
        }
    }
    DetectionReport::from_circles(circles, start.elapsed().as_secs_f64(), evaluations)
}

/// Removes every edge point within `band` pixels of the circumference.
pub fn mask_circle(edges: &EdgeMap, c: &CircleParams<f64>, band: f64) -> EdgeMap {
    edges.retain(|p| {
        c.radial_offset(f64::from(p.x), f64::from(p.y)).abs() > band
    })
}

/// Coverage plus continuity check: at least `coverage_min` of the perimeter
/// must be present, and no angular gap between consecutive matched perimeter
/// pixels may exceed `max_gap_deg`.
pub fn validate_circle(edges: &EdgeMap, c: &CircleParams<f64>, cfg: &DetectorConfig) -> bool {
    let Ok(s) = rasterize_circle(c, edges.width(), edges.height()) else {
        return false;
    };
    let fitness = evaluate(edges, c);
    if fitness.n_s == 0 || fitness.coverage() < cfg.coverage_min {
        return false;
    }
    let (cx, cy) = (c.x0.round(), c.y0.round());
    let mut angles: Vec<f64> = s
        .iter()
        .filter(|p| edges.contains(i64::from(p.x), i64::from(p.y)))
        .map(|p| (f64::from(p.y) - cy).atan2(f64::from(p.x) - cx).to_degrees())
        .collect();
    angles.sort_by(f64::total_cmp);
    max_angular_gap(&angles) <= cfg.max_gap_deg
}

/// Largest gap, wrap-around included, between sorted angles in degrees.
pub fn max_angular_gap(sorted: &[f64]) -> f64 {
    match sorted {
        [] => 360.0,
        [first, .., last] => sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(360.0 - (last - first), f64::max),
        [_] => 360.0,
    }
}

/// Dims the input into the lower half of the value range and draws the
/// detected circumferences at 255.
pub fn render_overlay(base: &GrayImage, report: &DetectionReport) -> GrayImage {
    let mut out = GrayImage::from_pixels(
        base.width(),
        base.height(),
        base.pixels().iter().map(|&v| v / 2).collect(),
    )
    .expect("same dimensions");
    for c in &report.circles {
        if let Ok(s) = rasterize_circle(&c.params, base.width(), base.height()) {
            for p in s.iter() {
                out.set(p.x as usize, p.y as usize, 255);
            }
        }
    }
    out
}
