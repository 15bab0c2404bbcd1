//! Synthetic ground truth, error score, success rate, rank-sum test and the
//! repeated-trial harness.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::detector::{detect_multi, detect_single, DetectionReport, DetectorConfig};
use crate::geometry::CircleParams;
use crate::imaging::{EdgeMap, Point};
use crate::raster::rasterize_circle;
use crate::scalar::Real;

/// Pooled sample size up to which the rank-sum p-value is computed exactly.
pub const EXACT_RANK_SUM_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("cannot place {n_circles} disjoint circles with radii {r_min}..={r_max} in {width}x{height}")]
    Infeasible {
        n_circles: usize,
        r_min: u32,
        r_max: u32,
        width: usize,
        height: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub circles: Vec<CircleParams<f64>>,
}

/// Weights of the error score: `eta` on center shift, `mu` on radius mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorWeights<T> {
    pub eta: T,
    pub mu: T,
}

impl<T: Real> Default for ErrorWeights<T> {
    fn default() -> Self {
        Self {
            eta: T::of(0.05),
            mu: T::of(0.1),
        }
    }
}

/// `Es = eta * (|dx| + |dy|) + mu * |dr|`.
pub fn error_score<T: Real>(
    truth: &CircleParams<T>,
    detected: &CircleParams<T>,
    w: &ErrorWeights<T>,
) -> T {
    w.eta * ((truth.x0 - detected.x0).abs() + (truth.y0 - detected.y0).abs())
        + w.mu * (truth.r - detected.r).abs()
}

/// A detection succeeds when its error score is strictly below one.
pub fn success<T: Real>(es: T) -> bool {
    es < T::one()
}

/// Parameters of a synthetic edge map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub n_circles: usize,
    /// Inclusive integer radius range.
    pub r_range: (u32, u32),
    /// Fraction of all pixels drawn as uniform noise (with replacement).
    pub noise_density: f64,
    /// Minimum gap between circumferences of different circles.
    pub min_separation: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(width: usize, height: usize, n_circles: usize, r_range: (u32, u32), noise_density: f64, seed: u64) -> Self {
        Self {
            width,
            height,
            n_circles,
            r_range,
            noise_density,
            min_separation: 6.0,
            seed,
        }
    }

    /// Places the circles (integer centers and radii, fully inside the image,
    /// pairwise disjoint and non-nested) and renders them plus noise.
    pub fn generate(&self) -> Result<(EdgeMap, GroundTruth), BenchError> {
        let (r_lo, r_hi) = self.r_range;
        if r_lo < 1 || r_lo > r_hi {
            return Err(BenchError::InvalidArgument(format!(
                "bad radius range {r_lo}..={r_hi}"
            )));
        }
        if !(0.0..1.0).contains(&self.noise_density) {
            return Err(BenchError::InvalidArgument(format!(
                "noise density must lie in [0, 1), got {}",
                self.noise_density
            )));
        }
        let infeasible = || BenchError::Infeasible {
            n_circles: self.n_circles,
            r_min: r_lo,
            r_max: r_hi,
            width: self.width,
            height: self.height,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut circles = Vec::with_capacity(self.n_circles);
        const ATTEMPTS: usize = 20_000;
        let mut attempts = 0;
        while circles.len() < self.n_circles {
            attempts += 1;
            if attempts > ATTEMPTS {
                return Err(infeasible());
            }
            let r = rng.random_range(r_lo..=r_hi) as usize;
            if 2 * r + 1 > self.width || 2 * r + 1 > self.height {
                continue;
            }
            let x = rng.random_range(r..self.width - r) as f64;
            let y = rng.random_range(r..self.height - r) as f64;
            let candidate = CircleParams::new(x, y, r as f64);
            let clear = circles.iter().all(|c: &CircleParams<f64>| {
                (c.x0 - x).hypot(c.y0 - y) >= c.r + candidate.r + self.min_separation
            });
            if clear {
                circles.push(candidate);
            }
        }

        let mut points: Vec<Point> = circles
            .iter()
            .flat_map(|c| {
                rasterize_circle(c, self.width, self.height)
                    .expect("radius >= 1")
                    .into_points()
            })
            .collect();
        let noise = (self.noise_density * (self.width * self.height) as f64).floor() as usize;
        points.extend((0..noise).map(|_| {
            Point::new(
                rng.random_range(0..self.width) as i32,
                rng.random_range(0..self.height) as i32,
            )
        }));
        let edges = EdgeMap::from_points(self.width, self.height, points)
            .expect("generated points lie inside the image");
        Ok((edges, GroundTruth { circles }))
    }
}

/// Convenience wrapper over [`SynthSpec::generate`] with the default separation.
pub fn generate_synthetic(
    width: usize,
    height: usize,
    n_circles: usize,
    r_range: (u32, u32),
    noise_density: f64,
    seed: u64,
) -> Result<(EdgeMap, GroundTruth), BenchError> {
    SynthSpec::new(width, height, n_circles, r_range, noise_density, seed).generate()
}

/// One circle drawn as an arc covering `fraction` of its circumference,
/// starting at a random angle.
pub fn generate_arc(
    width: usize,
    height: usize,
    r_range: (u32, u32),
    fraction: f64,
    seed: u64,
) -> Result<(EdgeMap, GroundTruth), BenchError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(BenchError::InvalidArgument(format!(
            "arc fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let (full, truth) = generate_synthetic(width, height, 1, r_range, 0.0, seed)?;
    let c = truth.circles[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_A5A5_5A5A_5A5A);
    let start: f64 = rng.random::<f64>() * 360.0;
    let span = fraction * 360.0;
    let arc = full.retain(|p| {
        let a = (f64::from(p.y) - c.y0).atan2(f64::from(p.x) - c.x0).to_degrees();
        (a - start).rem_euclid(360.0) < span
    });
    Ok((arc, truth))
}

/// Pairs detections with truth circles greedily by smallest error score;
/// each side is used at most once. Returns, per truth circle, its matched
/// error score if any.
pub fn match_detections(
    truth: &[CircleParams<f64>],
    detected: &[CircleParams<f64>],
    w: &ErrorWeights<f64>,
) -> Vec<Option<f64>> {
    let mut pairs: Vec<(f64, usize, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(i, t)| {
            detected
                .iter()
                .enumerate()
                .map(move |(j, d)| (error_score(t, d, w), i, j))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; truth.len()];
    let mut used = vec![false; detected.len()];
    for (es, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(es);
            used[j] = true;
        }
    }
    out
}

/// Two-sided Wilcoxon rank-sum p-value, midranks for ties.
///
/// Exact permutation distribution when `a.len() + b.len() <= 12`, otherwise
/// the normal approximation with tie-corrected variance.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<f64, BenchError> {
    if a.is_empty() || b.is_empty() {
        return Err(BenchError::InvalidArgument("rank-sum needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(BenchError::InvalidArgument("rank-sum samples contain NaN".into()));
    }
    let (m, n) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let observed: f64 = ranks[..m].iter().sum();
    let mean = m as f64 * (m + n + 1) as f64 / 2.0;
    let deviation = (observed - mean).abs();

    if m + n <= EXACT_RANK_SUM_LIMIT {
        let (mut extreme, mut total) = (0u64, 0u64);
        for_each_combination(m + n, m, |chosen| {
            let w: f64 = chosen.iter().map(|&i| ranks[i]).sum();
            total += 1;
            if (w - mean).abs() >= deviation - 1e-9 {
                extreme += 1;
            }
        });
        return Ok((extreme as f64 / total as f64).min(1.0));
    }

    let big_n = (m + n) as f64;
    let tie_term: f64 = tie_groups(&pooled)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let variance = m as f64 * n as f64 / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if variance <= 0.0 {
        return Ok(1.0);
    }
    let z = deviation / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(<[f64]>::len)
        .filter(|&t| t > 1)
        .collect()
}

/// Calls `f` with every `k`-subset of `0..n`, in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Seed for trial `repeat` on image `image`: a SplitMix64 mix of the three values.
pub fn derive_seed(base: u64, image: usize, repeat: usize) -> u64 {
    let mut z = base
        .wrapping_add((image as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((repeat as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of one detection trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub image: usize,
    pub repeat: usize,
    pub seed: u64,
    /// Worst matched error score over the truth circles; infinite when a
    /// truth circle went undetected (serialized as null).
    pub es: f64,
    pub time_s: f64,
    pub detections: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialStats {
    pub records: Vec<TrialRecord>,
    pub es_values: Vec<f64>,
    pub times: Vec<f64>,
    pub successes: usize,
    pub trials: usize,
}

/// Mean and sample standard deviation; `(NaN, NaN)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub success_rate: f64,
    pub time_mean_s: f64,
    pub time_std_s: f64,
    /// Over finite error scores only.
    pub es_mean: f64,
    pub es_std: f64,
}

impl TrialStats {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn summary(&self) -> TrialSummary {
        let (time_mean_s, time_std_s) = mean_std(&self.times);
        let finite: Vec<f64> = self.es_values.iter().copied().filter(|v| v.is_finite()).collect();
        let (es_mean, es_std) = mean_std(&finite);
        TrialSummary {
            trials: self.trials,
            success_rate: self.success_rate(),
            time_mean_s,
            time_std_s,
            es_mean,
            es_std,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            summary: TrialSummary,
            records: &'a [TrialRecord],
        }
        serde_json::to_string_pretty(&Doc {
            schema_version: 1,
            summary: self.summary(),
            records: &self.records,
        })
        .expect("stats serialize")
    }

    /// Aligned text table: time ± std, success rate, error score ± std.
    pub fn to_table(&self, label: &str) -> String {
        let s = self.summary();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>22} {:>8} {:>20}",
            "Algorithm", "Time (s) ± std", "SR (%)", "Es ± std"
        );
        let _ = writeln!(
            out,
            "{:<16} {:>22} {:>8.2} {:>20}",
            label,
            format!("{:.4} ± {:.4}", s.time_mean_s, s.time_std_s),
            s.success_rate * 100.0,
            format!("{:.4} ± {:.4}", s.es_mean, s.es_std),
        );
        out
    }
}

/// Runs `repeats` detections on every image, seeding each with
/// [`derive_seed`]`(cfg.hsa.seed, image, repeat)`. Single-truth images use
/// [`detect_single`], the rest [`detect_multi`]. Only detection time is
/// measured. `jobs > 1` runs trials on a thread pool; results are identical
/// apart from timing.
pub fn run_trials(
    images: &[(EdgeMap, GroundTruth)],
    cfg: &DetectorConfig,
    weights: &ErrorWeights<f64>,
    repeats: usize,
    jobs: usize,
) -> Result<TrialStats, BenchError> {
    if repeats < 1 {
        return Err(BenchError::InvalidArgument("repeats must be at least 1".into()));
    }
    let tasks: Vec<(usize, usize)> = (0..images.len())
        .flat_map(|i| (0..repeats).map(move |r| (i, r)))
        .collect();
    let trial = |&(image, repeat): &(usize, usize)| {
        let (edges, truth) = &images[image];
        let seed = derive_seed(cfg.hsa.seed, image, repeat);
        let trial_cfg = DetectorConfig {
            hsa: cfg.hsa.with_seed(seed),
            ..cfg.clone()
        };
        let start = Instant::now();
        let report: DetectionReport = if truth.circles.len() <= 1 {
            detect_single(edges, &trial_cfg)
        } else {
            detect_multi(edges, &trial_cfg)
        };
        let time_s = start.elapsed().as_secs_f64();
        let detected: Vec<CircleParams<f64>> = report.circles.iter().map(|c| c.params).collect();
        let es = if truth.circles.is_empty() {
            if detected.is_empty() { 0.0 } else { f64::INFINITY }
        } else {
            match_detections(&truth.circles, &detected, weights)
                .into_iter()
                .map(|m| m.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max)
        };
        TrialRecord {
            image,
            repeat,
            seed,
            es,
            time_s,
            detections: detected.len(),
            success: success(es),
        }
    };
    let records: Vec<TrialRecord> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| BenchError::InvalidArgument(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(trial).collect())
    } else {
        tasks.iter().map(trial).collect()
    };
    Ok(TrialStats {
        es_values: records.iter().map(|r| r.es).collect(),
        times: records.iter().map(|r| r.time_s).collect(),
        successes: records.iter().filter(|r| r.success).count(),
        trials: records.len(),
        records,
    })
}
