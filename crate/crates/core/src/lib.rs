//! Circle detection on binary edge maps with a discrete Harmony Search optimizer.
//!
//! A candidate circle is encoded as three indexes into the ordered vector of
//! edge pixels. The optimizer searches over those index triplets, scoring each
//! candidate by the fraction of its midpoint-rasterized perimeter that is
//! missing from the edge map.
//!
//! Pipeline stages:
//!
//! 1. **imaging** – PGM/PNG I/O, Canny edge detection, the [`EdgeMap`].
//! 2. **geometry** – circumcircle of three edge points.
//! 3. **raster** – midpoint circle rasterization of a candidate.
//! 4. **objective** – the perimeter-matching score `J`.
//! 5. **harmony_search** – the discrete optimizer over index triplets.
//! 6. **detector** – single and multi-circle detection with masking.
//! 7. **bench** – synthetic ground truth, error score, rank-sum test, trials.
//!
//! Geometry and scoring are generic over the float type ([`Real`]); the
//! detection pipeline itself runs in `f64`.

pub mod bench;
pub mod detector;
pub mod geometry;
pub mod harmony_search;
pub mod imaging;
pub mod objective;
pub mod raster;
mod scalar;

pub use bench::{ErrorWeights, GroundTruth, TrialStats};
pub use detector::{DetectedCircle, DetectionReport, DetectionStatus, DetectorConfig};
pub use geometry::{CircleParams, Degenerate, Triplet};
pub use harmony_search::{HsaConfig, HsaError};
pub use imaging::{EdgeMap, GrayImage, ImageError, Point};
pub use objective::Fitness;
pub use raster::PointSet;
pub use scalar::Real;

/// Circle parameters in double precision, the type the detector works in.
pub type Circle = CircleParams<f64>;
/// Single precision circle parameters.
pub type Circle32 = CircleParams<f32>;
/// Error score weights in double precision.
pub type Weights = ErrorWeights<f64>;
