//! Grayscale images, binary edge maps and a classical Canny detector.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default Gaussian smoothing scale for [`canny_edges`].
pub const DEFAULT_SIGMA: f64 = 1.0;
/// Default hysteresis thresholds, on a gradient magnitude normalized to [0, 255].
pub const DEFAULT_LOW: f64 = 0.1 * 255.0;
pub const DEFAULT_HIGH: f64 = 0.3 * 255.0;

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("image too small: {width}x{height} (need at least 3x3)")]
    Size { width: usize, height: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point ({x}, {y}) outside {width}x{height} image")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
}

/// Integer pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn as_f64(self) -> [f64; 2] {
        [f64::from(self.x), f64::from(self.y)]
    }
}

/// 8-bit grayscale image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Format(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(ImageError::Format(format!(
                "expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Sets the pixel if `(x, y)` falls inside the image.
    pub fn put(&mut self, x: i64, y: i64, value: u8) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.set(x as usize, y as usize, value);
        }
    }
}

/// Binary edge map: the ordered edge vector plus an occupancy grid.
///
/// Points are kept in row-major order (y ascending, then x ascending) with no
/// duplicates, and `grid` is true exactly at those points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    points: Vec<Point>,
    grid: Vec<bool>,
}

impl EdgeMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            points: Vec::new(),
            grid: vec![false; width * height],
        }
    }

    /// Builds the map from an occupancy grid; points come out row-major.
    pub fn from_grid(width: usize, height: usize, grid: Vec<bool>) -> Result<Self, ImageError> {
        if grid.len() != width * height {
            return Err(ImageError::Format(format!(
                "grid has {} cells, expected {}",
                grid.len(),
                width * height
            )));
        }
        let points = grid
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| Point::new((i % width) as i32, (i / width) as i32))
            .collect();
        Ok(Self {
            width,
            height,
            points,
            grid,
        })
    }

    /// Builds the map from arbitrary points. Duplicates collapse; order is normalized.
    pub fn from_points<I>(width: usize, height: usize, points: I) -> Result<Self, ImageError>
    where
        I: IntoIterator<Item = Point>,
    {
        let mut grid = vec![false; width * height];
        for p in points {
            if p.x < 0 || p.y < 0 || p.x as usize >= width || p.y as usize >= height {
                return Err(ImageError::OutOfBounds {
                    x: i64::from(p.x),
                    y: i64::from(p.y),
                    width,
                    height,
                });
            }
            grid[p.y as usize * width + p.x as usize] = true;
        }
        Self::from_grid(width, height, grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// The edge vector `P`.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// `E_p`, the number of edge pixels.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    /// O(1) membership; out-of-bounds coordinates are never edges.
    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 {
            return false;
        }
        let (x, y) = (x as usize, y as usize);
        x < self.width && y < self.height && self.grid[y * self.width + x]
    }

    /// New map keeping only the points for which `keep` holds.
    pub fn retain<F: FnMut(&Point) -> bool>(&self, mut keep: F) -> Self {
        let mut grid = vec![false; self.width * self.height];
        let points: Vec<Point> = self
            .points
            .iter()
            .copied()
            .filter(|p| keep(p))
            .inspect(|p| grid[p.y as usize * self.width + p.x as usize] = true)
            .collect();
        Self {
            width: self.width,
            height: self.height,
            points,
            grid,
        }
    }

    /// Union with another map of the same size.
    pub fn merged(&self, other: &EdgeMap) -> Result<Self, ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::InvalidParameter(format!(
                "size mismatch {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let grid = self
            .grid
            .iter()
            .zip(&other.grid)
            .map(|(a, b)| *a || *b)
            .collect();
        Self::from_grid(self.width, self.height, grid)
    }

    /// Renders the map as a binary image with edges at 255.
    pub fn to_image(&self) -> GrayImage {
        let pixels = self.grid.iter().map(|&on| if on { 255 } else { 0 }).collect();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// Loads a grayscale image from binary PGM (P5) or PNG.
///
/// Color PNGs are converted by averaging the RGB channels.
pub fn load_gray<P: AsRef<Path>>(path: P) -> Result<GrayImage, ImageError> {
    let bytes = fs::read(path)?;
    decode_gray(&bytes)
}

pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else {
        Err(ImageError::Format(
            "unsupported image format (expected binary PGM or PNG)".into(),
        ))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(ImageError::Format("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::Format("malformed PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Format("malformed PGM header number".into()))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(ImageError::Format("PGM has zero dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(ImageError::Format(format!(
            "unsupported PGM maxval {maxval} (8-bit only)"
        )));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(ImageError::Format("missing whitespace after PGM maxval".into()));
    }
    pos += 1;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| ImageError::Format("PGM dimensions overflow".into()))?;
    let body = bytes
        .get(pos..pos + count)
        .ok_or_else(|| ImageError::Format("truncated PGM body".into()))?;
    let pixels = if maxval == 255 {
        body.to_vec()
    } else {
        body.iter()
            .map(|&v| ((u32::from(v.min(maxval as u8)) * 255 + maxval as u32 / 2) / maxval as u32) as u8)
            .collect()
    };
    GrayImage::from_pixels(width, height, pixels)
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| ImageError::Format(e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let pixels = match decoded {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| ((u16::from(p[0]) + u16::from(p[1]) + u16::from(p[2])) / 3) as u8)
            .collect(),
    };
    GrayImage::from_pixels(width, height, pixels)
}

/// Encodes as binary PGM, maxval 255.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Writes PGM, or 8-bit gray PNG when the extension is `.png`.
pub fn save_gray<P: AsRef<Path>>(path: P, img: &GrayImage) -> Result<(), ImageError> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.pixels.clone())
            .ok_or_else(|| ImageError::Format("pixel buffer size mismatch".into()))?;
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => ImageError::Io(io),
                other => ImageError::Format(other.to_string()),
            })
    } else {
        fs::write(path, encode_pgm(img)).map_err(ImageError::from)
    }
}

/// Loads a precomputed binary edge map (pixel values exactly 0 or 255).
pub fn load_edge_map<P: AsRef<Path>>(path: P) -> Result<EdgeMap, ImageError> {
    edge_map_from_binary(&load_gray(path)?)
}

pub fn edge_map_from_binary(img: &GrayImage) -> Result<EdgeMap, ImageError> {
    if let Some(bad) = img.pixels.iter().find(|&&v| v != 0 && v != 255) {
        return Err(ImageError::Format(format!(
            "edge map must be binary (0/255), found value {bad}"
        )));
    }
    let grid = img.pixels.iter().map(|&v| v != 0).collect();
    EdgeMap::from_grid(img.width, img.height, grid)
}

pub fn save_edge_map<P: AsRef<Path>>(path: P, edges: &EdgeMap) -> Result<(), ImageError> {
    save_gray(path, &edges.to_image())
}

/// Canny edge detection: Gaussian smoothing, 3x3 Sobel gradient, non-maximum
/// suppression over four quantized directions, hysteresis by flood fill.
///
/// `low` and `high` apply to the gradient magnitude rescaled so the strongest
/// response in the image is 255. The outermost pixel frame never holds an edge.
pub fn canny_edges(img: &GrayImage, low: f64, high: f64, sigma: f64) -> Result<EdgeMap, ImageError> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(ImageError::Size {
            width: w,
            height: h,
        });
    }
    if !(0.0..=255.0).contains(&low) || !(0.0..=255.0).contains(&high) || low > high {
        return Err(ImageError::InvalidParameter(format!(
            "thresholds must satisfy 0 <= low <= high <= 255 (got {low}, {high})"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ImageError::InvalidParameter(format!(
            "sigma must be positive (got {sigma})"
        )));
    }

    let smooth = gaussian_blur(img, sigma);
    let at = |x: usize, y: usize| smooth[y * w + x];

    let mut mag = vec![0.0f64; w * h];
    let mut dir = vec![0u8; w * h];
    let mut max_mag = 0.0f64;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let m = gx.hypot(gy);
            mag[y * w + x] = m;
            dir[y * w + x] = quantize_direction(gx, gy);
            max_mag = max_mag.max(m);
        }
    }
    // Flat images (up to float noise from the blur) have no edges.
    if max_mag < 1e-6 {
        return Ok(EdgeMap::empty(w, h));
    }
    let scale = 255.0 / max_mag;

    let mut thin = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (dx, dy): (isize, isize) = match dir[i] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let fwd = mag[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let back = mag[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            // Asymmetric comparison keeps one pixel of a two-pixel plateau.
            if m > fwd && m >= back {
                thin[i] = m * scale;
            }
        }
    }

    let mut grid = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high && m > 0.0 {
            grid[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 1 || ny < 1 || nx >= w as isize - 1 || ny >= h as isize - 1 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !grid[j] && thin[j] >= low && thin[j] > 0.0 {
                    grid[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    EdgeMap::from_grid(w, h, grid)
}

/// 0: horizontal gradient, 1: 45°, 2: vertical, 3: 135° (image y axis points down).
fn quantize_direction(gx: f64, gy: f64) -> u8 {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        0
    } else if angle < 67.5 {
        1
    } else if angle < 112.5 {
        2
    } else {
        3
    }
}

fn gaussian_blur(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, h) = (img.width as isize, img.height as isize);
    let clamp = |v: isize, n: isize| v.clamp(0, n - 1) as usize;
    let mut tmp = vec![0.0; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            tmp[(y * w + x) as usize] = kernel
                .iter()
                .zip(-radius..=radius)
                .map(|(k, o)| k * f64::from(img.pixels[y as usize * img.width + clamp(x + o, w)]))
                .sum();
        }
    }
    let mut out = vec![0.0; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            out[(y * w + x) as usize] = kernel
                .iter()
                .zip(-radius..=radius)
                .map(|(k, o)| k * tmp[clamp(y + o, h) * img.width + x as usize])
                .sum();
        }
    }
    out
}
