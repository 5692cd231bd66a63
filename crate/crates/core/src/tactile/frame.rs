use serde::{Deserialize, Serialize};

use super::TactileError;
use crate::finger::FingerId;

/// One RGB image from a fingertip sensor, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TactileFrame {
    pub finger: FingerId,
    pub timestamp: f64,
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl TactileFrame {
    pub fn new(
        finger: FingerId,
        timestamp: f64,
        width: usize,
        height: usize,
        pixels: Vec<[u8; 3]>,
    ) -> Result<Self, TactileError> {
        check_len(width, height, pixels.len())?;
        Ok(Self {
            finger,
            timestamp,
            width,
            height,
            pixels,
        })
    }

    /// Frame filled with a single colour.
    pub fn filled(
        finger: FingerId,
        timestamp: f64,
        width: usize,
        height: usize,
        rgb: [u8; 3],
    ) -> Self {
        Self {
            finger,
            timestamp,
            width,
            height,
            pixels: vec![rgb; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }
}

/// Per-pixel, per-channel mean of a set of no-contact frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFrame {
    pub finger: FingerId,
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl BaselineFrame {
    pub fn new(
        finger: FingerId,
        width: usize,
        height: usize,
        pixels: Vec<[f64; 3]>,
    ) -> Result<Self, TactileError> {
        check_len(width, height, pixels.len())?;
        Ok(Self {
            finger,
            width,
            height,
            pixels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }
}

/// Baseline-subtracted frame; every channel is clamped to be non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffFrame {
    pub finger: FingerId,
    pub timestamp: f64,
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl DiffFrame {
    pub(crate) fn from_parts(
        finger: FingerId,
        timestamp: f64,
        width: usize,
        height: usize,
        pixels: Vec<[f64; 3]>,
    ) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self {
            finger,
            timestamp,
            width,
            height,
            pixels,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }
}

/// Scalar pressure-proxy field over the sensor's pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureMap {
    pub finger: FingerId,
    pub timestamp: f64,
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl PressureMap {
    pub fn new(
        finger: FingerId,
        timestamp: f64,
        width: usize,
        height: usize,
        values: Vec<f64>,
    ) -> Result<Self, TactileError> {
        check_len(width, height, values.len())?;
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(TactileError::InvalidValue(bad));
        }
        Ok(Self {
            finger,
            timestamp,
            width,
            height,
            values,
        })
    }

    /// Convenience constructor for tests and tools: rows of values, top row first.
    pub fn from_rows(
        finger: FingerId,
        timestamp: f64,
        rows: &[&[f64]],
    ) -> Result<Self, TactileError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(TactileError::Malformed("ragged rows".into()));
        }
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(finger, timestamp, width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Iterator over `(x, y, value)` in row-major order.
    pub fn iter_xy(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i % w, i / w, v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_len(width: usize, height: usize, len: usize) -> Result<(), TactileError> {
    let expected = width * height;
    if expected != len {
        return Err(TactileError::PixelCount {
            expected,
            found: len,
        });
    }
    Ok(())
}
