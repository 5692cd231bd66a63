use serde::{Deserialize, Serialize};

use super::{BaselineFrame, DiffFrame, PressureMap, TactileError, TactileFrame};
use crate::finger::FingerId;

/// Channel weights that collapse an RGB difference into one intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct GrayscaleWeights {
    r: f64,
    g: f64,
    b: f64,
}

impl GrayscaleWeights {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self, TactileError> {
        if [r, g, b].iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(TactileError::InvalidWeights(format!(
                "weights must be finite and non-negative, got ({r}, {g}, {b})"
            )));
        }
        let sum = r + g + b;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TactileError::InvalidWeights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self { r, g, b })
    }

    /// ITU-R BT.601 luma weights.
    pub fn luminance() -> Self {
        Self {
            r: 0.299,
            g: 0.587,
            b: 0.114,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn apply(&self, rgb: [f64; 3]) -> f64 {
        self.r * rgb[0] + self.g * rgb[1] + self.b * rgb[2]
    }
}

impl Default for GrayscaleWeights {
    fn default() -> Self {
        Self::luminance()
    }
}

impl TryFrom<[f64; 3]> for GrayscaleWeights {
    type Error = TactileError;

    fn try_from(w: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(w[0], w[1], w[2])
    }
}

impl From<GrayscaleWeights> for [f64; 3] {
    fn from(w: GrayscaleWeights) -> Self {
        w.as_array()
    }
}

/// Which spread measure is subtracted from the centroid intensity to form the
/// EDA threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Intensity-weighted radial spread of the map about its centroid, in
    /// pixels (the spread that also locates the contact).
    #[default]
    SpatialSigma,
    /// Population standard deviation of the map's intensity values.
    IntensityStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub weights: GrayscaleWeights,
    /// Total map mass below which a frame counts as no contact.
    pub epsilon_mass: f64,
    /// Multiplier on the spread term of the threshold.
    pub threshold_coefficient: f64,
    pub threshold_mode: ThresholdMode,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            weights: GrayscaleWeights::luminance(),
            epsilon_mass: 1e-9,
            threshold_coefficient: 1.28,
            threshold_mode: ThresholdMode::SpatialSigma,
        }
    }
}

/// Pressure-weighted centroid in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
}

/// Per-finger, per-frame contact metrics. Serialises to the metrics
/// JSON-lines record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMetrics {
    pub finger: FingerId,
    #[serde(rename = "t")]
    pub timestamp: f64,
    pub contact: bool,
    #[serde(rename = "mu_x")]
    pub centroid_x: f64,
    #[serde(rename = "mu_y")]
    pub centroid_y: f64,
    pub sigma: f64,
    pub threshold: f64,
    pub eda: u32,
    pub cci: f64,
}

impl ContactMetrics {
    pub fn no_contact(finger: FingerId, timestamp: f64) -> Self {
        Self {
            finger,
            timestamp,
            contact: false,
            centroid_x: 0.0,
            centroid_y: 0.0,
            sigma: 0.0,
            threshold: 0.0,
            eda: 0,
            cci: 0.0,
        }
    }
}

pub fn capture_baseline(frames: &[TactileFrame]) -> Result<BaselineFrame, TactileError> {
    let first = frames.first().ok_or(TactileError::EmptyBaseline)?;
    let (w, h) = first.dims();
    let mut sums = vec![[0.0f64; 3]; w * h];
    for frame in frames {
        if frame.dims() != (w, h) {
            return Err(TactileError::DimensionMismatch {
                expected: (w, h),
                found: frame.dims(),
            });
        }
        if frame.finger != first.finger {
            return Err(TactileError::FingerMismatch {
                expected: first.finger,
                found: frame.finger,
            });
        }
        for (acc, px) in sums.iter_mut().zip(frame.pixels()) {
            for c in 0..3 {
                acc[c] += f64::from(px[c]);
            }
        }
    }
    let n = frames.len() as f64;
    for acc in &mut sums {
        for v in acc.iter_mut() {
            *v /= n;
        }
    }
    BaselineFrame::new(first.finger, w, h, sums)
}

pub fn diff_frame(
    frame: &TactileFrame,
    baseline: &BaselineFrame,
) -> Result<DiffFrame, TactileError> {
    if frame.dims() != baseline.dims() {
        return Err(TactileError::DimensionMismatch {
            expected: baseline.dims(),
            found: frame.dims(),
        });
    }
    if frame.finger != baseline.finger {
        return Err(TactileError::FingerMismatch {
            expected: baseline.finger,
            found: frame.finger,
        });
    }
    let pixels = frame
        .pixels()
        .iter()
        .zip(baseline.pixels())
        .map(|(px, base)| {
            [
                (f64::from(px[0]) - base[0]).max(0.0),
                (f64::from(px[1]) - base[1]).max(0.0),
                (f64::from(px[2]) - base[2]).max(0.0),
            ]
        })
        .collect();
    let (w, h) = frame.dims();
    Ok(DiffFrame::from_parts(
        frame.finger,
        frame.timestamp,
        w,
        h,
        pixels,
    ))
}

pub fn to_pressure_map(diff: &DiffFrame, weights: &GrayscaleWeights) -> PressureMap {
    let (w, h) = diff.dims();
    let values = diff.pixels().iter().map(|&px| weights.apply(px)).collect();
    PressureMap::new(diff.finger, diff.timestamp, w, h, values)
        .expect("weighted sum of non-negative channels is non-negative")
}

/// Pressure-weighted centroid, or `None` when the total mass is below
/// `epsilon_mass`.
pub fn compute_centroid(map: &PressureMap, epsilon_mass: f64) -> Option<Centroid> {
    let mut mass = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for (x, y, v) in map.iter_xy() {
        mass += v;
        mx += x as f64 * v;
        my += y as f64 * v;
    }
    if mass < epsilon_mass || mass <= 0.0 {
        return None;
    }
    Some(Centroid {
        x: mx / mass,
        y: my / mass,
    })
}

/// Intensity-weighted RMS radial distance from `centroid`.
pub fn compute_sigma(map: &PressureMap, centroid: Centroid) -> Result<f64, TactileError> {
    let mut mass = 0.0;
    let mut second = 0.0;
    for (x, y, v) in map.iter_xy() {
        let dx = x as f64 - centroid.x;
        let dy = y as f64 - centroid.y;
        mass += v;
        second += (dx * dx + dy * dy) * v;
    }
    if mass <= 0.0 {
        return Err(TactileError::NoContact);
    }
    Ok((second / mass).sqrt())
}

/// Population standard deviation of the map values.
pub fn intensity_std(map: &PressureMap) -> f64 {
    let n = map.values().len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean = map.values().iter().sum::<f64>() / n;
    let var = map.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// EDA threshold: map value at the (rounded) centroid minus
/// `coefficient * spread`, floored at zero.
pub fn compute_threshold(
    map: &PressureMap,
    centroid: Centroid,
    spread: f64,
    coefficient: f64,
) -> f64 {
    let x = nearest_index(centroid.x, map.width());
    let y = nearest_index(centroid.y, map.height());
    (map.get(x, y) - coefficient * spread).max(0.0)
}

// Round half-up and clamp to the grid.
fn nearest_index(coord: f64, len: usize) -> usize {
    let rounded = (coord + 0.5).floor();
    let max = len.saturating_sub(1) as f64;
    if !(0.0..=max).contains(&rounded) {
        log::warn!("centroid coordinate {coord} rounds outside [0, {max}], clamping");
    }
    rounded.clamp(0.0, max) as usize
}

/// Number of pixels whose value is at least `threshold`.
pub fn compute_eda(map: &PressureMap, threshold: f64) -> u32 {
    map.values().iter().filter(|&&v| v >= threshold).count() as u32
}

/// Peak value divided by EDA; zero when EDA is zero.
pub fn compute_cci(map: &PressureMap, eda: u32) -> f64 {
    if eda == 0 {
        0.0
    } else {
        map.max_value() / f64::from(eda)
    }
}

/// Metrics for an already-built pressure map.
pub fn extract_from_map(map: &PressureMap, config: &MetricsConfig) -> ContactMetrics {
    let Some(centroid) = compute_centroid(map, config.epsilon_mass) else {
        return ContactMetrics::no_contact(map.finger, map.timestamp);
    };
    let sigma = compute_sigma(map, centroid).expect("centroid implies positive mass");
    let spread = match config.threshold_mode {
        ThresholdMode::SpatialSigma => sigma,
        ThresholdMode::IntensityStd => intensity_std(map),
    };
    let threshold = compute_threshold(map, centroid, spread, config.threshold_coefficient);
    let eda = compute_eda(map, threshold);
    let cci = compute_cci(map, eda);
    ContactMetrics {
        finger: map.finger,
        timestamp: map.timestamp,
        contact: true,
        centroid_x: centroid.x,
        centroid_y: centroid.y,
        sigma,
        threshold,
        eda,
        cci,
    }
}

pub fn extract_metrics(
    frame: &TactileFrame,
    baseline: &BaselineFrame,
    config: &MetricsConfig,
) -> Result<ContactMetrics, TactileError> {
    let diff = diff_frame(frame, baseline)?;
    let map = to_pressure_map(&diff, &config.weights);
    Ok(extract_from_map(&map, config))
}
