//! Vest intensity mapping.
//!
//! Each finger owns one column of the vest: the four front units encode its
//! CCI and the four back units its EDA. Values are squashed through a logistic
//! curve centred on half the finger's calibrated maximum, with the slope chosen
//! so the curve reads `epsilon` at zero and `1 - epsilon` at the maximum, then
//! scaled to the vest's 0-100 intensity range.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::finger::FingerId;
use crate::tactile::ContactMetrics;

pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;
pub const MAX_INTENSITY: u8 = 100;

#[derive(Debug, thiserror::Error)]
pub enum HapticError {
    #[error("calibration maximum must be positive and finite, got {0}")]
    NonPositiveMax(f64),
    #[error("epsilon must lie in (0, 0.5), got {0}")]
    InvalidEpsilon(f64),
    #[error("percentile must lie in (0, 100], got {0}")]
    InvalidPercentile(f64),
    #[error("no contact observed during calibration for: {}", fmt_fingers(.0))]
    NoContact(Vec<FingerId>),
    #[error("unsupported calibration schema version {0}")]
    SchemaVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_fingers(fingers: &[FingerId]) -> String {
    fingers
        .iter()
        .map(|f| f.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Largest CCI and EDA observed for one finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerCalibration {
    pub finger: FingerId,
    pub cci_max: f64,
    pub eda_max: f64,
}

impl FingerCalibration {
    pub fn new(finger: FingerId, cci_max: f64, eda_max: f64) -> Result<Self, HapticError> {
        for v in [cci_max, eda_max] {
            if !(v.is_finite() && v > 0.0) {
                return Err(HapticError::NonPositiveMax(v));
            }
        }
        Ok(Self {
            finger,
            cci_max,
            eda_max,
        })
    }

    pub fn sigmoid_params(&self, epsilon: f64) -> Result<SigmoidParams, HapticError> {
        Ok(SigmoidParams {
            k_cci: derive_k(self.cci_max, epsilon)?,
            k_eda: derive_k(self.eda_max, epsilon)?,
            epsilon,
        })
    }
}

/// Logistic slopes for one finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidParams {
    pub k_cci: f64,
    pub k_eda: f64,
    pub epsilon: f64,
}

/// Slope that puts the logistic at `epsilon` for 0 and `1 - epsilon` for
/// `max_value`.
pub fn derive_k(max_value: f64, epsilon: f64) -> Result<f64, HapticError> {
    if !(max_value.is_finite() && max_value > 0.0) {
        return Err(HapticError::NonPositiveMax(max_value));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(HapticError::InvalidEpsilon(epsilon));
    }
    Ok(2.0 * ((1.0 - epsilon) / epsilon).ln() / max_value)
}

/// Logistic centred on `max_value / 2` with slope `k`.
pub fn sigmoid(value: f64, max_value: f64, k: f64) -> f64 {
    1.0 / (1.0 + (-k * (value - max_value / 2.0)).exp())
}

/// Round half-up into the vest's integer range.
pub fn round_intensity(raw: f64) -> u8 {
    (raw + 0.5).floor().clamp(0.0, f64::from(MAX_INTENSITY)) as u8
}

/// Unrounded 0-100 intensity for a CCI value.
pub fn cci_raw_intensity(
    cci: f64,
    calib: &FingerCalibration,
    epsilon: f64,
) -> Result<f64, HapticError> {
    let k = derive_k(calib.cci_max, epsilon)?;
    Ok(100.0 * sigmoid(cci, calib.cci_max, k))
}

/// Unrounded 0-100 intensity for an EDA value.
pub fn eda_raw_intensity(
    eda: f64,
    calib: &FingerCalibration,
    epsilon: f64,
) -> Result<f64, HapticError> {
    let k = derive_k(calib.eda_max, epsilon)?;
    Ok(100.0 * sigmoid(eda, calib.eda_max, k))
}

pub fn map_cci_to_intensity(
    cci: f64,
    calib: &FingerCalibration,
    epsilon: f64,
) -> Result<u8, HapticError> {
    cci_raw_intensity(cci, calib, epsilon).map(round_intensity)
}

pub fn map_eda_to_intensity(
    eda: f64,
    calib: &FingerCalibration,
    epsilon: f64,
) -> Result<u8, HapticError> {
    eda_raw_intensity(eda, calib, epsilon).map(round_intensity)
}

/// `value / max`, clamped to [0, 1].
pub fn normalize(value: f64, max: f64) -> f64 {
    if max > 0.0 {
        (value / max).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HapticConfig {
    pub epsilon: f64,
    /// Drive a finger's column to zero when it reports no contact instead of
    /// the logistic floor.
    pub zero_when_no_contact: bool,
}

impl Default for HapticConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            zero_when_no_contact: true,
        }
    }
}

/// Intensities for the 32 vest units: two 4x4 grids, row-major, with column
/// `i` belonging to finger `i` (thumb, index, middle, ring).
#[derive(Debug, Clone, PartialEq)]
pub struct VestCommand {
    pub t: f64,
    pub front: [[u8; 4]; 4],
    pub back: [[u8; 4]; 4],
    /// Set when some finger had no metrics or no calibration and its column
    /// was zero-filled.
    pub degraded: bool,
}

impl VestCommand {
    pub fn zeroed(t: f64) -> Self {
        Self {
            t,
            front: [[0; 4]; 4],
            back: [[0; 4]; 4],
            degraded: false,
        }
    }

    fn set_column(&mut self, col: usize, front: u8, back: u8) {
        for row in 0..4 {
            self.front[row][col] = front;
            self.back[row][col] = back;
        }
    }

    pub fn front_column(&self, finger: FingerId) -> u8 {
        self.front[0][finger.index()]
    }

    pub fn back_column(&self, finger: FingerId) -> u8 {
        self.back[0][finger.index()]
    }

    /// Mean intensity of the 16 front units.
    pub fn mean_front(&self) -> f64 {
        self.front
            .iter()
            .flatten()
            .map(|&v| f64::from(v))
            .sum::<f64>()
            / 16.0
    }

    pub fn front_flat(&self) -> [u8; 16] {
        flatten(&self.front)
    }

    pub fn back_flat(&self) -> [u8; 16] {
        flatten(&self.back)
    }

    pub fn from_flat(t: f64, front: &[u8; 16], back: &[u8; 16]) -> Self {
        Self {
            t,
            front: unflatten(front),
            back: unflatten(back),
            degraded: false,
        }
    }
}

fn flatten(grid: &[[u8; 4]; 4]) -> [u8; 16] {
    let mut out = [0; 16];
    for (i, v) in grid.iter().flatten().enumerate() {
        out[i] = *v;
    }
    out
}

fn unflatten(flat: &[u8; 16]) -> [[u8; 4]; 4] {
    let mut out = [[0; 4]; 4];
    for (i, v) in flat.iter().enumerate() {
        out[i / 4][i % 4] = *v;
    }
    out
}

/// Calibration for every finger that produced contact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationSet {
    fingers: BTreeMap<FingerId, FingerCalibration>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Limits {
    cci_max: f64,
    eda_max: f64,
}

#[derive(Serialize, Deserialize)]
struct CalibrationFile {
    schema_version: u32,
    #[serde(flatten)]
    fingers: BTreeMap<FingerId, Limits>,
}

impl CalibrationSet {
    pub fn new(calibrations: impl IntoIterator<Item = FingerCalibration>) -> Self {
        Self {
            fingers: calibrations.into_iter().map(|c| (c.finger, c)).collect(),
        }
    }

    pub fn get(&self, finger: FingerId) -> Option<&FingerCalibration> {
        self.fingers.get(&finger)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FingerCalibration> {
        self.fingers.values()
    }

    pub fn to_json(&self) -> Result<String, HapticError> {
        let file = CalibrationFile {
            schema_version: CALIBRATION_SCHEMA_VERSION,
            fingers: self
                .fingers
                .iter()
                .map(|(f, c)| {
                    (
                        *f,
                        Limits {
                            cci_max: c.cci_max,
                            eda_max: c.eda_max,
                        },
                    )
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self, HapticError> {
        let file: CalibrationFile = serde_json::from_str(text)?;
        if file.schema_version != CALIBRATION_SCHEMA_VERSION {
            return Err(HapticError::SchemaVersion(file.schema_version));
        }
        let mut fingers = BTreeMap::new();
        for (finger, l) in file.fingers {
            fingers.insert(
                finger,
                FingerCalibration::new(finger, l.cci_max, l.eda_max)?,
            );
        }
        Ok(Self { fingers })
    }

    pub fn save(&self, path: &Path) -> Result<(), HapticError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HapticError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Assemble the vest command for one instant. Metrics may arrive in any
/// order; a finger without metrics or calibration gets a zero column and marks
/// the command degraded.
pub fn build_vest_command(
    t: f64,
    metrics: &[ContactMetrics],
    calibration: &CalibrationSet,
    config: &HapticConfig,
) -> Result<VestCommand, HapticError> {
    let mut cmd = VestCommand::zeroed(t);
    for finger in FingerId::ALL {
        let col = finger.index();
        let (Some(m), Some(calib)) = (
            metrics.iter().find(|m| m.finger == finger),
            calibration.get(finger),
        ) else {
            cmd.degraded = true;
            continue;
        };
        if !m.contact && config.zero_when_no_contact {
            continue;
        }
        let front = map_cci_to_intensity(m.cci, calib, config.epsilon)?;
        let back = map_eda_to_intensity(f64::from(m.eda), calib, config.epsilon)?;
        cmd.set_column(col, front, back);
    }
    Ok(cmd)
}

/// How the per-finger maxima are taken from a calibration stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    #[default]
    Max,
    /// Nearest-rank percentile in (0, 100].
    Percentile(f64),
}

/// Nearest-rank percentile of `values`; `None` when empty.
pub fn nearest_rank_percentile(values: &[f64], percentile: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (percentile / 100.0 * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Per-finger maxima over the contact frames of a calibration stream. Frames
/// later than `duration` seconds after the first record are ignored.
pub fn calibrate<'a>(
    stream: impl IntoIterator<Item = &'a ContactMetrics>,
    duration: Option<f64>,
    mode: CalibrationMode,
) -> Result<CalibrationSet, HapticError> {
    if let CalibrationMode::Percentile(p) = mode {
        if !(p > 0.0 && p <= 100.0) {
            return Err(HapticError::InvalidPercentile(p));
        }
    }
    let mut cci: [Vec<f64>; 4] = Default::default();
    let mut eda: [Vec<f64>; 4] = Default::default();
    let mut start = None;
    for m in stream {
        let t0 = *start.get_or_insert(m.timestamp);
        if duration.is_some_and(|d| m.timestamp - t0 > d) {
            continue;
        }
        if !m.contact {
            continue;
        }
        cci[m.finger.index()].push(m.cci);
        eda[m.finger.index()].push(f64::from(m.eda));
    }

    let mut missing = Vec::new();
    let mut out = Vec::new();
    for finger in FingerId::ALL {
        let i = finger.index();
        let pick = |v: &[f64]| match mode {
            CalibrationMode::Max => v.iter().copied().reduce(f64::max),
            CalibrationMode::Percentile(p) => nearest_rank_percentile(v, p),
        };
        match (pick(&cci[i]), pick(&eda[i])) {
            (Some(c), Some(e)) if c > 0.0 && e > 0.0 => {
                out.push(FingerCalibration::new(finger, c, e)?)
            }
            _ => missing.push(finger),
        }
    }
    if !missing.is_empty() {
        return Err(HapticError::NoContact(missing));
    }
    Ok(CalibrationSet::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn calib(cci_max: f64, eda_max: f64) -> FingerCalibration {
        FingerCalibration::new(FingerId::Thumb, cci_max, eda_max).unwrap()
    }

    fn contact(finger: FingerId, t: f64, cci: f64, eda: u32) -> ContactMetrics {
        ContactMetrics {
            contact: true,
            cci,
            eda,
            ..ContactMetrics::no_contact(finger, t)
        }
    }

    #[test]
    fn derive_k_closed_form() {
        let k = derive_k(1.0, 0.01).unwrap();
        assert_abs_diff_eq!(k, 2.0 * 99f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(k, 9.190_239_700_126_26, epsilon = 1e-9);
        assert_abs_diff_eq!(sigmoid(0.0, 1.0, k), 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(sigmoid(1.0, 1.0, k), 0.99, epsilon = 1e-12);
        assert_eq!(sigmoid(0.5, 1.0, k), 0.5);
        assert!(derive_k(0.0, 0.01).is_err());
        assert!(derive_k(1.0, 0.5).is_err());
        assert!(derive_k(1.0, 0.0).is_err());
    }

    #[test]
    fn intensity_anchor_points() {
        let c = calib(40.0, 12.0);
        assert_eq!(map_cci_to_intensity(20.0, &c, 0.01).unwrap(), 50);
        assert_eq!(map_cci_to_intensity(0.0, &c, 0.01).unwrap(), 1);
        assert_eq!(map_cci_to_intensity(40.0, &c, 0.01).unwrap(), 99);
        assert_eq!(map_eda_to_intensity(6.0, &c, 0.01).unwrap(), 50);
        assert_eq!(map_eda_to_intensity(0.0, &c, 0.01).unwrap(), 1);
        assert_eq!(map_eda_to_intensity(24.0, &c, 0.01).unwrap(), 100);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_intensity(49.5), 50);
        assert_eq!(round_intensity(49.499), 49);
        assert_eq!(round_intensity(-3.0), 0);
        assert_eq!(round_intensity(250.0), 100);
    }

    #[test]
    fn all_no_contact_gives_floor_or_zero() {
        let set = CalibrationSet::new(
            FingerId::ALL.map(|f| FingerCalibration::new(f, 10.0, 10.0).unwrap()),
        );
        let metrics: Vec<_> = FingerId::ALL
            .iter()
            .map(|&f| ContactMetrics::no_contact(f, 0.0))
            .collect();
        let zero = build_vest_command(0.0, &metrics, &set, &HapticConfig::default()).unwrap();
        assert_eq!(zero.front, [[0; 4]; 4]);
        assert_eq!(zero.back, [[0; 4]; 4]);
        assert!(!zero.degraded);

        let floor_cfg = HapticConfig {
            zero_when_no_contact: false,
            ..HapticConfig::default()
        };
        let floor = build_vest_command(0.0, &metrics, &set, &floor_cfg).unwrap();
        assert_eq!(floor.front, [[1; 4]; 4]);
        assert_eq!(floor.back, [[1; 4]; 4]);
    }

    #[test]
    fn thumb_column_carries_its_intensity() {
        let set = CalibrationSet::new(
            FingerId::ALL.map(|f| FingerCalibration::new(f, 10.0, 8.0).unwrap()),
        );
        let mut metrics: Vec<_> = FingerId::ALL
            .iter()
            .map(|&f| ContactMetrics::no_contact(f, 0.0))
            .collect();
        metrics[0] = contact(FingerId::Thumb, 0.0, 5.0, 8);
        let cmd = build_vest_command(0.0, &metrics, &set, &HapticConfig::default()).unwrap();
        for row in 0..4 {
            assert_eq!(cmd.front[row], [50, 0, 0, 0]);
            assert_eq!(cmd.back[row], [99, 0, 0, 0]);
        }

        metrics.reverse();
        let permuted = build_vest_command(0.0, &metrics, &set, &HapticConfig::default()).unwrap();
        assert_eq!(permuted, cmd);
    }

    #[test]
    fn missing_finger_is_degraded() {
        let set = CalibrationSet::new(
            FingerId::ALL.map(|f| FingerCalibration::new(f, 10.0, 8.0).unwrap()),
        );
        let metrics = vec![contact(FingerId::Index, 0.0, 10.0, 4)];
        let cmd = build_vest_command(0.0, &metrics, &set, &HapticConfig::default()).unwrap();
        assert!(cmd.degraded);
        assert_eq!(cmd.front[2], [0, 99, 0, 0]);
    }

    #[test]
    fn flat_layout_is_row_major() {
        let mut cmd = VestCommand::zeroed(1.0);
        cmd.set_column(2, 7, 9);
        let flat = cmd.front_flat();
        assert_eq!(flat[2], 7);
        assert_eq!(flat[6], 7);
        assert_eq!(flat[3], 0);
        let back = VestCommand::from_flat(1.0, &cmd.front_flat(), &cmd.back_flat());
        assert_eq!(back, cmd);
    }

    #[test]
    fn calibrate_takes_max() {
        let mut stream = Vec::new();
        for (i, &c) in [1.0, 5.0, 3.0].iter().enumerate() {
            for f in FingerId::ALL {
                stream.push(contact(f, i as f64, c, (i + 1) as u32));
            }
        }
        let set = calibrate(&stream, None, CalibrationMode::Max).unwrap();
        let thumb = set.get(FingerId::Thumb).unwrap();
        assert_eq!(thumb.cci_max, 5.0);
        assert_eq!(thumb.eda_max, 3.0);

        let windowed = calibrate(&stream, Some(0.5), CalibrationMode::Max).unwrap();
        assert_eq!(windowed.get(FingerId::Ring).unwrap().cci_max, 1.0);
    }

    #[test]
    fn calibrate_reports_fingers_without_contact() {
        let stream = vec![
            contact(FingerId::Thumb, 0.0, 2.0, 3),
            ContactMetrics::no_contact(FingerId::Index, 0.0),
        ];
        match calibrate(&stream, None, CalibrationMode::Max) {
            Err(HapticError::NoContact(f)) => {
                assert_eq!(f, vec![FingerId::Index, FingerId::Middle, FingerId::Ring])
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(calibrate(&stream, None, CalibrationMode::Percentile(0.0)).is_err());
    }

    #[test]
    fn calibration_file_round_trip() {
        let set = CalibrationSet::new([
            FingerCalibration::new(FingerId::Thumb, 12.5, 30.0).unwrap(),
            FingerCalibration::new(FingerId::Ring, 0.25, 140.0).unwrap(),
        ]);
        let json = set.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["thumb"]["cci_max"], 12.5);
        assert_eq!(CalibrationSet::from_json(&json).unwrap(), set);

        let bad = json.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(
            CalibrationSet::from_json(&bad),
            Err(HapticError::SchemaVersion(9))
        ));
        let negative = json.replace("12.5", "-1.0");
        assert!(CalibrationSet::from_json(&negative).is_err());
    }
}
