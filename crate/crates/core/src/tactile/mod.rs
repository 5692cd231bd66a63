//! Fingertip tactile images and the contact metrics derived from them.
//!
//! A camera-based fingertip sensor produces RGB frames of its gel. Subtracting
//! a baseline frame recorded without contact leaves the deformation signal,
//! which is collapsed into a scalar pressure-proxy map. Two contact
//! morphology metrics are read off that map:
//!
//! * **EDA** (effective deformation area): the number of pixels at or above an
//!   adaptive threshold placed below the value at the pressure centroid.
//! * **CCI** (contact concentration index): the map's peak divided by EDA.
//!
//! Sharp, focal contacts give a high CCI and small EDA; broad contacts give the
//! opposite.

mod frame;
pub mod io;
mod metrics;

pub use frame::{BaselineFrame, DiffFrame, PressureMap, TactileFrame};
pub use metrics::{
    capture_baseline, compute_cci, compute_centroid, compute_eda, compute_sigma, compute_threshold,
    diff_frame, extract_from_map, extract_metrics, intensity_std, to_pressure_map, Centroid,
    ContactMetrics, GrayscaleWeights, MetricsConfig, ThresholdMode,
};

use crate::finger::FingerId;

#[derive(Debug, thiserror::Error)]
pub enum TactileError {
    #[error("baseline needs at least one frame")]
    EmptyBaseline,
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("finger mismatch: expected {expected}, found {found}")]
    FingerMismatch { expected: FingerId, found: FingerId },
    #[error("pixel buffer holds {found} pixels, expected {expected}")]
    PixelCount { expected: usize, found: usize },
    #[error("invalid grayscale weights: {0}")]
    InvalidWeights(String),
    #[error("pressure map value {0} is negative or not finite")]
    InvalidValue(f64),
    #[error("no contact: pressure mass is below the contact threshold")]
    NoContact,
    #[error("malformed frame data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
