//! Three-channel EMG to grasp-pose decoding.
//!
//! Each channel is low-pass filtered, averaged over non-overlapping blocks of
//! `tau` samples, normalised by its calibrated maximum and quantised into one
//! of five pose levels. The three per-channel levels are then fused: any two
//! that agree win, otherwise the floor of their mean is taken.

mod butterworth;
pub mod io;

use serde::{Deserialize, Serialize};

pub use butterworth::{ButterworthLowPass, Section};

pub const CHANNELS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum EmgError {
    #[error(
        "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({sample_rate_hz} Hz / 2)"
    )]
    CutoffAboveNyquist { cutoff_hz: f64, sample_rate_hz: f64 },
    #[error("invalid EMG configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot average an empty block")]
    EmptyBlock,
    #[error("calibration stream is empty")]
    EmptyCalibration,
    #[error("channel maximum must be positive and finite, got {0}")]
    NonPositiveMax(f64),
    #[error("pose index {0} outside 1..=5")]
    PoseOutOfRange(i64),
    #[error("sample value {0} is not finite")]
    NonFinite(f64),
    #[error("timestamps must not decrease ({prev} then {next})")]
    NonMonotonic { prev: f64, next: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One multi-channel EMG reading in millivolts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmgSample {
    pub t: f64,
    pub channels: [f64; CHANNELS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmgConfig {
    pub sample_rate_hz: f64,
    pub cutoff_hz: f64,
    pub filter_order: usize,
    /// Block length for downsampling.
    pub tau: usize,
    /// Take the absolute value of raw samples before filtering.
    pub rectify: bool,
}

impl Default for EmgConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 1000.0,
            cutoff_hz: 50.0,
            filter_order: 4,
            tau: 100,
            rectify: false,
        }
    }
}

impl EmgConfig {
    pub fn validate(&self) -> Result<(), EmgError> {
        if self.tau == 0 {
            return Err(EmgError::InvalidConfig("tau must be at least 1".into()));
        }
        ButterworthLowPass::design(self.filter_order, self.cutoff_hz, self.sample_rate_hz)
            .map(|_| ())
    }

    /// Rate at which block averages (and so pose updates) are produced.
    pub fn effective_rate_hz(&self) -> f64 {
        self.sample_rate_hz / self.tau as f64
    }
}

/// Grasp tightness level, 1 (open) to 5 (tightest). Wire messages and the CLI
/// present it zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PoseIndex(u8);

impl PoseIndex {
    pub const MIN: PoseIndex = PoseIndex(1);
    pub const MAX: PoseIndex = PoseIndex(5);

    pub fn new(value: u8) -> Result<Self, EmgError> {
        if (1..=5).contains(&value) {
            Ok(Self(value))
        } else {
            Err(EmgError::PoseOutOfRange(i64::from(value)))
        }
    }

    pub fn from_external(value: u8) -> Result<Self, EmgError> {
        Self::new(value.saturating_add(1))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based presentation, 0..=4.
    pub fn external(self) -> u8 {
        self.0 - 1
    }

    pub fn all() -> impl Iterator<Item = PoseIndex> {
        (1..=5).map(PoseIndex)
    }
}

impl TryFrom<u8> for PoseIndex {
    type Error = EmgError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<PoseIndex> for u8 {
    fn from(p: PoseIndex) -> u8 {
        p.0
    }
}

/// Per-channel maximum of the block averages seen during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCalibration {
    e_max: [f64; CHANNELS],
}

impl ChannelCalibration {
    pub fn new(e_max: [f64; CHANNELS]) -> Result<Self, EmgError> {
        for v in e_max {
            if !(v.is_finite() && v > 0.0) {
                return Err(EmgError::NonPositiveMax(v));
            }
        }
        Ok(Self { e_max })
    }

    pub fn e_max(&self) -> [f64; CHANNELS] {
        self.e_max
    }

    /// Running maximum over a stream of per-channel block averages.
    pub fn from_blocks<'a>(
        blocks: impl IntoIterator<Item = &'a [f64; CHANNELS]>,
    ) -> Result<Self, EmgError> {
        let blocks: Vec<_> = blocks.into_iter().collect();
        let mut e_max = [0.0; CHANNELS];
        for (ch, slot) in e_max.iter_mut().enumerate() {
            *slot = calibrate_channel(blocks.iter().map(|b| b[ch]))?;
        }
        Self::new(e_max)
    }
}

/// Mean of one block of filtered samples.
pub fn downsample_block(block: &[f64]) -> Result<f64, EmgError> {
    if block.is_empty() {
        return Err(EmgError::EmptyBlock);
    }
    Ok(block.iter().sum::<f64>() / block.len() as f64)
}

/// Largest value in a stream of block averages.
pub fn calibrate_channel(values: impl IntoIterator<Item = f64>) -> Result<f64, EmgError> {
    values
        .into_iter()
        .reduce(f64::max)
        .ok_or(EmgError::EmptyCalibration)
}

/// Quantise a block average into five equal bands of `[0, e_max]`. Values
/// above `e_max` (calibration underestimated the maximum) clamp to 5.
pub fn quantize_pose(e_bar: f64, e_max: f64) -> Result<PoseIndex, EmgError> {
    if !(e_max.is_finite() && e_max > 0.0) {
        return Err(EmgError::NonPositiveMax(e_max));
    }
    if !e_bar.is_finite() {
        return Err(EmgError::NonFinite(e_bar));
    }
    let level = (4.0 * e_bar / e_max + 1.0).floor().clamp(1.0, 5.0);
    Ok(PoseIndex(level as u8))
}

/// Two-of-three vote, falling back to the floored mean when all differ.
pub fn fuse_poses(a: PoseIndex, b: PoseIndex, c: PoseIndex) -> PoseIndex {
    if a == b || a == c {
        a
    } else if b == c {
        b
    } else {
        PoseIndex((a.0 + b.0 + c.0) / 3)
    }
}

/// Block averages for all channels at the end of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockAverage {
    /// Timestamp of the block's last sample.
    pub t: f64,
    pub e_bar: [f64; CHANNELS],
}

/// Decoded pose for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseUpdate {
    pub t: f64,
    pub per_channel: [PoseIndex; CHANNELS],
    pub fused: PoseIndex,
}

/// Filtering and block averaging for all channels. Trailing partial blocks are
/// held until complete.
#[derive(Debug, Clone)]
pub struct EmgPipeline {
    config: EmgConfig,
    filters: [ButterworthLowPass; CHANNELS],
    block: [Vec<f64>; CHANNELS],
    last_t: Option<f64>,
}

impl EmgPipeline {
    pub fn new(config: EmgConfig) -> Result<Self, EmgError> {
        config.validate()?;
        let filter = ButterworthLowPass::design(
            config.filter_order,
            config.cutoff_hz,
            config.sample_rate_hz,
        )?;
        let tau = config.tau;
        Ok(Self {
            filters: [filter.clone(), filter.clone(), filter],
            block: std::array::from_fn(|_| Vec::with_capacity(tau)),
            config,
            last_t: None,
        })
    }

    pub fn config(&self) -> &EmgConfig {
        &self.config
    }

    pub fn push(&mut self, sample: &EmgSample) -> Result<Option<BlockAverage>, EmgError> {
        if let Some(&bad) = sample.channels.iter().find(|v| !v.is_finite()) {
            return Err(EmgError::NonFinite(bad));
        }
        if let Some(prev) = self.last_t {
            if sample.t < prev {
                return Err(EmgError::NonMonotonic {
                    prev,
                    next: sample.t,
                });
            }
        }
        self.last_t = Some(sample.t);

        for ch in 0..CHANNELS {
            let raw = sample.channels[ch];
            let x = if self.config.rectify { raw.abs() } else { raw };
            let y = self.filters[ch].process(x);
            self.block[ch].push(y);
        }
        if self.block[0].len() < self.config.tau {
            return Ok(None);
        }
        let mut e_bar = [0.0; CHANNELS];
        for (e, block) in e_bar.iter_mut().zip(self.block.iter_mut()) {
            *e = downsample_block(block)?;
            block.clear();
        }
        Ok(Some(BlockAverage { t: sample.t, e_bar }))
    }

    pub fn push_all(&mut self, samples: &[EmgSample]) -> Result<Vec<BlockAverage>, EmgError> {
        let mut out = Vec::new();
        for s in samples {
            if let Some(b) = self.push(s)? {
                out.push(b);
            }
        }
        Ok(out)
    }
}

pub fn decode_block(
    block: &BlockAverage,
    calibration: &ChannelCalibration,
) -> Result<PoseUpdate, EmgError> {
    let e_max = calibration.e_max();
    let mut per_channel = [PoseIndex::MIN; CHANNELS];
    for ch in 0..CHANNELS {
        per_channel[ch] = quantize_pose(block.e_bar[ch], e_max[ch])?;
    }
    Ok(PoseUpdate {
        t: block.t,
        per_channel,
        fused: fuse_poses(per_channel[0], per_channel[1], per_channel[2]),
    })
}

/// Pipeline plus calibration: raw samples in, pose updates out.
#[derive(Debug, Clone)]
pub struct PoseDecoder {
    pipeline: EmgPipeline,
    calibration: ChannelCalibration,
}

impl PoseDecoder {
    pub fn new(config: EmgConfig, calibration: ChannelCalibration) -> Result<Self, EmgError> {
        Ok(Self {
            pipeline: EmgPipeline::new(config)?,
            calibration,
        })
    }

    pub fn calibration(&self) -> &ChannelCalibration {
        &self.calibration
    }

    pub fn push(&mut self, sample: &EmgSample) -> Result<Option<PoseUpdate>, EmgError> {
        match self.pipeline.push(sample)? {
            Some(block) => decode_block(&block, &self.calibration).map(Some),
            None => Ok(None),
        }
    }
}
