use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::emg::{EmgSample, CHANNELS};

/// Synthetic forearm EMG envelope source.
///
/// Channel `c` produces `e_scale * gain[c] * a^exponent[c] * (1 + noise_sd * n)`
/// for activation `a`. Gains model electrode placement and cancel out after
/// per-channel calibration; the slightly different recruitment exponents keep
/// the channels from agreeing everywhere near a pose boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmgSynthConfig {
    pub sample_rate_hz: f64,
    /// Envelope amplitude at full activation, in millivolts.
    pub e_scale: f64,
    pub channel_gains: [f64; CHANNELS],
    pub recruitment_exponents: [f64; CHANNELS],
    /// Relative multiplicative noise per sample.
    pub noise_sd: f64,
}

impl Default for EmgSynthConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 1000.0,
            e_scale: 1.0,
            channel_gains: [1.0, 0.95, 1.05],
            recruitment_exponents: [1.0, 0.95, 1.05],
            noise_sd: 0.05,
        }
    }
}

impl EmgSynthConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.sample_rate_hz) || !pos(self.e_scale) {
            return Err(SimError::InvalidParameter(
                "EMG sample rate and scale must be positive".into(),
            ));
        }
        if !self
            .channel_gains
            .iter()
            .chain(&self.recruitment_exponents)
            .all(|&v| pos(v))
        {
            return Err(SimError::InvalidParameter(
                "EMG gains and exponents must be positive".into(),
            ));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(SimError::InvalidParameter(
                "EMG noise must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Produce `count` samples at constant activation, numbered from
/// `first_sample` so timestamps stay monotone across calls.
pub fn synth_emg<R: Rng + ?Sized>(
    activation: f64,
    cfg: &EmgSynthConfig,
    first_sample: u64,
    count: usize,
    rng: &mut R,
) -> Vec<EmgSample> {
    let a = if activation.is_finite() {
        activation.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let level: [f64; CHANNELS] = std::array::from_fn(|c| {
        cfg.e_scale * cfg.channel_gains[c] * a.powf(cfg.recruitment_exponents[c])
    });
    (0..count as u64)
        .map(|i| {
            let t = (first_sample + i) as f64 / cfg.sample_rate_hz;
            let channels = std::array::from_fn(|c| {
                let n: f64 = if cfg.noise_sd > 0.0 {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                };
                (level[c] * (1.0 + cfg.noise_sd * n)).max(0.0)
            });
            EmgSample { t, channels }
        })
        .collect()
}
