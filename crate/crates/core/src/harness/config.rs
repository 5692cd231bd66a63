use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::emg::EmgConfig;
use crate::haptic::{CalibrationMode, HapticConfig};
use crate::sim::{
    EmgSynthConfig, ForceTable, OperatorMode, OperatorModel, RenderConfig, WorldConfig,
};
use crate::tactile::MetricsConfig;

/// Feedback condition of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Haptic,
    NonHaptic,
    Manual,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Haptic, Condition::NonHaptic, Condition::Manual];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Haptic => "haptic",
            Condition::NonHaptic => "non_haptic",
            Condition::Manual => "manual",
        }
    }

    pub fn operator_mode(self) -> OperatorMode {
        match self {
            Condition::Haptic => OperatorMode::ClosedLoop,
            Condition::NonHaptic => OperatorMode::OpenLoop,
            Condition::Manual => OperatorMode::Manual,
        }
    }

    /// Whether the operator feels the vest.
    pub fn has_feedback(self) -> bool {
        !matches!(self, Condition::NonHaptic)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "haptic" => Ok(Condition::Haptic),
            "non_haptic" | "non-haptic" | "nonhaptic" => Ok(Condition::NonHaptic),
            "manual" => Ok(Condition::Manual),
            other => Err(HarnessError::Config(format!(
                "unknown condition '{other}' (expected haptic, non_haptic or manual)"
            ))),
        }
    }
}

/// Everything about a trial except which object, which condition and which seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// s
    pub time_limit: f64,
    /// Continuous hold at the lift target needed for success, s.
    pub stable_hold: f64,
    /// Time constant of the hand's force response, s.
    pub force_lag: f64,
    /// Frames averaged into each finger's baseline.
    pub baseline_frames: usize,
    /// Frames rendered per pose during haptic calibration.
    pub calibration_frames_per_pose: usize,
    pub calibration_mode: CalibrationMode,
    /// Seconds of full activation recorded for EMG calibration.
    pub emg_calibration_seconds: f64,
    /// Leading part of that recording discarded while the filter settles.
    pub emg_calibration_settle: f64,
    /// Fraction of an object's crush force the operator treats as the upper
    /// limit when choosing the grip to aim for.
    pub crush_safety: f64,
    pub force_table: ForceTable,
    pub world: WorldConfig,
    pub render: RenderConfig,
    pub metrics: MetricsConfig,
    pub haptic: HapticConfig,
    pub emg: EmgConfig,
    pub emg_synth: EmgSynthConfig,
    pub operator: OperatorModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            time_limit: 15.0,
            stable_hold: 0.5,
            force_lag: 0.05,
            baseline_frames: 10,
            calibration_frames_per_pose: 3,
            calibration_mode: CalibrationMode::Max,
            emg_calibration_seconds: 2.0,
            emg_calibration_settle: 0.5,
            crush_safety: 0.9,
            force_table: ForceTable::default(),
            world: WorldConfig::default(),
            render: RenderConfig::default(),
            metrics: MetricsConfig::default(),
            haptic: HapticConfig::default(),
            emg: EmgConfig::default(),
            emg_synth: EmgSynthConfig::default(),
            operator: OperatorModel::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |m: String| Err(HarnessError::Config(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return cfg(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return cfg(format!(
                "time_limit must be positive, got {}",
                self.time_limit
            ));
        }
        if !(self.stable_hold.is_finite() && self.stable_hold >= 0.0) {
            return cfg("stable_hold must be non-negative".into());
        }
        if !(self.force_lag.is_finite() && self.force_lag >= 0.0) {
            return cfg("force_lag must be non-negative".into());
        }
        if self.baseline_frames == 0 || self.calibration_frames_per_pose == 0 {
            return cfg("baseline and calibration frame counts must be at least 1".into());
        }
        if !(self.emg_calibration_seconds > self.emg_calibration_settle
            && self.emg_calibration_settle >= 0.0)
        {
            return cfg("EMG calibration must last longer than its settling period".into());
        }
        if !(self.crush_safety > 0.0 && self.crush_safety <= 1.0) {
            return cfg("crush_safety must lie in (0, 1]".into());
        }
        let samples_per_tick = self.emg_synth.sample_rate_hz * self.dt;
        if (samples_per_tick - samples_per_tick.round()).abs() > 1e-9 || samples_per_tick < 1.0 {
            return cfg(format!(
                "EMG rate {} Hz must give a whole number of samples per {} s tick",
                self.emg_synth.sample_rate_hz, self.dt
            ));
        }
        if (self.emg_synth.sample_rate_hz - self.emg.sample_rate_hz).abs() > 1e-9 {
            return cfg("EMG synthesis and decoding sample rates differ".into());
        }
        self.world.validate()?;
        self.render.validate()?;
        self.emg_synth.validate()?;
        self.operator.validate()?;
        self.emg.validate()?;
        Ok(())
    }

    pub fn samples_per_tick(&self) -> usize {
        (self.emg_synth.sample_rate_hz * self.dt).round() as usize
    }

    pub fn total_ticks(&self) -> usize {
        (self.time_limit / self.dt).round() as usize
    }
}

/// One trial: the object, the feedback condition, the seed and the rest of the setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub object: String,
    pub condition: Condition,
    pub seed: u64,
    #[serde(default)]
    pub sim: SimConfig,
}

impl TrialConfig {
    pub fn new(object: impl Into<String>, condition: Condition, seed: u64) -> Self {
        Self {
            object: object.into(),
            condition,
            seed,
            sim: SimConfig::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_names_round_trip() {
        for c in Condition::ALL {
            assert_eq!(c.as_str().parse::<Condition>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
        }
        assert!("haptics".parse::<Condition>().is_err());
    }

    #[test]
    fn defaults_validate() {
        SimConfig::default().validate().unwrap();
        assert_eq!(SimConfig::default().samples_per_tick(), 10);
        assert_eq!(SimConfig::default().total_ticks(), 1500);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg: SimConfig =
            serde_json::from_str(r#"{"time_limit":5.0,"operator":{"gain":0.05}}"#).unwrap();
        assert_eq!(cfg.time_limit, 5.0);
        assert_eq!(cfg.operator.gain, 0.05);
        assert_eq!(cfg.dt, 0.01);
        assert!(serde_json::from_str::<SimConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = |f: fn(&mut SimConfig)| {
            let mut c = SimConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.time_limit = -1.0));
        assert!(bad(|c| c.dt = 0.0015));
        assert!(bad(|c| c.emg.cutoff_hz = 600.0));
        assert!(bad(|c| c.crush_safety = 0.0));
    }
}
