//! A stand-in for the person wearing the EMG band.
//!
//! With vest feedback the operator runs a delayed proportional controller on
//! the perceived front intensity. Without it they execute a planned squeeze
//! whose level is only as good as their guess, and whose hold slowly decays.
//! After seeing the object drop they re-plan, squeezing harder each time.
//! Both variants share the same grip decay and motor noise.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{self, SimRng};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    ClosedLoop,
    OpenLoop,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorModel {
    /// Activation change per tick for a full-scale (100) intensity error.
    pub gain: f64,
    /// s
    pub reaction_delay: f64,
    /// Motor noise added to activation every tick.
    pub noise_sd: f64,
    /// Desired front intensity; derived from a familiarisation sweep when absent.
    pub target_intensity: Option<f64>,
    /// Activation the operator plans for without feedback; derived when absent.
    pub nominal_activation: Option<f64>,
    /// Grip decay in activation per second.
    pub relax_rate: f64,
    /// Fastest deliberate activation change, per second.
    pub max_rate: f64,
    /// Spread of the open-loop squeeze level around the nominal.
    pub plan_sd: f64,
    /// Extra squeeze added to each re-plan for every slip seen so far.
    pub regrip_boost: f64,
}

impl Default for OperatorModel {
    fn default() -> Self {
        Self {
            gain: 0.1,
            reaction_delay: 0.2,
            noise_sd: 0.003,
            target_intensity: None,
            nominal_activation: None,
            relax_rate: 0.4,
            max_rate: 0.6,
            plan_sd: 0.2,
            regrip_boost: 0.1,
        }
    }
}

impl OperatorModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let nonneg = [
            ("gain", self.gain),
            ("reaction_delay", self.reaction_delay),
            ("noise_sd", self.noise_sd),
            ("relax_rate", self.relax_rate),
            ("plan_sd", self.plan_sd),
            ("regrip_boost", self.regrip_boost),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidParameter(format!(
                    "operator {name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.max_rate.is_finite() && self.max_rate > 0.0) {
            return Err(SimError::InvalidParameter(
                "operator max_rate must be positive".into(),
            ));
        }
        if let Some(t) = self.target_intensity {
            if !(0.0..=100.0).contains(&t) {
                return Err(SimError::InvalidParameter(format!(
                    "target intensity {t} outside 0..=100"
                )));
            }
        }
        if let Some(a) = self.nominal_activation {
            if !(0.0..=1.0).contains(&a) {
                return Err(SimError::InvalidParameter(format!(
                    "nominal activation {a} outside 0..=1"
                )));
            }
        }
        Ok(())
    }
}

/// One noise-free proportional correction step.
pub fn closed_loop_update(activation: f64, target: f64, percept: f64, gain: f64) -> f64 {
    (activation + gain * (target - percept) / 100.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Ramp,
    Hold,
}

#[derive(Debug, Clone)]
pub struct Operator {
    model: OperatorModel,
    mode: OperatorMode,
    dt: f64,
    target: f64,
    nominal: f64,
    activation: f64,
    delay_ticks: usize,
    percepts: VecDeque<f64>,
    slip_cues: VecDeque<usize>,
    slips_seen: u32,
    phase: Phase,
    plan_level: f64,
    noise: SimRng,
    plan: SimRng,
}

impl Operator {
    /// `target` is the desired front intensity and `nominal` the planned
    /// activation; the model's own values take precedence when set.
    pub fn new(
        model: OperatorModel,
        mode: OperatorMode,
        dt: f64,
        seed: u64,
        target: f64,
        nominal: f64,
    ) -> Self {
        let target = model.target_intensity.unwrap_or(target);
        let nominal = model.nominal_activation.unwrap_or(nominal);
        let delay_ticks = (model.reaction_delay / dt).round() as usize;
        let mut plan = rng::stream(seed, rng::Stream::OperatorPlan);
        let plan_level = draw_plan(&mut plan, nominal, model.plan_sd, 0.0);
        Self {
            model,
            mode,
            dt,
            target,
            nominal,
            activation: 0.0,
            delay_ticks,
            percepts: VecDeque::with_capacity(delay_ticks + 1),
            slip_cues: VecDeque::new(),
            slips_seen: 0,
            phase: Phase::Ramp,
            plan_level,
            noise: rng::stream(seed, rng::Stream::OperatorNoise),
            plan,
        }
    }

    pub fn activation(&self) -> f64 {
        self.activation
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn nominal(&self) -> f64 {
        self.nominal
    }

    pub fn mode(&self) -> OperatorMode {
        self.mode
    }

    /// Advance one tick. `percept` is the mean front vest intensity felt this
    /// tick (absent without feedback), `slipped` reports a visible drop, and
    /// `manual` carries an externally commanded activation.
    pub fn step(&mut self, percept: Option<f64>, slipped: bool, manual: Option<f64>) -> f64 {
        let n: f64 = self.noise.sample(StandardNormal);
        let noise = self.model.noise_sd * n;
        if slipped {
            self.slip_cues.push_back(self.delay_ticks);
        }
        let cue_due = self.tick_cues();
        self.percepts.push_back(percept.unwrap_or(0.0));
        let felt = if self.percepts.len() > self.delay_ticks {
            self.percepts.pop_front()
        } else {
            None
        };
        let max_step = self.model.max_rate * self.dt;
        let decay = self.model.relax_rate * self.dt;

        let next = match self.mode {
            OperatorMode::Manual => manual.unwrap_or(self.activation),
            OperatorMode::ClosedLoop => {
                let felt = felt.unwrap_or(0.0);
                let correction =
                    (self.model.gain * (self.target - felt) / 100.0).clamp(-max_step, max_step);
                self.activation + correction - decay + noise
            }
            OperatorMode::OpenLoop => {
                if cue_due {
                    self.slips_seen += 1;
                    let boost = self.model.regrip_boost * f64::from(self.slips_seen);
                    self.plan_level =
                        draw_plan(&mut self.plan, self.nominal, self.model.plan_sd, boost);
                    self.phase = Phase::Ramp;
                }
                let planned = match self.phase {
                    Phase::Ramp => {
                        let gap = self.plan_level - self.activation;
                        if gap.abs() <= max_step {
                            self.phase = Phase::Hold;
                            gap
                        } else {
                            max_step.copysign(gap)
                        }
                    }
                    Phase::Hold => -decay,
                };
                self.activation + planned + noise
            }
        };
        self.activation = if next.is_finite() {
            next.clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.activation
    }

    fn tick_cues(&mut self) -> bool {
        let before = self.slip_cues.len();
        for c in self.slip_cues.iter_mut() {
            *c = c.saturating_sub(1);
        }
        self.slip_cues.retain(|&c| c > 0);
        self.slip_cues.len() < before
    }
}

fn draw_plan(rng: &mut SimRng, nominal: f64, sd: f64, boost: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (nominal + boost + sd * z).clamp(0.0, 1.0)
}
