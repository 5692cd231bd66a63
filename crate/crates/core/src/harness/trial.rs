use serde::{Deserialize, Serialize};

use super::setup::{prepare_trial, TrialSetup};
use super::{Condition, HarnessError, TrialConfig};
use crate::emg::{PoseDecoder, PoseIndex, PoseUpdate};
use crate::finger::FingerId;
use crate::haptic::{build_vest_command, normalize, VestCommand};
use crate::sim::rng::{self, SimRng, Stream};
use crate::sim::{step_world, synth_emg, GraspState, ObjectSpec, Operator, Renderer, WorldEvent};
use crate::tactile::{extract_metrics, ContactMetrics, TactileFrame};

/// One line of the trial trace log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    /// Fused pose, zero-based.
    pub pose: u8,
    pub forces: [f64; 4],
    pub height: f64,
    pub held: bool,
    pub slip_events: u32,
    pub deformation_events: u32,
    pub cci: [f64; 4],
    pub eda: [u32; 4],
    pub vest_front: [u8; 4],
    pub activation: f64,
}

/// Aligned per-tick series kept with a result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialSeries {
    pub t: Vec<f64>,
    /// Fused pose, zero-based.
    pub pose: Vec<u8>,
    /// CCI per finger divided by that finger's calibration maximum, clamped to [0, 1].
    pub cci_norm: Vec<[f64; 4]>,
    pub eda_norm: Vec<[f64; 4]>,
    pub vest_front: Vec<[u8; 4]>,
    pub activation: Vec<f64>,
}

impl TrialSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn mean_cci(&self) -> Vec<f64> {
        self.cci_norm
            .iter()
            .map(|c| c.iter().sum::<f64>() / 4.0)
            .collect()
    }

    pub fn mean_eda(&self) -> Vec<f64> {
        self.eda_norm
            .iter()
            .map(|e| e.iter().sum::<f64>() / 4.0)
            .collect()
    }

    pub fn pose_f64(&self) -> Vec<f64> {
        self.pose.iter().map(|&p| f64::from(p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub object: String,
    pub condition: Condition,
    pub seed: u64,
    pub success: bool,
    /// Time of success, or the time limit.
    pub completion_time: f64,
    pub slip_count: u32,
    pub deformation_count: u32,
    pub crushed: bool,
    pub reference_pose: u8,
    pub target_intensity: f64,
    pub series: TrialSeries,
}

/// Everything produced during one tick, borrowed by observers.
#[derive(Debug)]
pub struct TickOutput<'a> {
    pub tick: u64,
    pub record: &'a TraceRecord,
    pub frames: &'a [TactileFrame],
    pub metrics: &'a [ContactMetrics],
    pub vest: &'a VestCommand,
    pub pose_update: Option<&'a PoseUpdate>,
    pub events: &'a [WorldEvent],
    pub success: bool,
}

/// Receives a trial as it unfolds.
pub trait TrialObserver {
    fn on_setup(&mut self, _setup: &TrialSetup) -> Result<(), HarnessError> {
        Ok(())
    }
    fn on_tick(&mut self, _tick: &TickOutput<'_>) -> Result<(), HarnessError> {
        Ok(())
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl TrialObserver for NoObserver {}

/// Tick-by-tick trial stepping, used both for batch runs and live sessions.
pub struct TrialRunner {
    config: TrialConfig,
    object: ObjectSpec,
    setup: TrialSetup,
    operator: Operator,
    decoder: PoseDecoder,
    renderer: Renderer,
    state: GraspState,
    emg_rng: SimRng,
    render_rng: SimRng,
    pose: PoseIndex,
    forces: [f64; 4],
    last_vest: VestCommand,
    slipped: bool,
    hold_time: f64,
    tick: u64,
    sample_index: u64,
    success_at: Option<f64>,
    series: TrialSeries,
}

impl TrialRunner {
    pub fn new(config: TrialConfig, objects: &[ObjectSpec]) -> Result<Self, HarnessError> {
        config.sim.validate()?;
        let object = objects
            .iter()
            .find(|o| o.name == config.object)
            .ok_or_else(|| HarnessError::UnknownObject(config.object.clone()))?
            .clone();
        object.validate()?;
        let sim = &config.sim;
        let setup = prepare_trial(&object, sim, config.seed)?;
        let operator = Operator::new(
            sim.operator.clone(),
            config.condition.operator_mode(),
            sim.dt,
            config.seed,
            setup.target_intensity,
            setup.nominal_activation,
        );
        let decoder = PoseDecoder::new(sim.emg.clone(), setup.emg_calibration)?;
        Ok(Self {
            emg_rng: rng::stream(config.seed, Stream::Emg),
            render_rng: rng::stream(config.seed, Stream::Render),
            object,
            setup,
            operator,
            decoder,
            renderer: Renderer::new(sim.render.clone()),
            state: GraspState::default(),
            pose: PoseIndex::MIN,
            forces: [0.0; 4],
            last_vest: VestCommand::zeroed(0.0),
            slipped: false,
            hold_time: 0.0,
            tick: 0,
            sample_index: 0,
            success_at: None,
            series: TrialSeries::default(),
            config,
        })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn setup(&self) -> &TrialSetup {
        &self.setup
    }

    pub fn object(&self) -> &ObjectSpec {
        &self.object
    }

    pub fn state(&self) -> &GraspState {
        &self.state
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// The trial ends on success or when the time limit is reached.
    pub fn is_finished(&self) -> bool {
        self.success_at.is_some() || self.tick as usize >= self.config.sim.total_ticks()
    }

    /// Advance one tick. `manual` is the externally commanded activation for
    /// manual trials and is ignored otherwise.
    pub fn step<F>(&mut self, manual: Option<f64>, observe: F) -> Result<(), HarnessError>
    where
        F: FnOnce(&TickOutput<'_>) -> Result<(), HarnessError>,
    {
        let sim = &self.config.sim;
        let dt = sim.dt;
        self.tick += 1;
        let t = self.tick as f64 * dt;

        let percept = self
            .config
            .condition
            .has_feedback()
            .then(|| self.last_vest.mean_front());
        let activation = self.operator.step(percept, self.slipped, manual);

        let n = sim.samples_per_tick();
        let samples = synth_emg(
            activation,
            &sim.emg_synth,
            self.sample_index,
            n,
            &mut self.emg_rng,
        );
        self.sample_index += n as u64;
        let mut pose_update = None;
        for s in &samples {
            if let Some(u) = self.decoder.push(s)? {
                self.pose = u.fused;
                pose_update = Some(u);
            }
        }

        let target = sim.force_table.force(self.pose);
        let alpha = if sim.force_lag > 0.0 {
            1.0 - (-dt / sim.force_lag).exp()
        } else {
            1.0
        };
        for f in &mut self.forces {
            *f += alpha * (target - *f);
        }

        let events = step_world(&mut self.state, self.forces, &self.object, &sim.world, dt)?;
        self.slipped = events.contains(&WorldEvent::Slip);

        let mut frames = Vec::with_capacity(4);
        let mut metrics = Vec::with_capacity(4);
        for (i, finger) in FingerId::ALL.into_iter().enumerate() {
            let frame = self.renderer.render(
                finger,
                self.forces[i],
                &self.object,
                t,
                &mut self.render_rng,
            );
            metrics.push(extract_metrics(
                &frame,
                &self.setup.baselines[i],
                &sim.metrics,
            )?);
            frames.push(frame);
        }
        let vest = build_vest_command(t, &metrics, &self.setup.vest_calibration, &sim.haptic)?;

        if self.state.held && self.state.height >= sim.world.lift_target {
            self.hold_time += dt;
        } else {
            self.hold_time = 0.0;
        }
        if self.success_at.is_none() && self.hold_time + 1e-9 >= sim.stable_hold && self.state.held
        {
            self.success_at = Some(t);
        }

        let record = TraceRecord {
            t,
            pose: self.pose.external(),
            forces: self.forces,
            height: self.state.height,
            held: self.state.held,
            slip_events: self.state.slip_events,
            deformation_events: self.state.deformation_events,
            cci: std::array::from_fn(|i| metrics[i].cci),
            eda: std::array::from_fn(|i| metrics[i].eda),
            vest_front: std::array::from_fn(|i| vest.front_column(FingerId::ALL[i])),
            activation,
        };
        self.push_series(&record);
        observe(&TickOutput {
            tick: self.tick,
            record: &record,
            frames: &frames,
            metrics: &metrics,
            vest: &vest,
            pose_update: pose_update.as_ref(),
            events: &events,
            success: self.success_at.is_some(),
        })?;
        self.last_vest = vest;
        Ok(())
    }

    fn push_series(&mut self, r: &TraceRecord) {
        let cal = &self.setup.vest_calibration;
        let norm = |i: usize, v: f64, pick: fn(&crate::haptic::FingerCalibration) -> f64| {
            cal.get(FingerId::ALL[i])
                .map_or(0.0, |c| normalize(v, pick(c)))
        };
        self.series.t.push(r.t);
        self.series.pose.push(r.pose);
        self.series
            .cci_norm
            .push(std::array::from_fn(|i| norm(i, r.cci[i], |c| c.cci_max)));
        self.series.eda_norm.push(std::array::from_fn(|i| {
            norm(i, f64::from(r.eda[i]), |c| c.eda_max)
        }));
        self.series.vest_front.push(r.vest_front);
        self.series.activation.push(r.activation);
    }

    pub fn into_result(self) -> TrialResult {
        TrialResult {
            object: self.config.object,
            condition: self.config.condition,
            seed: self.config.seed,
            success: self.success_at.is_some(),
            completion_time: self.success_at.unwrap_or(self.config.sim.time_limit),
            slip_count: self.state.slip_events,
            deformation_count: self.state.deformation_events,
            crushed: self.state.crushed,
            reference_pose: self.setup.reference_pose.external(),
            target_intensity: self.setup.target_intensity,
            series: self.series,
        }
    }
}

/// Run a whole trial, reporting every tick to `observer`.
pub fn run_trial_observed(
    config: &TrialConfig,
    objects: &[ObjectSpec],
    observer: &mut dyn TrialObserver,
) -> Result<TrialResult, HarnessError> {
    if config.condition == Condition::Manual {
        return Err(HarnessError::Config(
            "manual trials need a live activation source".into(),
        ));
    }
    let mut runner = TrialRunner::new(config.clone(), objects)?;
    observer.on_setup(runner.setup())?;
    while !runner.is_finished() {
        runner.step(None, |out| observer.on_tick(out))?;
    }
    Ok(runner.into_result())
}

pub fn run_trial(
    config: &TrialConfig,
    objects: &[ObjectSpec],
) -> Result<TrialResult, HarnessError> {
    run_trial_observed(config, objects, &mut NoObserver)
}
