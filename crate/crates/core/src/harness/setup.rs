//! Everything that happens before the first tick of a trial: sensor
//! baselines, vest calibration, EMG calibration and the operator's
//! familiarisation with the object.

use super::{HarnessError, SimConfig};
use crate::emg::{ChannelCalibration, EmgPipeline, PoseIndex};
use crate::finger::FingerId;
use crate::haptic::{build_vest_command, calibrate, CalibrationSet};
use crate::sim::rng::{self, Stream};
use crate::sim::{synth_emg, ForceTable, ObjectSpec, Renderer, WorldConfig};
use crate::tactile::{
    capture_baseline, extract_metrics, BaselineFrame, ContactMetrics, TactileFrame,
};

#[derive(Debug, Clone)]
pub struct TrialSetup {
    /// Raw no-contact frames, finger-major, as captured.
    pub baseline_frames: Vec<TactileFrame>,
    pub baselines: Vec<BaselineFrame>,
    pub vest_calibration: CalibrationSet,
    pub emg_calibration: ChannelCalibration,
    /// Grip level the operator aims for with this object.
    pub reference_pose: PoseIndex,
    /// Mean front intensity felt at the reference grip during familiarisation.
    pub target_intensity: f64,
    /// Activation at the middle of the reference pose band.
    pub nominal_activation: f64,
}

/// Highest grip among poses 2 to 4 that carries the object while staying
/// under `crush_safety` times its crush force. Falls back to the weakest grip
/// that carries it, then to the strongest grip.
pub fn reference_pose(
    object: &ObjectSpec,
    table: &ForceTable,
    world: &WorldConfig,
    crush_safety: f64,
) -> PoseIndex {
    let holds = |p: PoseIndex| world.holds(object, 4.0 * table.force(p));
    let safe = |p: PoseIndex| table.force(p) <= crush_safety * object.crush_limit();
    let pose = |v: u8| PoseIndex::new(v).expect("pose literal in range");
    (2..=4)
        .rev()
        .map(pose)
        .find(|&p| holds(p) && safe(p))
        .or_else(|| PoseIndex::all().find(|&p| holds(p)))
        .unwrap_or(PoseIndex::MAX)
}

/// Middle of the activation band that decodes to `pose` after calibration.
pub fn nominal_activation(pose: PoseIndex) -> f64 {
    ((f64::from(pose.value()) - 0.5) / 4.0).min(1.0)
}

pub fn prepare_trial(
    object: &ObjectSpec,
    sim: &SimConfig,
    seed: u64,
) -> Result<TrialSetup, HarnessError> {
    let renderer = Renderer::new(sim.render.clone());
    let mut base_rng = rng::stream(seed, Stream::Baseline);
    let mut baseline_frames = Vec::with_capacity(4 * sim.baseline_frames);
    let mut baselines = Vec::with_capacity(4);
    for finger in FingerId::ALL {
        let frames: Vec<_> = (0..sim.baseline_frames)
            .map(|_| renderer.render(finger, 0.0, object, 0.0, &mut base_rng))
            .collect();
        baselines.push(capture_baseline(&frames)?);
        baseline_frames.extend(frames);
    }

    let reference = reference_pose(object, &sim.force_table, &sim.world, sim.crush_safety);
    let mut cal_rng = rng::stream(seed, Stream::Calibration);
    let mut sweep: Vec<(PoseIndex, Vec<ContactMetrics>)> = Vec::new();
    let mut t = 0.0;
    for pose in PoseIndex::all().filter(|p| *p > PoseIndex::MIN) {
        let force = sim.force_table.force(pose);
        for _ in 0..sim.calibration_frames_per_pose {
            let metrics = FingerId::ALL
                .iter()
                .zip(&baselines)
                .map(|(&finger, base)| {
                    let frame = renderer.render(finger, force, object, t, &mut cal_rng);
                    extract_metrics(&frame, base, &sim.metrics)
                })
                .collect::<Result<Vec<_>, _>>()?;
            sweep.push((pose, metrics));
            t += sim.dt;
        }
    }
    let vest_calibration = calibrate(
        sweep.iter().flat_map(|(_, m)| m.iter()),
        None,
        sim.calibration_mode,
    )?;
    let mut felt = Vec::new();
    for (pose, metrics) in &sweep {
        if *pose == reference {
            felt.push(
                build_vest_command(0.0, metrics, &vest_calibration, &sim.haptic)?.mean_front(),
            );
        }
    }
    let target_intensity = felt.iter().sum::<f64>() / felt.len() as f64;

    let emg_calibration = calibrate_emg(sim, seed)?;
    Ok(TrialSetup {
        baseline_frames,
        baselines,
        vest_calibration,
        emg_calibration,
        reference_pose: reference,
        target_intensity,
        nominal_activation: nominal_activation(reference),
    })
}

/// Maximum voluntary contraction: full activation held, the settling part
/// discarded, the largest block average kept per channel.
pub fn calibrate_emg(sim: &SimConfig, seed: u64) -> Result<ChannelCalibration, HarnessError> {
    let mut r = rng::stream(seed, Stream::EmgCalibration);
    let n = (sim.emg_calibration_seconds * sim.emg_synth.sample_rate_hz).round() as usize;
    let samples = synth_emg(1.0, &sim.emg_synth, 0, n, &mut r);
    let mut pipeline = EmgPipeline::new(sim.emg.clone())?;
    let blocks = pipeline.push_all(&samples)?;
    let kept: Vec<_> = blocks
        .iter()
        .filter(|b| b.t >= sim.emg_calibration_settle)
        .map(|b| b.e_bar)
        .collect();
    Ok(ChannelCalibration::from_blocks(&kept)?)
}
