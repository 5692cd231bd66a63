//! On-disk run directories and their replay.
//!
//! Layout of a run directory:
//! `manifest.json` (configuration, object, seed, tool version),
//! `trace.jsonl` (one [`TraceRecord`] per tick), `metrics.jsonl` (one
//! contact-metrics record per finger per tick), `result.json`, and
//! optionally `frames/` holding every baseline and stream image.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::setup::TrialSetup;
use super::{HarnessError, TickOutput, TraceRecord, TrialConfig, TrialObserver, TrialResult};
use crate::finger::FingerId;
use crate::sim::ObjectSpec;
use crate::tactile::io::{load_entry, read_manifest, FrameKind, FrameRecorder};
use crate::tactile::{capture_baseline, extract_metrics};

pub const MANIFEST: &str = "manifest.json";
pub const TRACE: &str = "trace.jsonl";
pub const METRICS: &str = "metrics.jsonl";
pub const RESULT: &str = "result.json";
pub const FRAMES_DIR: &str = "frames";

/// Enough to reproduce a run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub trial: TrialConfig,
    pub object: ObjectSpec,
    pub frames: bool,
}

impl RunManifest {
    pub fn new(trial: &TrialConfig, object: &ObjectSpec, frames: bool) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: trial.seed,
            trial: trial.clone(),
            object: object.clone(),
            frames,
        }
    }

    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&fs::read_to_string(
            dir.join(MANIFEST),
        )?)?)
    }
}

fn write_line<T: Serialize>(out: &mut BufWriter<File>, value: &T) -> Result<(), HarnessError> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Observer that writes a run directory.
pub struct RunRecorder {
    dir: PathBuf,
    trace: BufWriter<File>,
    metrics: BufWriter<File>,
    frames: Option<FrameRecorder>,
}

impl RunRecorder {
    pub fn create(dir: &Path, manifest: &RunManifest) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join(MANIFEST),
            serde_json::to_string_pretty(manifest)? + "\n",
        )?;
        let frames = if manifest.frames {
            let frames_dir = dir.join(FRAMES_DIR);
            if frames_dir.exists() {
                fs::remove_dir_all(&frames_dir)?;
            }
            Some(FrameRecorder::create(&frames_dir)?)
        } else {
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            trace: BufWriter::new(File::create(dir.join(TRACE))?),
            metrics: BufWriter::new(File::create(dir.join(METRICS))?),
            frames,
        })
    }

    pub fn finish(mut self, result: &TrialResult) -> Result<(), HarnessError> {
        self.trace.flush()?;
        self.metrics.flush()?;
        if let Some(f) = self.frames.take() {
            f.finish()?;
        }
        fs::write(self.dir.join(RESULT), serde_json::to_string(result)? + "\n")?;
        Ok(())
    }
}

impl TrialObserver for RunRecorder {
    fn on_setup(&mut self, setup: &TrialSetup) -> Result<(), HarnessError> {
        if let Some(rec) = self.frames.as_mut() {
            let per_finger = setup.baseline_frames.len() / FingerId::ALL.len();
            for (i, frame) in setup.baseline_frames.iter().enumerate() {
                rec.record(FrameKind::Baseline, (i % per_finger.max(1)) as u64, frame)?;
            }
        }
        Ok(())
    }

    fn on_tick(&mut self, tick: &TickOutput<'_>) -> Result<(), HarnessError> {
        write_line(&mut self.trace, tick.record)?;
        for m in tick.metrics {
            write_line(&mut self.metrics, m)?;
        }
        if let Some(rec) = self.frames.as_mut() {
            for frame in tick.frames {
                rec.record(FrameKind::Stream, tick.tick, frame)?;
            }
        }
        Ok(())
    }
}

/// Outcome of re-deriving a run's metrics from its frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub frames_checked: usize,
    pub mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn is_match(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, HarnessError> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(line);
        }
    }
    Ok(out)
}

/// Recompute every logged metric from the recorded frames and compare the
/// serialised records byte for byte. Trace CCI/EDA columns are checked too.
pub fn replay(dir: &Path) -> Result<ReplayReport, HarnessError> {
    let manifest = RunManifest::load(dir)?;
    if !manifest.frames {
        return Err(HarnessError::Config(format!(
            "{} was recorded without frames",
            dir.display()
        )));
    }
    let cfg = &manifest.trial.sim.metrics;
    let frames_dir = dir.join(FRAMES_DIR);
    let entries = read_manifest(&frames_dir)?;

    let mut baselines = Vec::with_capacity(4);
    for finger in FingerId::ALL {
        let frames = entries
            .iter()
            .filter(|e| e.kind == FrameKind::Baseline && e.finger == finger)
            .map(|e| load_entry(&frames_dir, e))
            .collect::<Result<Vec<_>, _>>()?;
        baselines.push(capture_baseline(&frames)?);
    }

    let logged = read_lines(&dir.join(METRICS))?;
    let trace: Vec<TraceRecord> = read_lines(&dir.join(TRACE))?
        .iter()
        .map(|l| serde_json::from_str(l))
        .collect::<Result<_, _>>()?;
    let mut mismatches = Vec::new();
    let stream: Vec<_> = entries
        .iter()
        .filter(|e| e.kind == FrameKind::Stream)
        .collect();
    if stream.len() != logged.len() {
        mismatches.push(format!(
            "{} stream frames but {} metric records",
            stream.len(),
            logged.len()
        ));
    }
    for (i, (entry, line)) in stream.iter().zip(&logged).enumerate() {
        let frame = load_entry(&frames_dir, entry)?;
        let m = extract_metrics(&frame, &baselines[entry.finger.index()], cfg)?;
        let recomputed = serde_json::to_string(&m)?;
        if &recomputed != line {
            mismatches.push(format!(
                "metrics line {}: logged {line} recomputed {recomputed}",
                i + 1
            ));
        }
        let tick = i / 4;
        if let Some(rec) = trace.get(tick) {
            let f = entry.finger.index();
            if rec.cci[f].to_bits() != m.cci.to_bits() || rec.eda[f] != m.eda {
                mismatches.push(format!(
                    "trace line {} {}: logged cci {} eda {}, recomputed cci {} eda {}",
                    tick + 1,
                    entry.finger,
                    rec.cci[f],
                    rec.eda[f],
                    m.cci,
                    m.eda
                ));
            }
        }
    }
    if trace.len() * 4 != stream.len() {
        mismatches.push(format!(
            "{} trace records for {} stream frames",
            trace.len(),
            stream.len()
        ));
    }
    Ok(ReplayReport {
        frames_checked: stream.len(),
        mismatches,
    })
}

/// Run a trial and write its directory.
pub fn record_trial(
    config: &TrialConfig,
    library: &[ObjectSpec],
    dir: &Path,
    frames: bool,
) -> Result<TrialResult, HarnessError> {
    let object = library
        .iter()
        .find(|o| o.name == config.object)
        .ok_or_else(|| HarnessError::UnknownObject(config.object.clone()))?;
    let manifest = RunManifest::new(config, object, frames);
    let mut recorder = RunRecorder::create(dir, &manifest)?;
    let result = super::run_trial_observed(config, library, &mut recorder)?;
    recorder.finish(&result)?;
    Ok(result)
}
