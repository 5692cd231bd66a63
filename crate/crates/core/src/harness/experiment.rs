use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pearson, run_trial, Condition, HarnessError, SimConfig, TrialConfig, TrialResult};
use crate::sim::ObjectSpec;

/// A grid of objects by conditions with `n_per_cell` seeded trials each.
/// Trial `i` of every cell uses seed `base_seed + i`, so cells are paired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub objects: Vec<String>,
    pub conditions: Vec<Condition>,
    pub n_per_cell: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub sim: SimConfig,
}

/// Per-trial outcome plus the pose/contact correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub object: String,
    pub condition: Condition,
    pub seed: u64,
    pub success: bool,
    pub completion_time: f64,
    pub slip_count: u32,
    pub deformation_count: u32,
    pub crushed: bool,
    /// Pearson r between fused pose and mean normalised CCI; absent when undefined.
    pub r_pose_cci: Option<f64>,
    pub r_pose_eda: Option<f64>,
}

impl TrialRow {
    pub fn from_result(r: &TrialResult) -> Self {
        let pose = r.series.pose_f64();
        Self {
            object: r.object.clone(),
            condition: r.condition,
            seed: r.seed,
            success: r.success,
            completion_time: r.completion_time,
            slip_count: r.slip_count,
            deformation_count: r.deformation_count,
            crushed: r.crushed,
            r_pose_cci: pearson(&pose, &r.series.mean_cci()).ok(),
            r_pose_eda: pearson(&pose, &r.series.mean_eda()).ok(),
        }
    }
}

/// Aggregates for one object and condition. Means are absent for empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub object: String,
    pub condition: Condition,
    pub n: usize,
    pub successes: usize,
    pub mean_completion_time: Option<f64>,
    pub mean_slip: Option<f64>,
    pub mean_deformation: Option<f64>,
    pub success_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRow>,
}

impl ExperimentSummary {
    /// Fold trial rows into cells, in the given object and condition order.
    pub fn from_rows(objects: &[String], conditions: &[Condition], trials: Vec<TrialRow>) -> Self {
        let mut cells = Vec::with_capacity(objects.len() * conditions.len());
        for object in objects {
            for &condition in conditions {
                let rows: Vec<&TrialRow> = trials
                    .iter()
                    .filter(|r| &r.object == object && r.condition == condition)
                    .collect();
                let n = rows.len();
                let mean = |f: &dyn Fn(&TrialRow) -> f64| {
                    (n > 0).then(|| rows.iter().map(|r| f(r)).sum::<f64>() / n as f64)
                };
                let successes = rows.iter().filter(|r| r.success).count();
                cells.push(CellSummary {
                    object: object.clone(),
                    condition,
                    n,
                    successes,
                    mean_completion_time: mean(&|r| r.completion_time),
                    mean_slip: mean(&|r| f64::from(r.slip_count)),
                    mean_deformation: mean(&|r| f64::from(r.deformation_count)),
                    success_ratio: (n > 0).then(|| successes as f64 / n as f64),
                });
            }
        }
        Self { cells, trials }
    }

    pub fn cell(&self, object: &str, condition: Condition) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.object == object && c.condition == condition)
    }
}

/// Run every trial of the grid. Trials execute in parallel; results come
/// back in object, condition, trial-index order.
pub fn run_experiment(
    spec: &ExperimentSpec,
    library: &[ObjectSpec],
) -> Result<(ExperimentSummary, Vec<TrialResult>), HarnessError> {
    if spec.n_per_cell == 0 {
        return Err(HarnessError::Config(
            "trials per cell must be at least 1".into(),
        ));
    }
    spec.sim.validate()?;
    for name in &spec.objects {
        if !library.iter().any(|o| &o.name == name) {
            return Err(HarnessError::UnknownObject(name.clone()));
        }
    }
    if spec.conditions.contains(&Condition::Manual) {
        return Err(HarnessError::Config(
            "manual trials cannot run in a batch experiment".into(),
        ));
    }
    let mut jobs = Vec::new();
    for object in &spec.objects {
        for &condition in &spec.conditions {
            for i in 0..spec.n_per_cell {
                jobs.push(TrialConfig {
                    object: object.clone(),
                    condition,
                    seed: spec.base_seed.wrapping_add(i as u64),
                    sim: spec.sim.clone(),
                });
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|cfg| run_trial(cfg, library))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = results.iter().map(TrialRow::from_result).collect();
    Ok((
        ExperimentSummary::from_rows(&spec.objects, &spec.conditions, rows),
        results,
    ))
}
