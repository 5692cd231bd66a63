use serde::{Deserialize, Serialize};

use super::{ObjectSpec, SimError};
use crate::emg::PoseIndex;

const TIME_EPS: f64 = 1e-9;

/// Per-finger normal force (N) for each pose, lowest pose first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct ForceTable([f64; 5]);

impl ForceTable {
    pub fn new(forces: [f64; 5]) -> Result<Self, SimError> {
        if forces.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(SimError::InvalidForceTable(format!(
                "{forces:?} has a negative or non-finite entry"
            )));
        }
        if forces.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidForceTable(format!(
                "{forces:?} is not strictly increasing"
            )));
        }
        Ok(Self(forces))
    }

    pub fn force(&self, pose: PoseIndex) -> f64 {
        self.0[usize::from(pose.value() - 1)]
    }

    pub fn entries(&self) -> [f64; 5] {
        self.0
    }
}

impl Default for ForceTable {
    fn default() -> Self {
        Self([0.0, 2.0, 5.0, 10.0, 18.0])
    }
}

impl TryFrom<[f64; 5]> for ForceTable {
    type Error = SimError;
    fn try_from(v: [f64; 5]) -> Result<Self, SimError> {
        Self::new(v)
    }
}

impl From<ForceTable> for [f64; 5] {
    fn from(t: ForceTable) -> Self {
        t.0
    }
}

/// Convenience wrapper taking a 1-based pose number.
pub fn pose_to_force(table: &ForceTable, pose: u8) -> Result<f64, SimError> {
    let pose = PoseIndex::new(pose).map_err(|e| SimError::InvalidParameter(e.to_string()))?;
    Ok(table.force(pose))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub gravity: f64,
    /// Extra friction margin required on top of the object's weight.
    pub hold_margin: f64,
    /// m/s
    pub lift_speed: f64,
    /// m
    pub lift_target: f64,
    /// Time a finger must stay above the crush force before it counts as a deformation.
    pub deformation_dwell: f64,
    /// Continuous excess after which the object is permanently crushed.
    pub crush_sustain: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            hold_margin: 0.1,
            lift_speed: 0.1,
            lift_target: 0.2,
            deformation_dwell: 0.2,
            crush_sustain: 1.0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("gravity", self.gravity),
            ("lift_speed", self.lift_speed),
            ("lift_target", self.lift_target),
            ("deformation_dwell", self.deformation_dwell),
            ("crush_sustain", self.crush_sustain),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.hold_margin.is_finite() && self.hold_margin >= 0.0) {
            return Err(SimError::InvalidParameter(
                "hold_margin must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Total normal force needed for friction to carry the object.
    pub fn required_grip(&self, object: &ObjectSpec) -> f64 {
        object.mass * self.gravity * (1.0 + self.hold_margin) / object.friction_mu
    }

    pub fn holds(&self, object: &ObjectSpec, total_force: f64) -> bool {
        total_force > 0.0
            && object.friction_mu * total_force
                >= object.mass * self.gravity * (1.0 + self.hold_margin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldEvent {
    Grasped,
    Lifted,
    Slip,
    Deformation,
    Crushed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspState {
    pub time: f64,
    pub forces: [f64; 4],
    pub height: f64,
    pub held: bool,
    pub slip_events: u32,
    pub deformation_events: u32,
    pub crushed: bool,
    excess_time: f64,
    deformation_latched: bool,
}

impl Default for GraspState {
    fn default() -> Self {
        Self {
            time: 0.0,
            forces: [0.0; 4],
            height: 0.0,
            held: false,
            slip_events: 0,
            deformation_events: 0,
            crushed: false,
            excess_time: 0.0,
            deformation_latched: false,
        }
    }
}

/// Advance the quasi-static grasp by one step, returning the events that fired.
pub fn step_world(
    state: &mut GraspState,
    forces: [f64; 4],
    object: &ObjectSpec,
    world: &WorldConfig,
    dt: f64,
) -> Result<Vec<WorldEvent>, SimError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut events = Vec::new();
    let forces = forces.map(|f| f.max(0.0));
    let total: f64 = forces.iter().sum();
    let was_held = state.held;
    state.held = world.holds(object, total);

    if state.held {
        if !was_held {
            events.push(WorldEvent::Grasped);
        }
        let below = state.height < world.lift_target;
        state.height = (state.height + world.lift_speed * dt).min(world.lift_target);
        if below && state.height >= world.lift_target {
            events.push(WorldEvent::Lifted);
        }
    } else if was_held && state.height > 0.0 {
        state.slip_events += 1;
        state.height = 0.0;
        events.push(WorldEvent::Slip);
    } else {
        state.height = 0.0;
    }

    let peak = forces.iter().copied().fold(0.0, f64::max);
    if peak > object.crush_limit() {
        state.excess_time += dt;
        if !state.deformation_latched && state.excess_time + TIME_EPS >= world.deformation_dwell {
            state.deformation_latched = true;
            state.deformation_events += 1;
            events.push(WorldEvent::Deformation);
        }
        if !state.crushed && state.excess_time + TIME_EPS >= world.crush_sustain {
            state.crushed = true;
            events.push(WorldEvent::Crushed);
        }
    } else {
        state.excess_time = 0.0;
        state.deformation_latched = false;
    }

    state.forces = forces;
    state.time += dt;
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::default_objects;

    fn run(object: &ObjectSpec, per_finger: f64, seconds: f64) -> GraspState {
        let mut s = GraspState::default();
        let w = WorldConfig::default();
        for _ in 0..(seconds / 0.01).round() as usize {
            step_world(&mut s, [per_finger; 4], object, &w, 0.01).unwrap();
        }
        s
    }

    #[test]
    fn default_table_lookup() {
        let t = ForceTable::default();
        assert_eq!(pose_to_force(&t, 1).unwrap(), 0.0);
        assert_eq!(pose_to_force(&t, 5).unwrap(), 18.0);
        assert!(pose_to_force(&t, 0).is_err());
        assert!(pose_to_force(&t, 6).is_err());
    }

    #[test]
    fn table_must_increase() {
        assert!(ForceTable::new([0.0, 2.0, 2.0, 10.0, 18.0]).is_err());
        assert!(ForceTable::new([-1.0, 2.0, 3.0, 10.0, 18.0]).is_err());
        assert!(serde_json::from_str::<ForceTable>("[0,1,2,3,2]").is_err());
    }

    #[test]
    fn zero_force_never_lifts() {
        let s = run(&default_objects()[0], 0.0, 3.0);
        assert!(!s.held);
        assert_eq!(s.height, 0.0);
        assert_eq!(s.slip_events, 0);
    }

    #[test]
    fn coulomb_boundary_for_heavy_object() {
        let o = &default_objects()[0];
        let w = WorldConfig::default();
        assert!(w.holds(o, 20.0));
        assert!(w.holds(o, 8.0));
        assert!(!w.holds(o, 0.0));
        assert!(!w.holds(o, 6.0));
    }

    #[test]
    fn held_object_rises_to_target_and_stops() {
        let s = run(&default_objects()[0], 5.0, 3.0);
        assert!(s.held);
        assert_eq!(s.height, 0.2);
    }

    #[test]
    fn releasing_while_airborne_is_a_slip() {
        let o = &default_objects()[0];
        let w = WorldConfig::default();
        let mut s = GraspState::default();
        for _ in 0..50 {
            step_world(&mut s, [5.0; 4], o, &w, 0.01).unwrap();
        }
        let ev = step_world(&mut s, [1.0; 4], o, &w, 0.01).unwrap();
        assert_eq!(ev, vec![WorldEvent::Slip]);
        assert_eq!((s.slip_events, s.height), (1, 0.0));
        step_world(&mut s, [0.0; 4], o, &w, 0.01).unwrap();
        assert_eq!(s.slip_events, 1);
    }

    #[test]
    fn sustained_overload_deforms_soft_object() {
        let s = run(&default_objects()[2], 10.0, 0.5);
        assert_eq!(s.deformation_events, 1);
        assert!(!s.crushed);
        let s = run(&default_objects()[2], 10.0, 1.2);
        assert_eq!(s.deformation_events, 1);
        assert!(s.crushed);
    }

    #[test]
    fn short_overload_is_tolerated() {
        let s = run(&default_objects()[2], 10.0, 0.1);
        assert_eq!(s.deformation_events, 0);
        assert_eq!(run(&default_objects()[0], 18.0, 2.0).deformation_events, 0);
    }

    #[test]
    fn each_excursion_counts_once() {
        let o = &default_objects()[2];
        let w = WorldConfig::default();
        let mut s = GraspState::default();
        for f in [10.0, 3.0, 10.0] {
            for _ in 0..30 {
                step_world(&mut s, [f; 4], o, &w, 0.01).unwrap();
            }
        }
        assert_eq!(s.deformation_events, 2);
    }

    #[test]
    fn rejects_bad_dt() {
        let mut s = GraspState::default();
        assert!(step_world(
            &mut s,
            [0.0; 4],
            &default_objects()[0],
            &WorldConfig::default(),
            0.0
        )
        .is_err());
    }
}
