use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Physical description of a graspable test object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub name: String,
    /// kg
    pub mass: f64,
    /// N/mm
    pub stiffness: f64,
    pub friction_mu: f64,
    /// Per-finger force (N) above which the object deforms; `None` is rigid.
    pub crush_force: Option<f64>,
    /// How focal the contact imprint is; scales the rendered peak.
    pub contact_sharpness: f64,
}

impl ObjectSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |reason: &str| {
            Err(SimError::InvalidObject {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.name.is_empty() {
            return fail("empty name");
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return fail("mass must be positive");
        }
        if !(self.stiffness.is_finite() && self.stiffness > 0.0) {
            return fail("stiffness must be positive");
        }
        if !(self.friction_mu > 0.0 && self.friction_mu < 2.0) {
            return fail("friction coefficient must lie in (0, 2)");
        }
        if let Some(c) = self.crush_force {
            if !(c.is_finite() && c > 0.0) {
                return fail("crush force must be positive");
            }
        }
        if !(self.contact_sharpness.is_finite() && self.contact_sharpness > 0.0) {
            return fail("contact sharpness must be positive");
        }
        Ok(())
    }

    pub fn crush_limit(&self) -> f64 {
        self.crush_force.unwrap_or(f64::INFINITY)
    }
}

/// The three reference objects: a heavy rigid bottle, a medium container and
/// a light deformable bag.
pub fn default_objects() -> Vec<ObjectSpec> {
    vec![
        ObjectSpec {
            name: "object1".into(),
            mass: 0.5,
            stiffness: 10.0,
            friction_mu: 0.8,
            crush_force: None,
            contact_sharpness: 1.0,
        },
        ObjectSpec {
            name: "object2".into(),
            mass: 0.25,
            stiffness: 7.0,
            friction_mu: 0.7,
            crush_force: Some(25.0),
            contact_sharpness: 0.7,
        },
        ObjectSpec {
            name: "object3".into(),
            mass: 0.1,
            stiffness: 5.0,
            friction_mu: 0.5,
            crush_force: Some(6.0),
            contact_sharpness: 0.5,
        },
    ]
}

/// Read a JSON array of objects.
pub fn load_object_library(path: &Path) -> Result<Vec<ObjectSpec>, SimError> {
    let objects: Vec<ObjectSpec> = serde_json::from_str(&fs::read_to_string(path)?)?;
    for o in &objects {
        o.validate()?;
    }
    Ok(objects)
}
