use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{compose, decompose_pose_guarded, invert, PoseComponents, RigidTransform};
use crate::stream::TrackerSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    SinglePose,
    Provided,
}

/// Fixed transform from the head-tracker frame to the torso pitch link frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub t_cal: RigidTransform,
    pub captured_at: f64,
    pub method: CalibrationMethod,
}

impl CalibrationRecord {
    pub fn identity() -> Self {
        Self::provided(RigidTransform::identity())
    }

    pub fn provided(t_cal: RigidTransform) -> Self {
        Self {
            t_cal,
            captured_at: 0.0,
            method: CalibrationMethod::Provided,
        }
    }
}

/// Solves `t_cal ∘ neutral = reference_torso` from one neutral-stance tracker reading.
pub fn calibrate_single_pose(
    neutral: &TrackerSample,
    reference_torso: &RigidTransform,
) -> Result<CalibrationRecord> {
    let t_cal = compose(reference_torso, &invert(&neutral.pose)?)?;
    Ok(CalibrationRecord {
        t_cal,
        captured_at: neutral.timestamp,
        method: CalibrationMethod::SinglePose,
    })
}

/// Expresses a filtered tracker pose in the torso reference frame and decomposes it.
pub fn torso_referenced_pose(
    cal: &CalibrationRecord,
    filtered: &TrackerSample,
    gimbal_guard: f64,
) -> Result<PoseComponents> {
    let torso = compose(&cal.t_cal, &filtered.pose).map_err(|e| e.at(filtered.timestamp))?;
    decompose_pose_guarded(&torso, gimbal_guard).map_err(|e| e.at(filtered.timestamp))
}
