use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::PoseComponents;
use crate::model::{Clamped, RobotModel, TorsoLimits};

use super::YawRouting;

/// Articulated torso command: lift (m), yaw and pitch (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TorsoConfig {
    pub lift: f64,
    pub yaw: f64,
    pub pitch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorsoOffsets {
    pub lift_offset: f64,
    pub pitch_offset: f64,
}

/// Reads the torso joints straight off `(z, ψ, θ)` and clamps them to the model.
pub fn map_torso(
    pose: &PoseComponents,
    model: &RobotModel,
    routing: YawRouting,
    offsets: &TorsoOffsets,
) -> Result<Clamped<TorsoConfig>> {
    Ok(map_torso_with_limits(pose, &model.torso_limits()?, routing, offsets))
}

pub fn map_torso_with_limits(
    pose: &PoseComponents,
    limits: &TorsoLimits,
    routing: YawRouting,
    offsets: &TorsoOffsets,
) -> Clamped<TorsoConfig> {
    let mut saturated = 0;
    let mut clamp = |v: f64, (lo, hi): (f64, f64)| {
        let c = v.clamp(lo, hi);
        saturated += usize::from(c != v);
        c
    };
    let yaw = match routing {
        YawRouting::ToTorso => pose.yaw,
        YawRouting::ToBase => 0.0,
    };
    let cfg = TorsoConfig {
        lift: clamp(pose.z + offsets.lift_offset, limits.lift),
        yaw: clamp(yaw, limits.yaw),
        pitch: clamp(pose.pitch + offsets.pitch_offset, limits.pitch),
    };
    Clamped::new(cfg, saturated)
}
