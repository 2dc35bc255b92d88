//! Forward-looking delta-joint actions and observation assembly.
//!
//! An action is the joint increment `q[t+k] − q[t]` towards the configuration
//! `k` samples ahead. Any constant offset in the joint readings cancels in the
//! difference, which is what makes the action stream insensitive to static
//! calibration errors between exoskeleton and robot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Clamped, JointVector, RobotModel};
use crate::retarget::{BaseVelocityCommand, TorsoConfig};
use crate::stream::{GripperBinary, GripperSample, JointSample};

const ALIGN_TOLERANCE_S: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkConfig {
    /// Look-ahead horizon in samples.
    pub k: usize,
    pub sample_rate_hz: f64,
    /// Per-joint bound on |Δq| (rad); larger increments are clamped.
    pub max_step: f64,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            k: 16,
            sample_rate_hz: 30.0,
            max_step: 0.3,
        }
    }
}

impl ChunkConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("look-ahead horizon k must be at least 1".into()));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput(format!("max_step must be positive, got {}", self.max_step)));
        }
        Ok(())
    }

    pub fn horizon_seconds(&self) -> f64 {
        self.k as f64 / self.sample_rate_hz
    }
}

/// Policy observation `s_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSample {
    pub timestamp: f64,
    pub q: JointVector,
    /// Backward-difference joint velocity; zeros when `no_history` is set.
    pub qdot: JointVector,
    pub no_history: bool,
    pub torso: TorsoConfig,
    pub base_velocity: BaseVelocityCommand,
    pub gripper: GripperSample,
    #[serde(default)]
    pub image_refs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GripperTarget {
    pub left: GripperBinary,
    pub right: GripperBinary,
}

impl From<&GripperSample> for GripperTarget {
    fn from(g: &GripperSample) -> Self {
        Self {
            left: g.left.state,
            right: g.right.state,
        }
    }
}

/// Action `a_t = [Δq_t, v_x, v_y, ω_z, gripper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSample {
    pub timestamp: f64,
    pub delta_q: JointVector,
    pub v_x: f64,
    pub v_y: f64,
    pub omega_z: f64,
    /// Gripper state at `t + k`.
    pub gripper_target: GripperTarget,
}

pub fn delta_action(q_t: &JointVector, q_tk: &JointVector) -> Result<JointVector> {
    q_t.check_compatible(q_tk)?;
    let values = q_tk.values.iter().zip(&q_t.values).map(|(b, a)| b - a).collect();
    Ok(JointVector::new(values, q_t.layout.clone()))
}

/// Builds one action per index `t` with `t + k` in range; the last `k` samples get none.
///
/// Streams must already share a clock (same length, same timestamps).
pub fn chunk_actions(
    joints: &[JointSample],
    base_cmds: &[BaseVelocityCommand],
    grippers: &[GripperSample],
    cfg: &ChunkConfig,
) -> Result<Clamped<Vec<ActionSample>>> {
    cfg.validate()?;
    let n = joints.len();
    if base_cmds.len() != n || grippers.len() != n {
        return Err(Error::Shape(format!(
            "streams are not aligned: {n} joint, {} base, {} gripper samples",
            base_cmds.len(),
            grippers.len()
        )));
    }
    if let Some((j, g)) = joints
        .iter()
        .zip(grippers)
        .find(|(j, g)| (j.timestamp - g.timestamp).abs() > ALIGN_TOLERANCE_S)
    {
        return Err(Error::Alignment(format!(
            "joint sample at t={} is paired with gripper sample at t={}",
            j.timestamp, g.timestamp
        )));
    }
    if n <= cfg.k {
        log::warn!("stream of {n} samples is not longer than horizon k={}; no actions", cfg.k);
        return Ok(Clamped::new(Vec::new(), 0));
    }

    let mut saturated = 0;
    let mut actions = Vec::with_capacity(n - cfg.k);
    for t in 0..n - cfg.k {
        let mut delta_q = delta_action(&joints[t].q, &joints[t + cfg.k].q).map_err(|e| e.at(joints[t].timestamp))?;
        for d in &mut delta_q.values {
            let c = d.clamp(-cfg.max_step, cfg.max_step);
            saturated += usize::from(c != *d);
            *d = c;
        }
        let base = &base_cmds[t];
        actions.push(ActionSample {
            timestamp: joints[t].timestamp,
            delta_q,
            v_x: base.v_x,
            v_y: base.v_y,
            omega_z: base.omega_z,
            gripper_target: GripperTarget::from(&grippers[t + cfg.k]),
        });
    }
    if saturated > 0 {
        log::warn!("{saturated} action increments clamped to ±{} rad", cfg.max_step);
    }
    Ok(Clamped::new(actions, saturated))
}

pub fn assemble_observation(
    curr: &JointSample,
    prev: Option<&JointSample>,
    torso: TorsoConfig,
    base: BaseVelocityCommand,
    grip: GripperSample,
) -> Result<ObservationSample> {
    let (qdot, no_history) = match prev {
        None => (JointVector::zeros_like(&curr.q), true),
        Some(p) => {
            let dt = curr.timestamp - p.timestamp;
            if !(dt > 0.0) {
                return Err(Error::StreamOrder {
                    timestamp: curr.timestamp,
                    detail: format!("joint timestamp does not increase past {}", p.timestamp),
                });
            }
            let mut d = delta_action(&p.q, &curr.q)?;
            d.values.iter_mut().for_each(|v| *v /= dt);
            (d, false)
        }
    };
    Ok(ObservationSample {
        timestamp: curr.timestamp,
        q: curr.q.clone(),
        qdot,
        no_history,
        torso,
        base_velocity: base,
        gripper: grip,
        image_refs: Vec::new(),
    })
}

/// `q_t + Δq`, clamped to the model's joint limits.
pub fn apply_action(q_t: &JointVector, a: &ActionSample, model: &RobotModel) -> Result<Clamped<JointVector>> {
    q_t.check_compatible(&a.delta_q)?;
    let values = q_t.values.iter().zip(&a.delta_q.values).map(|(q, d)| q + d).collect();
    let mut target = JointVector::new(values, q_t.layout.clone());
    let saturated = model.clamp_manipulation(&mut target)?;
    Ok(Clamped::new(target, saturated))
}
