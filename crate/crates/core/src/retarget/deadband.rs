//! Per-axis velocity deadband with gain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame in which a planar base velocity is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityFrame {
    /// Planar reference frame, assumed aligned with the base link.
    #[default]
    PlanarReference,
    BaseBody,
}

/// Raw planar velocities from differentiating consecutive filtered poses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarVelocityRaw {
    pub v_hx: f64,
    pub v_hy: f64,
    pub omega_h: f64,
    /// False for the first sample of a stream and after a gap.
    pub valid: bool,
}

impl PlanarVelocityRaw {
    pub fn invalid() -> Self {
        Self::default()
    }

    pub fn components(&self) -> [f64; 3] {
        [self.v_hx, self.v_hy, self.omega_h]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseVelocityCommand {
    pub v_x: f64,
    pub v_y: f64,
    pub omega_z: f64,
    #[serde(default)]
    pub frame: VelocityFrame,
    /// Set when the command was zeroed because its source velocity was invalid.
    #[serde(default)]
    pub invalid_source: bool,
}

impl Default for BaseVelocityCommand {
    fn default() -> Self {
        Self::zero()
    }
}

impl BaseVelocityCommand {
    pub fn zero() -> Self {
        Self {
            v_x: 0.0,
            v_y: 0.0,
            omega_z: 0.0,
            frame: VelocityFrame::PlanarReference,
            invalid_source: false,
        }
    }

    pub fn new(v_x: f64, v_y: f64, omega_z: f64) -> Self {
        Self {
            v_x,
            v_y,
            omega_z,
            ..Self::zero()
        }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.v_x, self.v_y, self.omega_z]
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|v| *v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }
}

/// Threshold override that takes effect `from_s` seconds into a stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub from_s: f64,
    pub epsilon: [f64; 3],
}

/// Thresholds `(ε_x, ε_y, ε_ω)` and gains `(K_x, K_y, K_ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeadbandGainConfig {
    pub epsilon: [f64; 3],
    pub gain: [f64; 3],
    /// Optional time-varying thresholds, sorted by `from_s`. Empty means constant.
    pub schedule: Vec<ScheduleEntry>,
}

impl Default for DeadbandGainConfig {
    fn default() -> Self {
        Self {
            epsilon: [0.01, 0.01, 0.05],
            gain: [1.0; 3],
            schedule: Vec::new(),
        }
    }
}

impl DeadbandGainConfig {
    pub fn new(epsilon: [f64; 3], gain: [f64; 3]) -> Result<Self> {
        let cfg = Self {
            epsilon,
            gain,
            schedule: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Zero thresholds and unit gains: the command equals the raw velocity.
    pub fn passthrough() -> Self {
        Self {
            epsilon: [0.0; 3],
            gain: [1.0; 3],
            schedule: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps_ok = |e: &[f64; 3]| e.iter().all(|v| *v >= 0.0 && v.is_finite());
        if !eps_ok(&self.epsilon) || !self.schedule.iter().all(|s| eps_ok(&s.epsilon)) {
            return Err(Error::InvalidInput(format!(
                "deadband thresholds must be finite and non-negative: {:?}",
                self.epsilon
            )));
        }
        if !self.gain.iter().all(|k| *k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "deadband gains must be finite and positive: {:?}",
                self.gain
            )));
        }
        if self.schedule.windows(2).any(|w| w[0].from_s >= w[1].from_s) {
            return Err(Error::InvalidInput(
                "deadband schedule entries must have increasing from_s".into(),
            ));
        }
        Ok(())
    }

    /// Thresholds in force `elapsed` seconds into the stream.
    pub fn epsilon_at(&self, elapsed: f64) -> [f64; 3] {
        self.schedule
            .iter()
            .rev()
            .find(|s| s.from_s <= elapsed)
            .map_or(self.epsilon, |s| s.epsilon)
    }
}

/// `D(v, ε)`: zero inside `[−ε, ε]`, `v` unchanged outside.
///
/// The zero keeps the sign of `v`, so `D(−v) = −D(v)` holds bit-for-bit.
#[inline]
pub fn deadband(v: f64, eps: f64) -> f64 {
    if v.abs() <= eps {
        0.0f64.copysign(v)
    } else {
        v
    }
}

/// Maps raw planar velocities to a base command, `K_i · D(v_i, ε_i)` per axis.
pub fn apply_deadband(raw: &PlanarVelocityRaw, cfg: &DeadbandGainConfig) -> BaseVelocityCommand {
    apply_with_thresholds(raw, cfg.epsilon, cfg.gain)
}

pub(crate) fn apply_with_thresholds(
    raw: &PlanarVelocityRaw,
    epsilon: [f64; 3],
    gain: [f64; 3],
) -> BaseVelocityCommand {
    let v = raw.components();
    if !raw.valid || !v.iter().all(|c| c.is_finite()) {
        return BaseVelocityCommand {
            invalid_source: true,
            ..BaseVelocityCommand::zero()
        };
    }
    let out: [f64; 3] = std::array::from_fn(|i| gain[i] * deadband(v[i], epsilon[i]));
    BaseVelocityCommand::new(out[0], out[1], out[2])
}
