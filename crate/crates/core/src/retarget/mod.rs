//! Head-tracker to torso and base retargeting.
//!
//! Per sample the pipeline runs, in this order: low-pass filter on the raw
//! tracker pose, calibration compose, yaw/pitch/roll decomposition, then the
//! torso joint mapping and the planar differentiation in parallel, and last
//! the velocity deadband.

mod calibration;
mod deadband;
mod filter;
mod torso;
mod velocity;

use serde::{Deserialize, Serialize};

pub use calibration::{calibrate_single_pose, torso_referenced_pose, CalibrationMethod, CalibrationRecord};
pub use deadband::{
    apply_deadband, deadband, BaseVelocityCommand, DeadbandGainConfig, PlanarVelocityRaw, ScheduleEntry,
    VelocityFrame,
};
pub use filter::{alpha_from_cutoff, lowpass_step, FilterConfig, FilterState, JointFilter, DEFAULT_CUTOFF_HZ};
pub use torso::{map_torso, map_torso_with_limits, TorsoConfig, TorsoOffsets};
pub use velocity::{planar_velocities, StampedPose, DEFAULT_MAX_GAP_S};

pub use crate::geometry::wrap_angle;

use crate::error::{Error, Result};
use crate::geometry::{PoseComponents, RigidTransform, DEFAULT_GIMBAL_GUARD};
use crate::model::{RobotModel, TorsoLimits};
use crate::stream::TrackerSample;

/// Where human yaw goes: base heading rate or the torso yaw joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YawRouting {
    #[default]
    ToBase,
    ToTorso,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorsoLimitsConfig {
    pub lift: [f64; 2],
    pub yaw: [f64; 2],
    pub pitch: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorsoSection {
    pub lift_offset: f64,
    pub pitch_offset: f64,
    pub limits: Option<TorsoLimitsConfig>,
}

impl TorsoSection {
    pub fn offsets(&self) -> TorsoOffsets {
        TorsoOffsets {
            lift_offset: self.lift_offset,
            pitch_offset: self.pitch_offset,
        }
    }
}

/// Session configuration as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetargetConfig {
    /// Nominal tracker rate, used to turn a cutoff frequency into α.
    pub sample_rate_hz: f64,
    pub yaw_routing: YawRouting,
    pub max_gap_s: f64,
    pub gimbal_guard: f64,
    /// Tracker → torso pitch link transform; identity when absent.
    pub calibration: Option<RigidTransform>,
    pub filter: FilterConfig,
    pub deadband: DeadbandGainConfig,
    pub torso: TorsoSection,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 30.0,
            yaw_routing: YawRouting::ToBase,
            max_gap_s: DEFAULT_MAX_GAP_S,
            gimbal_guard: DEFAULT_GIMBAL_GUARD,
            calibration: None,
            filter: FilterConfig::default(),
            deadband: DeadbandGainConfig::default(),
            torso: TorsoSection::default(),
        }
    }
}

impl RetargetConfig {
    /// Identity filter, zero deadband, unit gains.
    pub fn exact() -> Self {
        Self {
            filter: FilterConfig::with_alpha(1.0),
            deadband: DeadbandGainConfig::passthrough(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !(self.max_gap_s > 0.0) {
            return Err(Error::InvalidInput(format!("max_gap_s must be positive, got {}", self.max_gap_s)));
        }
        if !(self.gimbal_guard >= 0.0 && self.gimbal_guard < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidInput(format!("gimbal_guard {} out of range", self.gimbal_guard)));
        }
        self.filter.resolve_alpha(self.sample_rate_hz)?;
        self.deadband.validate()
    }

    pub fn calibration_record(&self) -> CalibrationRecord {
        self.calibration
            .map_or_else(CalibrationRecord::identity, CalibrationRecord::provided)
    }

    /// The robot model with any torso limit override applied.
    pub fn robot_model(&self, base: RobotModel) -> Result<RobotModel> {
        match self.torso.limits {
            None => Ok(base),
            Some(l) => base.with_torso_limits(TorsoLimits {
                lift: (l.lift[0], l.lift[1]),
                yaw: (l.yaw[0], l.yaw[1]),
                pitch: (l.pitch[0], l.pitch[1]),
            }),
        }
    }
}

/// Output of one retargeting step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetargetOutput {
    pub timestamp: f64,
    /// Torso-referenced decomposed pose of the filtered tracker sample.
    pub pose: PoseComponents,
    pub raw_velocity: PlanarVelocityRaw,
    pub torso: TorsoConfig,
    pub base: BaseVelocityCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RetargetStats {
    pub steps: usize,
    pub commanded_zero: usize,
    pub torso_saturations: usize,
    pub gaps: usize,
}

impl RetargetStats {
    pub fn commanded_zero_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.commanded_zero as f64 / self.steps as f64
        }
    }
}

/// Streaming retargeting state for one operator. Steps must be fed in time order.
#[derive(Debug, Clone)]
pub struct RetargetSession {
    config: RetargetConfig,
    calibration: CalibrationRecord,
    limits: TorsoLimits,
    filter: FilterState,
    prev: Option<StampedPose>,
    first_timestamp: Option<f64>,
    stats: RetargetStats,
}

impl RetargetSession {
    pub fn new(config: RetargetConfig, model: &RobotModel) -> Result<Self> {
        config.validate()?;
        let model = config.robot_model(model.clone())?;
        let alpha = config.filter.resolve_alpha(config.sample_rate_hz)?;
        let filter = FilterState::new(alpha)?
            .with_max_angle_step(config.filter.max_angle_step)
            .with_gimbal_guard(config.gimbal_guard);
        Ok(Self {
            calibration: config.calibration_record(),
            limits: model.torso_limits()?,
            filter,
            prev: None,
            first_timestamp: None,
            stats: RetargetStats::default(),
            config,
        })
    }

    pub fn with_calibration(mut self, calibration: CalibrationRecord) -> Self {
        self.calibration = calibration;
        self
    }

    pub fn config(&self) -> &RetargetConfig {
        &self.config
    }

    pub fn calibration(&self) -> &CalibrationRecord {
        &self.calibration
    }

    pub fn stats(&self) -> RetargetStats {
        self.stats
    }

    /// Runs one tracker sample through the full chain.
    ///
    /// On error the session is left as it was before the call.
    pub fn step(&mut self, sample: &TrackerSample) -> Result<RetargetOutput> {
        let t = sample.timestamp;
        if !t.is_finite() || !sample.pose.is_finite() {
            return Err(Error::InvalidInput(format!("tracker sample at t={t} is not finite")));
        }
        let (filter, filtered) = lowpass_step(self.filter, sample)?;
        let pose = torso_referenced_pose(&self.calibration, &filtered, self.config.gimbal_guard)?;
        let current = StampedPose { timestamp: t, pose };

        let torso = map_torso_with_limits(&pose, &self.limits, self.config.yaw_routing, &self.config.torso.offsets());

        let mut gap = false;
        let raw_velocity = match &self.prev {
            None => PlanarVelocityRaw::invalid(),
            Some(prev) => match planar_velocities(prev, &current, self.config.yaw_routing, self.config.max_gap_s) {
                Ok(v) => v,
                Err(Error::Gap { gap: g, .. }) => {
                    log::warn!("tracker gap of {g:.3} s at t={t}; base command zeroed");
                    gap = true;
                    PlanarVelocityRaw::invalid()
                }
                Err(e) => return Err(e),
            },
        };

        let first = *self.first_timestamp.get_or_insert(t);
        let epsilon = self.config.deadband.epsilon_at(t - first);
        let base = deadband::apply_with_thresholds(&raw_velocity, epsilon, self.config.deadband.gain);

        self.filter = filter;
        self.prev = Some(current);
        self.stats.steps += 1;
        self.stats.commanded_zero += usize::from(base.is_zero());
        self.stats.torso_saturations += torso.saturated;
        self.stats.gaps += usize::from(gap);

        Ok(RetargetOutput {
            timestamp: t,
            pose,
            raw_velocity,
            torso: torso.value,
            base,
        })
    }
}

/// Free-function form of [`RetargetSession::step`].
pub fn retarget_step(session: &mut RetargetSession, tracker: &TrackerSample) -> Result<RetargetOutput> {
    session.step(tracker)
}
