//! Timestamped raw input samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::model::JointVector;

pub const DEFAULT_GRIPPER_THRESHOLD: f64 = 0.5;

/// Anything carrying a timestamp in seconds.
pub trait Stamped: Clone {
    fn timestamp(&self) -> f64;

    /// Copy of the sample placed at another clock time.
    fn restamped(&self, t: f64) -> Self;
}

/// Head-tracker pose in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerSample {
    pub timestamp: f64,
    pub pose: RigidTransform,
}

impl TrackerSample {
    pub fn new(timestamp: f64, pose: RigidTransform) -> Result<Self> {
        if !timestamp.is_finite() || !pose.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tracker sample at t={timestamp} has non-finite components"
            )));
        }
        Ok(Self { timestamp, pose })
    }
}

impl Stamped for TrackerSample {
    fn timestamp(&self) -> f64 {
        self.timestamp
    }

    fn restamped(&self, t: f64) -> Self {
        Self { timestamp: t, ..*self }
    }
}

/// Exoskeleton arm and gripper joint readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSample {
    pub timestamp: f64,
    pub q: JointVector,
}

impl Stamped for JointSample {
    fn timestamp(&self) -> f64 {
        self.timestamp
    }

    fn restamped(&self, t: f64) -> Self {
        Self {
            timestamp: t,
            q: self.q.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperBinary {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    /// 0 = fully closed, 1 = fully open.
    pub aperture: f64,
    pub state: GripperBinary,
}

impl GripperState {
    /// Clamps the aperture to [0, 1] and binarizes it: open iff aperture ≥ threshold.
    pub fn from_aperture(aperture: f64, threshold: f64) -> Self {
        let aperture = if aperture.is_nan() { 0.0 } else { aperture.clamp(0.0, 1.0) };
        let state = if aperture >= threshold {
            GripperBinary::Open
        } else {
            GripperBinary::Closed
        };
        Self { aperture, state }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperSample {
    pub timestamp: f64,
    pub left: GripperState,
    pub right: GripperState,
}

impl GripperSample {
    pub fn from_apertures(timestamp: f64, left: f64, right: f64, threshold: f64) -> Self {
        Self {
            timestamp,
            left: GripperState::from_aperture(left, threshold),
            right: GripperState::from_aperture(right, threshold),
        }
    }
}

impl Stamped for GripperSample {
    fn timestamp(&self) -> f64 {
        self.timestamp
    }

    fn restamped(&self, t: f64) -> Self {
        Self { timestamp: t, ..*self }
    }
}

/// Checks that timestamps are finite and strictly increasing.
pub fn check_monotone<S: Stamped>(stream: &[S], name: &str) -> Result<()> {
    let mut prev: Option<f64> = None;
    for s in stream {
        let t = s.timestamp();
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("{name} stream has a non-finite timestamp")));
        }
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::StreamOrder {
                    timestamp: t,
                    detail: format!("{name} timestamp does not increase past {p}"),
                });
            }
        }
        prev = Some(t);
    }
    Ok(())
}
