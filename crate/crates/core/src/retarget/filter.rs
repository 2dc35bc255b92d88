//! First-order exponential smoothing of tracker poses and joint streams.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{decompose_pose_guarded, wrap, PoseComponents, DEFAULT_GIMBAL_GUARD};
use crate::stream::{JointSample, TrackerSample};

pub const DEFAULT_CUTOFF_HZ: f64 = 5.0;

/// `α = 1 − exp(−2π·f_c·Δt)` for a first-order low-pass at cutoff `f_c`.
pub fn alpha_from_cutoff(cutoff_hz: f64, sample_rate_hz: f64) -> f64 {
    1.0 - (-TAU * cutoff_hz / sample_rate_hz).exp()
}

/// Filter settings as written in a config file. `alpha` wins over `cutoff_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub alpha: Option<f64>,
    pub cutoff_hz: Option<f64>,
    /// Largest accepted per-sample Euler change before unwrapping is ambiguous.
    pub max_angle_step: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            cutoff_hz: None,
            max_angle_step: PI,
        }
    }
}

impl FilterConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::default()
        }
    }

    pub fn resolve_alpha(&self, sample_rate_hz: f64) -> Result<f64> {
        let alpha = match (self.alpha, self.cutoff_hz) {
            (Some(a), _) => a,
            (None, c) => {
                let c = c.unwrap_or(DEFAULT_CUTOFF_HZ);
                if !(c > 0.0) || !(sample_rate_hz > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "cutoff {c} Hz and sample rate {sample_rate_hz} Hz must be positive"
                    )));
                }
                alpha_from_cutoff(c, sample_rate_hz)
            }
        };
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("filter alpha {alpha} is outside (0, 1]")));
        }
        Ok(alpha)
    }
}

/// Smoothing state for one tracker stream.
///
/// Orientation is filtered on continuous (unwrapped) yaw/pitch/roll so that a
/// heading crossing ±π does not drag the average through zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub alpha: f64,
    pub last_position: [f64; 3],
    pub last_euler_unwrapped: [f64; 3],
    last_raw_unwrapped: [f64; 3],
    last_timestamp: f64,
    pub initialized: bool,
    pub max_angle_step: f64,
    pub gimbal_guard: f64,
}

impl FilterState {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("filter alpha {alpha} is outside (0, 1]")));
        }
        Ok(Self {
            alpha,
            last_position: [0.0; 3],
            last_euler_unwrapped: [0.0; 3],
            last_raw_unwrapped: [0.0; 3],
            last_timestamp: f64::NEG_INFINITY,
            initialized: false,
            max_angle_step: PI,
            gimbal_guard: DEFAULT_GIMBAL_GUARD,
        })
    }

    pub fn with_max_angle_step(mut self, step: f64) -> Self {
        self.max_angle_step = step;
        self
    }

    pub fn with_gimbal_guard(mut self, guard: f64) -> Self {
        self.gimbal_guard = guard;
        self
    }
}

const AXES: [&str; 3] = ["yaw", "pitch", "roll"];

/// Advances the filter by one sample and returns the smoothed sample.
///
/// The first sample passes through and seeds the state. With `alpha == 1`
/// every sample passes through bit-for-bit.
pub fn lowpass_step(
    state: FilterState,
    sample: &TrackerSample,
) -> Result<(FilterState, TrackerSample)> {
    let t = sample.timestamp;
    if state.initialized && t <= state.last_timestamp {
        return Err(Error::StreamOrder {
            timestamp: t,
            detail: format!("tracker timestamp does not increase past {}", state.last_timestamp),
        });
    }
    let raw = decompose_pose_guarded(&sample.pose, state.gimbal_guard).map_err(|e| e.at(t))?;
    let raw_pos = [raw.x, raw.y, raw.z];
    let raw_euler = raw.euler();

    if !state.initialized {
        let next = FilterState {
            last_position: raw_pos,
            last_euler_unwrapped: raw_euler,
            last_raw_unwrapped: raw_euler,
            last_timestamp: t,
            initialized: true,
            ..state
        };
        return Ok((next, *sample));
    }

    let mut unwrapped = [0.0; 3];
    for i in 0..3 {
        let jump = wrap(raw_euler[i] - state.last_raw_unwrapped[i]);
        if jump.abs() >= state.max_angle_step {
            return Err(Error::UnwrapAmbiguity {
                timestamp: t,
                axis: AXES[i],
                jump,
            });
        }
        unwrapped[i] = state.last_raw_unwrapped[i] + jump;
    }

    let a = state.alpha;
    let (position, euler) = if a == 1.0 {
        (raw_pos, unwrapped)
    } else {
        let mut p = state.last_position;
        let mut e = state.last_euler_unwrapped;
        for i in 0..3 {
            p[i] += a * (raw_pos[i] - p[i]);
            e[i] += a * (unwrapped[i] - e[i]);
        }
        (p, e)
    };

    let next = FilterState {
        last_position: position,
        last_euler_unwrapped: euler,
        last_raw_unwrapped: unwrapped,
        last_timestamp: t,
        ..state
    };
    let out = if a == 1.0 {
        *sample
    } else {
        let pose = PoseComponents {
            x: position[0],
            y: position[1],
            z: position[2],
            yaw: euler[0],
            pitch: euler[1],
            roll: euler[2],
        }
        .to_transform();
        TrackerSample { timestamp: t, pose }
    };
    Ok((next, out))
}

/// Component-wise exponential smoothing of a joint stream.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFilter {
    alpha: f64,
    last: Option<(f64, Vec<f64>)>,
}

impl JointFilter {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("filter alpha {alpha} is outside (0, 1]")));
        }
        Ok(Self { alpha, last: None })
    }

    pub fn step(&mut self, sample: &JointSample) -> Result<JointSample> {
        let t = sample.timestamp;
        let values = match self.last.take() {
            None => sample.q.values.clone(),
            Some((prev_t, mut y)) => {
                if t <= prev_t {
                    self.last = Some((prev_t, y));
                    return Err(Error::StreamOrder {
                        timestamp: t,
                        detail: format!("joint timestamp does not increase past {prev_t}"),
                    });
                }
                if y.len() != sample.q.len() {
                    let expected = y.len();
                    self.last = Some((prev_t, y));
                    return Err(Error::Shape(format!(
                        "joint sample at t={t} has {} values, expected {expected}",
                        sample.q.len()
                    )));
                }
                if self.alpha == 1.0 {
                    sample.q.values.clone()
                } else {
                    for (yi, xi) in y.iter_mut().zip(&sample.q.values) {
                        *yi += self.alpha * (xi - *yi);
                    }
                    y
                }
            }
        };
        self.last = Some((t, values.clone()));
        let mut out = sample.clone();
        out.q.values = values;
        Ok(out)
    }
}
