//! Episode persistence, resampling onto a common clock, and throughput metrics.

mod jsonl;
mod metrics;
mod resample;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{ActionSample, ObservationSample};
use crate::annotate::TranscriptSegment;

pub use jsonl::{
    annotations_path, episode_path, read_annotations, read_episode, read_episode_from, write_annotations,
    write_episode, write_episode_to, FORMAT_NAME, FORMAT_VERSION,
};
pub use metrics::{
    collection_throughput, effective_throughput, CollectionLog, CollectionRecord, ExecutionLog, ExecutionRecord,
};
pub use resample::{hold_indices, resample_hold, resample_streams, uniform_clock, AlignedStreams, HOLD_TOLERANCE_S};

/// Allowed deviation of an observation interval from `1 / sample_rate`.
pub const CLOCK_JITTER_S: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    /// Robot in the loop, driven by the operator.
    Teleop,
    /// Human-only capture without the robot.
    Active,
    /// A comparison collection system, logged for throughput baselines.
    Baseline,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Teleop => "teleop",
            Modality::Active => "active",
            Modality::Baseline => "baseline",
        })
    }
}

/// Named invariant a file or log failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    SampleRate,
    HorizonK,
    ObservationClock,
    ActionCount,
    ActionTimestamp,
    LayoutMismatch,
    TranscriptOrder,
    NonFinite,
    SampleIndex,
    SampleCount,
    OperatorOverlap,
    NonPositiveDuration,
}

impl Violation {
    pub fn name(self) -> &'static str {
        match self {
            Violation::SampleRate => "sample_rate",
            Violation::HorizonK => "horizon_k",
            Violation::ObservationClock => "observation_clock",
            Violation::ActionCount => "action_count",
            Violation::ActionTimestamp => "action_timestamp",
            Violation::LayoutMismatch => "layout_mismatch",
            Violation::TranscriptOrder => "transcript_order",
            Violation::NonFinite => "non_finite",
            Violation::SampleIndex => "sample_index",
            Violation::SampleCount => "sample_count",
            Violation::OperatorOverlap => "operator_overlap",
            Violation::NonPositiveDuration => "non_positive_duration",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format version {found}; this reader handles {supported}.x")]
    VersionMismatch { found: String, supported: u32 },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("invariant violation [{violation}]: {detail}")]
    Invariant { violation: Violation, detail: String },

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn invariant(violation: Violation, detail: impl Into<String>) -> Self {
        Self::Invariant {
            violation,
            detail: detail.into(),
        }
    }

    /// The violated invariant, if this is an invariant error.
    pub fn violation(&self) -> Option<Violation> {
        match self {
            Self::Invariant { violation, .. } => Some(*violation),
            _ => None,
        }
    }
}

/// One synchronized demonstration: observations at a uniform rate plus the
/// delta-joint actions chunked from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub task: String,
    pub modality: Modality,
    pub sample_rate: f64,
    /// Look-ahead horizon the actions were chunked with.
    pub horizon_k: usize,
    pub observations: Vec<ObservationSample>,
    pub actions: Vec<ActionSample>,
    pub transcript: Vec<TranscriptSegment>,
    pub success: Option<bool>,
    /// Wall-clock duration of the capture in seconds.
    pub wall_time: f64,
    /// Language instruction when the episode is an extracted subtask.
    pub instruction: Option<String>,
}

impl Episode {
    pub fn new(id: impl Into<String>, task: impl Into<String>, modality: Modality, sample_rate: f64, horizon_k: usize) -> Self {
        Self {
            id: id.into(),
            task: task.into(),
            modality,
            sample_rate,
            horizon_k,
            observations: Vec::new(),
            actions: Vec::new(),
            transcript: Vec::new(),
            success: None,
            wall_time: 0.0,
            instruction: None,
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// `(first, last)` observation timestamps.
    pub fn time_bounds(&self) -> Option<(f64, f64)> {
        Some((self.observations.first()?.timestamp, self.observations.last()?.timestamp))
    }

    pub fn expected_action_count(&self) -> usize {
        self.observations.len().saturating_sub(self.horizon_k)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        use Violation::*;
        let bad = DatasetError::invariant;
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(bad(SampleRate, format!("sample rate {} is not positive", self.sample_rate)));
        }
        if self.horizon_k == 0 {
            return Err(bad(HorizonK, "look-ahead horizon must be at least 1".to_string()));
        }
        if !self.wall_time.is_finite() || self.wall_time < 0.0 {
            return Err(bad(NonFinite, format!("wall time {} is invalid", self.wall_time)));
        }

        let period = 1.0 / self.sample_rate;
        for (i, w) in self.observations.windows(2).enumerate() {
            let dt = w[1].timestamp - w[0].timestamp;
            if !((dt - period).abs() <= CLOCK_JITTER_S) {
                return Err(bad(
                    ObservationClock,
                    format!(
                        "interval {dt} s before observation {} (t={}) is off the {period} s clock",
                        i + 1,
                        w[1].timestamp
                    ),
                ));
            }
        }
        if let Some(first) = self.observations.first() {
            for (i, o) in self.observations.iter().enumerate() {
                if o.q.layout != first.q.layout || o.qdot.layout != first.q.layout || o.q.len() != first.q.len() || o.qdot.len() != first.q.len() {
                    return Err(bad(LayoutMismatch, format!("observation {i} (t={}) changes joint layout", o.timestamp)));
                }
                let finite = o.timestamp.is_finite()
                    && o.q.values.iter().chain(&o.qdot.values).all(|v| v.is_finite())
                    && [o.torso.lift, o.torso.yaw, o.torso.pitch].iter().all(|v| v.is_finite())
                    && o.base_velocity.is_finite()
                    && o.gripper.left.aperture.is_finite()
                    && o.gripper.right.aperture.is_finite();
                if !finite {
                    return Err(bad(NonFinite, format!("observation {i} (t={}) has non-finite values", o.timestamp)));
                }
            }
        }

        let expected = self.expected_action_count();
        if self.actions.len() != expected {
            return Err(bad(
                ActionCount,
                format!(
                    "{} actions for {} observations with k={} (expected {expected})",
                    self.actions.len(),
                    self.observations.len(),
                    self.horizon_k
                ),
            ));
        }
        for (i, (a, o)) in self.actions.iter().zip(&self.observations).enumerate() {
            if a.timestamp != o.timestamp {
                return Err(bad(
                    ActionTimestamp,
                    format!("action {i} at t={} pairs with observation at t={}", a.timestamp, o.timestamp),
                ));
            }
            if a.delta_q.layout != o.q.layout || a.delta_q.len() != o.q.len() {
                return Err(bad(LayoutMismatch, format!("action {i} (t={}) has a different joint layout", a.timestamp)));
            }
            let finite = a.delta_q.values.iter().all(|v| v.is_finite())
                && a.v_x.is_finite()
                && a.v_y.is_finite()
                && a.omega_z.is_finite();
            if !finite {
                return Err(bad(NonFinite, format!("action {i} (t={}) has non-finite values", a.timestamp)));
            }
        }

        crate::annotate::check_transcript(&self.transcript)
            .map_err(|e| bad(TranscriptOrder, e.to_string()))?;
        Ok(())
    }
}
