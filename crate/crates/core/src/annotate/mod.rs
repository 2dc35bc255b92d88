//! Subtask annotation: kinematic breakpoint proposals, transcript alignment,
//! reviewer edits and extraction of language-bounded subtask episodes.

mod align;
mod breakpoints;
mod extract;
mod review;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use align::align_transcript;
pub use breakpoints::{
    propose_breakpoints, propose_from_signals, run_proposer, validate_proposals,
    BreakpointProposer, KinematicProposer, SegmentationSignals,
};
pub use extract::extract_subtasks;
pub use review::{apply_review_edits, check_tiling, ReviewEdit};

use crate::dataio::Episode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub start: f64,
    pub end: f64,
    pub text: String,
}

impl TranscriptSegment {
    pub fn new(start: f64, end: f64, text: impl Into<String>) -> Result<Self, AnnotateError> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(AnnotateError::InvalidInput(format!("segment [{start}, {end}] is not a forward interval")));
        }
        Ok(Self {
            start,
            end,
            text: text.into(),
        })
    }
}

/// Segments must be forward intervals, time-ordered and non-overlapping.
pub fn check_transcript(transcript: &[TranscriptSegment]) -> Result<(), AnnotateError> {
    if let Some((i, s)) = transcript
        .iter()
        .enumerate()
        .find(|(_, s)| !(s.start.is_finite() && s.end.is_finite() && s.start < s.end))
    {
        return Err(AnnotateError::InvalidInput(format!(
            "transcript segment {i} [{}, {}] is not a forward interval",
            s.start, s.end
        )));
    }
    if let Some(i) = transcript.windows(2).position(|w| w[1].start < w[0].end) {
        return Err(AnnotateError::InvalidInput(format!(
            "transcript segment {} starts at {} before segment {i} ends at {}",
            i + 1,
            transcript[i + 1].start,
            transcript[i].end
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakpointKind {
    ZeroVelocity,
    GripperToggle,
    EpisodeEdge,
    /// Placed or moved by a reviewer.
    Manual,
}

impl BreakpointKind {
    /// Lower ranks win ties at the same timestamp.
    pub(crate) fn rank(self) -> u8 {
        match self {
            BreakpointKind::EpisodeEdge => 0,
            BreakpointKind::Manual => 1,
            BreakpointKind::GripperToggle => 2,
            BreakpointKind::ZeroVelocity => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointProposal {
    pub timestamp: f64,
    pub kind: BreakpointKind,
    pub source_channel: String,
    /// In [0, 1].
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Proposed,
    Edited,
    Approved,
}

/// A subtask interval with its language instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskAnnotation {
    pub start: f64,
    pub end: f64,
    pub instruction: String,
    pub start_kind: BreakpointKind,
    pub end_kind: BreakpointKind,
    pub review_status: ReviewStatus,
}

impl SubtaskAnnotation {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationParams {
    /// Arm joint-velocity norm (rad/s) at or below which the arms count as still.
    pub velocity_norm_threshold: f64,
    /// Seconds of stillness needed for a stop.
    pub min_dwell: f64,
    pub min_subtask_duration: f64,
    /// Speech lead δ (s): transcript times are shifted by −δ before alignment.
    pub transcript_lead_shift: f64,
    /// Manipulation-vector indices entering the velocity norm; arm joints when unset.
    pub channels: Option<Vec<usize>>,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            velocity_norm_threshold: 0.05,
            min_dwell: 0.2,
            min_subtask_duration: 1.0,
            transcript_lead_shift: 0.5,
            channels: None,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        let fields = [
            ("velocity_norm_threshold", self.velocity_norm_threshold),
            ("min_dwell", self.min_dwell),
            ("min_subtask_duration", self.min_subtask_duration),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(AnnotateError::InvalidInput(format!("{name} must be positive, got {v}")));
        }
        if !(self.transcript_lead_shift >= 0.0 && self.transcript_lead_shift.is_finite()) {
            return Err(AnnotateError::InvalidInput(format!(
                "transcript_lead_shift must be non-negative, got {}",
                self.transcript_lead_shift
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnotateError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("boundary order violated: {0}")]
    BoundaryOrder(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("subtask too short: {0}")]
    MinDuration(String),
    #[error("no such annotation: {0}")]
    Index(String),
    #[error("annotations are approved and immutable: {0}")]
    Immutable(String),
    #[error("annotations not approved: {0}")]
    Status(String),
    #[error("tiling violated: {0}")]
    Tiling(String),
    #[error("proposer contract violated: {0}")]
    ContractViolation(String),
    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

impl AnnotateError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AnnotateError::InvalidInput(_) => "invalid-input",
            AnnotateError::BoundaryOrder(_) => "boundary-order",
            AnnotateError::Range(_) => "range",
            AnnotateError::MinDuration(_) => "min-duration",
            AnnotateError::Index(_) => "index",
            AnnotateError::Immutable(_) => "immutability",
            AnnotateError::Status(_) => "status",
            AnnotateError::Tiling(_) => "tiling",
            AnnotateError::ContractViolation(_) => "contract-violation",
            AnnotateError::Core(_) => "pipeline",
        }
    }

    pub(crate) fn prefixed(self, prefix: impl fmt::Display) -> Self {
        use AnnotateError::*;
        match self {
            InvalidInput(m) => InvalidInput(format!("{prefix}: {m}")),
            BoundaryOrder(m) => BoundaryOrder(format!("{prefix}: {m}")),
            Range(m) => Range(format!("{prefix}: {m}")),
            MinDuration(m) => MinDuration(format!("{prefix}: {m}")),
            Index(m) => Index(format!("{prefix}: {m}")),
            Immutable(m) => Immutable(format!("{prefix}: {m}")),
            Status(m) => Status(format!("{prefix}: {m}")),
            Tiling(m) => Tiling(format!("{prefix}: {m}")),
            ContractViolation(m) => ContractViolation(format!("{prefix}: {m}")),
            other @ Core(_) => other,
        }
    }
}

/// Proposes breakpoints with the kinematic proposer and aligns the episode's own transcript.
pub fn annotate_episode(episode: &Episode, params: &SegmentationParams) -> Result<Vec<SubtaskAnnotation>, AnnotateError> {
    let bps = run_proposer(&KinematicProposer, episode, params)?;
    align_transcript(&bps, &episode.transcript, params)
}

/// Max-pools `values` into buckets of `factor` samples; `factor` 0 or 1 returns a copy.
pub fn max_pool(values: &[f64], factor: usize) -> Vec<f64> {
    if factor <= 1 {
        return values.to_vec();
    }
    values
        .chunks(factor)
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}
