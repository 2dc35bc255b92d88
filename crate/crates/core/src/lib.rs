//! Whole-body teleoperation toolkit for wheeled bimanual manipulators.
//!
//! Turns head-tracker poses, exoskeleton joint angles, gripper apertures and
//! timestamped narration into torso and base commands, shift-invariant
//! delta-joint actions and language-annotated subtask episodes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod annotate;
pub mod dataio;
pub mod error;
pub mod geometry;
pub mod model;
pub mod retarget;
pub mod sim;
pub mod stream;

pub use action::{apply_action, chunk_actions, delta_action, ActionSample, ChunkConfig, ObservationSample};
pub use annotate::{
    align_transcript, apply_review_edits, extract_subtasks, propose_breakpoints, AnnotateError, BreakpointKind,
    BreakpointProposal, ReviewEdit, ReviewStatus, SegmentationParams, SubtaskAnnotation, TranscriptSegment,
};
pub use dataio::{read_episode, write_episode, DatasetError, Episode, Modality};
pub use error::{Error, Result};
pub use geometry::{compose, decompose_pose, invert, wrap_angle, PoseComponents, RigidTransform};
pub use model::{Clamped, JointGroup, JointLayout, JointSpec, JointVector, RobotModel, TorsoLimits};
pub use retarget::{
    BaseVelocityCommand, DeadbandGainConfig, RetargetConfig, RetargetSession, TorsoConfig, YawRouting,
};
pub use sim::{generate_trajectory, integrate_base, run_tracking_trial, TrackingReport, TrajectorySpec};
pub use stream::{GripperBinary, GripperSample, GripperState, JointSample, Stamped, TrackerSample};
