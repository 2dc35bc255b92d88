//! Raw capture file → retargeted, chunked episode.

use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;
use teleop_core::action::{assemble_observation, chunk_actions};
use teleop_core::annotate::{check_transcript, TranscriptSegment};
use teleop_core::dataio::{resample_streams, Episode, Modality};
use teleop_core::retarget::{calibrate_single_pose, JointFilter, RetargetSession};
use teleop_core::stream::{check_monotone, GripperSample, JointSample, TrackerSample};
use teleop_core::{RigidTransform, RobotModel};

use crate::config::{CliError, PipelineConfig};

/// One line of a capture file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputRecord {
    Meta {
        id: Option<String>,
        task: Option<String>,
        modality: Option<Modality>,
        success: Option<bool>,
        wall_time: Option<f64>,
    },
    Tracker {
        t: f64,
        pose: RigidTransform,
    },
    Joints {
        t: f64,
        q: Vec<f64>,
    },
    Gripper {
        t: f64,
        left: f64,
        right: f64,
    },
    Speech {
        start: f64,
        end: f64,
        text: String,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Capture {
    pub id: Option<String>,
    pub task: Option<String>,
    pub modality: Option<Modality>,
    pub success: Option<bool>,
    pub wall_time: Option<f64>,
    pub tracker: Vec<(f64, RigidTransform)>,
    pub joints: Vec<(f64, Vec<f64>)>,
    pub grippers: Vec<(f64, f64, f64)>,
    pub speech: Vec<TranscriptSegment>,
}

pub fn read_capture<R: BufRead>(r: R) -> Result<Capture, CliError> {
    let mut cap = Capture::default();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::Input(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InputRecord =
            serde_json::from_str(&line).map_err(|e| CliError::Input(format!("input line {}: {e}", i + 1)))?;
        match rec {
            InputRecord::Meta {
                id,
                task,
                modality,
                success,
                wall_time,
            } => {
                cap.id = id.or(cap.id);
                cap.task = task.or(cap.task);
                cap.modality = modality.or(cap.modality);
                cap.success = success.or(cap.success);
                cap.wall_time = wall_time.or(cap.wall_time);
            }
            InputRecord::Tracker { t, pose } => cap.tracker.push((t, pose)),
            InputRecord::Joints { t, q } => cap.joints.push((t, q)),
            InputRecord::Gripper { t, left, right } => cap.grippers.push((t, left, right)),
            InputRecord::Speech { start, end, text } => cap.speech.push(
                TranscriptSegment::new(start, end, text)
                    .map_err(|e| CliError::Input(format!("input line {}: {e}", i + 1)))?,
            ),
        }
    }
    Ok(cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetargetSummary {
    pub samples: usize,
    pub actions: usize,
    pub commanded_zero_fraction: f64,
    pub torso_saturations: usize,
    pub action_saturations: usize,
    pub gaps: usize,
}

impl RetargetSummary {
    pub fn to_key_values(&self) -> String {
        format!(
            "samples={}\nactions={}\ncommanded_zero_fraction={}\ntorso_saturations={}\naction_saturations={}\ngaps={}\n",
            self.samples,
            self.actions,
            self.commanded_zero_fraction,
            self.torso_saturations,
            self.action_saturations,
            self.gaps
        )
    }
}

/// Resamples, retargets and chunks a capture into an episode.
pub fn build_episode(cap: &Capture, cfg: &PipelineConfig, fallback_id: &str) -> Result<(Episode, RetargetSummary), CliError> {
    let model = cfg.retarget.robot_model(RobotModel::reference())?;
    let tracker: Vec<TrackerSample> = cap
        .tracker
        .iter()
        .map(|&(t, pose)| TrackerSample::new(t, pose))
        .collect::<Result<_, _>>()?;
    let joints: Vec<JointSample> = cap
        .joints
        .iter()
        .map(|(t, q)| {
            model
                .manipulation_vector(q.clone())
                .map(|q| JointSample { timestamp: *t, q })
                .map_err(|e| CliError::Pipeline(format!("joint sample at t={t}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let grippers: Vec<GripperSample> = cap
        .grippers
        .iter()
        .map(|&(t, l, r)| GripperSample::from_apertures(t, l, r, cfg.gripper_threshold))
        .collect();
    check_monotone(&tracker, "tracker")?;
    check_monotone(&joints, "joint")?;
    check_monotone(&grippers, "gripper")?;
    check_transcript(&cap.speech).map_err(|e| CliError::Input(e.to_string()))?;

    let rate = cfg.retarget.sample_rate_hz;
    let aligned = resample_streams(&tracker, &joints, &grippers, rate)?;

    let mut session = RetargetSession::new(cfg.retarget.clone(), &model)?;
    if cfg.retarget.calibration.is_none() {
        if let Some(reference) = &cfg.neutral_reference {
            session = session.with_calibration(calibrate_single_pose(&aligned.tracker[0], reference)?);
        }
    }
    let mut joint_filter = JointFilter::new(cfg.joint_filter.resolve_alpha(rate)?)?;

    let n = aligned.clock.len();
    let mut filtered = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(n);
    let mut observations = Vec::with_capacity(n);
    for i in 0..n {
        let out = session.step(&aligned.tracker[i])?;
        let q = joint_filter.step(&aligned.joints[i])?;
        let obs = assemble_observation(&q, filtered.last(), out.torso, out.base, aligned.grippers[i])?;
        observations.push(obs);
        bases.push(out.base);
        filtered.push(q);
    }
    let chunked = chunk_actions(&filtered, &bases, &aligned.grippers, &cfg.action)?;

    let stem = cap.id.clone().or_else(|| cfg.episode.id.clone()).unwrap_or_else(|| fallback_id.to_string());
    let mut episode = Episode::new(
        stem,
        cap.task.clone().or_else(|| cfg.episode.task.clone()).unwrap_or_default(),
        cap.modality.or(cfg.episode.modality).unwrap_or(Modality::Teleop),
        rate,
        cfg.action.k,
    );
    episode.wall_time = cap
        .wall_time
        .unwrap_or_else(|| aligned.clock.last().copied().unwrap_or(0.0) - aligned.clock[0]);
    episode.success = cap.success;
    episode.transcript = cap.speech.clone();
    episode.observations = observations;
    episode.actions = chunked.value;

    let stats = session.stats();
    let summary = RetargetSummary {
        samples: n,
        actions: episode.actions.len(),
        commanded_zero_fraction: stats.commanded_zero_fraction(),
        torso_saturations: stats.torso_saturations,
        action_saturations: chunked.saturated,
        gaps: stats.gaps,
    };
    Ok((episode, summary))
}

pub fn cmd_retarget(input: &Path, config: &Path, output: &Path) -> Result<RetargetSummary, CliError> {
    let cfg = PipelineConfig::load(config)?;
    let file = std::fs::File::open(input).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    let cap = read_capture(std::io::BufReader::new(file))?;
    let fallback = input.file_stem().map_or("episode".into(), |s| s.to_string_lossy().into_owned());
    let (episode, summary) = build_episode(&cap, &cfg, &fallback)?;
    teleop_core::write_episode(&episode, output)?;
    log::info!("wrote {} ({} samples)", output.display(), summary.samples);
    Ok(summary)
}
