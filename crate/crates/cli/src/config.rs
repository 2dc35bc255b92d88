use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use teleop_core::action::ChunkConfig;
use teleop_core::dataio::{DatasetError, Modality};
use teleop_core::retarget::{FilterConfig, RetargetConfig, VelocityFrame};
use teleop_core::sim::TrialConfig;
use teleop_core::stream::DEFAULT_GRIPPER_THRESHOLD;
use teleop_core::RigidTransform;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed configuration, trajectory spec, input or episode file.
    #[error("{0}")]
    Input(String),
    /// The pipeline rejected the data.
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Pipeline(_) => 2,
        }
    }
}

impl From<teleop_core::Error> for CliError {
    fn from(e: teleop_core::Error) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Core(inner) => inner.into(),
            DatasetError::Metric(m) => CliError::Pipeline(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<teleop_core::AnnotateError> for CliError {
    fn from(e: teleop_core::AnnotateError) -> Self {
        CliError::Pipeline(format!("[{}] {e}", e.code()))
    }
}

/// Reads TOML, or JSON when the extension is `.json`, reporting the failing field path.
pub fn load_file<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let fail = |at: String, msg: String| CliError::Input(format!("{}: field `{at}`: {msg}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| fail(e.path().to_string(), e.inner().to_string()))
    } else {
        let de = toml::Deserializer::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_path_to_error::deserialize(de).map_err(|e| fail(e.path().to_string(), e.inner().message().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    pub id: Option<String>,
    pub task: Option<String>,
    pub modality: Option<Modality>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub execution_frame: VelocityFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub retarget: RetargetConfig,
    pub action: ChunkConfig,
    pub joint_filter: FilterConfig,
    pub gripper_threshold: f64,
    /// Torso pose the operator's first tracker reading is calibrated onto.
    /// Ignored when `retarget.calibration` is given.
    pub neutral_reference: Option<RigidTransform>,
    pub episode: EpisodeSection,
    pub sim: SimSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            retarget: RetargetConfig::default(),
            action: ChunkConfig::default(),
            joint_filter: FilterConfig::default(),
            gripper_threshold: DEFAULT_GRIPPER_THRESHOLD,
            neutral_reference: None,
            episode: EpisodeSection::default(),
            sim: SimSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: Self = load_file(path)?;
        cfg.validate()
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.retarget.validate().map_err(|e| format!("retarget: {e}"))?;
        self.action.validate().map_err(|e| format!("action: {e}"))?;
        self.joint_filter
            .resolve_alpha(self.retarget.sample_rate_hz)
            .map_err(|e| format!("joint_filter: {e}"))?;
        if self.action.sample_rate_hz != self.retarget.sample_rate_hz {
            return Err(format!(
                "action.sample_rate_hz ({}) must equal retarget.sample_rate_hz ({})",
                self.action.sample_rate_hz, self.retarget.sample_rate_hz
            ));
        }
        if !(0.0..=1.0).contains(&self.gripper_threshold) {
            return Err(format!("gripper_threshold {} is outside [0, 1]", self.gripper_threshold));
        }
        Ok(())
    }

    pub fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            retarget: self.retarget.clone(),
            execution_frame: self.sim.execution_frame,
        }
    }
}
