use std::path::{Path, PathBuf};

use teleop_core::annotate::{annotate_episode, SegmentationParams};
use teleop_core::dataio::{annotations_path, read_episode, write_annotations};
use teleop_core::sim::{run_tracking_trial, TrackingReport, TrajectorySpec};

use crate::config::{load_file, CliError, PipelineConfig};

/// Runs one closed-loop trial and renders the report as `key=value` lines,
/// followed by a CSV header and row when `csv` is set.
pub fn cmd_simulate(spec: &Path, config: &Path, csv: bool) -> Result<String, CliError> {
    let spec: TrajectorySpec = load_file(spec)?;
    spec.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let cfg = PipelineConfig::load(config)?;
    let report = run_tracking_trial(&spec, &cfg.trial_config())?;
    let mut out = report.to_key_values();
    if csv {
        out.push_str(&TrackingReport::csv_header());
        out.push('\n');
        out.push_str(&report.csv_row());
        out.push('\n');
    }
    Ok(out)
}

/// Proposes and aligns subtasks for an episode and writes the sibling
/// annotation file; returns its path.
pub fn cmd_annotate(episode: &Path, params: Option<&Path>) -> Result<PathBuf, CliError> {
    let params: SegmentationParams = match params {
        Some(p) => load_file(p)?,
        None => SegmentationParams::default(),
    };
    params.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let ep = read_episode(episode)?;
    let annotations = annotate_episode(&ep, &params)?;
    let dir = episode.parent().unwrap_or(Path::new("."));
    let stem = episode.file_stem().map_or(ep.id.clone(), |s| s.to_string_lossy().into_owned());
    let out = annotations_path(dir, &stem);
    write_annotations(&annotations, &out)?;
    Ok(out)
}
