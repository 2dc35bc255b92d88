use std::borrow::Cow;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::action::{ActionSample, ObservationSample};
use crate::annotate::{SubtaskAnnotation, TranscriptSegment};

use super::{DatasetError, Episode, Modality, Violation};

pub const FORMAT_NAME: &str = "teleop-episode";
/// `major.minor`; readers reject other majors.
pub const FORMAT_VERSION: &str = "1.0";
const SUPPORTED_MAJOR: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header<'a> {
    format: Cow<'a, str>,
    version: Cow<'a, str>,
    id: Cow<'a, str>,
    task: Cow<'a, str>,
    modality: Modality,
    sample_rate: f64,
    horizon_k: usize,
    samples: usize,
    success: Option<bool>,
    wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instruction: Option<Cow<'a, str>>,
    transcript: Cow<'a, [TranscriptSegment]>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    index: usize,
    observation: &'a ObservationSample,
    #[serde(skip_serializing_if = "Option::is_none")]
    action: Option<&'a ActionSample>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordIn {
    index: usize,
    observation: ObservationSample,
    #[serde(default)]
    action: Option<ActionSample>,
}

pub fn episode_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

pub fn annotations_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.annotations.json"))
}

fn json_err(line: usize, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Serializes a validated episode: a header line, then one record per observation.
pub fn write_episode_to<W: Write>(episode: &Episode, mut w: W) -> Result<(), DatasetError> {
    episode.validate()?;
    let header = Header {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION.into(),
        id: Cow::Borrowed(&episode.id),
        task: Cow::Borrowed(&episode.task),
        modality: episode.modality,
        sample_rate: episode.sample_rate,
        horizon_k: episode.horizon_k,
        samples: episode.observations.len(),
        success: episode.success,
        wall_time: episode.wall_time,
        instruction: episode.instruction.as_deref().map(Cow::Borrowed),
        transcript: Cow::Borrowed(&episode.transcript),
    };
    let io = |e: std::io::Error| DatasetError::io(Path::new("<writer>"), e);
    serde_json::to_writer(&mut w, &header).map_err(|e| json_err(1, e))?;
    w.write_all(b"\n").map_err(io)?;
    for (index, observation) in episode.observations.iter().enumerate() {
        let rec = RecordOut {
            index,
            observation,
            action: episode.actions.get(index),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| json_err(index + 2, e))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_episode(episode: &Episode, path: &Path) -> Result<(), DatasetError> {
    atomic_write(path, |w| write_episode_to(episode, w))
}

pub(crate) fn atomic_write(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> Result<(), DatasetError>,
) -> Result<(), DatasetError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| DatasetError::io(dir, e))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        body(&mut w)?;
        w.flush().map_err(|e| DatasetError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| DatasetError::io(path, e))?;
    tmp.persist(path).map_err(|e| DatasetError::io(path, e.error))?;
    Ok(())
}

fn check_version(line: &str) -> Result<(), DatasetError> {
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| json_err(1, e))?;
    let format = v.get("format").and_then(|f| f.as_str());
    if format != Some(FORMAT_NAME) {
        return Err(json_err(1, format!("not a {FORMAT_NAME} file (format = {format:?})")));
    }
    let version = v
        .get("version")
        .and_then(|f| f.as_str())
        .ok_or_else(|| json_err(1, "header has no version field"))?;
    let major = version.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(SUPPORTED_MAJOR) {
        return Err(DatasetError::VersionMismatch {
            found: version.to_string(),
            supported: SUPPORTED_MAJOR,
        });
    }
    Ok(())
}

pub fn read_episode_from<R: BufRead>(mut r: R) -> Result<Episode, DatasetError> {
    let io = |e: std::io::Error| DatasetError::io(Path::new("<reader>"), e);
    let mut line = String::new();
    if r.read_line(&mut line).map_err(io)? == 0 {
        return Err(DatasetError::Truncated("file is empty".into()));
    }
    if !line.ends_with('\n') {
        return Err(DatasetError::Truncated("header line is incomplete".into()));
    }
    check_version(&line)?;
    let header: Header = serde_json::from_str(&line).map_err(|e| json_err(1, e))?;

    let mut observations = Vec::with_capacity(header.samples);
    let mut actions = Vec::new();
    let mut line_no = 1;
    loop {
        line.clear();
        if r.read_line(&mut line).map_err(io)? == 0 {
            break;
        }
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let complete = line.ends_with('\n');
        let rec: RecordIn = match serde_json::from_str(&line) {
            Ok(rec) => rec,
            Err(_) if !complete => {
                return Err(DatasetError::Truncated(format!("record on line {line_no} is incomplete")))
            }
            Err(e) => return Err(json_err(line_no, e)),
        };
        if rec.index != observations.len() {
            return Err(DatasetError::invariant(
                Violation::SampleIndex,
                format!("line {line_no} carries index {} where {} was expected", rec.index, observations.len()),
            ));
        }
        match rec.action {
            Some(a) if actions.len() == observations.len() => actions.push(a),
            Some(_) => {
                return Err(DatasetError::invariant(
                    Violation::ActionCount,
                    format!("record {} has an action after an action-free record", rec.index),
                ))
            }
            None => {}
        }
        observations.push(rec.observation);
        if observations.len() > header.samples {
            return Err(DatasetError::invariant(
                Violation::SampleCount,
                format!("more records than the {} declared in the header", header.samples),
            ));
        }
    }
    if observations.len() < header.samples {
        return Err(DatasetError::Truncated(format!(
            "{} of {} declared records present",
            observations.len(),
            header.samples
        )));
    }

    let episode = Episode {
        id: header.id.into_owned(),
        task: header.task.into_owned(),
        modality: header.modality,
        sample_rate: header.sample_rate,
        horizon_k: header.horizon_k,
        observations,
        actions,
        transcript: header.transcript.into_owned(),
        success: header.success,
        wall_time: header.wall_time,
        instruction: header.instruction.map(Cow::into_owned),
    };
    episode.validate()?;
    Ok(episode)
}

pub fn read_episode(path: &Path) -> Result<Episode, DatasetError> {
    let f = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    read_episode_from(BufReader::new(f))
}

pub fn read_annotations(path: &Path) -> Result<Vec<SubtaskAnnotation>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(e.line(), e))
}

pub fn write_annotations(annotations: &[SubtaskAnnotation], path: &Path) -> Result<(), DatasetError> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, annotations).map_err(|e| json_err(0, e))?;
        w.write_all(b"\n").map_err(|e| DatasetError::io(path, e))
    })
}
