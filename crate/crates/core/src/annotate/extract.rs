use crate::action::{chunk_actions, ChunkConfig};
use crate::dataio::Episode;
use crate::stream::JointSample;

use super::{check_tiling, AnnotateError, ReviewStatus, SubtaskAnnotation};

const COVER_TOLERANCE_S: f64 = 1e-9;

/// Slices an episode at approved annotation bounds into `<id>.subNN`
/// episodes and re-chunks each slice so no action looks across a boundary.
///
/// Sample `t` belongs to the annotation with `start ≤ t < end`; the last
/// annotation also keeps its end sample.
pub fn extract_subtasks(
    episode: &Episode,
    annotations: &[SubtaskAnnotation],
    max_step: f64,
) -> Result<Vec<Episode>, AnnotateError> {
    if let Some(i) = annotations.iter().position(|a| a.review_status != ReviewStatus::Approved) {
        return Err(AnnotateError::Status(format!("annotation {i} is not approved")));
    }
    check_tiling(annotations)?;
    let (first, last) = (&annotations[0], &annotations[annotations.len() - 1]);
    if let Some((t0, t1)) = episode.time_bounds() {
        if first.start > t0 + COVER_TOLERANCE_S || last.end < t1 - COVER_TOLERANCE_S {
            return Err(AnnotateError::Tiling(format!(
                "annotations cover [{}, {}] but the episode spans [{t0}, {t1}]",
                first.start, last.end
            )));
        }
    }
    let cfg = ChunkConfig {
        k: episode.horizon_k,
        sample_rate_hz: episode.sample_rate,
        max_step,
    };

    let obs = &episode.observations;
    let mut cursor = 0;
    let mut out = Vec::with_capacity(annotations.len());
    for (j, ann) in annotations.iter().enumerate() {
        let is_last = j + 1 == annotations.len();
        let end = if is_last {
            obs.len()
        } else {
            cursor + obs[cursor..].partition_point(|o| o.timestamp < ann.end)
        };
        let slice = &obs[cursor..end];
        cursor = end;

        let joints: Vec<JointSample> = slice
            .iter()
            .map(|o| JointSample {
                timestamp: o.timestamp,
                q: o.q.clone(),
            })
            .collect();
        let bases: Vec<_> = slice.iter().map(|o| o.base_velocity).collect();
        let grips: Vec<_> = slice.iter().map(|o| o.gripper).collect();
        let actions = if slice.len() > cfg.k {
            chunk_actions(&joints, &bases, &grips, &cfg)?.value
        } else {
            Vec::new()
        };

        let mut sub = Episode::new(
            format!("{}.sub{j:02}", episode.id),
            episode.task.clone(),
            episode.modality,
            episode.sample_rate,
            episode.horizon_k,
        );
        sub.observations = slice.to_vec();
        sub.actions = actions;
        sub.transcript = episode
            .transcript
            .iter()
            .filter(|s| s.end > ann.start && s.start < ann.end)
            .cloned()
            .collect();
        sub.success = episode.success;
        sub.wall_time = ann.duration();
        sub.instruction = Some(ann.instruction.clone());
        out.push(sub);
    }
    Ok(out)
}
