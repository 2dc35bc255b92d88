use super::{
    check_transcript, AnnotateError, BreakpointProposal, ReviewStatus, SegmentationParams, SubtaskAnnotation,
    TranscriptSegment,
};

/// Interval index receiving a segment already shifted to `[s, e]`: largest
/// overlap, else nearest interval; ties go to the earlier interval.
fn assign(bounds: &[f64], s: f64, e: f64) -> usize {
    let mut best = 0;
    let mut best_overlap = 0.0;
    for i in 0..bounds.len() - 1 {
        let overlap = (e.min(bounds[i + 1]) - s.max(bounds[i])).max(0.0);
        if overlap > best_overlap {
            best = i;
            best_overlap = overlap;
        }
    }
    if best_overlap > 0.0 {
        return best;
    }
    let distance = |i: usize| {
        if e <= bounds[i] {
            bounds[i] - e
        } else if s >= bounds[i + 1] {
            s - bounds[i + 1]
        } else {
            0.0
        }
    };
    (0..bounds.len() - 1)
        .min_by(|&a, &b| distance(a).total_cmp(&distance(b)))
        .unwrap_or(0)
}

/// Turns consecutive breakpoints into subtasks and attaches each transcript
/// segment, shifted by the speech lead, to the interval it overlaps most.
pub fn align_transcript(
    breakpoints: &[BreakpointProposal],
    transcript: &[TranscriptSegment],
    params: &SegmentationParams,
) -> Result<Vec<SubtaskAnnotation>, AnnotateError> {
    if breakpoints.len() < 2 {
        return Err(AnnotateError::InvalidInput("at least the two episode edges are required".into()));
    }
    if breakpoints.windows(2).any(|w| !(w[1].timestamp > w[0].timestamp)) {
        return Err(AnnotateError::InvalidInput("breakpoints are not strictly increasing".into()));
    }
    check_transcript(transcript)?;
    let bounds: Vec<f64> = breakpoints.iter().map(|b| b.timestamp).collect();
    let delta = params.transcript_lead_shift;

    let mut texts: Vec<Vec<&str>> = vec![Vec::new(); bounds.len() - 1];
    for seg in transcript {
        let i = assign(&bounds, seg.start - delta, seg.end - delta);
        texts[i].push(&seg.text);
    }
    Ok(breakpoints
        .windows(2)
        .zip(texts)
        .map(|(w, parts)| SubtaskAnnotation {
            start: w[0].timestamp,
            end: w[1].timestamp,
            instruction: parts.join(" "),
            start_kind: w[0].kind,
            end_kind: w[1].kind,
            review_status: ReviewStatus::Proposed,
        })
        .collect())
}
