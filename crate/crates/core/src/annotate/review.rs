use serde::{Deserialize, Serialize};

use super::{AnnotateError, BreakpointKind, ReviewStatus, SegmentationParams, SubtaskAnnotation};

/// A reviewer edit. Boundary `i` is the start of annotation `i`; boundary
/// `len` is the end of the last one. The two outer boundaries are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReviewEdit {
    MoveBoundary { index: usize, new_t: f64 },
    SetInstruction { index: usize, text: String },
    /// Joins annotation `index` with the one after it.
    Merge { index: usize },
    Split { index: usize, t: f64 },
    ApproveAll,
}

/// Annotations must be non-empty forward intervals that share boundaries exactly.
pub fn check_tiling(annotations: &[SubtaskAnnotation]) -> Result<(), AnnotateError> {
    if annotations.is_empty() {
        return Err(AnnotateError::Tiling("no annotations".into()));
    }
    if let Some((i, a)) = annotations.iter().enumerate().find(|(_, a)| !(a.start < a.end)) {
        return Err(AnnotateError::Tiling(format!("annotation {i} [{}, {}] is empty", a.start, a.end)));
    }
    if let Some(i) = annotations.windows(2).position(|w| w[0].end != w[1].start) {
        return Err(AnnotateError::Tiling(format!(
            "annotation {i} ends at {} but annotation {} starts at {}",
            annotations[i].end,
            i + 1,
            annotations[i + 1].start
        )));
    }
    Ok(())
}

fn check_len(a: &SubtaskAnnotation, index: usize, min: f64) -> Result<(), AnnotateError> {
    if a.duration() < min {
        return Err(AnnotateError::MinDuration(format!(
            "annotation {index} would last {} s, below the {min} s minimum",
            a.duration()
        )));
    }
    Ok(())
}

fn index_ok(anns: &[SubtaskAnnotation], index: usize) -> Result<(), AnnotateError> {
    if index >= anns.len() {
        return Err(AnnotateError::Index(format!("index {index} with {} annotations", anns.len())));
    }
    Ok(())
}

fn apply_one(anns: &mut Vec<SubtaskAnnotation>, edit: &ReviewEdit, min: f64) -> Result<(), AnnotateError> {
    use ReviewEdit::*;
    let is_approved = !anns.is_empty() && anns.iter().all(|a| a.review_status == ReviewStatus::Approved);
    match edit {
        ApproveAll => {
            anns.iter_mut().for_each(|a| a.review_status = ReviewStatus::Approved);
            return Ok(());
        }
        _ if is_approved => return Err(AnnotateError::Immutable("the set was approved".into())),
        _ => {}
    }
    match *edit {
        MoveBoundary { index, new_t } => {
            if index == 0 || index >= anns.len() {
                return Err(AnnotateError::Range(format!(
                    "boundary {index} is an episode edge or does not exist"
                )));
            }
            let (lo, hi) = (anns[index - 1].start, anns[index].end);
            if !(new_t > lo && new_t < hi) {
                return Err(AnnotateError::BoundaryOrder(format!(
                    "boundary {index} moved to {new_t} must stay strictly between {lo} and {hi}"
                )));
            }
            anns[index - 1].end = new_t;
            anns[index].start = new_t;
            anns[index - 1].end_kind = BreakpointKind::Manual;
            anns[index].start_kind = BreakpointKind::Manual;
            for i in [index - 1, index] {
                anns[i].review_status = ReviewStatus::Edited;
                check_len(&anns[i], i, min)?;
            }
        }
        SetInstruction { index, ref text } => {
            index_ok(anns, index)?;
            anns[index].instruction = text.clone();
            anns[index].review_status = ReviewStatus::Edited;
        }
        Merge { index } => {
            index_ok(anns, index + 1)?;
            let next = anns.remove(index + 1);
            let a = &mut anns[index];
            a.end = next.end;
            a.end_kind = next.end_kind;
            a.instruction = [a.instruction.as_str(), next.instruction.as_str()]
                .iter()
                .filter(|s| !s.is_empty())
                .copied()
                .collect::<Vec<_>>()
                .join(" ");
            a.review_status = ReviewStatus::Edited;
        }
        Split { index, t } => {
            index_ok(anns, index)?;
            let a = &anns[index];
            if !(t > a.start && t < a.end) {
                return Err(AnnotateError::Range(format!(
                    "split point {t} is outside ({}, {})",
                    a.start, a.end
                )));
            }
            let mut right = a.clone();
            right.start = t;
            right.start_kind = BreakpointKind::Manual;
            right.instruction.clear();
            right.review_status = ReviewStatus::Edited;
            let left = &mut anns[index];
            left.end = t;
            left.end_kind = BreakpointKind::Manual;
            left.review_status = ReviewStatus::Edited;
            anns.insert(index + 1, right);
            check_len(&anns[index], index, min)?;
            check_len(&anns[index + 1], index + 1, min)?;
        }
        ApproveAll => unreachable!(),
    }
    Ok(())
}

/// Applies edits in order to a copy of `annotations`; any failing edit
/// rejects the whole list and leaves the input untouched.
///
/// Minimum duration is checked only on intervals an edit creates or resizes.
pub fn apply_review_edits(
    annotations: &[SubtaskAnnotation],
    edits: &[ReviewEdit],
    params: &SegmentationParams,
) -> Result<Vec<SubtaskAnnotation>, AnnotateError> {
    check_tiling(annotations)?;
    let mut out = annotations.to_vec();
    for (i, edit) in edits.iter().enumerate() {
        apply_one(&mut out, edit, params.min_subtask_duration)
            .and_then(|_| check_tiling(&out))
            .map_err(|e| e.prefixed(format_args!("edit {i}")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{align_transcript, BreakpointProposal};
    use ReviewEdit::*;

    fn anns(ts: &[f64]) -> Vec<SubtaskAnnotation> {
        let bps: Vec<_> = ts
            .iter()
            .map(|&t| BreakpointProposal {
                timestamp: t,
                kind: BreakpointKind::EpisodeEdge,
                source_channel: "t".into(),
                confidence: 1.0,
            })
            .collect();
        align_transcript(&bps, &[], &SegmentationParams::default()).unwrap()
    }

    fn p() -> SegmentationParams {
        SegmentationParams::default()
    }

    fn spans(a: &[SubtaskAnnotation]) -> Vec<(f64, f64)> {
        a.iter().map(|x| (x.start, x.end)).collect()
    }

    #[test]
    fn move_interior_boundary() {
        let out = apply_review_edits(&anns(&[0.0, 5.0, 10.0]), &[MoveBoundary { index: 1, new_t: 5.3 }], &p()).unwrap();
        assert_eq!(spans(&out), vec![(0.0, 5.3), (5.3, 10.0)]);
        assert_eq!(out[0].review_status, ReviewStatus::Edited);
        assert_eq!(out[1].start_kind, BreakpointKind::Manual);
    }

    #[test]
    fn move_past_neighbour_is_order_error() {
        let err = apply_review_edits(&anns(&[0.0, 5.0, 10.0]), &[MoveBoundary { index: 1, new_t: 11.0 }], &p()).unwrap_err();
        assert_eq!(err.code(), "boundary-order");
        let err = apply_review_edits(&anns(&[0.0, 5.0, 10.0]), &[MoveBoundary { index: 0, new_t: 1.0 }], &p()).unwrap_err();
        assert_eq!(err.code(), "range");
    }

    #[test]
    fn move_too_close_is_min_duration_error() {
        let err = apply_review_edits(&anns(&[0.0, 5.0, 10.0]), &[MoveBoundary { index: 1, new_t: 9.5 }], &p()).unwrap_err();
        assert_eq!(err.code(), "min-duration");
    }

    #[test]
    fn split_then_merge_restores_interval() {
        let mut orig = anns(&[0.0, 10.0]);
        orig[0].instruction = "tidy the desk".into();
        let split = apply_review_edits(&orig, &[Split { index: 0, t: 4.0 }], &p()).unwrap();
        assert_eq!(spans(&split), vec![(0.0, 4.0), (4.0, 10.0)]);
        let back = apply_review_edits(&split, &[Merge { index: 0 }], &p()).unwrap();
        let mut expect = orig.clone();
        expect[0].review_status = ReviewStatus::Edited;
        assert_eq!(back, expect);
    }

    #[test]
    fn split_outside_is_range_error() {
        let err = apply_review_edits(&anns(&[0.0, 10.0]), &[Split { index: 0, t: 12.0 }], &p()).unwrap_err();
        assert_eq!(err.code(), "range");
        let err = apply_review_edits(&anns(&[0.0, 10.0]), &[Split { index: 3, t: 2.0 }], &p()).unwrap_err();
        assert_eq!(err.code(), "index");
    }

    #[test]
    fn approval_freezes() {
        let out = apply_review_edits(&anns(&[0.0, 5.0, 10.0]), &[ApproveAll], &p()).unwrap();
        assert!(out.iter().all(|a| a.review_status == ReviewStatus::Approved));
        let err = apply_review_edits(&out, &[SetInstruction { index: 0, text: "x".into() }], &p()).unwrap_err();
        assert_eq!(err.code(), "immutability");
        assert_eq!(apply_review_edits(&out, &[ApproveAll], &p()).unwrap(), out);
    }

    #[test]
    fn failing_list_is_atomic() {
        let orig = anns(&[0.0, 5.0, 10.0]);
        let edits = [
            SetInstruction { index: 0, text: "kept?".into() },
            MoveBoundary { index: 1, new_t: 20.0 },
        ];
        let err = apply_review_edits(&orig, &edits, &p()).unwrap_err();
        assert!(err.to_string().contains("edit 1"));
        assert_eq!(orig[0].instruction, "");
    }

    #[test]
    fn edits_deserialize_from_tagged_json() {
        let edits: Vec<ReviewEdit> = serde_json::from_str(
            r#"[{"op":"move_boundary","index":1,"new_t":5.3},{"op":"set_instruction","index":0,"text":"go"},{"op":"merge","index":0},{"op":"split","index":0,"t":2.0},{"op":"approve_all"}]"#,
        )
        .unwrap();
        assert_eq!(edits[0], MoveBoundary { index: 1, new_t: 5.3 });
        assert_eq!(edits[4], ApproveAll);
    }

    #[test]
    fn tiling_check() {
        let mut a = anns(&[0.0, 5.0, 10.0]);
        assert!(check_tiling(&a).is_ok());
        a[1].start = 5.1;
        assert_eq!(check_tiling(&a).unwrap_err().code(), "tiling");
        assert!(check_tiling(&[]).is_err());
    }
}
