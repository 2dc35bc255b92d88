use crate::dataio::Episode;
use crate::model::RobotModel;
use crate::stream::GripperBinary;

use super::{AnnotateError, BreakpointKind, BreakpointProposal, SegmentationParams, TranscriptSegment};

/// Per-sample signals the kinematic proposer looks at.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationSignals {
    pub timestamps: Vec<f64>,
    pub velocity_norm: Vec<f64>,
    pub left: Vec<GripperBinary>,
    pub right: Vec<GripperBinary>,
    pub sample_rate: f64,
}

impl SegmentationSignals {
    /// Velocity norm over `channels` of each observation's `qdot` (arm joints when `None`).
    pub fn from_episode(episode: &Episode, channels: Option<&[usize]>) -> Result<Self, AnnotateError> {
        let arms;
        let channels = match channels {
            Some(c) => c,
            None => {
                arms = RobotModel::reference().arm_indices();
                &arms
            }
        };
        let mut velocity_norm = Vec::with_capacity(episode.len());
        for o in &episode.observations {
            let mut sum = 0.0;
            for &c in channels {
                let v = o.qdot.values.get(c).ok_or_else(|| {
                    AnnotateError::InvalidInput(format!(
                        "velocity channel {c} is outside the {}-joint vector",
                        o.qdot.len()
                    ))
                })?;
                sum += v * v;
            }
            velocity_norm.push(sum.sqrt());
        }
        Ok(Self {
            timestamps: episode.observations.iter().map(|o| o.timestamp).collect(),
            velocity_norm,
            left: episode.observations.iter().map(|o| o.gripper.left.state).collect(),
            right: episode.observations.iter().map(|o| o.gripper.right.state).collect(),
            sample_rate: episode.sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

fn edge(t: f64) -> BreakpointProposal {
    BreakpointProposal {
        timestamp: t,
        kind: BreakpointKind::EpisodeEdge,
        source_channel: "episode".into(),
        confidence: 1.0,
    }
}

/// Breakpoints from dwell stops and gripper toggles, plus both episode edges.
///
/// Candidates closer than `min_subtask_duration` to the previously kept
/// breakpoint or to the end edge are dropped.
pub fn propose_from_signals(
    sig: &SegmentationSignals,
    params: &SegmentationParams,
) -> Result<Vec<BreakpointProposal>, AnnotateError> {
    params.validate()?;
    let n = sig.len();
    if n < 2 {
        return Err(AnnotateError::InvalidInput(format!("episode has {n} samples; at least 2 are needed")));
    }
    if sig.velocity_norm.len() != n || sig.left.len() != n || sig.right.len() != n {
        return Err(AnnotateError::InvalidInput("signal lengths differ".into()));
    }
    if !(sig.sample_rate > 0.0) {
        return Err(AnnotateError::InvalidInput(format!("sample rate {} is not positive", sig.sample_rate)));
    }
    let ts = &sig.timestamps;
    let mut candidates = Vec::new();

    let mut i = 0;
    while i < n {
        if sig.velocity_norm[i] > params.velocity_norm_threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && sig.velocity_norm[i] <= params.velocity_norm_threshold {
            i += 1;
        }
        let dwell = (i - start) as f64 / sig.sample_rate;
        if dwell >= params.min_dwell {
            candidates.push(BreakpointProposal {
                timestamp: 0.5 * (ts[start] + ts[i - 1]),
                kind: BreakpointKind::ZeroVelocity,
                source_channel: "arm_velocity_norm".into(),
                confidence: (dwell / (2.0 * params.min_dwell)).min(1.0),
            });
        }
    }

    for (name, states) in [("left_gripper", &sig.left), ("right_gripper", &sig.right)] {
        for j in 1..n {
            if states[j] != states[j - 1] {
                candidates.push(BreakpointProposal {
                    timestamp: ts[j],
                    kind: BreakpointKind::GripperToggle,
                    source_channel: name.into(),
                    confidence: 1.0,
                });
            }
        }
    }

    candidates.sort_by(|a, b| {
        a.timestamp
            .total_cmp(&b.timestamp)
            .then(a.kind.rank().cmp(&b.kind.rank()))
            .then_with(|| a.source_channel.cmp(&b.source_channel))
    });

    let (t0, t_end) = (ts[0], ts[n - 1]);
    let min = params.min_subtask_duration;
    let mut out = vec![edge(t0)];
    for c in candidates {
        let last = out.last().map_or(t0, |b| b.timestamp);
        if c.timestamp - last >= min && t_end - c.timestamp >= min {
            out.push(c);
        }
    }
    out.push(edge(t_end));
    Ok(out)
}

pub fn propose_breakpoints(
    episode: &Episode,
    params: &SegmentationParams,
) -> Result<Vec<BreakpointProposal>, AnnotateError> {
    let sig = SegmentationSignals::from_episode(episode, params.channels.as_deref())?;
    propose_from_signals(&sig, params)
}

/// Source of breakpoint proposals; external reasoners plug in here.
pub trait BreakpointProposer: Send + Sync {
    fn propose(
        &self,
        episode: &Episode,
        transcript: &[TranscriptSegment],
        params: &SegmentationParams,
    ) -> Result<Vec<BreakpointProposal>, AnnotateError>;
}

/// The default proposer: dwell stops and gripper toggles.
#[derive(Debug, Clone, Copy, Default)]
pub struct KinematicProposer;

impl BreakpointProposer for KinematicProposer {
    fn propose(
        &self,
        episode: &Episode,
        _transcript: &[TranscriptSegment],
        params: &SegmentationParams,
    ) -> Result<Vec<BreakpointProposal>, AnnotateError> {
        propose_breakpoints(episode, params)
    }
}

/// Checks a proposal list against the episode: sorted, in bounds, edges present.
pub fn validate_proposals(proposals: &[BreakpointProposal], bounds: (f64, f64)) -> Result<(), AnnotateError> {
    let bad = AnnotateError::ContractViolation;
    let (t0, t1) = bounds;
    match (proposals.first(), proposals.last()) {
        (Some(a), Some(b)) if proposals.len() >= 2 && a.timestamp == t0 && b.timestamp == t1 => {}
        _ => return Err(bad(format!("proposals must start at {t0} and end at {t1}"))),
    }
    for (i, p) in proposals.iter().enumerate() {
        if !(p.timestamp >= t0 && p.timestamp <= t1) {
            return Err(bad(format!("proposal {i} at t={} is outside [{t0}, {t1}]", p.timestamp)));
        }
        if !(0.0..=1.0).contains(&p.confidence) {
            return Err(bad(format!("proposal {i} has confidence {}", p.confidence)));
        }
    }
    if let Some(i) = proposals.windows(2).position(|w| w[1].timestamp <= w[0].timestamp) {
        return Err(bad(format!(
            "proposals are not strictly increasing at index {} (t={})",
            i + 1,
            proposals[i + 1].timestamp
        )));
    }
    Ok(())
}

/// Runs a proposer on the episode's own transcript and enforces the contract on its output.
pub fn run_proposer(
    proposer: &dyn BreakpointProposer,
    episode: &Episode,
    params: &SegmentationParams,
) -> Result<Vec<BreakpointProposal>, AnnotateError> {
    let bounds = episode
        .time_bounds()
        .ok_or_else(|| AnnotateError::InvalidInput(format!("episode {} is empty", episode.id)))?;
    let out = proposer.propose(episode, &episode.transcript, params)?;
    validate_proposals(&out, bounds)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::align_transcript;
    use crate::stream::GripperBinary::{Closed, Open};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn signals(norms: Vec<f64>, rate: f64) -> SegmentationSignals {
        let n = norms.len();
        SegmentationSignals {
            timestamps: (0..n).map(|i| i as f64 / rate).collect(),
            velocity_norm: norms,
            left: vec![Open; n],
            right: vec![Open; n],
            sample_rate: rate,
        }
    }

    fn params(threshold: f64, dwell: f64, min_subtask: f64) -> SegmentationParams {
        SegmentationParams {
            velocity_norm_threshold: threshold,
            min_dwell: dwell,
            min_subtask_duration: min_subtask,
            ..Default::default()
        }
    }

    /// Windowed scan: mark every sample covered by a fully-still window of the
    /// minimum dwell length, then take midpoints of the marked runs.
    fn dwell_oracle(norms: &[f64], ts: &[f64], rate: f64, thr: f64, min_dwell: f64) -> Vec<f64> {
        let mut w = 1;
        while (w as f64) / rate < min_dwell {
            w += 1;
        }
        let n = norms.len();
        let mut covered = vec![false; n];
        for i in 0..n {
            if i + w <= n && (i..i + w).all(|j| norms[j] <= thr) {
                for c in &mut covered[i..i + w] {
                    *c = true;
                }
            }
        }
        let mut mids = Vec::new();
        let mut i = 0;
        while i < n {
            if covered[i] {
                let s = i;
                while i < n && covered[i] {
                    i += 1;
                }
                mids.push(0.5 * (ts[s] + ts[i - 1]));
            } else {
                i += 1;
            }
        }
        mids
    }

    #[test]
    fn dwell_midpoint_example() {
        let sig = signals(vec![0.2, 0.1, 0.0, 0.0, 0.1], 10.0);
        let interior = propose_from_signals(&sig, &params(0.05, 0.15, 0.01)).unwrap();
        let zv: Vec<_> = interior.iter().filter(|b| b.kind == BreakpointKind::ZeroVelocity).collect();
        assert_eq!(zv.len(), 1);
        assert_eq!(zv[0].timestamp, 0.25);
        assert_eq!(dwell_oracle(&sig.velocity_norm, &sig.timestamps, 10.0, 0.05, 0.15), vec![0.25]);
    }

    #[test]
    fn gripper_toggle_example() {
        let mut sig = signals(vec![1.0; 60], 10.0);
        for s in &mut sig.left[30..] {
            *s = Closed;
        }
        let out = propose_from_signals(&sig, &params(0.05, 0.2, 1.0)).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[1].timestamp, 3.0);
        assert_eq!(out[1].kind, BreakpointKind::GripperToggle);
        assert_eq!(out[1].source_channel, "left_gripper");
    }

    #[test]
    fn constant_motion_gives_only_edges() {
        let out = propose_from_signals(&signals(vec![0.7; 100], 30.0), &SegmentationParams::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|b| b.kind == BreakpointKind::EpisodeEdge));
        assert_eq!(out[1].timestamp, 99.0 / 30.0);
    }

    #[test]
    fn toggle_wins_tie_with_dwell() {
        // dwell over samples 29..=31 has its midpoint at the toggle time t=3.0
        let mut norms = vec![1.0; 60];
        norms[29..32].fill(0.0);
        let mut sig = signals(norms, 10.0);
        sig.right[30..].fill(Closed);
        let out = propose_from_signals(&sig, &params(0.05, 0.2, 1.0)).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[1].kind, BreakpointKind::GripperToggle);
    }

    #[test]
    fn close_candidates_are_deduplicated() {
        let mut sig = signals(vec![1.0; 100], 10.0);
        sig.left[30..].fill(Closed);
        sig.right[35..].fill(Closed);
        sig.left[50..].fill(Open);
        sig.left[95..].fill(Closed);
        let out = propose_from_signals(&sig, &params(0.05, 0.2, 1.0)).unwrap();
        let ts: Vec<f64> = out.iter().map(|b| b.timestamp).collect();
        // 3.5 is too close to 3.0 and 9.5 to the end edge at 9.9
        assert_eq!(ts, vec![0.0, 3.0, 5.0, 9.9]);
    }

    #[test]
    fn short_or_empty_episode() {
        assert!(propose_from_signals(&signals(vec![], 10.0), &SegmentationParams::default()).is_err());
        assert!(propose_from_signals(&signals(vec![0.0], 10.0), &SegmentationParams::default()).is_err());
        let out = propose_from_signals(&signals(vec![0.0; 5], 10.0), &SegmentationParams::default()).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn dwell_detection_matches_windowed_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..300);
            let rate = [10.0, 30.0, 50.0][rng.random_range(0..3)];
            let norms: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.6) { 0.0 } else { rng.random_range(0.0..0.1) })
                .collect();
            let sig = signals(norms, rate);
            let p = params(0.05, 0.1, 1e-3);
            let got: Vec<f64> = propose_from_signals(&sig, &p)
                .unwrap()
                .into_iter()
                .filter(|b| b.kind == BreakpointKind::ZeroVelocity)
                .map(|b| b.timestamp)
                .collect();
            let t_end = sig.timestamps[n - 1];
            let mut last = 0.0;
            let oracle: Vec<f64> = dwell_oracle(&sig.velocity_norm, &sig.timestamps, rate, 0.05, 0.1)
                .into_iter()
                .filter(|&t| {
                    let keep = t - last >= 1e-3 && t_end - t >= 1e-3;
                    if keep {
                        last = t;
                    }
                    keep
                })
                .collect();
            assert_eq!(got, oracle);
        }
    }

    struct EdgesOnly;
    impl BreakpointProposer for EdgesOnly {
        fn propose(
            &self,
            episode: &Episode,
            _: &[TranscriptSegment],
            _: &SegmentationParams,
        ) -> Result<Vec<BreakpointProposal>, AnnotateError> {
            let (a, b) = episode.time_bounds().unwrap();
            Ok(vec![edge(a), edge(b)])
        }
    }

    struct Unsorted;
    impl BreakpointProposer for Unsorted {
        fn propose(
            &self,
            episode: &Episode,
            _: &[TranscriptSegment],
            _: &SegmentationParams,
        ) -> Result<Vec<BreakpointProposal>, AnnotateError> {
            let (a, b) = episode.time_bounds().unwrap();
            let mid = |t| BreakpointProposal { timestamp: t, kind: BreakpointKind::Manual, source_channel: "stub".into(), confidence: 0.5 };
            Ok(vec![edge(a), mid(0.8 * b), mid(0.3 * b), edge(b)])
        }
    }

    fn small_episode() -> Episode {
        use crate::action::ObservationSample;
        use crate::dataio::Modality;
        use crate::retarget::{BaseVelocityCommand, TorsoConfig};
        use crate::stream::GripperSample;
        let m = RobotModel::reference();
        let mut e = Episode::new("e", "t", Modality::Active, 10.0, 4);
        for i in 0..50 {
            let t = i as f64 / 10.0;
            let q = m.manipulation_vector(vec![0.0; 16]).unwrap();
            let mut qdot = q.clone();
            qdot.values[0] = if (20..25).contains(&i) { 0.0 } else { 0.5 };
            e.observations.push(ObservationSample {
                timestamp: t,
                q,
                qdot,
                no_history: i == 0,
                torso: TorsoConfig::default(),
                base_velocity: BaseVelocityCommand::zero(),
                gripper: GripperSample::from_apertures(t, 1.0, 1.0, 0.5),
                image_refs: vec![],
            });
        }
        e
    }

    #[test]
    fn default_proposer_is_kinematic() {
        let e = small_episode();
        let p = SegmentationParams::default();
        assert_eq!(run_proposer(&KinematicProposer, &e, &p).unwrap(), propose_breakpoints(&e, &p).unwrap());
        assert_eq!(propose_breakpoints(&e, &p).unwrap().len(), 3);
    }

    #[test]
    fn edges_only_proposer_gives_one_subtask() {
        let e = small_episode();
        let p = SegmentationParams::default();
        let bps = run_proposer(&EdgesOnly, &e, &p).unwrap();
        let anns = align_transcript(&bps, &[], &p).unwrap();
        assert_eq!(anns.len(), 1);
        assert_eq!((anns[0].start, anns[0].end), (0.0, 4.9));
    }

    #[test]
    fn unsorted_proposer_violates_contract() {
        let e = small_episode();
        let err = run_proposer(&Unsorted, &e, &SegmentationParams::default()).unwrap_err();
        assert_eq!(err.code(), "contract-violation");
        let mut bps = run_proposer(&EdgesOnly, &e, &SegmentationParams::default()).unwrap();
        bps[1].timestamp = 7.0;
        assert!(validate_proposals(&bps, (0.0, 4.9)).is_err());
    }
}
