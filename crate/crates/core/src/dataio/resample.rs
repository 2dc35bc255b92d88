use crate::error::{Error, Result};
use crate::stream::{check_monotone, GripperSample, JointSample, Stamped, TrackerSample};

/// Slack when deciding whether a source sample precedes a clock tick.
pub const HOLD_TOLERANCE_S: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedStreams {
    pub clock: Vec<f64>,
    pub tracker: Vec<TrackerSample>,
    pub joints: Vec<JointSample>,
    pub grippers: Vec<GripperSample>,
}

/// Ticks `start + i / rate` covering `[start, end]`.
pub fn uniform_clock(start: f64, end: f64, rate: f64) -> Result<Vec<f64>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidInput(format!("target rate must be positive, got {rate}")));
    }
    if !(start.is_finite() && end.is_finite()) || end < start {
        return Err(Error::Alignment(format!("empty window [{start}, {end}]")));
    }
    let n = ((end - start) * rate + HOLD_TOLERANCE_S).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 / rate).collect())
}

/// For each tick, the index of the last source timestamp at or before it.
pub fn hold_indices(source: &[f64], clock: &[f64]) -> Result<Vec<usize>> {
    let mut j = 0;
    clock
        .iter()
        .map(|&t| {
            while j + 1 < source.len() && source[j + 1] <= t + HOLD_TOLERANCE_S {
                j += 1;
            }
            match source.get(j) {
                Some(&s) if s <= t + HOLD_TOLERANCE_S => Ok(j),
                _ => Err(Error::Alignment(format!("no source sample at or before t={t}"))),
            }
        })
        .collect()
}

/// Zero-order hold of one stream onto `clock`, restamping each held sample.
pub fn resample_hold<S: Stamped>(stream: &[S], clock: &[f64]) -> Result<Vec<S>> {
    let ts: Vec<f64> = stream.iter().map(Stamped::timestamp).collect();
    Ok(hold_indices(&ts, clock)?
        .into_iter()
        .zip(clock)
        .map(|(i, &t)| stream[i].restamped(t))
        .collect())
}

fn span<S: Stamped>(stream: &[S], name: &str) -> Result<(f64, f64)> {
    check_monotone(stream, name)?;
    match (stream.first(), stream.last()) {
        (Some(a), Some(b)) => Ok((a.timestamp(), b.timestamp())),
        _ => Err(Error::Alignment(format!("{name} stream is empty"))),
    }
}

/// Holds all three streams onto a uniform clock over their common time window.
pub fn resample_streams(
    tracker: &[TrackerSample],
    joints: &[JointSample],
    grippers: &[GripperSample],
    target_rate: f64,
) -> Result<AlignedStreams> {
    let spans = [span(tracker, "tracker")?, span(joints, "joint")?, span(grippers, "gripper")?];
    let start = spans.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let end = spans.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if start > end {
        return Err(Error::Alignment(format!(
            "streams do not overlap: latest start {start} is after earliest end {end}"
        )));
    }
    let clock = uniform_clock(start, end, target_rate)?;
    Ok(AlignedStreams {
        tracker: resample_hold(tracker, &clock)?,
        joints: resample_hold(joints, &clock)?,
        grippers: resample_hold(grippers, &clock)?,
        clock,
    })
}
