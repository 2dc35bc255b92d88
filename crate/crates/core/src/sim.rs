//! Synthetic operator trajectories and a holonomic base integrator for
//! closed-loop tracking checks without hardware.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compose, decompose_pose, wrap, PoseComponents, RigidTransform};
use crate::model::RobotModel;
use crate::retarget::{BaseVelocityCommand, RetargetConfig, RetargetSession, VelocityFrame};
use crate::stream::TrackerSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
    /// Time spent standing at this waypoint before moving on.
    #[serde(default)]
    pub hold_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwayAxes {
    pub x: bool,
    pub y: bool,
    pub z: bool,
}

impl Default for SwayAxes {
    fn default() -> Self {
        Self { x: true, y: true, z: false }
    }
}

/// Involuntary postural sway: one sinusoid per enabled axis, seeded phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwaySpec {
    pub amplitude_m: f64,
    pub frequency_hz: f64,
    pub axes: SwayAxes,
}

impl SwaySpec {
    /// Peak speed of one sway axis, `A·2πf`.
    pub fn peak_velocity(&self) -> f64 {
        self.amplitude_m * TAU * self.frequency_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub waypoints: Vec<Waypoint>,
    /// Piecewise-linear head height as `[t, z]` knots; z = 0 when empty.
    #[serde(default)]
    pub vertical: Vec<[f64; 2]>,
    #[serde(default)]
    pub sway: SwaySpec,
    #[serde(default)]
    pub seed: u64,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidSpec(format!("duration must be positive, got {}", self.duration_s)));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.waypoints.is_empty() {
            return Err(Error::InvalidSpec("waypoint list is empty".into()));
        }
        if self
            .waypoints
            .iter()
            .any(|w| !(w.x.is_finite() && w.y.is_finite() && w.yaw.is_finite() && w.hold_s >= 0.0))
        {
            return Err(Error::InvalidSpec("waypoints must be finite with non-negative holds".into()));
        }
        let holds: f64 = self.waypoints.iter().map(|w| w.hold_s).sum();
        if holds > self.duration_s {
            return Err(Error::InvalidSpec(format!(
                "hold times ({holds} s) exceed the duration ({} s)",
                self.duration_s
            )));
        }
        if self.vertical.windows(2).any(|w| w[0][0] >= w[1][0]) {
            return Err(Error::InvalidSpec("vertical knots must have increasing times".into()));
        }
        if !(self.sway.amplitude_m >= 0.0 && self.sway.frequency_hz >= 0.0) {
            return Err(Error::InvalidSpec("sway amplitude and frequency must be non-negative".into()));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz + 1e-9).floor() as usize + 1
    }

    pub fn timestamp(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    /// Sway-free planar pose `(x, y, ψ)` at time `t`.
    pub fn planar_at(&self, t: f64) -> (f64, f64, f64) {
        let wps = &self.waypoints;
        let holds: f64 = wps.iter().map(|w| w.hold_s).sum();
        let legs = wps.len().saturating_sub(1);
        let travel = if legs == 0 { 0.0 } else { (self.duration_s - holds) / legs as f64 };
        let mut start = 0.0;
        for (i, w) in wps.iter().enumerate() {
            let hold_end = start + w.hold_s;
            if t < hold_end || i == legs {
                return (w.x, w.y, wrap(w.yaw));
            }
            let leg_end = hold_end + travel;
            if t < leg_end {
                let next = &wps[i + 1];
                let s = if travel > 0.0 { (t - hold_end) / travel } else { 1.0 };
                return (
                    w.x + s * (next.x - w.x),
                    w.y + s * (next.y - w.y),
                    wrap(w.yaw + s * wrap(next.yaw - w.yaw)),
                );
            }
            start = leg_end;
        }
        let last = wps[legs];
        (last.x, last.y, wrap(last.yaw))
    }

    pub fn height_at(&self, t: f64) -> f64 {
        let k = &self.vertical;
        match k.len() {
            0 => 0.0,
            _ if t <= k[0][0] => k[0][1],
            _ if t >= k[k.len() - 1][0] => k[k.len() - 1][1],
            _ => {
                let i = k.partition_point(|p| p[0] <= t) - 1;
                let (a, b) = (k[i], k[i + 1]);
                a[1] + (t - a[0]) / (b[0] - a[0]) * (b[1] - a[1])
            }
        }
    }

    fn sway_phases(&self) -> [f64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        std::array::from_fn(|_| rng.random_range(0.0..TAU))
    }

    /// Sway-free head pose at time `t`.
    pub fn truth_pose(&self, t: f64) -> RigidTransform {
        let (x, y, yaw) = self.planar_at(t);
        PoseComponents {
            x,
            y,
            z: self.height_at(t),
            yaw,
            pitch: 0.0,
            roll: 0.0,
        }
        .to_transform()
    }
}

/// Deterministic tracker stream: interpolated waypoints plus sinusoidal sway.
pub fn generate_trajectory(spec: &TrajectorySpec) -> Result<Vec<TrackerSample>> {
    spec.validate()?;
    let phases = spec.sway_phases();
    let sway = spec.sway;
    let enabled = [sway.axes.x, sway.axes.y, sway.axes.z];
    (0..spec.sample_count())
        .map(|i| {
            let t = spec.timestamp(i);
            let (x, y, yaw) = spec.planar_at(t);
            let offset: [f64; 3] = std::array::from_fn(|a| {
                if enabled[a] && sway.amplitude_m > 0.0 {
                    sway.amplitude_m * (TAU * sway.frequency_hz * t + phases[a]).sin()
                } else {
                    0.0
                }
            });
            let pose = PoseComponents {
                x: x + offset[0],
                y: y + offset[1],
                z: spec.height_at(t) + offset[2],
                yaw,
                pitch: 0.0,
                roll: 0.0,
            }
            .to_transform();
            TrackerSample::new(t, pose)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BaseState {
    pub x: f64,
    pub y: f64,
    /// Heading in (−π, π].
    pub yaw: f64,
    pub timestamp: f64,
}

/// One explicit Euler step of a holonomic base.
///
/// Planar-reference commands are world-frame velocities; base-body commands
/// are rotated by the current heading first.
pub fn integrate_base(state: &BaseState, cmd: &BaseVelocityCommand, dt: f64) -> Result<BaseState> {
    if !cmd.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite base command at t={}",
            state.timestamp
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("integration step must be positive, got {dt}")));
    }
    let (vx, vy) = match cmd.frame {
        VelocityFrame::PlanarReference => (cmd.v_x, cmd.v_y),
        VelocityFrame::BaseBody => {
            let (s, c) = state.yaw.sin_cos();
            (c * cmd.v_x - s * cmd.v_y, s * cmd.v_x + c * cmd.v_y)
        }
    };
    Ok(BaseState {
        x: state.x + vx * dt,
        y: state.y + vy * dt,
        yaw: wrap(state.yaw + cmd.omega_z * dt),
        timestamp: state.timestamp + dt,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub retarget: RetargetConfig,
    /// Frame the simulated base executes commands in.
    pub execution_frame: VelocityFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingReport {
    pub steps: usize,
    pub max_position_error: f64,
    pub mean_position_error: f64,
    pub max_heading_error: f64,
    pub commanded_zero_fraction: f64,
    /// Planar distance between final and initial base position.
    pub base_displacement: f64,
    pub base_dx: f64,
    pub base_dy: f64,
    pub base_dyaw: f64,
    pub torso_saturations: usize,
}

impl TrackingReport {
    const FIELDS: [&'static str; 10] = [
        "steps",
        "max_position_error",
        "mean_position_error",
        "max_heading_error",
        "commanded_zero_fraction",
        "base_displacement",
        "base_dx",
        "base_dy",
        "base_dyaw",
        "torso_saturations",
    ];

    fn values(&self) -> [String; 10] {
        [
            self.steps.to_string(),
            self.max_position_error.to_string(),
            self.mean_position_error.to_string(),
            self.max_heading_error.to_string(),
            self.commanded_zero_fraction.to_string(),
            self.base_displacement.to_string(),
            self.base_dx.to_string(),
            self.base_dy.to_string(),
            self.base_dyaw.to_string(),
            self.torso_saturations.to_string(),
        ]
    }

    /// One `key=value` line per field.
    pub fn to_key_values(&self) -> String {
        Self::FIELDS
            .iter()
            .zip(self.values())
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn csv_header() -> String {
        Self::FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }
}

/// Planar ground truth as the base should see it: calibrated, sway removed.
fn planar_truth(spec: &TrajectorySpec, cal: &RigidTransform, t: f64) -> Result<(f64, f64, f64)> {
    let p = decompose_pose(&compose(cal, &spec.truth_pose(t))?).map_err(|e| e.at(t))?;
    Ok((p.x, p.y, p.yaw))
}

/// Generates the trajectory, retargets every sample, integrates the base and
/// compares the base trace against the sway-free planar pose.
pub fn run_tracking_trial(spec: &TrajectorySpec, cfg: &TrialConfig) -> Result<TrackingReport> {
    let samples = generate_trajectory(spec)?;
    let mut session = RetargetSession::new(cfg.retarget.clone(), &RobotModel::reference())?;
    let cal = session.calibration().t_cal;

    let (x0, y0, yaw0) = planar_truth(spec, &cal, samples[0].timestamp)?;
    let initial = BaseState {
        x: x0,
        y: y0,
        yaw: yaw0,
        timestamp: samples[0].timestamp,
    };
    let mut state = initial;
    let mut prev_t = samples[0].timestamp;
    let mut max_pos: f64 = 0.0;
    let mut sum_pos = 0.0;
    let mut max_heading: f64 = 0.0;

    for (i, sample) in samples.iter().enumerate() {
        let out = session.step(sample)?;
        if i > 0 {
            let cmd = BaseVelocityCommand {
                frame: cfg.execution_frame,
                ..out.base
            };
            state = integrate_base(&state, &cmd, sample.timestamp - prev_t)?;
            state.timestamp = sample.timestamp;
        }
        prev_t = sample.timestamp;
        let (tx, ty, tyaw) = planar_truth(spec, &cal, sample.timestamp)?;
        let err = (state.x - tx).hypot(state.y - ty);
        max_pos = max_pos.max(err);
        sum_pos += err;
        max_heading = max_heading.max(wrap(state.yaw - tyaw).abs());
    }

    let stats = session.stats();
    let (dx, dy) = (state.x - initial.x, state.y - initial.y);
    Ok(TrackingReport {
        steps: samples.len(),
        max_position_error: max_pos,
        mean_position_error: sum_pos / samples.len() as f64,
        max_heading_error: max_heading,
        commanded_zero_fraction: stats.commanded_zero_fraction(),
        base_displacement: dx.hypot(dy),
        base_dx: dx,
        base_dy: dy,
        base_dyaw: wrap(state.yaw - initial.yaw),
        torso_saturations: stats.torso_saturations,
    })
}

/// Runs independent trials on scoped worker threads, preserving input order.
pub fn run_trials(specs: &[TrajectorySpec], cfg: &TrialConfig) -> Vec<Result<TrackingReport>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(specs.len().max(1));
    let chunk = specs.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| run_tracking_trial(s, cfg)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("trial worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn spec(waypoints: Vec<Waypoint>, duration: f64, rate: f64) -> TrajectorySpec {
        TrajectorySpec {
            duration_s: duration,
            sample_rate_hz: rate,
            waypoints,
            vertical: vec![],
            sway: SwaySpec::default(),
            seed: 0,
        }
    }

    fn wp(x: f64, y: f64, yaw: f64) -> Waypoint {
        Waypoint { x, y, yaw, hold_s: 0.0 }
    }

    #[test]
    fn single_waypoint_without_sway_is_constant() {
        let s = spec(vec![wp(1.0, 2.0, 0.5)], 2.0, 30.0);
        let stream = generate_trajectory(&s).unwrap();
        assert_eq!(stream.len(), 61);
        assert!(stream.iter().all(|x| x.pose == stream[0].pose));
    }

    #[test]
    fn two_waypoints_interpolate_linearly() {
        let s = spec(vec![wp(0.0, 0.0, 0.0), wp(1.0, 0.0, 0.0)], 10.0, 10.0);
        let stream = generate_trajectory(&s).unwrap();
        for w in stream.windows(2) {
            let v = (w[1].pose.translation().x - w[0].pose.translation().x) / (w[1].timestamp - w[0].timestamp);
            assert_abs_diff_eq!(v, 0.1, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(stream.last().unwrap().pose.translation().x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let mut s = spec(vec![wp(0.0, 0.0, 0.0), wp(2.0, 1.0, 2.0)], 5.0, 60.0);
        s.sway = SwaySpec { amplitude_m: 0.01, frequency_hz: 1.3, axes: SwayAxes { x: true, y: true, z: true } };
        s.seed = 42;
        let a = generate_trajectory(&s).unwrap();
        let b = generate_trajectory(&s).unwrap();
        assert_eq!(a, b);
        s.seed = 43;
        assert_ne!(a, generate_trajectory(&s).unwrap());
    }

    #[test]
    fn holds_and_shortest_arc_heading() {
        let s = TrajectorySpec {
            waypoints: vec![
                Waypoint { x: 0.0, y: 0.0, yaw: 3.0, hold_s: 1.0 },
                Waypoint { x: 0.0, y: 0.0, yaw: -3.0, hold_s: 1.0 },
            ],
            ..spec(vec![], 4.0, 10.0)
        };
        assert_eq!(s.planar_at(0.5), (0.0, 0.0, 3.0));
        // halfway through the 2 s leg the heading sits at ±π, not at 0
        let (_, _, mid) = s.planar_at(2.0);
        assert_abs_diff_eq!(wrap(mid - PI), 0.0, epsilon = 1e-12);
        assert_eq!(s.planar_at(3.5).2, -3.0);
    }

    #[test]
    fn height_profile() {
        let mut s = spec(vec![wp(0.0, 0.0, 0.0)], 4.0, 10.0);
        s.vertical = vec![[0.0, 1.6], [2.0, 1.2]];
        assert_eq!(s.height_at(-1.0), 1.6);
        assert_abs_diff_eq!(s.height_at(1.0), 1.4, epsilon = 1e-12);
        assert_eq!(s.height_at(3.0), 1.2);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(generate_trajectory(&spec(vec![], 1.0, 10.0)), Err(Error::InvalidSpec(_))));
        assert!(generate_trajectory(&spec(vec![wp(0.0, 0.0, 0.0)], 0.0, 10.0)).is_err());
        let mut s = spec(vec![wp(0.0, 0.0, 0.0)], 1.0, 10.0);
        s.waypoints[0].hold_s = 2.0;
        assert!(generate_trajectory(&s).is_err());
    }

    #[test]
    fn integrate_examples() {
        let s0 = BaseState::default();
        let s = integrate_base(&s0, &BaseVelocityCommand::new(1.0, 0.0, 0.0), 0.1).unwrap();
        assert_eq!((s.x, s.y, s.yaw), (0.1, 0.0, 0.0));

        let s0 = BaseState { yaw: PI / 2.0, ..Default::default() };
        let s = integrate_base(&s0, &BaseVelocityCommand::new(1.0, 0.0, 0.0), 0.1).unwrap();
        assert_eq!((s.x, s.y, s.yaw), (0.1, 0.0, PI / 2.0));

        let s0 = BaseState { yaw: 3.1, ..Default::default() };
        let s = integrate_base(&s0, &BaseVelocityCommand::new(0.0, 0.0, 1.0), 0.1).unwrap();
        let mut oracle = 3.1 + 0.1;
        while oracle > PI {
            oracle -= TAU;
        }
        assert_abs_diff_eq!(s.yaw, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(s.yaw, -3.083_185_3, epsilon = 1e-7);

        assert!(integrate_base(&s0, &BaseVelocityCommand::new(f64::NAN, 0.0, 0.0), 0.1).is_err());
        assert!(integrate_base(&s0, &BaseVelocityCommand::zero(), 0.0).is_err());
    }

    #[test]
    fn body_frame_execution_rotates() {
        let s0 = BaseState { yaw: PI / 2.0, ..Default::default() };
        let cmd = BaseVelocityCommand { frame: VelocityFrame::BaseBody, ..BaseVelocityCommand::new(1.0, 0.0, 0.0) };
        let s = integrate_base(&s0, &cmd, 0.1).unwrap();
        assert_abs_diff_eq!(s.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.y, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn exact_config_tracks_ground_truth() {
        let s = spec(vec![wp(0.0, 0.0, 0.0), wp(3.0, -1.0, 2.5), wp(-1.0, 2.0, -2.8)], 20.0, 50.0);
        let cfg = TrialConfig { retarget: RetargetConfig::exact(), ..Default::default() };
        let r = run_tracking_trial(&s, &cfg).unwrap();
        assert!(r.max_position_error <= 1e-6, "{r:?}");
        assert!(r.max_heading_error <= 1e-8, "{r:?}");
    }

    #[test]
    fn sway_below_threshold_never_moves_base() {
        let mut s = spec(vec![wp(0.5, 0.5, 1.0)], 10.0, 30.0);
        s.sway = SwaySpec { amplitude_m: 0.001, frequency_hz: 1.5, axes: SwayAxes { x: true, y: true, z: true } };
        assert!(s.sway.peak_velocity() < 0.01);
        let r = run_tracking_trial(&s, &TrialConfig::default()).unwrap();
        assert_eq!((r.base_dx, r.base_dy, r.base_dyaw), (0.0, 0.0, 0.0));
        assert_eq!(r.base_displacement, 0.0);
        assert_eq!(r.commanded_zero_fraction, 1.0);
    }

    #[test]
    fn walk_with_sway_stays_within_budget() {
        let mut s = spec(vec![wp(0.0, 0.0, 0.0), wp(3.0, 0.0, 0.0)], 10.0, 30.0);
        s.sway = SwaySpec { amplitude_m: 0.005, frequency_hz: 1.5, axes: SwayAxes::default() };
        s.seed = 11;
        let r = run_tracking_trial(&s, &TrialConfig::default()).unwrap();
        assert!(r.mean_position_error < 0.05, "{r:?}");
        let again = run_tracking_trial(&s, &TrialConfig::default()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn body_frame_execution_diverges_when_turning() {
        let s = spec(vec![wp(0.0, 0.0, 0.0), wp(2.0, 0.0, 1.5)], 10.0, 30.0);
        let world = run_tracking_trial(&s, &TrialConfig { retarget: RetargetConfig::exact(), ..Default::default() }).unwrap();
        let body = run_tracking_trial(
            &s,
            &TrialConfig { retarget: RetargetConfig::exact(), execution_frame: VelocityFrame::BaseBody },
        )
        .unwrap();
        assert!(body.max_position_error > 100.0 * world.max_position_error.max(1e-9));
    }

    #[test]
    fn report_formats() {
        let r = TrackingReport { steps: 3, base_displacement: 0.0, ..Default::default() };
        let kv = r.to_key_values();
        assert!(kv.contains("steps=3\n"));
        assert!(kv.contains("base_displacement=0\n"));
        assert_eq!(TrackingReport::csv_header().split(',').count(), r.csv_row().split(',').count());
    }

    #[test]
    fn parallel_runner_matches_sequential() {
        let specs: Vec<_> = (0..4)
            .map(|i| {
                let mut s = spec(vec![wp(0.0, 0.0, 0.0), wp(1.0, f64::from(i), 0.3)], 3.0, 30.0);
                s.sway.amplitude_m = 0.003;
                s.sway.frequency_hz = 1.0;
                s.seed = i as u64;
                s
            })
            .collect();
        let cfg = TrialConfig::default();
        let par = run_trials(&specs, &cfg);
        for (s, r) in specs.iter().zip(par) {
            assert_eq!(r.unwrap(), run_tracking_trial(s, &cfg).unwrap());
        }
    }
}
