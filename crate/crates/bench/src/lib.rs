//! Synthetic inputs shared by the benchmarks.

use teleop_core::action::{assemble_observation, chunk_actions, ChunkConfig};
use teleop_core::annotate::TranscriptSegment;
use teleop_core::dataio::{Episode, Modality};
use teleop_core::retarget::{BaseVelocityCommand, TorsoConfig};
use teleop_core::sim::{SwaySpec, TrajectorySpec, Waypoint};
use teleop_core::stream::{GripperSample, JointSample};
use teleop_core::RobotModel;

/// A walk around a 2 m square with holds at each corner and mild sway.
pub fn square_walk(duration_s: f64, sample_rate_hz: f64) -> TrajectorySpec {
    let corner = |x, y, yaw| Waypoint { x, y, yaw, hold_s: 1.0 };
    TrajectorySpec {
        duration_s,
        sample_rate_hz,
        waypoints: vec![
            corner(0.0, 0.0, 0.0),
            corner(2.0, 0.0, 1.5),
            corner(2.0, 2.0, 3.0),
            corner(0.0, 2.0, -1.5),
            corner(0.0, 0.0, 0.0),
        ],
        vertical: vec![[0.0, 0.3], [duration_s, 0.2]],
        sway: SwaySpec {
            amplitude_m: 0.005,
            frequency_hz: 0.8,
            ..Default::default()
        },
        seed: 1,
    }
}

/// An episode of `n` samples alternating between motion and stillness,
/// with a gripper closing over the middle third.
pub fn synthetic_episode(n: usize, sample_rate_hz: f64, k: usize) -> Episode {
    let model = RobotModel::reference();
    let mut joints = Vec::with_capacity(n);
    let mut grippers = Vec::with_capacity(n);
    let mut q_acc = vec![0.0; 16];
    for i in 0..n {
        let t = i as f64 / sample_rate_hz;
        let moving = (t as usize / 3).is_multiple_of(2);
        if moving {
            for (j, q) in q_acc.iter_mut().enumerate() {
                *q += 0.01 * ((j + 1) as f64 * t).cos();
            }
        }
        joints.push(JointSample {
            timestamp: t,
            q: model.manipulation_vector(q_acc.clone()).expect("16 joints"),
        });
        let closed = if i > n / 3 && i < 2 * n / 3 { 1.0 } else { 0.0 };
        grippers.push(GripperSample::from_apertures(t, closed, 0.0, 0.5));
    }
    let bases = vec![BaseVelocityCommand::default(); n];
    let torso = TorsoConfig::default();
    let observations = (0..n)
        .map(|i| assemble_observation(&joints[i], i.checked_sub(1).map(|p| &joints[p]), torso, bases[i], grippers[i]))
        .collect::<Result<Vec<_>, _>>()
        .expect("increasing clock");
    let cfg = ChunkConfig {
        k,
        sample_rate_hz,
        max_step: 0.3,
    };
    let mut ep = Episode::new("bench", "pick_and_place", Modality::Teleop, sample_rate_hz, k);
    ep.observations = observations;
    ep.actions = chunk_actions(&joints, &bases, &grippers, &cfg).expect("aligned streams").value;
    let end = (n - 1) as f64 / sample_rate_hz;
    ep.transcript = vec![
        TranscriptSegment::new(0.0, end / 3.0, "pick up the cup").expect("valid segment"),
        TranscriptSegment::new(2.0 * end / 3.0, end, "place it on the shelf").expect("valid segment"),
    ];
    ep.wall_time = end;
    ep
}

/// The joint, base and gripper streams of an episode, for re-chunking.
pub fn streams(ep: &Episode) -> (Vec<JointSample>, Vec<BaseVelocityCommand>, Vec<GripperSample>) {
    let joints = ep
        .observations
        .iter()
        .map(|o| JointSample {
            timestamp: o.timestamp,
            q: o.q.clone(),
        })
        .collect();
    let bases = ep.observations.iter().map(|o| o.base_velocity).collect();
    let grippers = ep.observations.iter().map(|o| o.gripper).collect();
    (joints, bases, grippers)
}
