use crate::error::{Error, Result};
use crate::geometry::{wrap, PoseComponents};

use super::deadband::PlanarVelocityRaw;
use super::YawRouting;

pub const DEFAULT_MAX_GAP_S: f64 = 0.5;

/// A decomposed torso-referenced pose with its sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose {
    pub timestamp: f64,
    pub pose: PoseComponents,
}

/// Backward differences of the planar pose `(x, y, ψ)`.
///
/// The heading difference is wrapped before dividing, so crossing ±π yields
/// the true turn rate rather than a ±2π/Δt spike.
pub fn planar_velocities(
    prev: &StampedPose,
    curr: &StampedPose,
    routing: YawRouting,
    max_gap: f64,
) -> Result<PlanarVelocityRaw> {
    let dt = curr.timestamp - prev.timestamp;
    if !(dt > 0.0) {
        return Err(Error::StreamOrder {
            timestamp: curr.timestamp,
            detail: format!("non-positive Δt {dt} after t={}", prev.timestamp),
        });
    }
    if dt > max_gap {
        return Err(Error::Gap {
            timestamp: curr.timestamp,
            gap: dt,
            max_gap,
        });
    }
    let omega_h = match routing {
        YawRouting::ToBase => wrap(curr.pose.yaw - prev.pose.yaw) / dt,
        YawRouting::ToTorso => 0.0,
    };
    Ok(PlanarVelocityRaw {
        v_hx: (curr.pose.x - prev.pose.x) / dt,
        v_hy: (curr.pose.y - prev.pose.y) / dt,
        omega_h,
        valid: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn sp(t: f64, x: f64, yaw: f64) -> StampedPose {
        StampedPose {
            timestamp: t,
            pose: PoseComponents { x, yaw, ..Default::default() },
        }
    }

    #[test]
    fn forward_speed() {
        let v = planar_velocities(&sp(0.0, 0.100, 0.0), &sp(0.02, 0.102, 0.0), YawRouting::ToBase, 0.5).unwrap();
        assert_abs_diff_eq!(v.v_hx, 0.1, epsilon = 1e-12);
        assert!(v.valid);
    }

    #[test]
    fn heading_wrap_has_no_spike() {
        let v = planar_velocities(&sp(0.0, 0.0, 3.10), &sp(0.1, 0.0, -3.10), YawRouting::ToBase, 0.5).unwrap();
        let oracle = (TAU - 6.20) / 0.1;
        assert_abs_diff_eq!(v.omega_h, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(v.omega_h, 0.831_853, epsilon = 1e-6);
    }

    #[test]
    fn torso_routing_zeroes_yaw_rate() {
        let v = planar_velocities(&sp(0.0, 0.0, 0.0), &sp(0.1, 0.0, 1.0), YawRouting::ToTorso, 0.5).unwrap();
        assert_eq!(v.omega_h, 0.0);
    }

    #[test]
    fn ordering_and_gap_errors() {
        let e = planar_velocities(&sp(1.0, 0.0, 0.0), &sp(1.0, 0.0, 0.0), YawRouting::ToBase, 0.5).unwrap_err();
        assert!(matches!(e, Error::StreamOrder { .. }));
        let e = planar_velocities(&sp(1.0, 0.0, 0.0), &sp(2.0, 0.0, 0.0), YawRouting::ToBase, 0.5).unwrap_err();
        assert!(matches!(e, Error::Gap { timestamp, .. } if timestamp == 2.0));
    }

    #[test]
    fn constant_world_offset_cancels() {
        // translations are differenced, so adding the same offset to both poses changes nothing
        let (a, b) = (sp(0.0, 0.25, 0.1), sp(0.05, 0.31, 0.12));
        let shift = |mut s: StampedPose| {
            s.pose.x += 4.0;
            s.pose.y -= 2.0;
            s
        };
        let v0 = planar_velocities(&a, &b, YawRouting::ToBase, 0.5).unwrap();
        let v1 = planar_velocities(&shift(a), &shift(b), YawRouting::ToBase, 0.5).unwrap();
        assert_abs_diff_eq!(v0.v_hx, v1.v_hx, epsilon = 1e-12);
        assert_eq!(v0.omega_h, v1.omega_h);
    }
}
