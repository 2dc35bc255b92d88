//! Rigid transforms, yaw-pitch-roll decomposition and angle wrapping.
//!
//! Rotations are stored as unit quaternions; Euler angles only appear at
//! the decomposition boundary, using the intrinsic Z-Y-X convention
//! `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance (rad) from ±π/2 pitch at which decomposition is refused.
pub const DEFAULT_GIMBAL_GUARD: f64 = 1e-6;

const NORM_TOLERANCE: f64 = 1e-9;

/// An element of SE(3): rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

/// On-disk form: quaternion as `[w, x, y, z]`, translation in meters.
#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl TryFrom<TransformRepr> for RigidTransform {
    type Error = Error;

    fn try_from(repr: TransformRepr) -> Result<Self> {
        let [w, x, y, z] = repr.rotation;
        RigidTransform::from_parts([w, x, y, z], repr.translation)
    }
}

impl From<RigidTransform> for TransformRepr {
    fn from(t: RigidTransform) -> Self {
        let q = t.rotation.quaternion();
        TransformRepr {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from a `[w, x, y, z]` quaternion and a translation.
    ///
    /// The quaternion is normalized; a zero or non-finite quaternion is rejected.
    pub fn from_parts(quat_wxyz: [f64; 4], translation: [f64; 3]) -> Result<Self> {
        let [w, x, y, z] = quat_wxyz;
        if !quat_wxyz.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "transform has non-finite components".into(),
            ));
        }
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidInput("zero-norm rotation quaternion".into()));
        }
        Ok(Self {
            rotation: UnitQuaternion::new_normalize(q),
            translation: Vector3::from(translation),
        })
    }

    pub fn from_rotation_translation(
        rotation: UnitQuaternion<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        let q = rotation.quaternion();
        Self::from_parts(
            [q.w, q.i, q.j, q.k],
            [translation.x, translation.y, translation.z],
        )
    }

    pub fn translation_xyz(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(Vector3::x_axis(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(Vector3::y_axis(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(Vector3::z_axis(), angle)
    }

    fn from_axis_angle(axis: nalgebra::Unit<Vector3<f64>>, angle: f64) -> Self {
        Self {
            rotation: UnitQuaternion::from_axis_angle(&axis, angle),
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Rotation as `[w, x, y, z]`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_finite(&self) -> bool {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k].iter().all(|v| v.is_finite())
            && self.translation.iter().all(|v| v.is_finite())
    }

    fn check(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidInput(
                "transform has non-finite components".into(),
            ));
        }
        if (self.rotation.quaternion().norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidInput("rotation is not a unit quaternion".into()));
        }
        Ok(())
    }

    /// Returns `self ∘ other`: `other` is applied first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> Result<RigidTransform> {
        compose(self, other)
    }

    pub fn inverse(&self) -> Result<RigidTransform> {
        invert(self)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Composes two transforms, `a ∘ b`, renormalizing the resulting rotation.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> Result<RigidTransform> {
    a.check()?;
    b.check()?;
    let rotation = UnitQuaternion::new_normalize((a.rotation * b.rotation).into_inner());
    Ok(RigidTransform {
        rotation,
        translation: a.rotation * b.translation + a.translation,
    })
}

pub fn invert(t: &RigidTransform) -> Result<RigidTransform> {
    t.check()?;
    let rot_inv = t.rotation.inverse();
    Ok(RigidTransform {
        rotation: rot_inv,
        translation: -(rot_inv * t.translation),
    })
}

/// Translation plus intrinsic Z-Y-X Euler angles, each in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseComponents {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl PoseComponents {
    pub fn euler(&self) -> [f64; 3] {
        [self.yaw, self.pitch, self.roll]
    }

    /// Rebuilds the rigid transform `translate(x,y,z) * Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn to_transform(&self) -> RigidTransform {
        RigidTransform {
            rotation: rotation_from_euler(self.yaw, self.pitch, self.roll),
            translation: Vector3::new(self.x, self.y, self.z),
        }
    }
}

pub fn rotation_from_euler(yaw: f64, pitch: f64, roll: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), pitch)
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), roll)
}

/// Decomposes a transform with the default gimbal guard.
pub fn decompose_pose(t: &RigidTransform) -> Result<PoseComponents> {
    decompose_pose_guarded(t, DEFAULT_GIMBAL_GUARD)
}

/// Splits a transform into translation and yaw/pitch/roll.
///
/// Fails when |pitch| ≥ π/2 − `guard`, where yaw and roll stop being separable.
pub fn decompose_pose_guarded(t: &RigidTransform, guard: f64) -> Result<PoseComponents> {
    t.check()?;
    let r = t.rotation_matrix();
    let pitch = (-r[(2, 0)]).atan2(r[(0, 0)].hypot(r[(1, 0)]));
    if pitch.abs() >= FRAC_PI_2 - guard {
        return Err(Error::DegenerateOrientation {
            pitch,
            timestamp: None,
        });
    }
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    Ok(PoseComponents {
        x: t.translation.x,
        y: t.translation.y,
        z: t.translation.z,
        yaw: wrap(yaw),
        pitch: wrap(pitch),
        roll: wrap(roll),
    })
}

/// Maps an angle to the unique congruent value in (−π, π].
pub fn wrap_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidInput(format!("cannot wrap non-finite angle {a}")));
    }
    Ok(wrap(a))
}

/// Infallible wrap for values already known to be finite.
pub(crate) fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_transform_eq(a: &RigidTransform, b: &RigidTransform, tol: f64) {
        let diff = (a.to_homogeneous() - b.to_homogeneous()).abs().max();
        assert!(diff <= tol, "transforms differ by {diff}:\n{a:?}\n{b:?}");
    }

    /// Homogeneous matrices built straight from cos/sin, independent of the quaternion path.
    fn hom_rot_z(a: f64) -> Matrix4<f64> {
        let (s, c) = a.sin_cos();
        Matrix4::new(
            c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        )
    }

    fn hom_translate(x: f64, y: f64, z: f64) -> Matrix4<f64> {
        Matrix4::new(
            1.0, 0.0, 0.0, x, 0.0, 1.0, 0.0, y, 0.0, 0.0, 1.0, z, 0.0, 0.0, 0.0, 1.0,
        )
    }

    fn euler_from_matrix_oracle(m: &Matrix3<f64>) -> (f64, f64, f64) {
        // Z-Y-X: m = Rz(y) Ry(p) Rx(r); m20 = -sin(p), m10/m00 = tan(y), m21/m22 = tan(r)
        let pitch = (-m[(2, 0)]).asin();
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        (yaw, pitch, roll)
    }

    #[test]
    fn compose_with_identity() {
        let t = RigidTransform::from_parts([0.9, 0.1, -0.3, 0.2], [1.0, -2.0, 0.5]).unwrap();
        let out = compose(&RigidTransform::identity(), &t).unwrap();
        assert_transform_eq(&out, &t, 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform::from_parts([0.3, -0.5, 0.1, 0.8], [4.0, 1.0, -3.0]).unwrap();
        let out = compose(&t, &invert(&t).unwrap()).unwrap();
        assert_transform_eq(&out, &RigidTransform::identity(), 1e-9);
    }

    #[test]
    fn compose_matches_homogeneous_product() {
        let out = compose(
            &RigidTransform::rot_z(FRAC_PI_2),
            &RigidTransform::translation_xyz(1.0, 0.0, 0.0),
        )
        .unwrap();
        let oracle = hom_rot_z(FRAC_PI_2) * hom_translate(1.0, 0.0, 0.0);
        assert!((out.to_homogeneous() - oracle).abs().max() < 1e-12);
        assert_abs_diff_eq!(out.translation().x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.translation().y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.translation().z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn invert_cases() {
        assert_transform_eq(
            &invert(&RigidTransform::identity()).unwrap(),
            &RigidTransform::identity(),
            0.0,
        );
        let inv = invert(&RigidTransform::translation_xyz(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(inv.translation(), &Vector3::new(-1.0, -2.0, -3.0));

        let t = compose(
            &RigidTransform::rot_z(0.3),
            &RigidTransform::translation_xyz(1.0, 0.0, 0.0),
        )
        .unwrap();
        let oracle = (hom_rot_z(0.3) * hom_translate(1.0, 0.0, 0.0))
            .try_inverse()
            .unwrap();
        assert!((invert(&t).unwrap().to_homogeneous() - oracle).abs().max() < 1e-12);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        assert!(RigidTransform::from_parts([f64::NAN, 0.0, 0.0, 0.0], [0.0; 3]).is_err());
        assert!(RigidTransform::from_parts([1.0, 0.0, 0.0, 0.0], [0.0, f64::INFINITY, 0.0]).is_err());
        assert!(RigidTransform::from_parts([0.0; 4], [0.0; 3]).is_err());
        let bad = RigidTransform {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::new(f64::NAN, 0.0, 0.0),
        };
        assert!(matches!(
            compose(&bad, &RigidTransform::identity()),
            Err(Error::InvalidInput(_))
        ));
        assert!(invert(&bad).is_err());
    }

    #[test]
    fn decompose_examples() {
        let c = decompose_pose(&RigidTransform::identity()).unwrap();
        assert_eq!(c, PoseComponents::default());

        let t = compose(
            &RigidTransform::rot_z(0.7),
            &RigidTransform::translation_xyz(0.0, 0.0, 0.3),
        )
        .unwrap();
        let c = decompose_pose(&t).unwrap();
        assert_abs_diff_eq!(c.z, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(c.yaw, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(c.pitch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.roll, 0.0, epsilon = 1e-12);

        let t = RigidTransform::rot_z(0.4)
            .compose(&RigidTransform::rot_y(0.2))
            .unwrap()
            .compose(&RigidTransform::rot_x(-0.1))
            .unwrap();
        let c = decompose_pose(&t).unwrap();
        let (y, p, r) = euler_from_matrix_oracle(&t.rotation_matrix());
        assert_abs_diff_eq!(y, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(r, -0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(c.yaw, y, epsilon = 1e-12);
        assert_abs_diff_eq!(c.pitch, p, epsilon = 1e-12);
        assert_abs_diff_eq!(c.roll, r, epsilon = 1e-12);
    }

    #[test]
    fn decompose_rejects_gimbal_lock() {
        let t = RigidTransform::rot_y(FRAC_PI_2);
        let err = decompose_pose(&t).unwrap_err();
        assert!(matches!(err, Error::DegenerateOrientation { .. }));
        let err = err.at(12.5);
        assert_eq!(err.timestamp(), Some(12.5));
        assert!(err.to_string().contains("12.5"));
        // a wider guard rejects earlier
        let t = RigidTransform::rot_y(1.5);
        assert!(decompose_pose(&t).is_ok());
        assert!(decompose_pose_guarded(&t, 0.1).is_err());
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(wrap_angle(TAU).unwrap(), 0.0, epsilon = 1e-15);
        // oracle: subtract 2π until in range
        let mut a: f64 = 3.5;
        while a > PI {
            a -= TAU;
        }
        assert_abs_diff_eq!(wrap_angle(3.5).unwrap(), a, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.5).unwrap(), -2.783_185_307_179_586, epsilon = 1e-12);
        assert_eq!(wrap_angle(PI).unwrap(), PI);
        assert_eq!(wrap_angle(-PI).unwrap(), PI);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::NEG_INFINITY).is_err());
    }

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (
            prop::array::uniform4(-1.0f64..1.0),
            prop::array::uniform3(-10.0f64..10.0),
        )
            .prop_filter_map("non-degenerate quaternion", |(q, t)| {
                RigidTransform::from_parts(q, t).ok()
            })
    }

    proptest! {
        #[test]
        fn quaternion_stays_unit_and_inverse_cancels(t in arb_transform()) {
            let id = compose(&t, &invert(&t).unwrap()).unwrap();
            prop_assert!((id.rotation().quaternion().norm() - 1.0).abs() < 1e-9);
            prop_assert!((id.to_homogeneous() - Matrix4::identity()).abs().max() < 1e-9);
        }

        #[test]
        fn compose_is_associative(a in arb_transform(), b in arb_transform(), c in arb_transform()) {
            let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
            let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
            prop_assert!((left.to_homogeneous() - right.to_homogeneous()).abs().max() < 1e-9);
        }

        #[test]
        fn decompose_recompose_round_trip(
            yaw in -PI..PI, pitch in -(FRAC_PI_2 - 1e-3)..(FRAC_PI_2 - 1e-3), roll in -PI..PI,
            x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0,
        ) {
            let c = PoseComponents { x, y, z, yaw, pitch, roll };
            let t = c.to_transform();
            let d = decompose_pose(&t).unwrap();
            let frob = (d.to_transform().rotation_matrix() - t.rotation_matrix()).norm();
            prop_assert!(frob < 1e-9);
            for (got, want) in d.euler().iter().zip(c.euler()) {
                prop_assert!(*got > -PI && *got <= PI);
                prop_assert!(wrap(got - want).abs() < 1e-9);
            }
            prop_assert_eq!((d.x, d.y, d.z), (x, y, z));
        }

        #[test]
        fn wrap_is_periodic(a in -50.0f64..50.0, n in -3i32..=3) {
            let w0 = wrap_angle(a).unwrap();
            let w1 = wrap_angle(a + TAU * f64::from(n)).unwrap();
            prop_assert!(w0 > -PI && w0 <= PI);
            prop_assert!(w1 > -PI && w1 <= PI);
            // compare on the circle so a value sitting exactly at ±π is not a false failure
            prop_assert!(wrap(w0 - w1).abs() < 1e-9);
        }
    }
}
