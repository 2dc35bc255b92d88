//! Robot degree-of-freedom model and joint-space vectors.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointGroup {
    LeftArm,
    RightArm,
    LeftGripper,
    RightGripper,
    Torso,
    Base,
}

impl JointGroup {
    /// Arm and gripper joints form the exoskeleton-driven manipulation vector.
    pub fn is_manipulation(self) -> bool {
        matches!(
            self,
            JointGroup::LeftArm | JointGroup::RightArm | JointGroup::LeftGripper | JointGroup::RightGripper
        )
    }

    pub fn is_arm(self) -> bool {
        matches!(self, JointGroup::LeftArm | JointGroup::RightArm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    /// Radians, or meters for the lift and planar base translations.
    pub lower: f64,
    pub upper: f64,
    pub group: JointGroup,
}

impl JointSpec {
    fn new(name: impl Into<String>, lower: f64, upper: f64, group: JointGroup) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            group,
        }
    }

    pub fn clamp(&self, v: f64) -> (f64, bool) {
        let c = v.clamp(self.lower, self.upper);
        (c, c != v)
    }
}

/// Names the joint ordering a [`JointVector`] follows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointLayout(Arc<str>);

impl JointLayout {
    pub fn new(name: &str) -> Self {
        Self(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for JointLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered joint values: radians for arm joints, normalized aperture for grippers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointVector {
    pub values: Vec<f64>,
    pub layout: JointLayout,
}

impl JointVector {
    pub fn new(values: Vec<f64>, layout: JointLayout) -> Self {
        Self { values, layout }
    }

    pub fn zeros_like(other: &JointVector) -> Self {
        Self {
            values: vec![0.0; other.values.len()],
            layout: other.layout.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_compatible(&self, other: &JointVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Shape(format!(
                "layout {} does not match {}",
                self.layout, other.layout
            )));
        }
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "length {} does not match {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// A value together with the number of entries that hit a limit while producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Clamped<T> {
    pub value: T,
    pub saturated: usize,
}

impl<T> Clamped<T> {
    pub fn new(value: T, saturated: usize) -> Self {
        Self { value, saturated }
    }
}

/// Lift, yaw and pitch limits of the articulated torso.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsoLimits {
    pub lift: (f64, f64),
    pub yaw: (f64, f64),
    pub pitch: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub joints: Vec<JointSpec>,
}

impl RobotModel {
    /// Wheeled bimanual humanoid: two 7-DoF arms, two grippers, a lift/yaw/pitch
    /// torso and a planar base, 22 DoF in total.
    pub fn reference() -> Self {
        use JointGroup::*;
        let mut joints = Vec::with_capacity(22);
        for (side, group) in [("left", LeftArm), ("right", RightArm)] {
            for i in 1..=7 {
                joints.push(JointSpec::new(format!("{side}_arm_joint{i}"), -2.9, 2.9, group));
            }
        }
        joints.push(JointSpec::new("left_gripper", 0.0, 1.0, LeftGripper));
        joints.push(JointSpec::new("right_gripper", 0.0, 1.0, RightGripper));
        joints.push(JointSpec::new("torso_lift", 0.0, 0.6, Torso));
        joints.push(JointSpec::new("torso_yaw", -1.57, 1.57, Torso));
        joints.push(JointSpec::new("torso_pitch", -0.6, 1.2, Torso));
        joints.push(JointSpec::new("base_x", f64::NEG_INFINITY, f64::INFINITY, Base));
        joints.push(JointSpec::new("base_y", f64::NEG_INFINITY, f64::INFINITY, Base));
        joints.push(JointSpec::new("base_yaw", f64::NEG_INFINITY, f64::INFINITY, Base));
        Self {
            name: "wheeled-bimanual-22dof".into(),
            joints,
        }
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn group_count(&self, group: JointGroup) -> usize {
        self.joints.iter().filter(|j| j.group == group).count()
    }

    pub fn manipulation_joints(&self) -> impl Iterator<Item = &JointSpec> {
        self.joints.iter().filter(|j| j.group.is_manipulation())
    }

    pub fn manipulation_count(&self) -> usize {
        self.manipulation_joints().count()
    }

    pub fn manipulation_layout(&self) -> JointLayout {
        JointLayout::new(&format!("{}/manipulation", self.name))
    }

    /// Positions of the arm joints within the manipulation vector.
    pub fn arm_indices(&self) -> Vec<usize> {
        self.manipulation_joints()
            .enumerate()
            .filter(|(_, j)| j.group.is_arm())
            .map(|(i, _)| i)
            .collect()
    }

    /// Positions of the (left, right) gripper joints within the manipulation vector.
    pub fn gripper_indices(&self) -> (Option<usize>, Option<usize>) {
        let find = |g| self.manipulation_joints().position(|j| j.group == g);
        (find(JointGroup::LeftGripper), find(JointGroup::RightGripper))
    }

    /// Wraps raw values as a manipulation vector after checking the length.
    pub fn manipulation_vector(&self, values: Vec<f64>) -> Result<JointVector> {
        let expected = self.manipulation_count();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} arm+gripper values, got {}",
                values.len()
            )));
        }
        Ok(JointVector::new(values, self.manipulation_layout()))
    }

    /// Clamps a manipulation vector in place; returns how many entries moved.
    pub fn clamp_manipulation(&self, q: &mut JointVector) -> Result<usize> {
        if q.layout != self.manipulation_layout() || q.len() != self.manipulation_count() {
            return Err(Error::Shape(format!(
                "vector with layout {} ({} values) is not a manipulation vector of {}",
                q.layout,
                q.len(),
                self.name
            )));
        }
        let mut saturated = 0;
        for (v, spec) in q.values.iter_mut().zip(self.manipulation_joints()) {
            let (c, hit) = spec.clamp(*v);
            *v = c;
            saturated += usize::from(hit);
        }
        Ok(saturated)
    }

    /// Torso limits, taken from the torso joints in lift, yaw, pitch order.
    pub fn torso_limits(&self) -> Result<TorsoLimits> {
        let torso: Vec<_> = self
            .joints
            .iter()
            .filter(|j| j.group == JointGroup::Torso)
            .collect();
        match torso.as_slice() {
            [lift, yaw, pitch] => Ok(TorsoLimits {
                lift: (lift.lower, lift.upper),
                yaw: (yaw.lower, yaw.upper),
                pitch: (pitch.lower, pitch.upper),
            }),
            other => Err(Error::Shape(format!(
                "model {} has {} torso joints, expected 3",
                self.name,
                other.len()
            ))),
        }
    }

    /// Replaces the torso joint limits (lift, yaw, pitch order).
    pub fn with_torso_limits(mut self, limits: TorsoLimits) -> Result<Self> {
        let ranges = [limits.lift, limits.yaw, limits.pitch];
        if ranges.iter().any(|(lo, hi)| lo > hi || lo.is_nan() || hi.is_nan()) {
            return Err(Error::InvalidInput(format!("torso limits {limits:?} are not ordered ranges")));
        }
        let mut it = ranges.into_iter();
        for j in self.joints.iter_mut().filter(|j| j.group == JointGroup::Torso) {
            if let Some((lo, hi)) = it.next() {
                j.lower = lo;
                j.upper = hi;
            }
        }
        Ok(self)
    }
}
