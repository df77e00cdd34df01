//! 10-DOF upper-body kinematic model.
//!
//! The chain runs pelvis → torso (3 revolute joints) → right shoulder
//! (3 revolute joints) → elbow → forearm → wrist (2 revolute joints) → hand
//! frame. The base frame is X forward, Y left, Z up; the torso segment
//! points up (+Z) and the arm hangs down (−Z) in the zero posture, so the
//! zero posture is a person standing straight with the arm at their side.
//!
//! Joint order in a [`Posture`]:
//!
//! | idx | joint                | local axis | positive direction        |
//! |-----|----------------------|------------|---------------------------|
//! | 0   | torso_flexion        | +Y         | lean forward              |
//! | 1   | torso_lateral_bend   | +X         | bend right                |
//! | 2   | torso_axial_rotation | +Z         | turn left                 |
//! | 3   | shoulder_flexion     | −Y         | arm swings forward        |
//! | 4   | shoulder_abduction   | −X         | arm swings away from body |
//! | 5   | shoulder_rotation    | −Z         | internal rotation         |
//! | 6   | elbow_flexion        | −Y         | hand moves forward        |
//! | 7   | forearm_pronation    | −Z         | palm turns inward         |
//! | 8   | wrist_flexion        | −Y         | palm tips forward         |
//! | 9   | wrist_deviation      | +X         | ulnar deviation           |

use nalgebra::{Isometry3, SMatrix, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of kinematic degrees of freedom.
pub const DOF: usize = 10;

/// Named indices into [`Posture::angles`].
pub mod joint {
    pub const TORSO_FLEXION: usize = 0;
    pub const TORSO_LATERAL_BEND: usize = 1;
    pub const TORSO_AXIAL_ROTATION: usize = 2;
    pub const SHOULDER_FLEXION: usize = 3;
    pub const SHOULDER_ABDUCTION: usize = 4;
    pub const SHOULDER_ROTATION: usize = 5;
    pub const ELBOW_FLEXION: usize = 6;
    pub const FOREARM_PRONATION: usize = 7;
    pub const WRIST_FLEXION: usize = 8;
    pub const WRIST_DEVIATION: usize = 9;

    pub const NAMES: [&str; super::DOF] = [
        "torso_flexion",
        "torso_lateral_bend",
        "torso_axial_rotation",
        "shoulder_flexion",
        "shoulder_abduction",
        "shoulder_rotation",
        "elbow_flexion",
        "forearm_pronation",
        "wrist_flexion",
        "wrist_deviation",
    ];
}

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("non-finite angle at joint {index} ({name}): {value}", name = joint::NAMES[*index])]
    NonFiniteAngle { index: usize, value: f64 },
    #[error("joint limits invalid at joint {index}: lower {lower} must be < upper {upper}")]
    InvalidLimits { index: usize, lower: f64, upper: f64 },
    #[error("joint limits at joint {index} must strictly contain zero")]
    ZeroNotInterior { index: usize },
    #[error("body segment '{segment}' must have strictly positive length, got {value}")]
    NonPositiveSegment { segment: &'static str, value: f64 },
}

/// Joint configuration of the torso/arm chain, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posture {
    pub angles: [f64; DOF],
}

impl Posture {
    pub fn new(angles: [f64; DOF]) -> Self {
        Self { angles }
    }

    pub fn zero() -> Self {
        Self { angles: [0.0; DOF] }
    }

    pub fn is_finite(&self) -> bool {
        self.angles.iter().all(|a| a.is_finite())
    }

    pub fn check_finite(&self) -> Result<(), KinematicsError> {
        match self.angles.iter().position(|a| !a.is_finite()) {
            None => Ok(()),
            Some(index) => Err(KinematicsError::NonFiniteAngle {
                index,
                value: self.angles[index],
            }),
        }
    }
}

/// Box range of motion, one interval per joint.
///
/// These are fixed anatomical limits; the zero posture is strictly interior
/// by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: [f64; DOF],
    pub upper: [f64; DOF],
}

const DEG: f64 = std::f64::consts::PI / 180.0;

impl Default for JointLimits {
    /// Box limits of a seated working range, degrees. These stand in for a
    /// pose-dependent validity model: full anatomical end-range combinations
    /// (torso fully twisted *and* bent, arm overhead *and* behind the back)
    /// are not reachable while operating a hand controller, so the box is
    /// deliberately tighter than single-joint anatomical extremes.
    ///
    /// | joint                | lower | upper |
    /// |----------------------|-------|-------|
    /// | torso_flexion        | −10   | 25    |
    /// | torso_lateral_bend   | −18   | 18    |
    /// | torso_axial_rotation | −18   | 18    |
    /// | shoulder_flexion     | −30   | 110   |
    /// | shoulder_abduction   | −20   | 45    |
    /// | shoulder_rotation    | −90   | 90    |
    /// | elbow_flexion        | −5    | 140   |
    /// | forearm_pronation    | −70   | 70    |
    /// | wrist_flexion        | −25   | 35    |
    /// | wrist_deviation      | −15   | 15    |
    fn default() -> Self {
        Self {
            lower: [
                -10.0 * DEG,
                -18.0 * DEG,
                -18.0 * DEG,
                -30.0 * DEG,
                -20.0 * DEG,
                -90.0 * DEG,
                -5.0 * DEG,
                -70.0 * DEG,
                -25.0 * DEG,
                -15.0 * DEG,
            ],
            upper: [
                25.0 * DEG,
                18.0 * DEG,
                18.0 * DEG,
                110.0 * DEG,
                45.0 * DEG,
                90.0 * DEG,
                140.0 * DEG,
                70.0 * DEG,
                35.0 * DEG,
                15.0 * DEG,
            ],
        }
    }
}

impl JointLimits {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for i in 0..DOF {
            if !(self.lower[i] < self.upper[i]) {
                return Err(KinematicsError::InvalidLimits {
                    index: i,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
            if !(self.lower[i] < 0.0 && 0.0 < self.upper[i]) {
                return Err(KinematicsError::ZeroNotInterior { index: i });
            }
        }
        Ok(())
    }

    pub fn contains(&self, q: &Posture) -> bool {
        q.is_finite()
            && (0..DOF).all(|i| self.lower[i] <= q.angles[i] && q.angles[i] <= self.upper[i])
    }

    /// Projects each angle onto its interval. Idempotent.
    pub fn clamp(&self, q: &Posture) -> Posture {
        let mut out = *q;
        for i in 0..DOF {
            out.angles[i] = out.angles[i].clamp(self.lower[i], self.upper[i]);
        }
        out
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        0.5 * (self.lower[i] + self.upper[i])
    }
}

/// Segment lengths in meters plus the shoulder offset from the torso top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyDimensions {
    pub torso: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    pub hand: f64,
    /// Vector from the top of the torso to the right shoulder, in the torso
    /// frame (Y is left, so the right shoulder sits at negative Y).
    pub shoulder_offset: [f64; 3],
}

impl Default for BodyDimensions {
    /// 50th-percentile adult segment lengths.
    fn default() -> Self {
        Self {
            torso: 0.50,
            upper_arm: 0.30,
            forearm: 0.27,
            hand: 0.10,
            shoulder_offset: [0.0, -0.20, 0.0],
        }
    }
}

impl BodyDimensions {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (segment, value) in [
            ("torso", self.torso),
            ("upper_arm", self.upper_arm),
            ("forearm", self.forearm),
            ("hand", self.hand),
        ] {
            if !(value > 0.0) {
                return Err(KinematicsError::NonPositiveSegment { segment, value });
            }
        }
        Ok(())
    }
}

/// Pose of the hand frame: position in meters, orientation as a unit
/// quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandPose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl HandPose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    /// Geodesic angle between the two orientations, radians in [0, π].
    pub fn rotation_angle_to(&self, other: &HandPose) -> f64 {
        self.orientation.angle_to(&other.orientation)
    }

    /// Position distance plus rotation angle; a combined "are these the same
    /// pose" metric used by tests.
    pub fn distance_to(&self, other: &HandPose) -> f64 {
        (self.position - other.position).norm() + self.rotation_angle_to(other)
    }
}

/// Local rotation axis of each joint (see the module table).
pub fn joint_axis(i: usize) -> Vector3<f64> {
    match i {
        joint::TORSO_FLEXION => Vector3::y(),
        joint::TORSO_LATERAL_BEND => Vector3::x(),
        joint::TORSO_AXIAL_ROTATION => Vector3::z(),
        joint::SHOULDER_FLEXION => -Vector3::y(),
        joint::SHOULDER_ABDUCTION => -Vector3::x(),
        joint::SHOULDER_ROTATION => -Vector3::z(),
        joint::ELBOW_FLEXION => -Vector3::y(),
        joint::FOREARM_PRONATION => -Vector3::z(),
        joint::WRIST_FLEXION => -Vector3::y(),
        joint::WRIST_DEVIATION => Vector3::x(),
        _ => panic!("joint index {i} out of range"),
    }
}

/// World-frame quantities of every joint plus the resulting hand pose,
/// computed in one chain traversal.
#[derive(Debug, Clone)]
pub struct ChainFrames {
    /// World position of each joint's rotation center.
    pub origins: [Vector3<f64>; DOF],
    /// World direction of each joint's rotation axis.
    pub axes: [Vector3<f64>; DOF],
    pub hand: HandPose,
}

fn rotate(iso: &mut Isometry3<f64>, axis_index: usize, angle: f64) {
    let axis = Unit::new_unchecked(joint_axis(axis_index));
    *iso *= UnitQuaternion::from_axis_angle(&axis, angle);
}

/// Walks the chain once, recording each joint's world origin and axis.
pub fn chain_frames(q: &Posture, dims: &BodyDimensions) -> Result<ChainFrames, KinematicsError> {
    q.check_finite()?;
    dims.validate()?;

    let mut iso = Isometry3::identity();
    let mut origins = [Vector3::zeros(); DOF];
    let mut axes = [Vector3::zeros(); DOF];

    let record_and_rotate = |iso: &mut Isometry3<f64>,
                                 origins: &mut [Vector3<f64>; DOF],
                                 axes: &mut [Vector3<f64>; DOF],
                                 i: usize| {
        origins[i] = iso.translation.vector;
        axes[i] = iso.rotation * joint_axis(i);
        rotate(iso, i, q.angles[i]);
    };

    for i in 0..3 {
        record_and_rotate(&mut iso, &mut origins, &mut axes, i);
    }
    iso *= Translation3::new(0.0, 0.0, dims.torso);
    iso *= Translation3::new(
        dims.shoulder_offset[0],
        dims.shoulder_offset[1],
        dims.shoulder_offset[2],
    );
    for i in 3..6 {
        record_and_rotate(&mut iso, &mut origins, &mut axes, i);
    }
    iso *= Translation3::new(0.0, 0.0, -dims.upper_arm);
    for i in 6..8 {
        record_and_rotate(&mut iso, &mut origins, &mut axes, i);
    }
    iso *= Translation3::new(0.0, 0.0, -dims.forearm);
    for i in 8..10 {
        record_and_rotate(&mut iso, &mut origins, &mut axes, i);
    }
    iso *= Translation3::new(0.0, 0.0, -dims.hand);

    Ok(ChainFrames {
        origins,
        axes,
        hand: HandPose {
            position: iso.translation.vector,
            orientation: iso.rotation,
        },
    })
}

/// Pose of the hand frame for a given posture.
pub fn forward_kinematics(
    q: &Posture,
    dims: &BodyDimensions,
) -> Result<HandPose, KinematicsError> {
    Ok(chain_frames(q, dims)?.hand)
}

/// 6×10 geometric Jacobian of the hand frame: rows 0–2 are linear velocity,
/// rows 3–5 angular velocity, per unit joint rate.
pub fn fk_jacobian(
    q: &Posture,
    dims: &BodyDimensions,
) -> Result<SMatrix<f64, 6, DOF>, KinematicsError> {
    let frames = chain_frames(q, dims)?;
    Ok(jacobian_from_frames(&frames))
}

/// Jacobian from precomputed frames: column i is
/// [axis_i × (p_hand − origin_i); axis_i].
pub fn jacobian_from_frames(frames: &ChainFrames) -> SMatrix<f64, 6, DOF> {
    let mut jac = SMatrix::<f64, 6, DOF>::zeros();
    let p = frames.hand.position;
    for i in 0..DOF {
        let lin = frames.axes[i].cross(&(p - frames.origins[i]));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&frames.axes[i]);
    }
    jac
}

/// Scalar weights of the Σ-weighted squared pose error
/// `w_pos·‖Δp‖² + w_ori·θ²` where θ is the orientation geodesic angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseWeights {
    /// Position weight, 1/m².
    pub position: f64,
    /// Orientation weight, 1/rad².
    pub orientation: f64,
}

impl Default for PoseWeights {
    fn default() -> Self {
        Self {
            position: 1.0,
            orientation: 0.1,
        }
    }
}

/// Rotation vector (axis × angle) of the rotation taking `target`'s
/// orientation to `actual`'s, expressed in the world frame. Its norm is the
/// geodesic angle.
pub fn rotation_error_vector(target: &HandPose, actual: &HandPose) -> Vector3<f64> {
    (actual.orientation * target.orientation.inverse()).scaled_axis()
}

/// Σ-weighted squared pose error between a target pose and an actual pose.
/// Nonnegative; zero iff positions and orientations coincide.
pub fn pose_error_sq(target: &HandPose, actual: &HandPose, w: &PoseWeights) -> f64 {
    let dp = actual.position - target.position;
    let ang = rotation_error_vector(target, actual).norm_squared();
    w.position * dp.norm_squared() + w.orientation * ang
}

/// Pose error and its exact gradient with respect to the joint angles,
/// using the chain Jacobian.
///
/// For the orientation term, with error rotation E = R·R_targetᵀ and
/// r = log(E), d(‖r‖²)/dq = 2·J_angᵀ·r holds exactly because E evolves by
/// the world angular velocity of the hand frame.
pub fn pose_error_and_gradient(
    target: &HandPose,
    q: &Posture,
    dims: &BodyDimensions,
    w: &PoseWeights,
) -> Result<(f64, [f64; DOF]), KinematicsError> {
    let frames = chain_frames(q, dims)?;
    let jac = jacobian_from_frames(&frames);
    let dp = frames.hand.position - target.position;
    let r = rotation_error_vector(target, &frames.hand);
    let value = w.position * dp.norm_squared() + w.orientation * r.norm_squared();

    let mut grad = [0.0; DOF];
    for i in 0..DOF {
        let jl = jac.fixed_view::<3, 1>(0, i);
        let ja = jac.fixed_view::<3, 1>(3, i);
        grad[i] = 2.0 * w.position * jl.dot(&dp) + 2.0 * w.orientation * ja.dot(&r);
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_valid_posture(rng: &mut impl Rng, lim: &JointLimits) -> Posture {
        let mut q = Posture::zero();
        for i in 0..DOF {
            q.angles[i] = rng.random_range(lim.lower[i]..lim.upper[i]);
        }
        q
    }

    #[test]
    fn default_limits_are_valid() {
        JointLimits::default().validate().unwrap();
    }

    #[test]
    fn zero_posture_fk_is_sum_of_segment_offsets() {
        let dims = BodyDimensions::default();
        let pose = forward_kinematics(&Posture::zero(), &dims).unwrap();
        let expected = Vector3::new(0.0, 0.0, dims.torso)
            + Vector3::from(dims.shoulder_offset)
            + Vector3::new(0.0, 0.0, -(dims.upper_arm + dims.forearm + dims.hand));
        assert_abs_diff_eq!(pose.position, expected, epsilon = 1e-12);
        assert!(pose.orientation.angle() < 1e-12);
    }

    #[test]
    fn elbow_right_angle_matches_manual_composition() {
        // Hand-composed oracle: with only the elbow bent by π/2, the pose is
        // T_shoulder_chain ∘ Rot(elbow axis, π/2) ∘ T_forearm+hand. Build it
        // explicitly from raw isometries rather than through the chain walker.
        let dims = BodyDimensions::default();
        let mut q = Posture::zero();
        q.angles[joint::ELBOW_FLEXION] = std::f64::consts::FRAC_PI_2;

        let to_elbow = Isometry3::from_parts(
            Translation3::new(
                dims.shoulder_offset[0],
                dims.shoulder_offset[1],
                dims.shoulder_offset[2] + dims.torso - dims.upper_arm,
            ),
            UnitQuaternion::identity(),
        );
        let elbow_rot = Isometry3::rotation(
            joint_axis(joint::ELBOW_FLEXION) * std::f64::consts::FRAC_PI_2,
        );
        let to_hand = Isometry3::translation(0.0, 0.0, -(dims.forearm + dims.hand));
        let expected = to_elbow * elbow_rot * to_hand;

        let pose = forward_kinematics(&q, &dims).unwrap();
        assert_abs_diff_eq!(pose.position, expected.translation.vector, epsilon = 1e-12);
        assert!(pose.orientation.angle_to(&expected.rotation) < 1e-12);
        // Orientation is exactly a π/2 turn about the elbow axis.
        assert_abs_diff_eq!(
            pose.orientation.angle(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn axial_rotation_is_2pi_periodic() {
        let dims = BodyDimensions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lim = JointLimits::default();
        let q = random_valid_posture(&mut rng, &lim);
        let mut q2 = q;
        q2.angles[joint::TORSO_AXIAL_ROTATION] += 2.0 * std::f64::consts::PI;
        let a = forward_kinematics(&q, &dims).unwrap();
        let b = forward_kinematics(&q2, &dims).unwrap();
        assert!(a.distance_to(&b) < 1e-9);
    }

    #[test]
    fn non_finite_angle_is_rejected() {
        let dims = BodyDimensions::default();
        let mut q = Posture::zero();
        q.angles[4] = f64::NAN;
        assert!(matches!(
            forward_kinematics(&q, &dims),
            Err(KinematicsError::NonFiniteAngle { index: 4, .. })
        ));
    }

    #[test]
    fn jacobian_angular_columns_at_zero_are_local_axes() {
        let dims = BodyDimensions::default();
        let jac = fk_jacobian(&Posture::zero(), &dims).unwrap();
        for i in 0..DOF {
            let ang = jac.fixed_view::<3, 1>(3, i).into_owned();
            assert_abs_diff_eq!(ang, joint_axis(i), epsilon = 1e-12);
        }
    }

    /// Central finite differences of the FK, independent of the analytic
    /// Jacobian path: position rows from position differences, angular rows
    /// from the scaled-axis of the relative rotation.
    fn finite_difference_jacobian(
        q: &Posture,
        dims: &BodyDimensions,
        h: f64,
    ) -> SMatrix<f64, 6, DOF> {
        let mut jac = SMatrix::<f64, 6, DOF>::zeros();
        for i in 0..DOF {
            let mut qp = *q;
            let mut qm = *q;
            qp.angles[i] += h;
            qm.angles[i] -= h;
            let pp = forward_kinematics(&qp, dims).unwrap();
            let pm = forward_kinematics(&qm, dims).unwrap();
            let dlin = (pp.position - pm.position) / (2.0 * h);
            let dang = (pp.orientation * pm.orientation.inverse()).scaled_axis() / (2.0 * h);
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&dlin);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&dang);
        }
        jac
    }

    #[test]
    fn jacobian_matches_finite_differences_over_random_postures() {
        let dims = BodyDimensions::default();
        let lim = JointLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let q = random_valid_posture(&mut rng, &lim);
            let analytic = fk_jacobian(&q, &dims).unwrap();
            let numeric = finite_difference_jacobian(&q, &dims, 1e-6);
            let dev = (analytic - numeric).abs().max();
            worst = worst.max(dev);
        }
        assert!(worst < 1e-5, "max |J_analytic − J_fd| = {worst}");
    }

    #[test]
    fn clamp_projects_and_is_idempotent() {
        let lim = JointLimits::default();
        let interior = Posture::zero();
        assert_eq!(lim.clamp(&interior), interior);

        let mut q = Posture::zero();
        q.angles[2] = lim.upper[2] + 0.5;
        let c = lim.clamp(&q);
        assert_eq!(c.angles[2], lim.upper[2]);
        assert_eq!(lim.clamp(&c), c);
    }

    #[test]
    fn pose_error_is_zero_iff_poses_match() {
        let dims = BodyDimensions::default();
        let w = PoseWeights::default();
        let q = Posture::zero();
        let pose = forward_kinematics(&q, &dims).unwrap();
        assert_eq!(pose_error_sq(&pose, &pose, &w), 0.0);

        let mut q2 = q;
        q2.angles[joint::SHOULDER_FLEXION] = 0.3;
        let pose2 = forward_kinematics(&q2, &dims).unwrap();
        assert!(pose_error_sq(&pose, &pose2, &w) > 0.0);
    }

    #[test]
    fn pose_error_gradient_matches_finite_differences() {
        let dims = BodyDimensions::default();
        let lim = JointLimits::default();
        let w = PoseWeights::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let target = forward_kinematics(&random_valid_posture(&mut rng, &lim), &dims).unwrap();
        for _ in 0..50 {
            let q = random_valid_posture(&mut rng, &lim);
            let (value, grad) = pose_error_and_gradient(&target, &q, &dims, &w).unwrap();
            assert!(value >= 0.0);
            let h = 1e-6;
            for i in 0..DOF {
                let mut qp = q;
                let mut qm = q;
                qp.angles[i] += h;
                qm.angles[i] -= h;
                let fp = pose_error_sq(&target, &forward_kinematics(&qp, &dims).unwrap(), &w);
                let fm = pose_error_sq(&target, &forward_kinematics(&qm, &dims).unwrap(), &w);
                let fd = (fp - fm) / (2.0 * h);
                assert_abs_diff_eq!(grad[i], fd, epsilon = 1e-5);
            }
        }
    }
}
