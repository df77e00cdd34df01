//! Table-driven RULA scorer.
//!
//! Produces the discrete 1–7 risk score from a posture and the non-postural
//! worksheet inputs. Scores derived from joint angles (shoulder bands,
//! abduction, elbow band, wrist bands and deviation, forearm twist, trunk
//! bands and twist/side-bend) are computed from the posture; everything the
//! 10-DOF model cannot express (neck, loads, motion frequency, support and
//! shoulder-elevation flags) comes from a [`TaskContext`].
//!
//! Angle bands follow the published worksheet with half-open intervals
//! [low, high) and the highest band closed, so boundary angles score
//! deterministically.

pub mod tables;

use crate::kinematics::{joint, Posture};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tables::{table_a, table_b, table_c, tables_json};

const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

/// Shoulder abduction beyond this adds +1 to the upper-arm score.
pub const ABDUCTION_THRESHOLD_DEG: f64 = 20.0;
/// Forearm pronation/supination beyond this counts as end-range twist.
pub const WRIST_TWIST_END_RANGE_DEG: f64 = 60.0;
/// Torso axial rotation beyond this adds +1 (twist) to the trunk score.
pub const TRUNK_TWIST_THRESHOLD_DEG: f64 = 15.0;
/// Torso lateral bend beyond this adds +1 (side bend) to the trunk score.
pub const TRUNK_SIDE_BEND_THRESHOLD_DEG: f64 = 15.0;
/// Wrist flexion/extension within this band counts as neutral (wrist 1).
pub const WRIST_NEUTRAL_BAND_DEG: f64 = 5.0;
/// Wrist radial/ulnar deviation beyond this adds +1 to the wrist score.
pub const WRIST_DEVIATION_THRESHOLD_DEG: f64 = 10.0;

/// Load/force timing category of the worksheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadMode {
    Intermittent,
    StaticOrRepeated,
    Shock,
}

/// Non-postural worksheet inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskContext {
    /// Arm group: posture held longer than a minute or action repeated more
    /// than 4×/min.
    pub arm_static_or_repeated: bool,
    /// Neck/trunk/leg group: same criterion.
    pub body_static_or_repeated: bool,
    pub arm_load_kg: f64,
    pub arm_load_mode: LoadMode,
    pub body_load_kg: f64,
    pub body_load_mode: LoadMode,
    /// Positive = flexion, negative = extension, degrees in [−90, 90].
    pub neck_angle_deg: f64,
    pub neck_twist: bool,
    pub neck_side_bend: bool,
    pub legs_and_feet_supported: bool,
    pub arm_supported_or_leaning: bool,
    pub shoulder_raised: bool,
    pub working_across_midline: bool,
    /// Worksheet flag; the scorer also derives wrist deviation from the
    /// posture, so this only matters when the posture cannot express it.
    pub wrist_bent_from_midline: bool,
}

impl Default for TaskContext {
    /// Neutral seated context: no loads, no motion-frequency flags, legs
    /// supported.
    fn default() -> Self {
        Self {
            arm_static_or_repeated: false,
            body_static_or_repeated: false,
            arm_load_kg: 0.0,
            arm_load_mode: LoadMode::Intermittent,
            body_load_kg: 0.0,
            body_load_mode: LoadMode::Intermittent,
            neck_angle_deg: 0.0,
            neck_twist: false,
            neck_side_bend: false,
            legs_and_feet_supported: true,
            arm_supported_or_leaning: false,
            shoulder_raised: false,
            working_across_midline: false,
            wrist_bent_from_midline: false,
        }
    }
}

impl TaskContext {
    pub fn validate(&self) -> Result<(), RulaError> {
        if !self.arm_load_kg.is_finite() || self.arm_load_kg < 0.0 {
            return Err(RulaError::InvalidContext("arm_load_kg"));
        }
        if !self.body_load_kg.is_finite() || self.body_load_kg < 0.0 {
            return Err(RulaError::InvalidContext("body_load_kg"));
        }
        if !self.neck_angle_deg.is_finite() || self.neck_angle_deg.abs() > 90.0 {
            return Err(RulaError::InvalidContext("neck_angle_deg"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RulaError {
    #[error("invalid task context field: {0}")]
    InvalidContext(&'static str),
    #[error("non-finite joint angle in posture")]
    NonFinitePosture,
    #[error("internal consistency failure: {field} = {value} outside its worksheet range")]
    OutOfRange { field: &'static str, value: u8 },
}

/// Every intermediate worksheet score plus the grand score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulaBreakdown {
    pub upper_arm: u8,
    pub lower_arm: u8,
    pub wrist: u8,
    pub wrist_twist: u8,
    pub table_a: u8,
    pub muscle_a: u8,
    pub force_a: u8,
    pub score_c: u8,
    pub neck: u8,
    pub trunk: u8,
    pub legs: u8,
    pub table_b: u8,
    pub muscle_b: u8,
    pub force_b: u8,
    pub score_d: u8,
    pub grand: u8,
}

impl RulaBreakdown {
    fn validate(&self) -> Result<(), RulaError> {
        let checks: [(&'static str, u8, u8, u8); 8] = [
            ("upper_arm", self.upper_arm, 1, 6),
            ("lower_arm", self.lower_arm, 1, 3),
            ("wrist", self.wrist, 1, 4),
            ("wrist_twist", self.wrist_twist, 1, 2),
            ("neck", self.neck, 1, 6),
            ("trunk", self.trunk, 1, 6),
            ("legs", self.legs, 1, 2),
            ("grand", self.grand, 1, 7),
        ];
        for (field, value, lo, hi) in checks {
            if value < lo || value > hi {
                return Err(RulaError::OutOfRange { field, value });
            }
        }
        Ok(())
    }
}

fn deg(q: &Posture, i: usize) -> f64 {
    q.angles[i] * RAD_TO_DEG
}

/// Upper-arm score 1–6: shoulder flexion bands plus elevation/abduction
/// adjustments and the support discount.
pub fn upper_arm_score(q: &Posture, ctx: &TaskContext) -> u8 {
    let flexion = deg(q, joint::SHOULDER_FLEXION);
    let base: i8 = if (-20.0..20.0).contains(&flexion) {
        1
    } else if flexion < -20.0 || (20.0..45.0).contains(&flexion) {
        2
    } else if (45.0..90.0).contains(&flexion) {
        3
    } else {
        4
    };
    let mut score = base;
    if ctx.shoulder_raised {
        score += 1;
    }
    if deg(q, joint::SHOULDER_ABDUCTION).abs() > ABDUCTION_THRESHOLD_DEG {
        score += 1;
    }
    if ctx.arm_supported_or_leaning {
        score -= 1;
    }
    score.clamp(1, 6) as u8
}

/// Lower-arm score 1–3: elbow flexion band plus the midline adjustment.
pub fn lower_arm_score(q: &Posture, ctx: &TaskContext) -> u8 {
    let elbow = deg(q, joint::ELBOW_FLEXION);
    let base: u8 = if (60.0..100.0).contains(&elbow) { 1 } else { 2 };
    let adj = u8::from(ctx.working_across_midline);
    (base + adj).clamp(1, 3)
}

/// Wrist score 1–4: flexion/extension bands plus the deviation adjustment.
/// Deviation is read from the posture; the context flag is honored for
/// callers without a deviation DOF.
pub fn wrist_score(q: &Posture, ctx: &TaskContext) -> u8 {
    let flexion = deg(q, joint::WRIST_FLEXION).abs();
    let base: u8 = if flexion < WRIST_NEUTRAL_BAND_DEG {
        1
    } else if flexion < 15.0 {
        2
    } else {
        3
    };
    let deviated = deg(q, joint::WRIST_DEVIATION).abs() > WRIST_DEVIATION_THRESHOLD_DEG
        || ctx.wrist_bent_from_midline;
    (base + u8::from(deviated)).clamp(1, 4)
}

/// Wrist-twist score 1–2: 2 when forearm pronation/supination is near
/// end-range.
pub fn wrist_twist_score(q: &Posture) -> u8 {
    if deg(q, joint::FOREARM_PRONATION).abs() > WRIST_TWIST_END_RANGE_DEG {
        2
    } else {
        1
    }
}

/// Neck score 1–6 from the context neck angle plus twist/side-bend flags.
pub fn neck_score(ctx: &TaskContext) -> u8 {
    let a = ctx.neck_angle_deg;
    let base: u8 = if (0.0..10.0).contains(&a) {
        1
    } else if (10.0..20.0).contains(&a) {
        2
    } else if a >= 20.0 {
        3
    } else {
        // extension
        4
    };
    (base + u8::from(ctx.neck_twist) + u8::from(ctx.neck_side_bend)).clamp(1, 6)
}

/// Trunk score 1–6: flexion magnitude bands (extension mirrors flexion)
/// plus twist and side-bend adjustments from the torso joints.
pub fn trunk_score(q: &Posture, _ctx: &TaskContext) -> u8 {
    let flexion = deg(q, joint::TORSO_FLEXION).abs();
    let base: u8 = if flexion < 5.0 {
        1
    } else if flexion < 20.0 {
        2
    } else if flexion < 60.0 {
        3
    } else {
        4
    };
    let twist = deg(q, joint::TORSO_AXIAL_ROTATION).abs() > TRUNK_TWIST_THRESHOLD_DEG;
    let side = deg(q, joint::TORSO_LATERAL_BEND).abs() > TRUNK_SIDE_BEND_THRESHOLD_DEG;
    (base + u8::from(twist) + u8::from(side)).clamp(1, 6)
}

/// Legs score 1–2.
pub fn legs_score(ctx: &TaskContext) -> u8 {
    if ctx.legs_and_feet_supported {
        1
    } else {
        2
    }
}

/// Muscle-use addition: 1 when the posture is mainly static or the action
/// repeats more than 4×/min.
pub fn muscle_use_score(static_or_repeated: bool) -> u8 {
    u8::from(static_or_repeated)
}

/// Force/load addition 0–3.
pub fn force_load_score(load_kg: f64, mode: LoadMode) -> u8 {
    if mode == LoadMode::Shock || load_kg > 10.0 {
        3
    } else if load_kg >= 2.0 {
        match mode {
            LoadMode::Intermittent => 1,
            LoadMode::StaticOrRepeated => 2,
            LoadMode::Shock => unreachable!(),
        }
    } else {
        0
    }
}

/// Full worksheet pass: sub-scores, table lookups, muscle/force additions,
/// and the grand score.
pub fn rula(q: &Posture, ctx: &TaskContext) -> Result<RulaBreakdown, RulaError> {
    if !q.is_finite() {
        return Err(RulaError::NonFinitePosture);
    }
    ctx.validate()?;

    let upper_arm = upper_arm_score(q, ctx);
    let lower_arm = lower_arm_score(q, ctx);
    let wrist = wrist_score(q, ctx);
    let wrist_twist = wrist_twist_score(q);
    let a = table_a(upper_arm, lower_arm, wrist, wrist_twist);
    let muscle_a = muscle_use_score(ctx.arm_static_or_repeated);
    let force_a = force_load_score(ctx.arm_load_kg, ctx.arm_load_mode);
    let score_c = a + muscle_a + force_a;

    let neck = neck_score(ctx);
    let trunk = trunk_score(q, ctx);
    let legs = legs_score(ctx);
    let b = table_b(neck, trunk, legs);
    let muscle_b = muscle_use_score(ctx.body_static_or_repeated);
    let force_b = force_load_score(ctx.body_load_kg, ctx.body_load_mode);
    let score_d = b + muscle_b + force_b;

    let grand = table_c(score_c.min(8), score_d.min(7));

    let breakdown = RulaBreakdown {
        upper_arm,
        lower_arm,
        wrist,
        wrist_twist,
        table_a: a,
        muscle_a,
        force_a,
        score_c,
        neck,
        trunk,
        legs,
        table_b: b,
        muscle_b,
        force_b,
        score_d,
        grand,
    };
    breakdown.validate()?;
    Ok(breakdown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::JointLimits;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DEG_TO_RAD: f64 = std::f64::consts::PI / 180.0;

    fn posture_deg(pairs: &[(usize, f64)]) -> Posture {
        let mut q = Posture::zero();
        for &(i, v) in pairs {
            q.angles[i] = v * DEG_TO_RAD;
        }
        q
    }

    #[test]
    fn upper_arm_bands() {
        let ctx = TaskContext::default();
        assert_eq!(
            upper_arm_score(&posture_deg(&[(joint::SHOULDER_FLEXION, 10.0)]), &ctx),
            1
        );
        assert_eq!(
            upper_arm_score(&posture_deg(&[(joint::SHOULDER_FLEXION, 30.0)]), &ctx),
            2
        );
        assert_eq!(
            upper_arm_score(&posture_deg(&[(joint::SHOULDER_FLEXION, -30.0)]), &ctx),
            2
        );
        assert_eq!(
            upper_arm_score(&posture_deg(&[(joint::SHOULDER_FLEXION, 60.0)]), &ctx),
            3
        );
        let raised = TaskContext {
            shoulder_raised: true,
            ..TaskContext::default()
        };
        assert_eq!(
            upper_arm_score(&posture_deg(&[(joint::SHOULDER_FLEXION, 100.0)]), &raised),
            5
        );
        let supported = TaskContext {
            arm_supported_or_leaning: true,
            ..TaskContext::default()
        };
        // floor at 1
        assert_eq!(
            upper_arm_score(&posture_deg(&[(joint::SHOULDER_FLEXION, 10.0)]), &supported),
            1
        );
    }

    #[test]
    fn abduction_adds_one() {
        let ctx = TaskContext::default();
        let q = posture_deg(&[(joint::SHOULDER_FLEXION, 10.0), (joint::SHOULDER_ABDUCTION, 45.0)]);
        assert_eq!(upper_arm_score(&q, &ctx), 2);
    }

    #[test]
    fn lower_arm_bands() {
        let ctx = TaskContext::default();
        assert_eq!(lower_arm_score(&posture_deg(&[(joint::ELBOW_FLEXION, 80.0)]), &ctx), 1);
        assert_eq!(lower_arm_score(&posture_deg(&[(joint::ELBOW_FLEXION, 30.0)]), &ctx), 2);
        assert_eq!(lower_arm_score(&posture_deg(&[(joint::ELBOW_FLEXION, 120.0)]), &ctx), 2);
    }

    #[test]
    fn wrist_bands() {
        let ctx = TaskContext::default();
        assert_eq!(wrist_score(&Posture::zero(), &ctx), 1);
        assert_eq!(wrist_score(&posture_deg(&[(joint::WRIST_FLEXION, 10.0)]), &ctx), 2);
        assert_eq!(wrist_score(&posture_deg(&[(joint::WRIST_FLEXION, -30.0)]), &ctx), 3);
        // deviation from the posture adds one
        let q = posture_deg(&[(joint::WRIST_FLEXION, 10.0), (joint::WRIST_DEVIATION, 20.0)]);
        assert_eq!(wrist_score(&q, &ctx), 3);
    }

    #[test]
    fn wrist_twist_bands() {
        assert_eq!(wrist_twist_score(&Posture::zero()), 1);
        assert_eq!(
            wrist_twist_score(&posture_deg(&[(joint::FOREARM_PRONATION, 80.0)])),
            2
        );
    }

    #[test]
    fn neck_bands() {
        let mk = |a: f64| TaskContext {
            neck_angle_deg: a,
            ..TaskContext::default()
        };
        assert_eq!(neck_score(&mk(5.0)), 1);
        assert_eq!(neck_score(&mk(15.0)), 2);
        assert_eq!(neck_score(&mk(30.0)), 3);
        assert_eq!(neck_score(&mk(-10.0)), 4);
    }

    #[test]
    fn trunk_bands() {
        let ctx = TaskContext::default();
        assert_eq!(trunk_score(&Posture::zero(), &ctx), 1);
        assert_eq!(trunk_score(&posture_deg(&[(joint::TORSO_FLEXION, 10.0)]), &ctx), 2);
        assert_eq!(trunk_score(&posture_deg(&[(joint::TORSO_FLEXION, 40.0)]), &ctx), 3);
        assert_eq!(trunk_score(&posture_deg(&[(joint::TORSO_FLEXION, 70.0)]), &ctx), 4);
        let twisted = posture_deg(&[(joint::TORSO_FLEXION, 10.0), (joint::TORSO_AXIAL_ROTATION, 30.0)]);
        assert_eq!(trunk_score(&twisted, &ctx), 3);
    }

    #[test]
    fn legs_binary_rule() {
        let supported = TaskContext::default();
        assert_eq!(legs_score(&supported), 1);
        let unsupported = TaskContext {
            legs_and_feet_supported: false,
            ..TaskContext::default()
        };
        assert_eq!(legs_score(&unsupported), 2);
    }

    #[test]
    fn force_load_bands() {
        assert_eq!(force_load_score(0.0, LoadMode::Intermittent), 0);
        assert_eq!(force_load_score(5.0, LoadMode::Intermittent), 1);
        assert_eq!(force_load_score(5.0, LoadMode::StaticOrRepeated), 2);
        assert_eq!(force_load_score(12.0, LoadMode::Intermittent), 3);
        assert_eq!(force_load_score(1.0, LoadMode::Shock), 3);
    }

    #[test]
    fn muscle_use_flag() {
        assert_eq!(muscle_use_score(false), 0);
        assert_eq!(muscle_use_score(true), 1);
    }

    #[test]
    fn minimal_inputs_give_grand_one() {
        let q = posture_deg(&[(joint::ELBOW_FLEXION, 80.0)]);
        let b = rula(&q, &TaskContext::default()).unwrap();
        assert_eq!(b.upper_arm, 1);
        assert_eq!(b.lower_arm, 1);
        assert_eq!(b.wrist, 1);
        assert_eq!(b.wrist_twist, 1);
        assert_eq!(b.score_c, 1);
        assert_eq!(b.score_d, 1);
        assert_eq!(b.grand, 1);
    }

    #[test]
    fn saturated_branches_give_grand_seven() {
        let q = posture_deg(&[
            (joint::TORSO_FLEXION, 70.0),
            (joint::TORSO_AXIAL_ROTATION, 40.0),
            (joint::TORSO_LATERAL_BEND, 25.0),
            (joint::SHOULDER_FLEXION, 150.0),
            (joint::SHOULDER_ABDUCTION, 90.0),
            (joint::ELBOW_FLEXION, 140.0),
            (joint::FOREARM_PRONATION, 80.0),
            (joint::WRIST_FLEXION, 60.0),
            (joint::WRIST_DEVIATION, 20.0),
        ]);
        let ctx = TaskContext {
            arm_static_or_repeated: true,
            body_static_or_repeated: true,
            arm_load_kg: 14.0,
            body_load_kg: 14.0,
            neck_angle_deg: -20.0,
            neck_twist: true,
            neck_side_bend: true,
            legs_and_feet_supported: false,
            ..TaskContext::default()
        };
        let b = rula(&q, &ctx).unwrap();
        assert!(b.score_c >= 8);
        assert!(b.score_d >= 7);
        assert_eq!(b.grand, 7);
    }

    #[test]
    fn determinism_and_range_over_random_inputs() {
        let lim = JointLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let mut q = Posture::zero();
            for i in 0..crate::kinematics::DOF {
                q.angles[i] = rng.random_range(lim.lower[i]..lim.upper[i]);
            }
            let ctx = TaskContext {
                arm_static_or_repeated: rng.random_bool(0.5),
                body_static_or_repeated: rng.random_bool(0.5),
                arm_load_kg: rng.random_range(0.0..15.0),
                arm_load_mode: match rng.random_range(0..3) {
                    0 => LoadMode::Intermittent,
                    1 => LoadMode::StaticOrRepeated,
                    _ => LoadMode::Shock,
                },
                body_load_kg: rng.random_range(0.0..15.0),
                body_load_mode: LoadMode::Intermittent,
                neck_angle_deg: rng.random_range(-30.0..45.0),
                neck_twist: rng.random_bool(0.5),
                neck_side_bend: rng.random_bool(0.5),
                legs_and_feet_supported: rng.random_bool(0.5),
                arm_supported_or_leaning: rng.random_bool(0.5),
                shoulder_raised: rng.random_bool(0.5),
                working_across_midline: rng.random_bool(0.5),
                wrist_bent_from_midline: rng.random_bool(0.5),
            };
            let b1 = rula(&q, &ctx).unwrap();
            let b2 = rula(&q, &ctx).unwrap();
            assert_eq!(b1, b2);
            assert!((1..=7).contains(&b1.grand));
            assert_eq!(b1.grand, table_c(b1.score_c.min(8), b1.score_d.min(7)));
        }
    }
}
