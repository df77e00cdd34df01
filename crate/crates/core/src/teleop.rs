//! Goal-constrained teleoperation simulation.
//!
//! A simulated human controls a follower end-effector through an abstract
//! rigid leader → follower mapping of the hand pose. Each step the human
//! re-plans a short joint trajectory that pulls the follower toward the goal
//! pose while moving toward the currently suggested optimal posture,
//! weighted by the acceptance parameter α ∈ [0, 1]; only the first step of
//! each plan is executed. Postural suggestions are recomputed periodically
//! by the gradient or CEM solver against the *current* hand pose, so
//! corrections never fight the task constraint.
//!
//! Episodes are fully deterministic for a given seed: solver seeds derive
//! from the episode seed and step index, and all per-step state is recorded
//! in a [`SimulationTrace`].

use crate::kinematics::{
    forward_kinematics, pose_error_and_gradient, pose_error_sq, BodyDimensions, HandPose,
    JointLimits, KinematicsError, Posture, PoseWeights, DOF,
};
use crate::optimizer::{optimize_cem, optimize_gradient, CemOptions, GradOptions, PoseConstraint};
use crate::rula::{self, TaskContext};
use crate::surrogate::SurrogateModel;
use nalgebra::Isometry3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TeleopError {
    #[error("invalid teleop config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("scoring failed: {0}")]
    Rula(#[from] rula::RulaError),
}

/// A goal-constrained task: reach the follower goal pose within tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeleopTask {
    pub follower_goal: HandPose,
    /// Rigid transform mapping the human hand pose to the follower
    /// end-effector pose.
    pub leader_to_follower: Isometry3<f64>,
    /// Termination threshold on the Σ-weighted squared follower pose error.
    pub goal_tolerance: f64,
    pub max_steps: usize,
    /// Integration timestep, seconds.
    pub dt: f64,
    pub pose_weights: PoseWeights,
}

impl TeleopTask {
    pub fn validate(&self) -> Result<(), TeleopError> {
        if !(self.goal_tolerance > 0.0) {
            return Err(TeleopError::InvalidConfig("goal_tolerance must be > 0"));
        }
        if self.max_steps < 1 {
            return Err(TeleopError::InvalidConfig("max_steps must be ≥ 1"));
        }
        if !(self.dt > 0.0) {
            return Err(TeleopError::InvalidConfig("dt must be > 0"));
        }
        Ok(())
    }

    /// Follower pose for a hand pose.
    pub fn map_to_follower(&self, hand: &HandPose) -> HandPose {
        HandPose {
            position: self.leader_to_follower * hand.position,
            orientation: self.leader_to_follower.rotation * hand.orientation,
        }
    }

    /// Goal pose pulled back into hand space. Rigid maps preserve both the
    /// position norm and the geodesic angle, so planning against this in
    /// hand space is exactly equivalent to planning in follower space.
    pub fn hand_goal(&self) -> HandPose {
        let inv = self.leader_to_follower.inverse();
        HandPose {
            position: inv * self.follower_goal.position,
            orientation: inv.rotation * self.follower_goal.orientation,
        }
    }
}

/// Simulated-human behavior parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanModelConfig {
    /// Postural-correction acceptance in [0, 1]: 0 ignores suggestions
    /// entirely, 1 pursues them as strongly as the task term.
    pub alpha: f64,
    /// Planning horizon, steps.
    pub horizon: usize,
    /// Per-joint velocity limit, rad/s.
    pub joint_vel_limit: f64,
    /// Re-plan every this many steps.
    pub replan_period: usize,
    /// Recompute the postural suggestion every this many steps.
    pub suggestion_period: usize,
    /// Inner iterations of the horizon planner.
    pub plan_iters: usize,
}

impl Default for HumanModelConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            horizon: 8,
            joint_vel_limit: 1.0,
            replan_period: 1,
            suggestion_period: 5,
            plan_iters: 40,
        }
    }
}

impl HumanModelConfig {
    pub fn validate(&self) -> Result<(), TeleopError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(TeleopError::InvalidConfig("alpha must lie in [0,1]"));
        }
        if self.horizon < 1 {
            return Err(TeleopError::InvalidConfig("horizon must be ≥ 1"));
        }
        if self.replan_period < 1 || self.suggestion_period < 1 {
            return Err(TeleopError::InvalidConfig("periods must be ≥ 1"));
        }
        Ok(())
    }
}

/// Which postural-correction solver feeds the human suggestions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionMode {
    None,
    Grad,
    Cem,
}

/// Correction mode plus the solver settings behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionConfig {
    pub mode: CorrectionMode,
    pub grad: GradOptions,
    pub cem: CemOptions,
    /// Tolerance/weights of the hand-pose constraint in the suggestion
    /// optimization.
    pub constraint_tolerance: f64,
    pub constraint_weights: PoseWeights,
}

impl CorrectionConfig {
    pub fn new(mode: CorrectionMode) -> Self {
        Self {
            mode,
            grad: GradOptions::default(),
            cem: CemOptions::default(),
            constraint_tolerance: 1e-4,
            constraint_weights: PoseWeights::default(),
        }
    }
}

/// One executed simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub posture: [f64; DOF],
    pub suggested: Option<[f64; DOF]>,
    pub rula_grand: u8,
    pub dula_score: f64,
    pub suggested_rula: Option<u8>,
    pub follower_position: [f64; 3],
    /// Unit quaternion as [w, x, y, z].
    pub follower_orientation: [f64; 4],
    pub goal_error: f64,
}

/// Full episode record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub steps: Vec<TraceStep>,
    pub completed_at: Option<usize>,
    pub timed_out: bool,
    /// Steps where the horizon planner diverged and the human held position.
    pub planner_fallbacks: usize,
}

/// Receding-horizon plan: joint trajectory of length `horizon` minimizing
/// the summed follower goal error plus α-weighted distance to the suggested
/// posture, under per-step velocity boxes. Returns the planned postures
/// q_1..q_H; `None` signals divergence (caller holds position).
///
/// The decision variables are the per-step increments, each projected onto
/// the velocity box, so the executed first step always satisfies the
/// velocity limit exactly; joint limits are enforced on execution.
pub fn human_plan(
    q: &Posture,
    q_star: &Posture,
    task: &TeleopTask,
    cfg: &HumanModelConfig,
    dims: &BodyDimensions,
) -> Option<Vec<Posture>> {
    let horizon = cfg.horizon;
    let step_box = cfg.joint_vel_limit * task.dt;
    let hand_goal = task.hand_goal();
    let alpha = cfg.alpha;

    let rollout = |deltas: &[[f64; DOF]]| -> Vec<Posture> {
        let mut out = Vec::with_capacity(horizon);
        let mut cur = *q;
        for d in deltas {
            for i in 0..DOF {
                cur.angles[i] += d[i];
            }
            out.push(cur);
        }
        out
    };

    let cost_and_grad = |deltas: &[[f64; DOF]]| -> Option<(f64, Vec<[f64; DOF]>)> {
        let traj = rollout(deltas);
        let mut total = 0.0;
        let mut g_q: Vec<[f64; DOF]> = Vec::with_capacity(horizon);
        for qk in &traj {
            let (pose_cost, pose_grad) =
                pose_error_and_gradient(&hand_goal, qk, dims, &task.pose_weights).ok()?;
            let mut g = pose_grad;
            let mut correction_cost = 0.0;
            for i in 0..DOF {
                let d = qk.angles[i] - q_star.angles[i];
                correction_cost += d * d;
                g[i] += 2.0 * alpha * d;
            }
            total += pose_cost + alpha * correction_cost;
            g_q.push(g);
        }
        if !total.is_finite() {
            return None;
        }
        // suffix sums: ∂J/∂δ_j = Σ_{k ≥ j} ∂J/∂q_k
        let mut g_d = vec![[0.0; DOF]; horizon];
        let mut acc = [0.0; DOF];
        for j in (0..horizon).rev() {
            for i in 0..DOF {
                acc[i] += g_q[j][i];
            }
            g_d[j] = acc;
        }
        Some((total, g_d))
    };

    let cost_only = |deltas: &[[f64; DOF]]| -> Option<f64> {
        let traj = rollout(deltas);
        let mut total = 0.0;
        for qk in &traj {
            let hand = forward_kinematics(qk, dims).ok()?;
            total += pose_error_sq(&hand_goal, &hand, &task.pose_weights);
            let mut corr = 0.0;
            for i in 0..DOF {
                let d = qk.angles[i] - q_star.angles[i];
                corr += d * d;
            }
            total += alpha * corr;
        }
        total.is_finite().then_some(total)
    };

    let mut deltas = vec![[0.0; DOF]; horizon];
    let mut alpha_step = 0.05;
    cost_only(&deltas)?; // divergence check of the hold plan
    for _ in 0..cfg.plan_iters {
        let (cost, grad) = cost_and_grad(&deltas)?;
        let mut accepted = false;
        let mut a = alpha_step;
        for _ in 0..30 {
            let mut trial = deltas.clone();
            let mut slope = 0.0;
            let mut step_norm: f64 = 0.0;
            for (td, gd) in trial.iter_mut().zip(&grad) {
                for i in 0..DOF {
                    let v = (td[i] - a * gd[i]).clamp(-step_box, step_box);
                    let s = v - td[i];
                    slope += gd[i] * s;
                    step_norm = step_norm.max(s.abs());
                    td[i] = v;
                }
            }
            if step_norm == 0.0 {
                break;
            }
            let trial_cost = cost_only(&trial)?;
            if trial_cost <= cost + 1e-4 * slope {
                deltas = trial;
                alpha_step = (a * 1.5).min(1.0);
                accepted = true;
                if step_norm < 1e-9 {
                    return Some(rollout(&deltas));
                }
                break;
            }
            a *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some(rollout(&deltas))
}

fn mix_seed(episode_seed: u64, step: usize) -> u64 {
    let mut z = episode_seed ^ (step as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    z = (z ^ (z >> 32)).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    z ^ (z >> 32)
}

/// Runs one episode: observe the hand pose, periodically recompute the
/// postural suggestion, plan, execute the first planned step (clamped to
/// the velocity box and joint limits), and terminate at the goal tolerance
/// or the step cap.
///
/// When the correction mode is `None` — or α = 0, which makes suggestions
/// inert — no suggestion is ever computed, so such traces are identical
/// byte-for-byte to uncorrected ones.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    task: &TeleopTask,
    human: &HumanModelConfig,
    model: &SurrogateModel,
    ctx: &TaskContext,
    correction: &CorrectionConfig,
    episode_seed: u64,
    q_start: &Posture,
    limits: &JointLimits,
    dims: &BodyDimensions,
) -> Result<SimulationTrace, TeleopError> {
    task.validate()?;
    human.validate()?;
    let corrections_active = correction.mode != CorrectionMode::None && human.alpha > 0.0;

    let mut q = limits.clamp(q_start);
    let mut suggestion: Option<Posture> = None;
    let mut plan: Vec<Posture> = Vec::new();
    let mut plan_cursor = 0usize;
    let mut steps = Vec::new();
    let mut completed_at = None;
    let mut planner_fallbacks = 0usize;
    let step_box = human.joint_vel_limit * task.dt;

    for step in 0..task.max_steps {
        let hand = forward_kinematics(&q, dims)?;
        let follower = task.map_to_follower(&hand);
        let goal_error = pose_error_sq(&task.follower_goal, &follower, &task.pose_weights);

        if corrections_active && step % human.suggestion_period == 0 {
            let pc = PoseConstraint {
                target: hand,
                weights: correction.constraint_weights,
                tolerance: correction.constraint_tolerance,
            };
            let solver_seed = mix_seed(episode_seed, step);
            suggestion = match correction.mode {
                CorrectionMode::Grad => {
                    let opts = GradOptions {
                        seed: solver_seed,
                        ..correction.grad.clone()
                    };
                    optimize_gradient(model, ctx, &q, &pc, limits, dims, &opts)
                        .ok()
                        .map(|r| r.q_star)
                }
                CorrectionMode::Cem => {
                    let opts = CemOptions {
                        seed: solver_seed,
                        ..correction.cem.clone()
                    };
                    optimize_cem(
                        |p, c| rula::rula(p, c).map(|b| b.grand).unwrap_or(7),
                        ctx,
                        &q,
                        &pc,
                        limits,
                        dims,
                        &opts,
                    )
                    .ok()
                    .map(|r| r.q_star)
                }
                CorrectionMode::None => None,
            };
        }

        let breakdown = rula::rula(&q, ctx)?;
        let suggested_rula = match &suggestion {
            Some(s) => Some(rula::rula(s, ctx)?.grand),
            None => None,
        };
        steps.push(TraceStep {
            step,
            posture: q.angles,
            suggested: suggestion.map(|s| s.angles),
            rula_grand: breakdown.grand,
            dula_score: model.predict_posture(&q, ctx),
            suggested_rula,
            follower_position: follower.position.into(),
            follower_orientation: [
                follower.orientation.w,
                follower.orientation.i,
                follower.orientation.j,
                follower.orientation.k,
            ],
            goal_error,
        });

        if goal_error < task.goal_tolerance {
            completed_at = Some(step);
            break;
        }

        if step % human.replan_period == 0 || plan_cursor >= plan.len() {
            let q_star = suggestion.unwrap_or(q);
            match human_plan(&q, &q_star, task, human, dims) {
                Some(p) => {
                    plan = p;
                    plan_cursor = 0;
                }
                None => {
                    planner_fallbacks += 1;
                    plan = vec![q; human.horizon];
                    plan_cursor = 0;
                }
            }
        }

        let planned = plan[plan_cursor];
        plan_cursor += 1;
        // execute first step under the exact velocity box and joint limits
        let mut next = q;
        for i in 0..DOF {
            let d = (planned.angles[i] - q.angles[i]).clamp(-step_box, step_box);
            next.angles[i] = (q.angles[i] + d).clamp(limits.lower[i], limits.upper[i]);
        }
        q = next;
    }

    Ok(SimulationTrace {
        timed_out: completed_at.is_none(),
        completed_at,
        steps,
        planner_fallbacks,
    })
}

/// Aggregate per-episode metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub completion_steps: Option<usize>,
    pub completion_time_s: Option<f64>,
    pub median_executed_rula: f64,
    /// None when the trace carries no suggestions.
    pub median_suggested_rula: Option<f64>,
    pub per_step_rula: Vec<u8>,
    pub per_step_dula: Vec<f64>,
}

pub fn episode_metrics(trace: &SimulationTrace, dt: f64) -> EpisodeMetrics {
    let executed: Vec<f64> = trace.steps.iter().map(|s| f64::from(s.rula_grand)).collect();
    let suggested: Vec<f64> = trace
        .steps
        .iter()
        .filter_map(|s| s.suggested_rula.map(f64::from))
        .collect();
    EpisodeMetrics {
        completion_steps: trace.completed_at,
        completion_time_s: trace.completed_at.map(|s| (s + 1) as f64 * dt),
        median_executed_rula: crate::optimizer::median(&executed),
        median_suggested_rula: if suggested.is_empty() {
            None
        } else {
            Some(crate::optimizer::median(&suggested))
        },
        per_step_rula: trace.steps.iter().map(|s| s.rula_grand).collect(),
        per_step_dula: trace.steps.iter().map(|s| s.dula_score).collect(),
    }
}

/// Seeded demo episode: a risky start posture, a comfortable goal posture
/// (so low-risk completions exist), and a sampled context.
pub fn demo_episode_setup(
    seed: u64,
    limits: &JointLimits,
    dims: &BodyDimensions,
) -> (TeleopTask, Posture, TaskContext) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37).wrapping_add(1));
    let ctx = crate::dataset::sample_context(&mut rng);
    let q_start = loop {
        let q = crate::dataset::sample_posture(&mut rng, limits);
        let grand = rula::rula(&q, &ctx).expect("sampled inputs score").grand;
        if grand >= 4 {
            break q;
        }
    };
    let (q_goal, _) = crate::dataset::sample_low_risk_pair(&mut rng, limits);
    let leader_to_follower = Isometry3::translation(2.0, 0.0, 0.0);
    let goal_hand = forward_kinematics(&q_goal, dims).expect("goal posture is finite");
    let task = TeleopTask {
        follower_goal: HandPose {
            position: leader_to_follower * goal_hand.position,
            orientation: leader_to_follower.rotation * goal_hand.orientation,
        },
        leader_to_follower,
        goal_tolerance: 2e-3,
        max_steps: 200,
        dt: 0.1,
        pose_weights: PoseWeights::default(),
    };
    (task, q_start, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::Normalization;

    fn setup() -> (JointLimits, BodyDimensions, SurrogateModel) {
        (
            JointLimits::default(),
            BodyDimensions::default(),
            SurrogateModel::init(1, Normalization::default()),
        )
    }

    #[test]
    fn alpha_zero_plan_matches_pure_goal_tracking() {
        let (_limits, dims, _) = setup();
        let (task, q_start, _ctx) = demo_episode_setup(3, &JointLimits::default(), &dims);
        let mut cfg = HumanModelConfig::default();
        cfg.alpha = 0.0;
        // wildly different "suggestions" must not change the plan when α = 0
        let mut far = q_start;
        far.angles[0] += 0.4;
        let a = human_plan(&q_start, &q_start, &task, &cfg, &dims).unwrap();
        let b = human_plan(&q_start, &far, &task, &cfg, &dims).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alpha_one_at_goal_moves_toward_suggestion() {
        let (limits, dims, _) = setup();
        // start exactly at the goal: the pose term is minimized at q, so the
        // correction term dominates and the plan walks toward q_star
        let q = Posture::zero();
        let hand = forward_kinematics(&q, &dims).unwrap();
        let task = TeleopTask {
            follower_goal: hand,
            leader_to_follower: Isometry3::identity(),
            goal_tolerance: 1e-3,
            max_steps: 50,
            dt: 0.1,
            pose_weights: PoseWeights {
                position: 0.0,
                orientation: 0.0,
            },
        };
        let mut q_star = q;
        q_star.angles[crate::kinematics::joint::ELBOW_FLEXION] = 0.8;
        let cfg = HumanModelConfig::default();
        let plan = human_plan(&q, &q_star, &task, &cfg, &dims).unwrap();
        let mut prev = (q.angles[6] - q_star.angles[6]).abs();
        for p in &plan {
            let d = (p.angles[6] - q_star.angles[6]).abs();
            assert!(d <= prev + 1e-12, "distance must not increase");
            prev = d;
        }
        assert!(prev < (q.angles[6] - q_star.angles[6]).abs());
        let _ = limits;
    }

    #[test]
    fn one_step_horizon_matches_discrete_greedy_oracle() {
        let (_, dims, _) = setup();
        let (task, q_start, _) = demo_episode_setup(11, &JointLimits::default(), &dims);
        let mut cfg = HumanModelConfig::default();
        cfg.horizon = 1;
        cfg.plan_iters = 200;
        let q_star = q_start;
        let plan = human_plan(&q_start, &q_star, &task, &cfg, &dims).unwrap();
        let step_box = cfg.joint_vel_limit * task.dt;
        let hand_goal = task.hand_goal();
        let cost = |q: &Posture| {
            let hand = forward_kinematics(q, &dims).unwrap();
            let mut c = pose_error_sq(&hand_goal, &hand, &task.pose_weights);
            for i in 0..DOF {
                let d = q.angles[i] - q_star.angles[i];
                c += cfg.alpha * d * d;
            }
            c
        };
        // brute force over the 3^10 corner/zero lattice of the one-step box
        let mut best = f64::INFINITY;
        let n = 3usize.pow(DOF as u32);
        for code in 0..n {
            let mut c = code;
            let mut q = q_start;
            for i in 0..DOF {
                let d = match c % 3 {
                    0 => -step_box,
                    1 => 0.0,
                    _ => step_box,
                };
                c /= 3;
                q.angles[i] += d;
            }
            best = best.min(cost(&q));
        }
        let planned_cost = cost(&plan[0]);
        assert!(
            planned_cost <= best + 1e-9,
            "continuous one-step plan {planned_cost} must not lose to the lattice {best}"
        );
    }

    #[test]
    fn episode_terminates_and_respects_limits_and_velocity() {
        let (limits, dims, model) = setup();
        let (task, q_start, ctx) = demo_episode_setup(7, &limits, &dims);
        let human = HumanModelConfig::default();
        let correction = CorrectionConfig::new(CorrectionMode::None);
        let trace =
            run_episode(&task, &human, &model, &ctx, &correction, 7, &q_start, &limits, &dims)
                .unwrap();
        assert!(!trace.steps.is_empty());
        assert!(trace.steps.len() <= task.max_steps);
        let step_box = human.joint_vel_limit * task.dt + 1e-12;
        for w in trace.steps.windows(2) {
            for i in 0..DOF {
                assert!((w[1].posture[i] - w[0].posture[i]).abs() <= step_box);
            }
        }
        for s in &trace.steps {
            assert!(limits.contains(&Posture::new(s.posture)));
        }
        if let Some(done) = trace.completed_at {
            assert!(trace.steps[done].goal_error < task.goal_tolerance);
            assert!(!trace.timed_out);
        } else {
            assert!(trace.timed_out);
        }
    }

    #[test]
    fn alpha_zero_grad_trace_equals_none_trace() {
        let (limits, dims, model) = setup();
        let (task, q_start, ctx) = demo_episode_setup(13, &limits, &dims);
        let mut human = HumanModelConfig::default();
        human.alpha = 0.0;
        let none_cfg = CorrectionConfig::new(CorrectionMode::None);
        let mut grad_cfg = CorrectionConfig::new(CorrectionMode::Grad);
        grad_cfg.grad.max_iters = 20;
        let a = run_episode(&task, &human, &model, &ctx, &none_cfg, 13, &q_start, &limits, &dims)
            .unwrap();
        let b = run_episode(&task, &human, &model, &ctx, &grad_cfg, 13, &q_start, &limits, &dims)
            .unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn traces_are_seed_deterministic() {
        let (limits, dims, model) = setup();
        let (task, q_start, ctx) = demo_episode_setup(5, &limits, &dims);
        let human = HumanModelConfig::default();
        let mut cfg = CorrectionConfig::new(CorrectionMode::Grad);
        cfg.grad.max_iters = 40;
        let a = run_episode(&task, &human, &model, &ctx, &cfg, 5, &q_start, &limits, &dims).unwrap();
        let b = run_episode(&task, &human, &model, &ctx, &cfg, 5, &q_start, &limits, &dims).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn metrics_handle_missing_suggestions_and_single_steps() {
        let trace = SimulationTrace {
            steps: vec![TraceStep {
                step: 0,
                posture: [0.0; DOF],
                suggested: None,
                rula_grand: 3,
                dula_score: 3.2,
                suggested_rula: None,
                follower_position: [0.0; 3],
                follower_orientation: [1.0, 0.0, 0.0, 0.0],
                goal_error: 0.0,
            }],
            completed_at: Some(0),
            timed_out: false,
            planner_fallbacks: 0,
        };
        let m = episode_metrics(&trace, 0.1);
        assert_eq!(m.median_executed_rula, 3.0);
        assert!(m.median_suggested_rula.is_none());
        assert_eq!(m.completion_steps, Some(0));
    }

    #[test]
    fn metrics_median_matches_sort_oracle() {
        let mk = |rula: u8, sugg: Option<u8>| TraceStep {
            step: 0,
            posture: [0.0; DOF],
            suggested: None,
            rula_grand: rula,
            dula_score: f64::from(rula),
            suggested_rula: sugg,
            follower_position: [0.0; 3],
            follower_orientation: [1.0, 0.0, 0.0, 0.0],
            goal_error: 1.0,
        };
        let trace = SimulationTrace {
            steps: vec![mk(5, Some(2)), mk(3, None), mk(4, Some(4)), mk(6, Some(3))],
            completed_at: None,
            timed_out: true,
            planner_fallbacks: 0,
        };
        let m = episode_metrics(&trace, 0.1);
        assert_eq!(m.median_executed_rula, 4.5);
        assert_eq!(m.median_suggested_rula, Some(3.0));
    }
}
