//! Constrained postural optimization.
//!
//! Two solvers for the same problem — minimize the risk of a posture subject
//! to a fixed hand pose (Σ-weighted squared error below a tolerance ε) and
//! the box range of motion:
//!
//! * [`optimize_gradient`] descends the learned surrogate with exact input
//!   gradients and the chain Jacobian, using an augmented-Lagrangian outer
//!   loop around projected gradient steps with a backtracking line search.
//!   Box bounds are enforced by projection, so no iterate ever leaves the
//!   range of motion.
//! * [`optimize_cem`] is the gradient-free baseline: cross-entropy search
//!   over the exact discrete scorer, Gaussian population refit to elites,
//!   with constraint violations penalized.
//!
//! Both run single-threaded so their wall times are directly comparable.

use crate::kinematics::{
    forward_kinematics, pose_error_and_gradient, pose_error_sq, BodyDimensions, HandPose,
    JointLimits, Posture, PoseWeights, DOF,
};
use crate::rula::{self, TaskContext};
use crate::surrogate::SurrogateModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("no feasible posture found; best constraint value {best_constraint_value} (ε = {tolerance})")]
    Infeasible {
        best_constraint_value: f64,
        tolerance: f64,
    },
    #[error("surrogate produced a non-finite value at iteration {iteration}")]
    ModelFailure { iteration: usize },
    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
    #[error(transparent)]
    Kinematics(#[from] crate::kinematics::KinematicsError),
}

/// Hand-pose constraint of the optimization: Σ-weighted squared pose error
/// to `target` must stay below `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseConstraint {
    pub target: HandPose,
    pub weights: PoseWeights,
    pub tolerance: f64,
}

impl PoseConstraint {
    pub fn new(target: HandPose) -> Self {
        Self {
            target,
            weights: PoseWeights::default(),
            tolerance: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.tolerance > 0.0) {
            return Err(OptimizeError::InvalidOption("tolerance must be > 0"));
        }
        if !(self.weights.position > 0.0 || self.weights.orientation > 0.0) {
            return Err(OptimizeError::InvalidOption("at least one weight must be positive"));
        }
        Ok(())
    }

    pub fn error_sq(&self, pose: &HandPose) -> f64 {
        pose_error_sq(&self.target, pose, &self.weights)
    }
}

/// Gradient-solver options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradOptions {
    /// Total inner-iteration budget per solve, shared across starts.
    pub max_iters: usize,
    pub step_tol: f64,
    pub grad_tol: f64,
    /// Multi-start count: the given posture plus `starts − 1` seeded draws
    /// from the limit box, to escape rectifier-network local minima.
    pub starts: usize,
    pub seed: u64,
}

impl Default for GradOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step_tol: 1e-6,
            grad_tol: 1e-5,
            starts: 4,
            seed: 0,
        }
    }
}

/// Cross-entropy-method options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemOptions {
    pub population: usize,
    pub elite_fraction: f64,
    pub max_iters: usize,
    /// Initial per-joint standard deviation, radians.
    pub init_std: f64,
    /// Weight on `max(0, c − ε)` added to the discrete score.
    pub violation_penalty: f64,
    pub seed: u64,
}

impl Default for CemOptions {
    fn default() -> Self {
        Self {
            population: 10_000,
            elite_fraction: 0.1,
            max_iters: 30,
            init_std: 0.2,
            violation_penalty: 1e6,
            seed: 0,
        }
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptResult {
    pub q_star: Posture,
    /// Surrogate score at the solution; absent for the gradient-free path,
    /// which never consults the model.
    pub dula_score: Option<f64>,
    pub rula_grand: u8,
    pub constraint_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
}

/// Tracks the best in-tolerance iterate seen anywhere in a solve.
struct FeasibleBest {
    q: Option<Posture>,
    objective: f64,
    constraint: f64,
    best_constraint_anywhere: f64,
}

impl FeasibleBest {
    fn new() -> Self {
        Self {
            q: None,
            objective: f64::INFINITY,
            constraint: f64::INFINITY,
            best_constraint_anywhere: f64::INFINITY,
        }
    }

    fn offer(&mut self, q: &Posture, objective: f64, constraint: f64, tolerance: f64) {
        self.best_constraint_anywhere = self.best_constraint_anywhere.min(constraint);
        if constraint < tolerance && objective < self.objective {
            self.q = Some(*q);
            self.objective = objective;
            self.constraint = constraint;
        }
    }
}

struct AlProblem<'a> {
    model: &'a SurrogateModel,
    ctx: &'a TaskContext,
    constraint: &'a PoseConstraint,
    limits: &'a JointLimits,
    dims: &'a BodyDimensions,
}

impl AlProblem<'_> {
    /// Surrogate value and constraint error at q; also feeds the
    /// best-feasible tracker.
    fn evaluate(&self, q: &Posture, best: &mut FeasibleBest) -> Result<(f64, f64), OptimizeError> {
        let f = self.model.predict_posture(q, self.ctx);
        if !f.is_finite() {
            return Err(OptimizeError::ModelFailure { iteration: 0 });
        }
        let pose = forward_kinematics(q, self.dims)?;
        let c = self.constraint.error_sq(&pose);
        best.offer(q, f, c, self.constraint.tolerance);
        Ok((f, c))
    }

    fn evaluate_with_grad(
        &self,
        q: &Posture,
        best: &mut FeasibleBest,
    ) -> Result<(f64, [f64; DOF], f64, [f64; DOF]), OptimizeError> {
        let (f, gf) = self.model.value_and_posture_gradient(q, self.ctx);
        if !f.is_finite() {
            return Err(OptimizeError::ModelFailure { iteration: 0 });
        }
        let (c, gc) =
            pose_error_and_gradient(&self.constraint.target, q, self.dims, &self.constraint.weights)?;
        best.offer(q, f, c, self.constraint.tolerance);
        Ok((f, gf, c, gc))
    }
}

/// Augmented-Lagrangian value for the inequality g = c − ε ≤ 0.
fn al_value(f: f64, g: f64, lambda: f64, rho: f64) -> f64 {
    let t = (lambda / rho + g).max(0.0);
    f + 0.5 * rho * t * t - lambda * lambda / (2.0 * rho)
}

fn al_grad(gf: &[f64; DOF], g: f64, gc: &[f64; DOF], lambda: f64, rho: f64) -> [f64; DOF] {
    let t = (lambda / rho + g).max(0.0);
    let k = rho * t;
    let mut out = *gf;
    for i in 0..DOF {
        out[i] += k * gc[i];
    }
    out
}

fn norm_inf(v: &[f64; DOF]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn norm2(v: &[f64; DOF]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One augmented-Lagrangian run from a single start. Returns the inner
/// iterations consumed and whether it terminated on tolerance.
fn solve_from_start(
    problem: &AlProblem,
    start: Posture,
    budget: usize,
    opts: &GradOptions,
    best: &mut FeasibleBest,
) -> Result<(usize, bool), OptimizeError> {
    let mut q = problem.limits.clamp(&start);
    let mut lambda = 0.0;
    let mut rho = 1.0 / problem.constraint.tolerance;
    let mut g_prev = f64::INFINITY;
    let mut iters = 0usize;
    let mut tol_hit = false;
    let mut alpha = 0.05;

    'outer: for _outer in 0..12 {
        // inner projected-gradient descent on the AL merit function
        let mut inner_done = false;
        while iters < budget {
            iters += 1;
            let (f, gf, c, gc) = problem.evaluate_with_grad(&q, best)?;
            let g = c - problem.constraint.tolerance;
            let merit = al_value(f, g, lambda, rho);
            let grad = al_grad(&gf, g, &gc, lambda, rho);

            // projected-gradient stationarity measure at unit step
            let mut probe = q;
            for i in 0..DOF {
                probe.angles[i] = (q.angles[i] - grad[i])
                    .clamp(problem.limits.lower[i], problem.limits.upper[i]);
            }
            let mut pg = [0.0; DOF];
            for i in 0..DOF {
                pg[i] = probe.angles[i] - q.angles[i];
            }
            if norm2(&pg) < opts.grad_tol {
                inner_done = true;
                tol_hit = true;
                break;
            }

            // backtracking Armijo line search along the projected path
            let mut accepted = false;
            let mut a = alpha;
            for _ in 0..40 {
                let mut trial = q;
                for i in 0..DOF {
                    trial.angles[i] = (q.angles[i] - a * grad[i])
                        .clamp(problem.limits.lower[i], problem.limits.upper[i]);
                }
                let mut step = [0.0; DOF];
                for i in 0..DOF {
                    step[i] = trial.angles[i] - q.angles[i];
                }
                if norm_inf(&step) == 0.0 {
                    break;
                }
                let (ft, ct) = problem.evaluate(&trial, best)?;
                let gt = ct - problem.constraint.tolerance;
                let merit_t = al_value(ft, gt, lambda, rho);
                let slope: f64 = grad.iter().zip(&step).map(|(gv, sv)| gv * sv).sum();
                if merit_t <= merit + 1e-4 * slope {
                    let step_norm = norm2(&step);
                    q = trial;
                    alpha = (a * 1.5).min(1.0);
                    accepted = true;
                    if step_norm < opts.step_tol {
                        inner_done = true;
                        tol_hit = true;
                    }
                    break;
                }
                a *= 0.5;
            }
            if !accepted {
                // no decrease possible at machine-small steps
                inner_done = true;
                tol_hit = true;
            }
            if inner_done {
                break;
            }
        }

        let (_, c) = problem.evaluate(&q, best)?;
        let g = c - problem.constraint.tolerance;
        if g <= 0.0 && inner_done {
            break 'outer;
        }
        if iters >= budget {
            break 'outer;
        }
        lambda = (lambda + rho * g).max(0.0);
        if g > 0.25 * g_prev {
            rho = (rho * 4.0).min(1e12);
        }
        g_prev = g.max(0.0);
    }

    Ok((iters, tol_hit))
}

/// Gradient-based constrained minimization of the surrogate risk.
///
/// Multi-start: the supplied posture first, then seeded draws from the
/// limit box; the best feasible iterate over all starts is returned. If the
/// first start is immediately stationary the restarts are skipped.
pub fn optimize_gradient(
    model: &SurrogateModel,
    ctx: &TaskContext,
    q0: &Posture,
    constraint: &PoseConstraint,
    limits: &JointLimits,
    dims: &BodyDimensions,
    opts: &GradOptions,
) -> Result<OptResult, OptimizeError> {
    constraint.validate()?;
    if opts.starts == 0 {
        return Err(OptimizeError::InvalidOption("starts must be ≥ 1"));
    }
    let t0 = Instant::now();
    let problem = AlProblem {
        model,
        ctx,
        constraint,
        limits,
        dims,
    };
    let mut best = FeasibleBest::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let per_start = opts.max_iters.div_ceil(opts.starts);

    let mut total_iters = 0usize;
    let mut any_tol = false;
    for s in 0..opts.starts {
        let start = if s == 0 {
            *q0
        } else {
            crate::dataset::sample_posture(&mut rng, limits)
        };
        let budget = per_start.min(opts.max_iters - total_iters);
        if budget == 0 {
            break;
        }
        let (used, tol) = solve_from_start(&problem, start, budget, opts, &mut best)?;
        total_iters += used;
        any_tol |= tol;
        // immediately stationary feasible first start: nothing to improve on
        if s == 0 && tol && used <= 1 && best.q.is_some() {
            break;
        }
    }

    match best.q {
        Some(q_star) => {
            let score = model.predict_posture(&q_star, ctx);
            let grand = rula::rula(&q_star, ctx)
                .map_err(|_| OptimizeError::ModelFailure { iteration: total_iters })?
                .grand;
            Ok(OptResult {
                q_star,
                dula_score: Some(score),
                rula_grand: grand,
                constraint_value: best.constraint,
                iterations: total_iters,
                converged: any_tol,
                wall_time: t0.elapsed(),
            })
        }
        None => Err(OptimizeError::Infeasible {
            best_constraint_value: best.best_constraint_anywhere,
            tolerance: constraint.tolerance,
        }),
    }
}

/// Gradient-free baseline: cross-entropy method over the supplied discrete
/// scorer, Gaussian sampling in joint space clamped to the limits,
/// constraint violations penalized, distribution refit to elites each
/// iteration. Returns the best-ever feasible sample.
///
/// Bit-reproducible for a fixed seed: sampling and elite selection are
/// sequential with stable (score, index) ordering.
pub fn optimize_cem<F>(
    rula_fn: F,
    ctx: &TaskContext,
    q0: &Posture,
    constraint: &PoseConstraint,
    limits: &JointLimits,
    dims: &BodyDimensions,
    opts: &CemOptions,
) -> Result<OptResult, OptimizeError>
where
    F: Fn(&Posture, &TaskContext) -> u8,
{
    constraint.validate()?;
    if opts.population == 0 {
        return Err(OptimizeError::InvalidOption("population must be ≥ 1"));
    }
    if !(opts.elite_fraction > 0.0 && opts.elite_fraction <= 1.0) {
        return Err(OptimizeError::InvalidOption("elite_fraction must lie in (0,1]"));
    }
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut mean = q0.angles;
    let mut var = [opts.init_std * opts.init_std; DOF];

    let n_elite = ((opts.population as f64 * opts.elite_fraction).ceil() as usize)
        .clamp(1, opts.population);
    let mut population: Vec<Posture> = Vec::with_capacity(opts.population);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(opts.population);

    // best feasible: (grand, constraint, posture)
    let mut best: Option<(u8, f64, Posture)> = None;
    let mut best_constraint_anywhere = f64::INFINITY;

    for iter in 0..opts.max_iters {
        population.clear();
        scored.clear();
        for k in 0..opts.population {
            let q = if iter == 0 && k == 0 {
                limits.clamp(q0)
            } else {
                let mut q = Posture::zero();
                for i in 0..DOF {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    q.angles[i] = (mean[i] + var[i].sqrt() * z)
                        .clamp(limits.lower[i], limits.upper[i]);
                }
                q
            };
            let pose = forward_kinematics(&q, dims)?;
            let c = constraint.error_sq(&pose);
            let grand = rula_fn(&q, ctx);
            best_constraint_anywhere = best_constraint_anywhere.min(c);
            let violation = (c - constraint.tolerance).max(0.0);
            let score = f64::from(grand) + opts.violation_penalty * violation;
            if violation == 0.0 {
                let better = match &best {
                    None => true,
                    Some((bg, bc, _)) => grand < *bg || (grand == *bg && c < *bc),
                };
                if better {
                    best = Some((grand, c, q));
                }
            }
            population.push(q);
            scored.push((score, k));
        }

        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let elites = &scored[..n_elite];
        let mut new_mean = [0.0; DOF];
        for (_, idx) in elites {
            for i in 0..DOF {
                new_mean[i] += population[*idx].angles[i];
            }
        }
        for m in new_mean.iter_mut() {
            *m /= n_elite as f64;
        }
        let mut new_var = [0.0; DOF];
        for (_, idx) in elites {
            for i in 0..DOF {
                let d = population[*idx].angles[i] - new_mean[i];
                new_var[i] += d * d;
            }
        }
        for v in new_var.iter_mut() {
            *v = (*v / n_elite as f64).max(1e-10);
        }
        mean = new_mean;
        var = new_var;
    }

    match best {
        Some((grand, c, q_star)) => Ok(OptResult {
            q_star,
            dula_score: None,
            rula_grand: grand,
            constraint_value: c,
            iterations: opts.max_iters,
            converged: true,
            wall_time: t0.elapsed(),
        }),
        None => Err(OptimizeError::Infeasible {
            best_constraint_value: best_constraint_anywhere,
            tolerance: constraint.tolerance,
        }),
    }
}

// ---------------------------------------------------------------------------
// Task batches and method comparison

/// One optimization task: a start posture (which satisfies its own hand
/// pose, so the task is feasible by construction) and a context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptTask {
    pub q0: Posture,
    pub ctx: TaskContext,
    pub constraint: PoseConstraint,
}

/// Seeded batch of feasible tasks: the target pose of each task is the
/// forward kinematics of its start posture. `min_initial_grand` optionally
/// rejects starts below a risk level.
pub fn sample_tasks(
    n: usize,
    seed: u64,
    limits: &JointLimits,
    dims: &BodyDimensions,
    min_initial_grand: Option<u8>,
) -> Vec<OptTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let q0 = crate::dataset::sample_posture(&mut rng, limits);
        let ctx = crate::dataset::sample_context(&mut rng);
        if let Some(min) = min_initial_grand {
            let grand = rula::rula(&q0, &ctx).expect("sampled inputs score").grand;
            if grand < min {
                continue;
            }
        }
        let target = forward_kinematics(&q0, dims).expect("sampled posture is finite");
        out.push(OptTask {
            q0,
            ctx,
            constraint: PoseConstraint::new(target),
        });
    }
    out
}

/// Median by the standard definition: middle element, or the mean of the two
/// middle elements for even counts.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub task: usize,
    pub method: String,
    pub initial_rula: u8,
    pub final_rula: Option<u8>,
    pub final_dula: Option<f64>,
    pub feasible: bool,
    pub iterations: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareSummary {
    pub tasks: usize,
    pub grad_feasible: usize,
    pub cem_feasible: usize,
    pub median_initial_rula: f64,
    pub grad_median_final_rula: f64,
    pub cem_median_final_rula: f64,
    pub grad_median_wall_s: f64,
    pub cem_median_wall_s: f64,
    /// cem_median_wall_s / grad_median_wall_s
    pub wall_time_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<CompareRow>,
    pub summary: CompareSummary,
}

/// Runs both solvers on every task and aggregates paired records. Tasks run
/// sequentially so per-solve wall times are uncontended.
pub fn compare(
    model: &SurrogateModel,
    tasks: &[OptTask],
    limits: &JointLimits,
    dims: &BodyDimensions,
    grad_opts: &GradOptions,
    cem_opts: &CemOptions,
) -> Result<ComparisonReport, OptimizeError> {
    let mut rows = Vec::with_capacity(tasks.len() * 2);
    let mut grad_times = Vec::new();
    let mut cem_times = Vec::new();
    let mut initial = Vec::new();
    let mut grad_final = Vec::new();
    let mut cem_final = Vec::new();
    let mut grad_feasible = 0usize;
    let mut cem_feasible = 0usize;

    for (i, task) in tasks.iter().enumerate() {
        let initial_rula = rula::rula(&task.q0, &task.ctx)
            .map_err(|_| OptimizeError::InvalidOption("task context"))?
            .grand;
        initial.push(f64::from(initial_rula));

        let mut gopts = grad_opts.clone();
        gopts.seed = grad_opts.seed.wrapping_add(i as u64);
        let t = Instant::now();
        let gres = optimize_gradient(model, &task.ctx, &task.q0, &task.constraint, limits, dims, &gopts);
        let gwall = t.elapsed().as_secs_f64();
        grad_times.push(gwall);
        match &gres {
            Ok(r) => {
                grad_feasible += 1;
                grad_final.push(f64::from(r.rula_grand));
                rows.push(CompareRow {
                    task: i,
                    method: "grad".into(),
                    initial_rula,
                    final_rula: Some(r.rula_grand),
                    final_dula: r.dula_score,
                    feasible: true,
                    iterations: r.iterations,
                    wall_time_s: gwall,
                });
            }
            Err(_) => rows.push(CompareRow {
                task: i,
                method: "grad".into(),
                initial_rula,
                final_rula: None,
                final_dula: None,
                feasible: false,
                iterations: gopts.max_iters,
                wall_time_s: gwall,
            }),
        }

        let mut copts = cem_opts.clone();
        copts.seed = cem_opts.seed.wrapping_add(i as u64);
        let t = Instant::now();
        let cres = optimize_cem(
            |q, ctx| rula::rula(q, ctx).map(|b| b.grand).unwrap_or(7),
            &task.ctx,
            &task.q0,
            &task.constraint,
            limits,
            dims,
            &copts,
        );
        let cwall = t.elapsed().as_secs_f64();
        cem_times.push(cwall);
        match &cres {
            Ok(r) => {
                cem_feasible += 1;
                cem_final.push(f64::from(r.rula_grand));
                rows.push(CompareRow {
                    task: i,
                    method: "cem".into(),
                    initial_rula,
                    final_rula: Some(r.rula_grand),
                    final_dula: Some(model.predict_posture(&r.q_star, &task.ctx)),
                    feasible: true,
                    iterations: r.iterations,
                    wall_time_s: cwall,
                });
            }
            Err(_) => rows.push(CompareRow {
                task: i,
                method: "cem".into(),
                initial_rula,
                final_rula: None,
                final_dula: None,
                feasible: false,
                iterations: copts.max_iters,
                wall_time_s: cwall,
            }),
        }
    }

    let grad_median_wall_s = median(&grad_times);
    let cem_median_wall_s = median(&cem_times);
    let summary = CompareSummary {
        tasks: tasks.len(),
        grad_feasible,
        cem_feasible,
        median_initial_rula: median(&initial),
        grad_median_final_rula: if grad_final.is_empty() { f64::NAN } else { median(&grad_final) },
        cem_median_final_rula: if cem_final.is_empty() { f64::NAN } else { median(&cem_final) },
        grad_median_wall_s,
        cem_median_wall_s,
        wall_time_ratio: cem_median_wall_s / grad_median_wall_s,
    };
    Ok(ComparisonReport { rows, summary })
}
