//! Continuous, differentiable upper-limb ergonomics toolkit.
//!
//! The crate is organized around a single pipeline:
//!
//! 1. [`kinematics`] — a 10-DOF torso/arm model with forward kinematics,
//!    an analytic Jacobian, and box joint limits.
//! 2. [`rula`] — a table-driven implementation of the RULA worksheet that
//!    produces the discrete ground-truth risk score (1–7).
//! 3. [`dataset`] — seeded generation, balancing, labeling, splitting, and
//!    binary serialization of posture/context samples.
//! 4. [`surrogate`] — a fully-connected regression network that learns a
//!    continuous risk score with exact reverse-mode input gradients.
//! 5. [`optimizer`] — constrained postural optimization: gradient-based
//!    minimization of the surrogate under a hand-pose constraint, plus a
//!    gradient-free cross-entropy-method baseline over the exact scorer.
//! 6. [`teleop`] — a deterministic goal-constrained teleoperation simulation
//!    with a re-planning human model that partially accepts suggested
//!    postural corrections.

pub mod dataset;
pub mod kinematics;
pub mod optimizer;
pub mod rula;
pub mod surrogate;
pub mod teleop;
