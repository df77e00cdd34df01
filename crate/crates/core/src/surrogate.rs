//! Continuous differentiable risk model: a fully-connected regression
//! network mapping (posture, context) features to a real-valued risk score,
//! with exact reverse-mode input gradients.
//!
//! Architecture: 19 inputs, hidden layers 124-124-124-7 with rectifier
//! activations, one linear output. The raw output is never clamped inside
//! the differentiable path; [`rounded_clamped`] is the reporting layer that
//! maps a continuous score to the discrete 1–7 scale.
//!
//! Feature encoding (19 values, all in [−1, 1] for in-range inputs):
//! 10 joint angles normalized by their limits, then arm muscle-use flag,
//! arm force/load worksheet score divided by 3, body muscle-use flag, body
//! force/load score divided by 3, neck angle normalized by [−90°, 90°],
//! neck twist, neck side-bend, legs-supported, and arm-supported flags.

use crate::dataset::LabeledSample;
use crate::kinematics::{JointLimits, Posture, DOF};
use crate::rula::{force_load_score, TaskContext};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

/// Width of the feature vector.
pub const FEATURE_DIM: usize = 19;
/// Fixed layer widths: input, three 124-unit hidden layers, a 7-unit hidden
/// layer, linear output.
pub const LAYER_DIMS: [usize; 6] = [FEATURE_DIM, 124, 124, 124, 7, 1];

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("invalid train config: {0}")]
    InvalidConfig(&'static str),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

/// Normalized network input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    /// True when every entry lies in [−1, 1]; holds for any in-limits
    /// posture and valid context.
    pub fn is_normalized(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && v.abs() <= 1.0 + 1e-12)
    }
}

/// Input normalization constants; owned by the model so a loaded checkpoint
/// always featurizes consistently with its training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub limits: JointLimits,
    pub neck_range_deg: [f64; 2],
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            limits: JointLimits::default(),
            neck_range_deg: [-90.0, 90.0],
        }
    }
}

impl Normalization {
    /// Deterministic feature encoding; invertible on the joint-angle block.
    pub fn featurize(&self, q: &Posture, ctx: &TaskContext) -> FeatureVector {
        let mut f = [0.0; FEATURE_DIM];
        for i in 0..DOF {
            let lo = self.limits.lower[i];
            let hi = self.limits.upper[i];
            f[i] = 2.0 * (q.angles[i] - lo) / (hi - lo) - 1.0;
        }
        f[10] = f64::from(ctx.arm_static_or_repeated);
        f[11] = f64::from(force_load_score(ctx.arm_load_kg, ctx.arm_load_mode)) / 3.0;
        f[12] = f64::from(ctx.body_static_or_repeated);
        f[13] = f64::from(force_load_score(ctx.body_load_kg, ctx.body_load_mode)) / 3.0;
        let [nlo, nhi] = self.neck_range_deg;
        f[14] = 2.0 * (ctx.neck_angle_deg - nlo) / (nhi - nlo) - 1.0;
        f[15] = f64::from(ctx.neck_twist);
        f[16] = f64::from(ctx.neck_side_bend);
        f[17] = f64::from(ctx.legs_and_feet_supported);
        f[18] = f64::from(ctx.arm_supported_or_leaning);
        FeatureVector(f)
    }

    /// Inverse of the joint-angle block of [`featurize`].
    pub fn defeaturize(&self, fv: &FeatureVector) -> Posture {
        let mut q = Posture::zero();
        for i in 0..DOF {
            let lo = self.limits.lower[i];
            let hi = self.limits.upper[i];
            q.angles[i] = lo + (fv.0[i] + 1.0) * 0.5 * (hi - lo);
        }
        q
    }

    /// ∂feature_i/∂angle_i for the joint-angle block.
    pub fn angle_scale(&self, i: usize) -> f64 {
        2.0 / self.limits.width(i)
    }
}

/// Clamps a continuous score to [1, 7] and rounds to the nearest integer.
/// Reporting only — never applied inside the differentiable path.
pub fn rounded_clamped(score: f64) -> u8 {
    score.clamp(1.0, 7.0).round() as u8
}

/// Fully-connected rectifier network with dense layers stored as
/// (out × in) matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    layer_dims: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    norm: Normalization,
    pub train_seed: u64,
    pub config_hash: String,
}

impl SurrogateModel {
    /// Seeded uniform fan-in-scaled initialization: W ~ U(±√(6/fan_in))
    /// (rectifier-friendly), hidden biases slightly positive so no unit
    /// starts dead, output bias at the label midpoint.
    pub fn init(seed: u64, norm: Normalization) -> Self {
        let dims = LAYER_DIMS.to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let last = dims.len() - 2;
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-bound..bound));
            weights.push(w);
            let bias_value = if l == last { 4.0 } else { 0.01 };
            biases.push(Array1::from_elem(fan_out, bias_value));
        }
        Self {
            layer_dims: dims,
            weights,
            biases,
            norm,
            train_seed: seed,
            config_hash: String::new(),
        }
    }

    /// All-zero parameters; the output equals the output bias everywhere.
    pub fn zeroed(norm: Normalization) -> Self {
        let dims = LAYER_DIMS.to_vec();
        let weights = (0..dims.len() - 1)
            .map(|l| Array2::zeros((dims[l + 1], dims[l])))
            .collect();
        let biases = (0..dims.len() - 1).map(|l| Array1::zeros(dims[l + 1])).collect();
        Self {
            layer_dims: dims,
            weights,
            biases,
            norm,
            train_seed: 0,
            config_hash: String::new(),
        }
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn featurize(&self, q: &Posture, ctx: &TaskContext) -> FeatureVector {
        self.norm.featurize(q, ctx)
    }

    pub fn defeaturize(&self, fv: &FeatureVector) -> Posture {
        self.norm.defeaturize(fv)
    }

    fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Raw network output for one feature vector. Not clamped.
    pub fn predict(&self, fv: &FeatureVector) -> f64 {
        let mut cur: Vec<f64> = fv.0.to_vec();
        let mut next: Vec<f64> = Vec::new();
        let last = self.n_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            next.clear();
            next.resize(w.nrows(), 0.0);
            matvec(w, &cur, b, &mut next);
            if l < last {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Convenience: featurize then predict.
    pub fn predict_posture(&self, q: &Posture, ctx: &TaskContext) -> f64 {
        self.predict(&self.featurize(q, ctx))
    }

    /// Raw outputs for a batch of feature rows.
    pub fn predict_batch(&self, x: &ArrayView2<f64>) -> Array1<f64> {
        let last = self.n_layers() - 1;
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
            }
            a = z;
        }
        a.index_axis(Axis(1), 0).to_owned()
    }

    /// Network value and its exact reverse-mode gradient with respect to the
    /// 19 input features. The rectifier subgradient at exactly zero is zero.
    pub fn value_and_input_gradient(&self, fv: &FeatureVector) -> (f64, [f64; FEATURE_DIM]) {
        let last = self.n_layers() - 1;
        // forward, storing post-activation values per layer
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers());
        let mut cur: Vec<f64> = fv.0.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = vec![0.0; w.nrows()];
            matvec(w, &cur, b, &mut next);
            if l < last {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(next.clone());
            cur = next;
        }
        let value = cur[0];

        // backward: seed 1.0 at the scalar output
        let mut delta: Vec<f64> = vec![1.0];
        for l in (0..self.n_layers()).rev() {
            let w = &self.weights[l];
            let mut grad_in = vec![0.0; w.ncols()];
            for (r, d) in delta.iter().enumerate() {
                if *d != 0.0 {
                    let row = w.row(r);
                    let row = row.as_slice().expect("standard layout");
                    for (g, wv) in grad_in.iter_mut().zip(row) {
                        *g += wv * d;
                    }
                }
            }
            if l > 0 {
                // mask by the rectifier of the previous hidden layer
                let prev = &acts[l - 1];
                for (g, a) in grad_in.iter_mut().zip(prev) {
                    if *a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = grad_in;
        }
        let mut grad = [0.0; FEATURE_DIM];
        grad.copy_from_slice(&delta);
        (value, grad)
    }

    /// Gradient with respect to the feature vector only.
    pub fn input_gradient(&self, fv: &FeatureVector) -> [f64; FEATURE_DIM] {
        self.value_and_input_gradient(fv).1
    }

    /// Score and its gradient with respect to the joint angles, chain-ruled
    /// through the featurization (context features are constants here).
    pub fn value_and_posture_gradient(
        &self,
        q: &Posture,
        ctx: &TaskContext,
    ) -> (f64, [f64; DOF]) {
        let fv = self.featurize(q, ctx);
        let (value, gfv) = self.value_and_input_gradient(&fv);
        let mut gq = [0.0; DOF];
        for i in 0..DOF {
            gq[i] = gfv[i] * self.norm.angle_scale(i);
        }
        (value, gq)
    }

    /// Finite upper bound on the network's Lipschitz constant over feature
    /// space: the product over layers of min(‖W‖_F, √(‖W‖₁·‖W‖_∞)), both of
    /// which dominate the spectral norm. Used as a step-size hint.
    pub fn lipschitz_bound(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| {
                let fro = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                let norm1 = (0..w.ncols())
                    .map(|c| w.column(c).iter().map(|v| v.abs()).sum::<f64>())
                    .fold(0.0f64, f64::max);
                let norminf = (0..w.nrows())
                    .map(|r| w.row(r).iter().map(|v| v.abs()).sum::<f64>())
                    .fold(0.0f64, f64::max);
                fro.min((norm1 * norminf).sqrt())
            })
            .product()
    }

    pub fn save(&self, path: &Path) -> Result<(), SurrogateError> {
        let doc = CheckpointDoc {
            schema_version: 1,
            layer_dims: self.layer_dims.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().copied().collect())
                .collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
            normalization: self.norm.clone(),
            train_seed: self.train_seed,
            config_hash: self.config_hash.clone(),
        };
        let json = serde_json::to_vec(&doc).map_err(|e| SurrogateError::Malformed(e.to_string()))?;
        crate::surrogate::atomic_write(path, &json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SurrogateError> {
        let bytes = std::fs::read(path)?;
        let doc: CheckpointDoc =
            serde_json::from_slice(&bytes).map_err(|e| SurrogateError::Malformed(e.to_string()))?;
        if doc.layer_dims.len() < 2 {
            return Err(SurrogateError::Malformed("layer_dims too short".into()));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..doc.layer_dims.len() - 1 {
            let (rows, cols) = (doc.layer_dims[l + 1], doc.layer_dims[l]);
            let flat = doc
                .weights
                .get(l)
                .ok_or_else(|| SurrogateError::Malformed("missing weight layer".into()))?;
            if flat.len() != rows * cols {
                return Err(SurrogateError::Malformed(format!(
                    "layer {l}: expected {}×{} weights, got {}",
                    rows,
                    cols,
                    flat.len()
                )));
            }
            weights.push(
                Array2::from_shape_vec((rows, cols), flat.clone())
                    .map_err(|e| SurrogateError::Malformed(e.to_string()))?,
            );
            let b = doc
                .biases
                .get(l)
                .ok_or_else(|| SurrogateError::Malformed("missing bias layer".into()))?;
            if b.len() != rows {
                return Err(SurrogateError::Malformed(format!("layer {l}: bad bias len")));
            }
            biases.push(Array1::from_vec(b.clone()));
        }
        Ok(Self {
            layer_dims: doc.layer_dims,
            weights,
            biases,
            norm: doc.normalization,
            train_seed: doc.train_seed,
            config_hash: doc.config_hash,
        })
    }
}

/// y = W·x + b over row slices.
fn matvec(w: &Array2<f64>, x: &[f64], b: &Array1<f64>, out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        let row = w.row(r);
        let row = row.as_slice().expect("standard layout");
        let mut acc = 0.0;
        for (wv, xv) in row.iter().zip(x) {
            acc += wv * xv;
        }
        *o = acc + b[r];
    }
}

/// Checkpoint document: JSON with row-major weight arrays.
#[derive(Debug, Serialize, Deserialize)]
struct CheckpointDoc {
    schema_version: u32,
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    normalization: Normalization,
    train_seed: u64,
    config_hash: String,
}

/// Write-temp-then-rename so partially written files are never observed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Training

/// Gradient-descent variant. Plain minibatch descent is the default; the
/// adaptive variants sit behind this config switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    Sgd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Learning-rate schedule. The constant rate is the default; step decay is
/// an opt-in refinement for short desk-scale runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LrSchedule {
    Constant,
    StepDecay {
        every_epochs: usize,
        factor: f64,
        min_rate: f64,
    },
}

impl LrSchedule {
    fn rate_at(&self, base: f64, epoch: usize) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::StepDecay {
                every_epochs,
                factor,
                min_rate,
            } => (base * factor.powi((epoch / every_epochs.max(1)) as i32)).max(min_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub k_folds: usize,
    pub rng_seed: u64,
    pub optimizer: OptimizerKind,
    pub lr_schedule: LrSchedule,
    /// Fixed chunk count for data-parallel batch gradients; the reduction
    /// order is chunk-index order, so results do not depend on thread count.
    pub grad_chunks: usize,
    /// Loss above this (or any non-finite loss) aborts training.
    pub divergence_limit: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 0.001,
            batch_size: 1024,
            k_folds: 5,
            rng_seed: 0,
            optimizer: OptimizerKind::Sgd,
            lr_schedule: LrSchedule::Constant,
            grad_chunks: 4,
            divergence_limit: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.batch_size < 1 {
            return Err(SurrogateError::InvalidConfig("batch_size must be ≥ 1"));
        }
        if self.k_folds < 1 {
            return Err(SurrogateError::InvalidConfig("k_folds must be ≥ 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(SurrogateError::InvalidConfig("learning_rate must be > 0"));
        }
        if self.grad_chunks < 1 {
            return Err(SurrogateError::InvalidConfig("grad_chunks must be ≥ 1"));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub epoch_loss: Vec<f64>,
    pub wall_time_s: f64,
}

/// Feature matrix and regression targets for a sample set.
pub fn featurize_matrix(norm: &Normalization, samples: &[LabeledSample]) -> (Array2<f64>, Array1<f64>) {
    let n = samples.len();
    let mut x = Array2::zeros((n, FEATURE_DIM));
    let mut y = Array1::zeros(n);
    for (i, s) in samples.iter().enumerate() {
        let fv = norm.featurize(&s.posture, &s.context);
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&fv.0));
        y[i] = f64::from(s.label);
    }
    (x, y)
}

struct LayerGrads {
    w: Vec<Array2<f64>>,
    b: Vec<Array1<f64>>,
}

impl LayerGrads {
    fn zeros_like(model: &SurrogateModel) -> Self {
        Self {
            w: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            b: model.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    fn add(&mut self, other: &LayerGrads) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += b;
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            *a += b;
        }
    }

    fn scale(&mut self, s: f64) {
        for w in &mut self.w {
            *w *= s;
        }
        for b in &mut self.b {
            *b *= s;
        }
    }
}

/// Sum of per-sample gradients and squared errors over a chunk of rows.
fn chunk_gradient(model: &SurrogateModel, x: &ArrayView2<f64>, y: &[f64]) -> (LayerGrads, f64) {
    let last = model.n_layers() - 1;
    // forward
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(model.n_layers() + 1);
    acts.push(x.to_owned());
    for (l, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
        let mut z = acts[l].dot(&w.t());
        z += b;
        if l < last {
            z.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
        }
        acts.push(z);
    }
    let pred = acts.last().unwrap().index_axis(Axis(1), 0);
    let n = y.len();
    let mut loss_sum = 0.0;
    let mut delta = Array2::zeros((n, 1));
    for i in 0..n {
        let e = pred[i] - y[i];
        loss_sum += e * e;
        delta[(i, 0)] = 2.0 * e;
    }

    // backward
    let mut grads = LayerGrads::zeros_like(model);
    for l in (0..model.n_layers()).rev() {
        grads.w[l] = delta.t().dot(&acts[l]);
        grads.b[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut next = delta.dot(&model.weights[l]);
            ndarray::Zip::from(&mut next).and(&acts[l]).for_each(|d, a| {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = next;
        }
    }
    (grads, loss_sum)
}

enum OptState {
    Sgd,
    Momentum { v: LayerGrads },
    Adam { m: LayerGrads, v: LayerGrads, t: u64 },
}

fn apply_update(
    model: &mut SurrogateModel,
    grads: &LayerGrads,
    cfg: &TrainConfig,
    lr: f64,
    state: &mut OptState,
) {
    match (cfg.optimizer, state) {
        (OptimizerKind::Sgd, OptState::Sgd) => {
            for l in 0..model.weights.len() {
                model.weights[l].scaled_add(-lr, &grads.w[l]);
                model.biases[l].scaled_add(-lr, &grads.b[l]);
            }
        }
        (OptimizerKind::Momentum { beta }, OptState::Momentum { v }) => {
            for l in 0..model.weights.len() {
                v.w[l] *= beta;
                v.w[l] += &grads.w[l];
                v.b[l] *= beta;
                v.b[l] += &grads.b[l];
                model.weights[l].scaled_add(-lr, &v.w[l]);
                model.biases[l].scaled_add(-lr, &v.b[l]);
            }
        }
        (OptimizerKind::Adam { beta1, beta2, eps }, OptState::Adam { m, v, t }) => {
            *t += 1;
            let bc1 = 1.0 - beta1.powi(*t as i32);
            let bc2 = 1.0 - beta2.powi(*t as i32);
            for l in 0..model.weights.len() {
                ndarray::Zip::from(&mut m.w[l]).and(&grads.w[l]).for_each(|mv, g| {
                    *mv = beta1 * *mv + (1.0 - beta1) * g;
                });
                ndarray::Zip::from(&mut v.w[l]).and(&grads.w[l]).for_each(|vv, g| {
                    *vv = beta2 * *vv + (1.0 - beta2) * g * g;
                });
                ndarray::Zip::from(&mut model.weights[l])
                    .and(&m.w[l])
                    .and(&v.w[l])
                    .for_each(|w, mv, vv| {
                        *w -= lr * (mv / bc1) / ((vv / bc2).sqrt() + eps);
                    });
                ndarray::Zip::from(&mut m.b[l]).and(&grads.b[l]).for_each(|mv, g| {
                    *mv = beta1 * *mv + (1.0 - beta1) * g;
                });
                ndarray::Zip::from(&mut v.b[l]).and(&grads.b[l]).for_each(|vv, g| {
                    *vv = beta2 * *vv + (1.0 - beta2) * g * g;
                });
                ndarray::Zip::from(&mut model.biases[l])
                    .and(&m.b[l])
                    .and(&v.b[l])
                    .for_each(|b, mv, vv| {
                        *b -= lr * (mv / bc1) / ((vv / bc2).sqrt() + eps);
                    });
            }
        }
        _ => unreachable!("optimizer state built from the same config"),
    }
}

/// Minibatch gradient descent on the mean squared error against the integer
/// labels treated as reals. Deterministic for a fixed seed: shuffling,
/// chunking, and reduction order are all derived from the config.
pub fn train(
    samples: &[LabeledSample],
    cfg: &TrainConfig,
    norm: &Normalization,
) -> Result<(SurrogateModel, TrainMetrics), SurrogateError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(SurrogateError::EmptyTrainSet);
    }
    let (x, y) = featurize_matrix(norm, samples);
    let mut model = SurrogateModel::init(cfg.rng_seed, norm.clone());
    model.config_hash = cfg.hash();
    let metrics = train_in_place(&mut model, &x, &y, cfg)?;
    Ok((model, metrics))
}

fn train_in_place(
    model: &mut SurrogateModel,
    x: &Array2<f64>,
    y: &Array1<f64>,
    cfg: &TrainConfig,
) -> Result<TrainMetrics, SurrogateError> {
    use rand::seq::SliceRandom;
    let start = std::time::Instant::now();
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut state = match cfg.optimizer {
        OptimizerKind::Sgd => OptState::Sgd,
        OptimizerKind::Momentum { .. } => OptState::Momentum {
            v: LayerGrads::zeros_like(model),
        },
        OptimizerKind::Adam { .. } => OptState::Adam {
            m: LayerGrads::zeros_like(model),
            v: LayerGrads::zeros_like(model),
            t: 0,
        },
    };

    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_schedule.rate_at(cfg.learning_rate, epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bs = batch.len();
            // gather rows
            let mut xb = Array2::zeros((bs, FEATURE_DIM));
            let mut yb = vec![0.0; bs];
            for (k, &i) in batch.iter().enumerate() {
                xb.row_mut(k).assign(&x.row(i));
                yb[k] = y[i];
            }
            // chunked data-parallel gradient, reduced in chunk order
            let chunk_len = bs.div_ceil(cfg.grad_chunks);
            let pieces: Vec<(LayerGrads, f64)> = (0..cfg.grad_chunks)
                .into_par_iter()
                .filter_map(|c| {
                    let lo = c * chunk_len;
                    if lo >= bs {
                        return None;
                    }
                    let hi = (lo + chunk_len).min(bs);
                    let xv = xb.slice(ndarray::s![lo..hi, ..]);
                    Some(chunk_gradient(model, &xv, &yb[lo..hi]))
                })
                .collect();
            let mut grads = LayerGrads::zeros_like(model);
            for (g, l) in &pieces {
                grads.add(g);
                loss_sum += l;
            }
            grads.scale(1.0 / bs as f64);
            apply_update(model, &grads, cfg, lr, &mut state);
        }
        let loss = loss_sum / n as f64;
        if !loss.is_finite() || loss > cfg.divergence_limit {
            return Err(SurrogateError::Diverged { epoch, loss });
        }
        epoch_loss.push(loss);
    }

    Ok(TrainMetrics {
        epoch_loss,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Evaluation

/// 7×7 confusion matrix: row = true label − 1, column = rounded-clamped
/// prediction − 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 7]; 7],
}

impl ConfusionMatrix {
    pub fn row_sums(&self) -> [usize; 7] {
        let mut sums = [0; 7];
        for (i, row) in self.counts.iter().enumerate() {
            sums[i] = row.iter().sum();
        }
        sums
    }

    /// Diagonal over row sum, or None for an empty class.
    pub fn per_class_accuracy(&self) -> [Option<f64>; 7] {
        let sums = self.row_sums();
        let mut acc = [None; 7];
        for i in 0..7 {
            if sums[i] > 0 {
                acc[i] = Some(self.counts[i][i] as f64 / sums[i] as f64);
            }
        }
        acc
    }

    pub fn overall_accuracy(&self) -> f64 {
        let total: usize = self.row_sums().iter().sum();
        let diag: usize = (0..7).map(|i| self.counts[i][i]).sum();
        if total == 0 {
            return 0.0;
        }
        diag as f64 / total as f64
    }

    /// Smallest per-class accuracy among non-empty classes.
    pub fn min_diagonal_accuracy(&self) -> f64 {
        self.per_class_accuracy()
            .iter()
            .flatten()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub n_samples: usize,
}

/// Rounded-clamped accuracy and confusion matrix over a labeled set.
pub fn evaluate(model: &SurrogateModel, samples: &[LabeledSample]) -> EvalReport {
    let (x, _) = featurize_matrix(model.normalization(), samples);
    let preds = model.predict_batch(&x.view());
    let mut counts = [[0usize; 7]; 7];
    for (s, p) in samples.iter().zip(preds.iter()) {
        let pred = rounded_clamped(*p);
        counts[(s.label - 1) as usize][(pred - 1) as usize] += 1;
    }
    let confusion = ConfusionMatrix { counts };
    EvalReport {
        accuracy: confusion.overall_accuracy(),
        confusion,
        n_samples: samples.len(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Stratified k-fold cross-validation of the rounded accuracy.
pub fn cross_validate(
    samples: &[LabeledSample],
    cfg: &TrainConfig,
    norm: &Normalization,
) -> Result<CvReport, SurrogateError> {
    use rand::seq::SliceRandom;
    cfg.validate()?;
    if samples.is_empty() {
        return Err(SurrogateError::EmptyTrainSet);
    }
    let k = cfg.k_folds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(2));
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); 7];
    for (i, s) in samples.iter().enumerate() {
        by_label[(s.label - 1) as usize].push(i);
    }
    let mut fold_of = vec![0usize; samples.len()];
    for stratum in &mut by_label {
        stratum.shuffle(&mut rng);
        for (pos, &i) in stratum.iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }

    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let train_set: Vec<LabeledSample> = samples
            .iter()
            .enumerate()
            .filter(|(i, _)| fold_of[*i] != fold)
            .map(|(_, s)| s.clone())
            .collect();
        let test_set: Vec<LabeledSample> = samples
            .iter()
            .enumerate()
            .filter(|(i, _)| fold_of[*i] == fold)
            .map(|(_, s)| s.clone())
            .collect();
        let mut fold_cfg = cfg.clone();
        fold_cfg.rng_seed = cfg.rng_seed.wrapping_add(fold as u64);
        let (model, _) = train(&train_set, &fold_cfg, norm)?;
        let report = evaluate(&model, &test_set);
        folds.push(FoldReport {
            fold,
            train_size: train_set.len(),
            test_size: test_set.len(),
            accuracy: report.accuracy,
        });
    }
    let mean = folds.iter().map(|f| f.accuracy).sum::<f64>() / k as f64;
    let var = folds
        .iter()
        .map(|f| (f.accuracy - mean).powi(2))
        .sum::<f64>()
        / k as f64;
    Ok(CvReport {
        folds,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_balanced, DatasetSpec};

    fn small_dataset(n: usize, seed: u64) -> Vec<LabeledSample> {
        generate_balanced(&DatasetSpec::new(n, seed), &JointLimits::default()).unwrap()
    }

    #[test]
    fn featurize_is_normalized_and_invertible_on_angles() {
        let norm = Normalization::default();
        let limits = JointLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let q = crate::dataset::sample_posture(&mut rng, &limits);
            let ctx = crate::dataset::sample_context(&mut rng);
            let fv = norm.featurize(&q, &ctx);
            assert!(fv.is_normalized());
            let back = norm.defeaturize(&fv);
            for i in 0..DOF {
                assert!((back.angles[i] - q.angles[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn limit_boundary_angles_featurize_to_unit() {
        let norm = Normalization::default();
        let ctx = TaskContext::default();
        let mut q = Posture::zero();
        q.angles[0] = norm.limits.lower[0];
        q.angles[1] = norm.limits.upper[1];
        let fv = norm.featurize(&q, &ctx);
        assert!((fv.0[0] + 1.0).abs() < 1e-12);
        assert!((fv.0[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_model_outputs_bias_and_zero_gradient() {
        let model = SurrogateModel::zeroed(Normalization::default());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let q = crate::dataset::sample_posture(&mut rng, &model.norm.limits.clone());
            let ctx = crate::dataset::sample_context(&mut rng);
            let fv = model.featurize(&q, &ctx);
            assert_eq!(model.predict(&fv), 0.0);
            assert!(model.input_gradient(&fv).iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn scalar_and_batch_paths_agree_and_batch_order_is_irrelevant() {
        let model = SurrogateModel::init(3, Normalization::default());
        let data = small_dataset(64, 10);
        let (x, _) = featurize_matrix(model.normalization(), &data);
        let batch = model.predict_batch(&x.view());
        for (i, s) in data.iter().enumerate() {
            let single = model.predict(&model.featurize(&s.posture, &s.context));
            assert!((batch[i] - single).abs() < 1e-12);
        }
        // reversed batch gives bitwise-identical per-row outputs
        let mut rev = Array2::zeros(x.dim());
        for i in 0..x.nrows() {
            rev.row_mut(x.nrows() - 1 - i).assign(&x.row(i));
        }
        let batch_rev = model.predict_batch(&rev.view());
        for i in 0..x.nrows() {
            assert_eq!(batch[i], batch_rev[x.nrows() - 1 - i]);
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let model = SurrogateModel::init(17, Normalization::default());
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = 1e-5;
        let mut checked = 0;
        for _ in 0..100 {
            let mut f = [0.0; FEATURE_DIM];
            for v in f.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let fv = FeatureVector(f);
            let (_, grad) = model.value_and_input_gradient(&fv);
            for i in 0..FEATURE_DIM {
                let mut fp = f;
                let mut fm = f;
                fp[i] += h;
                fm[i] -= h;
                // skip coordinates whose rectifier pattern changes across the stencil
                if hidden_sign_pattern(&model, &FeatureVector(fp))
                    != hidden_sign_pattern(&model, &FeatureVector(fm))
                {
                    continue;
                }
                let fd = (model.predict(&FeatureVector(fp)) - model.predict(&FeatureVector(fm)))
                    / (2.0 * h);
                let denom = grad[i].abs().max(fd.abs()).max(1e-6);
                assert!(
                    ((grad[i] - fd) / denom).abs() < 1e-4,
                    "coord {i}: analytic {} vs fd {fd}",
                    grad[i]
                );
                checked += 1;
            }
        }
        assert!(checked > 500, "only {checked} coordinates checked");
    }

    #[test]
    fn posture_gradient_chains_through_normalization() {
        let model = SurrogateModel::init(5, Normalization::default());
        let limits = JointLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let q = crate::dataset::sample_posture(&mut rng, &limits);
        let ctx = crate::dataset::sample_context(&mut rng);
        let (value, gq) = model.value_and_posture_gradient(&q, &ctx);
        assert!(value.is_finite());
        let h = 1e-6;
        for i in 0..DOF {
            let mut qp = q;
            let mut qm = q;
            qp.angles[i] += h;
            qm.angles[i] -= h;
            let fd = (model.predict_posture(&qp, &ctx) - model.predict_posture(&qm, &ctx))
                / (2.0 * h);
            let denom = gq[i].abs().max(fd.abs()).max(1e-6);
            assert!(((gq[i] - fd) / denom).abs() < 1e-3, "joint {i}");
        }
    }

    fn hidden_sign_pattern(model: &SurrogateModel, fv: &FeatureVector) -> Vec<bool> {
        // recompute hidden pre-activation signs via the stored activations:
        // a > 0 iff z > 0 for rectifier layers
        let last = model.n_layers() - 1;
        let mut cur: Vec<f64> = fv.0.to_vec();
        let mut signs = Vec::new();
        for (l, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
            let mut next = vec![0.0; w.nrows()];
            matvec(w, &cur, b, &mut next);
            if l < last {
                for v in next.iter_mut() {
                    signs.push(*v > 0.0);
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            cur = next;
        }
        signs
    }

    #[test]
    fn lipschitz_bound_is_finite_and_bounds_sampled_slopes() {
        let model = SurrogateModel::init(23, Normalization::default());
        let bound = model.lipschitz_bound();
        assert!(bound.is_finite() && bound > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mut a = [0.0; FEATURE_DIM];
            let mut b = [0.0; FEATURE_DIM];
            for i in 0..FEATURE_DIM {
                a[i] = rng.random_range(-1.0..1.0);
                b[i] = rng.random_range(-1.0..1.0);
            }
            let dist: f64 = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let dv = (model.predict(&FeatureVector(a)) - model.predict(&FeatureVector(b))).abs();
            assert!(dv <= bound * dist + 1e-9);
        }
    }

    #[test]
    fn zero_epochs_returns_initialized_model() {
        let norm = Normalization::default();
        let data = small_dataset(200, 1);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (model, metrics) = train(&data, &cfg, &norm).unwrap();
        let mut fresh = SurrogateModel::init(cfg.rng_seed, norm);
        fresh.config_hash = cfg.hash();
        assert_eq!(model, fresh);
        assert!(metrics.epoch_loss.is_empty());
    }

    #[test]
    fn training_is_seed_deterministic() {
        let norm = Normalization::default();
        let data = small_dataset(600, 6);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 64,
            rng_seed: 42,
            ..TrainConfig::default()
        };
        let (m1, t1) = train(&data, &cfg, &norm).unwrap();
        let (m2, t2) = train(&data, &cfg, &norm).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(t1.epoch_loss, t2.epoch_loss);
    }

    #[test]
    fn empty_train_set_is_rejected() {
        assert!(matches!(
            train(&[], &TrainConfig::default(), &Normalization::default()),
            Err(SurrogateError::EmptyTrainSet)
        ));
    }

    #[test]
    fn toy_training_reduces_loss() {
        let norm = Normalization::default();
        let data = small_dataset(5_000, 55);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 256,
            rng_seed: 7,
            optimizer: OptimizerKind::adam(),
            ..TrainConfig::default()
        };
        let (_, metrics) = train(&data, &cfg, &norm).unwrap();
        let first = metrics.epoch_loss[0];
        let last = *metrics.epoch_loss.last().unwrap();
        assert!(
            last < 0.5 * first,
            "loss did not drop: first {first}, last {last}"
        );
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let norm = Normalization::default();
        let data = small_dataset(400, 14);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 64,
            ..TrainConfig::default()
        };
        let (model, _) = train(&data, &cfg, &norm).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let back = SurrogateModel::load(&path).unwrap();
        assert_eq!(model, back);
        // identical weights imply identical rounded accuracy by construction
        let e1 = evaluate(&model, &data);
        let e2 = evaluate(&back, &data);
        assert_eq!(e1.confusion, e2.confusion);
    }

    #[test]
    fn confusion_rows_partition_the_test_set() {
        let model = SurrogateModel::init(1, Normalization::default());
        let data = small_dataset(1_000, 3);
        let report = evaluate(&model, &data);
        let sums = report.confusion.row_sums();
        let counts = crate::dataset::label_counts(&data);
        for i in 0..7 {
            assert_eq!(sums[i], counts[i]);
        }
    }

    #[test]
    fn cross_validation_folds_are_balanced_and_disjoint() {
        let norm = Normalization::default();
        let data = small_dataset(1_400, 70);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 128,
            k_folds: 5,
            ..TrainConfig::default()
        };
        let report = cross_validate(&data, &cfg, &norm).unwrap();
        assert_eq!(report.folds.len(), 5);
        let total: usize = report.folds.iter().map(|f| f.test_size).sum();
        assert_eq!(total, data.len());
        let min = report.folds.iter().map(|f| f.test_size).min().unwrap();
        let max = report.folds.iter().map(|f| f.test_size).max().unwrap();
        assert!(max - min <= 7, "fold sizes {min}..{max}");
        assert!(report.mean_accuracy >= 0.0 && report.mean_accuracy <= 1.0);
    }

    #[test]
    fn rounding_layer_clamps_and_rounds() {
        assert_eq!(rounded_clamped(-3.0), 1);
        assert_eq!(rounded_clamped(1.4), 1);
        assert_eq!(rounded_clamped(1.5), 2);
        assert_eq!(rounded_clamped(6.9), 7);
        assert_eq!(rounded_clamped(12.0), 7);
    }
}
