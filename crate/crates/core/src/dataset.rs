//! Dataset generation, balancing, splitting, and serialization.
//!
//! Samples are (posture, context) pairs labeled with the exact RULA grand
//! score. Uniform sampling concentrates labels in {3,4,5}, so balanced
//! generation tops up starved classes from targeted proposal distributions
//! (a low-risk box for labels 1–2, a high-risk box for labels 6–7) until
//! every class meets its quota.
//!
//! Generation is sharded: each shard derives its own RNG stream from the
//! dataset seed, so the output is identical whether shards run serially or
//! in parallel, and merging is order-stable by shard then index.
//!
//! Context sampling note: the scorer flags that the surrogate's feature
//! encoding cannot observe (`shoulder_raised`, `working_across_midline`,
//! `wrist_bent_from_midline`) are held false during generation. Sampling
//! them would inject label noise that no model on these features could
//! resolve. The scorer itself honors them when callers set them.

use crate::kinematics::{JointLimits, Posture, DOF};
use crate::rula::{self, LoadMode, TaskContext};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const LABEL_COUNT: usize = 7;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("label {label} quota unreachable: {have}/{need} after {attempts} draws")]
    QuotaFailure {
        label: u8,
        have: usize,
        need: usize,
        attempts: u64,
    },
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(&'static str),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error("scoring error: {0}")]
    Rula(#[from] rula::RulaError),
}

/// One labeled training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub posture: Posture,
    pub context: TaskContext,
    pub label: u8,
}

/// Parameters of a reproducible balanced dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub total_count: usize,
    /// Minimum fraction of `total_count` each label class must reach.
    pub per_label_min_fraction: f64,
    pub rng_seed: u64,
    /// Train fraction used by the canonical split of this dataset.
    pub split_fraction: f64,
    /// Number of independent generation shards; fixed so output does not
    /// depend on thread count.
    pub shards: usize,
    /// Global cap on proposal draws before reporting a starved label.
    pub max_attempts: u64,
}

impl DatasetSpec {
    pub fn new(total_count: usize, rng_seed: u64) -> Self {
        Self {
            total_count,
            per_label_min_fraction: 1.0 / 14.0,
            rng_seed,
            split_fraction: 0.8,
            shards: 8,
            max_attempts: 1_000_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.total_count == 0 {
            return Err(DatasetError::InvalidSpec("total_count must be positive"));
        }
        if !(self.per_label_min_fraction > 0.0
            && self.per_label_min_fraction * LABEL_COUNT as f64 <= 1.0)
        {
            return Err(DatasetError::InvalidSpec(
                "per_label_min_fraction must lie in (0, 1/7]",
            ));
        }
        if !(0.0 < self.split_fraction && self.split_fraction < 1.0) {
            return Err(DatasetError::InvalidSpec("split_fraction must lie in (0,1)"));
        }
        if self.shards == 0 {
            return Err(DatasetError::InvalidSpec("shards must be positive"));
        }
        Ok(())
    }
}

/// Uniform posture draw within the joint-limit box.
pub fn sample_posture(rng: &mut impl Rng, limits: &JointLimits) -> Posture {
    let mut q = Posture::zero();
    for i in 0..DOF {
        q.angles[i] = rng.random_range(limits.lower[i]..limits.upper[i]);
    }
    q
}

fn sample_mode(rng: &mut impl Rng) -> LoadMode {
    // occasional shock loads, mostly intermittent handling
    let u: f64 = rng.random();
    if u < 0.75 {
        LoadMode::Intermittent
    } else if u < 0.95 {
        LoadMode::StaticOrRepeated
    } else {
        LoadMode::Shock
    }
}

/// Cube-skewed load draw on [0, `max_kg`]: light loads dominate, matching
/// how often real tasks actually carry weight.
fn sample_load(rng: &mut impl Rng, max_kg: f64) -> f64 {
    max_kg * rng.random::<f64>().powi(3)
}

/// Default context draw. Calibrated so that uniform posture draws labeled
/// with these contexts concentrate in grand scores 3–5, with 1, 2, 6, 7 in
/// the tails: muscle-use flags Bernoulli(0.25), cube-skewed loads on
/// [0, 10] kg, shock mode at 5%, neck angle uniform on [−5°, 22°],
/// twist/side-bend at 15%, legs supported 75%, arm supported 50%.
pub fn sample_context(rng: &mut impl Rng) -> TaskContext {
    TaskContext {
        arm_static_or_repeated: rng.random_bool(0.25),
        body_static_or_repeated: rng.random_bool(0.25),
        arm_load_kg: sample_load(rng, 10.0),
        arm_load_mode: sample_mode(rng),
        body_load_kg: sample_load(rng, 10.0),
        body_load_mode: sample_mode(rng),
        neck_angle_deg: rng.random_range(-5.0..=22.0),
        neck_twist: rng.random_bool(0.15),
        neck_side_bend: rng.random_bool(0.15),
        legs_and_feet_supported: rng.random_bool(0.75),
        arm_supported_or_leaning: rng.random_bool(0.5),
        shoulder_raised: false,
        working_across_midline: false,
        wrist_bent_from_midline: false,
    }
}

/// Which proposal distribution a draw comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Proposal {
    Uniform,
    LowRisk,
    HighRisk,
}

fn proposal_for_label(label: u8) -> Proposal {
    match label {
        1 | 2 => Proposal::LowRisk,
        6 | 7 => Proposal::HighRisk,
        _ => Proposal::Uniform,
    }
}

const D2R: f64 = std::f64::consts::PI / 180.0;

fn range_deg(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo * D2R..hi * D2R)
}

/// Magnitude in [lo, hi] degrees with a random sign.
fn signed_band_deg(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo * D2R..hi * D2R);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

fn sample_low_risk(rng: &mut impl Rng, limits: &JointLimits) -> (Posture, TaskContext) {
    use crate::kinematics::joint::*;
    let mut q = Posture::zero();
    q.angles[TORSO_FLEXION] = range_deg(rng, -4.5, 4.5);
    q.angles[TORSO_LATERAL_BEND] = range_deg(rng, -14.0, 14.0);
    q.angles[TORSO_AXIAL_ROTATION] = range_deg(rng, -14.0, 14.0);
    q.angles[SHOULDER_FLEXION] = range_deg(rng, -19.0, 19.0);
    q.angles[SHOULDER_ABDUCTION] = range_deg(rng, -19.0, 19.0);
    q.angles[SHOULDER_ROTATION] = rng.random_range(limits.lower[SHOULDER_ROTATION]..limits.upper[SHOULDER_ROTATION]);
    q.angles[ELBOW_FLEXION] = range_deg(rng, 61.0, 99.0);
    q.angles[FOREARM_PRONATION] = range_deg(rng, -59.0, 59.0);
    q.angles[WRIST_FLEXION] = range_deg(rng, -4.5, 4.5);
    q.angles[WRIST_DEVIATION] = range_deg(rng, -9.0, 9.0);

    let ctx = TaskContext {
        arm_static_or_repeated: rng.random_bool(0.2),
        body_static_or_repeated: rng.random_bool(0.2),
        arm_load_kg: rng.random_range(0.0..3.0),
        arm_load_mode: if rng.random_bool(0.8) {
            LoadMode::Intermittent
        } else {
            LoadMode::StaticOrRepeated
        },
        body_load_kg: rng.random_range(0.0..3.0),
        body_load_mode: if rng.random_bool(0.8) {
            LoadMode::Intermittent
        } else {
            LoadMode::StaticOrRepeated
        },
        neck_angle_deg: rng.random_range(0.0..15.0),
        neck_twist: rng.random_bool(0.15),
        neck_side_bend: rng.random_bool(0.15),
        legs_and_feet_supported: rng.random_bool(0.85),
        arm_supported_or_leaning: rng.random_bool(0.5),
        shoulder_raised: false,
        working_across_midline: false,
        wrist_bent_from_midline: false,
    };
    (limits.clamp(&q), ctx)
}

fn sample_high_risk(rng: &mut impl Rng, limits: &JointLimits) -> (Posture, TaskContext) {
    use crate::kinematics::joint::*;
    let mut q = Posture::zero();
    q.angles[TORSO_FLEXION] = range_deg(rng, 20.5, 25.0);
    q.angles[TORSO_LATERAL_BEND] = signed_band_deg(rng, 15.5, 18.0);
    q.angles[TORSO_AXIAL_ROTATION] = signed_band_deg(rng, 15.5, 18.0);
    q.angles[SHOULDER_FLEXION] = range_deg(rng, 91.0, 110.0);
    q.angles[SHOULDER_ABDUCTION] = range_deg(rng, 21.0, 45.0);
    q.angles[SHOULDER_ROTATION] = rng.random_range(limits.lower[SHOULDER_ROTATION]..limits.upper[SHOULDER_ROTATION]);
    q.angles[ELBOW_FLEXION] = if rng.random_bool(0.5) {
        range_deg(rng, -5.0, 55.0)
    } else {
        range_deg(rng, 105.0, 140.0)
    };
    q.angles[FOREARM_PRONATION] = signed_band_deg(rng, 61.0, 70.0);
    q.angles[WRIST_FLEXION] = signed_band_deg(rng, 16.0, 35.0);
    q.angles[WRIST_DEVIATION] = signed_band_deg(rng, 11.0, 15.0);

    let ctx = TaskContext {
        arm_static_or_repeated: rng.random_bool(0.75),
        body_static_or_repeated: rng.random_bool(0.75),
        arm_load_kg: rng.random_range(8.0..=15.0),
        arm_load_mode: sample_mode(rng),
        body_load_kg: rng.random_range(8.0..=15.0),
        body_load_mode: sample_mode(rng),
        neck_angle_deg: if rng.random_bool(0.5) {
            rng.random_range(-5.0..0.0)
        } else {
            rng.random_range(20.0..22.0)
        },
        neck_twist: rng.random_bool(0.75),
        neck_side_bend: rng.random_bool(0.75),
        legs_and_feet_supported: rng.random_bool(0.25),
        arm_supported_or_leaning: rng.random_bool(0.15),
        shoulder_raised: false,
        working_across_midline: false,
        wrist_bent_from_midline: false,
    };
    (limits.clamp(&q), ctx)
}

/// Low-risk proposal draw, reused by demo-task construction.
pub(crate) fn sample_low_risk_pair(
    rng: &mut impl Rng,
    limits: &JointLimits,
) -> (Posture, TaskContext) {
    sample_low_risk(rng, limits)
}

fn draw(rng: &mut impl Rng, limits: &JointLimits, proposal: Proposal) -> LabeledSample {
    let (posture, context) = match proposal {
        Proposal::Uniform => (sample_posture(rng, limits), sample_context(rng)),
        Proposal::LowRisk => sample_low_risk(rng, limits),
        Proposal::HighRisk => sample_high_risk(rng, limits),
    };
    let label = rula::rula(&posture, &context)
        .expect("in-limits posture and sampled context always score")
        .grand;
    LabeledSample {
        posture,
        context,
        label,
    }
}

fn shard_seed(base: u64, shard: usize) -> u64 {
    // splitmix-style decorrelation of per-shard streams
    let mut z = base ^ (shard as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates one shard: exactly `count` samples with at least `quota`
/// samples per label.
fn generate_shard(
    seed: u64,
    count: usize,
    quota: usize,
    max_attempts: u64,
    limits: &JointLimits,
) -> Result<Vec<LabeledSample>, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LabeledSample> = Vec::with_capacity(count);
    let mut counts = [0usize; LABEL_COUNT];
    let mut attempts: u64 = 0;

    let deficit = |counts: &[usize; LABEL_COUNT]| -> usize {
        counts.iter().map(|&c| quota.saturating_sub(c)).sum()
    };

    // Phase A: uniform stream with greedy quota-aware acceptance. Capacity
    // beyond what starved classes still need is filled from the stream.
    let phase_a_budget = (count as u64).saturating_mul(20).max(10_000);
    while out.len() < count && attempts < phase_a_budget {
        attempts += 1;
        let s = draw(&mut rng, limits, Proposal::Uniform);
        let idx = (s.label - 1) as usize;
        let needed = counts[idx] < quota;
        let free = count - out.len();
        if needed || free > deficit(&counts) {
            counts[idx] += 1;
            out.push(s);
        }
    }

    // Phase B: targeted proposals for any class still under quota.
    for label in 1..=LABEL_COUNT as u8 {
        let idx = (label - 1) as usize;
        let proposal = proposal_for_label(label);
        while counts[idx] < quota {
            if attempts >= max_attempts {
                return Err(DatasetError::QuotaFailure {
                    label,
                    have: counts[idx],
                    need: quota,
                    attempts,
                });
            }
            attempts += 1;
            let s = draw(&mut rng, limits, proposal);
            if s.label == label {
                counts[idx] += 1;
                out.push(s);
            }
        }
    }

    // Phase C: top up to the exact shard count from the uniform stream.
    while out.len() < count {
        if attempts >= max_attempts {
            // quotas are met; only capacity is missing, so any label works
            attempts = 0;
        }
        attempts += 1;
        let s = draw(&mut rng, limits, Proposal::Uniform);
        counts[(s.label - 1) as usize] += 1;
        out.push(s);
    }

    Ok(out)
}

/// Balanced, labeled, seed-reproducible dataset of exactly
/// `spec.total_count` samples with every label class at or above
/// `per_label_min_fraction × total_count`.
pub fn generate_balanced(
    spec: &DatasetSpec,
    limits: &JointLimits,
) -> Result<Vec<LabeledSample>, DatasetError> {
    spec.validate()?;
    limits.validate().map_err(|_| DatasetError::InvalidSpec("joint limits"))?;

    let shards = spec.shards.min(spec.total_count);
    let quota_total = (spec.per_label_min_fraction * spec.total_count as f64).ceil() as usize;
    let base = spec.total_count / shards;
    let remainder = spec.total_count % shards;
    let quota_base = quota_total / shards;
    let quota_rem = quota_total % shards;

    let shard_results: Vec<Result<Vec<LabeledSample>, DatasetError>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let count = base + usize::from(s < remainder);
            let quota = quota_base + usize::from(s < quota_rem);
            generate_shard(
                shard_seed(spec.rng_seed, s),
                count,
                quota,
                spec.max_attempts / shards as u64,
                limits,
            )
        })
        .collect();

    let mut out = Vec::with_capacity(spec.total_count);
    for r in shard_results {
        out.extend(r?);
    }
    Ok(out)
}

/// Per-label histogram.
pub fn label_counts(samples: &[LabeledSample]) -> [usize; LABEL_COUNT] {
    let mut counts = [0usize; LABEL_COUNT];
    for s in samples {
        counts[(s.label - 1) as usize] += 1;
    }
    counts
}

/// Stratified shuffled split into (train, test). Per label class, a
/// `fraction` share (rounded) goes to train; the split is disjoint,
/// exhaustive, and reproducible from the seed.
pub fn split(
    samples: &[LabeledSample],
    fraction: f64,
    seed: u64,
) -> (Vec<LabeledSample>, Vec<LabeledSample>) {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); LABEL_COUNT];
    for (i, s) in samples.iter().enumerate() {
        by_label[(s.label - 1) as usize].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for stratum in &mut by_label {
        stratum.shuffle(&mut rng);
        let n_train = (fraction * stratum.len() as f64).round() as usize;
        for (k, &i) in stratum.iter().enumerate() {
            if k < n_train {
                train.push(samples[i].clone());
            } else {
                test.push(samples[i].clone());
            }
        }
    }
    // Shuffle across strata so batches are not label-ordered.
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    (train, test)
}

// ---------------------------------------------------------------------------
// Binary storage: fixed-width little-endian records behind a JSON header.

const MAGIC: &[u8; 8] = b"DULADSv1";
const RECORD_BYTES: usize = 10 * 8 + 3 * 8 + 2 + 9 + 1;

/// Header of the binary dataset format, JSON-encoded after the magic bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub spec: DatasetSpec,
    pub label_counts: [usize; LABEL_COUNT],
    /// Field layout documentation for external readers.
    pub record_layout: String,
}

fn mode_to_u8(m: LoadMode) -> u8 {
    match m {
        LoadMode::Intermittent => 0,
        LoadMode::StaticOrRepeated => 1,
        LoadMode::Shock => 2,
    }
}

fn mode_from_u8(b: u8) -> Result<LoadMode, DatasetError> {
    match b {
        0 => Ok(LoadMode::Intermittent),
        1 => Ok(LoadMode::StaticOrRepeated),
        2 => Ok(LoadMode::Shock),
        _ => Err(DatasetError::Malformed(format!("bad load mode byte {b}"))),
    }
}

fn encode_record(s: &LabeledSample, buf: &mut Vec<u8>) {
    for a in &s.posture.angles {
        buf.extend_from_slice(&a.to_le_bytes());
    }
    let c = &s.context;
    buf.extend_from_slice(&c.arm_load_kg.to_le_bytes());
    buf.extend_from_slice(&c.body_load_kg.to_le_bytes());
    buf.extend_from_slice(&c.neck_angle_deg.to_le_bytes());
    buf.push(mode_to_u8(c.arm_load_mode));
    buf.push(mode_to_u8(c.body_load_mode));
    for flag in [
        c.arm_static_or_repeated,
        c.body_static_or_repeated,
        c.neck_twist,
        c.neck_side_bend,
        c.legs_and_feet_supported,
        c.arm_supported_or_leaning,
        c.shoulder_raised,
        c.working_across_midline,
        c.wrist_bent_from_midline,
    ] {
        buf.push(u8::from(flag));
    }
    buf.push(s.label);
}

fn decode_record(rec: &[u8]) -> Result<LabeledSample, DatasetError> {
    let f64_at = |i: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&rec[i * 8..i * 8 + 8]);
        f64::from_le_bytes(b)
    };
    let mut angles = [0.0; DOF];
    for (i, a) in angles.iter_mut().enumerate() {
        *a = f64_at(i);
    }
    let arm_load_kg = f64_at(10);
    let body_load_kg = f64_at(11);
    let neck_angle_deg = f64_at(12);
    let tail = &rec[13 * 8..];
    let context = TaskContext {
        arm_load_kg,
        body_load_kg,
        neck_angle_deg,
        arm_load_mode: mode_from_u8(tail[0])?,
        body_load_mode: mode_from_u8(tail[1])?,
        arm_static_or_repeated: tail[2] != 0,
        body_static_or_repeated: tail[3] != 0,
        neck_twist: tail[4] != 0,
        neck_side_bend: tail[5] != 0,
        legs_and_feet_supported: tail[6] != 0,
        arm_supported_or_leaning: tail[7] != 0,
        shoulder_raised: tail[8] != 0,
        working_across_midline: tail[9] != 0,
        wrist_bent_from_midline: tail[10] != 0,
    };
    Ok(LabeledSample {
        posture: Posture::new(angles),
        context,
        label: tail[11],
    })
}

/// Writes a dataset file: magic, u32 header length, JSON header, then
/// fixed-width records.
pub fn write_dataset(
    path: &Path,
    samples: &[LabeledSample],
    spec: &DatasetSpec,
) -> Result<(), DatasetError> {
    let header = DatasetHeader {
        schema_version: 1,
        spec: spec.clone(),
        label_counts: label_counts(samples),
        record_layout: "10×f64 angles(rad), f64 arm_load_kg, f64 body_load_kg, \
                        f64 neck_angle_deg, u8 arm_mode, u8 body_mode, \
                        9×u8 flags(arm_static, body_static, neck_twist, neck_side, \
                        legs_supported, arm_supported, shoulder_raised, across_midline, \
                        wrist_bent), u8 label; little-endian"
            .to_string(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| DatasetError::Malformed(e.to_string()))?;

    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header_json.len() as u32).to_le_bytes())?;
    w.write_all(&header_json)?;
    let mut buf = Vec::with_capacity(RECORD_BYTES);
    for s in samples {
        buf.clear();
        encode_record(s, &mut buf);
        debug_assert_eq!(buf.len(), RECORD_BYTES);
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset file written by [`write_dataset`].
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<LabeledSample>), DatasetError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DatasetError::Malformed("bad magic".into()));
    }
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    r.read_exact(&mut header_json)?;
    let header: DatasetHeader = serde_json::from_slice(&header_json)
        .map_err(|e| DatasetError::Malformed(e.to_string()))?;

    let mut samples = Vec::with_capacity(header.spec.total_count);
    let mut rec = vec![0u8; RECORD_BYTES];
    loop {
        match r.read_exact(&mut rec) {
            Ok(()) => samples.push(decode_record(&rec)?),
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok((header, samples))
}

/// Plain CSV export (one row per sample) for spot checks and plotting.
pub fn export_csv(path: &Path, samples: &[LabeledSample]) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let mut cols: Vec<String> = crate::kinematics::joint::NAMES
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(
        [
            "arm_static",
            "arm_load_kg",
            "arm_load_mode",
            "body_static",
            "body_load_kg",
            "body_load_mode",
            "neck_angle_deg",
            "neck_twist",
            "neck_side_bend",
            "legs_supported",
            "arm_supported",
            "shoulder_raised",
            "across_midline",
            "wrist_bent",
            "label",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    writeln!(w, "{}", cols.join(","))?;
    for s in samples {
        let c = &s.context;
        let mut row: Vec<String> = s.posture.angles.iter().map(|a| format!("{a}")).collect();
        row.extend([
            u8::from(c.arm_static_or_repeated).to_string(),
            format!("{}", c.arm_load_kg),
            mode_to_u8(c.arm_load_mode).to_string(),
            u8::from(c.body_static_or_repeated).to_string(),
            format!("{}", c.body_load_kg),
            mode_to_u8(c.body_load_mode).to_string(),
            format!("{}", c.neck_angle_deg),
            u8::from(c.neck_twist).to_string(),
            u8::from(c.neck_side_bend).to_string(),
            u8::from(c.legs_and_feet_supported).to_string(),
            u8::from(c.arm_supported_or_leaning).to_string(),
            u8::from(c.shoulder_raised).to_string(),
            u8::from(c.working_across_midline).to_string(),
            u8::from(c.wrist_bent_from_midline).to_string(),
            s.label.to_string(),
        ]);
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
