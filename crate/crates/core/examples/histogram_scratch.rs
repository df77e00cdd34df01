//! Scratch calibration: label histograms under candidate limit boxes and
//! context samplers.

use dula_core::kinematics::{JointLimits, Posture, DOF};
use dula_core::rula::{rula, LoadMode, TaskContext};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const D2R: f64 = std::f64::consts::PI / 180.0;

fn limits_variant(v: u32) -> JointLimits {
    let deg = |lo: f64, hi: f64| (lo * D2R, hi * D2R);
    let table: [(f64, f64); DOF] = match v {
        // current anatomical box
        0 => [
            (-30.0, 75.0),
            (-30.0, 30.0),
            (-45.0, 45.0),
            (-60.0, 180.0),
            (-30.0, 120.0),
            (-90.0, 90.0),
            (-5.0, 150.0),
            (-85.0, 85.0),
            (-70.0, 80.0),
            (-25.0, 25.0),
        ],
        // seated working range A
        1 => [
            (-15.0, 40.0),
            (-20.0, 20.0),
            (-25.0, 25.0),
            (-30.0, 120.0),
            (-20.0, 60.0),
            (-90.0, 90.0),
            (-5.0, 145.0),
            (-80.0, 80.0),
            (-45.0, 55.0),
            (-20.0, 20.0),
        ],
        // seated working range B (tighter trunk/wrist)
        2 => [
            (-10.0, 30.0),
            (-18.0, 18.0),
            (-20.0, 20.0),
            (-30.0, 110.0),
            (-20.0, 50.0),
            (-90.0, 90.0),
            (-5.0, 140.0),
            (-75.0, 75.0),
            (-35.0, 45.0),
            (-18.0, 18.0),
        ],
        // seated working range C
        _ => [
            (-10.0, 25.0),
            (-18.0, 18.0),
            (-18.0, 18.0),
            (-30.0, 110.0),
            (-20.0, 45.0),
            (-90.0, 90.0),
            (-5.0, 140.0),
            (-70.0, 70.0),
            (-25.0, 35.0),
            (-15.0, 15.0),
        ],
    };
    let mut lim = JointLimits::default();
    for i in 0..DOF {
        let (lo, hi) = deg(table[i].0, table[i].1);
        lim.lower[i] = lo;
        lim.upper[i] = hi;
    }
    lim
}

fn mode(rng: &mut impl Rng, p_int: f64, p_static: f64) -> LoadMode {
    let u: f64 = rng.random();
    if u < p_int {
        LoadMode::Intermittent
    } else if u < p_int + p_static {
        LoadMode::StaticOrRepeated
    } else {
        LoadMode::Shock
    }
}

fn ctx_soft(rng: &mut ChaCha8Rng, v: u32) -> TaskContext {
    fn load(rng: &mut ChaCha8Rng) -> f64 {
        12.0 * rng.random::<f64>().powi(3)
    }
    match v {
        0 => TaskContext {
            arm_static_or_repeated: rng.random_bool(0.5),
            body_static_or_repeated: rng.random_bool(0.5),
            arm_load_kg: rng.random_range(0.0..=15.0),
            arm_load_mode: mode(rng, 1.0 / 3.0, 1.0 / 3.0),
            body_load_kg: rng.random_range(0.0..=15.0),
            body_load_mode: mode(rng, 1.0 / 3.0, 1.0 / 3.0),
            neck_angle_deg: rng.random_range(-30.0..=45.0),
            neck_twist: rng.random_bool(0.5),
            neck_side_bend: rng.random_bool(0.5),
            legs_and_feet_supported: rng.random_bool(0.5),
            arm_supported_or_leaning: rng.random_bool(0.5),
            shoulder_raised: false,
            working_across_midline: false,
            wrist_bent_from_midline: false,
        },
        1 => TaskContext {
            arm_static_or_repeated: rng.random_bool(0.35),
            body_static_or_repeated: rng.random_bool(0.35),
            arm_load_kg: load(rng),
            arm_load_mode: mode(rng, 0.75, 0.2),
            body_load_kg: load(rng),
            body_load_mode: mode(rng, 0.75, 0.2),
            neck_angle_deg: rng.random_range(-5.0..=25.0),
            neck_twist: rng.random_bool(0.25),
            neck_side_bend: rng.random_bool(0.25),
            legs_and_feet_supported: rng.random_bool(0.7),
            arm_supported_or_leaning: rng.random_bool(0.5),
            shoulder_raised: false,
            working_across_midline: false,
            wrist_bent_from_midline: false,
        },
        _ => TaskContext {
            arm_static_or_repeated: rng.random_bool(0.25),
            body_static_or_repeated: rng.random_bool(0.25),
            arm_load_kg: 10.0 * rng.random::<f64>().powi(3),
            arm_load_mode: mode(rng, 0.75, 0.2),
            body_load_kg: 10.0 * rng.random::<f64>().powi(3),
            body_load_mode: mode(rng, 0.75, 0.2),
            neck_angle_deg: rng.random_range(-5.0..=22.0),
            neck_twist: rng.random_bool(0.15),
            neck_side_bend: rng.random_bool(0.15),
            legs_and_feet_supported: rng.random_bool(0.75),
            arm_supported_or_leaning: rng.random_bool(0.5),
            shoulder_raised: false,
            working_across_midline: false,
            wrist_bent_from_midline: false,
        },
    }
}

fn main() {
    let n = 50_000;
    for (lv, cv) in [(3, 2)] {
        let limits = limits_variant(lv);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 7];
        let mut sub = [0.0f64; 10];
        for _ in 0..n {
            let mut q = Posture::zero();
            for i in 0..DOF {
                q.angles[i] = rng.random_range(limits.lower[i]..limits.upper[i]);
            }
            let c = ctx_soft(&mut rng, cv);
            let b = rula(&q, &c).unwrap();
            counts[(b.grand - 1) as usize] += 1;
            for (k, v) in [
                b.upper_arm, b.lower_arm, b.wrist, b.wrist_twist, b.neck, b.trunk, b.legs,
                b.table_a, b.score_c, b.score_d,
            ]
            .iter()
            .enumerate()
            {
                sub[k] += *v as f64;
            }
        }
        let pct: Vec<String> = counts
            .iter()
            .map(|c| format!("{:.1}", 100.0 * *c as f64 / n as f64))
            .collect();
        let mid = counts[2] + counts[3] + counts[4];
        println!(
            "limits v{lv} ctx v{cv}: labels% {:?}  mid(3-5) {:.1}%",
            pct,
            100.0 * mid as f64 / n as f64
        );
        let means: Vec<String> = sub.iter().map(|s| format!("{:.2}", s / n as f64)).collect();
        println!("  ua/la/w/wt/neck/trunk/legs/tA/C/D: {:?}", means);
    }
}
