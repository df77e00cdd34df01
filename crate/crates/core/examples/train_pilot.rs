//! Scratch pilot: training speed and accuracy at increasing scale.

use dula_core::dataset::{generate_balanced, split, DatasetSpec};
use dula_core::kinematics::JointLimits;
use dula_core::surrogate::{evaluate, train, Normalization, OptimizerKind, TrainConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(50_000);
    let epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(30);
    let batch: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1024);

    let limits = JointLimits::default();
    let norm = Normalization::default();

    let t = Instant::now();
    let spec = DatasetSpec::new(n, 20250810);
    let data = generate_balanced(&spec, &limits).unwrap();
    println!("generated {} samples in {:.1}s", data.len(), t.elapsed().as_secs_f64());
    let counts = dula_core::dataset::label_counts(&data);
    println!("label counts: {counts:?}");

    let (train_set, test_set) = split(&data, 0.8, spec.rng_seed);

    let cfg = TrainConfig {
        epochs,
        learning_rate: 0.001,
        batch_size: batch,
        rng_seed: 7,
        optimizer: OptimizerKind::adam(),
        lr_schedule: dula_core::surrogate::LrSchedule::StepDecay {
            every_epochs: args.get(4).map(|s| s.parse().unwrap()).unwrap_or(80),
            factor: 0.5,
            min_rate: 1e-5,
        },
        grad_chunks: 2,
        ..TrainConfig::default()
    };
    let t = Instant::now();
    let (model, metrics) = train(&train_set, &cfg, &norm).unwrap();
    let train_time = t.elapsed().as_secs_f64();
    println!(
        "trained {} epochs in {:.1}s ({:.2}s/epoch), final loss {:.4}",
        epochs,
        train_time,
        train_time / epochs as f64,
        metrics.epoch_loss.last().unwrap()
    );

    let report = evaluate(&model, &test_set);
    println!("test accuracy: {:.4}", report.accuracy);
    println!("min diagonal: {:.4}", report.confusion.min_diagonal_accuracy());
    let per = report.confusion.per_class_accuracy();
    let per: Vec<String> = per
        .iter()
        .map(|a| a.map(|v| format!("{:.3}", v)).unwrap_or_else(|| "-".into()))
        .collect();
    println!("per-class: {per:?}");
    // loss curve tail
    let k = metrics.epoch_loss.len();
    let tail: Vec<String> = metrics.epoch_loss[k.saturating_sub(8)..]
        .iter()
        .map(|l| format!("{l:.4}"))
        .collect();
    println!("loss tail: {tail:?}");
}
