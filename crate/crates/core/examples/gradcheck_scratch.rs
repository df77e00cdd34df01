//! Scratch: finite-difference check of weight gradients + overfit capacity probe.

use dula_core::dataset::{generate_balanced, DatasetSpec};
use dula_core::kinematics::JointLimits;
use dula_core::surrogate::{
    evaluate, featurize_matrix, train, Normalization, OptimizerKind, TrainConfig,
};

fn main() {
    let limits = JointLimits::default();
    let norm = Normalization::default();

    // Capacity probe: overfit 2000 samples hard.
    let data = generate_balanced(&DatasetSpec::new(2_000, 5), &limits).unwrap();
    let cfg = TrainConfig {
        epochs: 2_000,
        learning_rate: 0.001,
        batch_size: 128,
        rng_seed: 3,
        optimizer: OptimizerKind::adam(),
        grad_chunks: 2,
        ..TrainConfig::default()
    };
    let t = std::time::Instant::now();
    let (model, metrics) = train(&data, &cfg, &norm).unwrap();
    println!(
        "overfit 2000 samples, 2000 epochs in {:.0}s: final train loss {:.5}",
        t.elapsed().as_secs_f64(),
        metrics.epoch_loss.last().unwrap()
    );
    let report = evaluate(&model, &data);
    println!("train-set accuracy {:.4}", report.accuracy);
    let (x, _) = featurize_matrix(&norm, &data);
    let preds = model.predict_batch(&x.view());
    let mut worst = 0.0f64;
    for (p, s) in preds.iter().zip(&data) {
        worst = worst.max((p - f64::from(s.label)).abs());
    }
    println!("worst abs error on train set: {:.3}", worst);
    let every = metrics.epoch_loss.len() / 10;
    let curve: Vec<String> = metrics
        .epoch_loss
        .iter()
        .step_by(every.max(1))
        .map(|l| format!("{l:.4}"))
        .collect();
    println!("loss curve: {curve:?}");
}
