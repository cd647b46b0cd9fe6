use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::{Activity, Provenance};

const T: usize = 16;

fn small_model() -> ModelConfig {
    ModelConfig {
        window_len: T,
        d_model: 16,
        d_ff: 16,
        ..ModelConfig::default()
    }
}

/// Class 0 oscillates at bin 2, class 1 at bin 5; phase and gain vary.
fn separable_windows(n: usize, seed: u64) -> Vec<Window> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Activity::Still } else { Activity::Walking };
            let bin = if label == Activity::Still { 2.0 } else { 5.0 };
            let mut values = Vec::with_capacity(6 * T);
            for _ in 0..6 {
                let phase = rng.gen_range(0.0..2.0 * PI);
                let gain = rng.gen_range(0.5..1.5);
                for t in 0..T {
                    let x = gain * (2.0 * PI * bin * t as f64 / T as f64 + phase).sin();
                    values.push(x + rng.gen_range(-0.05..0.05));
                }
            }
            Window {
                values: Tensor::new(vec![6, T], values).unwrap(),
                label,
                provenance: Provenance {
                    dataset: "toy".into(),
                    subject: (i % 5).to_string(),
                    device: "d".into(),
                    session: "s".into(),
                    start: i * T,
                },
            }
        })
        .collect()
}

fn toy_split() -> DatasetSplit {
    DatasetSplit {
        seed: 0,
        train: separable_windows(64, 1),
        val: separable_windows(16, 2),
        test: separable_windows(16, 3),
    }
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        epochs,
        micro_batch: 8,
        adam: AdamConfig {
            lr: 3e-3,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    }
}

#[test]
fn learns_separable_spectra() {
    let split = toy_split();
    let (model, report) = fit(&split, &small_model(), &quick(50)).unwrap();
    let x = featurize_windows(&model, &split.train).unwrap();
    let y: Vec<usize> = split.train.iter().map(|w| w.label.index()).collect();
    let acc = accuracy(&predict(&model, &x).unwrap().labels, &y);
    assert!(acc >= 0.99, "train accuracy {acc}");
    assert_eq!(report.epochs.len(), 50);
    assert!(report.best_val_accuracy >= report.initial_val_accuracy);

    let losses: Vec<f64> = report.epochs.iter().map(|e| e.train_loss).collect();
    let violations: Vec<f64> = losses[5..]
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0.0)
        .collect();
    assert!(
        violations.len() <= 3 && violations.iter().all(|&d| d <= 1e-3),
        "loss increases {violations:?}"
    );
}

#[test]
fn same_seed_is_bitwise_reproducible() {
    let split = toy_split();
    let (a, ra) = fit(&split, &small_model(), &quick(3)).unwrap();
    let (b, rb) = fit(&split, &small_model(), &quick(3)).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(
        serde_json::to_string(&ra).unwrap(),
        serde_json::to_string(&rb).unwrap()
    );
    let other = TrainConfig { seed: 9, ..quick(3) };
    let (c, _) = fit(&split, &small_model(), &other).unwrap();
    assert_ne!(a.params(), c.params());
}

#[test]
fn micro_batch_size_only_changes_rounding() {
    let split = toy_split();
    let (a, _) = fit(&split, &small_model(), &quick(2)).unwrap();
    let whole = TrainConfig { micro_batch: 16, ..quick(2) };
    let (b, _) = fit(&split, &small_model(), &whole).unwrap();
    for (name, t) in a.params().iter() {
        assert!(t.max_abs_diff(b.params().get(name).unwrap()) < 1e-9, "{name}");
    }
}

#[test]
fn memorizes_a_single_sample() {
    let w = separable_windows(2, 4);
    let split = DatasetSplit {
        seed: 0,
        train: vec![w[1].clone()],
        val: vec![w[1].clone()],
        test: vec![],
    };
    let (model, _) = fit(&split, &small_model(), &quick(30)).unwrap();
    let x = featurize_windows(&model, &split.train).unwrap();
    assert_eq!(predict(&model, &x).unwrap().labels, vec![w[1].label.index()]);
}

#[test]
fn rejects_bad_configs_and_splits() {
    let split = toy_split();
    for cfg in [
        TrainConfig { epochs: 0, ..quick(1) },
        TrainConfig { batch_size: 0, ..quick(1) },
        TrainConfig { grad_clip: Some(0.0), ..quick(1) },
    ] {
        assert!(matches!(fit(&split, &small_model(), &cfg), Err(Error::Config(_))));
    }
    let empty = DatasetSplit { train: vec![], ..toy_split() };
    assert!(matches!(fit(&empty, &small_model(), &quick(1)), Err(Error::Data(_))));
    let mut mixed = toy_split();
    mixed.val[0].provenance.dataset = "other".into();
    assert!(matches!(fit(&mixed, &small_model(), &quick(1)), Err(Error::Data(_))));
}

#[test]
fn optional_regularizers_run() {
    let cfg = TrainConfig {
        weight_decay: 1e-4,
        grad_clip: Some(1.0),
        schedule: LrSchedule::Cosine,
        ..quick(2)
    };
    let (_, report) = fit(&toy_split(), &small_model(), &cfg).unwrap();
    assert!(report.epochs.iter().all(|e| e.train_loss.is_finite()));
    let step = TrainConfig {
        schedule: LrSchedule::Step { every: 2, factor: 0.5 },
        ..quick(6)
    };
    assert_eq!(step.lr_at(0), 3e-3);
    assert_eq!(step.lr_at(5), 3e-3 * 0.25);
    assert_eq!(cfg.lr_at(0), 3e-3);
}

#[test]
fn predictions_preserve_order_and_break_ties_low() {
    let model = Model::new(small_model(), 0).unwrap();
    let windows = separable_windows(7, 5);
    let x = featurize_windows(&model, &windows).unwrap();
    let p = predict(&model, &x).unwrap();
    assert_eq!(p.labels.len(), 7);
    for (i, f) in x.iter().enumerate() {
        assert_eq!(p.labels[i], model.predict(&[f]).unwrap()[0]);
        let row_sum: f64 = p.probabilities.row(i).iter().sum();
        assert!((row_sum - 1.0).abs() < 1e-12);
    }
    let uniform = Tensor::zeros(&[1, 4]);
    assert_eq!(argmax_rows(&uniform), vec![0]);
}

#[test]
fn progress_sees_every_epoch() {
    let mut seen = Vec::new();
    fit_with_progress(&toy_split(), &small_model(), &quick(4), &mut |r| seen.push(r.epoch)).unwrap();
    assert_eq!(seen, vec![1, 2, 3, 4]);
}
