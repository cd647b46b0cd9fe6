//! Supervised training on a single source domain with validation-based
//! model selection.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{seeded_permutation, DatasetSplit, Window};
use crate::error::{Error, Result};
use crate::model::{argmax_rows, Model, ModelConfig};
use crate::numerics::{adam_step, AdamConfig, AdamState, Tape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from the base rate to zero over the run.
    Cosine,
    /// Multiply the rate by `factor` every `every` epochs.
    Step { every: usize, factor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Samples per forward/backward pass inside a batch. Only memory use
    /// depends on it.
    pub micro_batch: usize,
    /// L2 penalty coefficient added to every gradient.
    pub weight_decay: f64,
    /// Global gradient-norm ceiling.
    pub grad_clip: Option<f64>,
    pub schedule: LrSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 512,
            epochs: 150,
            seed: 0,
            adam: AdamConfig::default(),
            micro_batch: 64,
            weight_decay: 0.0,
            grad_clip: None,
            schedule: LrSchedule::Constant,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.micro_batch == 0 {
            return Err(Error::Config("micro batch must be at least 1".into()));
        }
        if !(self.adam.lr > 0.0) || !self.adam.lr.is_finite() {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight decay must be non-negative".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Config("gradient clip must be positive".into()));
            }
        }
        if let LrSchedule::Step { every, factor } = self.schedule {
            if every == 0 || !(factor > 0.0) {
                return Err(Error::Config("step schedule needs every ≥ 1 and factor > 0".into()));
            }
        }
        Ok(())
    }

    /// Learning rate used during 0-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let base = self.adam.lr;
        match self.schedule {
            LrSchedule::Constant => base,
            LrSchedule::Cosine => base * 0.5 * (1.0 + (PI * epoch as f64 / self.epochs as f64).cos()),
            LrSchedule::Step { every, factor } => base * factor.powi((epoch / every) as i32),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's training samples.
    pub train_loss: f64,
    /// Fraction in `[0, 1]`.
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub source: String,
    pub seed: u64,
    pub train_windows: usize,
    pub val_windows: usize,
    pub param_count: usize,
    /// Validation accuracy of the initial parameters.
    pub initial_val_accuracy: f64,
    pub epochs: Vec<EpochRecord>,
    /// 0 means the initial parameters were never beaten.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub checkpoint: Option<String>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// Labels and class probabilities for a batch of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub labels: Vec<usize>,
    /// `[samples, classes]`.
    pub probabilities: Tensor,
}

const EVAL_CHUNK: usize = 256;

fn softmax_rows(logits: &Tensor) -> Tensor {
    let k = logits.cols();
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.values().chunks(k) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
        out.extend(row.iter().map(|v| (v - max).exp() / z));
    }
    Tensor::new(logits.shape().to_vec(), out).expect("same shape")
}

/// Argmax predictions (lowest index on ties) with softmax probabilities.
pub fn predict(model: &Model, features: &[Tensor]) -> Result<Predictions> {
    let k = model.config().classes;
    let mut labels = Vec::with_capacity(features.len());
    let mut probs = Vec::with_capacity(features.len() * k);
    for chunk in features.chunks(EVAL_CHUNK) {
        let refs: Vec<&Tensor> = chunk.iter().collect();
        let logits = model.logits(&refs)?;
        labels.extend(argmax_rows(&logits));
        probs.extend_from_slice(softmax_rows(&logits).values());
    }
    Ok(Predictions {
        labels,
        probabilities: Tensor::new(vec![features.len(), k], probs)?,
    })
}

/// Features for every window under `model`'s feature mode.
pub fn featurize_windows(model: &Model, windows: &[Window]) -> Result<Vec<Tensor>> {
    windows.iter().map(|w| model.featurize(&w.values)).collect()
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // splitmix64 finalizer over (seed, epoch)
    let mut z = seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One optimizer step on `batch`; returns the summed (not mean) loss.
fn train_batch(
    model: &mut Model,
    features: &[Tensor],
    labels: &[usize],
    batch: &[usize],
    cfg: &TrainConfig,
    adam: &mut AdamState,
    lr: f64,
) -> Result<f64> {
    let b = batch.len() as f64;
    let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();
    let mut loss_sum = 0.0;
    for chunk in batch.chunks(cfg.micro_batch) {
        let refs: Vec<&Tensor> = chunk.iter().map(|&i| &features[i]).collect();
        let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
        let mut tape = Tape::new();
        let p = model.bind(&mut tape)?;
        let out = model.forward(&mut tape, &p, &refs)?;
        let loss = tape.cross_entropy(out.logits, &ys)?;
        let weight = chunk.len() as f64;
        loss_sum += tape.value(loss).values()[0] * weight;
        let g = tape.backward(loss)?;
        for (name, var) in p.iter() {
            let mut gv = g.get(var);
            gv.values_mut().iter_mut().for_each(|v| *v *= weight / b);
            match grads.get_mut(name) {
                Some(acc) => acc
                    .values_mut()
                    .iter_mut()
                    .zip(gv.values())
                    .for_each(|(a, v)| *a += v),
                None => {
                    grads.insert(name.to_string(), gv);
                }
            }
        }
    }
    if cfg.weight_decay > 0.0 {
        for (name, g) in grads.iter_mut() {
            let w = model.params().require(name)?;
            g.values_mut()
                .iter_mut()
                .zip(w.values())
                .for_each(|(g, w)| *g += cfg.weight_decay * w);
        }
    }
    if let Some(limit) = cfg.grad_clip {
        let norm = grads
            .values()
            .flat_map(|g| g.values().iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if norm > limit {
            let s = limit / norm;
            grads
                .values_mut()
                .for_each(|g| g.values_mut().iter_mut().for_each(|v| *v *= s));
        }
    }
    let step_cfg = AdamConfig { lr, ..cfg.adam };
    adam_step(model.params_mut(), &grads, adam, &step_cfg)?;
    Ok(loss_sum)
}

/// Trains on `split.train`, selecting the parameters with the best
/// validation accuracy. `progress` is called after every epoch.
pub fn fit_with_progress(
    split: &DatasetSplit,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<(Model, TrainReport)> {
    let started = Instant::now();
    train_config.validate()?;
    model_config.validate()?;
    if split.train.is_empty() {
        return Err(Error::Data("training partition is empty".into()));
    }
    if split.val.is_empty() {
        return Err(Error::Data("validation partition is empty".into()));
    }
    let source = split.train[0].provenance.dataset.clone();
    if let Some(w) = split
        .train
        .iter()
        .chain(&split.val)
        .find(|w| w.provenance.dataset != source)
    {
        return Err(Error::Data(format!(
            "training uses one source domain, found both {source} and {}",
            w.provenance.dataset
        )));
    }
    if let Some(w) = split
        .train
        .iter()
        .chain(&split.val)
        .find(|w| w.label.index() >= model_config.classes)
    {
        return Err(Error::Label {
            label: w.label.index(),
            classes: model_config.classes,
        });
    }

    let mut model = Model::new(model_config.clone(), train_config.seed)?;
    let train_x = featurize_windows(&model, &split.train)?;
    let train_y: Vec<usize> = split.train.iter().map(|w| w.label.index()).collect();
    let val_x = featurize_windows(&model, &split.val)?;
    let val_y: Vec<usize> = split.val.iter().map(|w| w.label.index()).collect();

    let val_acc = |m: &Model| -> Result<f64> { Ok(accuracy(&predict(m, &val_x)?.labels, &val_y)) };
    let initial = val_acc(&model)?;
    let mut best = (0, initial, model.params().clone());
    let mut adam = AdamState::new();
    let mut epochs = Vec::with_capacity(train_config.epochs);
    for e in 0..train_config.epochs {
        let order = seeded_permutation(train_x.len(), epoch_seed(train_config.seed, e));
        let lr = train_config.lr_at(e);
        let mut loss = 0.0;
        for batch in order.chunks(train_config.batch_size) {
            loss += train_batch(&mut model, &train_x, &train_y, batch, train_config, &mut adam, lr)?;
        }
        let record = EpochRecord {
            epoch: e + 1,
            train_loss: loss / train_x.len() as f64,
            val_accuracy: val_acc(&model)?,
        };
        if record.val_accuracy > best.1 {
            best = (e + 1, record.val_accuracy, model.params().clone());
        }
        progress(&record);
        epochs.push(record);
    }
    let (best_epoch, best_val_accuracy, params) = best;
    let model = Model::from_params(model_config.clone(), params)?;
    let report = TrainReport {
        source,
        seed: train_config.seed,
        train_windows: train_x.len(),
        val_windows: val_x.len(),
        param_count: model.param_count(),
        initial_val_accuracy: initial,
        epochs,
        best_epoch,
        best_val_accuracy,
        checkpoint: None,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

pub fn fit(split: &DatasetSplit, model_config: &ModelConfig, train_config: &TrainConfig) -> Result<(Model, TrainReport)> {
    fit_with_progress(split, model_config, train_config, &mut |_| {})
}

#[cfg(test)]
mod tests;
