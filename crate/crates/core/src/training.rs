//! Mean-squared-error loss, Adam, and the epoch loop that records train and
//! validation loss curves.

use crate::dataset::{SplitDataset, WindowPair};
use crate::error::{Result, TnmError};
use crate::io::fmt_f64;
use crate::model::{Gradients, TnmModel};
use crate::tensor::FeatureVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::{Duration, Instant};

/// Any recorded loss above this aborts training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Samples per parallel work unit. Partial sums are combined in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// One update per epoch from the gradient over the whole training block.
    FullBatch,
    /// Shuffled mini-batches of the given size, one update per batch.
    MiniBatch(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub batch: BatchMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 60,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            batch: BatchMode::MiniBatch(8),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TnmError::Config("learning_rate must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(TnmError::Config(format!(
                    "{name} must lie in (0, 1), got {b}"
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(TnmError::Config("epsilon must be positive".into()));
        }
        if self.batch == BatchMode::MiniBatch(0) {
            return Err(TnmError::Config("mini-batch size must be positive".into()));
        }
        Ok(())
    }
}

/// `(1 / (N d)) * sum (p - t)^2` over all samples and coordinates.
pub fn mse<P: AsRef<[f64]>, T: AsRef<[f64]>>(predictions: &[P], targets: &[T]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(TnmError::InsufficientData { needed: 1, got: 0 });
    }
    if predictions.len() != targets.len() {
        return Err(TnmError::Shape {
            axis: "samples",
            expected: predictions.len(),
            got: targets.len(),
        });
    }
    let d = predictions[0].as_ref().len();
    let mut sum = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        let (p, t) = (p.as_ref(), t.as_ref());
        if p.len() != d || t.len() != d {
            return Err(TnmError::Shape {
                axis: "feature",
                expected: d,
                got: if p.len() != d { p.len() } else { t.len() },
            });
        }
        sum += p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(sum / (predictions.len() * d) as f64)
}

/// Derivative of [`mse`] with respect to one prediction of an `n`-sample batch.
pub fn mse_gradient(prediction: &[f64], target: &[f64], n: usize) -> FeatureVector {
    let scale = 2.0 / (n * prediction.len()) as f64;
    FeatureVector::from_raw(
        prediction
            .iter()
            .zip(target)
            .map(|(p, t)| scale * (p - t))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &TnmModel) -> Self {
        let shapes: Vec<usize> = model.tensors().map(|t| t.len()).collect();
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }
}

/// Elementwise bias-corrected Adam update of one parameter block. `t` is the
/// step number after incrementing (first step is 1).
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &TrainConfig,
) {
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

pub fn adam_step(
    model: &mut TnmModel,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.tensors().count() != state.m.len() {
        return Err(TnmError::Invariant(
            "gradients do not mirror optimizer state".into(),
        ));
    }
    state.t += 1;
    let t = state.t;
    for (((w, g), m), v) in model
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        if w.len() != g.len() || w.len() != m.len() {
            return Err(TnmError::Invariant("gradient shape mismatch".into()));
        }
        adam_update(w.values_mut(), g.values(), m, v, t, cfg);
    }
    Ok(())
}

/// Sum over `batch` of the weight gradients of `mse(batch)`.
pub fn batch_gradient(model: &TnmModel, batch: &[&WindowPair]) -> Result<Gradients> {
    let n = batch.len();
    let partials = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = Gradients::zeros_like(model);
            for pair in chunk {
                let window = window_vectors(pair);
                let (pred, cache) = model.forward(&window)?;
                let target = pair.target.to_array();
                let up = mse_gradient(pred.as_slice(), &target, n);
                model.backward_into(&cache, up.as_slice(), &mut g)?;
            }
            Ok(g)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut iter = partials.into_iter();
    let mut total = iter.next().unwrap_or_else(|| Gradients::zeros_like(model));
    for g in iter {
        total.add_assign(&g);
    }
    Ok(total)
}

/// Mean squared error of the model over `pairs`, in whatever units the pairs
/// are expressed in.
pub fn dataset_loss(model: &TnmModel, pairs: &[WindowPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(TnmError::InsufficientData { needed: 1, got: 0 });
    }
    let partials = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sum = 0.0;
            for pair in chunk {
                let pred = model.predict(&window_arrays(pair))?;
                sum += pred
                    .iter()
                    .zip(pair.target.to_array())
                    .map(|(p, t)| (p - t) * (p - t))
                    .sum::<f64>();
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(partials.iter().sum::<f64>() / (pairs.len() * 3) as f64)
}

pub(crate) fn window_arrays(pair: &WindowPair) -> [[f64; 3]; 7] {
    pair.window.map(|s| s.to_array())
}

fn window_vectors(pair: &WindowPair) -> Vec<FeatureVector> {
    pair.window
        .iter()
        .map(|s| FeatureVector::from_raw(s.to_array().to_vec()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: TnmModel,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub wall_time: Duration,
}

impl TrainReport {
    /// CSV `epoch,train_loss,val_loss`, epochs counted from 1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,train_loss,val_loss")?;
        for (i, (t, v)) in self.train_loss.iter().zip(&self.val_loss).enumerate() {
            writeln!(out, "{},{},{}", i + 1, fmt_f64(*t), fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// Trains for `cfg.epochs` epochs. After each epoch the train and validation
/// MSE (standardized units) are recorded with the updated weights.
pub fn fit(mut model: TnmModel, data: &SplitDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.train.is_empty() || data.val.is_empty() {
        return Err(TnmError::InsufficientData { needed: 1, got: 0 });
    }
    if model.topology().d() != 3 {
        return Err(TnmError::Shape {
            axis: "feature",
            expected: 3,
            got: model.topology().d(),
        });
    }
    let start = Instant::now();
    let mut state = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut val_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        match cfg.batch {
            BatchMode::FullBatch => {
                let batch: Vec<&WindowPair> = data.train.iter().collect();
                let g = batch_gradient(&model, &batch)?;
                adam_step(&mut model, &g, &mut state, cfg)?;
            }
            BatchMode::MiniBatch(size) => {
                order.shuffle(&mut rng);
                for idx in order.chunks(size) {
                    let batch: Vec<&WindowPair> = idx.iter().map(|&i| &data.train[i]).collect();
                    let g = batch_gradient(&model, &batch)?;
                    adam_step(&mut model, &g, &mut state, cfg)?;
                }
            }
        }
        let tl = dataset_loss(&model, &data.train).map_err(|_| TnmError::Divergence {
            epoch,
            loss: f64::NAN,
        })?;
        let vl = dataset_loss(&model, &data.val).map_err(|_| TnmError::Divergence {
            epoch,
            loss: f64::NAN,
        })?;
        for loss in [tl, vl] {
            if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
                return Err(TnmError::Divergence { epoch, loss });
            }
        }
        train_loss.push(tl);
        val_loss.push(vl);
    }

    Ok(TrainReport {
        model,
        train_loss,
        val_loss,
        wall_time: start.elapsed(),
    })
}
