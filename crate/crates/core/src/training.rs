//! Uncertainty-weighted multi-task training with early stopping.

use std::time::Instant;

use ppm_nn::optim::Adam;
use ppm_nn::{BatchStats, BoundParams, Graph, NnError, Rng, Var};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Sample;
use crate::models::{uncertainty_param, Batch, Model, ModelError, HEADS};

pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_PATIENCE: usize = 10;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("no training samples")]
    EmptyTrainingSet,
    #[error("no validation samples")]
    EmptyValidationSet,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<NnError> for TrainError {
    fn from(e: NnError) -> Self {
        TrainError::Model(e.into())
    }
}

pub type Result<T> = std::result::Result<T, TrainError>;

/// Log-variance scalars `s_i`, one per head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyWeights {
    pub s_activity: f64,
    pub s_role: f64,
    pub s_time: f64,
}

impl UncertaintyWeights {
    pub fn of(model: &Model) -> Self {
        let s = |h: &str| model.params.get(&uncertainty_param(h)).map_or(0.0, |t| t.data()[0]);
        Self {
            s_activity: s(HEADS[0]),
            s_role: s(HEADS[1]),
            s_time: s(HEADS[2]),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s_activity, self.s_role, self.s_time]
    }

    /// `Σ exp(−s_i)·L_i + s_i`.
    pub fn combine(&self, losses: [f64; 3]) -> f64 {
        losses.iter().zip(self.as_array()).map(|(l, s)| (-s).exp() * l + s).sum()
    }
}

/// Graph version of [`UncertaintyWeights::combine`]; gradients reach both
/// the losses and the `s_i`.
pub fn combined_loss(g: &mut Graph, losses: [Var; 3], s: [Var; 3]) -> Result<Var> {
    let mut total: Option<Var> = None;
    for (l, s) in losses.into_iter().zip(s) {
        let neg = g.scale(s, -1.0);
        let w = g.exp(neg);
        let weighted = g.mul(w, l)?;
        let term = g.add(weighted, s)?;
        total = Some(match total {
            Some(t) => g.add(t, term)?,
            None => term,
        });
    }
    Ok(total.expect("three heads"))
}

pub struct BatchLoss {
    pub combined: Var,
    pub heads: [Var; 3],
    pub bn_stats: Vec<(String, BatchStats)>,
}

/// Per-head losses (cross-entropy, cross-entropy, joint MSE) and their
/// combination for one batch.
pub fn batch_loss(model: &Model, g: &mut Graph, p: &BoundParams, batch: &Batch, rng: Option<&mut Rng>) -> Result<BatchLoss> {
    let out = model.forward(g, p, batch, rng)?;
    let la = g.cross_entropy(out.activity_logits, &batch.target_activity)?;
    let lr = g.cross_entropy(out.role_logits, &batch.target_role)?;
    let lt = g.mse(out.times, &batch.target_times)?;
    let s = [
        p.get(&uncertainty_param(HEADS[0]))?,
        p.get(&uncertainty_param(HEADS[1]))?,
        p.get(&uncertainty_param(HEADS[2]))?,
    ];
    let combined = combined_loss(g, [la, lr, lt], s)?;
    Ok(BatchLoss {
        combined,
        heads: [la, lr, lt],
        bn_stats: out.bn_stats,
    })
}

/// Sample-weighted mean losses over a set, in evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub combined: f64,
    pub heads: [f64; 3],
}

impl LossReport {
    /// Unweighted sum of the head losses.
    pub fn head_sum(&self) -> f64 {
        self.heads.iter().sum()
    }
}

pub fn evaluate_loss(model: &Model, samples: &[Sample], batch_size: usize) -> Result<LossReport> {
    let mut heads = [0.0; 3];
    for chunk in samples.chunks(batch_size.max(1)) {
        let batch = Batch::new(chunk)?;
        let mut g = Graph::new();
        let p = model.params.bind(&mut g);
        let loss = batch_loss(model, &mut g, &p, &batch, None)?;
        for (h, v) in heads.iter_mut().zip(loss.heads) {
            *h += g.value(v).item() * chunk.len() as f64;
        }
    }
    let n = samples.len().max(1) as f64;
    let heads = heads.map(|h| h / n);
    Ok(LossReport {
        combined: UncertaintyWeights::of(model).combine(heads),
        heads,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, batch_size: usize, seed: u64) -> Self {
        Self {
            learning_rate,
            batch_size,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_heads: [f64; 3],
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Combined validation loss at `best_epoch`, the minimum over epochs.
    pub best_validation_loss: f64,
    /// Per-head validation losses at `best_epoch`.
    pub best_val_heads: [f64; 3],
}

impl TrainHistory {
    /// Losses without wall-clock times, for reproducibility checks.
    pub fn trajectory(&self) -> Vec<(f64, f64, [f64; 3])> {
        self.epochs.iter().map(|e| (e.train_loss, e.val_loss, e.val_heads)).collect()
    }

    /// Unweighted sum of the per-head validation losses at the best epoch;
    /// always positive, unlike the combined loss.
    pub fn selection_loss(&self) -> f64 {
        self.best_val_heads.iter().sum()
    }
}

/// Trains until `max_epochs` or until validation loss has not improved for
/// more than `patience` epochs, and returns the best-epoch model.
pub fn train(mut model: Model, train: &[Sample], val: &[Sample], config: &TrainConfig) -> Result<(Model, TrainHistory)> {
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if val.is_empty() {
        return Err(TrainError::EmptyValidationSet);
    }
    let mut rng = Rng::seed(config.seed);
    let mut adam = Adam::new(config.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
        best_validation_loss: f64::INFINITY,
        best_val_heads: [f64::INFINITY; 3],
    };
    let mut best = model.clone();
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for (b, idx) in order.chunks(config.batch_size.max(1)).enumerate() {
            let batch = Batch::new(idx.iter().map(|&i| &train[i]))?;
            let mut g = Graph::new();
            let p = model.params.bind(&mut g);
            let loss = batch_loss(&model, &mut g, &p, &batch, Some(&mut rng))?;
            let value = g.value(loss.combined).item();
            if !value.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            total += value * idx.len() as f64;
            g.backward(loss.combined)?;
            adam.step(&mut model.params, &p.gradients(&g))?;
            model.update_running(&loss.bn_stats);
        }
        let report = evaluate_loss(&model, val, config.batch_size)?;
        if !report.combined.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch, batch: usize::MAX });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            val_loss: report.combined,
            val_heads: report.heads,
            seconds: started.elapsed().as_secs_f64(),
        });
        if report.combined < history.best_validation_loss {
            history.best_epoch = epoch;
            history.best_validation_loss = report.combined;
            history.best_val_heads = report.heads;
            best = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale > config.patience {
                break;
            }
        }
    }
    Ok((best, history))
}
