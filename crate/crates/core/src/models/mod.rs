//! The five architectures behind one interface: every model maps a
//! [`Batch`] to activity logits, role logits and three normalized times.

mod checkpoint;
mod lstm;
mod transformer;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use ppm_nn::{BatchStats, BoundParams, Graph, NnError, ParamStore, Rng, Tensor, Var};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC};

use crate::features::Sample;

pub const TRANSFORMER_EMBED: [usize; 2] = [16, 32];
pub const TRANSFORMER_HEADS: [usize; 3] = [1, 2, 4];
pub const TRANSFORMER_FF: [usize; 3] = [32, 64, 128];
pub const TRANSFORMER_LAYERS: [usize; 3] = [1, 2, 4];
pub const TRANSFORMER_DROPOUT: f64 = 0.1;
pub const LSTM_HIDDEN: [usize; 3] = [10, 25, 50];
pub const LSTM_NGRAM: [usize; 3] = [5, 10, 15];
pub const LSTM_EMBED: usize = 16;
pub const LSTM_DROPOUT: f64 = 0.1;
/// Hidden widths of the full MTLFormer head MLPs.
pub const MTLFORMER_HEAD_DIMS: [usize; 2] = [128, 64];
/// Momentum of the batch-norm running statistics.
pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

/// Names of the three task heads, in output order.
pub const HEADS: [&str; 3] = ["activity", "role", "time"];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration violates `{0}`")]
    ConfigViolation(String),
    #[error("batch width {got} does not match model input length {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelType {
    Mtlformer,
    MtlformerLight,
    TransformerSimple,
    Lstm,
    LstmLight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Transformer,
    Lstm,
}

impl ModelType {
    pub const ALL: [ModelType; 5] = [
        ModelType::Mtlformer,
        ModelType::MtlformerLight,
        ModelType::TransformerSimple,
        ModelType::Lstm,
        ModelType::LstmLight,
    ];

    pub fn family(self) -> Family {
        match self {
            ModelType::Lstm | ModelType::LstmLight => Family::Lstm,
            _ => Family::Transformer,
        }
    }

    pub fn is_light(self) -> bool {
        matches!(self, ModelType::MtlformerLight | ModelType::LstmLight | ModelType::TransformerSimple)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelType::Mtlformer => "mtlformer",
            ModelType::MtlformerLight => "mtlformer_light",
            ModelType::TransformerSimple => "transformer_simple",
            ModelType::Lstm => "lstm",
            ModelType::LstmLight => "lstm_light",
        }
    }
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        ModelType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ModelError::ConfigViolation(format!("model_type in {{mtlformer, mtlformer_light, transformer_simple, lstm, lstm_light}}, got `{s}`")))
    }
}

/// Architecture hyperparameters. Transformer fields are ignored by the LSTM
/// family and vice versa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_type: ModelType,
    pub embed_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub encoder_layers: usize,
    pub dropout: f64,
    pub hidden_size: usize,
    pub ngram: usize,
    pub head_mlp_dims: Vec<usize>,
}

impl ModelConfig {
    pub fn transformer(model_type: ModelType, embed_dim: usize, heads: usize, ff_dim: usize, encoder_layers: usize) -> Self {
        Self {
            model_type,
            embed_dim,
            heads,
            ff_dim,
            encoder_layers,
            dropout: TRANSFORMER_DROPOUT,
            hidden_size: 0,
            ngram: 0,
            head_mlp_dims: if model_type == ModelType::Mtlformer {
                MTLFORMER_HEAD_DIMS.to_vec()
            } else {
                Vec::new()
            },
        }
    }

    pub fn lstm(model_type: ModelType, hidden_size: usize, ngram: usize) -> Self {
        Self {
            model_type,
            embed_dim: LSTM_EMBED,
            heads: 0,
            ff_dim: 0,
            encoder_layers: 0,
            dropout: LSTM_DROPOUT,
            hidden_size,
            ngram,
            head_mlp_dims: if model_type == ModelType::Lstm {
                vec![hidden_size]
            } else {
                Vec::new()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let violation = |rule: &str| Err(ModelError::ConfigViolation(rule.to_string()));
        match self.model_type.family() {
            Family::Transformer => {
                if !TRANSFORMER_EMBED.contains(&self.embed_dim) {
                    return violation("embed_dim ∈ {16, 32}");
                }
                if !TRANSFORMER_HEADS.contains(&self.heads) {
                    return violation("heads ∈ {1, 2, 4}");
                }
                if self.embed_dim % self.heads != 0 {
                    return violation("embed_dim mod heads = 0");
                }
                if !TRANSFORMER_FF.contains(&self.ff_dim) {
                    return violation("ff_dim ∈ {32, 64, 128}");
                }
                if !TRANSFORMER_LAYERS.contains(&self.encoder_layers) {
                    return violation("encoder_layers ∈ {1, 2, 4}");
                }
                if self.dropout != TRANSFORMER_DROPOUT {
                    return violation("dropout = 0.1");
                }
            }
            Family::Lstm => {
                if !LSTM_HIDDEN.contains(&self.hidden_size) {
                    return violation("hidden_size ∈ {10, 25, 50}");
                }
                if !LSTM_NGRAM.contains(&self.ngram) {
                    return violation("ngram ∈ {5, 10, 15}");
                }
                if self.embed_dim == 0 {
                    return violation("embed_dim > 0");
                }
                if !(0.0..1.0).contains(&self.dropout) {
                    return violation("0 ≤ dropout < 1");
                }
            }
        }
        let full = matches!(self.model_type, ModelType::Mtlformer | ModelType::Lstm);
        if full == self.head_mlp_dims.is_empty() || self.head_mlp_dims.contains(&0) {
            return violation("head_mlp_dims non-empty and positive exactly for full models");
        }
        Ok(())
    }
}

/// Samples stacked for one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub size: usize,
    pub width: usize,
    /// `size*width` indices, row-major.
    pub activities: Vec<usize>,
    pub roles: Vec<usize>,
    /// `[size, width, 3]`
    pub times: Tensor,
    /// `size*width`, `true` at real events.
    pub mask: Vec<bool>,
    pub target_activity: Vec<usize>,
    pub target_role: Vec<usize>,
    /// `[size, 3]`
    pub target_times: Tensor,
}

impl Batch {
    pub fn new<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Result<Self> {
        let samples: Vec<&Sample> = samples.into_iter().collect();
        let first = samples.first().ok_or(ModelError::EmptyBatch)?;
        let width = first.width();
        let mut b = Batch {
            size: samples.len(),
            width,
            activities: Vec::with_capacity(samples.len() * width),
            roles: Vec::with_capacity(samples.len() * width),
            times: Tensor::zeros(&[0]),
            mask: Vec::with_capacity(samples.len() * width),
            target_activity: Vec::with_capacity(samples.len()),
            target_role: Vec::with_capacity(samples.len()),
            target_times: Tensor::zeros(&[0]),
        };
        let mut times = Vec::with_capacity(samples.len() * width * 3);
        let mut targets = Vec::with_capacity(samples.len() * 3);
        for s in &samples {
            if s.width() != width || s.roles.len() != width || s.times.len() != width {
                return Err(ModelError::ShapeMismatch {
                    expected: width,
                    got: s.width(),
                });
            }
            b.activities.extend_from_slice(&s.activities);
            b.roles.extend_from_slice(&s.roles);
            b.mask.extend(s.mask());
            times.extend(s.times.iter().flatten());
            b.target_activity.push(s.targets.activity);
            b.target_role.push(s.targets.role);
            targets.extend_from_slice(&s.target_times);
        }
        b.times = Tensor::new(vec![b.size, width, 3], times)?;
        b.target_times = Tensor::new(vec![b.size, 3], targets)?;
        Ok(b)
    }
}

/// Graph handles of one forward pass.
pub struct Forward {
    /// `[batch, activity_classes]`
    pub activity_logits: Var,
    /// `[batch, role_classes]`
    pub role_logits: Var,
    /// `[batch, 3]`
    pub times: Var,
    /// Batch-norm batch statistics from a training pass, by layer name.
    pub bn_stats: Vec<(String, BatchStats)>,
}

/// One sample's predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub activity_logits: Vec<f64>,
    pub role_logits: Vec<f64>,
    /// Normalized (waiting, duration, remaining).
    pub times: [f64; 3],
}

/// Running batch-norm statistics; state, not trainable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// One row of [`Model::describe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamRow {
    pub name: String,
    pub shape: Vec<usize>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub activity_classes: usize,
    pub role_classes: usize,
    /// Window width every batch must have.
    pub input_len: usize,
    pub params: ParamStore,
    pub running: IndexMap<String, RunningStats>,
}

/// Path of the uncertainty scalar for one head.
pub fn uncertainty_param(head: &str) -> String {
    format!("uncertainty/s_{head}")
}

impl Model {
    /// Wires the architecture and draws its initial parameters. The LSTM
    /// family reads windows of `config.ngram`; `max_len` applies to the
    /// Transformer family only.
    pub fn build(config: ModelConfig, activity_classes: usize, role_classes: usize, max_len: usize, rng: &mut Rng) -> Result<Model> {
        config.validate()?;
        let input_len = match config.model_type.family() {
            Family::Transformer => max_len,
            Family::Lstm => config.ngram,
        };
        if input_len == 0 {
            return Err(ModelError::ConfigViolation("input length > 0".into()));
        }
        let mut model = Model {
            config,
            activity_classes,
            role_classes,
            input_len,
            params: ParamStore::new(),
            running: IndexMap::new(),
        };
        match model.config.model_type.family() {
            Family::Transformer => transformer::declare(&mut model, rng)?,
            Family::Lstm => lstm::declare(&mut model, rng)?,
        }
        for head in HEADS {
            model.params.insert(uncertainty_param(head), Tensor::zeros(&[1]))?;
        }
        Ok(model)
    }

    pub fn model_type(&self) -> ModelType {
        self.config.model_type
    }

    pub fn count_params(&self) -> usize {
        self.params.count_params()
    }

    pub fn describe(&self) -> Vec<ParamRow> {
        self.params
            .iter()
            .map(|(name, t)| ParamRow {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                count: t.len(),
            })
            .collect()
    }

    /// Builds the forward graph. Passing `rng` selects training mode:
    /// dropout is sampled from it and batch norm uses batch statistics.
    pub fn forward(&self, g: &mut Graph, p: &BoundParams, batch: &Batch, rng: Option<&mut Rng>) -> Result<Forward> {
        if batch.width != self.input_len {
            return Err(ModelError::ShapeMismatch {
                expected: self.input_len,
                got: batch.width,
            });
        }
        if batch.size == 0 {
            return Err(ModelError::EmptyBatch);
        }
        match self.config.model_type.family() {
            Family::Transformer => transformer::forward(self, g, p, batch, rng),
            Family::Lstm => lstm::forward(self, g, p, batch, rng),
        }
    }

    /// Folds training-pass batch statistics into the running averages.
    pub fn update_running(&mut self, stats: &[(String, BatchStats)]) {
        for (name, s) in stats {
            if let Some(r) = self.running.get_mut(name) {
                for (m, b) in r.mean.iter_mut().zip(&s.mean) {
                    *m = BN_MOMENTUM * *m + (1.0 - BN_MOMENTUM) * b;
                }
                for (v, b) in r.var.iter_mut().zip(&s.var) {
                    *v = BN_MOMENTUM * *v + (1.0 - BN_MOMENTUM) * b;
                }
            }
        }
    }

    /// Evaluation-mode predictions, one per sample.
    pub fn predict(&self, batch: &Batch) -> Result<Vec<ModelOutput>> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        let out = self.forward(&mut g, &p, batch, None)?;
        let a = g.value(out.activity_logits).data();
        let r = g.value(out.role_logits).data();
        let t = g.value(out.times).data();
        Ok((0..batch.size)
            .map(|i| ModelOutput {
                activity_logits: a[i * self.activity_classes..(i + 1) * self.activity_classes].to_vec(),
                role_logits: r[i * self.role_classes..(i + 1) * self.role_classes].to_vec(),
                times: [t[i * 3], t[i * 3 + 1], t[i * 3 + 2]],
            })
            .collect())
    }

    /// Predictions for many samples, in chunks of `batch_size`.
    pub fn predict_samples(&self, samples: &[Sample], batch_size: usize) -> Result<Vec<ModelOutput>> {
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(batch_size.max(1)) {
            out.extend(self.predict(&Batch::new(chunk)?)?);
        }
        Ok(out)
    }
}

/// Adds fixed sinusoidal position codes to `x: [batch, len, dim]`.
pub(crate) fn add_positions(g: &mut Graph, x: Var) -> Result<Var> {
    let shape = g.shape(x).to_vec();
    let (b, l, d) = (shape[0], shape[1], shape[2]);
    let pe = ppm_nn::layers::sinusoidal_positions(l, d).reshaped(vec![l * d])?;
    let pe = g.constant(pe);
    let flat = g.reshape(x, &[b, l * d])?;
    let y = g.add_row(flat, pe)?;
    Ok(g.reshape(y, &[b, l, d])?)
}

/// Per-head `[in → dims… → out]` MLP with ReLU between layers, or a single
/// linear layer when `dims` is empty.
pub(crate) fn declare_head(store: &mut ParamStore, rng: &mut Rng, name: &str, input: usize, dims: &[usize], out: usize) -> Result<()> {
    let mut width = input;
    for (i, &d) in dims.iter().enumerate() {
        ppm_nn::layers::declare_linear(store, rng, &format!("{name}/hidden{i}"), width, d)?;
        width = d;
    }
    ppm_nn::layers::declare_linear(store, rng, &format!("{name}/out"), width, out)?;
    Ok(())
}

pub(crate) fn head(g: &mut Graph, p: &BoundParams, name: &str, x: Var, hidden_layers: usize, activation: fn(&mut Graph, Var) -> Var) -> Result<Var> {
    let mut h = x;
    for i in 0..hidden_layers {
        h = ppm_nn::layers::linear(g, p, &format!("{name}/hidden{i}"), h)?;
        h = activation(g, h);
    }
    Ok(ppm_nn::layers::linear(g, p, &format!("{name}/out"), h)?)
}

pub(crate) fn head_outputs(model: &Model) -> [(&'static str, usize); 3] {
    [("activity", model.activity_classes), ("role", model.role_classes), ("time", 3)]
}
