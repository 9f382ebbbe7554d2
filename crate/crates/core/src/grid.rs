//! Hyperparameter grids and the candidate driver.

use std::collections::HashMap;

use log::{info, warn};
use ppm_nn::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eventlog::SplitLog;
use crate::features::{prepare, PreparedData};
use crate::models::{
    Family, Model, ModelConfig, ModelType, LSTM_HIDDEN, LSTM_NGRAM, TRANSFORMER_EMBED, TRANSFORMER_FF, TRANSFORMER_HEADS,
    TRANSFORMER_LAYERS,
};
use crate::training::{train, TrainConfig, TrainHistory, DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE};

pub const TRANSFORMER_LR: [f64; 2] = [3e-4, 6e-4];
pub const TRANSFORMER_BATCH: [usize; 3] = [8, 16, 32];
pub const LSTM_LR: [f64; 5] = [5e-4, 1e-3, 5e-3, 3e-4, 6e-4];
pub const LSTM_BATCH: [usize; 4] = [8, 16, 32, 64];

/// SplitMix64 finalizer over (global seed, index): candidate seeds do not
/// depend on which other candidates run.
pub fn candidate_seed(global: u64, index: usize) -> u64 {
    let mut z = global ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Budget shared by every candidate of a search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
        }
    }
}

/// (model config, learning rate, batch size) for every grid point, in a
/// fixed nesting order. Transformer: embed, heads, ff, lr, batch, layers.
/// LSTM: lr, batch, ngram, hidden.
pub fn grid_points(model_type: ModelType) -> Vec<(ModelConfig, f64, usize)> {
    let mut out = Vec::new();
    match model_type.family() {
        Family::Transformer => {
            for e in TRANSFORMER_EMBED {
                for h in TRANSFORMER_HEADS.into_iter().filter(|h| e % h == 0) {
                    for ff in TRANSFORMER_FF {
                        for lr in TRANSFORMER_LR {
                            for b in TRANSFORMER_BATCH {
                                for l in TRANSFORMER_LAYERS {
                                    out.push((ModelConfig::transformer(model_type, e, h, ff, l), lr, b));
                                }
                            }
                        }
                    }
                }
            }
        }
        Family::Lstm => {
            for lr in LSTM_LR {
                for b in LSTM_BATCH {
                    for g in LSTM_NGRAM {
                        for h in LSTM_HIDDEN {
                            out.push((ModelConfig::lstm(model_type, h, g), lr, b));
                        }
                    }
                }
            }
        }
    }
    out
}

/// The grid as candidates, optionally truncated to the first `limit`.
pub fn candidates(model_type: ModelType, seed: u64, budget: SearchBudget, limit: Option<usize>) -> Vec<Candidate> {
    grid_points(model_type)
        .into_iter()
        .take(limit.unwrap_or(usize::MAX))
        .enumerate()
        .map(|(index, (model, lr, batch))| Candidate {
            index,
            model,
            train: TrainConfig {
                learning_rate: lr,
                batch_size: batch,
                max_epochs: budget.max_epochs,
                patience: budget.patience,
                seed: candidate_seed(seed, index),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub candidate: Candidate,
    pub status: Status,
    pub param_count: usize,
    pub history: Option<TrainHistory>,
}

impl CandidateResult {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Prepared data per window setting, built once and shared by candidates.
pub struct DataCache {
    split: SplitLog,
    entries: HashMap<Option<usize>, PreparedData>,
}

impl DataCache {
    pub fn new(split: SplitLog) -> Self {
        Self {
            split,
            entries: HashMap::new(),
        }
    }

    /// `None` is the prefix encoding, `Some(g)` an n-gram window.
    pub fn ensure(&mut self, ngram: Option<usize>) -> Result<&PreparedData, crate::features::FeatureError> {
        if !self.entries.contains_key(&ngram) {
            let data = prepare(&self.split, ngram)?;
            self.entries.insert(ngram, data);
        }
        Ok(&self.entries[&ngram])
    }

    pub fn get(&self, ngram: Option<usize>) -> Option<&PreparedData> {
        self.entries.get(&ngram)
    }
}

pub fn window_of(config: &ModelConfig) -> Option<usize> {
    (config.model_type.family() == Family::Lstm).then_some(config.ngram)
}

/// Builds and trains one candidate from its seed.
pub fn run_candidate(candidate: &Candidate, data: &PreparedData) -> (CandidateResult, Option<Model>) {
    let mut rng = Rng::seed(candidate_seed(candidate.train.seed, 0));
    let built = Model::build(
        candidate.model.clone(),
        data.activity_classes,
        data.role_classes,
        data.encoding.width(),
        &mut rng,
    );
    let model = match built {
        Ok(m) => m,
        Err(e) => {
            return (
                CandidateResult {
                    candidate: candidate.clone(),
                    status: Status::Failed(e.to_string()),
                    param_count: 0,
                    history: None,
                },
                None,
            )
        }
    };
    let param_count = model.count_params();
    match train(model, &data.train, &data.validation, &candidate.train) {
        Ok((model, history)) => (
            CandidateResult {
                candidate: candidate.clone(),
                status: Status::Ok,
                param_count,
                history: Some(history),
            },
            Some(model),
        ),
        Err(e) => {
            warn!("candidate {} failed: {e}", candidate.index);
            (
                CandidateResult {
                    candidate: candidate.clone(),
                    status: Status::Failed(e.to_string()),
                    param_count,
                    history: None,
                },
                None,
            )
        }
    }
}

/// Trains every candidate, up to `jobs` at a time. Results come back in
/// candidate order; `on_model` sees each successful model as it finishes.
pub fn grid_search<F>(cache: &mut DataCache, candidates: &[Candidate], jobs: usize, on_model: F) -> Result<Vec<CandidateResult>, crate::features::FeatureError>
where
    F: Fn(&CandidateResult, &Model) + Sync,
{
    for c in candidates {
        cache.ensure(window_of(&c.model))?;
    }
    let cache = &*cache;
    let run = |c: &Candidate| {
        let data = cache.get(window_of(&c.model)).expect("prepared above");
        let (result, model) = run_candidate(c, data);
        if let Some(m) = &model {
            on_model(&result, m);
        }
        info!("candidate {} done: {:?}", c.index, result.status);
        result
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    Ok(pool.install(|| candidates.par_iter().map(run).collect()))
}
