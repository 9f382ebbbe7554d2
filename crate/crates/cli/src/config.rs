//! Run configuration: a flat TOML document whose keys mirror the long
//! command-line flags. Flags override file values.

use std::path::{Path, PathBuf};

use ppm_core::evaluation::{F1Mode, DEFAULT_LAMBDA};
use ppm_core::eventlog::ColumnMap;
use ppm_core::grid::SearchBudget;
use ppm_core::models::{Family, ModelConfig, ModelType};
use ppm_core::training::{TrainConfig, DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    /// Name of the log in reports; defaults to the dataset file stem.
    pub log_name: Option<String>,
    pub case_column: String,
    pub activity_column: String,
    pub role_column: String,
    pub start_column: String,
    pub end_column: String,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub lambda: f64,
    pub f1_mode: F1Mode,
    pub grid_limit: Option<usize>,
    pub jobs: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub model_type: Option<ModelType>,
    pub embed_dim: Option<usize>,
    pub heads: Option<usize>,
    pub ff_dim: Option<usize>,
    pub encoder_layers: Option<usize>,
    pub hidden_size: Option<usize>,
    pub ngram: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = ColumnMap::default();
        Self {
            dataset: None,
            log_name: None,
            case_column: c.case_id,
            activity_column: c.activity,
            role_column: c.role,
            start_column: c.start,
            end_column: c.end,
            output_dir: None,
            seed: DEFAULT_SEED,
            lambda: DEFAULT_LAMBDA,
            f1_mode: F1Mode::Weighted,
            grid_limit: None,
            jobs: 1,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            model_type: None,
            embed_dim: None,
            heads: None,
            ff_dim: None,
            encoder_layers: None,
            hidden_size: None,
            ngram: None,
            learning_rate: None,
            batch_size: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok((config, text))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Internal(e.to_string()))
    }

    pub fn columns(&self) -> ColumnMap {
        ColumnMap {
            case_id: self.case_column.clone(),
            activity: self.activity_column.clone(),
            role: self.role_column.clone(),
            start: self.start_column.clone(),
            end: self.end_column.clone(),
        }
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset.as_deref().ok_or_else(|| CliError::Config("no dataset given (--data or `dataset`)".into()))
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output_dir.as_deref().ok_or_else(|| CliError::Config("no output directory given (--out or `output_dir`)".into()))
    }

    pub fn model_type(&self) -> Result<ModelType> {
        self.model_type.ok_or_else(|| CliError::Config("no model type given (--model-type or `model_type`)".into()))
    }

    pub fn log_name(&self) -> String {
        self.log_name.clone().unwrap_or_else(|| {
            self.dataset
                .as_deref()
                .and_then(Path::file_stem)
                .map_or_else(|| "log".to_string(), |s| s.to_string_lossy().into_owned())
        })
    }

    pub fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_epochs: self.max_epochs,
            patience: self.patience,
        }
    }

    /// The single explicit configuration for `train`.
    pub fn explicit(&self) -> Result<(ModelConfig, TrainConfig)> {
        let t = self.model_type()?;
        let need = |v: Option<usize>, key: &str| v.ok_or_else(|| CliError::Config(format!("`{key}` is required for {t}")));
        let model = match t.family() {
            Family::Transformer => ModelConfig::transformer(
                t,
                need(self.embed_dim, "embed_dim")?,
                need(self.heads, "heads")?,
                need(self.ff_dim, "ff_dim")?,
                need(self.encoder_layers, "encoder_layers")?,
            ),
            Family::Lstm => ModelConfig::lstm(t, need(self.hidden_size, "hidden_size")?, need(self.ngram, "ngram")?),
        };
        model.validate()?;
        let lr = self.learning_rate.ok_or_else(|| CliError::Config("`learning_rate` is required".into()))?;
        let train = TrainConfig {
            learning_rate: lr,
            batch_size: need(self.batch_size, "batch_size")?,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
        };
        Ok((model, train))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.model_type = Some(ModelType::LstmLight);
        c.grid_limit = Some(4);
        c.learning_rate = Some(5e-4);
        let back: RunConfig = toml::from_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
    }

    #[test]
    fn explicit_requires_fields() {
        let mut c = RunConfig::default();
        c.model_type = Some(ModelType::Lstm);
        c.hidden_size = Some(25);
        assert!(matches!(c.explicit(), Err(CliError::Config(_))));
        c.ngram = Some(5);
        c.learning_rate = Some(1e-3);
        c.batch_size = Some(16);
        let (m, t) = c.explicit().unwrap();
        assert_eq!(m.hidden_size, 25);
        assert_eq!(t.seed, DEFAULT_SEED);
    }
}
