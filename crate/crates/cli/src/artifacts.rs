//! Files shared by several subcommands' output directories.

use std::fs;
use std::path::{Path, PathBuf};

use ppm_core::features::Normalizer;
use ppm_core::models::Model;
use ppm_core::training::TrainHistory;
use ppm_core::Vocab;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const CONFIG_COPY: &str = "config.toml";
pub const RESOLVED_CONFIG: &str = "resolved.toml";
pub const SEED_FILE: &str = "seed";
pub const VOCAB_FILE: &str = "vocab.json";
pub const NORMALIZER_FILE: &str = "normalizer.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const PARAMS_FILE: &str = "params.csv";
pub const METRICS_FILE: &str = "metrics.csv";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))
}

/// Writes the verbatim config file (if any) and the flag-resolved one.
pub fn write_configs(dir: &Path, config: &RunConfig, raw: Option<&str>) -> Result<()> {
    if let Some(raw) = raw {
        fs::write(dir.join(CONFIG_COPY), raw)?;
    }
    fs::write(dir.join(RESOLVED_CONFIG), config.to_toml()?)?;
    Ok(())
}

pub fn write_seed(dir: &Path, seed: u64) -> Result<()> {
    fs::write(dir.join(SEED_FILE), format!("{seed}\n"))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabFile {
    pub activities: Vocab,
    pub roles: Vocab,
    pub activity_fingerprint: String,
    pub role_fingerprint: String,
}

impl VocabFile {
    pub fn new(activities: &Vocab, roles: &Vocab) -> Self {
        Self {
            activities: activities.clone(),
            roles: roles.clone(),
            activity_fingerprint: activities.fingerprint(),
            role_fingerprint: roles.fingerprint(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_vocab(dir: &Path, activities: &Vocab, roles: &Vocab) -> Result<()> {
    write_json(&dir.join(VOCAB_FILE), &VocabFile::new(activities, roles))
}

pub fn write_normalizer(dir: &Path, norm: &Normalizer) -> Result<()> {
    write_json(&dir.join(NORMALIZER_FILE), norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_activity: f64,
    pub val_role: f64,
    pub val_time: f64,
    pub seconds: f64,
}

pub fn write_history(path: &Path, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in &history.epochs {
        w.serialize(HistoryRow {
            epoch: e.epoch,
            train_loss: e.train_loss,
            val_loss: e.val_loss,
            val_activity: e.val_heads[0],
            val_role: e.val_heads[1],
            val_time: e.val_heads[2],
            seconds: e.seconds,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// One row per parameter tensor, then a total.
pub fn write_params(path: &Path, model: &Model) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "shape", "count"])?;
    for row in model.describe() {
        let shape: Vec<String> = row.shape.iter().map(usize::to_string).collect();
        w.write_record([row.name, shape.join("x"), row.count.to_string()])?;
    }
    w.write_record(["total".to_string(), String::new(), model.count_params().to_string()])?;
    w.flush()?;
    Ok(())
}

pub fn copy_file(from: &Path, to: &Path) -> Result<()> {
    if from == to {
        return Ok(());
    }
    fs::copy(from, to).map_err(|e| CliError::Internal(format!("copy {} → {}: {e}", from.display(), to.display())))?;
    Ok(())
}

pub fn candidate_file(dir: &Path, sub: &str, index: usize, ext: &str) -> PathBuf {
    dir.join(sub).join(format!("candidate_{index:04}.{ext}"))
}
