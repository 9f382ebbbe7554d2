use std::path::Path;
use std::sync::Mutex;

use log::{info, warn};
use ppm_core::evaluation::{self, composite_scores, select_model, CandidateScore, TaskMetrics};
use ppm_core::eventlog::{parse_csv, split_chronological, SplitLog, DEFAULT_FRACTIONS};
use ppm_core::features::{augment_log, build_samples, fit_normalizer, prepare, read_cache, write_cache, CacheHeader, FeatureError};
use ppm_core::grid::{candidate_seed, candidates, grid_search, window_of, CandidateResult, DataCache, Status};
use ppm_core::models::{load_checkpoint, save_checkpoint, Checkpoint, Family, Model, ModelType};
use ppm_core::training::train;
use ppm_core::{Encoding, EventLog};
use ppm_nn::Rng;
use serde::{Deserialize, Serialize};

use crate::artifacts::*;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const CACHE_FILE: &str = "samples.json";
pub const GRID_FILE: &str = "grid_results.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
const EVAL_BATCH: usize = 256;

fn load_log(config: &RunConfig) -> Result<EventLog> {
    let path = config.dataset()?;
    let (log, report) = parse_csv(path, &config.columns())?;
    info!("{}: {report}", path.display());
    Ok(log)
}

fn load_split(config: &RunConfig) -> Result<SplitLog> {
    Ok(split_chronological(&load_log(config)?, DEFAULT_FRACTIONS)?)
}

fn prepare_output<'a>(config: &'a RunConfig, raw: Option<&str>) -> Result<&'a Path> {
    let dir = config.output_dir()?;
    ensure_dir(dir)?;
    write_configs(dir, config, raw)?;
    Ok(dir)
}

pub fn validate(config: &RunConfig) -> Result<()> {
    let log = load_log(config)?;
    let split = split_chronological(&log, DEFAULT_FRACTIONS)?;
    println!("log\ttraces\tevents\tactivities\troles");
    println!(
        "{}\t{}\t{}\t{}\t{}",
        config.log_name(),
        log.len(),
        log.total_events(),
        log.activities.regular_len(),
        log.roles.regular_len()
    );
    println!(
        "split\ttrain={}\tvalidation={}\ttest={}",
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(())
}

pub fn preprocess(config: &RunConfig, raw: Option<&str>) -> Result<()> {
    let split = load_split(config)?;
    let dir = prepare_output(config, raw)?;
    let normalizer = fit_normalizer(&augment_log(&split.train))?;
    let vocab = (split.train.activities.clone(), split.train.roles.clone());
    let encoding = match config.ngram {
        Some(0) => return Err(FeatureError::ZeroWindow.into()),
        Some(g) => Encoding::NGram { g },
        None => Encoding::Prefix {
            max_len: augment_log(&split.train).longest_trace().saturating_sub(1).max(1),
        },
    };
    let header = CacheHeader::new(encoding, normalizer, vocab.0.fingerprint(), vocab.1.fingerprint());
    let cache = dir.join(CACHE_FILE);
    if cache.exists() {
        match read_cache(&cache, &header) {
            Ok(data) => {
                println!("cache up to date: {} training samples", data.train.len());
                return Ok(());
            }
            Err(FeatureError::StaleCache(what)) => warn!("rebuilding cache: {what} changed"),
            Err(e) => warn!("rebuilding unreadable cache: {e}"),
        }
    }
    let data = prepare(&split, config.ngram)?;
    write_cache(&cache, &header, &data)?;
    write_normalizer(dir, &data.normalizer)?;
    write_vocab(dir, &vocab.0, &vocab.1)?;
    println!(
        "samples\ttrain={}\tvalidation={}\ttest={}\twidth={}\ttruncated={}\tclamped={}",
        data.train.len(),
        data.validation.len(),
        data.test.len(),
        data.encoding.width(),
        data.truncated,
        data.clamped
    );
    Ok(())
}

pub fn train_one(config: &RunConfig, raw: Option<&str>) -> Result<()> {
    let (model_config, train_config) = config.explicit()?;
    let split = load_split(config)?;
    let dir = prepare_output(config, raw)?;
    let data = prepare(&split, window_of(&model_config))?;
    let mut rng = Rng::seed(candidate_seed(train_config.seed, 0));
    let model = Model::build(model_config, data.activity_classes, data.role_classes, data.encoding.width(), &mut rng)?;
    info!("{} parameters", model.count_params());
    let (model, history) = train(model, &data.train, &data.validation, &train_config)?;
    let ckpt = Checkpoint {
        model,
        normalizer: data.normalizer,
        seed: train_config.seed,
    };
    save_checkpoint(&dir.join(CHECKPOINT_FILE), &ckpt)?;
    write_history(&dir.join(HISTORY_FILE), &history)?;
    write_params(&dir.join(PARAMS_FILE), &ckpt.model)?;
    write_vocab(dir, &split.train.activities, &split.train.roles)?;
    write_normalizer(dir, &data.normalizer)?;
    write_seed(dir, train_config.seed)?;
    println!(
        "{}\tparameters={}\tbest_epoch={}\tbest_val_loss={}",
        ckpt.model.model_type(),
        ckpt.model.count_params(),
        history.best_epoch,
        history.best_validation_loss
    );
    Ok(())
}

/// One line of `grid_results.csv`. Fields a failed candidate never
/// produced are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub index: usize,
    pub model_type: ModelType,
    pub embed_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub encoder_layers: usize,
    pub hidden_size: usize,
    pub ngram: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub param_count: usize,
    pub best_epoch: Option<usize>,
    pub best_val_loss: Option<f64>,
    pub selection_loss: Option<f64>,
    pub status: String,
    pub reason: String,
}

impl GridRow {
    fn from_result(r: &CandidateResult) -> Self {
        let (m, t) = (&r.candidate.model, &r.candidate.train);
        let (status, reason) = match &r.status {
            Status::Ok => ("ok".to_string(), String::new()),
            Status::Failed(why) => ("failed".to_string(), why.clone()),
        };
        Self {
            index: r.candidate.index,
            model_type: m.model_type,
            embed_dim: m.embed_dim,
            heads: m.heads,
            ff_dim: m.ff_dim,
            encoder_layers: m.encoder_layers,
            hidden_size: m.hidden_size,
            ngram: m.ngram,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            seed: t.seed,
            param_count: r.param_count,
            best_epoch: r.history.as_ref().map(|h| h.best_epoch),
            best_val_loss: r.history.as_ref().map(|h| h.best_validation_loss),
            selection_loss: r.history.as_ref().map(|h| h.selection_loss()),
            status,
            reason,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn read_grid(dir: &Path) -> Result<Vec<GridRow>> {
    let path = dir.join(GRID_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn gridsearch(config: &RunConfig, raw: Option<&str>) -> Result<()> {
    let model_type = config.model_type()?;
    if config.jobs == 0 {
        return Err(CliError::Config("`jobs` must be at least 1".into()));
    }
    let split = load_split(config)?;
    let dir = prepare_output(config, raw)?;
    let normalizer = fit_normalizer(&augment_log(&split.train))?;
    write_vocab(dir, &split.train.activities, &split.train.roles)?;
    write_normalizer(dir, &normalizer)?;
    write_seed(dir, config.seed)?;
    ensure_dir(&dir.join("checkpoints"))?;
    ensure_dir(&dir.join("histories"))?;

    let cands = candidates(model_type, config.seed, config.budget(), config.grid_limit);
    info!("{} candidates for {model_type}", cands.len());
    let write_errors = Mutex::new(Vec::new());
    let mut cache = DataCache::new(split);
    let results = grid_search(&mut cache, &cands, config.jobs, |result, model| {
        let ckpt = Checkpoint {
            model: model.clone(),
            normalizer,
            seed: result.candidate.train.seed,
        };
        let index = result.candidate.index;
        let outcome = save_checkpoint(&candidate_file(dir, "checkpoints", index, "ckpt"), &ckpt)
            .map_err(CliError::from)
            .and_then(|_| match &result.history {
                Some(h) => write_history(&candidate_file(dir, "histories", index, "csv"), h),
                None => Ok(()),
            });
        if let Err(e) = outcome {
            write_errors.lock().expect("poisoned").push(e);
        }
    })?;
    if let Some(e) = write_errors.into_inner().expect("poisoned").into_iter().next() {
        return Err(e);
    }

    let mut w = csv::Writer::from_path(dir.join(GRID_FILE))?;
    for r in &results {
        w.serialize(GridRow::from_result(r))?;
    }
    w.flush()?;
    let ok = results.iter().filter(|r| r.is_ok()).count();
    println!("{model_type}\tcandidates={}\tok={ok}\tfailed={}", results.len(), results.len() - ok);
    if ok == 0 {
        return Err(CliError::Training("every candidate failed".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Selection {
    pub model_type: ModelType,
    pub lambda: f64,
    pub score: CandidateScore,
}

#[derive(Serialize)]
struct ScoreRow {
    candidate: usize,
    params: usize,
    val_loss: f64,
    p: f64,
    l: f64,
    s: f64,
    selected: bool,
}

pub fn select(config: &RunConfig, raw: Option<&str>, grid_dir: &Path) -> Result<()> {
    let rows = read_grid(grid_dir)?;
    let model_type = rows
        .first()
        .map(|r| r.model_type)
        .ok_or_else(|| CliError::Data(format!("{} has no candidates", grid_dir.join(GRID_FILE).display())))?;
    let ok: Vec<(usize, usize, f64)> = rows
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| {
            let loss = r.selection_loss.ok_or_else(|| CliError::Data(format!("candidate {} has no selection loss", r.index)))?;
            Ok((r.index, r.param_count, loss))
        })
        .collect::<Result<_>>()?;
    if ok.is_empty() {
        return Err(evaluation::EvalError::AllCandidatesFailed.into());
    }
    let scores = composite_scores(&ok, config.lambda)?;
    let best = select_model(&scores)?;

    let mut config = config.clone();
    config.output_dir.get_or_insert_with(|| grid_dir.to_path_buf());
    let dir = prepare_output(&config, raw)?;
    let mut w = csv::Writer::from_path(dir.join(SCORES_FILE))?;
    for s in &scores {
        w.serialize(ScoreRow {
            candidate: s.candidate,
            params: s.params,
            val_loss: s.val_loss,
            p: s.p,
            l: s.l,
            s: s.s,
            selected: s.candidate == best.candidate,
        })?;
    }
    w.flush()?;
    copy_file(&candidate_file(grid_dir, "checkpoints", best.candidate, "ckpt"), &dir.join(BEST_CHECKPOINT))?;
    copy_file(&candidate_file(grid_dir, "histories", best.candidate, "csv"), &dir.join(HISTORY_FILE))?;
    for f in [VOCAB_FILE, NORMALIZER_FILE] {
        copy_file(&grid_dir.join(f), &dir.join(f))?;
    }
    let seed = rows.iter().find(|r| r.index == best.candidate).map(|r| r.seed).expect("selected from rows");
    write_seed(dir, seed)?;
    write_json(
        &dir.join(SELECTION_FILE),
        &Selection {
            model_type,
            lambda: config.lambda,
            score: best,
        },
    )?;
    println!(
        "{model_type}\tselected=candidate_{}\tparams={}\tval_loss={}\tS={}",
        best.candidate, best.params, best.val_loss, best.s
    );
    Ok(())
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub log: String,
    pub model: ModelType,
    pub nap_f1: f64,
    pub nrp_f1: f64,
    pub nwtp_mae: f64,
    pub ndp_mae: f64,
    pub rtp_mae: f64,
    pub parameters: usize,
}

impl MetricsRow {
    pub fn new(log: String, model: &Model, m: &TaskMetrics) -> Self {
        Self {
            log,
            model: model.model_type(),
            nap_f1: m.nap_f1,
            nrp_f1: m.nrp_f1,
            nwtp_mae: m.nwtp_mae,
            ndp_mae: m.ndp_mae,
            rtp_mae: m.rtp_mae,
            parameters: model.count_params(),
        }
    }
}

/// The encoding a trained model reads, recovered from its input length.
pub fn encoding_of(model: &Model) -> Encoding {
    match model.config.model_type.family() {
        Family::Transformer => Encoding::Prefix { max_len: model.input_len },
        Family::Lstm => Encoding::NGram { g: model.input_len },
    }
}

pub fn evaluate(config: &RunConfig, raw: Option<&str>, checkpoint: &Path) -> Result<()> {
    let ckpt = load_checkpoint(checkpoint).map_err(|e| CliError::Data(format!("{}: {e}", checkpoint.display())))?;
    let split = load_split(config)?;
    if let Some(vocab_path) = checkpoint.parent().map(|d| d.join(VOCAB_FILE)).filter(|p| p.exists()) {
        let saved: VocabFile = read_json(&vocab_path)?;
        if saved != VocabFile::new(&split.test.activities, &split.test.roles) {
            return Err(CliError::Data(format!("dataset vocabulary differs from {}", vocab_path.display())));
        }
    }
    if split.test.activities.len() != ckpt.model.activity_classes || split.test.roles.len() != ckpt.model.role_classes {
        return Err(CliError::Data("dataset vocabulary size does not match the checkpoint".into()));
    }
    let test = augment_log(&split.test);
    let samples = build_samples(&test, &ckpt.normalizer, encoding_of(&ckpt.model)).samples;
    let (metrics, records) = evaluation::evaluate(&ckpt.model, &samples, &ckpt.normalizer, config.f1_mode, EVAL_BATCH)?;
    let dir = prepare_output(config, raw)?;
    let row = MetricsRow::new(config.log_name(), &ckpt.model, &metrics);
    let mut w = csv::Writer::from_path(dir.join(METRICS_FILE))?;
    w.serialize(&row)?;
    w.flush()?;
    let file = std::fs::File::create(dir.join(PREDICTIONS_FILE))?;
    evaluation::write_predictions(&records, std::io::BufWriter::new(file))?;
    println!("log\tmodel\tnap_f1\tnrp_f1\tnwtp_mae\tndp_mae\trtp_mae\tparameters");
    println!(
        "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
        row.log, row.model, row.nap_f1, row.nrp_f1, row.nwtp_mae, row.ndp_mae, row.rtp_mae, row.parameters
    );
    Ok(())
}
