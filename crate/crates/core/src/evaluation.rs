//! Task metrics, the composite parameter/loss score and model selection.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Normalizer, Sample, Scaler};
use crate::models::{Model, ModelError};
use crate::SECONDS_PER_DAY;

/// Default weight of the relative loss excess in the composite score.
pub const DEFAULT_LAMBDA: f64 = 2.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} predictions, {1} targets")]
    LengthMismatch(usize, usize),
    #[error("empty candidate set")]
    EmptyCandidateSet,
    #[error("candidate {0} has a non-positive validation loss")]
    NonPositiveLoss(usize),
    #[error("all candidates failed")]
    AllCandidatesFailed,
    #[error("empty test set")]
    EmptyTestSet,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("prediction file: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Mode {
    /// Per-class F1 weighted by target support, over classes in the targets.
    #[default]
    Weighted,
    /// Unweighted mean over classes in targets or predictions.
    Macro,
}

/// F1 over class indices `< classes`. A class with no predicted and no
/// true members contributes nothing; zero precision or recall gives F1 0.
pub fn f1_score(predictions: &[usize], targets: &[usize], classes: usize, mode: F1Mode) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), targets.len()));
    }
    if targets.is_empty() {
        return Ok(0.0);
    }
    let width = classes.max(predictions.iter().chain(targets).max().map_or(0, |m| m + 1));
    let mut tp = vec![0usize; width];
    let mut predicted = vec![0usize; width];
    let mut support = vec![0usize; width];
    for (&p, &t) in predictions.iter().zip(targets) {
        predicted[p] += 1;
        support[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let f1 = |c: usize| {
        let denom = predicted[c] + support[c];
        if denom == 0 {
            0.0
        } else {
            2.0 * tp[c] as f64 / denom as f64
        }
    };
    Ok(match mode {
        F1Mode::Weighted => (0..width).map(|c| f1(c) * support[c] as f64).sum::<f64>() / targets.len() as f64,
        F1Mode::Macro => {
            let present: Vec<usize> = (0..width).filter(|&c| support[c] + predicted[c] > 0).collect();
            present.iter().map(|&c| f1(c)).sum::<f64>() / present.len() as f64
        }
    })
}

/// Mean absolute error in days after undoing the z-score.
pub fn mae_days(predictions: &[f64], targets: &[f64], scaler: &Scaler) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), targets.len()));
    }
    if predictions.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (scaler.invert(*p) - scaler.invert(*t)).abs())
        .sum();
    Ok(total / predictions.len() as f64 / SECONDS_PER_DAY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate: usize,
    pub params: usize,
    pub val_loss: f64,
    /// `params / params(M*)`
    pub p: f64,
    /// `(val_loss − val_loss(M*)) / val_loss(M*)`
    pub l: f64,
    /// `p + λ·l`
    pub s: f64,
}

/// Index of the minimum by `key`, ties to fewer params then lower index.
fn argmin_by<T>(items: &[T], key: impl Fn(&T) -> (f64, usize, usize)) -> usize {
    let mut best = 0;
    for i in 1..items.len() {
        let (a, b) = (key(&items[i]), key(&items[best]));
        if a.0 < b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2)) {
            best = i;
        }
    }
    best
}

/// Scores `(candidate id, params, validation loss)` relative to the
/// lowest-loss candidate `M*`.
pub fn composite_scores(candidates: &[(usize, usize, f64)], lambda: f64) -> Result<Vec<CandidateScore>> {
    if candidates.is_empty() {
        return Err(EvalError::EmptyCandidateSet);
    }
    if let Some(&(id, _, _)) = candidates.iter().find(|c| !(c.2 > 0.0)) {
        return Err(EvalError::NonPositiveLoss(id));
    }
    let star = candidates[argmin_by(candidates, |&(id, params, loss)| (loss, params, id))];
    let (_, p_star, l_star) = star;
    Ok(candidates
        .iter()
        .map(|&(id, params, loss)| {
            let p = params as f64 / p_star as f64;
            let l = (loss - l_star) / l_star;
            CandidateScore {
                candidate: id,
                params,
                val_loss: loss,
                p,
                l,
                s: p + lambda * l,
            }
        })
        .collect())
}

/// The candidate minimizing `S_M`, with the same tie-breaking.
pub fn select_model(scores: &[CandidateScore]) -> Result<CandidateScore> {
    if scores.is_empty() {
        return Err(EvalError::AllCandidatesFailed);
    }
    Ok(scores[argmin_by(scores, |c| (c.s, c.params, c.candidate))])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub nap_f1: f64,
    pub nrp_f1: f64,
    pub nwtp_mae: f64,
    pub ndp_mae: f64,
    pub rtp_mae: f64,
}

/// One test sample's predictions; times in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub case_id: String,
    pub k: usize,
    pub pred_activity: usize,
    pub true_activity: usize,
    pub pred_role: usize,
    pub true_role: usize,
    pub pred_waiting_days: f64,
    pub true_waiting_days: f64,
    pub pred_duration_days: f64,
    pub true_duration_days: f64,
    pub pred_remaining_days: f64,
    pub true_remaining_days: f64,
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Metrics from per-sample records; the definition both [`evaluate`] and
/// re-scoring a prediction dump use.
pub fn metrics_from_records(records: &[PredictionRecord], activity_classes: usize, role_classes: usize, mode: F1Mode) -> Result<TaskMetrics> {
    if records.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let col = |f: fn(&PredictionRecord) -> usize| records.iter().map(f).collect::<Vec<_>>();
    let mae = |p: fn(&PredictionRecord) -> f64, t: fn(&PredictionRecord) -> f64| {
        records.iter().map(|r| (p(r) - t(r)).abs()).sum::<f64>() / records.len() as f64
    };
    Ok(TaskMetrics {
        nap_f1: f1_score(&col(|r| r.pred_activity), &col(|r| r.true_activity), activity_classes, mode)?,
        nrp_f1: f1_score(&col(|r| r.pred_role), &col(|r| r.true_role), role_classes, mode)?,
        nwtp_mae: mae(|r| r.pred_waiting_days, |r| r.true_waiting_days),
        ndp_mae: mae(|r| r.pred_duration_days, |r| r.true_duration_days),
        rtp_mae: mae(|r| r.pred_remaining_days, |r| r.true_remaining_days),
    })
}

/// Scores a model on test samples in evaluation mode.
pub fn evaluate(model: &Model, samples: &[Sample], norm: &Normalizer, mode: F1Mode, batch_size: usize) -> Result<(TaskMetrics, Vec<PredictionRecord>)> {
    if samples.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let outputs = model.predict_samples(samples, batch_size)?;
    let [sw, sd, sr] = norm.targets();
    let days = |s: &Scaler, z: f64| s.invert(z) / SECONDS_PER_DAY;
    let records: Vec<PredictionRecord> = samples
        .iter()
        .zip(&outputs)
        .map(|(s, o)| PredictionRecord {
            case_id: s.case_id.clone(),
            k: s.k,
            pred_activity: argmax(&o.activity_logits),
            true_activity: s.targets.activity,
            pred_role: argmax(&o.role_logits),
            true_role: s.targets.role,
            pred_waiting_days: days(&sw, o.times[0]),
            true_waiting_days: days(&sw, s.target_times[0]),
            pred_duration_days: days(&sd, o.times[1]),
            true_duration_days: days(&sd, s.target_times[1]),
            pred_remaining_days: days(&sr, o.times[2]),
            true_remaining_days: days(&sr, s.target_times[2]),
        })
        .collect();
    let metrics = metrics_from_records(&records, model.activity_classes, model.role_classes, mode)?;
    Ok((metrics, records))
}

pub fn write_predictions<W: Write>(records: &[PredictionRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<PredictionRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let t = [0, 1, 2, 2, 1];
        assert_eq!(f1_score(&t, &t, 3, F1Mode::Weighted).unwrap(), 1.0);
        assert_eq!(f1_score(&t, &t, 3, F1Mode::Macro).unwrap(), 1.0);
    }

    #[test]
    fn constant_prediction_on_balanced_binary() {
        // Class 0: P = 1/2, R = 1, F1 = 2/3. Class 1: F1 = 0. Weights 1/2.
        let f = f1_score(&[0, 0, 0, 0], &[0, 0, 1, 1], 2, F1Mode::Weighted).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(f1_score(&[0], &[0, 1], 2, F1Mode::Weighted), Err(EvalError::LengthMismatch(1, 2))));
        assert!(mae_days(&[0.0], &[], &Scaler { mean: 0.0, std: 1.0 }).is_err());
    }

    #[test]
    fn mae_unit_conversion() {
        let s = Scaler { mean: 100.0, std: 86_400.0 };
        assert_eq!(mae_days(&[0.5], &[0.5], &s).unwrap(), 0.0);
        assert_eq!(mae_days(&[1.0], &[0.0], &s).unwrap(), 1.0);
    }

    #[test]
    fn composite_fixtures() {
        let one = composite_scores(&[(0, 10, 0.3)], 2.0).unwrap();
        assert_eq!(one[0].s, 1.0);
        let s = composite_scores(&[(0, 100_000, 1.0), (1, 50_000, 1.1)], 2.0).unwrap();
        assert_eq!(s[0].s, 1.0);
        assert!((s[1].p - 0.5).abs() < 1e-15);
        assert!((s[1].l - 0.1).abs() < 1e-12);
        assert!((s[1].s - 0.7).abs() < 1e-12);
        assert_eq!(select_model(&s).unwrap().candidate, 1);
    }

    #[test]
    fn selection_edge_cases() {
        let same_params = composite_scores(&[(0, 5, 2.0), (1, 5, 1.5), (2, 5, 1.7)], 2.0).unwrap();
        assert_eq!(select_model(&same_params).unwrap().candidate, 1);
        let same_loss = composite_scores(&[(0, 9, 1.0), (1, 4, 1.0), (2, 6, 1.0)], 2.0).unwrap();
        assert_eq!(select_model(&same_loss).unwrap().candidate, 1);
        let lambda0 = composite_scores(&[(0, 9, 1.0), (1, 4, 9.0), (2, 6, 1.5)], 0.0).unwrap();
        assert_eq!(select_model(&lambda0).unwrap().candidate, 1);
        assert!(matches!(composite_scores(&[], 2.0), Err(EvalError::EmptyCandidateSet)));
        assert!(matches!(composite_scores(&[(3, 1, 0.0)], 2.0), Err(EvalError::NonPositiveLoss(3))));
        assert!(matches!(select_model(&[]), Err(EvalError::AllCandidatesFailed)));
    }

    #[test]
    fn argmax_prefers_first_maximum() {
        assert_eq!(argmax(&[0.1, 0.5, 0.5]), 1);
    }
}
