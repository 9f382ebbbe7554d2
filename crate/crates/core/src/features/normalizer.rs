use serde::{Deserialize, Serialize};

use super::{compute_time_features, FeatureError};
use crate::eventlog::EventLog;

/// Standard deviations below this are replaced by 1.
pub const STD_FLOOR: f64 = 1e-12;

/// One z-score transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    /// Population mean and standard deviation.
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        Self {
            mean,
            std: if std < STD_FLOOR { 1.0 } else { std },
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Scalers for each time quantity, fitted on training events only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub waiting: Scaler,
    pub duration: Scaler,
    pub remaining: Scaler,
    pub elapsed: Scaler,
}

impl Normalizer {
    /// Target order: (waiting, duration, remaining).
    pub fn targets(&self) -> [Scaler; 3] {
        [self.waiting, self.duration, self.remaining]
    }

    /// Input channel order: (waiting, duration, elapsed).
    pub fn inputs(&self) -> [Scaler; 3] {
        [self.waiting, self.duration, self.elapsed]
    }
}

/// Fits over every event of the (boundary-augmented) training log.
pub fn fit_normalizer(train: &EventLog) -> Result<Normalizer, FeatureError> {
    let mut cols: [Vec<f64>; 4] = Default::default();
    for trace in &train.traces {
        let (features, _) = compute_time_features(trace);
        for f in features {
            cols[0].push(f.waiting);
            cols[1].push(f.duration);
            cols[2].push(f.remaining);
            cols[3].push(f.elapsed);
        }
    }
    if cols[0].is_empty() {
        return Err(FeatureError::EmptyLog);
    }
    Ok(Normalizer {
        waiting: Scaler::fit(&cols[0]),
        duration: Scaler::fit(&cols[1]),
        remaining: Scaler::fit(&cols[2]),
        elapsed: Scaler::fit(&cols[3]),
    })
}
