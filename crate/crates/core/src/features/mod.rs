//! Boundary events, time features, z-score normalization and the two
//! sample encodings (left-padded prefixes and n-gram windows).

mod cache;
mod normalizer;
mod samples;
mod time;

use thiserror::Error;

pub use cache::{read_cache, write_cache, CacheHeader};
pub use normalizer::{fit_normalizer, Normalizer, Scaler, STD_FLOOR};
pub use samples::{build_ngram_samples, build_prefix_samples, build_samples, Encoding, Sample, TaskTargets};
pub use time::{add_boundary_events, augment_log, compute_time_features, TimeFeatures};

use crate::eventlog::SplitLog;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("event log contains no events")]
    EmptyLog,
    #[error("n-gram size must be positive")]
    ZeroWindow,
    #[error("cache i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache format error: {0}")]
    Format(#[from] serde_json::Error),
    #[error("stale cache: {0} differs")]
    StaleCache(&'static str),
}

/// The three splits encoded with one normalizer and one window width.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub encoding: Encoding,
    pub normalizer: Normalizer,
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
    pub activity_classes: usize,
    pub role_classes: usize,
    /// Prefixes cut to the window width, over all splits.
    pub truncated: usize,
    /// Negative waiting times clamped to zero, over all splits.
    pub clamped: usize,
}

/// Adds boundary events to every split, fits the normalizer on the training
/// split and encodes all three. `ngram = None` selects the prefix encoding
/// with `max_len` taken from the training split.
pub fn prepare(split: &SplitLog, ngram: Option<usize>) -> Result<PreparedData, FeatureError> {
    let train = augment_log(&split.train);
    let validation = augment_log(&split.validation);
    let test = augment_log(&split.test);
    let normalizer = fit_normalizer(&train)?;
    let encoding = match ngram {
        Some(0) => return Err(FeatureError::ZeroWindow),
        Some(g) => Encoding::NGram { g },
        None => Encoding::Prefix {
            max_len: train.longest_trace().saturating_sub(1).max(1),
        },
    };
    let mut truncated = 0;
    let mut clamped = 0;
    let mut encode = |log| {
        let built = build_samples(log, &normalizer, encoding);
        truncated += built.truncated;
        clamped += built.clamped;
        built.samples
    };
    let (train, validation, test) = (encode(&train), encode(&validation), encode(&test));
    Ok(PreparedData {
        encoding,
        normalizer,
        train,
        validation,
        test,
        activity_classes: split.train.activities.len(),
        role_classes: split.train.roles.len(),
        truncated,
        clamped,
    })
}
