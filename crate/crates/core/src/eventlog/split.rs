use super::{EventLog, EventLogError};

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.7, 0.1, 0.2);

/// Train/validation/test partition of a log's cases, sharing vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitLog {
    pub train: EventLog,
    pub validation: EventLog,
    pub test: EventLog,
}

/// Case counts for `n` cases: floor for train and validation, remainder to
/// test. The test fraction is implied.
pub fn split_counts(n: usize, fractions: (f64, f64, f64)) -> (usize, usize, usize) {
    // The epsilon absorbs products such as 0.7·100 landing just below 70.
    let floor = |f: f64| ((n as f64 * f) + 1e-9).floor() as usize;
    let train = floor(fractions.0).min(n);
    let validation = floor(fractions.1).min(n - train);
    (train, validation, n - train - validation)
}

/// Orders cases by the start of their first event (stable, so file order
/// breaks ties) and cuts them into consecutive train/validation/test runs.
pub fn split_chronological(log: &EventLog, fractions: (f64, f64, f64)) -> Result<SplitLog, EventLogError> {
    if log.len() < 3 {
        return Err(EventLogError::TooFewTraces(log.len()));
    }
    let mut ordered = log.traces.clone();
    ordered.sort_by(|a, b| a.first_start().total_cmp(&b.first_start()));
    let (n_train, n_val, _) = split_counts(ordered.len(), fractions);
    let test = ordered.split_off(n_train + n_val);
    let validation = ordered.split_off(n_train);
    Ok(SplitLog {
        train: log.with_traces(ordered),
        validation: log.with_traces(validation),
        test: log.with_traces(test),
    })
}
