//! Event log data model, CSV ingestion and the chronological
//! train/validation/test split.

mod csv;
mod split;
mod vocab;

use std::sync::Arc;

use thiserror::Error;

pub use self::csv::{parse_csv, parse_reader, parse_timestamp, write_csv, ColumnMap, ParseReport};
pub use split::{split_chronological, split_counts, SplitLog, DEFAULT_FRACTIONS};
pub use vocab::{Vocab, END, END_INDEX, PAD, PAD_INDEX, RESERVED, START, START_INDEX, UNK, UNK_INDEX};

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp `{value}`")]
    UnparseableTimestamp { row: usize, value: String },
    #[error("row {row}: empty {field} label")]
    EmptyLabel { row: usize, field: &'static str },
    #[error("row {row}: reserved label `{label}` in input")]
    ReservedLabel { row: usize, label: String },
    #[error("event log contains no events")]
    EmptyLog,
    #[error("need at least 3 traces to split, got {0}")]
    TooFewTraces(usize),
}

/// One executed activity: the (activity, role, start, end) part of the
/// event tuple. The case id lives on the owning [`Trace`].
///
/// Timestamps are seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub activity: usize,
    pub role: usize,
    pub start: f64,
    pub end: f64,
}

impl Event {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Events of one case, sorted by (start, end) with file order breaking ties.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Start of the first event; the chronological sort key of the case.
    pub fn first_start(&self) -> f64 {
        self.events.first().map_or(f64::NAN, |e| e.start)
    }
}

/// A set of traces with label vocabularies shared across splits.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub activities: Arc<Vocab>,
    pub roles: Arc<Vocab>,
}

impl EventLog {
    pub fn total_events(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Same vocabularies, different traces.
    pub fn with_traces(&self, traces: Vec<Trace>) -> EventLog {
        EventLog {
            traces,
            activities: Arc::clone(&self.activities),
            roles: Arc::clone(&self.roles),
        }
    }

    pub fn longest_trace(&self) -> usize {
        self.traces.iter().map(Trace::len).max().unwrap_or(0)
    }
}
