use serde::{Deserialize, Serialize};

use crate::eventlog::{Event, EventLog, Trace, END_INDEX, START_INDEX};

/// Per-event time quantities in seconds.
///
/// `elapsed` is the time from the case start to the end of this event; it
/// is the third model input channel because `remaining` is a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFeatures {
    pub waiting: f64,
    pub duration: f64,
    pub remaining: f64,
    pub elapsed: f64,
}

/// Wraps the trace in zero-length «start» / «end» events that copy the
/// first start and last end timestamps. Activity and role use the same
/// reserved indices.
pub fn add_boundary_events(trace: &Trace) -> Trace {
    let (first, last) = match (trace.events.first(), trace.events.last()) {
        (Some(f), Some(l)) => (f.start, l.end),
        _ => return trace.clone(),
    };
    let mut events = Vec::with_capacity(trace.len() + 2);
    events.push(Event {
        activity: START_INDEX,
        role: START_INDEX,
        start: first,
        end: first,
    });
    events.extend_from_slice(&trace.events);
    events.push(Event {
        activity: END_INDEX,
        role: END_INDEX,
        start: last,
        end: last,
    });
    Trace {
        case_id: trace.case_id.clone(),
        events,
    }
}

pub fn augment_log(log: &EventLog) -> EventLog {
    log.with_traces(log.traces.iter().map(add_boundary_events).collect())
}

/// Time features of every event, plus how many waiting times were negative
/// and clamped to zero.
pub fn compute_time_features(trace: &Trace) -> (Vec<TimeFeatures>, usize) {
    let Some(first) = trace.events.first() else {
        return (Vec::new(), 0);
    };
    let case_start = first.start;
    let case_end = trace.events.last().map_or(first.end, |e| e.end);
    let mut clamped = 0;
    let features = trace
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let waiting = if i == 0 {
                0.0
            } else {
                let raw = e.start - trace.events[i - 1].end;
                if raw < 0.0 {
                    clamped += 1;
                }
                raw.max(0.0)
            };
            TimeFeatures {
                waiting,
                duration: e.end - e.start,
                remaining: case_end - e.end,
                elapsed: e.end - case_start,
            }
        })
        .collect();
    (features, clamped)
}
