use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, NaiveDateTime, Utc};
use indexmap::IndexMap;
use log::warn;
use serde::{Deserialize, Serialize};

use super::{Event, EventLog, EventLogError, Trace, Vocab};

/// Header names of the five logical columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub case_id: String,
    pub activity: String,
    pub role: String,
    pub start: String,
    pub end: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            case_id: "case_id".into(),
            activity: "activity".into(),
            role: "role".into(),
            start: "start_timestamp".into(),
            end: "end_timestamp".into(),
        }
    }
}

/// Counts gathered while parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub rows: usize,
    pub events: usize,
    pub traces: usize,
    pub activities: usize,
    pub roles: usize,
    pub dropped_negative_duration: usize,
}

impl std::fmt::Display for ParseReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "rows: {}", self.rows)?;
        writeln!(f, "traces: {}", self.traces)?;
        writeln!(f, "events: {}", self.events)?;
        writeln!(f, "activities: {}", self.activities)?;
        writeln!(f, "roles: {}", self.roles)?;
        write!(f, "dropped_negative_duration: {}", self.dropped_negative_duration)
    }
}

const NAIVE_FORMATS: [&str; 2] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"];
const OFFSET_FORMATS: [&str; 2] = ["%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%z"];

/// Parses a timestamp to seconds since the epoch, at microsecond
/// resolution. Accepted: RFC 3339 / ISO-8601 with offset or `Z`, ISO-8601
/// without offset (read as UTC), and `YYYY-MM-DD HH:MM:SS[.f][offset]`.
pub fn parse_timestamp(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let micros = if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        dt.timestamp_micros()
    } else if let Some(dt) = OFFSET_FORMATS.iter().find_map(|f| DateTime::parse_from_str(s, f).ok()) {
        dt.timestamp_micros()
    } else {
        NAIVE_FORMATS
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())?
            .and_utc()
            .timestamp_micros()
    };
    Some(micros as f64 / 1e6)
}

fn format_timestamp(seconds: f64) -> String {
    let micros = (seconds * 1e6).round() as i64;
    DateTime::<Utc>::from_timestamp_micros(micros)
        .map(|dt| dt.format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string())
        .unwrap_or_default()
}

pub fn parse_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<(EventLog, ParseReport), EventLogError> {
    let file = std::fs::File::open(path)?;
    parse_reader(file, columns)
}

struct RawRow {
    case_id: String,
    activity: String,
    role: String,
    start: f64,
    end: f64,
}

/// Reads a headed CSV. Rows whose end precedes their start are dropped and
/// counted. Traces keep the order in which their case first appears;
/// vocabularies are assigned in first-appearance order over the grouped,
/// sorted traces.
pub fn parse_reader<R: Read>(reader: R, columns: &ColumnMap) -> Result<(EventLog, ParseReport), EventLogError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EventLogError::MissingColumn(name.to_string()))
    };
    let idx = [
        find(&columns.case_id)?,
        find(&columns.activity)?,
        find(&columns.role)?,
        find(&columns.start)?,
        find(&columns.end)?,
    ];

    let mut cases: IndexMap<String, Vec<RawRow>> = IndexMap::new();
    let mut rows = 0;
    let mut dropped = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row number, header excluded.
        let row = i + 1;
        rows += 1;
        let field = |k: usize| record.get(idx[k]).unwrap_or("");
        let ts = |k: usize| {
            parse_timestamp(field(k)).ok_or_else(|| EventLogError::UnparseableTimestamp {
                row,
                value: field(k).to_string(),
            })
        };
        let (start, end) = (ts(3)?, ts(4)?);
        for (k, name) in [(1, "activity"), (2, "role")] {
            let label = field(k);
            if label.is_empty() {
                return Err(EventLogError::EmptyLabel { row, field: name });
            }
            if Vocab::is_reserved(label) {
                return Err(EventLogError::ReservedLabel {
                    row,
                    label: label.to_string(),
                });
            }
        }
        if end < start {
            dropped += 1;
            continue;
        }
        cases.entry(field(0).to_string()).or_default().push(RawRow {
            case_id: field(0).to_string(),
            activity: field(1).to_string(),
            role: field(2).to_string(),
            start,
            end,
        });
    }
    if dropped > 0 {
        warn!("dropped {dropped} row(s) whose end timestamp precedes the start");
    }
    if cases.is_empty() {
        return Err(EventLogError::EmptyLog);
    }

    let mut activities = Vocab::new();
    let mut roles = Vocab::new();
    let mut traces = Vec::with_capacity(cases.len());
    for (case_id, mut raw) in cases {
        // Stable sort keeps file order for equal (start, end).
        raw.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let events = raw
            .iter()
            .map(|r| {
                debug_assert_eq!(r.case_id, case_id);
                Event {
                    activity: activities.intern(&r.activity),
                    role: roles.intern(&r.role),
                    start: r.start,
                    end: r.end,
                }
            })
            .collect();
        traces.push(Trace { case_id, events });
    }
    let log = EventLog {
        traces,
        activities: Arc::new(activities),
        roles: Arc::new(roles),
    };
    let report = ParseReport {
        rows,
        events: log.total_events(),
        traces: log.len(),
        activities: log.activities.regular_len(),
        roles: log.roles.regular_len(),
        dropped_negative_duration: dropped,
    };
    Ok((log, report))
}

/// Writes the log as CSV, one row per event, traces in log order.
pub fn write_csv<W: Write>(log: &EventLog, columns: &ColumnMap, writer: W) -> Result<(), EventLogError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([&columns.case_id, &columns.activity, &columns.role, &columns.start, &columns.end])?;
    for trace in &log.traces {
        for e in &trace.events {
            w.write_record([
                trace.case_id.as_str(),
                log.activities.label(e.activity),
                log.roles.label(e.role),
                &format_timestamp(e.start),
                &format_timestamp(e.end),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "case_id,activity,role,start_timestamp,end_timestamp\n";

    fn parse(body: &str) -> Result<(EventLog, ParseReport), EventLogError> {
        parse_reader(format!("{HEADER}{body}").as_bytes(), &ColumnMap::default())
    }

    #[test]
    fn timestamp_formats() {
        let base = 1_293_876_000.0; // 2011-01-01T10:00:00Z
        assert_eq!(parse_timestamp("2011-01-01T10:00:00Z"), Some(base));
        assert_eq!(parse_timestamp("2011-01-01T11:00:00+01:00"), Some(base));
        assert_eq!(parse_timestamp("2011-01-01T10:00:00"), Some(base));
        assert_eq!(parse_timestamp("2011-01-01 10:00:00"), Some(base));
        assert_eq!(parse_timestamp("2011-01-01 10:00:00.500"), Some(base + 0.5));
        assert_eq!(parse_timestamp("2011-01-01 11:00:00+01:00"), Some(base));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn single_row_gives_one_trace_of_length_one() {
        let (log, report) = parse("c1,A,R,2020-01-01 00:00:00,2020-01-01 00:01:00\n").unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.traces[0].len(), 1);
        assert_eq!(report.events, 1);
        assert_eq!(log.traces[0].events[0].duration(), 60.0);
    }

    #[test]
    fn interleaved_cases_are_grouped_and_sorted() {
        let body = "\
a,X,r1,2020-01-01 00:10:00,2020-01-01 00:11:00
b,Y,r2,2020-01-01 00:05:00,2020-01-01 00:06:00
a,Y,r2,2020-01-01 00:00:00,2020-01-01 00:01:00
b,X,r1,2020-01-01 00:20:00,2020-01-01 00:21:00
a,Z,r1,2020-01-01 00:05:00,2020-01-01 00:07:00
b,Z,r2,2020-01-01 00:01:00,2020-01-01 00:02:00
";
        let (log, _) = parse(body).unwrap();
        // Hand-sorted fixture: (case, activity, start minute).
        let expected = [
            ("a", vec![("Y", 0.0), ("Z", 5.0), ("X", 10.0)]),
            ("b", vec![("Z", 1.0), ("Y", 5.0), ("X", 20.0)]),
        ];
        let t0 = parse_timestamp("2020-01-01 00:00:00").unwrap();
        assert_eq!(log.len(), 2);
        for (trace, (case, events)) in log.traces.iter().zip(&expected) {
            assert_eq!(trace.case_id, *case);
            let got: Vec<(&str, f64)> = trace
                .events
                .iter()
                .map(|e| (log.activities.label(e.activity), (e.start - t0) / 60.0))
                .collect();
            assert_eq!(&got, events);
        }
    }

    #[test]
    fn negative_durations_are_dropped_and_counted() {
        let body = "\
a,X,r,2020-01-01 00:10:00,2020-01-01 00:09:00
a,Y,r,2020-01-01 00:00:00,2020-01-01 00:01:00
";
        let (log, report) = parse(body).unwrap();
        assert_eq!(report.dropped_negative_duration, 1);
        assert_eq!(log.total_events(), 1);
    }

    #[test]
    fn error_paths() {
        let bad_header = parse_reader("case,activity\n".as_bytes(), &ColumnMap::default());
        assert!(matches!(bad_header, Err(EventLogError::MissingColumn(c)) if c == "case_id"));
        assert!(matches!(
            parse("a,X,r,nope,2020-01-01 00:00:00\n"),
            Err(EventLogError::UnparseableTimestamp { row: 1, .. })
        ));
        assert!(matches!(parse(""), Err(EventLogError::EmptyLog)));
        assert!(matches!(
            parse("a,«end»,r,2020-01-01 00:00:00,2020-01-01 00:00:00\n"),
            Err(EventLogError::ReservedLabel { row: 1, .. })
        ));
        assert!(matches!(
            parse("a,X,,2020-01-01 00:00:00,2020-01-01 00:00:00\n"),
            Err(EventLogError::EmptyLabel { field: "role", .. })
        ));
    }

    #[test]
    fn custom_column_names() {
        let cols = ColumnMap {
            case_id: "caseid".into(),
            activity: "task".into(),
            role: "user".into(),
            start: "start".into(),
            end: "end".into(),
        };
        let csv = "task,caseid,user,end,start\nA,1,u,2020-01-01T00:00:05Z,2020-01-01T00:00:00Z\n";
        let (log, _) = parse_reader(csv.as_bytes(), &cols).unwrap();
        assert_eq!(log.traces[0].case_id, "1");
        assert_eq!(log.traces[0].events[0].duration(), 5.0);
    }
}
