use std::collections::HashSet;

use ppm_core::eventlog::{parse_reader, split_chronological, split_counts, write_csv, ColumnMap, DEFAULT_FRACTIONS};
use proptest::prelude::*;

/// Builds CSV text for cases given as (case, [(activity, role, start, end)])
/// and emits rows interleaved across cases.
fn csv_text(rows: &[(String, String, String, i64, i64)]) -> String {
    let mut out = String::from("case_id,activity,role,start_timestamp,end_timestamp\n");
    for (case, act, role, s, e) in rows {
        let fmt = |t: i64| {
            chrono::DateTime::from_timestamp(t, 0)
                .unwrap()
                .format("%Y-%m-%d %H:%M:%S")
                .to_string()
        };
        out.push_str(&format!("{case},{act},{role},{},{}\n", fmt(*s), fmt(*e)));
    }
    out
}

fn row_strategy(cases: usize) -> impl Strategy<Value = (String, String, String, i64, i64)> {
    (0..cases, 0..6usize, 0..4usize, 1_500_000_000i64..1_500_100_000, 0i64..5000).prop_map(|(c, a, r, s, d)| {
        (format!("case{c}"), format!("act {a}"), format!("role{r}"), s, s + d)
    })
}

fn parse(text: &str) -> ppm_core::EventLog {
    parse_reader(text.as_bytes(), &ColumnMap::default()).unwrap().0
}

proptest! {
    #[test]
    fn csv_round_trip_is_identity(rows in proptest::collection::vec(row_strategy(8), 1..60)) {
        let log = parse(&csv_text(&rows));
        let mut buf = Vec::new();
        write_csv(&log, &ColumnMap::default(), &mut buf).unwrap();
        let again = parse(std::str::from_utf8(&buf).unwrap());
        prop_assert_eq!(&log, &again);
    }

    #[test]
    fn event_count_matches_report(rows in proptest::collection::vec(row_strategy(5), 1..40)) {
        let (log, report) = parse_reader(csv_text(&rows).as_bytes(), &ColumnMap::default()).unwrap();
        prop_assert_eq!(log.traces.iter().map(|t| t.len()).sum::<usize>(), report.events);
        prop_assert_eq!(report.events, rows.len());
    }

    #[test]
    fn split_is_a_chronological_partition(starts in proptest::collection::vec(0i64..1_000_000, 3..500)) {
        let rows: Vec<_> = starts
            .iter()
            .enumerate()
            .map(|(i, &s)| (format!("c{i}"), "A".to_string(), "R".to_string(), s + 1_500_000_000, s + 1_500_000_060))
            .collect();
        let log = parse(&csv_text(&rows));
        let split = split_chronological(&log, DEFAULT_FRACTIONS).unwrap();
        let parts = [&split.train, &split.validation, &split.test];
        let ids: Vec<&str> = parts.iter().flat_map(|p| p.traces.iter().map(|t| t.case_id.as_str())).collect();
        prop_assert_eq!(ids.len(), log.len());
        prop_assert_eq!(ids.iter().collect::<HashSet<_>>().len(), log.len());
        for pair in parts.windows(2) {
            let latest = pair[0].traces.iter().map(|t| t.first_start()).fold(f64::MIN, f64::max);
            prop_assert!(pair[1].traces.iter().all(|t| t.first_start() >= latest));
        }
        let (a, b, c) = split_counts(log.len(), DEFAULT_FRACTIONS);
        prop_assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (a, b, c));
        prop_assert!(std::sync::Arc::ptr_eq(&split.test.activities, &log.activities));
    }

    #[test]
    fn vocabulary_assignment_is_deterministic(rows in proptest::collection::vec(row_strategy(6), 1..50)) {
        let text = csv_text(&rows);
        prop_assert_eq!(parse(&text).activities, parse(&text).activities);
    }
}

#[test]
fn split_sizes() {
    assert_eq!(split_counts(608, DEFAULT_FRACTIONS), (425, 60, 123));
    assert_eq!(split_counts(10, DEFAULT_FRACTIONS), (7, 1, 2));
    assert_eq!(split_counts(100, DEFAULT_FRACTIONS), (70, 10, 20));
}

#[test]
fn ten_traces_split_in_start_order() {
    // File order is reversed relative to time.
    let rows: Vec<_> = (0..10)
        .rev()
        .map(|d| (format!("day{d}"), "A".into(), "R".into(), 1_600_000_000 + d * 86_400, 1_600_000_000 + d * 86_400 + 60))
        .collect();
    let split = split_chronological(&parse(&csv_text(&rows)), DEFAULT_FRACTIONS).unwrap();
    let ids = |l: &ppm_core::EventLog| l.traces.iter().map(|t| t.case_id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&split.train), (0..7).map(|d| format!("day{d}")).collect::<Vec<_>>());
    assert_eq!(ids(&split.validation), vec!["day7"]);
    assert_eq!(ids(&split.test), vec!["day8", "day9"]);
}

#[test]
fn identical_starts_split_by_file_order() {
    let rows: Vec<_> = (0..10)
        .map(|i| (format!("z{}", 9 - i), "A".into(), "R".into(), 1_600_000_000, 1_600_000_060))
        .collect();
    let split = split_chronological(&parse(&csv_text(&rows)), DEFAULT_FRACTIONS).unwrap();
    assert_eq!(split.train.traces[0].case_id, "z9");
    assert_eq!(split.test.traces[1].case_id, "z0");
}

#[test]
fn too_few_traces() {
    let rows = vec![("a".to_string(), "A".to_string(), "R".to_string(), 1_600_000_000, 1_600_000_001)];
    assert!(split_chronological(&parse(&csv_text(&rows)), DEFAULT_FRACTIONS).is_err());
}
