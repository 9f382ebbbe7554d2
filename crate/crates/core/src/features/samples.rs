use serde::{Deserialize, Serialize};

use super::{compute_time_features, Normalizer};
use crate::eventlog::{EventLog, PAD_INDEX};

/// Input window layout. Both pad on the left so the last position holds
/// the most recent event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    /// Whole prefix, padded to `max_len`; longer prefixes keep the most
    /// recent `max_len` events.
    Prefix { max_len: usize },
    /// Last `g` events.
    NGram { g: usize },
}

impl Encoding {
    pub fn width(&self) -> usize {
        match *self {
            Encoding::Prefix { max_len } => max_len,
            Encoding::NGram { g } => g,
        }
    }
}

/// The five prediction targets of a prefix, in raw seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskTargets {
    pub activity: usize,
    pub role: usize,
    pub waiting: f64,
    pub duration: f64,
    pub remaining: f64,
}

/// One encoded prefix `p^k` of a boundary-augmented trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub case_id: String,
    pub k: usize,
    pub activities: Vec<usize>,
    pub roles: Vec<usize>,
    /// Normalized (waiting, duration, elapsed) per position; padding is 0.
    pub times: Vec<[f64; 3]>,
    pub targets: TaskTargets,
    /// Normalized (waiting, duration, remaining) targets.
    pub target_times: [f64; 3],
}

impl Sample {
    pub fn width(&self) -> usize {
        self.activities.len()
    }

    /// Positions holding real events, oldest first.
    pub fn mask(&self) -> impl Iterator<Item = bool> + '_ {
        self.activities.iter().map(|&a| a != PAD_INDEX)
    }
}

pub struct BuiltSamples {
    pub samples: Vec<Sample>,
    pub truncated: usize,
    pub clamped: usize,
}

/// Emits `n' − 1` samples per trace (k = 1..n'−1), traces in log order.
/// Expects boundary events to be present already.
pub fn build_samples(log: &EventLog, norm: &Normalizer, encoding: Encoding) -> BuiltSamples {
    let width = encoding.width();
    let [s_wait, s_dur, s_elapsed] = norm.inputs();
    let [t_wait, t_dur, t_rem] = norm.targets();
    let mut out = BuiltSamples {
        samples: Vec::new(),
        truncated: 0,
        clamped: 0,
    };
    for trace in &log.traces {
        let (features, clamped) = compute_time_features(trace);
        out.clamped += clamped;
        let inputs: Vec<[f64; 3]> = features
            .iter()
            .map(|f| [s_wait.apply(f.waiting), s_dur.apply(f.duration), s_elapsed.apply(f.elapsed)])
            .collect();
        for k in 1..trace.len() {
            let kept = k.min(width);
            if kept < k && matches!(encoding, Encoding::Prefix { .. }) {
                out.truncated += 1;
            }
            let pad = width - kept;
            let span = k - kept..k;
            let mut activities = vec![PAD_INDEX; pad];
            let mut roles = vec![PAD_INDEX; pad];
            let mut times = vec![[0.0; 3]; pad];
            activities.extend(trace.events[span.clone()].iter().map(|e| e.activity));
            roles.extend(trace.events[span.clone()].iter().map(|e| e.role));
            times.extend_from_slice(&inputs[span]);
            let next = &trace.events[k];
            let targets = TaskTargets {
                activity: next.activity,
                role: next.role,
                waiting: features[k].waiting,
                duration: features[k].duration,
                remaining: features[k - 1].remaining,
            };
            out.samples.push(Sample {
                case_id: trace.case_id.clone(),
                k,
                activities,
                roles,
                times,
                target_times: [
                    t_wait.apply(targets.waiting),
                    t_dur.apply(targets.duration),
                    t_rem.apply(targets.remaining),
                ],
                targets,
            });
        }
    }
    out
}

pub fn build_prefix_samples(log: &EventLog, norm: &Normalizer, max_len: usize) -> Vec<Sample> {
    build_samples(log, norm, Encoding::Prefix { max_len }).samples
}

pub fn build_ngram_samples(log: &EventLog, norm: &Normalizer, g: usize) -> Vec<Sample> {
    build_samples(log, norm, Encoding::NGram { g }).samples
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::eventlog::{Event, Trace, Vocab, END_INDEX, START_INDEX};
    use crate::features::{add_boundary_events, fit_normalizer};

    fn log(lengths: &[usize]) -> EventLog {
        let mut activities = Vocab::new();
        let mut roles = Vocab::new();
        let mut traces = Vec::new();
        for (c, &n) in lengths.iter().enumerate() {
            let events = (0..n)
                .map(|i| Event {
                    activity: activities.intern(&format!("a{i}")),
                    role: roles.intern(&format!("r{}", i % 2)),
                    start: (c * 1000 + i * 10) as f64,
                    end: (c * 1000 + i * 10 + 4) as f64,
                })
                .collect();
            traces.push(add_boundary_events(&Trace {
                case_id: format!("c{c}"),
                events,
            }));
        }
        EventLog {
            traces,
            activities: Arc::new(activities),
            roles: Arc::new(roles),
        }
    }

    #[test]
    fn two_event_trace_gives_three_samples() {
        let l = log(&[2]);
        let norm = fit_normalizer(&l).unwrap();
        let s = build_prefix_samples(&l, &norm, 3);
        assert_eq!(s.len(), 3);
        // k = 1: only «start» is real and the target is the first activity.
        assert_eq!(s[0].activities, vec![PAD_INDEX, PAD_INDEX, START_INDEX]);
        assert_eq!(s[0].targets.activity, l.traces[0].events[1].activity);
        assert_eq!(s[2].targets.activity, END_INDEX);
    }

    #[test]
    fn end_is_a_target_class() {
        let l = log(&[2]);
        let norm = fit_normalizer(&l).unwrap();
        let targets: Vec<usize> = build_prefix_samples(&l, &norm, 3).iter().map(|s| s.targets.activity).collect();
        let a = &l.activities;
        assert_eq!(targets, vec![a.get("a0").unwrap(), a.get("a1").unwrap(), END_INDEX]);
    }

    #[test]
    fn ngram_windows_slide() {
        let l = log(&[8]);
        let norm = fit_normalizer(&l).unwrap();
        let s = build_ngram_samples(&l, &norm, 5);
        let ev = &l.traces[0].events;
        // k = 2: [pad, pad, pad, e_1, e_2].
        assert_eq!(s[1].activities, vec![PAD_INDEX, PAD_INDEX, PAD_INDEX, ev[0].activity, ev[1].activity]);
        // k = 7: [e_3 .. e_7].
        let want: Vec<usize> = ev[2..7].iter().map(|e| e.activity).collect();
        assert_eq!(s[6].activities, want);
    }

    #[test]
    fn prefix_truncation_is_counted() {
        let l = log(&[1, 4]);
        let norm = fit_normalizer(&l).unwrap();
        let built = build_samples(&l, &norm, Encoding::Prefix { max_len: 3 });
        // Trace of 6 augmented events: k = 4, 5 exceed width 3.
        assert_eq!(built.truncated, 2);
        assert!(built.samples.iter().all(|s| s.width() == 3));
    }

    #[test]
    fn padding_times_are_zero_and_channels_align() {
        let l = log(&[3]);
        let norm = fit_normalizer(&l).unwrap();
        for s in build_prefix_samples(&l, &norm, 4) {
            let pad = 4 - s.k.min(4);
            assert!(s.times[..pad].iter().all(|t| *t == [0.0; 3]));
            assert!(s.roles[..pad].iter().all(|&r| r == PAD_INDEX));
            assert!(s.roles[pad..].iter().all(|&r| r != PAD_INDEX));
            assert_eq!(s.activities[3], l.traces[0].events[s.k - 1].activity);
        }
    }
}
