//! Deterministic toy process for smoke tests and the learnability check.
//!
//! Every case runs the same six activities in the same order, each handled
//! by a fixed role. Only the timing is random.

use std::sync::Arc;

use ppm_nn::Rng;

use crate::eventlog::{Event, EventLog, Trace, Vocab};

/// (activity, role) in execution order.
pub const PROCESS: [(&str, &str); 6] = [
    ("register", "clerk"),
    ("check", "analyst"),
    ("approve", "manager"),
    ("order", "clerk"),
    ("receive", "warehouse"),
    ("pay", "analyst"),
];

/// Case start times are spread over this many seconds.
const CASE_SPACING: f64 = 3_600.0;

/// `traces` cases with seeded, whole-second timestamps.
pub fn generate_log(traces: usize, seed: u64) -> EventLog {
    let mut rng = Rng::seed(seed);
    let mut activities = Vocab::new();
    let mut roles = Vocab::new();
    let mut out = Vec::with_capacity(traces);
    let mut case_start = 1_577_836_800.0; // 2020-01-01T00:00:00Z
    for c in 0..traces {
        case_start += rng.uniform(0.0, 2.0 * CASE_SPACING).round();
        let mut t = case_start;
        let events = PROCESS
            .iter()
            .enumerate()
            .map(|(i, (a, r))| {
                if i > 0 {
                    t += rng.uniform(60.0, 4.0 * 3600.0).round();
                }
                let start = t;
                // Each step has its own typical duration.
                t += ((i + 1) as f64 * 600.0 * rng.uniform(0.5, 1.5)).round();
                Event {
                    activity: activities.intern(a),
                    role: roles.intern(r),
                    start,
                    end: t,
                }
            })
            .collect();
        out.push(Trace {
            case_id: format!("case-{c:04}"),
            events,
        });
    }
    EventLog {
        traces: out,
        activities: Arc::new(activities),
        roles: Arc::new(roles),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = generate_log(20, 7);
        assert_eq!(a.len(), 20);
        assert_eq!(a.total_events(), 120);
        assert_eq!(a.activities.regular_len(), 6);
        assert_eq!(a.roles.regular_len(), 4);
        assert_eq!(a, generate_log(20, 7));
        assert_ne!(a, generate_log(20, 8));
        for t in &a.traces {
            assert!(t.events.windows(2).all(|w| w[0].end <= w[1].start));
        }
    }
}
