//! Telemetry fixtures with hand-computed funnels.
#![allow(dead_code)]

use ghostline_core::SuggestionKind;
use ghostline_replay::aggregate;
use ghostline_server::{TelemetryEvent, TelemetryKind};
use ghostline_sim::Percentiles;

pub const SINGLE: Option<SuggestionKind> = Some(SuggestionKind::SingleLine);
pub const MULTI: Option<SuggestionKind> = Some(SuggestionKind::MultiLine);

pub fn ev(kind: TelemetryKind, id: u64, sk: Option<SuggestionKind>) -> TelemetryEvent {
    let mut e = TelemetryEvent::new(kind, id, "file:///a.py", id * 10).with_kind(sk);
    e.user = Some("u1".into());
    e
}

pub fn displayed(
    id: u64,
    sk: Option<SuggestionKind>,
    latency: u64,
    chars: usize,
) -> TelemetryEvent {
    let mut e = ev(TelemetryKind::Displayed, id, sk).with_chars(chars);
    e.latency_ms = Some(latency);
    e
}

pub fn verdict(
    kind: TelemetryKind,
    id: u64,
    sk: Option<SuggestionKind>,
    shown: u64,
    chars: usize,
) -> TelemetryEvent {
    let mut e = ev(kind, id, sk).with_chars(chars);
    e.display_ms = Some(shown);
    e
}

pub fn typed(chars: usize, user: &str) -> TelemetryEvent {
    let mut e = TelemetryEvent::new(TelemetryKind::Typed, 0, "file:///a.py", 1).with_chars(chars);
    e.user = Some(user.into());
    e
}

pub fn fixture() -> Vec<TelemetryEvent> {
    use TelemetryKind::*;
    vec![
        ev(Requested, 1, SINGLE),
        displayed(1, SINGLE, 200, 10),
        verdict(Accepted, 1, SINGLE, 900, 10),
        ev(Requested, 2, MULTI),
        displayed(2, MULTI, 700, 120),
        // accepted quickly: outside the rate
        verdict(Accepted, 2, MULTI, 400, 120),
        ev(Requested, 3, SINGLE),
        displayed(3, SINGLE, 300, 8),
        verdict(Rejected, 3, SINGLE, 1200, 8),
        ev(Requested, 4, MULTI),
        displayed(4, MULTI, 900, 60),
        // exactly at the threshold does not count
        verdict(Rejected, 4, MULTI, 750, 60),
        ev(Requested, 5, None),
        ev(Suppressed, 5, None),
        ev(Requested, 6, SINGLE),
        ev(TimedOut, 6, SINGLE),
        typed(30, "u2"),
        typed(12, "u1"),
        ev(Requested, 7, MULTI),
        ev(Invalidated, 7, MULTI),
    ]
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Hand-computed funnel for [`fixture`].
pub fn twenty_event_fixture() {
    let events = fixture();
    assert_eq!(events.len(), 20);
    let r = aggregate(&events);
    assert_eq!(r.records, 20);
    assert_eq!(r.users, vec!["u1".to_string(), "u2".to_string()]);

    let t = &r.total;
    assert_eq!((t.requested, t.displayed, t.accepted), (7, 4, 2));
    assert_eq!(
        (t.displayed_over_threshold, t.accepted_over_threshold),
        (2, 1)
    );
    assert!(close(t.acceptance_rate, 0.5));
    assert_eq!((t.chars_accepted, t.chars_typed), (130, 42));
    assert!(close(t.percent_keystrokes_saved, 130.0 / 172.0));
    assert_eq!(
        t.latency_ms,
        Percentiles {
            p50: 300.0,
            p90: 900.0,
            p99: 900.0
        }
    );
    assert!(close(t.share_of_displays, 1.0) && close(t.share_of_accepted_chars, 1.0));

    let s = &r.single_line;
    assert_eq!((s.requested, s.displayed, s.accepted), (3, 2, 1));
    assert_eq!(
        (s.displayed_over_threshold, s.accepted_over_threshold),
        (2, 1)
    );
    assert!(close(s.acceptance_rate, 0.5));
    assert_eq!((s.chars_accepted, s.chars_typed), (10, 42));
    assert!(close(s.percent_keystrokes_saved, 10.0 / 172.0));
    assert_eq!(
        s.latency_ms,
        Percentiles {
            p50: 200.0,
            p90: 300.0,
            p99: 300.0
        }
    );
    assert!(close(s.share_of_displays, 0.5));
    assert!(close(s.share_of_accepted_chars, 10.0 / 130.0));

    let m = &r.multi_line;
    assert_eq!((m.requested, m.displayed, m.accepted), (3, 2, 1));
    assert_eq!(
        (m.displayed_over_threshold, m.accepted_over_threshold),
        (0, 0)
    );
    assert_eq!(m.acceptance_rate, 0.0);
    assert_eq!(m.chars_accepted, 120);
    assert!(close(m.percent_keystrokes_saved, 120.0 / 172.0));
    assert_eq!(
        m.latency_ms,
        Percentiles {
            p50: 700.0,
            p90: 900.0,
            p99: 900.0
        }
    );
    assert!(close(m.share_of_displays, 0.5));
    assert!(close(m.share_of_accepted_chars, 120.0 / 130.0));
}

/// 100 long displays with 29 accepted, plus quick accepts that the rate
/// ignores.
pub fn twenty_nine_percent() {
    let mut events = Vec::new();
    for id in 1..=100 {
        events.push(displayed(id, SINGLE, 250, 12));
        let kind = if id <= 29 {
            TelemetryKind::Accepted
        } else {
            TelemetryKind::Rejected
        };
        events.push(verdict(kind, id, SINGLE, 1000, 12));
    }
    // accepted before the threshold: ignored by the rate
    for id in 101..=120 {
        events.push(displayed(id, SINGLE, 250, 12));
        events.push(verdict(TelemetryKind::Accepted, id, SINGLE, 300, 12));
    }
    let r = aggregate(&events);
    assert_eq!(r.total.displayed, 120);
    assert_eq!(r.total.displayed_over_threshold, 100);
    assert!(close(r.total.acceptance_rate, 0.29));
    assert!(close(r.single_line.acceptance_rate, 0.29));
}
