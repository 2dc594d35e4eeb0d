//! The metric funnel over telemetry records.
//!
//! - `acceptance_rate` counts only suggestions that stayed on screen longer
//!   than [`DWELL_THRESHOLD_MS`]. How long a suggestion was shown comes from
//!   the `display_ms` of its `accepted` or `rejected` record, so a display
//!   without a verdict is in `displayed` but not in the rate. Cache hits
//!   follow the same rule.
//! - `percent_keystrokes_saved` is `chars_accepted / (chars_accepted +
//!   chars_typed)`, a fraction of all content entered. Typed characters carry
//!   no suggestion kind, so the per-kind values share the total denominator
//!   and add up to the total.

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use ghostline_core::SuggestionKind;
use ghostline_server::{TelemetryEvent, TelemetryKind};
use ghostline_sim::Percentiles;

pub const DWELL_THRESHOLD_MS: u64 = 750;

/// Diagnostics kept in a report; further malformed records are only counted.
const MAX_DIAGNOSTICS: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Funnel {
    pub requested: u64,
    pub displayed: u64,
    /// Verdicts on suggestions shown longer than the dwell threshold.
    pub displayed_over_threshold: u64,
    pub accepted: u64,
    pub accepted_over_threshold: u64,
    pub acceptance_rate: f64,
    pub chars_accepted: u64,
    pub chars_typed: u64,
    pub percent_keystrokes_saved: f64,
    /// Request to display, over displayed suggestions.
    pub latency_ms: Percentiles,
    pub share_of_displays: f64,
    pub share_of_accepted_chars: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub records: u64,
    pub malformed_records: u64,
    pub diagnostics: Vec<String>,
    pub users: Vec<String>,
    pub total: Funnel,
    pub single_line: Funnel,
    pub multi_line: Funnel,
}

impl MetricsReport {
    pub fn kind(&self, kind: SuggestionKind) -> &Funnel {
        match kind {
            SuggestionKind::SingleLine => &self.single_line,
            SuggestionKind::MultiLine => &self.multi_line,
        }
    }
}

#[derive(Default)]
struct Tally {
    requested: u64,
    displayed: u64,
    over: u64,
    accepted: u64,
    accepted_over: u64,
    chars_accepted: u64,
    latencies: Vec<f64>,
}

impl Tally {
    fn add(&mut self, e: &TelemetryEvent) {
        match e.kind {
            TelemetryKind::Requested => self.requested += 1,
            TelemetryKind::Displayed => {
                self.displayed += 1;
                if let Some(l) = e.latency_ms {
                    self.latencies.push(l as f64);
                }
            }
            TelemetryKind::Accepted | TelemetryKind::Rejected => {
                let accepted = e.kind == TelemetryKind::Accepted;
                let over = e.display_ms.is_some_and(|d| d > DWELL_THRESHOLD_MS);
                if over {
                    self.over += 1;
                }
                if accepted {
                    self.accepted += 1;
                    self.chars_accepted += e.chars.unwrap_or(0);
                    if over {
                        self.accepted_over += 1;
                    }
                }
            }
            _ => {}
        }
    }

    fn funnel(&self, typed: u64, all: &Tally) -> Funnel {
        Funnel {
            requested: self.requested,
            displayed: self.displayed,
            displayed_over_threshold: self.over,
            accepted: self.accepted,
            accepted_over_threshold: self.accepted_over,
            acceptance_rate: ratio(self.accepted_over, self.over),
            chars_accepted: self.chars_accepted,
            chars_typed: typed,
            percent_keystrokes_saved: ratio(self.chars_accepted, all.chars_accepted + typed),
            latency_ms: Percentiles::of(&self.latencies),
            share_of_displays: ratio(self.displayed, all.displayed),
            share_of_accepted_chars: ratio(self.chars_accepted, all.chars_accepted),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Compute the funnel over well-formed records.
pub fn aggregate(events: &[TelemetryEvent]) -> MetricsReport {
    let mut total = Tally::default();
    let mut single = Tally::default();
    let mut multi = Tally::default();
    let mut typed = 0;
    let mut users = BTreeSet::new();
    for e in events {
        if let Some(u) = &e.user {
            users.insert(u.clone());
        }
        if e.kind == TelemetryKind::Typed {
            typed += e.chars.unwrap_or(0);
            continue;
        }
        total.add(e);
        match e.suggestion_kind {
            Some(SuggestionKind::SingleLine) => single.add(e),
            Some(SuggestionKind::MultiLine) => multi.add(e),
            None => {}
        }
    }
    MetricsReport {
        records: events.len() as u64,
        malformed_records: 0,
        diagnostics: Vec::new(),
        users: users.into_iter().collect(),
        total: total.funnel(typed, &total),
        single_line: single.funnel(typed, &total),
        multi_line: multi.funnel(typed, &total),
    }
}

/// Records parsed from a line-delimited sink. Blank lines are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedSink {
    pub events: Vec<TelemetryEvent>,
    pub malformed: u64,
    pub diagnostics: Vec<String>,
}

impl ParsedSink {
    /// Parse one sink and append its records. `name` prefixes diagnostics.
    pub fn read(&mut self, name: &str, reader: impl BufRead) -> std::io::Result<()> {
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<TelemetryEvent>(&line) {
                Ok(e) => self.events.push(e),
                Err(err) => {
                    self.malformed += 1;
                    if self.diagnostics.len() < MAX_DIAGNOSTICS {
                        self.diagnostics.push(format!("{name}:{}: {err}", n + 1));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn report(&self) -> MetricsReport {
        let mut report = aggregate(&self.events);
        report.records += self.malformed;
        report.malformed_records = self.malformed;
        report.diagnostics = self.diagnostics.clone();
        report
    }
}
