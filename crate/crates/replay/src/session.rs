//! Typing scripts derived from ground-truth files.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use ghostline_core::Cursor;

use crate::config::ReplayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionEvent {
    TypeChar(char),
    MoveCursor(Cursor),
    Pause(u64),
    ExplicitTrigger,
}

/// Inter-keystroke pauses. Ordinary keystrokes are log-normal; the first
/// visible character of a line waits `think_ms`; leading indentation is
/// entered by the editor and waits `indent_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PauseModel {
    pub median_ms: f64,
    pub sigma: f64,
    pub think_ms: u64,
    pub indent_ms: u64,
}

impl Default for PauseModel {
    fn default() -> Self {
        Self {
            median_ms: 180.0,
            sigma: 0.5,
            think_ms: 1500,
            indent_ms: 0,
        }
    }
}

impl PauseModel {
    pub fn validate(&self) -> Result<(), ReplayError> {
        if !(self.median_ms > 0.0 && self.median_ms.is_finite()) {
            return Err(ReplayError::invalid(
                "session.median_ms",
                "must be positive",
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ReplayError::invalid(
                "session.sigma",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    pub(crate) fn keystroke(&self) -> LogNormal<f64> {
        LogNormal::new(self.median_ms.ln(), self.sigma).expect("validated pause model")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScript {
    pub events: Vec<SessionEvent>,
}

impl SessionScript {
    /// Type `text` from an empty buffer one character at a time.
    pub fn from_ground_truth(text: &str, pauses: &PauseModel, seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let keystroke = pauses.keystroke();
        let mut events = Vec::with_capacity(text.len() * 2);
        let mut line_start = true;
        for c in text.chars() {
            let pause = if line_start && c != '\n' && c.is_whitespace() {
                pauses.indent_ms
            } else if line_start && c != '\n' {
                pauses.think_ms
            } else {
                keystroke.sample(&mut rng).round() as u64
            };
            if pause > 0 {
                events.push(SessionEvent::Pause(pause));
            }
            events.push(SessionEvent::TypeChar(c));
            if c == '\n' {
                line_start = true;
            } else if !c.is_whitespace() {
                line_start = false;
            }
        }
        Self { events }
    }

    /// Text produced by the `TypeChar` events alone.
    pub fn typed_text(&self) -> String {
        self.events
            .iter()
            .filter_map(|e| match e {
                SessionEvent::TypeChar(c) => Some(*c),
                _ => None,
            })
            .collect()
    }
}
