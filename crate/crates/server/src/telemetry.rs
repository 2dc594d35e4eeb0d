//! Per-request telemetry records and the line-delimited JSON sink.
//!
//! Field names are part of the sink format; rename nothing.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use ghostline_core::SuggestionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TelemetryKind {
    Requested,
    /// No suggestion: the trigger policy suppressed the request, the backend
    /// failed, or post-processing left nothing.
    Suppressed,
    Displayed,
    Accepted,
    Rejected,
    Invalidated,
    TimedOut,
    /// Characters entered by the user outside of acceptances.
    Typed,
}

impl TelemetryKind {
    /// Kinds that close a `Requested` event.
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            TelemetryKind::Suppressed
                | TelemetryKind::Displayed
                | TelemetryKind::Invalidated
                | TelemetryKind::TimedOut
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetryEvent {
    pub kind: TelemetryKind,
    /// 0 for events not tied to a request (`typed`).
    pub request_id: u64,
    #[serde(default)]
    pub uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion_kind: Option<SuggestionKind>,
    pub ts_ms: u64,
    /// Request to response, for `displayed` and terminal failures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    /// How long the suggestion was on screen, for `accepted` and `rejected`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chars: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub served_from_cache: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
}

impl TelemetryEvent {
    pub fn new(kind: TelemetryKind, request_id: u64, uri: &str, ts_ms: u64) -> Self {
        Self {
            kind,
            request_id,
            uri: uri.to_string(),
            suggestion_kind: None,
            ts_ms,
            latency_ms: None,
            display_ms: None,
            chars: None,
            served_from_cache: None,
            detail: None,
            user: None,
        }
    }

    pub fn with_kind(mut self, kind: Option<SuggestionKind>) -> Self {
        self.suggestion_kind = kind;
        self
    }

    pub fn with_chars(mut self, chars: usize) -> Self {
        self.chars = Some(chars as u64);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Append-only JSONL writer.
pub struct TelemetrySink {
    out: Box<dyn Write + Send>,
}

impl TelemetrySink {
    pub fn new(out: impl Write + Send + 'static) -> Self {
        Self { out: Box::new(out) }
    }

    pub fn append_to(path: &Path) -> std::io::Result<Self> {
        let file: File = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::new(BufWriter::new(file)))
    }

    pub fn write(&mut self, event: &TelemetryEvent) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, event)?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

impl Drop for TelemetrySink {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}
