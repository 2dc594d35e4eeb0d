//! Typing-session replay and the metric funnel.
//!
//! [`replay_corpus`] types every ground-truth file of a corpus directory
//! against the completion engine with a mock model, lets an
//! [`AcceptOracle`] take correct suggestions, and aggregates the engine's
//! telemetry with [`aggregate`]. The same aggregation runs over live
//! telemetry sinks.

pub mod config;
pub mod metrics;
pub mod oracle;
pub mod replay;
pub mod session;

pub use config::{ReplayError, ToolConfig};
pub use metrics::{aggregate, Funnel, MetricsReport, ParsedSink, DWELL_THRESHOLD_MS};
pub use oracle::AcceptOracle;
pub use replay::{
    ground_truth_files, load_continuations, replay_corpus, replay_session, ReplayReport,
    ReplaySettings, SessionMetrics, CONTINUATIONS_FILE,
};
pub use session::{PauseModel, SessionEvent, SessionScript};
