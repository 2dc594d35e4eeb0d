//! Inline completion server.
//!
//! [`Engine`] holds all request state and does no I/O. [`protocol::serve`]
//! wraps it in a JSON-RPC loop with LSP framing.

pub mod cache;
pub mod clock;
pub mod config;
pub mod engine;
pub mod protocol;
pub mod telemetry;

pub use cache::{CacheEntry, CacheKey, CompletionCache};
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{BackendConfig, ConfigError, EngineConfig, ServerConfig};
pub use engine::{
    family_for, CompletionRequest, CompletionResponse, Engine, FetchingMultiline,
    GenerationOutcome, GenerationTask, IndicatorState, ResponseStatus, ServerError, Step,
    Suggestion, TextEdit,
};
pub use protocol::{serve, ServeError};
pub use telemetry::{TelemetryEvent, TelemetryKind, TelemetrySink};
