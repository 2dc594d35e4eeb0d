//! Core pipeline for scope-aware multi-line inline completion.
//!
//! The crate is split along the request workflow:
//!
//! - [`document`] and [`scope`] turn a text snapshot into a tree of nested
//!   scopes and answer cursor-relative questions about it.
//! - [`trigger`] decides whether a request should be suppressed, served as a
//!   single line, or served as a multi-line block.
//! - [`postprocess`] cuts raw model output back to the cursor's scope, both in
//!   one shot and incrementally while a stream is still arriving.
//! - [`backend`] builds fill-in-the-middle prompts and streams generations from
//!   a deterministic mock or an HTTP endpoint.

pub mod backend;
pub mod document;
pub mod postprocess;
pub mod scope;
pub mod tokenizer;
pub mod trigger;

pub use backend::{
    CancelToken, FimPrompt, GenerationStream, ModelBackend, PromptWindows, StreamEvent,
    TerminalStatus,
};
pub use document::{Cursor, Document, LanguageFamily};
pub use postprocess::{
    realign_indentation, truncate_to_scope, CutReason, LexicalState, MonitorStep,
    PostprocessConfig, ScopeCutMonitor, TruncatedSuggestion,
};
pub use scope::{
    innermost_scope, is_at_end_of_scope, line_context, parse_document, LineContext, ScopeConfig,
    ScopeError, ScopeKind, ScopeNode, ScopeTree,
};
pub use tokenizer::{token_count, Tokenizer, WordPieceTokenizer};
pub use trigger::{
    decide_trigger, generation_params_for, CloserSet, GenerationParams, MultiLineReason,
    NotebookCell, RequestOrigin, SuggestionKind, TriggerConfig, TriggerDecision, TriggerError,
};
