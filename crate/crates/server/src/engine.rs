//! The completion engine without any I/O.
//!
//! Requests that need the model come back as a [`GenerationTask`]. The
//! caller drives the task (inline, on a worker thread, or step by step in a
//! test) and hands the [`GenerationOutcome`] back to
//! [`Engine::complete_generation`]. Notifications and telemetry pile up in
//! outboxes that the caller drains.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use ghostline_core::backend::GenerationStream;
use ghostline_core::document::cursor_after;
use ghostline_core::{
    decide_trigger, generation_params_for, truncate_to_scope, CancelToken, Cursor, Document,
    FimPrompt, LanguageFamily, ModelBackend, MonitorStep, RequestOrigin, ScopeCutMonitor,
    ScopeTree, StreamEvent, SuggestionKind, TerminalStatus, TriggerDecision,
};

use crate::cache::{CacheKey, CompletionCache};
use crate::clock::Clock;
use crate::config::EngineConfig;
use crate::telemetry::{TelemetryEvent, TelemetryKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServerError {
    #[error("document {0} is not open")]
    UnknownDocument(String),
    #[error("version regression on {uri}: have {stored}, got {got}")]
    VersionRegression { uri: String, stored: u64, got: u64 },
    #[error("position {0} is outside the document")]
    InvalidPosition(Cursor),
    #[error("unknown request {0}")]
    UnknownRequest(u64),
    #[error("request {0} has not been displayed")]
    NotDisplayed(u64),
    #[error("request {0} was invalidated by a later edit or request")]
    Invalidated(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub uri: String,
    pub version: u64,
    pub cursor: Cursor,
    #[serde(default)]
    pub origin: RequestOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    Suppressed,
    Empty,
    Invalidated,
    TimedOut,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub text: String,
    pub kind: SuggestionKind,
    /// Insert at `start`; `end` equals `start` since nothing is replaced.
    pub start: Cursor,
    pub end: Cursor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub request_id: u64,
    pub suggestion: Option<Suggestion>,
    pub served_from_cache: bool,
    pub generation_latency_ms: u64,
    pub decision: TriggerDecision,
    pub status: ResponseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorState {
    Started,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchingMultiline {
    pub request_id: u64,
    pub state: IndicatorState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextEdit {
    Full(String),
    Range {
        start: Cursor,
        end: Cursor,
        text: String,
    },
}

pub enum Step {
    Done(CompletionResponse),
    Pending(GenerationTask),
}

/// A running generation: pulls chunks, feeds the scope monitor and stops
/// the backend as soon as the rest is known to be cut.
pub struct GenerationTask {
    pub request_id: u64,
    stream: Box<dyn GenerationStream>,
    monitor: ScopeCutMonitor,
    cancel: CancelToken,
    deadline_ms: u64,
    raw: String,
    chunks: usize,
    chunks_after_cancel: usize,
    cut_early: bool,
    status: Option<TerminalStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationOutcome {
    pub request_id: u64,
    /// Everything received, including the part past the cut.
    pub raw: String,
    pub status: TerminalStatus,
    /// The task stopped the stream itself because the scope closed.
    pub cut_early: bool,
    pub chunks: usize,
    /// Chunks received after the cancel signal was raised from outside.
    pub chunks_after_cancel: usize,
}

impl GenerationTask {
    pub fn cancel_token(&self) -> CancelToken {
        self.cancel.clone()
    }

    pub fn is_finished(&self) -> bool {
        self.status.is_some()
    }

    /// Raw text streamed so far.
    pub fn received(&self) -> &str {
        &self.raw
    }

    /// Pull one event. Returns true once the task is finished.
    pub fn step(&mut self, clock: &dyn Clock) -> bool {
        if self.status.is_some() {
            return true;
        }
        if clock.now_ms() >= self.deadline_ms {
            self.cancel.cancel();
            self.status = Some(TerminalStatus::TimedOut);
            return true;
        }
        let externally_cancelled = self.cancel.is_cancelled();
        match self.stream.next_event() {
            StreamEvent::Chunk(chunk) => {
                self.chunks += 1;
                if externally_cancelled {
                    self.chunks_after_cancel += 1;
                }
                self.raw.push_str(&chunk);
                if let Ok(MonitorStep::CutAt(_)) = self.monitor.feed(&chunk) {
                    self.cancel.cancel();
                    self.cut_early = true;
                    self.status = Some(TerminalStatus::Cancelled);
                }
            }
            StreamEvent::End(status) => self.status = Some(status),
        }
        self.status.is_some()
    }

    pub fn run(mut self, clock: &dyn Clock) -> GenerationOutcome {
        while !self.step(clock) {}
        self.into_outcome()
    }

    pub fn into_outcome(self) -> GenerationOutcome {
        GenerationOutcome {
            request_id: self.request_id,
            raw: self.raw,
            status: self.status.unwrap_or(TerminalStatus::Cancelled),
            cut_early: self.cut_early,
            chunks: self.chunks,
            chunks_after_cancel: self.chunks_after_cancel,
        }
    }
}

struct DocState {
    doc: Document,
    /// `None` for languages the scanner has no rules for.
    family: Option<LanguageFamily>,
    tree: Option<Arc<ScopeTree>>,
}

struct InFlight {
    uri: String,
    version: u64,
    cursor: Cursor,
    decision: TriggerDecision,
    kind: SuggestionKind,
    key: CacheKey,
    cancel: CancelToken,
    received_ms: u64,
    deadline_ms: u64,
    indicator: bool,
    invalidated: bool,
}

#[derive(Clone)]
struct Delivered {
    uri: String,
    version: u64,
    cursor: Cursor,
    text: String,
    kind: SuggestionKind,
    latency_ms: u64,
    served_from_cache: bool,
    displayed_ms: Option<u64>,
}

pub struct Engine {
    config: EngineConfig,
    backend: Arc<dyn ModelBackend>,
    clock: Arc<dyn Clock>,
    docs: HashMap<String, DocState>,
    cache: CompletionCache,
    next_id: u64,
    in_flight: HashMap<u64, InFlight>,
    /// Live generation per document.
    active: HashMap<String, u64>,
    /// Suggestions returned to the client, waiting for display or a verdict.
    delivered: HashMap<u64, Delivered>,
    /// Accepted suggestions whose insertion edit has not arrived yet.
    pending_accept: HashMap<String, (Cursor, String)>,
    notifications: Vec<FetchingMultiline>,
    telemetry: Vec<TelemetryEvent>,
}

impl Engine {
    pub fn new(
        config: EngineConfig,
        backend: Arc<dyn ModelBackend>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let cache = CompletionCache::new(config.cache_capacity, config.cache_ttl_ms);
        Self {
            config,
            backend,
            clock,
            docs: HashMap::new(),
            cache,
            next_id: 1,
            in_flight: HashMap::new(),
            active: HashMap::new(),
            delivered: HashMap::new(),
            pending_accept: HashMap::new(),
            notifications: Vec::new(),
            telemetry: Vec::new(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        Arc::clone(&self.clock)
    }

    pub fn document(&self, uri: &str) -> Option<&Document> {
        self.docs.get(uri).map(|d| &d.doc)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// Generations for `uri` that have not been told to stop.
    pub fn live_generations(&self, uri: &str) -> usize {
        self.in_flight
            .values()
            .filter(|f| f.uri == uri && !f.cancel.is_cancelled())
            .count()
    }

    pub fn take_notifications(&mut self) -> Vec<FetchingMultiline> {
        std::mem::take(&mut self.notifications)
    }

    pub fn take_telemetry(&mut self) -> Vec<TelemetryEvent> {
        std::mem::take(&mut self.telemetry)
    }

    pub fn open_document(
        &mut self,
        uri: &str,
        text: &str,
        language_id: Option<&str>,
        version: u64,
    ) {
        self.invalidate(uri, "reopened");
        let family = family_for(language_id, uri);
        let doc = Document::new(text, family.unwrap_or(LanguageFamily::BraceScoped), version);
        self.docs.insert(
            uri.to_string(),
            DocState {
                doc,
                family,
                tree: None,
            },
        );
    }

    pub fn close_document(&mut self, uri: &str) {
        self.invalidate(uri, "closed");
        self.docs.remove(uri);
        self.pending_accept.remove(uri);
    }

    /// Close out every open suggestion, e.g. before exit.
    pub fn shutdown(&mut self) {
        let uris: Vec<String> = self.docs.keys().cloned().collect();
        for uri in uris {
            self.invalidate(&uri, "shutdown");
        }
    }

    pub fn apply_document_edit(
        &mut self,
        uri: &str,
        version: u64,
        edits: &[TextEdit],
    ) -> Result<(), ServerError> {
        let state = self
            .docs
            .get(uri)
            .ok_or_else(|| ServerError::UnknownDocument(uri.to_string()))?;
        if version <= state.doc.version() {
            return Err(ServerError::VersionRegression {
                uri: uri.to_string(),
                stored: state.doc.version(),
                got: version,
            });
        }
        let mut doc = state.doc.clone();
        let mut inserted = 0;
        let mut insertions = Vec::new();
        for edit in edits {
            let (next, at, text) = match edit {
                TextEdit::Full(text) => {
                    let (start, added) = diff_insertion(doc.text(), text);
                    (
                        Document::new(text.as_str(), doc.family(), version),
                        start,
                        added,
                    )
                }
                TextEdit::Range { start, end, text } => {
                    if !doc.is_valid(*start) || !doc.is_valid(*end) || end < start {
                        return Err(ServerError::InvalidPosition(if doc.is_valid(*start) {
                            *end
                        } else {
                            *start
                        }));
                    }
                    (
                        doc.replace(*start, *end, text, version),
                        Some(*start),
                        text.clone(),
                    )
                }
            };
            inserted += text.chars().count();
            insertions.push((at, text));
            doc = next;
        }
        let doc = doc.with_version(version);

        let accepted = self.pending_accept.remove(uri);
        let is_acceptance = matches!(
            (&accepted, insertions.as_slice()),
            (Some((cursor, text)), [(Some(at), added)]) if at == cursor && added == text
        );
        self.invalidate(uri, "edit");
        if !is_acceptance && inserted > 0 {
            let event = self
                .event(TelemetryKind::Typed, 0, uri)
                .with_chars(inserted);
            self.telemetry.push(event);
        }
        let state = self.docs.get_mut(uri).expect("checked above");
        state.doc = doc;
        state.tree = None;
        Ok(())
    }

    /// The user moved the cursor without editing.
    pub fn cursor_moved(&mut self, uri: &str) {
        if self.config.invalidate_on_cursor_move {
            self.invalidate(uri, "cursor_moved");
        }
    }

    pub fn handle_inline_completion(
        &mut self,
        req: &CompletionRequest,
    ) -> Result<Step, ServerError> {
        let state = self
            .docs
            .get(&req.uri)
            .ok_or_else(|| ServerError::UnknownDocument(req.uri.clone()))?;
        if state.doc.version() == req.version && !state.doc.is_valid(req.cursor) {
            return Err(ServerError::InvalidPosition(req.cursor));
        }
        // A newer request supersedes whatever this document had going.
        self.invalidate(&req.uri, "superseded");

        let id = self.next_id;
        self.next_id += 1;
        let now = self.clock.now_ms();
        let state = self.docs.get_mut(&req.uri).expect("checked above");
        let empty = |decision, status, diagnostic: Option<String>| {
            Step::Done(CompletionResponse {
                request_id: id,
                suggestion: None,
                served_from_cache: false,
                generation_latency_ms: 0,
                decision,
                status,
                diagnostic,
            })
        };

        if state.doc.version() != req.version {
            let diag = format!(
                "document is at version {}, request was for {}",
                state.doc.version(),
                req.version
            );
            self.emit(TelemetryKind::Requested, id, &req.uri, None);
            let e = self
                .event(TelemetryKind::Invalidated, id, &req.uri)
                .with_detail("stale_version");
            self.telemetry.push(e);
            return Ok(empty(
                TriggerDecision::Suppress,
                ResponseStatus::Invalidated,
                Some(diag),
            ));
        }
        if state.family.is_none() {
            self.emit(TelemetryKind::Requested, id, &req.uri, None);
            let e = self
                .event(TelemetryKind::Suppressed, id, &req.uri)
                .with_detail("unsupported_language");
            self.telemetry.push(e);
            return Ok(empty(
                TriggerDecision::Suppress,
                ResponseStatus::Suppressed,
                None,
            ));
        }

        let tree = Arc::clone(state.tree.get_or_insert_with(|| {
            Arc::new(ghostline_core::scope::parse_document_with(
                &state.doc,
                &self.config.trigger.scope,
            ))
        }));
        let doc = state.doc.clone();
        let decision = decide_trigger(&doc, req.cursor, &req.origin, &tree, &self.config.trigger)
            .expect("fresh tree and validated cursor");
        let Some(kind) = decision.kind() else {
            self.emit(TelemetryKind::Requested, id, &req.uri, None);
            let e = self
                .event(TelemetryKind::Suppressed, id, &req.uri)
                .with_detail("trigger");
            self.telemetry.push(e);
            return Ok(empty(decision, ResponseStatus::Suppressed, None));
        };
        self.emit(TelemetryKind::Requested, id, &req.uri, Some(kind));

        let params =
            generation_params_for(decision, &self.config.trigger).expect("validated config");
        let multi_line = kind == SuggestionKind::MultiLine;
        let prompt = FimPrompt::build(&doc, req.cursor, multi_line, self.config.windows);
        let key = CacheKey::new(&prompt, kind, &params);
        if let Some(text) = self.cache.get(&key, now) {
            self.delivered.insert(
                id,
                Delivered {
                    uri: req.uri.clone(),
                    version: req.version,
                    cursor: req.cursor,
                    text: text.clone(),
                    kind,
                    latency_ms: 0,
                    served_from_cache: true,
                    displayed_ms: None,
                },
            );
            return Ok(Step::Done(CompletionResponse {
                request_id: id,
                suggestion: Some(Suggestion {
                    text,
                    kind,
                    start: req.cursor,
                    end: req.cursor,
                }),
                served_from_cache: true,
                generation_latency_ms: 0,
                decision,
                status: ResponseStatus::Ok,
                diagnostic: None,
            }));
        }

        let monitor =
            ScopeCutMonitor::for_cursor(&tree, &doc, req.cursor, kind, &self.config.trigger.scope)
                .expect("fresh tree and validated cursor");
        let cancel = CancelToken::new();
        let stream = self.backend.generate(&prompt, &params, &cancel);
        let budget = match kind {
            SuggestionKind::SingleLine => self.config.timeouts.single_line_ms,
            SuggestionKind::MultiLine => self.config.timeouts.multi_line_ms,
        };
        if multi_line {
            self.notifications.push(FetchingMultiline {
                request_id: id,
                state: IndicatorState::Started,
            });
        }
        self.in_flight.insert(
            id,
            InFlight {
                uri: req.uri.clone(),
                version: req.version,
                cursor: req.cursor,
                decision,
                kind,
                key,
                cancel: cancel.clone(),
                received_ms: now,
                deadline_ms: now + budget,
                indicator: multi_line,
                invalidated: false,
            },
        );
        self.active.insert(req.uri.clone(), id);
        Ok(Step::Pending(GenerationTask {
            request_id: id,
            stream,
            monitor,
            cancel,
            deadline_ms: now + budget,
            raw: String::new(),
            chunks: 0,
            chunks_after_cancel: 0,
            cut_early: false,
            status: None,
        }))
    }

    /// Run a pending task to the end on the calling thread.
    pub fn resolve(&mut self, step: Step) -> CompletionResponse {
        match step {
            Step::Done(response) => response,
            Step::Pending(task) => {
                let outcome = task.run(self.clock.as_ref());
                self.complete_generation(outcome)
            }
        }
    }

    pub fn complete_generation(&mut self, outcome: GenerationOutcome) -> CompletionResponse {
        let id = outcome.request_id;
        let now = self.clock.now_ms();
        let Some(mut flight) = self.in_flight.remove(&id) else {
            return CompletionResponse {
                request_id: id,
                suggestion: None,
                served_from_cache: false,
                generation_latency_ms: 0,
                decision: TriggerDecision::Suppress,
                status: ResponseStatus::Invalidated,
                diagnostic: Some("unknown or already completed request".into()),
            };
        };
        if self.active.get(&flight.uri) == Some(&id) {
            self.active.remove(&flight.uri);
        }
        self.finish_indicator(id, &mut flight);
        let latency = now.saturating_sub(flight.received_ms);
        let mut response = CompletionResponse {
            request_id: id,
            suggestion: None,
            served_from_cache: false,
            generation_latency_ms: latency,
            decision: flight.decision,
            status: ResponseStatus::Invalidated,
            diagnostic: None,
        };
        if flight.invalidated {
            return response;
        }
        let uri = flight.uri.clone();
        let kind = Some(flight.kind);
        let terminal = |engine: &mut Engine, tk: TelemetryKind, detail: &str| {
            let mut e = engine
                .event(tk, id, &uri)
                .with_kind(kind)
                .with_detail(detail);
            e.latency_ms = Some(latency);
            engine.telemetry.push(e);
        };
        if outcome.status == TerminalStatus::TimedOut || now > flight.deadline_ms {
            flight.cancel.cancel();
            terminal(self, TelemetryKind::TimedOut, "deadline");
            response.status = ResponseStatus::TimedOut;
            return response;
        }
        if let TerminalStatus::Failed(diag) = &outcome.status {
            terminal(self, TelemetryKind::Suppressed, "backend_failed");
            response.status = ResponseStatus::Failed;
            response.diagnostic = Some(diag.clone());
            return response;
        }
        let doc = self
            .docs
            .get(&uri)
            .filter(|s| s.doc.version() == flight.version);
        let usable = outcome.status == TerminalStatus::Completed || outcome.cut_early;
        let (Some(state), true) = (doc, usable) else {
            terminal(self, TelemetryKind::Invalidated, "cancelled");
            return response;
        };
        let doc = state.doc.clone();
        let tree = match &state.tree {
            Some(tree) => Arc::clone(tree),
            None => Arc::new(ghostline_core::scope::parse_document_with(
                &doc,
                &self.config.trigger.scope,
            )),
        };
        let truncated = truncate_to_scope(
            &outcome.raw,
            &tree,
            &doc,
            flight.cursor,
            flight.kind,
            &self.config.postprocess,
        )
        .expect("tree matches document");
        if truncated.is_empty() {
            terminal(self, TelemetryKind::Suppressed, "empty");
            response.status = ResponseStatus::Empty;
            return response;
        }
        self.cache.insert(flight.key, truncated.text.clone(), now);
        self.delivered.insert(
            id,
            Delivered {
                uri: uri.clone(),
                version: flight.version,
                cursor: flight.cursor,
                text: truncated.text.clone(),
                kind: flight.kind,
                latency_ms: latency,
                served_from_cache: false,
                displayed_ms: None,
            },
        );
        response.status = ResponseStatus::Ok;
        response.suggestion = Some(Suggestion {
            text: truncated.text,
            kind: flight.kind,
            start: flight.cursor,
            end: flight.cursor,
        });
        response
    }

    /// The client started showing the suggestion.
    pub fn mark_displayed(&mut self, request_id: u64) -> Result<(), ServerError> {
        let now = self.clock.now_ms();
        let user = self.config.user.clone();
        let d = self.lookup_delivered(request_id)?;
        if d.displayed_ms.is_some() {
            return Ok(());
        }
        d.displayed_ms = Some(now);
        let mut e = TelemetryEvent::new(TelemetryKind::Displayed, request_id, &d.uri, now)
            .with_kind(Some(d.kind))
            .with_chars(d.text.chars().count());
        e.latency_ms = Some(d.latency_ms);
        e.served_from_cache = Some(d.served_from_cache);
        e.user = user;
        self.telemetry.push(e);
        Ok(())
    }

    /// Accept a displayed suggestion. Returns where the cursor goes once
    /// the block is inserted: the end of the block.
    pub fn accept_suggestion(&mut self, request_id: u64) -> Result<Cursor, ServerError> {
        let d = self.take_displayed(request_id)?;
        let current = self.docs.get(&d.uri).map(|s| s.doc.version());
        if current != Some(d.version) {
            return Err(ServerError::Invalidated(request_id));
        }
        let mut e = self
            .event(TelemetryKind::Accepted, request_id, &d.uri)
            .with_kind(Some(d.kind))
            .with_chars(d.text.chars().count());
        e.display_ms = d
            .displayed_ms
            .map(|t| self.clock.now_ms().saturating_sub(t));
        self.telemetry.push(e);
        let end = cursor_after(d.cursor, &d.text);
        self.pending_accept.insert(d.uri, (d.cursor, d.text));
        Ok(end)
    }

    pub fn reject_suggestion(&mut self, request_id: u64) -> Result<(), ServerError> {
        let d = self.take_displayed(request_id)?;
        self.reject(request_id, &d, "dismissed");
        Ok(())
    }

    fn lookup_delivered(&mut self, request_id: u64) -> Result<&mut Delivered, ServerError> {
        if request_id == 0 || request_id >= self.next_id {
            return Err(ServerError::UnknownRequest(request_id));
        }
        self.delivered
            .get_mut(&request_id)
            .ok_or(ServerError::Invalidated(request_id))
    }

    fn take_displayed(&mut self, request_id: u64) -> Result<Delivered, ServerError> {
        let d = self.lookup_delivered(request_id)?;
        if d.displayed_ms.is_none() {
            return Err(ServerError::NotDisplayed(request_id));
        }
        Ok(self.delivered.remove(&request_id).expect("looked up"))
    }

    fn reject(&mut self, request_id: u64, d: &Delivered, detail: &str) {
        let mut e = self
            .event(TelemetryKind::Rejected, request_id, &d.uri)
            .with_kind(Some(d.kind))
            .with_chars(d.text.chars().count())
            .with_detail(detail);
        e.display_ms = d
            .displayed_ms
            .map(|t| self.clock.now_ms().saturating_sub(t));
        self.telemetry.push(e);
    }

    /// Stop the live generation for `uri` and retire every suggestion the
    /// client still holds for it.
    fn invalidate(&mut self, uri: &str, detail: &str) {
        if let Some(id) = self.active.remove(uri) {
            if let Some(mut flight) = self.in_flight.remove(&id) {
                flight.cancel.cancel();
                flight.invalidated = true;
                let e = self
                    .event(TelemetryKind::Invalidated, id, uri)
                    .with_kind(Some(flight.kind))
                    .with_detail(detail);
                self.telemetry.push(e);
                self.finish_indicator(id, &mut flight);
                self.in_flight.insert(id, flight);
            }
        }
        let mut ids: Vec<u64> = self
            .delivered
            .iter()
            .filter(|(_, d)| d.uri == uri)
            .map(|(id, _)| *id)
            .collect();
        ids.sort_unstable();
        for id in ids {
            let d = self.delivered.remove(&id).expect("listed");
            if d.displayed_ms.is_some() {
                self.reject(id, &d, detail);
            } else {
                let e = self
                    .event(TelemetryKind::Invalidated, id, uri)
                    .with_kind(Some(d.kind))
                    .with_detail(detail);
                self.telemetry.push(e);
            }
        }
    }

    fn finish_indicator(&mut self, id: u64, flight: &mut InFlight) {
        if flight.indicator {
            flight.indicator = false;
            self.notifications.push(FetchingMultiline {
                request_id: id,
                state: IndicatorState::Finished,
            });
        }
    }

    fn event(&self, kind: TelemetryKind, id: u64, uri: &str) -> TelemetryEvent {
        let mut e = TelemetryEvent::new(kind, id, uri, self.clock.now_ms());
        e.user = self.config.user.clone();
        e
    }

    fn emit(
        &mut self,
        kind: TelemetryKind,
        id: u64,
        uri: &str,
        suggestion: Option<SuggestionKind>,
    ) {
        let e = self.event(kind, id, uri).with_kind(suggestion);
        self.telemetry.push(e);
    }
}

/// Family for a document from its language id, falling back to the file
/// extension of the URI.
pub fn family_for(language_id: Option<&str>, uri: &str) -> Option<LanguageFamily> {
    let by_id = language_id.and_then(|id| match id {
        "python" => Some(LanguageFamily::IndentScoped),
        "c" | "cpp" | "java" | "javascript" | "typescript" | "javascriptreact"
        | "typescriptreact" | "rust" | "go" | "csharp" | "php" | "hack" | "kotlin" | "swift" => {
            Some(LanguageFamily::BraceScoped)
        }
        _ => None,
    });
    by_id.or_else(|| {
        let name = uri.rsplit('/').next().unwrap_or(uri);
        let ext = name.rsplit_once('.').map(|(_, e)| e)?;
        LanguageFamily::from_extension(ext)
    })
}

/// Where a full-text change inserted text, and what. `None` position when
/// the change is not a pure insertion.
fn diff_insertion(old: &str, new: &str) -> (Option<Cursor>, String) {
    let prefix: usize = old
        .chars()
        .zip(new.chars())
        .take_while(|(a, b)| a == b)
        .map(|(a, _)| a.len_utf8())
        .sum();
    let max_suffix = old.len().min(new.len()) - prefix;
    let suffix: usize = old[prefix..]
        .chars()
        .rev()
        .zip(new[prefix..].chars().rev())
        .take_while(|(a, b)| a == b)
        .map(|(a, _)| a.len_utf8())
        .sum::<usize>()
        .min(max_suffix);
    let added = new[prefix..new.len() - suffix].to_string();
    let pure = old.len() - suffix == prefix;
    let at = pure.then(|| {
        let before = &old[..prefix];
        cursor_after(Cursor::new(0, 0), before)
    });
    (at, added)
}
