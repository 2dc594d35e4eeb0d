//! Replay a typing script against the engine on a simulated clock.
//!
//! Every keystroke and every acceptance sends a request. A generation is
//! charged the unloaded latency of the tokens it actually streamed, scaled by
//! `latency_scale`, so a scope cut that stops the stream early also shortens
//! the wait. A suggestion is displayed only if it arrives strictly before the
//! next keystroke, and accepted only if the oracle's dwell also ends before it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use ghostline_core::backend::{load_corpus, MockBackend, MockCorpus};
use ghostline_core::{
    Cursor, LanguageFamily, ModelBackend, RequestOrigin, Tokenizer, WordPieceTokenizer,
};
use ghostline_server::{
    Clock, CompletionRequest, CompletionResponse, Engine, EngineConfig, GenerationOutcome,
    GenerationTask, ManualClock, Step, TelemetryEvent, TextEdit,
};
use ghostline_sim::LatencyModel;

use crate::config::{ReplayError, ToolConfig};
use crate::metrics::{aggregate, MetricsReport};
use crate::oracle::AcceptOracle;
use crate::session::{PauseModel, SessionEvent, SessionScript};

/// File holding the mock continuations inside a corpus directory.
pub const CONTINUATIONS_FILE: &str = "continuations.jsonl";

#[derive(Debug, Clone)]
pub struct ReplaySettings {
    pub engine: EngineConfig,
    pub latency: LatencyModel,
    pub latency_scale: f64,
    pub pauses: PauseModel,
    /// Let the oracle accept suggestions. Off, the user types every character.
    pub accept: bool,
}

impl ReplaySettings {
    pub fn from_config(config: &ToolConfig) -> Result<Self, ReplayError> {
        Ok(Self {
            engine: config.engine()?,
            latency: config.latency,
            latency_scale: config.latency_scale,
            pauses: config.session.clone(),
            accept: true,
        })
    }
}

impl Default for ReplaySettings {
    fn default() -> Self {
        Self::from_config(&ToolConfig::default()).expect("defaults are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub uri: String,
    pub chars: usize,
    /// The buffer equals the ground truth after the last event.
    pub matches_truth: bool,
    pub displayed: u64,
    pub accepted: u64,
    pub chars_accepted: u64,
    pub chars_typed: u64,
    #[serde(skip)]
    pub telemetry: Vec<TelemetryEvent>,
}

/// A clock frozen at one instant, for stepping a generation as of then.
struct At(u64);

impl Clock for At {
    fn now_ms(&self) -> u64 {
        self.0
    }
}

enum Ready {
    Response(CompletionResponse),
    Outcome(GenerationOutcome),
}

struct Pending {
    at: u64,
    ready: Ready,
}

struct Session<'a> {
    engine: Engine,
    clock: ManualClock,
    uri: &'a str,
    truth: &'a str,
    /// Always a prefix of `truth`; the cursor sits at its end.
    text: String,
    cursor: Cursor,
    version: u64,
    now: u64,
    latency: LatencyModel,
    oracle: Option<AcceptOracle>,
    pending: Option<Pending>,
}

impl Session<'_> {
    fn request(&mut self, origin: RequestOrigin) {
        self.clock.set(self.now);
        let req = CompletionRequest {
            uri: self.uri.to_string(),
            version: self.version,
            cursor: self.cursor,
            origin,
        };
        let step = self
            .engine
            .handle_inline_completion(&req)
            .expect("replayed requests target the open document");
        self.pending = match step {
            Step::Done(response) if response.suggestion.is_some() => Some(Pending {
                at: self.now,
                ready: Ready::Response(response),
            }),
            Step::Done(_) => None,
            Step::Pending(task) => {
                let (outcome, at) = self.drive(task);
                Some(Pending {
                    at,
                    ready: Ready::Outcome(outcome),
                })
            }
        };
    }

    /// Run `task` to the end, timing each pull by the tokens streamed so far.
    fn drive(&self, mut task: GenerationTask) -> (GenerationOutcome, u64) {
        let start = self.now;
        let mut tokens = TokenCount::default();
        loop {
            tokens.update(task.received());
            let at = start + self.latency.unloaded_ms(tokens.count).round() as u64;
            if task.step(&At(at)) {
                tokens.update(task.received());
                let end = start + self.latency.unloaded_ms(tokens.count).round() as u64;
                return (task.into_outcome(), end.max(at));
            }
        }
    }

    /// Let `ms` pass without typing. Returns the number of characters
    /// accepted, which the user then does not type.
    fn wait(&mut self, ms: u64) -> usize {
        let until = self.now + ms;
        while let Some(p) = self.pending.take_if(|p| p.at < until) {
            self.now = p.at;
            self.clock.set(self.now);
            let response = match p.ready {
                Ready::Response(r) => r,
                Ready::Outcome(o) => self.engine.complete_generation(o),
            };
            let Some(suggestion) = response.suggestion else {
                continue;
            };
            let id = response.request_id;
            self.engine
                .mark_displayed(id)
                .expect("delivered suggestion");
            let Some(oracle) = self.oracle.as_mut() else {
                continue;
            };
            if !oracle.accepts(&suggestion.text, &self.truth[self.text.len()..]) {
                continue;
            }
            let at = self.now + oracle.dwell_ms();
            if at >= until {
                break;
            }
            self.now = at;
            self.clock.set(at);
            let end = self
                .engine
                .accept_suggestion(id)
                .expect("displayed suggestion");
            self.version += 1;
            let edit = TextEdit::Range {
                start: self.cursor,
                end: self.cursor,
                text: suggestion.text.clone(),
            };
            self.engine
                .apply_document_edit(self.uri, self.version, &[edit])
                .expect("insertion at the cursor");
            self.text.push_str(&suggestion.text);
            self.cursor = end;
            self.request(RequestOrigin::typing());
            return suggestion.text.chars().count();
        }
        self.now = until;
        0
    }

    fn type_char(&mut self, c: char) {
        self.clock.set(self.now);
        self.version += 1;
        let edit = TextEdit::Range {
            start: self.cursor,
            end: self.cursor,
            text: c.to_string(),
        };
        self.engine
            .apply_document_edit(self.uri, self.version, &[edit])
            .expect("insertion at the cursor");
        self.settle_invalidated();
        self.text.push(c);
        self.cursor = if c == '\n' {
            Cursor::new(self.cursor.line + 1, 0)
        } else {
            Cursor::new(self.cursor.line, self.cursor.column + 1)
        };
        self.request(RequestOrigin::typing());
    }

    /// Hand back a generation that an edit or cursor move overtook.
    fn settle_invalidated(&mut self) {
        if let Some(Pending {
            ready: Ready::Outcome(o),
            ..
        }) = self.pending.take()
        {
            self.engine.complete_generation(o);
        }
    }
}

/// Token count of a growing string, updated from the new tail only.
#[derive(Default)]
struct TokenCount {
    seen: usize,
    count: u32,
    word_open: bool,
}

impl TokenCount {
    fn update(&mut self, text: &str) {
        let tail = &text[self.seen..];
        if tail.is_empty() {
            return;
        }
        let wordy = |c: char| c.is_alphanumeric() || c == '_';
        let mut added = WordPieceTokenizer.count(tail) as u32;
        if self.word_open && tail.chars().next().is_some_and(wordy) {
            added -= 1;
        }
        self.count += added;
        self.word_open = text.chars().next_back().is_some_and(wordy);
        self.seen = text.len();
    }
}

/// Replay one ground-truth file typed from an empty buffer.
pub fn replay_session(
    truth: &str,
    uri: &str,
    backend: Arc<dyn ModelBackend>,
    settings: &ReplaySettings,
    seed: u64,
) -> SessionMetrics {
    let clock = ManualClock::new(0);
    let mut engine = Engine::new(settings.engine.clone(), backend, Arc::new(clock.clone()));
    engine.open_document(uri, "", None, 0);
    let script = SessionScript::from_ground_truth(truth, &settings.pauses, seed);
    let mut s = Session {
        engine,
        clock,
        uri,
        truth,
        text: String::new(),
        cursor: Cursor::new(0, 0),
        version: 0,
        now: 0,
        latency: settings.latency.scaled(settings.latency_scale),
        oracle: settings
            .accept
            .then(|| AcceptOracle::new(&settings.pauses, seed ^ 0x5eed_acce)),
        pending: None,
    };

    let mut skip = 0;
    for event in script.events {
        match event {
            SessionEvent::TypeChar(_) | SessionEvent::Pause(_) if skip > 0 => {
                if matches!(event, SessionEvent::TypeChar(_)) {
                    skip -= 1;
                }
            }
            SessionEvent::Pause(ms) => skip = s.wait(ms),
            SessionEvent::TypeChar(c) => s.type_char(c),
            SessionEvent::ExplicitTrigger => s.request(RequestOrigin::shortcut()),
            SessionEvent::MoveCursor(_) => {
                // typing always continues at the end of the buffer
                s.clock.set(s.now);
                s.engine.cursor_moved(uri);
                s.settle_invalidated();
            }
        }
    }
    s.wait(settings.pauses.think_ms);
    s.clock.set(s.now);
    s.settle_invalidated();
    s.engine.shutdown();

    let telemetry = s.engine.take_telemetry();
    let report = aggregate(&telemetry);
    SessionMetrics {
        uri: uri.to_string(),
        chars: truth.chars().count(),
        matches_truth: s.text == truth,
        displayed: report.total.displayed,
        accepted: report.total.accepted,
        chars_accepted: report.total.chars_accepted,
        chars_typed: report.total.chars_typed,
        telemetry,
    }
}

/// Ground-truth files of a corpus directory: every file with a known
/// language extension, sorted by name.
pub fn ground_truth_files(dir: &Path) -> Result<Vec<PathBuf>, ReplayError> {
    let entries = std::fs::read_dir(dir).map_err(|e| ReplayError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| ReplayError::io(dir, e))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .and_then(LanguageFamily::from_extension)
            .is_some();
        if known && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// The mock continuations of a corpus directory; empty if there are none.
pub fn load_continuations(dir: &Path) -> Result<MockCorpus, ReplayError> {
    let path = dir.join(CONTINUATIONS_FILE);
    if !path.exists() {
        return Ok(MockCorpus::new());
    }
    let file = std::fs::File::open(&path).map_err(|e| ReplayError::io(&path, e))?;
    load_corpus(std::io::BufReader::new(file))
        .map_err(|e| ReplayError::Parse(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub seed: u64,
    pub latency_scale: f64,
    pub sessions: Vec<SessionMetrics>,
    pub report: MetricsReport,
}

impl ReplayReport {
    pub fn telemetry(&self) -> impl Iterator<Item = &TelemetryEvent> {
        self.sessions.iter().flat_map(|s| s.telemetry.iter())
    }
}

/// Per-file seed, so adding a file does not reshuffle the others.
fn session_seed(seed: u64, name: &str) -> u64 {
    name.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
    })
}

/// Replay every ground-truth file in `dir` with the corpus stored there.
pub fn replay_corpus(
    dir: &Path,
    settings: &ReplaySettings,
    seed: u64,
) -> Result<ReplayReport, ReplayError> {
    let backend: Arc<dyn ModelBackend> = Arc::new(MockBackend::new(load_continuations(dir)?));
    let mut sessions = Vec::new();
    for path in ground_truth_files(dir)? {
        let truth = std::fs::read_to_string(&path).map_err(|e| ReplayError::io(&path, e))?;
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let uri = format!("file:///{name}");
        sessions.push(replay_session(
            &truth,
            &uri,
            Arc::clone(&backend),
            settings,
            session_seed(seed, name),
        ));
    }
    let all: Vec<TelemetryEvent> = sessions
        .iter()
        .flat_map(|s| s.telemetry.iter().cloned())
        .collect();
    Ok(ReplayReport {
        seed,
        latency_scale: settings.latency_scale,
        sessions,
        report: aggregate(&all),
    })
}
