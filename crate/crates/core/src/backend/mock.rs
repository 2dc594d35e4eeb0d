//! Deterministic corpus-driven backend.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::corpus::{context_fingerprint, MockCorpus};
use super::{
    limit_text, CancelToken, FimPrompt, GenerationStream, ModelBackend, StreamEvent, TerminalStatus,
};
use crate::document::LanguageFamily;
use crate::scope::{indent_header_kind, indent_width, ScopeConfig};
use crate::tokenizer::{Tokenizer, WordPieceTokenizer};
use crate::trigger::GenerationParams;

/// Chunk size in code points.
pub const CHUNK_CHARS: usize = 8;

/// Call counters shared between a backend and its streams.
#[derive(Debug, Default)]
pub struct MockStats {
    calls: AtomicUsize,
    live: AtomicUsize,
    peak_live: AtomicUsize,
    chunks: AtomicUsize,
}

impl MockStats {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Streams created and not yet finished or dropped.
    pub fn live_streams(&self) -> usize {
        self.live.load(Ordering::SeqCst)
    }

    pub fn peak_live_streams(&self) -> usize {
        self.peak_live.load(Ordering::SeqCst)
    }

    pub fn chunks(&self) -> usize {
        self.chunks.load(Ordering::SeqCst)
    }
}

pub struct MockBackend {
    corpus: Arc<MockCorpus>,
    fallback: bool,
    failure: Option<String>,
    chunk_delay: Option<Duration>,
    tokenizer: Box<dyn Tokenizer>,
    stats: Arc<MockStats>,
}

impl MockBackend {
    pub fn new(corpus: MockCorpus) -> Self {
        Self {
            corpus: Arc::new(corpus),
            fallback: false,
            failure: None,
            chunk_delay: None,
            tokenizer: Box::new(WordPieceTokenizer),
            stats: Arc::default(),
        }
    }

    /// Produce a templated block for unknown contexts instead of nothing.
    pub fn with_fallback(mut self, on: bool) -> Self {
        self.fallback = on;
        self
    }

    /// Sleep before every chunk.
    pub fn with_chunk_delay(mut self, delay: Duration) -> Self {
        self.chunk_delay = Some(delay);
        self
    }

    pub fn with_tokenizer(mut self, tokenizer: Box<dyn Tokenizer>) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    /// Every stream ends immediately with `Failed(diagnostic)`.
    pub fn failing(mut self, diagnostic: impl Into<String>) -> Self {
        self.failure = Some(diagnostic.into());
        self
    }

    pub fn stats(&self) -> Arc<MockStats> {
        Arc::clone(&self.stats)
    }

    /// The continuation for a prompt before any limits are applied.
    pub fn lookup(&self, prompt: &FimPrompt) -> String {
        let typed = prompt.current_line();
        if let Some(stored) = self.corpus.get(&context_fingerprint(&prompt.prefix)) {
            if let Some(rest) = stored.strip_prefix(typed) {
                return rest.to_string();
            }
        }
        if self.fallback {
            return template(prompt);
        }
        String::new()
    }
}

impl ModelBackend for MockBackend {
    fn generate(
        &self,
        prompt: &FimPrompt,
        params: &GenerationParams,
        cancel: &CancelToken,
    ) -> Box<dyn GenerationStream> {
        self.stats.calls.fetch_add(1, Ordering::SeqCst);
        let live = self.stats.live.fetch_add(1, Ordering::SeqCst) + 1;
        self.stats.peak_live.fetch_max(live, Ordering::SeqCst);
        let (chunks, end) = match &self.failure {
            Some(diag) => (Vec::new(), TerminalStatus::Failed(diag.clone())),
            None => {
                let text = limit_text(&self.lookup(prompt), params, self.tokenizer.as_ref());
                (chunk(&text), TerminalStatus::Completed)
            }
        };
        Box::new(MockStream {
            chunks: chunks.into_iter(),
            end,
            finished: None,
            cancel: cancel.clone(),
            delay: self.chunk_delay,
            stats: Arc::clone(&self.stats),
        })
    }
}

fn chunk(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    chars
        .chunks(CHUNK_CHARS)
        .map(|c| c.iter().collect())
        .collect()
}

/// A minimal body for the construct the cursor sits in.
fn template(prompt: &FimPrompt) -> String {
    let typed = prompt.current_line();
    if !typed.trim().is_empty() {
        return String::new();
    }
    let complete = &prompt.prefix[..prompt.prefix.len() - typed.len()];
    let last = complete
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("");
    let base = indent_width(last, 1);
    let block = match prompt.family {
        LanguageFamily::IndentScoped => {
            let opens = indent_header_kind(last, &ScopeConfig::default()).is_some();
            let ind = if opens { base + 4 } else { base };
            format!("{}pass", " ".repeat(ind))
        }
        LanguageFamily::BraceScoped => {
            if last.trim_end().ends_with('{') {
                format!("{}// TODO\n{}}}", " ".repeat(base + 4), " ".repeat(base))
            } else {
                format!("{}// TODO", " ".repeat(base))
            }
        }
    };
    match block.strip_prefix(typed) {
        Some(rest) => rest.to_string(),
        None => block.trim_start().to_string(),
    }
}

struct MockStream {
    chunks: std::vec::IntoIter<String>,
    end: TerminalStatus,
    finished: Option<TerminalStatus>,
    cancel: CancelToken,
    delay: Option<Duration>,
    stats: Arc<MockStats>,
}

impl MockStream {
    fn finish(&mut self, status: TerminalStatus) -> StreamEvent {
        if self.finished.is_none() {
            self.stats.live.fetch_sub(1, Ordering::SeqCst);
            self.finished = Some(status);
        }
        StreamEvent::End(self.finished.clone().expect("just set"))
    }
}

impl GenerationStream for MockStream {
    fn next_event(&mut self) -> StreamEvent {
        if let Some(status) = &self.finished {
            return StreamEvent::End(status.clone());
        }
        if self.cancel.is_cancelled() {
            return self.finish(TerminalStatus::Cancelled);
        }
        if let Some(delay) = self.delay {
            std::thread::sleep(delay);
            if self.cancel.is_cancelled() {
                return self.finish(TerminalStatus::Cancelled);
            }
        }
        match self.chunks.next() {
            Some(c) => {
                self.stats.chunks.fetch_add(1, Ordering::SeqCst);
                StreamEvent::Chunk(c)
            }
            None => {
                let end = self.end.clone();
                self.finish(end)
            }
        }
    }
}

impl Drop for MockStream {
    fn drop(&mut self) {
        if self.finished.is_none() {
            self.stats.live.fetch_sub(1, Ordering::SeqCst);
        }
    }
}
