//! Generation backends: prompt construction, streaming and cancellation.

mod corpus;
mod http;
mod mock;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::document::{byte_index, Cursor, Document, LanguageFamily};
use crate::trigger::GenerationParams;

pub use corpus::{
    build_corpus, context_fingerprint, load_corpus, write_corpus, CorpusError, CorpusHeader,
    CorpusRecord, MockCorpus, CORPUS_VERSION,
};
pub use http::{HttpBackend, HttpBackendConfig};
pub use mock::{MockBackend, MockStats};

/// Context window sizes in code points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PromptWindows {
    pub prefix: usize,
    pub suffix: usize,
}

impl Default for PromptWindows {
    fn default() -> Self {
        Self {
            prefix: 6000,
            suffix: 2000,
        }
    }
}

/// A fill-in-the-middle prompt.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FimPrompt {
    pub prefix: String,
    pub suffix: String,
    pub family: LanguageFamily,
    pub multi_line: bool,
}

impl FimPrompt {
    pub fn build(doc: &Document, cursor: Cursor, multi_line: bool, windows: PromptWindows) -> Self {
        let prefix = doc.prefix(cursor);
        let suffix = doc.suffix(cursor);
        let skip = prefix.chars().count().saturating_sub(windows.prefix);
        Self {
            prefix: prefix[byte_index(prefix, skip)..].to_string(),
            suffix: suffix[..byte_index(suffix, windows.suffix)].to_string(),
            family: doc.family(),
            multi_line,
        }
    }

    /// The partial line typed before the cursor.
    pub fn current_line(&self) -> &str {
        match self.prefix.rfind('\n') {
            Some(i) => &self.prefix[i + 1..],
            None => &self.prefix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Completed,
    Cancelled,
    TimedOut,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamEvent {
    Chunk(String),
    End(TerminalStatus),
}

/// A pull-based stream of generated text. Once `End` has been returned every
/// further call returns the same `End`.
pub trait GenerationStream: Send {
    fn next_event(&mut self) -> StreamEvent;
}

/// Shared cancellation flag. Safe to raise from any thread.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

pub trait ModelBackend: Send + Sync {
    fn generate(
        &self,
        prompt: &FimPrompt,
        params: &GenerationParams,
        cancel: &CancelToken,
    ) -> Box<dyn GenerationStream>;
}

/// Drain a stream, returning the concatenated text and terminal status.
pub fn collect(stream: &mut dyn GenerationStream) -> (String, TerminalStatus) {
    let mut text = String::new();
    loop {
        match stream.next_event() {
            StreamEvent::Chunk(c) => text.push_str(&c),
            StreamEvent::End(status) => return (text, status),
        }
    }
}

/// Apply the newline stop and token limit to a complete generation.
pub(crate) fn limit_text(
    text: &str,
    params: &GenerationParams,
    tokenizer: &dyn crate::Tokenizer,
) -> String {
    let text = match (params.stop_at_newline, text.find('\n')) {
        (true, Some(i)) => &text[..i],
        _ => text,
    };
    text[..tokenizer.prefix_len(text, params.max_tokens as usize)].to_string()
}
