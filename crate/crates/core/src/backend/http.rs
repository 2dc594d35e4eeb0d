//! Client for a streaming fill-in-the-middle HTTP endpoint.
//!
//! The request is a JSON object with `prefix`, `suffix`, `max_tokens`,
//! `stop`, `stream: true` and `multi_line`. The response body is newline
//! delimited JSON; each object carries a piece of text under
//! `text_field`. An object with `"done": true` ends the stream.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CancelToken, FimPrompt, GenerationStream, ModelBackend, StreamEvent, TerminalStatus};
use crate::tokenizer::{Tokenizer, WordPieceTokenizer};
use crate::trigger::GenerationParams;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    #[serde(default = "default_text_field")]
    pub text_field: String,
    /// Hard cap on multi-line output, in code points.
    #[serde(default = "default_char_cap")]
    pub multi_line_char_cap: usize,
}

fn default_timeout_ms() -> u64 {
    5000
}

fn default_text_field() -> String {
    "text".into()
}

fn default_char_cap() -> usize {
    2000
}

impl HttpBackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout_ms: default_timeout_ms(),
            headers: BTreeMap::new(),
            text_field: default_text_field(),
            multi_line_char_cap: default_char_cap(),
        }
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    client: Result<reqwest::blocking::Client, String>,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| e.to_string());
        Self { config, client }
    }

    pub fn config(&self) -> &HttpBackendConfig {
        &self.config
    }
}

impl ModelBackend for HttpBackend {
    fn generate(
        &self,
        prompt: &FimPrompt,
        params: &GenerationParams,
        cancel: &CancelToken,
    ) -> Box<dyn GenerationStream> {
        let mut body = json!({
            "prefix": prompt.prefix,
            "suffix": prompt.suffix,
            "max_tokens": params.max_tokens,
            "stop": if params.stop_at_newline { vec!["\n"] } else { Vec::new() },
            "stream": true,
            "multi_line": prompt.multi_line,
        });
        if let Some(t) = params.temperature {
            body["temperature"] = json!(t);
        }
        for (k, v) in &params.extra {
            body[k] = v.clone();
        }
        let request = self.client.as_ref().map(|client| {
            let mut req = client.post(&self.config.endpoint).json(&body);
            for (k, v) in &self.config.headers {
                req = req.header(k, v);
            }
            req
        });
        let cap = if params.stop_at_newline {
            usize::MAX
        } else {
            self.config.multi_line_char_cap
        };
        Box::new(HttpStream {
            state: State::Pending(request.map_err(Clone::clone)),
            deadline: Instant::now() + Duration::from_millis(self.config.timeout_ms),
            cancel: cancel.clone(),
            text_field: self.config.text_field.clone(),
            stop_at_newline: params.stop_at_newline,
            max_tokens: params.max_tokens as usize,
            char_cap: cap,
            emitted: String::new(),
        })
    }
}

enum State {
    Pending(Result<reqwest::blocking::RequestBuilder, String>),
    Reading(BufReader<reqwest::blocking::Response>),
    Done(TerminalStatus),
}

struct HttpStream {
    state: State,
    deadline: Instant,
    cancel: CancelToken,
    text_field: String,
    stop_at_newline: bool,
    max_tokens: usize,
    char_cap: usize,
    emitted: String,
}

impl HttpStream {
    fn end(&mut self, status: TerminalStatus) -> StreamEvent {
        self.state = State::Done(status.clone());
        StreamEvent::End(status)
    }

    /// Clip a received piece against the local limits. Returns the part to
    /// emit and whether the stream is complete afterwards.
    fn clip(&self, piece: &str) -> (String, bool) {
        let mut piece = piece;
        let mut full = false;
        if self.stop_at_newline {
            if let Some(i) = piece.find('\n') {
                piece = &piece[..i];
                full = true;
            }
        }
        let total = format!("{}{piece}", self.emitted);
        let by_tokens = WordPieceTokenizer.prefix_len(&total, self.max_tokens);
        let by_chars = total
            .char_indices()
            .nth(self.char_cap)
            .map_or(total.len(), |(i, _)| i);
        let keep = by_tokens.min(by_chars);
        if keep < total.len() {
            full = true;
        }
        (total[self.emitted.len().min(keep)..keep].to_string(), full)
    }
}

impl GenerationStream for HttpStream {
    fn next_event(&mut self) -> StreamEvent {
        loop {
            if let State::Done(status) = &self.state {
                return StreamEvent::End(status.clone());
            }
            if self.cancel.is_cancelled() {
                return self.end(TerminalStatus::Cancelled);
            }
            if Instant::now() >= self.deadline {
                return self.end(TerminalStatus::TimedOut);
            }
            match std::mem::replace(&mut self.state, State::Done(TerminalStatus::Completed)) {
                State::Pending(Err(diag)) => return self.end(TerminalStatus::Failed(diag)),
                State::Pending(Ok(request)) => match request.send() {
                    Ok(resp) if resp.status().is_success() => {
                        self.state = State::Reading(BufReader::new(resp))
                    }
                    Ok(resp) => {
                        return self.end(TerminalStatus::Failed(format!(
                            "endpoint returned {}",
                            resp.status()
                        )))
                    }
                    Err(e) if e.is_timeout() => return self.end(TerminalStatus::TimedOut),
                    Err(e) => {
                        return self
                            .end(TerminalStatus::Failed(format!("backend unreachable: {e}")))
                    }
                },
                State::Reading(mut reader) => {
                    let mut line = String::new();
                    match reader.read_line(&mut line) {
                        Ok(0) => return self.end(TerminalStatus::Completed),
                        Ok(_) => {}
                        Err(e) if is_timeout(&e) => return self.end(TerminalStatus::TimedOut),
                        Err(e) => {
                            return self
                                .end(TerminalStatus::Failed(format!("reading response: {e}")))
                        }
                    }
                    if Instant::now() >= self.deadline {
                        return self.end(TerminalStatus::TimedOut);
                    }
                    if line.trim().is_empty() {
                        self.state = State::Reading(reader);
                        continue;
                    }
                    let value: Value = match serde_json::from_str(&line) {
                        Ok(v) => v,
                        Err(e) => {
                            return self
                                .end(TerminalStatus::Failed(format!("malformed chunk: {e}")))
                        }
                    };
                    let done = value.get("done").and_then(Value::as_bool).unwrap_or(false);
                    let piece = value
                        .get(&self.text_field)
                        .and_then(Value::as_str)
                        .unwrap_or("");
                    let (emit, full) = self.clip(piece);
                    self.emitted.push_str(&emit);
                    if !(full || done) {
                        self.state = State::Reading(reader);
                    }
                    if !emit.is_empty() {
                        return StreamEvent::Chunk(emit);
                    }
                    if full || done {
                        return self.end(TerminalStatus::Completed);
                    }
                }
                State::Done(_) => unreachable!("checked above"),
            }
        }
    }
}

fn is_timeout(e: &std::io::Error) -> bool {
    if matches!(
        e.kind(),
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
    ) {
        return true;
    }
    e.get_ref()
        .and_then(|inner| inner.downcast_ref::<reqwest::Error>())
        .is_some_and(reqwest::Error::is_timeout)
}
