//! JSON-RPC over a byte stream with LSP framing.
//!
//! One loop owns the engine. Generations run on worker threads and report
//! back over a channel, so a keystroke can cancel a generation that is
//! still streaming.

use std::thread;

use crossbeam_channel::{select, unbounded};
use lsp_server::{Connection, ErrorCode, Message, Notification, Request, RequestId, Response};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use ghostline_core::{Cursor, NotebookCell, RequestOrigin};

use crate::engine::{CompletionRequest, Engine, GenerationOutcome, ServerError, Step, TextEdit};
use crate::telemetry::TelemetrySink;

pub const METHOD_INLINE_COMPLETIONS: &str = "textDocument/inlineCompletions";
pub const NOTIFY_FETCHING_MULTILINE: &str = "completion/fetchingMultiline";
pub const NOTIFY_DISPLAYED: &str = "completion/displayed";
pub const NOTIFY_ACCEPTED: &str = "completion/accepted";
pub const NOTIFY_REJECTED: &str = "completion/rejected";
pub const NOTIFY_CURSOR_MOVED: &str = "completion/cursorMoved";

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("connection closed before shutdown")]
    Disconnected,
    #[error("writing telemetry: {0}")]
    Telemetry(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
struct TextDocumentId {
    uri: String,
    #[serde(default)]
    version: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct Position {
    line: usize,
    character: usize,
}

impl From<Position> for Cursor {
    fn from(p: Position) -> Self {
        Cursor::new(p.line, p.character)
    }
}

#[derive(Debug, Deserialize)]
struct Range {
    start: Position,
    end: Position,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct InlineParams {
    text_document: TextDocumentId,
    position: Position,
    #[serde(default, rename = "explicit")]
    explicit: bool,
    #[serde(default, rename = "notebook_cell")]
    notebook_cell: Option<NotebookCell>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct OpenDocument {
    uri: String,
    #[serde(default)]
    language_id: Option<String>,
    version: u64,
    text: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DidOpen {
    text_document: OpenDocument,
}

#[derive(Debug, Deserialize)]
struct ContentChange {
    range: Option<Range>,
    text: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DidChange {
    text_document: TextDocumentId,
    content_changes: Vec<ContentChange>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DocumentOnly {
    text_document: TextDocumentId,
}

#[derive(Debug, Deserialize)]
struct SuggestionRef {
    request_id: u64,
}

/// Serve until the client sends `shutdown` and `exit`.
pub fn serve(
    connection: &Connection,
    mut engine: Engine,
    mut sink: Option<TelemetrySink>,
) -> Result<(), ServeError> {
    let (done_tx, done_rx) = unbounded::<(RequestId, GenerationOutcome)>();
    let mut shutting_down = false;
    loop {
        select! {
            recv(connection.receiver) -> msg => {
                let Ok(msg) = msg else {
                    flush(&mut engine, connection, &mut sink)?;
                    return Err(ServeError::Disconnected);
                };
                match msg {
                    Message::Request(req) if req.method == "shutdown" => {
                        shutting_down = true;
                        engine.shutdown();
                        send(connection, Response::new_ok(req.id, Value::Null));
                    }
                    Message::Request(req) => {
                        if shutting_down {
                            send(connection, Response::new_err(req.id, ErrorCode::InvalidRequest as i32, "shutting down".into()));
                        } else if let Some((rpc_id, task)) = handle_request(&mut engine, connection, req) {
                            let tx = done_tx.clone();
                            let clock = engine.clock();
                            thread::spawn(move || {
                                let outcome = task.run(clock.as_ref());
                                let _ = tx.send((rpc_id, outcome));
                            });
                        }
                    }
                    Message::Notification(n) if n.method == "exit" => {
                        flush(&mut engine, connection, &mut sink)?;
                        return if shutting_down { Ok(()) } else { Err(ServeError::Disconnected) };
                    }
                    Message::Notification(n) => handle_notification(&mut engine, n),
                    Message::Response(_) => {}
                }
            }
            recv(done_rx) -> done => {
                let (rpc_id, outcome) = done.expect("sender held by the loop");
                let response = engine.complete_generation(outcome);
                // the indicator must stop before the suggestion lands
                flush(&mut engine, connection, &mut sink)?;
                send(connection, Response::new_ok(rpc_id, response));
            }
        }
        flush(&mut engine, connection, &mut sink)?;
    }
}

fn flush(
    engine: &mut Engine,
    connection: &Connection,
    sink: &mut Option<TelemetrySink>,
) -> Result<(), ServeError> {
    for n in engine.take_notifications() {
        let _ = connection
            .sender
            .send(Message::Notification(Notification::new(
                NOTIFY_FETCHING_MULTILINE.into(),
                n,
            )));
    }
    let events = engine.take_telemetry();
    if let Some(sink) = sink {
        for e in &events {
            sink.write(e)?;
        }
        sink.flush()?;
    }
    Ok(())
}

fn send(connection: &Connection, response: Response) {
    // Best effort: the client may already be gone.
    let _ = connection.sender.send(Message::Response(response));
}

fn handle_request(
    engine: &mut Engine,
    connection: &Connection,
    req: Request,
) -> Option<(RequestId, crate::engine::GenerationTask)> {
    let id = req.id.clone();
    let reply = |result: Result<Value, (ErrorCode, String)>| {
        let response = match result {
            Ok(v) => Response::new_ok(id.clone(), v),
            Err((code, msg)) => Response::new_err(id.clone(), code as i32, msg),
        };
        send(connection, response);
    };
    match req.method.as_str() {
        "initialize" => reply(Ok(json!({
            "capabilities": {
                "textDocumentSync": 2,
                "inlineCompletionProvider": true,
            },
            "serverInfo": { "name": "ghostline", "version": env!("CARGO_PKG_VERSION") },
        }))),
        METHOD_INLINE_COMPLETIONS => {
            let params: InlineParams = match serde_json::from_value(req.params) {
                Ok(p) => p,
                Err(e) => {
                    reply(Err((ErrorCode::InvalidParams, e.to_string())));
                    return None;
                }
            };
            let request = CompletionRequest {
                uri: params.text_document.uri,
                version: params.text_document.version,
                cursor: params.position.into(),
                origin: RequestOrigin {
                    explicit_shortcut: params.explicit,
                    notebook_cell: params.notebook_cell,
                },
            };
            match engine.handle_inline_completion(&request) {
                Ok(Step::Done(response)) => {
                    reply(Ok(serde_json::to_value(response).expect("serializes")))
                }
                Ok(Step::Pending(task)) => return Some((id, task)),
                Err(e) => reply(Err((error_code(&e), e.to_string()))),
            }
        }
        NOTIFY_ACCEPTED => match parse::<SuggestionRef>(req.params)
            .map(|r| engine.accept_suggestion(r.request_id))
        {
            Ok(Ok(cursor)) => reply(Ok(
                json!({ "line": cursor.line, "character": cursor.column }),
            )),
            Ok(Err(e)) => reply(Err((error_code(&e), e.to_string()))),
            Err(e) => reply(Err((ErrorCode::InvalidParams, e))),
        },
        other => reply(Err((
            ErrorCode::MethodNotFound,
            format!("unsupported method {other}"),
        ))),
    }
    None
}

fn error_code(e: &ServerError) -> ErrorCode {
    match e {
        ServerError::UnknownDocument(_) | ServerError::InvalidPosition(_) => {
            ErrorCode::InvalidParams
        }
        ServerError::VersionRegression { .. } => ErrorCode::InvalidRequest,
        ServerError::UnknownRequest(_)
        | ServerError::NotDisplayed(_)
        | ServerError::Invalidated(_) => ErrorCode::RequestFailed,
    }
}

fn parse<T: for<'de> Deserialize<'de>>(params: Value) -> Result<T, String> {
    serde_json::from_value(params).map_err(|e| e.to_string())
}

fn handle_notification(engine: &mut Engine, n: Notification) {
    let result: Result<(), String> = match n.method.as_str() {
        "initialized" => Ok(()),
        "textDocument/didOpen" => parse::<DidOpen>(n.params).map(|p| {
            let d = p.text_document;
            engine.open_document(&d.uri, &d.text, d.language_id.as_deref(), d.version);
        }),
        "textDocument/didChange" => parse::<DidChange>(n.params).and_then(|p| {
            let edits: Vec<TextEdit> = p
                .content_changes
                .into_iter()
                .map(|c| match c.range {
                    Some(r) => TextEdit::Range {
                        start: r.start.into(),
                        end: r.end.into(),
                        text: c.text,
                    },
                    None => TextEdit::Full(c.text),
                })
                .collect();
            engine
                .apply_document_edit(&p.text_document.uri, p.text_document.version, &edits)
                .map_err(|e| e.to_string())
        }),
        "textDocument/didClose" => {
            parse::<DocumentOnly>(n.params).map(|p| engine.close_document(&p.text_document.uri))
        }
        NOTIFY_CURSOR_MOVED => {
            parse::<DocumentOnly>(n.params).map(|p| engine.cursor_moved(&p.text_document.uri))
        }
        NOTIFY_DISPLAYED => parse::<SuggestionRef>(n.params).and_then(|r| {
            engine
                .mark_displayed(r.request_id)
                .map_err(|e| e.to_string())
        }),
        NOTIFY_ACCEPTED => parse::<SuggestionRef>(n.params).and_then(|r| {
            engine
                .accept_suggestion(r.request_id)
                .map(|_| ())
                .map_err(|e| e.to_string())
        }),
        NOTIFY_REJECTED => parse::<SuggestionRef>(n.params).and_then(|r| {
            engine
                .reject_suggestion(r.request_id)
                .map_err(|e| e.to_string())
        }),
        _ => Ok(()),
    };
    if let Err(e) = result {
        eprintln!("ghostline: {}: {e}", n.method);
    }
}
