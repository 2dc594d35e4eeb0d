//! Mock corpus: context fingerprints mapped to continuations, stored as JSON
//! lines behind a versioned header.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::document::LanguageFamily;
use crate::scope::{indent_header_kind, ScopeConfig};

pub const CORPUS_VERSION: u32 = 1;

/// Lines of context hashed into a fingerprint.
const CONTEXT_LINES: usize = 3;
/// Lines stored per continuation.
const CONTINUATION_LINES: usize = 24;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("corpus is empty; expected a header line")]
    MissingHeader,
    #[error("unsupported corpus version {0} (this build reads {CORPUS_VERSION})")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusHeader {
    pub version: u32,
    #[serde(default)]
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub fingerprint: String,
    pub continuation: String,
}

/// In-memory corpus. Continuations start at the beginning of the line that
/// follows the fingerprinted context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MockCorpus {
    entries: BTreeMap<String, String>,
}

impl MockCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert unless the fingerprint is already present. Returns whether
    /// the record was added.
    pub fn insert(&mut self, fingerprint: String, continuation: String) -> bool {
        if self.entries.contains_key(&fingerprint) {
            return false;
        }
        self.entries.insert(fingerprint, continuation);
        true
    }

    pub fn get(&self, fingerprint: &str) -> Option<&str> {
        self.entries.get(fingerprint).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = CorpusRecord> + '_ {
        self.entries.iter().map(|(f, c)| CorpusRecord {
            fingerprint: f.clone(),
            continuation: c.clone(),
        })
    }
}

/// Fingerprint of the last complete lines of `prefix` (everything before the
/// final newline). Trailing whitespace on each line is ignored.
pub fn context_fingerprint(prefix: &str) -> String {
    let complete = match prefix.rfind('\n') {
        Some(i) => &prefix[..i],
        None => "",
    };
    let lines: Vec<&str> = if prefix.contains('\n') {
        complete.split('\n').collect()
    } else {
        Vec::new()
    };
    let tail = &lines[lines.len().saturating_sub(CONTEXT_LINES)..];
    let mut hasher = Sha256::new();
    hasher.update((tail.len() as u32).to_le_bytes());
    for line in tail {
        hasher.update(line.trim_end().as_bytes());
        hasher.update(b"\n");
    }
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_corpus(reader: impl BufRead) -> Result<MockCorpus, CorpusError> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(CorpusError::MissingHeader),
            Some((_, line)) if line.as_ref().is_ok_and(|l| l.trim().is_empty()) => continue,
            Some((n, line)) => {
                let header: CorpusHeader =
                    serde_json::from_str(&line?).map_err(|e| CorpusError::Parse {
                        line: n + 1,
                        message: e.to_string(),
                    })?;
                break header;
            }
        }
    };
    if header.version != CORPUS_VERSION {
        return Err(CorpusError::Version(header.version));
    }
    let mut corpus = MockCorpus::new();
    for (n, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        corpus.insert(record.fingerprint, record.continuation);
    }
    Ok(corpus)
}

pub fn write_corpus(corpus: &MockCorpus, mut out: impl Write) -> Result<(), CorpusError> {
    let header = CorpusHeader {
        version: CORPUS_VERSION,
        records: corpus.len(),
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string(&header).expect("header serializes")
    )?;
    for record in corpus.records() {
        writeln!(
            out,
            "{}",
            serde_json::to_string(&record).expect("record serializes")
        )?;
    }
    Ok(())
}

/// Build a corpus from ground-truth sources: one record per line, keyed by
/// the lines before it. A deterministic `noise` fraction of records get a
/// wrong first line so that not every suggestion is right.
pub fn build_corpus<'a>(
    files: impl IntoIterator<Item = (&'a str, LanguageFamily)>,
    noise: f64,
) -> MockCorpus {
    let mut corpus = MockCorpus::new();
    for (text, family) in files {
        let lines: Vec<&str> = text.split('\n').collect();
        for i in 0..lines.len() {
            let mut prefix = lines[..i].join("\n");
            if i > 0 {
                prefix.push('\n');
            }
            let fingerprint = context_fingerprint(&prefix);
            let end = (i + CONTINUATION_LINES).min(lines.len());
            let mut continuation = lines[i..end].join("\n");
            if continuation.trim().is_empty() {
                continue;
            }
            if is_noisy(&fingerprint, noise) {
                continuation = corrupt(&continuation, family);
            }
            corpus.insert(fingerprint, continuation);
        }
    }
    corpus
}

fn is_noisy(fingerprint: &str, noise: f64) -> bool {
    let bucket = u32::from_str_radix(&fingerprint[..8], 16).unwrap_or(0);
    (bucket as f64 / u32::MAX as f64) < noise
}

/// Replace the first non-blank line with a plausible but wrong statement.
fn corrupt(continuation: &str, family: LanguageFamily) -> String {
    let mut lines: Vec<String> = continuation.split('\n').map(str::to_string).collect();
    if let Some(line) = lines.iter_mut().find(|l| !l.trim().is_empty()) {
        let indent = &line[..line.len() - line.trim_start().len()];
        let opens = match family {
            LanguageFamily::IndentScoped => {
                indent_header_kind(line, &ScopeConfig::default()).is_some()
            }
            LanguageFamily::BraceScoped => line.trim_end().ends_with('{'),
        };
        let wrong = match (family, opens) {
            (LanguageFamily::IndentScoped, true) => "if result is None:",
            (LanguageFamily::IndentScoped, false) => "result = None",
            (LanguageFamily::BraceScoped, true) => "if (result == 0) {",
            (LanguageFamily::BraceScoped, false) => "result = 0;",
        };
        *line = format!("{indent}{wrong}");
    }
    lines.join("\n")
}
