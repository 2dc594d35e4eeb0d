//! Immutable text snapshots and cursor positions.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The two grammar families the scope scanner understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageFamily {
    /// Python-like: scopes open on colon-terminated headers and close on dedent.
    IndentScoped,
    /// C-like: scopes are delimited by `{` and `}`.
    BraceScoped,
}

impl LanguageFamily {
    /// Guess the family from a file extension. Returns `None` for anything
    /// the scanner has no rules for (markup, config, ...).
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext {
            "py" | "pyi" => Some(Self::IndentScoped),
            "rs" | "c" | "h" | "cc" | "cpp" | "hpp" | "java" | "js" | "ts" | "jsx" | "tsx"
            | "go" | "cs" | "kt" | "swift" | "php" | "hack" => Some(Self::BraceScoped),
            _ => None,
        }
    }
}

/// A 0-based (line, column) position. Columns count code points.
///
/// Positions name the gaps between characters: column 0 is before the first
/// character of the line and column `len` is after the last one.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Cursor {
    pub line: usize,
    pub column: usize,
}

impl Cursor {
    pub const fn new(line: usize, column: usize) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Cursor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// An immutable snapshot of a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    text: String,
    family: LanguageFamily,
    version: u64,
    /// Byte offset of the start of every line.
    line_starts: Vec<usize>,
    /// Length of every line in code points, excluding the newline.
    line_lens: Vec<usize>,
}

impl Document {
    pub fn new(text: impl Into<String>, family: LanguageFamily, version: u64) -> Self {
        let text = text.into();
        let mut line_starts = vec![0];
        let mut line_lens = Vec::new();
        let mut len = 0;
        for (i, c) in text.char_indices() {
            if c == '\n' {
                line_lens.push(len);
                line_starts.push(i + 1);
                len = 0;
            } else {
                len += 1;
            }
        }
        line_lens.push(len);
        Self {
            text,
            family,
            version,
            line_starts,
            line_lens,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn family(&self) -> LanguageFamily {
        self.family
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Number of lines; an empty document has one (empty) line.
    pub fn line_count(&self) -> usize {
        self.line_lens.len()
    }

    /// Line contents without the trailing newline.
    pub fn line(&self, index: usize) -> &str {
        let start = self.line_starts[index];
        let end = self
            .line_starts
            .get(index + 1)
            .map(|next| next - 1)
            .unwrap_or(self.text.len());
        &self.text[start..end]
    }

    /// Line length in code points.
    pub fn line_len(&self, index: usize) -> usize {
        self.line_lens[index]
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.line_count()).map(move |i| self.line(i))
    }

    /// Position just after the last character of the document.
    pub fn end(&self) -> Cursor {
        let last = self.line_count() - 1;
        Cursor::new(last, self.line_lens[last])
    }

    pub fn is_valid(&self, cursor: Cursor) -> bool {
        cursor.line < self.line_count() && cursor.column <= self.line_lens[cursor.line]
    }

    /// Split the cursor line into the text left and right of the cursor.
    pub fn split_line(&self, cursor: Cursor) -> (&str, &str) {
        let line = self.line(cursor.line);
        let at = byte_index(line, cursor.column);
        line.split_at(at)
    }

    /// Byte offset of a cursor within the whole text.
    pub fn byte_offset(&self, cursor: Cursor) -> usize {
        self.line_starts[cursor.line] + byte_index(self.line(cursor.line), cursor.column)
    }

    /// Text before the cursor.
    pub fn prefix(&self, cursor: Cursor) -> &str {
        &self.text[..self.byte_offset(cursor)]
    }

    /// Text after the cursor.
    pub fn suffix(&self, cursor: Cursor) -> &str {
        &self.text[self.byte_offset(cursor)..]
    }

    /// A new snapshot with `insert` spliced in at `cursor`, and the cursor
    /// position just after the inserted text.
    pub fn insert(&self, cursor: Cursor, insert: &str, version: u64) -> (Document, Cursor) {
        let at = self.byte_offset(cursor);
        let mut text = String::with_capacity(self.text.len() + insert.len());
        text.push_str(&self.text[..at]);
        text.push_str(insert);
        text.push_str(&self.text[at..]);
        (
            Document::new(text, self.family, version),
            cursor_after(cursor, insert),
        )
    }

    /// A new snapshot with the code points in `[start, end)` replaced by `text`.
    pub fn replace(&self, start: Cursor, end: Cursor, text: &str, version: u64) -> Document {
        let a = self.byte_offset(start);
        let b = self.byte_offset(end).max(a);
        let mut out = String::with_capacity(self.text.len() + text.len());
        out.push_str(&self.text[..a]);
        out.push_str(text);
        out.push_str(&self.text[b..]);
        Document::new(out, self.family, version)
    }

    /// Same text under a new version number.
    pub fn with_version(&self, version: u64) -> Document {
        Document {
            version,
            ..self.clone()
        }
    }
}

/// Where the cursor lands after inserting `text` at `at`.
pub fn cursor_after(at: Cursor, text: &str) -> Cursor {
    match text.rfind('\n') {
        Some(i) => Cursor::new(
            at.line + text.matches('\n').count(),
            text[i + 1..].chars().count(),
        ),
        None => Cursor::new(at.line, at.column + text.chars().count()),
    }
}

/// Byte index of the `column`-th code point of `line`, clamped to its end.
pub(crate) fn byte_index(line: &str, column: usize) -> usize {
    line.char_indices()
        .nth(column)
        .map(|(i, _)| i)
        .unwrap_or(line.len())
}
