//! Post-processing: cut raw model output back to the cursor's scope.
//!
//! Raw output is inserted at the cursor, so its first line continues the
//! cursor line and every later line is a new line in the document. A
//! multi-line suggestion is cut:
//!
//! - for indentation-scoped code, before the first non-blank line whose
//!   indentation is at or left of the innermost scope's header;
//! - for brace-scoped code, right after the `}` that closes the innermost
//!   scope.
//!
//! The same cut is available incrementally through [`ScopeCutMonitor`] so a
//! streaming generation can be cancelled as soon as the rest of it is known
//! to be thrown away.

use serde::Serialize;
use thiserror::Error;

use crate::document::{byte_index, Cursor, Document, LanguageFamily};
use crate::scope::{
    indent_header_kind, indent_width, innermost_scope_with, is_blank, line_context_with,
    ScopeConfig, ScopeError, ScopeTree,
};
use crate::trigger::{CloserSet, SuggestionKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostprocessConfig {
    /// Shift continuation lines to the indentation expected at the cursor.
    pub realign: bool,
    /// Indentation added for the body of a freshly opened scope.
    pub indent_unit: usize,
    /// How many lines below the cursor are compared for regenerated code.
    pub overlap_window: usize,
    pub scope: ScopeConfig,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            realign: true,
            indent_unit: 4,
            overlap_window: 20,
            scope: ScopeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutReason {
    ScopeClosed,
    OverlapWithExisting,
    StopCondition,
    None,
}

impl CutReason {
    /// Cuts that can be detected while the output is still streaming.
    pub fn is_structural(self) -> bool {
        matches!(self, CutReason::ScopeClosed | CutReason::StopCondition)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruncatedSuggestion {
    pub text: String,
    pub kind: SuggestionKind,
    /// Code-point offset into the raw output where it was cut.
    pub cut_offset: Option<usize>,
    pub cut_reason: CutReason,
    /// Trailing lines dropped because they repeat the code below the cursor.
    pub overlap_lines: usize,
}

impl TruncatedSuggestion {
    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

/// What the cutter needs to know about the cursor's scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutContext {
    pub family: LanguageFamily,
    pub kind: SuggestionKind,
    /// Header indentation of the innermost scope, `None` at module level
    /// where nothing can close.
    pub scope_indent: Option<usize>,
    pub tab_width: usize,
    /// Lexical state at the cursor for brace-scoped code. Output that starts
    /// inside a comment or string does not count braces until it leaves it.
    pub lexical: LexicalState,
}

/// Where a position sits in brace-scoped code.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LexicalState {
    #[default]
    Code,
    LineComment,
    BlockComment,
    Str(char),
}

impl CutContext {
    pub fn new(
        tree: &ScopeTree,
        doc: &Document,
        cursor: Cursor,
        kind: SuggestionKind,
        config: &ScopeConfig,
    ) -> Result<Self, ScopeError> {
        let node = innermost_scope_with(tree, doc, cursor, config)?;
        let lexical = match doc.family() {
            LanguageFamily::IndentScoped => LexicalState::Code,
            LanguageFamily::BraceScoped => lexical_state_at(doc, cursor),
        };
        Ok(Self {
            family: doc.family(),
            kind,
            scope_indent: (!node.is_module()).then_some(node.indent),
            tab_width: config.tab_width,
            lexical,
        })
    }
}

/// Cut raw output so the suggestion stays inside the cursor's scope.
pub fn truncate_to_scope(
    raw: &str,
    tree: &ScopeTree,
    doc: &Document,
    cursor: Cursor,
    kind: SuggestionKind,
    config: &PostprocessConfig,
) -> Result<TruncatedSuggestion, ScopeError> {
    let ctx = CutContext::new(tree, doc, cursor, kind, &config.scope)?;
    let (cut_offset, mut cut_reason) = match structural_cut(raw, &ctx) {
        Some((offset, reason)) => (Some(offset), reason),
        None => (None, CutReason::None),
    };
    let kept = match cut_offset {
        Some(offset) => &raw[..byte_index(raw, offset)],
        None => raw,
    };
    let mut lines: Vec<&str> = kept.split('\n').map(str::trim_end).collect();
    while lines.len() > 1 && lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }

    let mut overlap_lines = 0;
    let mut final_offset = cut_offset;
    if kind == SuggestionKind::MultiLine {
        let below = lines_below(doc, cursor, config.overlap_window);
        overlap_lines = overlap_suffix(&mut lines, &below);
        if overlap_lines > 0 && cut_offset.is_none() {
            cut_reason = CutReason::OverlapWithExisting;
            // The newline ending the last kept line.
            final_offset = Some(raw_line_end(kept, lines.len() - 1));
        }
    }

    let mut text = lines.join("\n");
    if text.trim().is_empty() {
        text.clear();
    }
    if kind == SuggestionKind::MultiLine && config.realign && !text.is_empty() {
        text = realign_with(&text, cursor, doc, config);
    }
    Ok(TruncatedSuggestion {
        text,
        kind,
        cut_offset: final_offset,
        cut_reason,
        overlap_lines,
    })
}

/// Code-point offset of the end of line `line` within `text`.
fn raw_line_end(text: &str, line: usize) -> usize {
    text.split('\n')
        .take(line + 1)
        .map(|l| l.chars().count() + 1)
        .sum::<usize>()
        - 1
}

/// The earliest cut point that can be decided without seeing the whole text.
pub fn structural_cut(raw: &str, ctx: &CutContext) -> Option<(usize, CutReason)> {
    if ctx.kind == SuggestionKind::SingleLine {
        return raw
            .chars()
            .position(|c| c == '\n')
            .map(|at| (at, CutReason::StopCondition));
    }
    let scope_indent = ctx.scope_indent?;
    match ctx.family {
        LanguageFamily::IndentScoped => {
            let mut offset = 0;
            for (i, line) in raw.split('\n').enumerate() {
                if i > 0 && !is_blank(line) && indent_width(line, ctx.tab_width) <= scope_indent {
                    return Some((offset, CutReason::ScopeClosed));
                }
                offset += line.chars().count() + 1;
            }
            None
        }
        LanguageFamily::BraceScoped => {
            brace_close_offset(raw, ctx.lexical).map(|at| (at, CutReason::ScopeClosed))
        }
    }
}

/// Offset just past the `}` that takes the relative brace depth below zero.
fn brace_close_offset(raw: &str, start: LexicalState) -> Option<usize> {
    let mut scan = BraceScan::starting_in(start);
    let mut depth = 0i64;
    for (i, c) in raw.chars().enumerate() {
        match scan.push(c) {
            Some('{') => depth += 1,
            Some('}') => {
                depth -= 1;
                if depth < 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Lexical state after the document text left of `cursor`.
fn lexical_state_at(doc: &Document, cursor: Cursor) -> LexicalState {
    let mut scan = BraceScan::default();
    for c in doc.prefix(cursor).chars() {
        scan.push(c);
    }
    scan.state
}

/// Net `{` minus `}` outside strings and comments.
fn brace_balance(text: &str) -> i64 {
    let mut depth = 0i64;
    let mut monitor = BraceScan::default();
    for c in text.chars() {
        match monitor.push(c) {
            Some('{') => depth += 1,
            Some('}') => depth -= 1,
            _ => {}
        }
    }
    depth
}

/// Trimmed text right of the cursor followed by the lines below it.
fn lines_below(doc: &Document, cursor: Cursor, window: usize) -> Vec<String> {
    let mut below = Vec::with_capacity(window + 1);
    let (_, after) = doc.split_line(cursor);
    if !after.trim().is_empty() {
        below.push(after.trim().to_string());
    }
    let first = cursor.line + 1;
    let last = (first + window).min(doc.line_count());
    below.extend((first..last).map(|l| doc.line(l).trim().to_string()));
    below
}

/// Drop trailing lines that repeat the start of `below`, as long as doing so
/// leaves the brace balance intact. Returns how many lines were dropped.
fn overlap_suffix(lines: &mut Vec<&str>, below: &[String]) -> usize {
    let mut removed = 0;
    loop {
        // The first line is spliced into the cursor line and never compared.
        let candidates = lines.len().saturating_sub(1).min(below.len());
        let balance = brace_balance(&lines.join("\n"));
        let found = (1..=candidates).rev().find(|&k| {
            let tail = &lines[lines.len() - k..];
            let same = tail.iter().zip(&below[..k]).all(|(a, b)| a.trim() == b);
            if !same || tail.iter().all(|l| l.trim().is_empty()) {
                return false;
            }
            let dropped = brace_balance(&tail.join("\n"));
            dropped == 0 || balance - dropped == 0
        });
        match found {
            Some(k) => {
                lines.truncate(lines.len() - k);
                removed += k;
                while lines.len() > 1 && lines.last().is_some_and(|l| l.is_empty()) {
                    lines.pop();
                }
            }
            None => return removed,
        }
    }
}

/// Shift continuation lines so the block sits at the indentation expected
/// at the cursor. The first line is spliced at the cursor and left alone.
pub fn realign_indentation(raw: &str, cursor: Cursor, doc: &Document) -> String {
    realign_with(raw, cursor, doc, &PostprocessConfig::default())
}

pub fn realign_with(
    raw: &str,
    cursor: Cursor,
    doc: &Document,
    config: &PostprocessConfig,
) -> String {
    let lines: Vec<&str> = raw.split('\n').collect();
    if lines.len() < 2 {
        return raw.to_string();
    }
    let tab = config.scope.tab_width;
    let (before, _) = doc.split_line(cursor);
    let first = lines[0];
    let opens = match doc.family() {
        LanguageFamily::IndentScoped => {
            !first.trim().is_empty()
                && indent_header_kind(&format!("{before}{first}"), &config.scope).is_some()
        }
        LanguageFamily::BraceScoped => brace_balance(first) > 0,
    };

    // Lines whose indentation says something about the block's level. A
    // closer that leaves the block (closing the enclosing scope) does not.
    let mut depth = brace_balance(first);
    let mut levels = Vec::new();
    for line in &lines[1..] {
        let leaves = line.trim_start().starts_with('}') && depth < 1;
        if !is_blank(line) && !leaves {
            levels.push(indent_width(line, tab));
        }
        depth += brace_balance(line);
    }
    let (Some(&lead), Some(&base)) = (levels.first(), levels.iter().min()) else {
        return raw.to_string();
    };
    let expected = expected_indent(doc, cursor, config);
    // A first line that opens a block with nothing after the block: all
    // continuation lines belong one level deeper.
    let target = if opens && base == lead {
        expected + config.indent_unit
    } else {
        expected
    };
    let delta = target as i64 - base as i64;
    if delta == 0 {
        return raw.to_string();
    }
    let mut out = String::with_capacity(raw.len() + lines.len() * delta.unsigned_abs() as usize);
    out.push_str(first);
    for line in &lines[1..] {
        out.push('\n');
        if is_blank(line) {
            out.push_str(line);
        } else if delta > 0 {
            out.extend(std::iter::repeat_n(' ', delta as usize));
            out.push_str(line);
        } else {
            out.push_str(strip_indent(line, delta.unsigned_abs() as usize, tab));
        }
    }
    out
}

/// Remove up to `width` columns of leading indentation.
fn strip_indent(line: &str, width: usize, tab: usize) -> &str {
    let mut removed = 0;
    for (i, c) in line.char_indices() {
        if removed >= width || !(c == ' ' || c == '\t') {
            return &line[i..];
        }
        removed += if c == '\t' { tab } else { 1 };
    }
    ""
}

/// Indentation a continuation block should have at this cursor: the cursor
/// column on a blank line, one unit deeper after a scope header, otherwise
/// the cursor line's own indentation.
pub fn expected_indent(doc: &Document, cursor: Cursor, config: &PostprocessConfig) -> usize {
    let tab = config.scope.tab_width;
    let line = doc.line(cursor.line);
    if is_blank(line) {
        return line
            .chars()
            .take(cursor.column)
            .map(|c| if c == '\t' { tab } else { 1 })
            .sum();
    }
    let (before, _) = doc.split_line(cursor);
    let opens = match doc.family() {
        LanguageFamily::IndentScoped => indent_header_kind(before, &config.scope).is_some(),
        LanguageFamily::BraceScoped => {
            line_context_with(doc, cursor, &CloserSet::default(), &config.scope).defines_new_scope
        }
    };
    let own = indent_width(line, tab);
    if opens {
        own + config.indent_unit
    } else {
        own
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("monitor already reported a cut; no more input is accepted")]
    AlreadyCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorStep {
    Continue,
    /// Code-point offset into the concatenated stream.
    CutAt(usize),
}

/// Incremental form of the structural cut in [`truncate_to_scope`].
#[derive(Debug, Clone)]
pub struct ScopeCutMonitor {
    ctx: CutContext,
    /// Code points consumed so far.
    offset: usize,
    cut: Option<usize>,
    line: usize,
    line_start: usize,
    indent: usize,
    in_indent: bool,
    decided: bool,
    depth: i64,
    brace: BraceScan,
}

impl ScopeCutMonitor {
    pub fn new(ctx: CutContext) -> Self {
        Self {
            ctx,
            offset: 0,
            cut: None,
            line: 0,
            line_start: 0,
            indent: 0,
            in_indent: true,
            decided: false,
            depth: 0,
            brace: BraceScan::starting_in(ctx.lexical),
        }
    }

    pub fn for_cursor(
        tree: &ScopeTree,
        doc: &Document,
        cursor: Cursor,
        kind: SuggestionKind,
        config: &ScopeConfig,
    ) -> Result<Self, ScopeError> {
        Ok(Self::new(CutContext::new(tree, doc, cursor, kind, config)?))
    }

    pub fn cut(&self) -> Option<usize> {
        self.cut
    }

    pub fn feed(&mut self, chunk: &str) -> Result<MonitorStep, MonitorError> {
        if self.cut.is_some() {
            return Err(MonitorError::AlreadyCut);
        }
        for c in chunk.chars() {
            if let Some(at) = self.step(c) {
                self.cut = Some(at);
                return Ok(MonitorStep::CutAt(at));
            }
            self.offset += 1;
        }
        Ok(MonitorStep::Continue)
    }

    fn step(&mut self, c: char) -> Option<usize> {
        let at = self.offset;
        if self.ctx.kind == SuggestionKind::SingleLine {
            return (c == '\n').then_some(at);
        }
        let scope_indent = self.ctx.scope_indent?;
        match self.ctx.family {
            LanguageFamily::IndentScoped => {
                if c == '\n' {
                    self.line += 1;
                    self.line_start = at + 1;
                    self.indent = 0;
                    self.in_indent = true;
                    self.decided = false;
                    return None;
                }
                if self.line == 0 || self.decided {
                    return None;
                }
                if self.in_indent && (c == ' ' || c == '\t') {
                    self.indent += if c == '\t' { self.ctx.tab_width } else { 1 };
                    return None;
                }
                self.in_indent = false;
                if c.is_whitespace() {
                    return None;
                }
                self.decided = true;
                (self.indent <= scope_indent).then_some(self.line_start)
            }
            LanguageFamily::BraceScoped => {
                match self.brace.push(c) {
                    Some('{') => self.depth += 1,
                    Some('}') => {
                        self.depth -= 1;
                        if self.depth < 0 {
                            return Some(at + 1);
                        }
                    }
                    _ => {}
                }
                None
            }
        }
    }
}

/// Character-at-a-time lexer state for brace-scoped output. Reports `{` and
/// `}` that occur in code, outside strings and comments.
#[derive(Debug, Clone, Copy, Default)]
struct BraceScan {
    state: LexicalState,
    /// A `/` that may start a comment, waiting for the next character.
    slash: bool,
    escape: bool,
    star: bool,
}

impl BraceScan {
    fn starting_in(state: LexicalState) -> Self {
        Self {
            state,
            ..Self::default()
        }
    }

    fn push(&mut self, c: char) -> Option<char> {
        match self.state {
            LexicalState::LineComment => {
                if c == '\n' {
                    self.state = LexicalState::Code;
                }
                None
            }
            LexicalState::BlockComment => {
                if self.star && c == '/' {
                    self.state = LexicalState::Code;
                }
                self.star = c == '*';
                None
            }
            LexicalState::Str(q) => {
                if c == '\n' {
                    // strings never span lines
                    self.state = LexicalState::Code;
                    self.escape = false;
                } else if self.escape {
                    self.escape = false;
                } else if c == '\\' {
                    self.escape = true;
                } else if c == q {
                    self.state = LexicalState::Code;
                }
                None
            }
            LexicalState::Code => {
                if std::mem::take(&mut self.slash) {
                    match c {
                        '/' => {
                            self.state = LexicalState::LineComment;
                            return None;
                        }
                        '*' => {
                            self.state = LexicalState::BlockComment;
                            self.star = false;
                            return None;
                        }
                        _ => {}
                    }
                }
                match c {
                    '/' => {
                        self.slash = true;
                        None
                    }
                    '"' | '\'' | '`' => {
                        self.state = LexicalState::Str(c);
                        None
                    }
                    '{' | '}' => Some(c),
                    _ => None,
                }
            }
        }
    }
}
