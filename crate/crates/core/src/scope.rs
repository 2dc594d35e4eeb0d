//! Tolerant scope scanner for indentation- and brace-scoped languages.
//!
//! Parsing is a single pass over the text. Incomplete or unbalanced code
//! never fails: scopes that are still open at the end of the document simply
//! extend to its end, and stray closers are ignored.
//!
//! Every scope records the gap position where its body starts (just after
//! the header's `:` or `{`) and the gap where it ends. A cursor sitting on
//! either gap is inside the scope. For brace scopes the end gap is just
//! before the closing `}`; for indentation scopes it is the end of the last
//! line before the dedent, so trailing blank lines belong to the body.

use serde::Serialize;
use thiserror::Error;

use crate::document::{Cursor, Document, LanguageFamily};
use crate::trigger::CloserSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeKind {
    Module,
    Function,
    Class,
    Conditional,
    Loop,
    Block,
    /// Notebook cells are supplied by the client as separate documents; the
    /// scanner itself never produces this kind.
    NotebookCell,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScopeNode {
    pub kind: ScopeKind,
    /// Line of the construct header; 0 for the module.
    pub header_line: usize,
    pub body_start: Cursor,
    pub body_end: Cursor,
    /// Indentation width of the header line.
    pub indent: usize,
    pub children: Vec<ScopeNode>,
}

impl ScopeNode {
    pub fn contains(&self, cursor: Cursor) -> bool {
        self.body_start <= cursor && cursor <= self.body_end
    }

    pub fn is_module(&self) -> bool {
        self.kind == ScopeKind::Module
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ScopeNode::node_count)
            .sum::<usize>()
    }

    /// Depth-first walk over this subtree.
    pub fn walk(&self) -> Vec<&ScopeNode> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let node = out[i];
            out.extend(node.children.iter());
            i += 1;
        }
        out
    }

    fn child_containing(&self, cursor: Cursor) -> Option<&ScopeNode> {
        // Children are disjoint and ordered, so the last one starting at or
        // before the cursor is the only candidate.
        let idx = self.children.partition_point(|c| c.body_start <= cursor);
        idx.checked_sub(1)
            .map(|i| &self.children[i])
            .filter(|c| c.contains(cursor))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScopeTree {
    pub root: ScopeNode,
    pub doc_version: u64,
    pub family: LanguageFamily,
}

impl ScopeTree {
    /// The chain of scopes containing `cursor`, outermost first, using
    /// positional containment only (no blank-line rule).
    pub fn chain(&self, cursor: Cursor) -> Vec<&ScopeNode> {
        let mut chain = vec![&self.root];
        let mut node = &self.root;
        while let Some(child) = node.child_containing(cursor) {
            chain.push(child);
            node = child;
        }
        chain
    }

    /// Find a node by its header line and body start.
    pub fn find(&self, header_line: usize, body_start: Cursor) -> Option<&ScopeNode> {
        self.root
            .walk()
            .into_iter()
            .find(|n| n.header_line == header_line && n.body_start == body_start)
    }

    pub fn is_flat(&self) -> bool {
        self.root.children.is_empty()
    }

    fn check(&self, doc: &Document) -> Result<(), ScopeError> {
        if self.doc_version != doc.version() {
            return Err(ScopeError::StaleTree {
                tree_version: self.doc_version,
                doc_version: doc.version(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error(
        "scope tree built for version {tree_version} but document is at {doc_version}; re-parse"
    )]
    StaleTree { tree_version: u64, doc_version: u64 },
    #[error("cursor {0} is outside the document")]
    InvalidCursor(Cursor),
}

/// Knobs for the scanner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeConfig {
    /// Indentation width of a tab character.
    pub tab_width: usize,
    /// Extra colon-terminated header keywords for indentation-scoped code,
    /// reported as [`ScopeKind::Other`].
    pub extra_headers: Vec<String>,
}

impl Default for ScopeConfig {
    fn default() -> Self {
        Self {
            tab_width: 1,
            extra_headers: Vec::new(),
        }
    }
}

/// Per-line cursor context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineContext {
    pub text_before_cursor: String,
    pub text_after_cursor: String,
    /// `text_after_cursor` is only closers and whitespace.
    pub after_is_closers_only: bool,
    /// The line up to the cursor is a complete scope-opening header.
    pub defines_new_scope: bool,
}

pub fn parse_document(doc: &Document) -> ScopeTree {
    parse_document_with(doc, &ScopeConfig::default())
}

pub fn parse_document_with(doc: &Document, config: &ScopeConfig) -> ScopeTree {
    let root = match doc.family() {
        LanguageFamily::IndentScoped => indent::parse(doc, config),
        LanguageFamily::BraceScoped => brace::parse(doc),
    };
    ScopeTree {
        root,
        doc_version: doc.version(),
        family: doc.family(),
    }
}

/// The deepest scope owning `cursor`.
///
/// For indentation-scoped documents a cursor on a whitespace-only line is
/// owned by the deepest scope open at the nearest preceding non-blank line
/// whose header indentation is strictly less than the cursor column.
pub fn innermost_scope<'t>(
    tree: &'t ScopeTree,
    doc: &Document,
    cursor: Cursor,
) -> Result<&'t ScopeNode, ScopeError> {
    innermost_scope_with(tree, doc, cursor, &ScopeConfig::default())
}

pub fn innermost_scope_with<'t>(
    tree: &'t ScopeTree,
    doc: &Document,
    cursor: Cursor,
    config: &ScopeConfig,
) -> Result<&'t ScopeNode, ScopeError> {
    tree.check(doc)?;
    if !doc.is_valid(cursor) {
        return Err(ScopeError::InvalidCursor(cursor));
    }
    if doc.family() == LanguageFamily::IndentScoped && is_blank(doc.line(cursor.line)) {
        let anchor = (0..cursor.line).rev().find(|&l| !is_blank(doc.line(l)));
        let Some(anchor) = anchor else {
            return Ok(&tree.root);
        };
        let chain = tree.chain(Cursor::new(anchor, doc.line_len(anchor)));
        let column = column_width(doc.line(cursor.line), cursor.column, config.tab_width);
        let owner = chain
            .into_iter()
            .rev()
            .find(|n| n.is_module() || n.indent < column)
            .unwrap_or(&tree.root);
        return Ok(owner);
    }
    Ok(tree.chain(cursor).pop().unwrap_or(&tree.root))
}

/// True when nothing but whitespace follows the cursor inside its innermost
/// scope. Closers trailing on the cursor line are ignored for brace-scoped
/// documents.
pub fn is_at_end_of_scope(
    tree: &ScopeTree,
    doc: &Document,
    cursor: Cursor,
) -> Result<bool, ScopeError> {
    is_at_end_of_scope_with(
        tree,
        doc,
        cursor,
        &CloserSet::default(),
        &ScopeConfig::default(),
    )
}

pub fn is_at_end_of_scope_with(
    tree: &ScopeTree,
    doc: &Document,
    cursor: Cursor,
    closers: &CloserSet,
    config: &ScopeConfig,
) -> Result<bool, ScopeError> {
    let node = innermost_scope_with(tree, doc, cursor, config)?;
    let end = node.body_end.max(cursor);
    let brace = doc.family() == LanguageFamily::BraceScoped;
    for line in cursor.line..=end.line {
        let text = doc.line(line);
        let from = if line == cursor.line {
            cursor.column
        } else {
            0
        };
        let to = if line == end.line {
            end.column
        } else {
            usize::MAX
        };
        let rest = text.chars().skip(from).take(to.saturating_sub(from));
        let content = if brace && line == cursor.line {
            rest.filter(|&c| !c.is_whitespace() && !closers.contains(c))
                .count()
        } else {
            rest.filter(|c| !c.is_whitespace()).count()
        };
        if content > 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn line_context(doc: &Document, cursor: Cursor, closers: &CloserSet) -> LineContext {
    line_context_with(doc, cursor, closers, &ScopeConfig::default())
}

pub fn line_context_with(
    doc: &Document,
    cursor: Cursor,
    closers: &CloserSet,
    config: &ScopeConfig,
) -> LineContext {
    let (before, after) = doc.split_line(cursor);
    let after_is_closers_only = after
        .chars()
        .all(|c| c.is_whitespace() || closers.contains(c));
    let defines_new_scope = match doc.family() {
        LanguageFamily::IndentScoped => indent::header_kind(before, config).is_some(),
        LanguageFamily::BraceScoped => brace::opens_block(before),
    };
    LineContext {
        text_before_cursor: before.to_string(),
        text_after_cursor: after.to_string(),
        after_is_closers_only,
        defines_new_scope,
    }
}

pub(crate) fn is_blank(line: &str) -> bool {
    line.chars().all(char::is_whitespace)
}

/// Leading indentation width of a line.
pub(crate) fn indent_width(line: &str, tab_width: usize) -> usize {
    line.chars()
        .take_while(|&c| c == ' ' || c == '\t')
        .map(|c| if c == '\t' { tab_width } else { 1 })
        .sum()
}

/// Visual width of the first `column` code points of a whitespace line.
fn column_width(line: &str, column: usize, tab_width: usize) -> usize {
    line.chars()
        .take(column)
        .map(|c| if c == '\t' { tab_width } else { 1 })
        .sum()
}

/// Builder for a node whose end is not yet known.
struct OpenScope {
    kind: ScopeKind,
    header_line: usize,
    body_start: Cursor,
    indent: usize,
    children: Vec<ScopeNode>,
}

impl OpenScope {
    fn close(self, body_end: Cursor) -> ScopeNode {
        ScopeNode {
            kind: self.kind,
            header_line: self.header_line,
            body_start: self.body_start,
            body_end: body_end.max(self.body_start),
            indent: self.indent,
            children: self.children,
        }
    }
}

fn module_scope() -> OpenScope {
    OpenScope {
        kind: ScopeKind::Module,
        header_line: 0,
        body_start: Cursor::new(0, 0),
        indent: 0,
        children: Vec::new(),
    }
}

/// Pop the top of `stack` and attach it to its parent.
fn close_top(stack: &mut Vec<OpenScope>, body_end: Cursor) {
    let node = stack.pop().expect("non-module scope").close(body_end);
    stack
        .last_mut()
        .expect("module scope stays open")
        .children
        .push(node);
}

fn finish(mut stack: Vec<OpenScope>, end: Cursor) -> ScopeNode {
    while stack.len() > 1 {
        close_top(&mut stack, end);
    }
    stack.pop().expect("module scope").close(end)
}

mod indent {
    use super::*;

    /// String state carried across lines: inside a triple-quoted literal.
    #[derive(Clone, Copy, PartialEq, Eq)]
    enum Carry {
        Code,
        Triple(char),
    }

    pub(super) fn parse(doc: &Document, config: &ScopeConfig) -> ScopeNode {
        let mut stack = vec![module_scope()];
        let mut carry = Carry::Code;
        for index in 0..doc.line_count() {
            let line = doc.line(index);
            let opaque = carry != Carry::Code;
            let scan = scan_line(line, carry);
            carry = scan.carry;
            if opaque || is_blank(line) {
                continue;
            }
            let indent = indent_width(line, config.tab_width);
            while stack.len() > 1 && stack.last().is_some_and(|s| s.indent >= indent) {
                let end = Cursor::new(index - 1, doc.line_len(index - 1));
                close_top(&mut stack, end);
            }
            if scan.ends_in_string {
                continue;
            }
            if let Some(kind) = header_kind(&line[..scan.code_end], config) {
                stack.push(OpenScope {
                    kind,
                    header_line: index,
                    body_start: Cursor::new(index, doc.line_len(index)),
                    indent,
                    children: Vec::new(),
                });
            }
        }
        finish(stack, doc.end())
    }

    struct LineScan {
        /// Byte index where a trailing comment starts, or the line length.
        code_end: usize,
        /// The line ends inside a string literal.
        ends_in_string: bool,
        carry: Carry,
    }

    fn scan_line(line: &str, carry: Carry) -> LineScan {
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut state = carry;
        let mut i = 0;
        let mut code_end = line.len();
        let mut single: Option<char> = None;
        while i < chars.len() {
            let (at, c) = chars[i];
            match (state, single) {
                (Carry::Triple(q), _) => {
                    if c == '\\' {
                        i += 2;
                        continue;
                    }
                    if is_triple(&chars, i, q) {
                        state = Carry::Code;
                        i += 3;
                        continue;
                    }
                }
                (Carry::Code, Some(q)) => {
                    if c == '\\' {
                        i += 2;
                        continue;
                    }
                    if c == q {
                        single = None;
                    }
                }
                (Carry::Code, None) => match c {
                    '#' => {
                        code_end = at;
                        break;
                    }
                    '"' | '\'' if is_triple(&chars, i, c) => {
                        state = Carry::Triple(c);
                        i += 3;
                        continue;
                    }
                    '"' | '\'' => single = Some(c),
                    _ => {}
                },
            }
            i += 1;
        }
        LineScan {
            code_end,
            ends_in_string: single.is_some() || state != Carry::Code,
            carry: state,
        }
    }

    fn is_triple(chars: &[(usize, char)], i: usize, q: char) -> bool {
        chars.len() >= i + 3 && chars[i..i + 3].iter().all(|&(_, c)| c == q)
    }

    /// Kind of scope opened by a colon-terminated header, if `text` is one.
    pub(crate) fn header_kind(text: &str, config: &ScopeConfig) -> Option<ScopeKind> {
        let scan = scan_line(text, Carry::Code);
        if scan.ends_in_string {
            return None;
        }
        let code = text[..scan.code_end].trim();
        if !code.ends_with(':') {
            return None;
        }
        let mut words = code.split(|c: char| !(c.is_alphanumeric() || c == '_'));
        let mut first = words.next()?;
        if first == "async" {
            first = words.next()?;
        }
        let kind = match first {
            "def" => ScopeKind::Function,
            "class" => ScopeKind::Class,
            "if" | "elif" | "else" => ScopeKind::Conditional,
            "for" | "while" => ScopeKind::Loop,
            "try" | "except" | "finally" | "with" => ScopeKind::Block,
            other if config.extra_headers.iter().any(|h| h == other) => ScopeKind::Other,
            _ => return None,
        };
        Some(kind)
    }
}

mod brace {
    use super::*;

    #[derive(Clone, Copy, PartialEq, Eq)]
    enum State {
        Code,
        LineComment,
        BlockComment,
        Str(char),
    }

    pub(super) fn parse(doc: &Document) -> ScopeNode {
        let mut stack = vec![module_scope()];
        let mut state = State::Code;
        for index in 0..doc.line_count() {
            let line = doc.line(index);
            let chars: Vec<char> = line.chars().collect();
            if state != State::BlockComment {
                state = State::Code;
            }
            let mut col = 0;
            while col < chars.len() {
                let c = chars[col];
                let next = chars.get(col + 1).copied();
                match state {
                    State::LineComment => break,
                    State::BlockComment => {
                        if c == '*' && next == Some('/') {
                            state = State::Code;
                            col += 1;
                        }
                    }
                    State::Str(q) => {
                        if c == '\\' {
                            col += 1;
                        } else if c == q {
                            state = State::Code;
                        }
                    }
                    State::Code => match c {
                        '/' if next == Some('/') => state = State::LineComment,
                        '/' if next == Some('*') => {
                            state = State::BlockComment;
                            col += 1;
                        }
                        '"' | '\'' | '`' => state = State::Str(c),
                        '{' => {
                            let (header_line, header) = header_text(doc, index, &chars[..col]);
                            stack.push(OpenScope {
                                kind: classify(&header),
                                header_line,
                                body_start: Cursor::new(index, col + 1),
                                indent: indent_width(doc.line(header_line), 1),
                                children: Vec::new(),
                            });
                        }
                        '}' if stack.len() > 1 => close_top(&mut stack, Cursor::new(index, col)),
                        _ => {}
                    },
                }
                col += 1;
            }
        }
        finish(stack, doc.end())
    }

    /// Header text for a `{` at the end of `before`: the part of the line
    /// after the last statement boundary, or the previous line for a brace
    /// on its own line.
    fn header_text(doc: &Document, line: usize, before: &[char]) -> (usize, String) {
        let start = before
            .iter()
            .rposition(|&c| matches!(c, ';' | '{' | '}'))
            .map(|i| i + 1)
            .unwrap_or(0);
        let own: String = before[start..].iter().collect();
        if !own.trim().is_empty() || start > 0 {
            return (line, own.trim().to_string());
        }
        let prev = (0..line).rev().find(|&l| !is_blank(doc.line(l)));
        match prev {
            Some(p) => {
                let text = doc.line(p).trim();
                let dangling = !text.ends_with([';', '{', '}']) && !text.starts_with("//");
                if dangling {
                    (p, text.to_string())
                } else {
                    (line, String::new())
                }
            }
            None => (line, String::new()),
        }
    }

    fn classify(header: &str) -> ScopeKind {
        let words: Vec<&str> = header
            .split(|c: char| !(c.is_alphanumeric() || c == '_'))
            .filter(|w| !w.is_empty())
            .collect();
        let first = words.first().copied().unwrap_or("");
        if header.is_empty() {
            return ScopeKind::Block;
        }
        match first {
            "if" | "else" | "switch" | "match" | "case" | "default" => {
                return ScopeKind::Conditional
            }
            "for" | "while" | "do" | "loop" | "foreach" => return ScopeKind::Loop,
            _ => {}
        }
        let before_paren = header.split('(').next().unwrap_or("");
        let head_words = || {
            before_paren
                .split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .filter(|w| !w.is_empty())
        };
        if head_words().any(|w| {
            matches!(
                w,
                "class"
                    | "struct"
                    | "enum"
                    | "interface"
                    | "trait"
                    | "impl"
                    | "union"
                    | "record"
                    | "object"
            )
        }) {
            return ScopeKind::Class;
        }
        if words
            .iter()
            .any(|w| matches!(*w, "fn" | "function" | "func" | "def" | "fun"))
            || header.ends_with("=>")
            || header.contains("->")
        {
            return ScopeKind::Function;
        }
        if matches!(
            first,
            "try"
                | "catch"
                | "finally"
                | "namespace"
                | "unsafe"
                | "synchronized"
                | "mod"
                | "module"
                | "extern"
                | "static"
                | "async"
        ) {
            return ScopeKind::Block;
        }
        if header.ends_with(')') && !header.starts_with('(') && head_words().count() >= 1 {
            return ScopeKind::Function;
        }
        ScopeKind::Other
    }

    /// The text ends with an opening brace that starts a block rather than a
    /// literal or call argument.
    pub(super) fn opens_block(before: &str) -> bool {
        let code = strip_line_comment(before);
        let trimmed = code.trim_end();
        let Some(head) = trimmed.strip_suffix('{') else {
            return false;
        };
        if in_string(head) {
            return false;
        }
        let head = head.trim_end();
        if head.ends_with("=>") {
            return true;
        }
        !head.ends_with(['=', '(', ',', '[', ':'])
    }

    fn strip_line_comment(text: &str) -> &str {
        let mut state = State::Code;
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (at, c) = chars[i];
            match state {
                State::Str(q) => {
                    if c == '\\' {
                        i += 1;
                    } else if c == q {
                        state = State::Code;
                    }
                }
                _ => match c {
                    '/' if chars.get(i + 1).map(|p| p.1) == Some('/') => return &text[..at],
                    '"' | '\'' | '`' => state = State::Str(c),
                    _ => {}
                },
            }
            i += 1;
        }
        text
    }

    fn in_string(text: &str) -> bool {
        let mut state: Option<char> = None;
        let mut escaped = false;
        for c in text.chars() {
            match state {
                Some(q) => {
                    if escaped {
                        escaped = false;
                    } else if c == '\\' {
                        escaped = true;
                    } else if c == q {
                        state = None;
                    }
                }
                None if matches!(c, '"' | '\'' | '`') => state = Some(c),
                None => {}
            }
        }
        state.is_some()
    }

    #[cfg(test)]
    pub(super) fn classify_for_test(header: &str) -> ScopeKind {
        classify(header)
    }
}

pub(crate) use indent::header_kind as indent_header_kind;
