//! Random programs for both grammar families and brute-force oracles for
//! scopes, trigger decisions and structural cuts.
//!
//! The oracles never call into the scanner. Indentation scopes are
//! recomputed from scratch for every query by walking forward from each
//! header; brace scopes come from a plain character depth counter.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ghostline_core::{
    decide_trigger, innermost_scope, is_at_end_of_scope, parse_document, truncate_to_scope, Cursor,
    Document, LanguageFamily, MonitorStep, MultiLineReason, PostprocessConfig, RequestOrigin,
    ScopeConfig, ScopeCutMonitor, ScopeNode, SuggestionKind, TriggerConfig, TriggerDecision,
};

pub const MAX_LINES: usize = 200;
const CLOSERS: [char; 3] = ['}', ')', ']'];
const KEYWORDS: [&str; 11] = [
    "def", "class", "if", "elif", "else", "for", "while", "try", "except", "finally", "with",
];

const INDENT_HEADERS: [&str; 9] = [
    "def f(a, b):",
    "class Node:",
    "if a > 1:",
    "for i in range(n):",
    "while n:",
    "with open(p) as fh:",
    "try:",
    "async def run():",
    "if ok:  # check",
];
const INDENT_STATEMENTS: [&str; 9] = [
    "x = 1",
    "return total",
    "print(a, b)",
    "items.append(x)",
    "s = \"a: b\"",
    "total += i",
    "pass",
    "call(a, (b, c))",
    "n = len(items)",
];
const BRACE_HEADERS: [&str; 7] = [
    "void f(int a)",
    "int main()",
    "if (x > 1)",
    "while (i < n)",
    "for (int i = 0; i < n; i++)",
    "struct Point",
    "fn run() -> u8",
];
const BRACE_STATEMENTS: [&str; 9] = [
    "x = x + 1;",
    "call(a, b);",
    "s = \"{\";",
    "c = '}';",
    "return x;",
    "int v[] = {1, 2};",
    "x++; /* } */",
    "// closes }",
    "if (a) { b(); }",
];

fn pick<'a>(rng: &mut StdRng, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

/// A program of at most [`MAX_LINES`] lines. Some are cut short to look
/// like a file that is still being written.
pub fn program(family: LanguageFamily, seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let budget = rng.gen_range(1..=MAX_LINES);
    let mut lines = Vec::new();
    while lines.len() < budget {
        match family {
            LanguageFamily::IndentScoped => indent_items(&mut rng, &mut lines, 0, 0, budget),
            LanguageFamily::BraceScoped => brace_items(&mut rng, &mut lines, 0, 0, budget),
        }
    }
    lines.truncate(budget);
    if rng.gen_bool(0.3) {
        let keep = rng.gen_range(1..=lines.len());
        lines.truncate(keep);
    }
    let mut text = lines.join("\n");
    if rng.gen_bool(0.5) {
        text.push('\n');
    }
    text
}

fn indent_items(
    rng: &mut StdRng,
    lines: &mut Vec<String>,
    indent: usize,
    depth: usize,
    budget: usize,
) {
    for _ in 0..rng.gen_range(1..=5) {
        if lines.len() >= budget {
            return;
        }
        let pad = " ".repeat(indent);
        match rng.gen_range(0..12) {
            0 => lines.push(" ".repeat(rng.gen_range(0..=indent + 4))),
            1 => lines.push(format!("{pad}# note: {depth}")),
            2..=5 if depth < 6 => {
                let header = pick(rng, &INDENT_HEADERS);
                lines.push(format!("{pad}{header}"));
                let step = if rng.gen_bool(0.2) { 2 } else { 4 };
                indent_items(rng, lines, indent + step, depth + 1, budget);
                if header.starts_with("if") && rng.gen_bool(0.4) {
                    let other = if rng.gen_bool(0.5) {
                        "elif b:"
                    } else {
                        "else:"
                    };
                    lines.push(format!("{pad}{other}"));
                    indent_items(rng, lines, indent + step, depth + 1, budget);
                }
            }
            _ => lines.push(format!("{pad}{}", pick(rng, &INDENT_STATEMENTS))),
        }
    }
}

fn brace_items(
    rng: &mut StdRng,
    lines: &mut Vec<String>,
    indent: usize,
    depth: usize,
    budget: usize,
) {
    for _ in 0..rng.gen_range(1..=5) {
        if lines.len() >= budget {
            return;
        }
        let pad = " ".repeat(indent);
        match rng.gen_range(0..12) {
            0 => lines.push(" ".repeat(rng.gen_range(0..=indent + 4))),
            1..=4 if depth < 6 => {
                let header = pick(rng, &BRACE_HEADERS);
                if rng.gen_bool(0.25) {
                    lines.push(format!("{pad}{header}"));
                    lines.push(format!("{pad}{{"));
                } else {
                    lines.push(format!("{pad}{header} {{"));
                }
                brace_items(rng, lines, indent + 4, depth + 1, budget);
                if header.starts_with("if") && rng.gen_bool(0.4) {
                    lines.push(format!("{pad}}} else {{"));
                    brace_items(rng, lines, indent + 4, depth + 1, budget);
                }
                lines.push(format!("{pad}}}"));
            }
            _ => lines.push(format!("{pad}{}", pick(rng, &BRACE_STATEMENTS))),
        }
    }
}

/// Raw model output for a cursor. `fresh_block` starts the output on a new
/// line, as a model does right after a scope header.
pub fn generation(rng: &mut StdRng, family: LanguageFamily, fresh_block: bool) -> String {
    let brace = family == LanguageFamily::BraceScoped;
    let first = if fresh_block || rng.gen_bool(0.3) {
        String::new()
    } else if brace {
        pick(rng, &["b();", "x = 1;", "if (c) {", "a, b);"]).to_string()
    } else {
        pick(rng, &["x + 1", "total)", "a, b]", "if a:"]).to_string()
    };
    let mut lines = vec![first];
    for _ in 0..rng.gen_range(0..12) {
        let pad = " ".repeat(2 * rng.gen_range(0..=6));
        let line = match (brace, rng.gen_range(0..8)) {
            (_, 0) => " ".repeat(rng.gen_range(0..6)),
            (false, 1) => format!("{pad}{}", pick(rng, &INDENT_HEADERS)),
            (false, _) => format!("{pad}{}", pick(rng, &INDENT_STATEMENTS)),
            (true, 1 | 2) => format!("{pad}}}"),
            (true, 3) => format!("{pad}{} {{", pick(rng, &BRACE_HEADERS)),
            (true, 4) => format!("{pad}}} else {{"),
            (true, _) => format!("{pad}{}", pick(rng, &BRACE_STATEMENTS)),
        };
        let trailing = if rng.gen_bool(0.1) { "  " } else { "" };
        lines.push(format!("{line}{trailing}"));
    }
    let mut raw = lines.join("\n");
    if rng.gen_bool(0.3) {
        raw.push('\n');
    }
    raw
}

/// Cursor positions biased towards line ends, where requests happen.
pub fn sample_cursors(rng: &mut StdRng, text: &str, n: usize) -> Vec<Cursor> {
    let lines: Vec<&str> = text.split('\n').collect();
    (0..n)
        .map(|_| {
            let line = rng.gen_range(0..lines.len());
            let len = lines[line].chars().count();
            let column = match rng.gen_range(0..10) {
                0..=3 => len,
                4 => 0,
                _ => rng.gen_range(0..=len),
            };
            Cursor::new(line, column)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub module: bool,
    pub header_line: usize,
    pub body_start: Cursor,
    pub body_end: Cursor,
    pub indent: usize,
}

impl Scope {
    pub fn contains(&self, at: Cursor) -> bool {
        self.body_start <= at && at <= self.body_end
    }

    /// Compare with a scanner node. Brace scopes are identified by their
    /// body span alone.
    pub fn matches(&self, node: &ScopeNode, family: LanguageFamily) -> bool {
        let span = node.is_module() == self.module
            && node.body_start == self.body_start
            && node.body_end == self.body_end;
        match family {
            LanguageFamily::IndentScoped => {
                span && node.header_line == self.header_line && node.indent == self.indent
            }
            LanguageFamily::BraceScoped => span,
        }
    }
}

fn blank(line: &str) -> bool {
    line.chars().all(char::is_whitespace)
}

fn len(line: &str) -> usize {
    line.chars().count()
}

fn leading(line: &str) -> usize {
    line.chars().take_while(|&c| c == ' ' || c == '\t').count()
}

fn doc_end(lines: &[&str]) -> Cursor {
    Cursor::new(lines.len() - 1, len(lines[lines.len() - 1]))
}

fn module(lines: &[&str]) -> Scope {
    Scope {
        module: true,
        header_line: 0,
        body_start: Cursor::new(0, 0),
        body_end: doc_end(lines),
        indent: 0,
    }
}

pub fn indent_header(text: &str) -> bool {
    let code = text.split('#').next().unwrap_or("").trim();
    if !code.ends_with(':') {
        return false;
    }
    let mut words = code.split(|c: char| !(c.is_alphanumeric() || c == '_'));
    let mut first = words.next().unwrap_or("");
    if first == "async" {
        first = words.next().unwrap_or("");
    }
    KEYWORDS.contains(&first)
}

/// Every scope of an indentation-scoped text. Each header owns the lines up
/// to the first later non-blank line that is not indented deeper.
fn indent_scopes(lines: &[&str]) -> Vec<Scope> {
    let mut out = vec![module(lines)];
    for (h, line) in lines.iter().enumerate() {
        if blank(line) || !indent_header(line) {
            continue;
        }
        let indent = leading(line);
        let close = (h + 1..lines.len()).find(|&k| !blank(lines[k]) && leading(lines[k]) <= indent);
        let body_start = Cursor::new(h, len(line));
        let body_end = match close {
            Some(k) => Cursor::new(k - 1, len(lines[k - 1])).max(body_start),
            None => doc_end(lines),
        };
        out.push(Scope {
            module: false,
            header_line: h,
            body_start,
            body_end,
            indent,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum St {
    Code,
    Line,
    Block,
    Str(char),
}

/// `{` and `}` outside strings and comments, with their code-point offset
/// and position.
pub fn code_braces(text: &str) -> Vec<(usize, Cursor, char)> {
    lex(text, St::Code).0
}

/// Lexer state at the end of `text`.
pub fn state_after(text: &str) -> St {
    lex(text, St::Code).1
}

fn lex(text: &str, start: St) -> (Vec<(usize, Cursor, char)>, St) {
    let chars: Vec<char> = text.chars().collect();
    let mut positions = Vec::with_capacity(chars.len());
    let (mut line, mut column) = (0, 0);
    for &c in &chars {
        positions.push(Cursor::new(line, column));
        if c == '\n' {
            line += 1;
            column = 0;
        } else {
            column += 1;
        }
    }
    let mut out = Vec::new();
    let mut st = start;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let mut width = 1;
        match st {
            St::Line => {
                if c == '\n' {
                    st = St::Code;
                }
            }
            St::Block => {
                if c == '*' && next == Some('/') {
                    st = St::Code;
                    width = 2;
                }
            }
            St::Str(q) => {
                if c == '\n' || c == q {
                    st = St::Code;
                } else if c == '\\' && next.is_some_and(|n| n != '\n') {
                    width = 2;
                }
            }
            St::Code => match c {
                '/' if next == Some('/') => {
                    st = St::Line;
                    width = 2;
                }
                '/' if next == Some('*') => {
                    st = St::Block;
                    width = 2;
                }
                '"' | '\'' | '`' => st = St::Str(c),
                '{' | '}' => out.push((i, positions[i], c)),
                _ => {}
            },
        }
        i += width;
    }
    (out, st)
}

/// Every scope of a brace-scoped text, from a depth counter. Unmatched
/// closers are ignored and unclosed scopes run to the end.
fn brace_scopes(text: &str, lines: &[&str]) -> Vec<Scope> {
    let mut out = vec![module(lines)];
    let mut open: Vec<Cursor> = Vec::new();
    for (_, at, c) in code_braces(text) {
        if c == '{' {
            open.push(Cursor::new(at.line, at.column + 1));
        } else if let Some(body_start) = open.pop() {
            out.push(Scope {
                module: false,
                header_line: body_start.line,
                body_start,
                body_end: at,
                indent: 0,
            });
        }
    }
    for body_start in open {
        out.push(Scope {
            module: false,
            header_line: body_start.line,
            body_start,
            body_end: doc_end(lines),
            indent: 0,
        });
    }
    out
}

fn scopes(text: &str, family: LanguageFamily) -> Vec<Scope> {
    let lines: Vec<&str> = text.split('\n').collect();
    match family {
        LanguageFamily::IndentScoped => indent_scopes(&lines),
        LanguageFamily::BraceScoped => brace_scopes(text, &lines),
    }
}

/// Scopes containing `at`, outermost first.
fn chain(all: &[Scope], at: Cursor) -> Vec<Scope> {
    let mut chain: Vec<Scope> = all.iter().filter(|s| s.contains(at)).copied().collect();
    chain.sort_by_key(|s| (!s.module, s.body_start));
    chain
}

pub fn innermost(text: &str, family: LanguageFamily, cursor: Cursor) -> Scope {
    let lines: Vec<&str> = text.split('\n').collect();
    let all = scopes(text, family);
    if family == LanguageFamily::IndentScoped && blank(lines[cursor.line]) {
        let Some(anchor) = (0..cursor.line).rev().find(|&l| !blank(lines[l])) else {
            return all[0];
        };
        let owners = chain(&all, Cursor::new(anchor, len(lines[anchor])));
        return *owners
            .iter()
            .rev()
            .find(|s| s.module || s.indent < cursor.column)
            .expect("module");
    }
    *chain(&all, cursor).last().expect("module")
}

pub fn at_end_of_scope(text: &str, family: LanguageFamily, cursor: Cursor) -> bool {
    let lines: Vec<&str> = text.split('\n').collect();
    let end = innermost(text, family, cursor).body_end.max(cursor);
    for (l, line) in lines
        .iter()
        .enumerate()
        .take(end.line + 1)
        .skip(cursor.line)
    {
        for (c, ch) in line.chars().enumerate() {
            let at = Cursor::new(l, c);
            if at < cursor || at >= end || ch.is_whitespace() {
                continue;
            }
            let closer =
                family == LanguageFamily::BraceScoped && l == cursor.line && CLOSERS.contains(&ch);
            if !closer {
                return false;
            }
        }
    }
    true
}

fn in_string(text: &str) -> bool {
    let mut quote: Option<char> = None;
    for c in text.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if matches!(c, '"' | '\'' | '`') => quote = Some(c),
            None => {}
        }
    }
    quote.is_some()
}

fn opens_brace_block(before: &str) -> bool {
    let code = match before.find("//") {
        Some(at) if !in_string(&before[..at]) => &before[..at],
        _ => before,
    };
    let Some(head) = code.trim_end().strip_suffix('{') else {
        return false;
    };
    if in_string(head) {
        return false;
    }
    let head = head.trim_end();
    head.ends_with("=>") || !head.ends_with(['=', '(', ',', '[', ':'])
}

/// The trigger cascade evaluated on oracle scopes.
pub fn decision(
    text: &str,
    family: LanguageFamily,
    cursor: Cursor,
    explicit: bool,
) -> TriggerDecision {
    let line = text.split('\n').nth(cursor.line).expect("valid cursor");
    let before: String = line.chars().take(cursor.column).collect();
    let after: String = line.chars().skip(cursor.column).collect();
    if !after
        .chars()
        .all(|c| c.is_whitespace() || CLOSERS.contains(&c))
    {
        return TriggerDecision::Suppress;
    }
    if explicit {
        return TriggerDecision::MultiLine(MultiLineReason::ExplicitRequest);
    }
    let opens = match family {
        LanguageFamily::IndentScoped => indent_header(&before),
        LanguageFamily::BraceScoped => opens_brace_block(&before),
    };
    if opens && after.trim().is_empty() {
        return TriggerDecision::MultiLine(MultiLineReason::NewScopeDefinition);
    }
    if !innermost(text, family, cursor).module && at_end_of_scope(text, family, cursor) {
        return TriggerDecision::MultiLine(MultiLineReason::EndOfInnerScope);
    }
    TriggerDecision::SingleLine
}

/// Where raw output has to be cut to stay inside `scope`. Brace-scoped
/// output is lexed from `start`, the state at the cursor.
pub fn expected_cut(
    raw: &str,
    family: LanguageFamily,
    kind: SuggestionKind,
    scope: &Scope,
    start: St,
) -> Option<usize> {
    if kind == SuggestionKind::SingleLine {
        return raw.chars().position(|c| c == '\n');
    }
    if scope.module {
        return None;
    }
    match family {
        LanguageFamily::IndentScoped => {
            let mut offset = 0;
            for (i, line) in raw.split('\n').enumerate() {
                if i > 0 && !blank(line) && leading(line) <= scope.indent {
                    return Some(offset);
                }
                offset += len(line) + 1;
            }
            None
        }
        LanguageFamily::BraceScoped => {
            let mut depth = 0i64;
            for (offset, _, c) in lex(raw, start).0 {
                depth += if c == '{' { 1 } else { -1 };
                if depth < 0 {
                    return Some(offset + 1);
                }
            }
            None
        }
    }
}

fn chunks(rng: &mut StdRng, raw: &str) -> Vec<String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let n = rng.gen_range(1..=8).min(chars.len() - i);
        out.push(chars[i..i + n].iter().collect());
        i += n;
    }
    out
}

fn insert(text: &str, cursor: Cursor, suggestion: &str) -> String {
    let doc = Document::new(text, LanguageFamily::IndentScoped, 0);
    format!("{}{suggestion}{}", doc.prefix(cursor), doc.suffix(cursor))
}

/// Positions of the non-whitespace characters of `suggestion` once it is
/// inserted at `cursor`.
fn inserted_positions(cursor: Cursor, suggestion: &str) -> Vec<Cursor> {
    let mut at = cursor;
    let mut out = Vec::new();
    for c in suggestion.chars() {
        if c == '\n' {
            at = Cursor::new(at.line + 1, 0);
            continue;
        }
        if !c.is_whitespace() {
            out.push(at);
        }
        at.column += 1;
    }
    out
}

pub fn family_name(family: LanguageFamily) -> &'static str {
    match family {
        LanguageFamily::IndentScoped => "indent",
        LanguageFamily::BraceScoped => "brace",
    }
}

/// Check scanner, scope queries and trigger cascade against the oracles at
/// `cursors` sampled positions of one program. Returns the number of
/// positions checked.
pub fn check_scope_cases(
    family: LanguageFamily,
    seed: u64,
    cursors: usize,
) -> Result<usize, String> {
    let text = program(family, seed);
    let doc = Document::new(text.as_str(), family, 1);
    let tree = parse_document(&doc);
    let config = TriggerConfig::default();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5c09e);
    let fail = |what: &str, cursor: Cursor, detail: String| {
        Err(format!(
            "{} seed {seed} at {cursor}: {what}: {detail}\n{text:?}",
            family_name(family)
        ))
    };
    let positions = sample_cursors(&mut rng, &text, cursors);
    for &cursor in &positions {
        let want = innermost(&text, family, cursor);
        let got = innermost_scope(&tree, &doc, cursor).map_err(|e| e.to_string())?;
        if !want.matches(got, family) {
            return fail(
                "innermost scope",
                cursor,
                format!("oracle {want:?}, scanner {got:?}"),
            );
        }
        let end = is_at_end_of_scope(&tree, &doc, cursor).map_err(|e| e.to_string())?;
        if end != at_end_of_scope(&text, family, cursor) {
            return fail("end of scope", cursor, format!("scanner says {end}"));
        }
        for (origin, explicit) in [
            (RequestOrigin::typing(), false),
            (RequestOrigin::shortcut(), true),
        ] {
            let got =
                decide_trigger(&doc, cursor, &origin, &tree, &config).map_err(|e| e.to_string())?;
            let want = decision(&text, family, cursor, explicit);
            if got != want {
                return fail(
                    "trigger",
                    cursor,
                    format!("oracle {want:?}, cascade {got:?}"),
                );
            }
        }
    }
    Ok(positions.len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TruncationStats {
    pub generations: usize,
    pub structural_cuts: usize,
    pub in_scope_checks: usize,
}

impl std::ops::AddAssign for TruncationStats {
    fn add_assign(&mut self, other: Self) {
        self.generations += other.generations;
        self.structural_cuts += other.structural_cuts;
        self.in_scope_checks += other.in_scope_checks;
    }
}

/// Truncation properties for random generations at sampled cursors of one
/// program: prefix of the raw output, structural cut at the oracle offset,
/// streaming equivalence, idempotence, pure insertion and, for multi-line
/// triggers, every inserted character inside the original scope.
pub fn check_truncation(
    family: LanguageFamily,
    seed: u64,
    cursors: usize,
) -> Result<TruncationStats, String> {
    let text = program(family, seed);
    let doc = Document::new(text.as_str(), family, 1);
    let tree = parse_document(&doc);
    let config = PostprocessConfig::default();
    let trigger = TriggerConfig::default();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x7a11);
    let mut stats = TruncationStats::default();
    for cursor in sample_cursors(&mut rng, &text, cursors) {
        let decided = decide_trigger(&doc, cursor, &RequestOrigin::typing(), &tree, &trigger)
            .map_err(|e| e.to_string())?;
        let kind = decided.kind().unwrap_or(if rng.gen_bool(0.5) {
            SuggestionKind::MultiLine
        } else {
            SuggestionKind::SingleLine
        });
        let fresh = decided == TriggerDecision::MultiLine(MultiLineReason::NewScopeDefinition);
        let scope = innermost(&text, family, cursor);
        let start = state_after(doc.prefix(cursor));
        for _ in 0..3 {
            let raw = generation(&mut rng, family, fresh);
            let fail = |what: &str, detail: String| {
                Err(format!(
                    "{} seed {seed} at {cursor} ({kind:?}): {what}: {detail}\nraw {raw:?}\ndoc {text:?}",
                    family_name(family)
                ))
            };
            let out = truncate_to_scope(&raw, &tree, &doc, cursor, kind, &config)
                .map_err(|e| e.to_string())?;
            stats.generations += 1;

            if !out.text.is_empty() {
                let kept: Vec<&str> = out.text.split('\n').map(str::trim).collect();
                let source: Vec<&str> = raw.split('\n').map(str::trim).collect();
                // brace cuts can end partway through a line
                let last = kept.len() - 1;
                let differs = kept.iter().zip(&source).enumerate().any(|(i, (a, b))| {
                    if i == last {
                        !b.starts_with(a)
                    } else {
                        a != b
                    }
                });
                if kept.len() > source.len() || differs {
                    return fail("not a prefix of the raw output", format!("{:?}", out.text));
                }
            }
            if kind == SuggestionKind::SingleLine && out.text.contains('\n') {
                return fail("single line with a newline", format!("{:?}", out.text));
            }

            let want = expected_cut(&raw, family, kind, &scope, start);
            let batch = out
                .cut_reason
                .is_structural()
                .then_some(out.cut_offset)
                .flatten();
            if batch != want {
                return fail(
                    "structural cut",
                    format!("oracle {want:?}, batch {batch:?} ({:?})", out.cut_reason),
                );
            }
            stats.structural_cuts += usize::from(want.is_some());

            let mut monitor =
                ScopeCutMonitor::for_cursor(&tree, &doc, cursor, kind, &ScopeConfig::default())
                    .map_err(|e| e.to_string())?;
            let mut streamed = None;
            for chunk in chunks(&mut rng, &raw) {
                if let MonitorStep::CutAt(at) = monitor.feed(&chunk).map_err(|e| e.to_string())? {
                    streamed = Some(at);
                    break;
                }
            }
            if streamed != want {
                return fail(
                    "streaming cut",
                    format!("oracle {want:?}, monitor {streamed:?}"),
                );
            }

            let again = truncate_to_scope(&out.text, &tree, &doc, cursor, kind, &config)
                .map_err(|e| e.to_string())?;
            if again.text != out.text {
                return fail(
                    "not idempotent",
                    format!("{:?} then {:?}", out.text, again.text),
                );
            }

            let after = insert(&text, cursor, &out.text);
            if !after.starts_with(doc.prefix(cursor)) || !after.ends_with(doc.suffix(cursor)) {
                return fail("insertion edits existing text", after);
            }
            let below: Vec<&str> = text.split('\n').skip(cursor.line + 1).collect();
            let new_lines: Vec<&str> = after.split('\n').collect();
            if new_lines[new_lines.len() - below.len()..] != below[..] {
                return fail("lines below the cursor changed", after);
            }

            let scoped = matches!(
                decided,
                TriggerDecision::MultiLine(
                    MultiLineReason::NewScopeDefinition | MultiLineReason::EndOfInnerScope
                )
            );
            if scoped && !scope.module && !out.text.is_empty() {
                stats.in_scope_checks += 1;
                let reparsed = scopes(&after, family);
                let Some(owner) = reparsed.iter().find(|s| {
                    !s.module
                        && s.header_line == scope.header_line
                        && s.body_start == scope.body_start
                }) else {
                    return fail("original scope vanished", after);
                };
                if let Some(p) = inserted_positions(cursor, &out.text)
                    .into_iter()
                    .find(|p| !owner.contains(*p))
                {
                    return fail(
                        "inserted text leaves the scope",
                        format!("{p} outside {owner:?}\n{after:?}"),
                    );
                }
            }
        }
    }
    Ok(stats)
}
