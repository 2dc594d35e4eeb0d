//! Hand-written trigger and truncation cases. `|` marks the cursor.
#![allow(dead_code)]

use ghostline_core::{
    decide_trigger, innermost_scope, parse_document, truncate_to_scope, Cursor, CutReason,
    Document, LanguageFamily, MultiLineReason, NotebookCell, PostprocessConfig, RequestOrigin,
    ScopeKind, SuggestionKind, TriggerConfig, TriggerDecision,
};

const PY: LanguageFamily = LanguageFamily::IndentScoped;
const C: LanguageFamily = LanguageFamily::BraceScoped;
const END: TriggerDecision = TriggerDecision::MultiLine(MultiLineReason::EndOfInnerScope);
const NEW: TriggerDecision = TriggerDecision::MultiLine(MultiLineReason::NewScopeDefinition);

pub struct TriggerCase {
    pub name: &'static str,
    pub family: LanguageFamily,
    pub text: &'static str,
    pub origin: RequestOrigin,
    pub expected: TriggerDecision,
    pub innermost: Option<ScopeKind>,
}

fn case(
    name: &'static str,
    family: LanguageFamily,
    text: &'static str,
    expected: TriggerDecision,
) -> TriggerCase {
    TriggerCase {
        name,
        family,
        text,
        origin: RequestOrigin::typing(),
        expected,
        innermost: None,
    }
}

/// Split a marked text into the document and the cursor.
pub fn marked(text: &str) -> (String, Cursor) {
    let at = text.find('|').expect("cursor marker");
    let before = &text[..at];
    let line = before.matches('\n').count();
    let column = before.rsplit('\n').next().unwrap_or("").chars().count();
    (text.replacen('|', "", 1), Cursor::new(line, column))
}

pub fn trigger_cases() -> Vec<TriggerCase> {
    let mut cases = vec![
        case("empty function", PY, "def quicksort(arr):\n    |", END),
        case("end of a non-empty function", PY, "def quicksort(arr):\n    pivot = arr[0]|\n\ntest1 = 1\n", END),
        TriggerCase {
            innermost: Some(ScopeKind::Conditional),
            ..case(
                "end of an if statement",
                PY,
                "def quicksort(arr):\n    if len(arr) <= 1:\n        return arr|\n    pivot = arr[0]\n",
                END,
            )
        },
        case("newly defined function", PY, "def quicksort(arr):|\n\ntest1 = 1\n", NEW),
        TriggerCase {
            innermost: Some(ScopeKind::Conditional),
            ..case("newly defined if statement", PY, "def quicksort(arr):\n    if len(arr) <= 1:|", NEW)
        },
        case(
            "not at the end of the function",
            PY,
            "def quicksort(arr):\n    pivot = arr[0]|\n    return pivot\n",
            TriggerDecision::SingleLine,
        ),
        case("code after the cursor", PY, "def quicksort(arr):\n    pivot = |arr[0]\n", TriggerDecision::Suppress),
        case("cursor between def and the name", PY, "def |quicksort(arr):\n    pass\n", TriggerDecision::Suppress),
        case("statement right of the cursor", PY, "def quicksort(arr):\n|test1 = 1\n", TriggerDecision::Suppress),
        case("closers may trail the cursor", PY, "x = f(a, |)", TriggerDecision::SingleLine),
        case("module level gets one line", PY, "import os\nx = 1|\n", TriggerDecision::SingleLine),
        case("blank line below a body", PY, "def f():\n    x = 1\n    |\n", END),
        case("dedented blank line is module level", PY, "def f():\n    x = 1\n|\n", TriggerDecision::SingleLine),
        case("brace empty function", C, "int f(void) {\n    |\n}\n", END),
        case("brace new block", C, "int f(void) {\n    if (a) {|\n}\n", NEW),
        case("brace closer after the cursor", C, "void f() {\n    if (a) {|}\n}\n", END),
        case("brace mid function", C, "void f() {\n    a();|\n    b();\n}\n", TriggerDecision::SingleLine),
        case("brace code after the cursor", C, "void f() {\n    g(|);\n}\n", TriggerDecision::Suppress),
        case("brace initializer is not a new definition", C, "int main() {\n    int v[] = {|\n}\n", END),
    ];
    cases.push(TriggerCase {
        origin: RequestOrigin::shortcut(),
        ..case(
            "explicit shortcut mid function",
            PY,
            "def f():\n    x = 1|\n    y = 2\n",
            TriggerDecision::MultiLine(MultiLineReason::ExplicitRequest),
        )
    });
    cases.push(TriggerCase {
        origin: RequestOrigin::shortcut(),
        ..case(
            "explicit shortcut with code after",
            PY,
            "def f():\n    x = |1\n",
            TriggerDecision::Suppress,
        )
    });
    cases.push(TriggerCase {
        origin: RequestOrigin {
            explicit_shortcut: false,
            notebook_cell: Some(NotebookCell {
                cursor_at_cell_end: true,
            }),
        },
        ..case(
            "notebook cell end",
            PY,
            "df = load()\ndf.head()|",
            TriggerDecision::MultiLine(MultiLineReason::NotebookCellEnd),
        )
    });
    cases
}

/// Run every case; the error names the first mismatch.
pub fn check_trigger_cases() -> Result<usize, String> {
    let cases = trigger_cases();
    for c in &cases {
        let (text, cursor) = marked(c.text);
        let doc = Document::new(text, c.family, 1);
        let tree = parse_document(&doc);
        let got = decide_trigger(&doc, cursor, &c.origin, &tree, &TriggerConfig::default())
            .map_err(|e| e.to_string())?;
        if got != c.expected {
            return Err(format!(
                "{}: expected {:?}, got {got:?}",
                c.name, c.expected
            ));
        }
        if let Some(kind) = c.innermost {
            let node = innermost_scope(&tree, &doc, cursor).map_err(|e| e.to_string())?;
            if node.kind != kind {
                return Err(format!(
                    "{}: innermost {:?}, expected {kind:?}",
                    c.name, node.kind
                ));
            }
        }
    }
    Ok(cases.len())
}

pub struct TruncationCase {
    pub name: &'static str,
    pub family: LanguageFamily,
    pub text: &'static str,
    pub raw: &'static str,
    pub expected: &'static str,
    pub reason: CutReason,
}

pub fn truncation_cases() -> Vec<TruncationCase> {
    vec![
        TruncationCase {
            name: "out-of-scope foo2 removed",
            family: PY,
            text: "def foo(a, b):\n    total = a + b\n    |",
            raw: "if total > 10:\n        return total\n    return 0\n\n\ndef foo2():\n    return foo(1, 2)\n",
            expected: "if total > 10:\n        return total\n    return 0",
            reason: CutReason::ScopeClosed,
        },
        TruncationCase {
            name: "brace block closed at depth 2",
            family: C,
            text: "void f() {\n    if (a) {\n        |",
            raw: "x++;\n}\n}\nint g(){",
            expected: "x++;\n}",
            reason: CutReason::ScopeClosed,
        },
        TruncationCase {
            name: "line below a new function is not regenerated",
            family: PY,
            text: "def quicksort(arr):|\ntest1 = 1\n",
            raw: "\n    if len(arr) <= 1:\n        return arr\n    return arr\ntest1 = 1\n",
            expected: "\n    if len(arr) <= 1:\n        return arr\n    return arr",
            reason: CutReason::ScopeClosed,
        },
        TruncationCase {
            name: "no cut point",
            family: PY,
            text: "def f():\n    |",
            raw: "return 1",
            expected: "return 1",
            reason: CutReason::None,
        },
    ]
}

pub fn check_truncation_cases() -> Result<usize, String> {
    let cases = truncation_cases();
    for c in &cases {
        let (text, cursor) = marked(c.text);
        let doc = Document::new(text.as_str(), c.family, 1);
        let tree = parse_document(&doc);
        let out = truncate_to_scope(
            c.raw,
            &tree,
            &doc,
            cursor,
            SuggestionKind::MultiLine,
            &PostprocessConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        if out.text != c.expected || out.cut_reason != c.reason {
            return Err(format!(
                "{}: got {:?} ({:?})",
                c.name, out.text, out.cut_reason
            ));
        }
        let after = format!("{}{}{}", doc.prefix(cursor), out.text, doc.suffix(cursor));
        if !after.ends_with(doc.suffix(cursor)) || after.contains("foo2") {
            return Err(format!("{}: document after insertion {after:?}", c.name));
        }
    }
    Ok(cases.len())
}
