//! Pre-processing: decide what kind of suggestion a cursor position may get.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{Cursor, Document};
use crate::scope::{
    innermost_scope_with, is_at_end_of_scope_with, line_context_with, ScopeConfig, ScopeError,
    ScopeTree,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    SingleLine,
    MultiLine,
}

impl SuggestionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionKind::SingleLine => "single_line",
            SuggestionKind::MultiLine => "multi_line",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiLineReason {
    EndOfInnerScope,
    NewScopeDefinition,
    NotebookCellEnd,
    ExplicitRequest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "reason")]
pub enum TriggerDecision {
    Suppress,
    SingleLine,
    MultiLine(MultiLineReason),
}

impl TriggerDecision {
    /// The suggestion kind to generate, `None` when suppressed.
    pub fn kind(self) -> Option<SuggestionKind> {
        match self {
            TriggerDecision::Suppress => None,
            TriggerDecision::SingleLine => Some(SuggestionKind::SingleLine),
            TriggerDecision::MultiLine(_) => Some(SuggestionKind::MultiLine),
        }
    }

    pub fn is_multi_line(self) -> bool {
        matches!(self, TriggerDecision::MultiLine(_))
    }
}

/// Cell boundary information supplied by notebook clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NotebookCell {
    /// The cursor sits after the last content of the cell.
    pub cursor_at_cell_end: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RequestOrigin {
    #[serde(default)]
    pub explicit_shortcut: bool,
    #[serde(default)]
    pub notebook_cell: Option<NotebookCell>,
}

impl RequestOrigin {
    pub fn typing() -> Self {
        Self::default()
    }

    pub fn shortcut() -> Self {
        Self {
            explicit_shortcut: true,
            notebook_cell: None,
        }
    }
}

/// Characters that may sit right of the cursor without suppressing a
/// suggestion. Whitespace is always allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloserSet {
    chars: BTreeSet<char>,
}

impl Default for CloserSet {
    fn default() -> Self {
        Self {
            chars: ['}', ')', ']'].into_iter().collect(),
        }
    }
}

impl CloserSet {
    /// The default set plus `extra`. Alphanumerics are rejected.
    pub fn with_extra(extra: impl IntoIterator<Item = char>) -> Result<Self, TriggerError> {
        let mut set = Self::default();
        for c in extra {
            if c.is_alphanumeric() {
                return Err(TriggerError::InvalidCloser(c));
            }
            if !c.is_whitespace() {
                set.chars.insert(c);
            }
        }
        Ok(set)
    }

    pub fn contains(&self, c: char) -> bool {
        self.chars.contains(&c)
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.chars.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerConfig {
    pub closers: CloserSet,
    pub scope: ScopeConfig,
    pub single_line_max_tokens: u32,
    pub multi_line_max_tokens: u32,
    /// When off, every multi-line decision is served as a single line.
    pub multi_line_enabled: bool,
    /// Allow end-of-scope triggering at module level (end of file).
    pub module_scope_multi_line: bool,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            closers: CloserSet::default(),
            scope: ScopeConfig::default(),
            single_line_max_tokens: 25,
            multi_line_max_tokens: 120,
            multi_line_enabled: true,
            module_scope_multi_line: false,
        }
    }
}

/// Sampling limits handed to the backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub stop_at_newline: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f32>,
    /// Backend-specific knobs passed through untouched.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl GenerationParams {
    pub fn new(max_tokens: u32, stop_at_newline: bool) -> Self {
        Self {
            max_tokens,
            stop_at_newline,
            temperature: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TriggerError> {
        if self.max_tokens == 0 {
            return Err(TriggerError::ZeroMaxTokens);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TriggerError {
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error("suppressed requests have no generation parameters")]
    Suppressed,
    #[error("closer set may not contain alphanumeric character {0:?}")]
    InvalidCloser(char),
    #[error("max_tokens must be at least 1")]
    ZeroMaxTokens,
}

/// Run the trigger cascade for a cursor position.
///
/// Order: code right of the cursor suppresses everything; an explicit
/// shortcut wins next, then a notebook cell end, then a freshly typed scope
/// header, then the end of a non-module innermost scope. Anything else gets a
/// single line.
pub fn decide_trigger(
    doc: &Document,
    cursor: Cursor,
    origin: &RequestOrigin,
    tree: &ScopeTree,
    config: &TriggerConfig,
) -> Result<TriggerDecision, TriggerError> {
    let decision = cascade(doc, cursor, origin, tree, config)?;
    if decision.is_multi_line() && !config.multi_line_enabled {
        return Ok(TriggerDecision::SingleLine);
    }
    Ok(decision)
}

fn cascade(
    doc: &Document,
    cursor: Cursor,
    origin: &RequestOrigin,
    tree: &ScopeTree,
    config: &TriggerConfig,
) -> Result<TriggerDecision, TriggerError> {
    // Validates version and cursor before anything else.
    let innermost = innermost_scope_with(tree, doc, cursor, &config.scope)?;
    let ctx = line_context_with(doc, cursor, &config.closers, &config.scope);
    if !ctx.after_is_closers_only {
        return Ok(TriggerDecision::Suppress);
    }
    if origin.explicit_shortcut {
        return Ok(TriggerDecision::MultiLine(MultiLineReason::ExplicitRequest));
    }
    if origin.notebook_cell.is_some_and(|c| c.cursor_at_cell_end) {
        return Ok(TriggerDecision::MultiLine(MultiLineReason::NotebookCellEnd));
    }
    let at_line_end = ctx.text_after_cursor.trim().is_empty();
    if ctx.defines_new_scope && at_line_end {
        return Ok(TriggerDecision::MultiLine(
            MultiLineReason::NewScopeDefinition,
        ));
    }
    let scope_allowed = !innermost.is_module() || config.module_scope_multi_line;
    if scope_allowed && is_at_end_of_scope_with(tree, doc, cursor, &config.closers, &config.scope)?
    {
        return Ok(TriggerDecision::MultiLine(MultiLineReason::EndOfInnerScope));
    }
    Ok(TriggerDecision::SingleLine)
}

pub fn generation_params_for(
    decision: TriggerDecision,
    config: &TriggerConfig,
) -> Result<GenerationParams, TriggerError> {
    let params = match decision {
        TriggerDecision::Suppress => return Err(TriggerError::Suppressed),
        TriggerDecision::SingleLine => GenerationParams::new(config.single_line_max_tokens, true),
        TriggerDecision::MultiLine(_) => GenerationParams::new(config.multi_line_max_tokens, false),
    };
    params.validate()?;
    Ok(params)
}
