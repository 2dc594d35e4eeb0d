//! Versioned TOML configuration.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use ghostline_core::backend::{
    load_corpus, CorpusError, HttpBackend, HttpBackendConfig, MockBackend, MockCorpus,
};
use ghostline_core::{
    CloserSet, ModelBackend, PostprocessConfig, PromptWindows, ScopeConfig, TriggerConfig,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("loading corpus {path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    pub version: u32,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub windows: PromptWindows,
    #[serde(default)]
    pub trigger: TriggerSection,
    #[serde(default)]
    pub timeouts: Timeouts,
    #[serde(default)]
    pub cache: CacheSection,
    #[serde(default)]
    pub telemetry: TelemetrySection,
    #[serde(default)]
    pub postprocess: PostprocessSection,
    /// Treat a cursor move without an edit like a keystroke.
    #[serde(default = "yes")]
    pub invalidate_on_cursor_move: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Mock {
        #[serde(default)]
        corpus: Option<PathBuf>,
        #[serde(default)]
        fallback: bool,
    },
    Http(HttpBackendConfig),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Mock {
            corpus: None,
            fallback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerSection {
    /// Extra characters allowed right of the cursor, on top of `}`, `)`, `]`.
    pub extra_closers: Vec<char>,
    pub multi_line_enabled: bool,
    pub module_scope_multi_line: bool,
    pub single_line_max_tokens: u32,
    pub multi_line_max_tokens: u32,
    pub tab_width: usize,
    pub extra_headers: Vec<String>,
}

impl Default for TriggerSection {
    fn default() -> Self {
        let t = TriggerConfig::default();
        Self {
            extra_closers: Vec::new(),
            multi_line_enabled: t.multi_line_enabled,
            module_scope_multi_line: t.module_scope_multi_line,
            single_line_max_tokens: t.single_line_max_tokens,
            multi_line_max_tokens: t.multi_line_max_tokens,
            tab_width: t.scope.tab_width,
            extra_headers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timeouts {
    pub single_line_ms: u64,
    pub multi_line_ms: u64,
}

impl Default for Timeouts {
    fn default() -> Self {
        Self {
            single_line_ms: 1000,
            multi_line_ms: 2800,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CacheSection {
    pub capacity: usize,
    pub ttl_s: u64,
}

impl Default for CacheSection {
    fn default() -> Self {
        Self {
            capacity: 512,
            ttl_s: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TelemetrySection {
    pub sink: Option<PathBuf>,
    pub user: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostprocessSection {
    pub realign: bool,
    pub indent_unit: usize,
    pub overlap_window: usize,
}

impl Default for PostprocessSection {
    fn default() -> Self {
        let p = PostprocessConfig::default();
        Self {
            realign: p.realign,
            indent_unit: p.indent_unit,
            overlap_window: p.overlap_window,
        }
    }
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            backend: BackendConfig::default(),
            windows: PromptWindows::default(),
            trigger: TriggerSection::default(),
            timeouts: Timeouts::default(),
            cache: CacheSection::default(),
            telemetry: TelemetrySection::default(),
            postprocess: PostprocessSection::default(),
            invalidate_on_cursor_move: true,
        }
    }
}

/// Runtime settings of the engine, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub trigger: TriggerConfig,
    pub postprocess: PostprocessConfig,
    pub windows: PromptWindows,
    pub timeouts: Timeouts,
    pub cache_capacity: NonZeroUsize,
    pub cache_ttl_ms: u64,
    pub invalidate_on_cursor_move: bool,
    pub user: Option<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        ServerConfig::default()
            .engine()
            .expect("defaults are valid")
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ServerConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.engine()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn engine(&self) -> Result<EngineConfig, ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(
                "version",
                format!("expected {CONFIG_VERSION}, found {}", self.version),
            ));
        }
        let closers = CloserSet::with_extra(self.trigger.extra_closers.iter().copied())
            .map_err(|e| invalid("trigger.extra_closers", e.to_string()))?;
        if self.trigger.single_line_max_tokens == 0 {
            return Err(invalid(
                "trigger.single_line_max_tokens",
                "must be positive".into(),
            ));
        }
        if self.trigger.multi_line_max_tokens == 0 {
            return Err(invalid(
                "trigger.multi_line_max_tokens",
                "must be positive".into(),
            ));
        }
        if self.trigger.tab_width == 0 {
            return Err(invalid("trigger.tab_width", "must be positive".into()));
        }
        let cache_capacity = NonZeroUsize::new(self.cache.capacity)
            .ok_or_else(|| invalid("cache.capacity", "must be positive".into()))?;
        if self.timeouts.single_line_ms == 0 {
            return Err(invalid(
                "timeouts.single_line_ms",
                "must be positive".into(),
            ));
        }
        if self.timeouts.multi_line_ms == 0 {
            return Err(invalid("timeouts.multi_line_ms", "must be positive".into()));
        }
        if self.postprocess.indent_unit == 0 {
            return Err(invalid(
                "postprocess.indent_unit",
                "must be positive".into(),
            ));
        }
        if let BackendConfig::Http(http) = &self.backend {
            if http.endpoint.is_empty() {
                return Err(invalid("backend.endpoint", "must not be empty".into()));
            }
        }
        let scope = ScopeConfig {
            tab_width: self.trigger.tab_width,
            extra_headers: self.trigger.extra_headers.clone(),
        };
        Ok(EngineConfig {
            trigger: TriggerConfig {
                closers,
                scope: scope.clone(),
                single_line_max_tokens: self.trigger.single_line_max_tokens,
                multi_line_max_tokens: self.trigger.multi_line_max_tokens,
                multi_line_enabled: self.trigger.multi_line_enabled,
                module_scope_multi_line: self.trigger.module_scope_multi_line,
            },
            postprocess: PostprocessConfig {
                realign: self.postprocess.realign,
                indent_unit: self.postprocess.indent_unit,
                overlap_window: self.postprocess.overlap_window,
                scope,
            },
            windows: self.windows,
            timeouts: self.timeouts,
            cache_capacity,
            cache_ttl_ms: self.cache.ttl_s.saturating_mul(1000),
            invalidate_on_cursor_move: self.invalidate_on_cursor_move,
            user: self.telemetry.user.clone(),
        })
    }

    /// Instantiate the configured backend. Relative corpus paths resolve
    /// against `base`.
    pub fn backend(&self, base: &Path) -> Result<Arc<dyn ModelBackend>, ConfigError> {
        match &self.backend {
            BackendConfig::Mock { corpus, fallback } => {
                let corpus = match corpus {
                    None => MockCorpus::new(),
                    Some(path) => {
                        let path = base.join(path);
                        let file =
                            std::fs::File::open(&path).map_err(|source| ConfigError::Io {
                                path: path.clone(),
                                source,
                            })?;
                        load_corpus(std::io::BufReader::new(file))
                            .map_err(|source| ConfigError::Corpus { path, source })?
                    }
                };
                Ok(Arc::new(MockBackend::new(corpus).with_fallback(*fallback)))
            }
            BackendConfig::Http(http) => Ok(Arc::new(HttpBackend::new(http.clone()))),
        }
    }
}

fn invalid(key: &'static str, message: String) -> ConfigError {
    ConfigError::Invalid { key, message }
}
