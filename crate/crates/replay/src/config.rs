//! The tool's TOML configuration: one file for serving, replay and the
//! simulator.
//!
//! ```toml
//! version = 1
//! latency_scale = 1.0
//!
//! [session]          # keystroke pauses
//! median_ms = 180
//!
//! [latency]          # generation latency of the simulated model
//! per_token_ms = 7.5
//!
//! [engine]           # completion server settings
//! timeouts = { single_line_ms = 1000, multi_line_ms = 2800 }
//!
//! [sim]              # serving simulator
//! workers = 2
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use ghostline_server::{ConfigError, EngineConfig, ServerConfig};
use ghostline_sim::{LatencyModel, SimConfig, SimError};

use crate::session::PauseModel;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ReplayError {
    pub(crate) fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    #[serde(default = "unit_scale")]
    latency_scale: f64,
    #[serde(default)]
    session: PauseModel,
    #[serde(default)]
    latency: LatencyModel,
    #[serde(default)]
    engine: Option<toml::Table>,
    #[serde(default)]
    sim: SimConfig,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    /// Multiplier on every simulated generation latency in replay.
    pub latency_scale: f64,
    pub session: PauseModel,
    pub latency: LatencyModel,
    pub server: ServerConfig,
    pub sim: SimConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            latency_scale: 1.0,
            session: PauseModel::default(),
            latency: LatencyModel::default(),
            server: ServerConfig::default(),
            sim: SimConfig::default(),
        }
    }
}

impl ToolConfig {
    pub fn from_toml(text: &str) -> Result<Self, ReplayError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ReplayError::Parse(e.to_string()))?;
        if raw.version != CONFIG_VERSION {
            return Err(ReplayError::invalid(
                "version",
                format!("expected {CONFIG_VERSION}, found {}", raw.version),
            ));
        }
        let server = match raw.engine {
            None => ServerConfig::default(),
            Some(mut table) => {
                table
                    .entry("version")
                    .or_insert(toml::Value::Integer(i64::from(
                        ghostline_server::config::CONFIG_VERSION,
                    )));
                toml::Value::Table(table)
                    .try_into()
                    .map_err(|e: toml::de::Error| ReplayError::Parse(format!("engine: {e}")))?
            }
        };
        let config = Self {
            latency_scale: raw.latency_scale,
            session: raw.session,
            latency: raw.latency,
            server,
            sim: raw.sim,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ReplayError> {
        let text = std::fs::read_to_string(path).map_err(|e| ReplayError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ReplayError> {
        if !(self.latency_scale >= 0.0 && self.latency_scale.is_finite()) {
            return Err(ReplayError::invalid(
                "latency_scale",
                "must be non-negative",
            ));
        }
        self.session.validate()?;
        self.latency.validate().map_err(sim_error)?;
        self.sim.validate().map_err(|e| match sim_error(e) {
            ReplayError::Invalid { key, message } => {
                ReplayError::invalid(format!("sim.{key}"), message)
            }
            other => other,
        })?;
        self.engine().map(|_| ())
    }

    pub fn engine(&self) -> Result<EngineConfig, ReplayError> {
        self.server.engine().map_err(engine_error)
    }
}

fn sim_error(e: SimError) -> ReplayError {
    match e {
        SimError::InvalidConfig { key, reason } => ReplayError::invalid(key, reason),
    }
}

pub(crate) fn engine_error(e: ConfigError) -> ReplayError {
    match e {
        ConfigError::Invalid { key, message } => {
            ReplayError::invalid(format!("engine.{key}"), message)
        }
        ConfigError::Io { path, source } => ReplayError::Io { path, source },
        other => ReplayError::Parse(format!("engine: {other}")),
    }
}
