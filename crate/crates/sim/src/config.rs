use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::{RequestKind, WorkloadMix};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid config: {key}: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> SimError {
    SimError::InvalidConfig {
        key,
        reason: reason.into(),
    }
}

/// A value for each request kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerKind<T> {
    pub single_line: T,
    pub multi_line: T,
}

impl<T: Copy> PerKind<T> {
    pub fn both(v: T) -> Self {
        Self {
            single_line: v,
            multi_line: v,
        }
    }

    pub fn get(&self, kind: RequestKind) -> T {
        match kind {
            RequestKind::SingleLine => self.single_line,
            RequestKind::MultiLine => self.multi_line,
        }
    }
}

/// Step costs of one worker. Prefill is charged as whole decode steps, so a
/// request admitted into a batch of `b` sees its first token after
/// `prefill_steps()` steps of `step_ms(b)` each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyModel {
    pub first_token_ms: f64,
    pub per_token_ms: f64,
    /// Largest batch that still runs at the base step cost.
    pub knee_batch: usize,
    /// Relative step-cost increase per request above the knee.
    pub slope_per_request: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            first_token_ms: 190.0,
            per_token_ms: 7.5,
            knee_batch: 8,
            slope_per_request: 0.1,
        }
    }
}

impl LatencyModel {
    pub fn batch_factor(&self, batch: usize) -> f64 {
        1.0 + self.slope_per_request * batch.saturating_sub(self.knee_batch) as f64
    }

    pub fn step_ms(&self, batch: usize) -> f64 {
        self.per_token_ms * self.batch_factor(batch)
    }

    pub fn first_token_ms_at(&self, batch: usize) -> f64 {
        self.prefill_steps() as f64 * self.step_ms(batch)
    }

    pub fn prefill_steps(&self) -> u32 {
        ((self.first_token_ms / self.per_token_ms).round() as u32).max(1)
    }

    /// Time to stream `tokens` tokens alone on a worker.
    pub fn unloaded_ms(&self, tokens: u32) -> f64 {
        (self.prefill_steps() + tokens.max(1) - 1) as f64 * self.per_token_ms
    }

    /// The same curve with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            first_token_ms: self.first_token_ms * factor,
            per_token_ms: self.per_token_ms * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.first_token_ms > 0.0 && self.first_token_ms.is_finite()) {
            return Err(invalid("latency.first_token_ms", "must be positive"));
        }
        if !(self.per_token_ms > 0.0 && self.per_token_ms.is_finite()) {
            return Err(invalid("latency.per_token_ms", "must be positive"));
        }
        if !(self.slope_per_request >= 0.0 && self.slope_per_request.is_finite()) {
            return Err(invalid("latency.slope_per_request", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub max_batch: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self { max_batch: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QosMode {
    Fifo,
    Gestation,
}

/// Queue policy. Under `Gestation` a request may run past its deadline by
/// `gestation_ms` of its kind and is ordered by arrival minus
/// `priority_boost_ms`. Both knobs are ignored under `Fifo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosPolicy {
    pub mode: QosMode,
    pub gestation_ms: PerKind<f64>,
    pub priority_boost_ms: PerKind<f64>,
}

impl Default for QosPolicy {
    fn default() -> Self {
        Self {
            mode: QosMode::Fifo,
            gestation_ms: PerKind {
                single_line: 0.0,
                multi_line: 1500.0,
            },
            priority_boost_ms: PerKind {
                single_line: 0.0,
                multi_line: 250.0,
            },
        }
    }
}

impl QosPolicy {
    pub fn gestation() -> Self {
        Self {
            mode: QosMode::Gestation,
            ..Self::default()
        }
    }

    pub fn extra_tolerance_ms(&self, kind: RequestKind) -> f64 {
        match self.mode {
            QosMode::Fifo => 0.0,
            QosMode::Gestation => self.gestation_ms.get(kind),
        }
    }

    pub fn boost_ms(&self, kind: RequestKind) -> f64 {
        match self.mode {
            QosMode::Fifo => 0.0,
            QosMode::Gestation => self.priority_boost_ms.get(kind),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for v in [self.gestation_ms.single_line, self.gestation_ms.multi_line] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid("qos.gestation_ms", "must be non-negative"));
            }
        }
        for v in [
            self.priority_boost_ms.single_line,
            self.priority_boost_ms.multi_line,
        ] {
            if !v.is_finite() {
                return Err(invalid("qos.priority_boost_ms", "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub workers: usize,
    pub batch: BatchConfig,
    pub qos: QosPolicy,
    pub latency: LatencyModel,
    pub streaming_cancel: bool,
    pub workload: WorkloadMix,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            batch: BatchConfig::default(),
            qos: QosPolicy::default(),
            latency: LatencyModel::default(),
            streaming_cancel: true,
            workload: WorkloadMix::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.workers == 0 {
            return Err(invalid("workers", "at least one worker is required"));
        }
        if self.batch.max_batch == 0 {
            return Err(invalid("batch.max_batch", "must be at least 1"));
        }
        self.latency.validate()?;
        self.qos.validate()?;
        self.workload.validate()
    }
}

pub(crate) fn check(ok: bool, key: &'static str, reason: &str) -> Result<(), SimError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, reason))
    }
}
