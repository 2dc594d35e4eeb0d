use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::config::{check, PerKind, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    SingleLine,
    MultiLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRequest {
    pub id: u64,
    pub kind: RequestKind,
    pub arrival_ms: f64,
    /// Length of the full generation in characters.
    pub chars: u32,
    pub tokens_to_generate: u32,
    /// Point after which the client no longer needs output.
    pub cancel_after_tokens: Option<u32>,
    /// The client left before anything was shown.
    pub abandoned: bool,
    pub deadline_ms: f64,
}

/// Arrival process and request shape.
///
/// Multi-line lengths are log-normal in characters. Every multi-line request
/// is cut at a Beta-distributed fraction of its length (scope truncation).
/// Single-line requests are abandoned by the client with probability
/// `single_abandon_rate` at a uniform point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadMix {
    pub requests: usize,
    pub arrivals_per_s: f64,
    pub multi_line_share: f64,
    pub chars_per_token: f64,
    pub single_line_chars_p50: f64,
    pub single_line_chars_sigma: f64,
    pub multi_line_chars_p50: f64,
    pub multi_line_chars_p90: f64,
    pub max_tokens: PerKind<u32>,
    /// Mean kept fraction of a multi-line generation.
    pub multi_line_keep_mean: f64,
    /// Beta concentration (alpha + beta) of the kept fraction.
    pub multi_line_keep_concentration: f64,
    pub single_abandon_rate: f64,
    pub timeout_ms: PerKind<f64>,
}

impl Default for WorkloadMix {
    fn default() -> Self {
        Self {
            requests: 4000,
            arrivals_per_s: 24.0,
            multi_line_share: 0.16,
            chars_per_token: 4.4,
            single_line_chars_p50: 56.0,
            single_line_chars_sigma: 0.5,
            multi_line_chars_p50: 325.0,
            multi_line_chars_p90: 450.0,
            max_tokens: PerKind {
                single_line: 25,
                multi_line: 120,
            },
            multi_line_keep_mean: 0.46,
            multi_line_keep_concentration: 10.0,
            single_abandon_rate: 0.47,
            timeout_ms: PerKind::both(2500.0),
        }
    }
}

impl WorkloadMix {
    pub fn validate(&self) -> Result<(), SimError> {
        check(self.requests > 0, "workload.requests", "must be at least 1")?;
        check(
            self.arrivals_per_s > 0.0 && self.arrivals_per_s.is_finite(),
            "workload.arrivals_per_s",
            "must be positive",
        )?;
        check(
            (0.0..=1.0).contains(&self.multi_line_share),
            "workload.multi_line_share",
            "must be within [0, 1]",
        )?;
        check(
            self.chars_per_token > 0.0,
            "workload.chars_per_token",
            "must be positive",
        )?;
        check(
            self.single_line_chars_p50 > 0.0,
            "workload.single_line_chars_p50",
            "must be positive",
        )?;
        check(
            self.single_line_chars_sigma >= 0.0,
            "workload.single_line_chars_sigma",
            "must be non-negative",
        )?;
        check(
            self.multi_line_chars_p50 > 0.0,
            "workload.multi_line_chars_p50",
            "must be positive",
        )?;
        check(
            self.multi_line_chars_p90 >= self.multi_line_chars_p50,
            "workload.multi_line_chars_p90",
            "must be at least the p50",
        )?;
        check(
            self.max_tokens.single_line >= 1 && self.max_tokens.multi_line >= 1,
            "workload.max_tokens",
            "must be at least 1",
        )?;
        check(
            self.multi_line_keep_mean > 0.0 && self.multi_line_keep_mean <= 1.0,
            "workload.multi_line_keep_mean",
            "must be within (0, 1]",
        )?;
        check(
            self.multi_line_keep_concentration > 0.0,
            "workload.multi_line_keep_concentration",
            "must be positive",
        )?;
        check(
            (0.0..=1.0).contains(&self.single_abandon_rate),
            "workload.single_abandon_rate",
            "must be within [0, 1]",
        )?;
        check(
            self.timeout_ms.single_line > 0.0 && self.timeout_ms.multi_line > 0.0,
            "workload.timeout_ms",
            "must be positive",
        )
    }

    fn tokens(&self, chars: u32, kind: RequestKind) -> u32 {
        ((chars as f64 / self.chars_per_token).ceil() as u32).clamp(1, self.max_tokens.get(kind))
    }
}

/// z-score of the 90th percentile of the standard normal.
const Z90: f64 = 1.281_551_565_545;

/// Deterministic request sequence for `seed`, sorted by arrival.
pub fn sample_workload(seed: u64, mix: &WorkloadMix) -> Vec<SimRequest> {
    let mut rng = StdRng::seed_from_u64(seed);
    let gaps = Exp::new(mix.arrivals_per_s / 1000.0).expect("validated rate");
    let single_len = LogNormal::new(mix.single_line_chars_p50.ln(), mix.single_line_chars_sigma)
        .expect("validated");
    let multi_sigma = (mix.multi_line_chars_p90 / mix.multi_line_chars_p50).ln() / Z90;
    let multi_len = LogNormal::new(mix.multi_line_chars_p50.ln(), multi_sigma).expect("validated");
    let k = mix.multi_line_keep_concentration;
    let keep = Beta::new(
        mix.multi_line_keep_mean * k,
        (1.0 - mix.multi_line_keep_mean).max(1e-9) * k,
    )
    .expect("validated");

    let mut t = 0.0;
    (0..mix.requests as u64)
        .map(|id| {
            t += gaps.sample(&mut rng);
            let kind = if rng.gen_bool(mix.multi_line_share) {
                RequestKind::MultiLine
            } else {
                RequestKind::SingleLine
            };
            let (chars, cancel, abandoned) = match kind {
                RequestKind::SingleLine => {
                    let chars = single_len.sample(&mut rng).round().max(1.0) as u32;
                    let tokens = mix.tokens(chars, kind);
                    if rng.gen_bool(mix.single_abandon_rate) {
                        (chars, Some(rng.gen_range(1..=tokens)), true)
                    } else {
                        (chars, None, false)
                    }
                }
                RequestKind::MultiLine => {
                    let chars = multi_len.sample(&mut rng).round().max(1.0) as u32;
                    let tokens = mix.tokens(chars, kind);
                    let kept = keep.sample(&mut rng);
                    (
                        chars,
                        Some(((kept * tokens as f64).round() as u32).clamp(1, tokens)),
                        false,
                    )
                }
            };
            SimRequest {
                id,
                kind,
                arrival_ms: t,
                chars,
                tokens_to_generate: mix.tokens(chars, kind),
                cancel_after_tokens: cancel,
                abandoned,
                deadline_ms: t + mix.timeout_ms.get(kind),
            }
        })
        .collect()
}
