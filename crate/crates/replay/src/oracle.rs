//! A deterministic stand-in for the user's accept decision.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal};

use crate::session::PauseModel;

/// Accepts a suggestion only if it is exactly what the user was about to
/// type, and only after looking at it for a sampled dwell time.
#[derive(Debug, Clone)]
pub struct AcceptOracle {
    dwell: LogNormal<f64>,
    rng: StdRng,
}

impl AcceptOracle {
    pub fn new(pauses: &PauseModel, seed: u64) -> Self {
        Self {
            dwell: pauses.keystroke(),
            rng: StdRng::seed_from_u64(seed),
        }
    }

    /// `remaining` is the ground truth from the cursor on.
    pub fn accepts(&self, suggestion: &str, remaining: &str) -> bool {
        !suggestion.is_empty() && remaining.starts_with(suggestion)
    }

    /// How long the suggestion must be on screen before the user takes it.
    pub fn dwell_ms(&mut self) -> u64 {
        self.dwell.sample(&mut self.rng).round() as u64
    }
}
