//! The event loop. Time only moves to the next arrival or the next step
//! boundary of some worker. Arrivals join the worker with the fewest running
//! and queued requests; a worker admits from its queue only at a step
//! boundary or when idle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, SimError};
use crate::report::SimReport;
use crate::workload::{RequestKind, SimRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Cancelled,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestResult {
    pub id: u64,
    pub kind: RequestKind,
    pub outcome: Outcome,
    pub latency_ms: f64,
    pub generated_tokens: u32,
    pub wasted_tokens: u32,
    pub displayed_equivalent: bool,
}

struct Queued {
    key: f64,
    index: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // BinaryHeap is a max-heap: smallest key first, then lowest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then(other.index.cmp(&self.index))
    }
}

struct Slot {
    index: usize,
    steps: u32,
}

#[derive(Default)]
struct Worker {
    queue: BinaryHeap<Queued>,
    running: Vec<Slot>,
    step_end: Option<f64>,
}

impl Worker {
    fn load(&self) -> usize {
        self.queue.len() + self.running.len()
    }
}

/// Simulate `requests` (sorted by arrival) on the configured tier.
pub fn run_simulation(
    seed: u64,
    requests: &[SimRequest],
    config: &SimConfig,
) -> Result<SimReport, SimError> {
    config.validate()?;
    let trace = simulate(requests, config);
    let makespan = trace.ended_at.iter().copied().fold(0.0, f64::max);
    let mean_batch = if trace.steps == 0 {
        0.0
    } else {
        trace.batch_sum as f64 / trace.steps as f64
    };
    Ok(SimReport::build(
        seed,
        config.workers,
        config.streaming_cancel,
        &trace.results,
        makespan,
        mean_batch,
    ))
}

/// Everything a run produced, indexed like the input requests.
#[derive(Debug, Clone)]
pub struct Trace {
    pub results: Vec<RequestResult>,
    /// Absolute time each request ended.
    pub ended_at: Vec<f64>,
    /// Sum of batch sizes over all worker steps.
    pub batch_sum: u64,
    pub steps: u64,
}

/// Run without validating `config`.
pub fn simulate(requests: &[SimRequest], config: &SimConfig) -> Trace {
    let latency = &config.latency;
    let qos = &config.qos;
    let prefill = latency.prefill_steps();
    let effective_deadline = |r: &SimRequest| r.deadline_ms + qos.extra_tolerance_ms(r.kind);
    let target = |r: &SimRequest| match (config.streaming_cancel, r.cancel_after_tokens) {
        (true, Some(c)) => c,
        _ => r.tokens_to_generate,
    };

    let mut results: Vec<Option<(RequestResult, f64)>> = vec![None; requests.len()];
    let mut finish = |index: usize, outcome: Outcome, at: f64, generated: u32| {
        let r = &requests[index];
        let wasted = r
            .cancel_after_tokens
            .map_or(0, |c| generated.saturating_sub(c));
        let displayed_equivalent = outcome != Outcome::TimedOut && !r.abandoned;
        results[index] = Some((
            RequestResult {
                id: r.id,
                kind: r.kind,
                outcome,
                latency_ms: at - r.arrival_ms,
                generated_tokens: generated,
                wasted_tokens: wasted,
                displayed_equivalent,
            },
            at,
        ));
    };

    let mut workers: Vec<Worker> = (0..config.workers).map(|_| Worker::default()).collect();
    let mut next_arrival = 0;
    let (mut batch_sum, mut batch_steps) = (0u64, 0u64);

    loop {
        let arrival_at = requests.get(next_arrival).map(|r| r.arrival_ms);
        let step_at = workers
            .iter()
            .filter_map(|w| w.step_end)
            .min_by(f64::total_cmp);
        let now = match (arrival_at, step_at) {
            (None, None) => break,
            (Some(a), None) => a,
            (None, Some(s)) => s,
            (Some(a), Some(s)) => a.min(s),
        };

        for w in workers.iter_mut().filter(|w| w.step_end == Some(now)) {
            w.step_end = None;
            w.running.retain_mut(|slot| {
                slot.steps += 1;
                let r = &requests[slot.index];
                let generated = (slot.steps + 1).saturating_sub(prefill);
                if generated >= target(r) {
                    let outcome = if generated < r.tokens_to_generate {
                        Outcome::Cancelled
                    } else {
                        Outcome::Completed
                    };
                    let deadline = effective_deadline(r);
                    if now <= deadline {
                        finish(slot.index, outcome, now, generated);
                    } else {
                        finish(slot.index, Outcome::TimedOut, deadline, generated);
                    }
                    false
                } else if now >= effective_deadline(r) {
                    // the client gave up at the deadline; the slot frees at the boundary
                    finish(
                        slot.index,
                        Outcome::TimedOut,
                        effective_deadline(r),
                        generated,
                    );
                    false
                } else {
                    true
                }
            });
        }

        while let Some(r) = requests.get(next_arrival).filter(|r| r.arrival_ms <= now) {
            let w = workers
                .iter_mut()
                .min_by_key(|w| w.load())
                .expect("at least one worker");
            w.queue.push(Queued {
                key: r.arrival_ms - qos.boost_ms(r.kind),
                index: next_arrival,
            });
            next_arrival += 1;
        }

        for w in workers.iter_mut().filter(|w| w.step_end.is_none()) {
            while w.running.len() < config.batch.max_batch {
                let Some(q) = w.queue.pop() else { break };
                let deadline = effective_deadline(&requests[q.index]);
                if deadline <= now {
                    finish(q.index, Outcome::TimedOut, deadline, 0);
                    continue;
                }
                w.running.push(Slot {
                    index: q.index,
                    steps: 0,
                });
            }
            if !w.running.is_empty() {
                w.step_end = Some(now + latency.step_ms(w.running.len()));
                batch_sum += w.running.len() as u64;
                batch_steps += 1;
            }
        }
    }
    debug_assert!(workers.iter().all(|w| w.queue.is_empty()));
    let (results, ended_at) = results
        .into_iter()
        .map(|r| r.expect("every request ends"))
        .unzip();
    Trace {
        results,
        ended_at,
        batch_sum,
        steps: batch_steps,
    }
}
