use serde::{Deserialize, Serialize};

use crate::simulate::{Outcome, RequestResult};
use crate::workload::RequestKind;

/// Nearest-rank percentiles in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

impl Percentiles {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Self {
            p50: rank(0.50),
            p90: rank(0.90),
            p99: rank(0.99),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub arrivals: usize,
    pub completed: usize,
    pub cancelled: usize,
    pub timed_out: usize,
    pub timeout_rate: f64,
    /// Round trip of every request: completion, cancellation or timeout.
    pub latency_ms: Percentiles,
    /// Round trip of requests that streamed to the end.
    pub completed_latency_ms: Percentiles,
    pub generated_tokens: u64,
    pub wasted_tokens: u64,
    /// Answered in time and still wanted by the client.
    pub displayed_equivalent: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub workers: usize,
    pub streaming_cancel: bool,
    pub arrivals: usize,
    pub completed: usize,
    pub cancelled: usize,
    pub timed_out: usize,
    pub latency_ms: Percentiles,
    pub generated_tokens: u64,
    pub wasted_tokens: u64,
    pub makespan_ms: f64,
    /// Served requests (completed or cancelled) per second of makespan.
    pub effective_throughput_rps: f64,
    pub mean_batch_size: f64,
    pub single_line: KindReport,
    pub multi_line: KindReport,
}

impl KindReport {
    pub(crate) fn build<'a>(results: impl Iterator<Item = &'a RequestResult>) -> Self {
        let mut r = Self::default();
        let mut all = Vec::new();
        let mut done = Vec::new();
        for res in results {
            r.arrivals += 1;
            match res.outcome {
                Outcome::Completed => {
                    r.completed += 1;
                    done.push(res.latency_ms);
                }
                Outcome::Cancelled => r.cancelled += 1,
                Outcome::TimedOut => r.timed_out += 1,
            }
            all.push(res.latency_ms);
            r.generated_tokens += u64::from(res.generated_tokens);
            r.wasted_tokens += u64::from(res.wasted_tokens);
            if res.displayed_equivalent {
                r.displayed_equivalent += 1;
            }
        }
        r.timeout_rate = if r.arrivals == 0 {
            0.0
        } else {
            r.timed_out as f64 / r.arrivals as f64
        };
        r.latency_ms = Percentiles::of(&all);
        r.completed_latency_ms = Percentiles::of(&done);
        r
    }
}

impl SimReport {
    pub(crate) fn build(
        seed: u64,
        workers: usize,
        streaming_cancel: bool,
        results: &[RequestResult],
        makespan_ms: f64,
        mean_batch_size: f64,
    ) -> Self {
        let total = KindReport::build(results.iter());
        let served = total.completed + total.cancelled;
        Self {
            seed,
            workers,
            streaming_cancel,
            arrivals: total.arrivals,
            completed: total.completed,
            cancelled: total.cancelled,
            timed_out: total.timed_out,
            latency_ms: total.latency_ms,
            generated_tokens: total.generated_tokens,
            wasted_tokens: total.wasted_tokens,
            makespan_ms,
            effective_throughput_rps: if makespan_ms > 0.0 {
                served as f64 * 1000.0 / makespan_ms
            } else {
                0.0
            },
            mean_batch_size,
            single_line: KindReport::build(
                results.iter().filter(|r| r.kind == RequestKind::SingleLine),
            ),
            multi_line: KindReport::build(
                results.iter().filter(|r| r.kind == RequestKind::MultiLine),
            ),
        }
    }

    pub fn kind(&self, kind: RequestKind) -> &KindReport {
        match kind {
            RequestKind::SingleLine => &self.single_line,
            RequestKind::MultiLine => &self.multi_line,
        }
    }
}
