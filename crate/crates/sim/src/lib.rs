//! Discrete-event model of the completion serving tier: a request queue
//! with optional QoS, continuous batching on each worker, a batch-size
//! dependent latency curve, deadlines and streaming cancellation.

pub mod config;
pub mod report;
pub mod simulate;
pub mod workload;

pub use config::{BatchConfig, LatencyModel, PerKind, QosMode, QosPolicy, SimConfig, SimError};
pub use report::{KindReport, Percentiles, SimReport};
pub use simulate::{run_simulation, simulate, Outcome, RequestResult, Trace};
pub use workload::{sample_workload, RequestKind, SimRequest, WorkloadMix};
