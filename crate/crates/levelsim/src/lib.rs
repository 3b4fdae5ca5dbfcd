//! Trace-driven simulator of a three-level cache hierarchy with cache-level
//! prediction: a sequential-lookup baseline against LocMap- and TAGE-based
//! level predictors, with prefetching, misprediction recovery, and AMAT and
//! energy reporting.

pub mod config;
pub mod engine;
pub mod mem;
pub mod metrics;
pub mod predictor;
pub mod prefetch;
pub mod tage;
pub mod trace;

pub use config::{EngineMode, RunConfig};
pub use engine::Engine;
pub use metrics::{PredictionCategory, RunReport};
pub use trace::{SynthKind, SyntheticSpec, TraceEvent};
