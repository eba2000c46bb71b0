//! Streaming seasonal-trend decomposition with fixed per-series memory.
//!
//! [`Decomposer`] turns each arriving value of a series into additive
//! trend, per-period seasonal and residual components. The supporting
//! modules provide the smoothing kernels ([`filters`]), quality metrics
//! ([`metrics`]), a seeded synthetic-series generator ([`synth`]) and a
//! keyed multi-worker throughput harness ([`harness`]).

pub mod decomposer;
pub mod error;
pub mod filters;
pub mod harness;
pub mod metrics;
pub mod ring;
pub mod synth;

pub use decomposer::{
    DecomposedPoint, Decomposer, DecomposerConfig, Emitted, PeriodTrace, UpdateTrace, DEFAULT_GAMMA, WINDOW_MULTIPLIER,
};
pub use error::{Error, Result};
pub use filters::{KernelVector, SymmetricKernel};
pub use harness::{BenchmarkSpec, KeyedEvent, ThroughputReport};
pub use metrics::{EvalReport, GroundTruth};
pub use ring::RingBuffer;
pub use synth::{SynthConfig, SyntheticSeries};
