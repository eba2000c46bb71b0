//! Keyed multi-series throughput harness.
//!
//! Events for many independent series are hash-partitioned across worker
//! threads. Each worker owns the decomposers for its keys outright and
//! processes its events sequentially, so no state is shared while points
//! are being processed; the coordinator only aggregates timings afterwards.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hasher;
use std::sync::Barrier;
use std::time::{Duration, Instant};

use fnv::FnvHasher;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::decomposer::{DecomposedPoint, Decomposer, DecomposerConfig, Emitted, DEFAULT_GAMMA};
use crate::error::{invalid, Error, Result};
use crate::synth::{SynthConfig, SynthStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyedEvent {
    pub key: String,
    /// Per-key sequence number, contiguous from 1.
    pub seq: u64,
    pub value: f64,
}

/// Worker owning `key`: 64-bit FNV-1a over the key's UTF-8 bytes, mixed with
/// the MurmurHash3 `fmix64` finalizer, reduced to `0..num_workers` by taking
/// the high word of `hash * num_workers`.
pub fn partition(key: &str, num_workers: usize) -> usize {
    let num_workers = num_workers.max(1);
    let mut hasher = FnvHasher::default();
    hasher.write(key.as_bytes());
    ((u128::from(fmix64(hasher.finish())) * num_workers as u128) >> 64) as usize
}

// FNV-1a alone leaves the high bits nearly blind to trailing bytes.
fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51afd7ed558ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ceb9fe1a85ec53);
    h ^ (h >> 33)
}

/// Order-sensitive digest of a decomposition (FNV-1a over the bit patterns
/// of every emitted field).
#[derive(Default)]
pub struct Checksum(FnvHasher);

impl Checksum {
    pub fn update(&mut self, point: &DecomposedPoint) {
        self.0.write_u64(point.index);
        self.0.write_u64(point.value.to_bits());
        self.0.write_u64(point.trend.to_bits());
        for s in &point.seasonal {
            self.0.write_u64(s.to_bits());
        }
        self.0.write_u64(point.residual.to_bits());
    }

    pub fn value(&self) -> u64 {
        self.0.finish()
    }

    pub fn of(points: &[DecomposedPoint]) -> u64 {
        let mut c = Self::default();
        points.iter().for_each(|p| c.update(p));
        c.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceMode {
    /// Events are materialized before the timed region starts.
    #[default]
    PreGenerated,
    /// Workers synthesize their keys' events inside the timed region.
    Streamed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Interleave {
    #[default]
    RoundRobin,
    Random {
        seed: u64,
    },
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_workers() -> usize {
    1
}

/// Benchmark description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub keys: usize,
    pub points_per_key: usize,
    pub periods: Vec<usize>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub mode: SourceMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub interleave: Interleave,
    /// Stop early once this much wall time has passed.
    #[serde(default)]
    pub max_duration_secs: Option<f64>,
    #[serde(default)]
    pub retain_outputs: bool,
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.keys == 0 {
            return Err(invalid("benchmark needs at least one key"));
        }
        if self.workers == 0 {
            return Err(invalid("benchmark needs at least one worker"));
        }
        if let Some(d) = self.max_duration_secs {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid(format!("max duration must be positive, got {d}")));
            }
        }
        self.decomposer_config()?;
        Ok(())
    }

    pub fn decomposer_config(&self) -> Result<DecomposerConfig> {
        DecomposerConfig::new(self.periods.clone())?.with_gamma(self.gamma)
    }

    pub fn key_name(index: usize) -> String {
        format!("series-{index:06}")
    }

    /// Generator settings for key `index`: unit amplitudes, five trend
    /// changes, noise sigma 0.25, seed `seed + index`.
    pub fn key_synth(&self, index: usize) -> SynthConfig {
        SynthConfig {
            n: self.points_per_key,
            periods: self.periods.clone(),
            amplitudes: vec![1.0; self.periods.len()],
            n_changepoints: 5.min(self.points_per_key.saturating_sub(1)),
            slope_range: (-0.01, 0.01),
            jump_range: (-1.0, 1.0),
            noise_sigma: 0.25,
            seed: self.seed.wrapping_add(index as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub retain_outputs: bool,
    pub max_duration: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerReport {
    pub worker: usize,
    pub keys: usize,
    pub points: u64,
    pub elapsed_secs: f64,
    pub points_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub workers: Vec<WorkerReport>,
    pub total_keys: usize,
    pub total_points: u64,
    pub elapsed_secs: f64,
    pub aggregate_points_per_sec: f64,
    /// Algorithm state only (8 bytes per stored real), summed over keys.
    pub state_bytes_total: usize,
}

impl fmt::Display for ThroughputReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6}  {:>8}  {:>12}  {:>10}  {:>14}",
            "worker", "keys", "points", "secs", "points/sec"
        )?;
        for w in &self.workers {
            writeln!(
                f,
                "{:>6}  {:>8}  {:>12}  {:>10.4}  {:>14.0}",
                w.worker, w.keys, w.points, w.elapsed_secs, w.points_per_sec
            )?;
        }
        writeln!(
            f,
            "{:>6}  {:>8}  {:>12}  {:>10.4}  {:>14.0}",
            "total", self.total_keys, self.total_points, self.elapsed_secs, self.aggregate_points_per_sec
        )?;
        write!(f, "state bytes: {}", self.state_bytes_total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyOutcome {
    pub key: String,
    pub points: u64,
    /// [`Checksum`] over every emitted point.
    pub checksum: u64,
    pub outputs: Option<Vec<DecomposedPoint>>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: ThroughputReport,
    /// Sorted by key.
    pub keys: Vec<KeyOutcome>,
}

impl BenchOutcome {
    pub fn checksums(&self) -> BTreeMap<String, u64> {
        self.keys.iter().map(|k| (k.key.clone(), k.checksum)).collect()
    }
}

struct KeyState {
    key: String,
    decomposer: Decomposer,
    next_seq: u64,
    checksum: Checksum,
    outputs: Option<Vec<DecomposedPoint>>,
}

impl KeyState {
    fn new(key: String, config: &DecomposerConfig, retain: bool) -> Result<Self> {
        Ok(Self {
            key,
            decomposer: Decomposer::new(config.clone())?,
            next_seq: 1,
            checksum: Checksum::default(),
            outputs: retain.then(Vec::new),
        })
    }

    #[inline]
    fn process(&mut self, seq: u64, value: f64) -> Result<()> {
        if seq != self.next_seq {
            return Err(Error::OutOfOrder {
                key: self.key.clone(),
                expected: self.next_seq,
                got: seq,
            });
        }
        self.next_seq += 1;
        match self.decomposer.push(value)? {
            Emitted::Buffering => {}
            Emitted::Point(p) => self.record(p),
            Emitted::Initialized(points) => points.into_iter().for_each(|p| self.record(p)),
        }
        Ok(())
    }

    fn record(&mut self, point: DecomposedPoint) {
        self.checksum.update(&point);
        if let Some(out) = &mut self.outputs {
            out.push(point);
        }
    }

    fn finish(self) -> (KeyOutcome, usize) {
        let state = self.decomposer.state_len();
        (
            KeyOutcome {
                key: self.key,
                points: self.next_seq - 1,
                checksum: self.checksum.value(),
                outputs: self.outputs,
            },
            state,
        )
    }
}

/// Work handed to one worker thread.
enum WorkerInput {
    /// `(key slot, seq, value)` in processing order.
    Events(Vec<(usize, u64, f64)>),
    Streamed {
        generators: Vec<SynthStream>,
        interleave: Interleave,
        worker: usize,
    },
}

struct WorkerResult {
    keys: Vec<KeyState>,
    points: u64,
    start: Instant,
    end: Instant,
}

/// Yields `(slot, seq, value)` by pulling from per-key generators.
struct StreamedEvents {
    generators: Vec<SynthStream>,
    seqs: Vec<u64>,
    active: Vec<usize>,
    cursor: usize,
    rng: Option<SplitMix64>,
}

impl Iterator for StreamedEvents {
    type Item = (usize, u64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        while !self.active.is_empty() {
            let pos = match &mut self.rng {
                Some(rng) => (rng.next_u64() % self.active.len() as u64) as usize,
                None => self.cursor % self.active.len(),
            };
            let slot = self.active[pos];
            match self.generators[slot].next() {
                Some(point) => {
                    self.seqs[slot] += 1;
                    self.cursor = pos + 1;
                    return Some((slot, self.seqs[slot], point.value));
                }
                None => {
                    self.active.remove(pos);
                    self.cursor = pos;
                }
            }
        }
        None
    }
}

fn run_worker(
    mut keys: Vec<KeyState>,
    input: WorkerInput,
    barrier: &Barrier,
    max_duration: Option<Duration>,
) -> Result<WorkerResult> {
    fn drive(
        keys: &mut [KeyState],
        events: impl Iterator<Item = (usize, u64, f64)>,
        start: Instant,
        max_duration: Option<Duration>,
    ) -> Result<u64> {
        let mut points = 0u64;
        for (slot, seq, value) in events {
            keys[slot].process(seq, value)?;
            points += 1;
            if let Some(limit) = max_duration {
                if points.is_multiple_of(256) && start.elapsed() >= limit {
                    break;
                }
            }
        }
        Ok(points)
    }

    barrier.wait();
    let start = Instant::now();
    let points = match input {
        WorkerInput::Events(events) => drive(&mut keys, events.into_iter(), start, max_duration),
        WorkerInput::Streamed {
            generators,
            interleave,
            worker,
        } => {
            let n = generators.len();
            let rng = match interleave {
                Interleave::RoundRobin => None,
                Interleave::Random { seed } => Some(SplitMix64::seed_from_u64(seed.wrapping_add(worker as u64))),
            };
            let events = StreamedEvents {
                generators,
                seqs: vec![0; n],
                active: (0..n).collect(),
                cursor: 0,
                rng,
            };
            drive(&mut keys, events, start, max_duration)
        }
    };
    let end = Instant::now();
    Ok(WorkerResult {
        keys,
        points: points?,
        start,
        end,
    })
}

fn execute(per_worker: Vec<(Vec<KeyState>, WorkerInput)>, max_duration: Option<Duration>) -> Result<BenchOutcome> {
    let n_workers = per_worker.len();
    let barrier = Barrier::new(n_workers + 1);
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = per_worker
            .into_iter()
            .map(|(keys, input)| {
                let barrier = &barrier;
                scope.spawn(move || run_worker(keys, input, barrier, max_duration))
            })
            .collect();
        barrier.wait();
        handles
            .into_iter()
            .map(|h| h.join().expect("benchmark worker panicked"))
            .collect()
    });
    // Wall time spans the earliest worker start to the latest worker finish.
    let mut span: Option<(Instant, Instant)> = None;

    let mut workers = Vec::with_capacity(n_workers);
    let mut outcomes = Vec::new();
    let mut total_points = 0;
    let mut state_reals = 0;
    for (worker, result) in results.into_iter().enumerate() {
        let result = result?;
        span = Some(match span {
            None => (result.start, result.end),
            Some((s, e)) => (s.min(result.start), e.max(result.end)),
        });
        let secs = (result.end - result.start).as_secs_f64();
        workers.push(WorkerReport {
            worker,
            keys: result.keys.len(),
            points: result.points,
            elapsed_secs: secs,
            points_per_sec: rate(result.points, secs),
        });
        total_points += result.points;
        for key in result.keys {
            let (outcome, state) = key.finish();
            state_reals += state;
            outcomes.push(outcome);
        }
    }
    outcomes.sort_by(|a, b| a.key.cmp(&b.key));
    let elapsed_secs = span.map_or(0.0, |(s, e)| (e - s).as_secs_f64());
    Ok(BenchOutcome {
        report: ThroughputReport {
            workers,
            total_keys: outcomes.len(),
            total_points,
            elapsed_secs,
            aggregate_points_per_sec: rate(total_points, elapsed_secs),
            state_bytes_total: state_reals * std::mem::size_of::<f64>(),
        },
        keys: outcomes,
    })
}

fn rate(points: u64, secs: f64) -> f64 {
    if secs > 0.0 {
        points as f64 / secs
    } else {
        0.0
    }
}

/// Runs a pre-materialized event stream. Events are routed with
/// [`partition`]; each worker sees its events in their original relative
/// order.
pub fn run_events(
    events: Vec<KeyedEvent>,
    num_workers: usize,
    config: &DecomposerConfig,
    options: RunOptions,
) -> Result<BenchOutcome> {
    if num_workers == 0 {
        return Err(invalid("at least one worker is required"));
    }
    config.validate()?;
    let mut keys: Vec<Vec<KeyState>> = (0..num_workers).map(|_| Vec::new()).collect();
    let mut streams: Vec<Vec<(usize, u64, f64)>> = (0..num_workers).map(|_| Vec::new()).collect();
    let mut slots: HashMap<String, (usize, usize)> = HashMap::new();
    for event in events {
        let (worker, slot) = match slots.get(&event.key) {
            Some(&ws) => ws,
            None => {
                let worker = partition(&event.key, num_workers);
                let slot = keys[worker].len();
                keys[worker].push(KeyState::new(event.key.clone(), config, options.retain_outputs)?);
                slots.insert(event.key, (worker, slot));
                (worker, slot)
            }
        };
        streams[worker].push((slot, event.seq, event.value));
    }
    let per_worker = keys
        .into_iter()
        .zip(streams)
        .map(|(k, s)| (k, WorkerInput::Events(s)))
        .collect();
    execute(per_worker, options.max_duration)
}

/// Runs a generated benchmark described by `spec`.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchOutcome> {
    spec.validate()?;
    let config = spec.decomposer_config()?;
    let options = RunOptions {
        retain_outputs: spec.retain_outputs,
        max_duration: spec.max_duration_secs.map(Duration::from_secs_f64),
    };
    let mut keys: Vec<Vec<KeyState>> = (0..spec.workers).map(|_| Vec::new()).collect();
    let mut generators: Vec<Vec<SynthStream>> = (0..spec.workers).map(|_| Vec::new()).collect();
    for index in 0..spec.keys {
        let name = BenchmarkSpec::key_name(index);
        let worker = partition(&name, spec.workers);
        keys[worker].push(KeyState::new(name, &config, options.retain_outputs)?);
        generators[worker].push(SynthStream::new(spec.key_synth(index))?);
    }
    let per_worker = keys
        .into_iter()
        .zip(generators)
        .enumerate()
        .map(|(worker, (keys, generators))| {
            let input = match spec.mode {
                SourceMode::Streamed => WorkerInput::Streamed {
                    generators,
                    interleave: spec.interleave,
                    worker,
                },
                // Same iterator as streamed mode, drained before timing.
                SourceMode::PreGenerated => {
                    let n = generators.len();
                    let rng = match spec.interleave {
                        Interleave::RoundRobin => None,
                        Interleave::Random { seed } => {
                            Some(SplitMix64::seed_from_u64(seed.wrapping_add(worker as u64)))
                        }
                    };
                    WorkerInput::Events(
                        StreamedEvents {
                            generators,
                            seqs: vec![0; n],
                            active: (0..n).collect(),
                            cursor: 0,
                            rng,
                        }
                        .collect(),
                    )
                }
            };
            (keys, input)
        })
        .collect();
    execute(per_worker, options.max_duration)
}

/// The events `run_benchmark` feeds for `spec`, per key in seq order.
pub fn benchmark_series(spec: &BenchmarkSpec) -> Result<Vec<(String, Vec<f64>)>> {
    (0..spec.keys)
        .map(|index| {
            let values = SynthStream::new(spec.key_synth(index))?.map(|p| p.value).collect();
            Ok((BenchmarkSpec::key_name(index), values))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_worker_maps_to_zero() {
        for key in ["a", "series-000001", "", "🙂"] {
            assert_eq!(partition(key, 1), 0);
        }
    }

    #[test]
    fn partition_is_stable_and_balanced() {
        let mut rng = SplitMix64::seed_from_u64(99);
        let keys: Vec<String> = (0..10_000).map(|_| format!("{:x}", rng.next_u64())).collect();
        let mut counts = [0usize; 4];
        for k in &keys {
            let w = partition(k, 4);
            assert_eq!(w, partition(k, 4));
            counts[w] += 1;
        }
        for c in counts {
            assert!((1500..=3500).contains(&c), "unbalanced: {counts:?}");
        }
        // Structured names are balanced too.
        let mut counts = [0usize; 4];
        for i in 0..10_000 {
            counts[partition(&BenchmarkSpec::key_name(i), 4)] += 1;
        }
        for c in counts {
            assert!((1500..=3500).contains(&c), "unbalanced: {counts:?}");
        }
    }

    #[test]
    fn partition_reference_values() {
        // FNV-1a("a") = 0xaf63dc4c8601ec8c; high word of h * 4 is h >> 62.
        let mut hasher = FnvHasher::default();
        hasher.write(b"a");
        assert_eq!(hasher.finish(), 0xaf63dc4c8601ec8c);
        assert_eq!(partition("a", 4), (fmix64(0xaf63dc4c8601ec8c) >> 62) as usize);
        assert_eq!(fmix64(0), 0);
    }

    #[test]
    fn short_suffix_keys_spread_over_workers() {
        let mut counts = [0usize; 4];
        for i in 0..100 {
            counts[partition(&BenchmarkSpec::key_name(i), 4)] += 1;
        }
        assert!(counts.iter().all(|&c| c >= 15), "{counts:?}");
    }

    #[test]
    fn out_of_order_events_are_reported() {
        let config = DecomposerConfig::new(vec![2]).unwrap();
        let events = vec![
            KeyedEvent {
                key: "x".into(),
                seq: 1,
                value: 1.0,
            },
            KeyedEvent {
                key: "y".into(),
                seq: 1,
                value: 1.0,
            },
            KeyedEvent {
                key: "x".into(),
                seq: 3,
                value: 1.0,
            },
        ];
        let err = run_events(events, 2, &config, RunOptions::default()).unwrap_err();
        assert_eq!(
            err,
            Error::OutOfOrder {
                key: "x".into(),
                expected: 2,
                got: 3
            }
        );
    }

    #[test]
    fn spec_parses_with_defaults() {
        let spec: BenchmarkSpec =
            serde_json::from_str(r#"{"keys": 3, "points_per_key": 50, "periods": [5], "mode": "streamed"}"#).unwrap();
        assert_eq!(spec.gamma, 0.7);
        assert_eq!(spec.workers, 1);
        assert_eq!(spec.mode, SourceMode::Streamed);
        assert_eq!(spec.interleave, Interleave::RoundRobin);
        let spec: BenchmarkSpec = serde_json::from_str(
            r#"{"keys": 3, "points_per_key": 50, "periods": [5], "interleave": {"kind": "random", "seed": 4}}"#,
        )
        .unwrap();
        assert_eq!(spec.interleave, Interleave::Random { seed: 4 });
    }

    #[test]
    fn report_accounting() {
        let spec = BenchmarkSpec {
            keys: 10,
            points_per_key: 100,
            periods: vec![4, 6],
            gamma: 0.7,
            workers: 3,
            mode: SourceMode::PreGenerated,
            seed: 5,
            interleave: Interleave::RoundRobin,
            max_duration_secs: None,
            retain_outputs: false,
        };
        let out = run_benchmark(&spec).unwrap();
        let r = &out.report;
        assert_eq!(r.total_points, 1000);
        assert_eq!(r.total_keys, 10);
        assert_eq!(r.workers.iter().map(|w| w.keys).sum::<usize>(), 10);
        assert_eq!(r.workers.iter().map(|w| w.points).sum::<u64>(), 1000);
        let per_key = spec.decomposer_config().unwrap().state_len();
        assert_eq!(r.state_bytes_total, 10 * per_key * 8);
        assert!((r.aggregate_points_per_sec * r.elapsed_secs - 1000.0).abs() < 1e-6 * 1000.0);
        let text = r.to_string();
        assert!(text.contains("total"));
    }
}
