//! Per-series online seasonal-trend decomposition.
//!
//! A [`Decomposer`] buffers the first `4m` points of a series (`m` being the
//! longest period), runs a batch initialization over that window, and from
//! then on turns every arriving value into a [`DecomposedPoint`] in
//! `O(k * m)` time using a fixed amount of memory.
//!
//! Memory held per series, in reals, is
//! `4m * (k + 1) + m + 2 * sum(m_p)`:
//!
//! * the latest `4m` raw values,
//! * for each period, the latest `4m` values of its initial seasonal series,
//! * two running smoothed-seasonality arrays of length `m_p` per period,
//! * the latest `m` fully deseasonalized values.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filters::{last_per_phase, smooth_cyclic_subseries, smooth_step, KernelVector, SymmetricKernel};
use crate::ring::RingBuffer;

/// Length of the raw-value window, in multiples of the longest period.
pub const WINDOW_MULTIPLIER: usize = 4;

/// Smoothing factor used when none is given.
pub const DEFAULT_GAMMA: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposerConfig {
    /// Seasonal periods, strictly ascending, each at least 2.
    pub periods: Vec<usize>,
    /// Exponential smoothing factor for seasonal estimates, in `[0, 1]`.
    pub gamma: f64,
    /// Whether initialization emits retroactive points for the warm-up window.
    pub emit_warmup: bool,
}

impl DecomposerConfig {
    pub fn new(periods: impl Into<Vec<usize>>) -> Result<Self> {
        let config = Self {
            periods: periods.into(),
            gamma: DEFAULT_GAMMA,
            emit_warmup: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_emit_warmup(mut self, emit: bool) -> Self {
        self.emit_warmup = emit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods.is_empty() {
            return Err(Error::Config("at least one period is required".into()));
        }
        if let Some(&p) = self.periods.iter().find(|&&p| p < 2) {
            return Err(Error::Config(format!("periods must be at least 2, got {p}")));
        }
        if self.periods.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "periods must be strictly ascending, got {:?}",
                self.periods
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    /// Longest period `m`.
    pub fn max_period(&self) -> usize {
        *self.periods.last().expect("validated config has periods")
    }

    /// Number of points buffered before initialization (`4m`).
    pub fn warmup_len(&self) -> usize {
        WINDOW_MULTIPLIER * self.max_period()
    }

    /// Reals held by an initialized decomposer with this configuration.
    pub fn state_len(&self) -> usize {
        let m = self.max_period();
        let k = self.periods.len();
        WINDOW_MULTIPLIER * m * (k + 1) + m + 2 * self.periods.iter().sum::<usize>()
    }
}

/// One decomposed observation. `residual` is defined as
/// `value - trend - sum(seasonal)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedPoint {
    /// 1-based arrival index.
    pub index: u64,
    pub value: f64,
    pub trend: f64,
    /// One component per configured period, in period order.
    pub seasonal: Vec<f64>,
    pub residual: f64,
}

impl DecomposedPoint {
    pub fn seasonal_sum(&self) -> f64 {
        sum_components(&self.seasonal)
    }
}

#[inline]
fn sum_components(seasonal: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in seasonal {
        s += v;
    }
    s
}

/// Intermediate values of one update for a single period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodTrace {
    pub period: usize,
    /// Deseasonalized value entering this period's step.
    pub b_entry: f64,
    /// First one-sided trend estimate over the raw window.
    pub t1: f64,
    /// `b_entry - t1`.
    pub d1: f64,
    /// Phase slot `(i - 1) mod period`.
    pub phase: usize,
    /// Trend of the initial seasonal series.
    pub t4: f64,
    /// `b_entry - t1 - t4`.
    pub d5: f64,
}

/// Intermediate values of one update, for inspection and testing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateTrace {
    pub periods: Vec<PeriodTrace>,
    /// Fully deseasonalized value pushed into the final trend window.
    pub b: f64,
}

/// What a call to [`Decomposer::push`] produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Emitted {
    /// Still collecting warm-up points.
    Buffering,
    /// Initialization just ran. Holds the retroactive warm-up points when
    /// `emit_warmup` is set, otherwise empty.
    Initialized(Vec<DecomposedPoint>),
    Point(DecomposedPoint),
}

impl Emitted {
    pub fn into_points(self) -> Vec<DecomposedPoint> {
        match self {
            Emitted::Buffering => Vec::new(),
            Emitted::Initialized(points) => points,
            Emitted::Point(p) => vec![p],
        }
    }
}

#[derive(Debug, Clone)]
struct Kernels {
    /// One-sided kernels over `4 m_p`, per period.
    raw: Vec<KernelVector>,
    /// One-sided kernel over `3m` for the trend of the seasonal series.
    seasonal: KernelVector,
    /// One-sided kernel over `m` for the final trend.
    final_trend: KernelVector,
}

impl Kernels {
    fn build(config: &DecomposerConfig) -> Result<Self> {
        let m = config.max_period();
        Ok(Self {
            raw: config
                .periods
                .iter()
                .map(|&p| KernelVector::new(WINDOW_MULTIPLIER * p))
                .collect::<Result<_>>()?,
            seasonal: KernelVector::new(3 * m)?,
            final_trend: KernelVector::new(m)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OnlineState {
    /// Points ingested so far.
    index: u64,
    /// Latest `4m` raw values.
    raw: RingBuffer,
    /// Per period: latest `4m` values of the initial seasonal series.
    seasonal_series: Vec<RingBuffer>,
    /// Per period: running smoothed seasonality of the initially detrended series.
    initial_seasonality: Vec<Vec<f64>>,
    /// Per period: running smoothed seasonality after removing the trend of
    /// the seasonal series. Emitted seasonal components come from here.
    refined_seasonality: Vec<Vec<f64>>,
    /// Latest `m` fully deseasonalized values.
    deseasonalized: RingBuffer,
}

impl OnlineState {
    fn len(&self) -> usize {
        self.raw.capacity()
            + self.seasonal_series.iter().map(RingBuffer::capacity).sum::<usize>()
            + self.initial_seasonality.iter().map(Vec::len).sum::<usize>()
            + self.refined_seasonality.iter().map(Vec::len).sum::<usize>()
            + self.deseasonalized.capacity()
    }

    fn validate(&self, config: &DecomposerConfig) -> Result<()> {
        let m = config.max_period();
        let window = WINDOW_MULTIPLIER * m;
        let k = config.periods.len();
        self.raw.validate(window)?;
        self.deseasonalized.validate(m)?;
        if !self.raw.is_full() || !self.deseasonalized.is_full() {
            return Err(invalid("online state buffers must be full"));
        }
        if self.seasonal_series.len() != k || self.initial_seasonality.len() != k || self.refined_seasonality.len() != k
        {
            return Err(invalid(format!("expected per-period arrays for {k} periods")));
        }
        for (p, &mp) in config.periods.iter().enumerate() {
            self.seasonal_series[p].validate(window)?;
            if !self.seasonal_series[p].is_full()
                || self.initial_seasonality[p].len() != mp
                || self.refined_seasonality[p].len() != mp
            {
                return Err(invalid(format!("arrays for period {mp} have the wrong length")));
            }
        }
        if self.index < window as u64 {
            return Err(invalid("online state index precedes the end of warm-up"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Stage {
    WarmUp(Vec<f64>),
    Online(OnlineState),
}

/// Online decomposer for a single series.
#[derive(Debug, Clone)]
pub struct Decomposer {
    config: DecomposerConfig,
    kernels: Kernels,
    stage: Stage,
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"OSTL";
const SNAPSHOT_VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct SnapshotBody {
    config: DecomposerConfig,
    stage: Stage,
}

impl Decomposer {
    pub fn new(config: DecomposerConfig) -> Result<Self> {
        config.validate()?;
        let kernels = Kernels::build(&config)?;
        let stage = Stage::WarmUp(Vec::with_capacity(config.warmup_len()));
        Ok(Self { config, kernels, stage })
    }

    pub fn config(&self) -> &DecomposerConfig {
        &self.config
    }

    pub fn is_initialized(&self) -> bool {
        matches!(self.stage, Stage::Online(_))
    }

    /// Number of points ingested so far.
    pub fn index(&self) -> u64 {
        match &self.stage {
            Stage::WarmUp(buf) => buf.len() as u64,
            Stage::Online(s) => s.index,
        }
    }

    /// Reals currently held as algorithm state. Once initialized this is
    /// constant; during warm-up it is the number of buffered points.
    pub fn state_len(&self) -> usize {
        match &self.stage {
            Stage::WarmUp(buf) => buf.len(),
            Stage::Online(s) => s.len(),
        }
    }

    /// Multiply-accumulate operations performed by one online update.
    pub fn work_per_update(&self) -> usize {
        self.kernels.raw.iter().map(KernelVector::window).sum::<usize>()
            + self.config.periods.len() * self.kernels.seasonal.window()
            + self.kernels.final_trend.window()
    }

    /// Feeds one value, initializing automatically once `4m` values have
    /// been buffered.
    pub fn push(&mut self, value: f64) -> Result<Emitted> {
        check_finite(value)?;
        match &mut self.stage {
            Stage::WarmUp(buf) => {
                buf.push(value);
                if buf.len() < self.config.warmup_len() {
                    return Ok(Emitted::Buffering);
                }
                let points = std::mem::take(buf);
                let (state, emitted) = self.run_initialization(&points)?;
                self.stage = Stage::Online(state);
                Ok(Emitted::Initialized(emitted.unwrap_or_default()))
            }
            Stage::Online(_) => Ok(Emitted::Point(self.step(value, None))),
        }
    }

    /// Batch initialization over exactly `4m` points. Returns retroactive
    /// points for the window when `emit_warmup` is set.
    pub fn initialize(&mut self, first_points: &[f64]) -> Result<Option<Vec<DecomposedPoint>>> {
        match &self.stage {
            Stage::Online(_) => return Err(Error::State("decomposer is already initialized".into())),
            Stage::WarmUp(buf) if !buf.is_empty() => {
                return Err(Error::State(format!(
                    "{} points already buffered through push",
                    buf.len()
                )))
            }
            Stage::WarmUp(_) => {}
        }
        let expected = self.config.warmup_len();
        if first_points.len() != expected {
            return Err(invalid(format!(
                "initialization needs exactly {expected} points, got {}",
                first_points.len()
            )));
        }
        for &v in first_points {
            check_finite(v)?;
        }
        let (state, emitted) = self.run_initialization(first_points)?;
        self.stage = Stage::Online(state);
        Ok(emitted)
    }

    /// One online update, returning the decomposed point and the
    /// intermediate values of every period's step.
    pub fn update(&mut self, value: f64) -> Result<(DecomposedPoint, UpdateTrace)> {
        self.ensure_online()?;
        check_finite(value)?;
        let mut trace = UpdateTrace {
            periods: Vec::with_capacity(self.config.periods.len()),
            b: 0.0,
        };
        let point = self.step(value, Some(&mut trace));
        Ok((point, trace))
    }

    /// [`update`](Self::update) without collecting a trace.
    pub fn update_point(&mut self, value: f64) -> Result<DecomposedPoint> {
        self.ensure_online()?;
        check_finite(value)?;
        Ok(self.step(value, None))
    }

    /// Running refined seasonal estimates, one array of length `m_p` per
    /// period, indexed by phase `(i - 1) mod m_p`.
    pub fn seasonal_estimates(&self) -> Option<&[Vec<f64>]> {
        match &self.stage {
            Stage::Online(s) => Some(&s.refined_seasonality),
            Stage::WarmUp(_) => None,
        }
    }

    /// Running estimates of the initially detrended series, same layout as
    /// [`seasonal_estimates`](Self::seasonal_estimates).
    pub fn initial_seasonal_estimates(&self) -> Option<&[Vec<f64>]> {
        match &self.stage {
            Stage::Online(s) => Some(&s.initial_seasonality),
            Stage::WarmUp(_) => None,
        }
    }

    /// Latest `m` fully deseasonalized values, oldest first.
    pub fn deseasonalized_window(&self) -> Option<Vec<f64>> {
        match &self.stage {
            Stage::Online(s) => Some(s.deseasonalized.to_vec()),
            Stage::WarmUp(_) => None,
        }
    }

    /// Sizes of the stored arrays: `(raw, per-period seasonal series,
    /// per-period estimate arrays, deseasonalized)`.
    pub fn array_lengths(&self) -> Option<(usize, Vec<usize>, Vec<usize>, usize)> {
        match &self.stage {
            Stage::Online(s) => Some((
                s.raw.len(),
                s.seasonal_series.iter().map(RingBuffer::len).collect(),
                s.refined_seasonality.iter().map(Vec::len).collect(),
                s.deseasonalized.len(),
            )),
            Stage::WarmUp(_) => None,
        }
    }

    /// Serializes the full state: magic `OSTL`, a version byte, then a JSON
    /// body echoing the configuration alongside every array.
    pub fn snapshot(&self) -> Vec<u8> {
        let body = SnapshotBody {
            config: self.config.clone(),
            stage: self.stage.clone(),
        };
        let mut out = Vec::with_capacity(5 + 32 * self.config.state_len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.push(SNAPSHOT_VERSION);
        serde_json::to_writer(&mut out, &body).expect("in-memory serialization cannot fail");
        out
    }

    /// Rebuilds a decomposer from [`snapshot`](Self::snapshot) bytes. The
    /// snapshot's configuration must equal `config`.
    pub fn restore(bytes: &[u8], config: &DecomposerConfig) -> Result<Self> {
        let snap_err = |msg: String| Error::Snapshot(msg);
        if bytes.len() < 5 || &bytes[..4] != SNAPSHOT_MAGIC {
            return Err(snap_err("missing OSTL header".into()));
        }
        if bytes[4] != SNAPSHOT_VERSION {
            return Err(snap_err(format!(
                "unsupported format version {} (expected {SNAPSHOT_VERSION})",
                bytes[4]
            )));
        }
        let body: SnapshotBody =
            serde_json::from_slice(&bytes[5..]).map_err(|e| snap_err(format!("corrupt body: {e}")))?;
        if &body.config != config {
            return Err(snap_err(format!(
                "configuration mismatch: snapshot has {:?}, caller expects {:?}",
                body.config, config
            )));
        }
        config.validate().map_err(|e| snap_err(e.to_string()))?;
        match &body.stage {
            Stage::WarmUp(buf) => {
                if buf.len() >= config.warmup_len() || buf.iter().any(|v| !v.is_finite()) {
                    return Err(snap_err("warm-up buffer is inconsistent".into()));
                }
            }
            Stage::Online(state) => state.validate(config).map_err(|e| snap_err(e.to_string()))?,
        }
        let mut restored = Self::new(body.config)?;
        restored.stage = body.stage;
        Ok(restored)
    }

    fn ensure_online(&self) -> Result<()> {
        if self.is_initialized() {
            Ok(())
        } else {
            Err(Error::State(format!(
                "update before initialization ({} of {} warm-up points)",
                self.index(),
                self.config.warmup_len()
            )))
        }
    }

    fn run_initialization(&self, points: &[f64]) -> Result<(OnlineState, Option<Vec<DecomposedPoint>>)> {
        let config = &self.config;
        let m = config.max_period();
        let window = config.warmup_len();
        let gamma = config.gamma;
        debug_assert_eq!(points.len(), window);

        let mut working = points.to_vec();
        let mut seasonal_series = Vec::with_capacity(config.periods.len());
        let mut initial_seasonality = Vec::with_capacity(config.periods.len());
        let mut refined_seasonality = Vec::with_capacity(config.periods.len());
        let mut components = Vec::with_capacity(config.periods.len());

        for &period in &config.periods {
            // Initial detrend with a two-sided window of 2 m_p.
            let trend = SymmetricKernel::for_window(2 * period)?.smooth(&working)?;
            let detrended: Vec<f64> = working.iter().zip(&trend).map(|(x, t)| x - t).collect();

            let seasonal = smooth_cyclic_subseries(&detrended, period, gamma)?;
            initial_seasonality.push(last_per_phase(&seasonal, period));

            // Remove the trend of the seasonal series (window 3 m_p / 2).
            let seasonal_trend = SymmetricKernel::for_window(3 * period / 2)?.smooth(&seasonal)?;
            let refined: Vec<f64> = detrended.iter().zip(&seasonal_trend).map(|(d, t)| d - t).collect();
            let refined = smooth_cyclic_subseries(&refined, period, gamma)?;
            refined_seasonality.push(last_per_phase(&refined, period));

            for (w, s) in working.iter_mut().zip(&refined) {
                *w -= s;
            }
            seasonal_series.push(RingBuffer::from_values(window, &seasonal)?);
            components.push(refined);
        }

        let state = OnlineState {
            index: window as u64,
            raw: RingBuffer::from_values(window, points)?,
            seasonal_series,
            initial_seasonality,
            refined_seasonality,
            deseasonalized: RingBuffer::from_values(m, &working[window - m..])?,
        };

        let emitted = if config.emit_warmup {
            let trend = SymmetricKernel::for_window(m)?.smooth(&working)?;
            let k = config.periods.len();
            let points = (0..window)
                .map(|t| {
                    let seasonal: Vec<f64> = (0..k).map(|p| components[p][t]).collect();
                    let value = points[t];
                    let residual = value - trend[t] - sum_components(&seasonal);
                    DecomposedPoint {
                        index: t as u64 + 1,
                        value,
                        trend: trend[t],
                        seasonal,
                        residual,
                    }
                })
                .collect();
            Some(points)
        } else {
            None
        };
        Ok((state, emitted))
    }

    fn step(&mut self, value: f64, mut trace: Option<&mut UpdateTrace>) -> DecomposedPoint {
        let Stage::Online(state) = &mut self.stage else {
            unreachable!("step is only reached on an initialized decomposer")
        };
        let gamma = self.config.gamma;
        let seasonal_window = self.kernels.seasonal.window();

        state.index += 1;
        let i = state.index;
        state.raw.push(value);

        let k = self.config.periods.len();
        let mut seasonal = Vec::with_capacity(k);
        let mut b = value;
        for p in 0..k {
            let period = self.config.periods[p];
            let raw_kernel = &self.kernels.raw[p];
            let (older, newer) = state.raw.latest(raw_kernel.window());
            let t1 = raw_kernel.apply_split(older, newer);
            let d1 = b - t1;
            let phase = ((i - 1) % period as u64) as usize;

            let es = &mut state.initial_seasonality[p][phase];
            *es = smooth_step(*es, d1, gamma);
            let series = &mut state.seasonal_series[p];
            series.push(*es);
            let (older, newer) = series.latest(seasonal_window);
            let t4 = self.kernels.seasonal.apply_split(older, newer);

            let d5 = b - t1 - t4;
            let et = &mut state.refined_seasonality[p][phase];
            *et = smooth_step(*et, d5, gamma);
            if let Some(trace) = trace.as_deref_mut() {
                trace.periods.push(PeriodTrace {
                    period,
                    b_entry: b,
                    t1,
                    d1,
                    phase,
                    t4,
                    d5,
                });
            }
            b -= *et;
            seasonal.push(*et);
        }

        state.deseasonalized.push(b);
        let (older, newer) = state.deseasonalized.latest(self.kernels.final_trend.window());
        let trend = self.kernels.final_trend.apply_split(older, newer);
        if let Some(trace) = trace {
            trace.b = b;
        }
        let residual = value - trend - sum_components(&seasonal);
        DecomposedPoint {
            index: i,
            value,
            trend,
            seasonal,
            residual,
        }
    }
}

fn check_finite(value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("non-finite input value {value}")))
    }
}
