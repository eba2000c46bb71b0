//! Seeded synthetic series with known trend, seasonal and noise components.
//!
//! The generator is fully specified so other implementations can reproduce
//! the stream bit-for-bit:
//!
//! * Randomness comes from SplitMix64 seeded with `seed` (state := seed;
//!   each draw adds `0x9E3779B97F4A7C15` and applies the standard mixer).
//! * A uniform `u` in `[0, 1)` is `(next_u64 >> 11) * 2^-53`.
//! * Draw order: the `n_changepoints` breakpoint positions
//!   (`1 + floor(u * (n - 1))`, then sorted ascending), the initial slope, then
//!   for each breakpoint in order its new slope and its jump, then one
//!   Gaussian per point.
//! * Slopes and jumps are `lo + (hi - lo) * u` over their configured ranges.
//! * Gaussians use Box-Muller with the cosine branch only:
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)` from two consecutive uniforms.
//! * The trend starts at 0; at a breakpoint `b` the level jumps and the slope
//!   changes, and within a segment `trend[t] = level + slope * (t - start)`.
//! * Seasonal component `p` at 0-based row `t` is
//!   `amplitude_p * sin(2 pi t / m_p)`.
//! * `value = trend + seasonal_1 + ... + seasonal_k + noise`, summed in that order.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub periods: Vec<usize>,
    pub amplitudes: Vec<f64>,
    pub n_changepoints: usize,
    pub slope_range: (f64, f64),
    pub jump_range: (f64, f64),
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// 750 points with periods 25 and 50 and five abrupt trend changes.
    fn default() -> Self {
        Self {
            n: 750,
            periods: vec![25, 50],
            amplitudes: vec![2.0, 3.0],
            n_changepoints: 5,
            slope_range: (-0.02, 0.02),
            jump_range: (-2.0, 2.0),
            noise_sigma: 0.5,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("synthetic series needs at least one point"));
        }
        if self.periods.len() != self.amplitudes.len() {
            return Err(invalid(format!(
                "{} periods but {} amplitudes",
                self.periods.len(),
                self.amplitudes.len()
            )));
        }
        if self.periods.contains(&0) {
            return Err(invalid("periods must be positive"));
        }
        if self.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(invalid("amplitudes must be finite and non-negative"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(invalid(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        for (name, (lo, hi)) in [("slope", self.slope_range), ("jump", self.jump_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid(format!("{name} range [{lo}, {hi}] is not a finite interval")));
            }
        }
        Ok(())
    }
}

/// One generated row.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPoint {
    pub value: f64,
    pub trend: f64,
    pub seasonal: Vec<f64>,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyntheticSeries {
    pub values: Vec<f64>,
    pub true_trend: Vec<f64>,
    /// One series per configured period.
    pub true_seasonal: Vec<Vec<f64>>,
    pub true_noise: Vec<f64>,
}

struct Segment {
    start: usize,
    level: f64,
    slope: f64,
}

/// Point-at-a-time generator; [`generate`] collects it.
pub struct SynthStream {
    config: SynthConfig,
    rng: SplitMix64,
    segments: Vec<Segment>,
    segment: usize,
    t: usize,
}

fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn in_range(rng: &mut SplitMix64, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

fn gaussian(rng: &mut SplitMix64) -> f64 {
    let u1 = uniform(rng);
    let u2 = uniform(rng);
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

impl SynthStream {
    pub fn new(config: SynthConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SplitMix64::seed_from_u64(config.seed);
        let n = config.n;
        let mut breaks: Vec<usize> = (0..config.n_changepoints)
            .map(|_| 1 + (uniform(&mut rng) * (n - 1) as f64) as usize)
            .collect();
        breaks.sort_unstable();

        let mut segments = vec![Segment {
            start: 0,
            level: 0.0,
            slope: in_range(&mut rng, config.slope_range),
        }];
        for b in breaks {
            let slope = in_range(&mut rng, config.slope_range);
            let jump = in_range(&mut rng, config.jump_range);
            let prev = segments.last().expect("at least one segment");
            let level = prev.level + prev.slope * (b - prev.start) as f64 + jump;
            segments.push(Segment { start: b, level, slope });
        }
        Ok(Self {
            config,
            rng,
            segments,
            segment: 0,
            t: 0,
        })
    }
}

impl Iterator for SynthStream {
    type Item = SynthPoint;

    fn next(&mut self) -> Option<SynthPoint> {
        let t = self.t;
        if t >= self.config.n {
            return None;
        }
        self.t += 1;
        while self.segment + 1 < self.segments.len() && self.segments[self.segment + 1].start <= t {
            self.segment += 1;
        }
        let seg = &self.segments[self.segment];
        let trend = seg.level + seg.slope * (t - seg.start) as f64;
        let seasonal: Vec<f64> = self
            .config
            .periods
            .iter()
            .zip(&self.config.amplitudes)
            .map(|(&m, &a)| a * (2.0 * std::f64::consts::PI * t as f64 / m as f64).sin())
            .collect();
        let noise = if self.config.noise_sigma > 0.0 {
            self.config.noise_sigma * gaussian(&mut self.rng)
        } else {
            0.0
        };
        let mut value = trend;
        for s in &seasonal {
            value += s;
        }
        value += noise;
        Some(SynthPoint {
            value,
            trend,
            seasonal,
            noise,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.config.n - self.t;
        (left, Some(left))
    }
}

pub fn generate(config: &SynthConfig) -> Result<SyntheticSeries> {
    let k = config.periods.len();
    let stream = SynthStream::new(config.clone())?;
    let mut out = SyntheticSeries {
        values: Vec::with_capacity(config.n),
        true_trend: Vec::with_capacity(config.n),
        true_seasonal: vec![Vec::with_capacity(config.n); k],
        true_noise: Vec::with_capacity(config.n),
    };
    for p in stream {
        out.values.push(p.value);
        out.true_trend.push(p.trend);
        for (dst, s) in out.true_seasonal.iter_mut().zip(p.seasonal) {
            dst.push(s);
        }
        out.true_noise.push(p.noise);
    }
    Ok(out)
}
