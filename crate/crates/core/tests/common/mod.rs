#![allow(dead_code)]

pub mod oracle;

use onlinestl::{DecomposedPoint, Decomposer, DecomposerConfig};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }
}

/// Seasonal-looking random stream: two sinusoids, a drift and uniform noise.
pub fn wavy_stream(periods: &[usize], n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    let amps: Vec<f64> = periods.iter().map(|_| rng.range(0.5, 3.0)).collect();
    let drift = rng.range(-0.05, 0.05);
    (0..n)
        .map(|i| {
            let mut v = 10.0 + drift * i as f64 + rng.range(-0.5, 0.5);
            for (m, a) in periods.iter().zip(&amps) {
                v += a * (2.0 * std::f64::consts::PI * i as f64 / *m as f64).sin();
            }
            v
        })
        .collect()
}

pub fn run(config: &DecomposerConfig, xs: &[f64]) -> Vec<DecomposedPoint> {
    let mut d = Decomposer::new(config.clone()).unwrap();
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        out.extend(d.push(x).unwrap().into_points());
    }
    out
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Direct transcription: sum_j |e_j| / J over (1/(T-1)) sum_{t=2}^T |X_t - X_{t-1}|.
pub fn mase_direct(e: &[f64], x: &[f64]) -> f64 {
    let mut num = 0.0;
    for v in e {
        num += v.abs();
    }
    num /= e.len() as f64;
    let mut den = 0.0;
    for t in 1..x.len() {
        den += (x[t] - x[t - 1]).abs();
    }
    den /= (x.len() - 1) as f64;
    num / den
}

pub fn smoothness_direct(trend: &[f64]) -> f64 {
    let d: Vec<f64> = (1..trend.len()).map(|t| trend[t] - trend[t - 1]).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let mut ss = 0.0;
    for v in &d {
        ss += (v - mean).powi(2);
    }
    (ss / (d.len() - 1) as f64).sqrt()
}
