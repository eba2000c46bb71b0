//! Tri-cube trend filters and the exponential-smoothing seasonality filter.
//!
//! Everything here is a pure function over its inputs. The one-sided
//! [`KernelVector`] is what the online update runs on every point; the
//! two-sided [`SymmetricKernel`] is only used on the warm-up batch.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tri-cube weight `(1 - u^3)^3` on `[0, 1)`, zero elsewhere.
pub fn tricube_weight(u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(invalid(format!("tri-cube argument must be finite, got {u}")));
    }
    Ok(tricube(u))
}

#[inline]
fn tricube(u: f64) -> f64 {
    if (0.0..1.0).contains(&u) {
        let c = 1.0 - u * u * u;
        c * c * c
    } else {
        0.0
    }
}

/// Precomputed one-sided tri-cube weights over a window of `window` points,
/// ordered oldest to newest. The newest point always carries weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelVector {
    window: usize,
    weights: Vec<f64>,
    l1_norm: f64,
}

impl KernelVector {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(invalid("kernel window must be at least 1"));
        }
        let lambda = window as f64;
        let weights: Vec<f64> = (1..=window).map(|k| tricube((window - k) as f64 / lambda)).collect();
        let l1_norm = weights.iter().fold(0.0, |acc, w| acc + w);
        Ok(Self {
            window,
            weights,
            l1_norm,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// Non-symmetric trend filter: weighted average of `window`, which must
    /// hold exactly `self.window()` values ordered oldest to newest.
    pub fn apply(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.window {
            return Err(invalid(format!(
                "window holds {} values, kernel expects {}",
                window.len(),
                self.window
            )));
        }
        Ok(self.apply_split(window, &[]))
    }

    /// Same as [`apply`](Self::apply) for a window stored as two contiguous
    /// runs (`older` then `newer`), as handed out by a ring buffer.
    /// The caller guarantees `older.len() + newer.len() == self.window()`.
    #[inline]
    pub(crate) fn apply_split(&self, older: &[f64], newer: &[f64]) -> f64 {
        debug_assert_eq!(older.len() + newer.len(), self.window);
        let (w_old, w_new) = self.weights.split_at(older.len());
        let mut acc = 0.0;
        for (w, x) in w_old.iter().zip(older) {
            acc += w * x;
        }
        for (w, x) in w_new.iter().zip(newer) {
            acc += w * x;
        }
        acc / self.l1_norm
    }
}

/// Two-sided tri-cube weights for offsets `-h..=h`, where the weight at
/// offset `j` is `W(|j| / (h + 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricKernel {
    half_width: usize,
    weights: Vec<f64>,
}

impl SymmetricKernel {
    pub fn with_half_width(half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(invalid("symmetric kernel half-width must be at least 1"));
        }
        let h = half_width as i64;
        let denom = (half_width + 1) as f64;
        let weights = (-h..=h).map(|j| tricube(j.unsigned_abs() as f64 / denom)).collect();
        Ok(Self { half_width, weights })
    }

    /// Kernel for a full window of `window` points, i.e. half-width
    /// `window / 2` (rounded down).
    pub fn for_window(window: usize) -> Result<Self> {
        Self::with_half_width(window / 2)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Weights for offsets `-h..=h`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at signed offset `j`, zero outside `-h..=h`.
    pub fn weight(&self, offset: i64) -> f64 {
        let h = self.half_width as i64;
        if offset.abs() > h {
            0.0
        } else {
            self.weights[(offset + h) as usize]
        }
    }

    /// Symmetric trend at `index`. Offsets that fall outside the series are
    /// dropped and the average renormalized over the surviving weights.
    pub fn trend_at(&self, series: &[f64], index: usize) -> Result<f64> {
        if series.is_empty() {
            return Err(invalid("symmetric trend of an empty series"));
        }
        if index >= series.len() {
            return Err(invalid(format!(
                "index {index} out of range for series of length {}",
                series.len()
            )));
        }
        Ok(self.trend_unchecked(series, index))
    }

    /// Symmetric trend at every index of `series`.
    pub fn smooth(&self, series: &[f64]) -> Result<Vec<f64>> {
        if series.is_empty() {
            return Err(invalid("symmetric trend of an empty series"));
        }
        Ok((0..series.len()).map(|t| self.trend_unchecked(series, t)).collect())
    }

    fn trend_unchecked(&self, series: &[f64], index: usize) -> f64 {
        let h = self.half_width;
        let lo = index.saturating_sub(h);
        let hi = (index + h).min(series.len() - 1);
        let mut num = 0.0;
        let mut den = 0.0;
        for (&w, &x) in self.weights[lo + h - index..].iter().zip(&series[lo..=hi]) {
            num += w * x;
            den += w;
        }
        num / den
    }
}

/// Free-function form of [`KernelVector::apply`].
pub fn trend_nonsym(kernel: &KernelVector, window: &[f64]) -> Result<f64> {
    kernel.apply(window)
}

/// Free-function form of [`SymmetricKernel::trend_at`].
pub fn trend_sym(kernel: &SymmetricKernel, series: &[f64], index: usize) -> Result<f64> {
    kernel.trend_at(series, index)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("smoothing factor must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn smooth_step(prev: f64, observation: f64, gamma: f64) -> f64 {
    gamma * observation + (1.0 - gamma) * prev
}

/// One exponential-smoothing step: `gamma * observation + (1 - gamma) * prev`.
pub fn seasonal_smooth_step(prev: f64, observation: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !prev.is_finite() || !observation.is_finite() {
        return Err(invalid("seasonal smoothing inputs must be finite"));
    }
    Ok(smooth_step(prev, observation, gamma))
}

/// Exponentially smooths each cyclic subseries (indices congruent mod
/// `period`) of `detrended`, seeding each with its first element, and
/// returns the smoothed values in original order.
pub fn smooth_cyclic_subseries(detrended: &[f64], period: usize, gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if period < 2 {
        return Err(invalid(format!("period must be at least 2, got {period}")));
    }
    if detrended.len() < period {
        return Err(invalid(format!(
            "series of length {} is shorter than period {period}",
            detrended.len()
        )));
    }
    let mut out = Vec::with_capacity(detrended.len());
    for (t, &d) in detrended.iter().enumerate() {
        let c = if t < period {
            d
        } else {
            smooth_step(out[t - period], d, gamma)
        };
        out.push(c);
    }
    Ok(out)
}

/// Last value of each phase `0..period` in a series indexed from phase 0.
pub(crate) fn last_per_phase(series: &[f64], period: usize) -> Vec<f64> {
    let n = series.len();
    (0..period)
        .map(|r| series[r + ((n - 1 - r) / period) * period])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tricube_reference_points() {
        assert_eq!(tricube_weight(0.0).unwrap(), 1.0);
        assert_eq!(tricube_weight(0.5).unwrap(), 0.669921875);
        assert_eq!(tricube_weight(1.2).unwrap(), 0.0);
        assert_eq!(tricube_weight(1.0).unwrap(), 0.0);
        assert_eq!(tricube_weight(-0.3).unwrap(), 0.0);
        assert!(tricube_weight(f64::NAN).is_err());
        assert!(tricube_weight(f64::INFINITY).is_err());
    }

    #[test]
    fn kernel_small_windows() {
        let k1 = KernelVector::new(1).unwrap();
        assert_eq!(k1.weights(), &[1.0]);
        assert_eq!(k1.l1_norm(), 1.0);

        let k2 = KernelVector::new(2).unwrap();
        assert_eq!(k2.weights(), &[0.669921875, 1.0]);
        assert_eq!(k2.l1_norm(), 1.669921875);

        assert!(KernelVector::new(0).is_err());
    }

    #[test]
    fn kernel_window_four_matches_scalar_evaluation() {
        // W(3/4), W(1/2), W(1/4), W(0) evaluated by hand in exact binary:
        // 1 - 27/64 = 37/64 -> (37/64)^3, and so on.
        let expected = [
            (37.0f64 / 64.0).powi(3),
            (7.0f64 / 8.0).powi(3),
            (63.0f64 / 64.0).powi(3),
            1.0,
        ];
        assert_eq!(expected[0], 0.193225860595703125);
        assert_eq!(expected[2], 0.953853607177734375);
        let k = KernelVector::new(4).unwrap();
        assert_eq!(k.weights(), &expected);
        assert_eq!(k.l1_norm(), 2.8170013427734375);
    }

    #[test]
    fn nonsym_examples() {
        let k = KernelVector::new(4).unwrap();
        assert_eq!(trend_nonsym(&k, &[5.0; 4]).unwrap(), 5.0);
        let y = trend_nonsym(&k, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(y, 1.0 / 2.8170013427734375, max_relative = 1e-15);
        assert!(trend_nonsym(&k, &[1.0; 3]).is_err());
    }

    #[test]
    fn split_application_matches_contiguous() {
        let k = KernelVector::new(6).unwrap();
        let xs = [1.0, -2.0, 3.5, 0.25, 8.0, -1.0];
        let whole = k.apply(&xs).unwrap();
        for cut in 0..=6 {
            let (a, b) = xs.split_at(cut);
            assert_eq!(k.apply_split(a, b), whole);
        }
    }

    #[test]
    fn symmetric_kernel_shape() {
        let k = SymmetricKernel::for_window(7).unwrap();
        assert_eq!(k.half_width(), 3);
        assert_eq!(k.weights().len(), 7);
        assert_eq!(k.weight(0), 1.0);
        for j in 1..=3 {
            assert_eq!(k.weight(j), k.weight(-j));
            assert_eq!(k.weight(j), tricube(j as f64 / 4.0));
            assert!(k.weight(j) > 0.0);
        }
        assert_eq!(k.weight(4), 0.0);
        assert!(SymmetricKernel::for_window(1).is_err());
    }

    #[test]
    fn sym_examples() {
        let k = SymmetricKernel::with_half_width(1).unwrap();
        let v = trend_sym(&k, &[0.0, 0.0, 4.0], 2).unwrap();
        assert_relative_eq!(v, 4.0 / 1.669921875, max_relative = 1e-15);

        let k = SymmetricKernel::with_half_width(3).unwrap();
        let c = [2.5; 10];
        for t in 0..10 {
            assert_eq!(trend_sym(&k, &c, t).unwrap(), 2.5);
        }
        let lin: Vec<f64> = (0..10).map(f64::from).collect();
        for t in 3..7 {
            assert_relative_eq!(trend_sym(&k, &lin, t).unwrap(), t as f64, max_relative = 1e-14);
        }
        assert!(trend_sym(&k, &[], 0).is_err());
        assert!(trend_sym(&k, &c, 10).is_err());
    }

    #[test]
    fn smoothing_step_examples() {
        assert_eq!(seasonal_smooth_step(10.0, 10.0, 0.7).unwrap(), 10.0);
        assert_eq!(seasonal_smooth_step(0.0, 1.0, 0.7).unwrap(), 0.7);
        assert_relative_eq!(seasonal_smooth_step(2.0, 4.0, 0.7).unwrap(), 3.4, max_relative = 1e-15);
        assert!(seasonal_smooth_step(0.0, 1.0, 1.5).is_err());
        assert!(seasonal_smooth_step(0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn cyclic_subseries_examples() {
        let s = smooth_cyclic_subseries(&[1.0, 2.0, 1.0, 2.0, 1.0, 2.0], 2, 0.7).unwrap();
        assert_eq!(s, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let s = smooth_cyclic_subseries(&[0.0, 0.0, 2.0, 0.0], 2, 0.7).unwrap();
        assert_eq!(s, vec![0.0, 0.0, 1.4, 0.0]);
        assert!(smooth_cyclic_subseries(&[1.0, 2.0, 3.0], 1, 0.7).is_err());
        assert!(smooth_cyclic_subseries(&[1.0, 2.0, 3.0], 4, 0.7).is_err());
    }

    #[test]
    fn cyclic_subseries_matches_explicit_lists() {
        let xs = [0.3, -1.2, 4.4, 2.0, 0.0, -0.7, 3.3, 1.1, -2.5, 0.9, 1.6];
        let gamma = 0.7;
        let period = 3;
        let mut expected = vec![f64::NAN; xs.len()];
        for phase in 0..period {
            let members: Vec<usize> = (phase..xs.len()).step_by(period).collect();
            let mut c = xs[members[0]];
            expected[members[0]] = c;
            for &i in &members[1..] {
                c = gamma * xs[i] + (1.0 - gamma) * c;
                expected[i] = c;
            }
        }
        let got = smooth_cyclic_subseries(&xs, period, gamma).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert_relative_eq!(*g, *e, max_relative = 1e-12);
        }
        assert_eq!(last_per_phase(&got, 3), vec![got[9], got[10], got[8]]);
    }

    proptest! {
        #[test]
        fn kernel_invariants(lambda in 1usize..400) {
            let k = KernelVector::new(lambda).unwrap();
            let w = k.weights();
            prop_assert_eq!(w.len(), lambda);
            prop_assert_eq!(w[lambda - 1], 1.0);
            prop_assert!(w.iter().all(|&x| x > 0.0 && x <= 1.0));
            prop_assert!(w.windows(2).all(|p| p[0] < p[1]));
            let sum: f64 = w.iter().sum();
            prop_assert!((k.l1_norm() - sum).abs() <= 1e-15 * sum);
        }

        #[test]
        fn nonsym_is_linear_and_preserves_constants(
            xs in proptest::collection::vec(-100.0f64..100.0, 9),
            ys in proptest::collection::vec(-100.0f64..100.0, 9),
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
            c in -1e3f64..1e3,
        ) {
            let k = KernelVector::new(9).unwrap();
            let mix: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let lhs = k.apply(&mix).unwrap();
            let rhs = a * k.apply(&xs).unwrap() + b * k.apply(&ys).unwrap();
            let scale = xs.iter().chain(&ys).fold(1.0f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
            let konst = k.apply(&[c; 9]).unwrap();
            prop_assert!((konst - c).abs() <= 1e-12 * c.abs().max(1e-300));
        }

        #[test]
        fn sym_preserves_constants_everywhere(c in -1e3f64..1e3, h in 1usize..6, n in 1usize..20) {
            let k = SymmetricKernel::with_half_width(h).unwrap();
            let s = vec![c; n];
            for t in 0..n {
                let v = k.trend_at(&s, t).unwrap();
                prop_assert!((v - c).abs() <= 1e-12 * c.abs().max(1e-300));
            }
        }

        #[test]
        fn periodic_series_is_a_fixed_point(
            pattern in proptest::collection::vec(-10.0f64..10.0, 2..8),
            reps in 1usize..6,
            gamma in 0.0f64..=1.0,
        ) {
            let period = pattern.len();
            let series: Vec<f64> = pattern.iter().cycle().take(period * reps).copied().collect();
            let out = smooth_cyclic_subseries(&series, period, gamma).unwrap();
            for (o, s) in out.iter().zip(&series) {
                prop_assert!((o - s).abs() <= 1e-12 * s.abs().max(1.0));
            }
        }

        #[test]
        fn phases_are_isolated(
            xs in proptest::collection::vec(-10.0f64..10.0, 12..30),
            period in 2usize..6,
            probe in 0usize..12,
            bump in -5.0f64..5.0,
        ) {
            let base = smooth_cyclic_subseries(&xs, period, 0.7).unwrap();
            let mut perturbed = xs.clone();
            for (t, v) in perturbed.iter_mut().enumerate() {
                if t % period != probe % period {
                    *v += bump;
                }
            }
            let out = smooth_cyclic_subseries(&perturbed, period, 0.7).unwrap();
            prop_assert_eq!(out[probe].to_bits(), base[probe].to_bits());
        }
    }
}
