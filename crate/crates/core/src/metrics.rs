//! Decomposition quality metrics.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::decomposer::DecomposedPoint;
use crate::error::{invalid, Error, Result};

/// Mean absolute scaled error: mean `|e_j|` divided by the mean absolute
/// one-step difference of `series`.
pub fn mase(errors: &[f64], series: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(invalid("MASE of an empty error list"));
    }
    if series.len() < 2 {
        return Err(invalid("MASE scale needs a series of at least 2 points"));
    }
    let scale = series.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (series.len() - 1) as f64;
    if scale == 0.0 {
        return Err(Error::Degenerate("series is constant, MASE scale is zero".into()));
    }
    let mae = errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64;
    Ok(mae / scale)
}

/// Sample standard deviation (divisor `n - 1`) of the first differences of
/// `trend`. Lower is smoother.
pub fn trend_smoothness(trend: &[f64]) -> Result<f64> {
    if trend.len() < 3 {
        return Err(invalid("trend smoothness needs at least 3 points"));
    }
    let diffs: Vec<f64> = trend.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let ss = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>();
    Ok((ss / (n - 1.0)).sqrt())
}

/// Known components of a series, aligned point-for-point with a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub periods: Vec<usize>,
    pub trend: Vec<f64>,
    /// One series per period.
    pub seasonal: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalScore {
    pub period: usize,
    pub mase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mase_residual: f64,
    pub trend_smoothness: f64,
    pub mase_seasonal: Option<Vec<SeasonalScore>>,
    pub n_evaluated: usize,
}

impl EvalReport {
    /// Flat key/value form: `mase_residual`, `trend_smoothness`,
    /// `mase_seasonal_<period>` (when truth was supplied), `n_evaluated`.
    pub fn to_flat_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("mase_residual".into(), Value::from(self.mase_residual));
        map.insert("trend_smoothness".into(), Value::from(self.trend_smoothness));
        for score in self.mase_seasonal.iter().flatten() {
            map.insert(format!("mase_seasonal_{}", score.period), Value::from(score.mase));
        }
        map.insert("n_evaluated".into(), Value::from(self.n_evaluated));
        Value::Object(map)
    }
}

/// Scores every point of `decomposition`. `truth`, if given, must have one
/// entry per point.
pub fn evaluate(decomposition: &[DecomposedPoint], truth: Option<&GroundTruth>) -> Result<EvalReport> {
    if decomposition.is_empty() {
        return Err(invalid("cannot evaluate an empty decomposition"));
    }
    let values: Vec<f64> = decomposition.iter().map(|p| p.value).collect();
    let residuals: Vec<f64> = decomposition.iter().map(|p| p.residual).collect();
    let trend: Vec<f64> = decomposition.iter().map(|p| p.trend).collect();

    let mase_seasonal = match truth {
        None => None,
        Some(truth) => {
            let n = decomposition.len();
            if truth.trend.len() != n || truth.seasonal.iter().any(|s| s.len() != n) {
                return Err(invalid(format!(
                    "ground truth length does not match {n} decomposed points"
                )));
            }
            if truth.seasonal.len() != truth.periods.len() {
                return Err(invalid("ground truth needs one seasonal series per period"));
            }
            let k = truth.periods.len();
            if let Some(p) = decomposition.iter().find(|p| p.seasonal.len() != k) {
                return Err(invalid(format!(
                    "point {} has {} seasonal components, truth has {k}",
                    p.index,
                    p.seasonal.len()
                )));
            }
            let scores = (0..k)
                .map(|c| {
                    let errors: Vec<f64> = decomposition
                        .iter()
                        .zip(&truth.seasonal[c])
                        .map(|(p, s)| p.seasonal[c] - s)
                        .collect();
                    mase(&errors, &values).map(|mase| SeasonalScore {
                        period: truth.periods[c],
                        mase,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(scores)
        }
    };

    Ok(EvalReport {
        mase_residual: mase(&residuals, &values)?,
        trend_smoothness: trend_smoothness(&trend)?,
        mase_seasonal,
        n_evaluated: decomposition.len(),
    })
}

/// [`evaluate`] restricted to points with index greater than `warmup_len`.
/// `truth`, if given, is aligned with the full `decomposition` slice.
pub fn evaluate_post_warmup(
    decomposition: &[DecomposedPoint],
    truth: Option<&GroundTruth>,
    warmup_len: usize,
) -> Result<EvalReport> {
    let keep: Vec<usize> = (0..decomposition.len())
        .filter(|&j| decomposition[j].index > warmup_len as u64)
        .collect();
    let points: Vec<DecomposedPoint> = keep.iter().map(|&j| decomposition[j].clone()).collect();
    let truth = match truth {
        None => None,
        Some(t) => {
            if t.trend.len() != decomposition.len() || t.seasonal.iter().any(|s| s.len() != decomposition.len()) {
                return Err(invalid("ground truth length does not match the decomposition"));
            }
            Some(GroundTruth {
                periods: t.periods.clone(),
                trend: keep.iter().map(|&j| t.trend[j]).collect(),
                seasonal: t
                    .seasonal
                    .iter()
                    .map(|s| keep.iter().map(|&j| s[j]).collect())
                    .collect(),
            })
        }
    };
    evaluate(&points, truth.as_ref())
}
