//! `onlinestl eval`: score a decomposition CSV, optionally against truth.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use onlinestl::metrics::{evaluate, evaluate_post_warmup};
use onlinestl::{DecomposedPoint, GroundTruth};

use crate::error::{CliError, CliResult};
use crate::input;
use crate::output::open_output;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Decomposition CSV as written by `decompose`.
    pub decomposition: PathBuf,
    /// CSV with `true_trend` and `true_seasonal_<m>` columns, one row per input point.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also score the warm-up rows (index <= 4 x largest period).
    #[arg(long)]
    pub include_warmup: bool,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

struct Table {
    name: String,
    headers: csv::StringRecord,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input::open(Some(path))?);
        let headers = reader.headers()?.clone();
        let rows = reader.records().collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            name: path.display().to_string(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", self.name)))
    }

    fn real(&self, row: usize, col: usize) -> CliResult<f64> {
        let raw = &self.rows[row][col];
        raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
            CliError::Input(format!(
                "{}: line {}: column `{}` has non-numeric value `{raw}`",
                self.name,
                row + 2,
                &self.headers[col]
            ))
        })
    }
}

/// Periods in column order, from the `seasonal_<m>` headers.
fn seasonal_columns(table: &Table) -> CliResult<Vec<(usize, usize)>> {
    let mut cols = Vec::new();
    for (idx, h) in table.headers.iter().enumerate() {
        if let Some(suffix) = h.strip_prefix("seasonal_") {
            let m = suffix
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("{}: cannot read period from column `{h}`", table.name)))?;
            cols.push((m, idx));
        }
    }
    if cols.is_empty() {
        return Err(CliError::Input(format!(
            "{}: missing column `seasonal_<period>`",
            table.name
        )));
    }
    Ok(cols)
}

pub fn run(args: &EvalArgs) -> CliResult {
    let table = Table::read(&args.decomposition)?;
    let index_col = table.column("index")?;
    let value_col = table.column("value")?;
    let trend_col = table.column("trend")?;
    let residual_col = table.column("residual")?;
    let seasonal = seasonal_columns(&table)?;
    let periods: Vec<usize> = seasonal.iter().map(|&(m, _)| m).collect();

    let mut points = Vec::with_capacity(table.rows.len());
    for r in 0..table.rows.len() {
        let raw_index = &table.rows[r][index_col];
        let index = raw_index
            .parse::<u64>()
            .map_err(|_| CliError::Input(format!("{}: line {}: bad index `{raw_index}`", table.name, r + 2)))?;
        points.push(DecomposedPoint {
            index,
            value: table.real(r, value_col)?,
            trend: table.real(r, trend_col)?,
            seasonal: seasonal
                .iter()
                .map(|&(_, c)| table.real(r, c))
                .collect::<CliResult<_>>()?,
            residual: table.real(r, residual_col)?,
        });
    }

    let truth = match &args.truth {
        None => None,
        Some(path) => {
            let t = Table::read(path)?;
            let trend_col = t.column("true_trend")?;
            let cols = periods
                .iter()
                .map(|m| t.column(&format!("true_seasonal_{m}")))
                .collect::<CliResult<Vec<_>>>()?;
            let mut trend = Vec::with_capacity(points.len());
            let mut comps = vec![Vec::with_capacity(points.len()); periods.len()];
            for p in &points {
                // Truth rows are the input points in order; index is 1-based.
                let row = usize::try_from(p.index)
                    .ok()
                    .and_then(|i| i.checked_sub(1))
                    .filter(|&i| i < t.rows.len())
                    .ok_or_else(|| CliError::Input(format!("{}: no truth row for index {}", t.name, p.index)))?;
                trend.push(t.real(row, trend_col)?);
                for (dst, &c) in comps.iter_mut().zip(&cols) {
                    dst.push(t.real(row, c)?);
                }
            }
            Some(GroundTruth {
                periods: periods.clone(),
                trend,
                seasonal: comps,
            })
        }
    };

    let warmup = 4 * periods.iter().copied().max().unwrap_or(0);
    let report = if args.include_warmup {
        evaluate(&points, truth.as_ref())
    } else {
        evaluate_post_warmup(&points, truth.as_ref(), warmup)
    }
    .map_err(|e| CliError::Input(e.to_string()))?;

    let mut out = open_output(args.output.as_deref())?;
    let text = serde_json::to_string_pretty(&report.to_flat_json()).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}
