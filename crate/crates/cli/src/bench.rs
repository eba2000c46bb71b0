//! `onlinestl bench`: multi-key throughput runs on the keyed harness.

use std::hash::Hasher;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fnv::FnvHasher;
use onlinestl::harness::{run_benchmark, BenchOutcome, Interleave, SourceMode};
use onlinestl::{BenchmarkSpec, DEFAULT_GAMMA};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::format::fmt_f64;
use crate::output::open_output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PreGenerated,
    Streamed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterleaveArg {
    RoundRobin,
    Random,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON benchmark description; flags given alongside override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub keys: Option<usize>,
    #[arg(long)]
    pub points_per_key: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub periods: Option<Vec<usize>>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub interleave: Option<InterleaveArg>,
    /// Seed for `--interleave random`; defaults to the benchmark seed.
    #[arg(long)]
    pub interleave_seed: Option<u64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub max_duration: Option<f64>,
    /// Run once per listed period (single-period configs) and write
    /// `seasonality,throughput` CSV. Each key gets 4m extra points so every
    /// run has `--points-per-key` post-warm-up updates.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Where the sweep CSV goes; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl BenchArgs {
    pub fn build_spec(&self) -> CliResult<BenchmarkSpec> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read spec {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("invalid spec {}: {e}", path.display())))?
            }
            None => BenchmarkSpec {
                keys: 1,
                points_per_key: 10_000,
                periods: vec![24],
                gamma: DEFAULT_GAMMA,
                workers: 1,
                mode: SourceMode::PreGenerated,
                seed: 0,
                interleave: Interleave::RoundRobin,
                max_duration_secs: None,
                retain_outputs: false,
            },
        };
        if let Some(v) = self.keys {
            spec.keys = v;
        }
        if let Some(v) = self.points_per_key {
            spec.points_per_key = v;
        }
        if let Some(v) = &self.periods {
            spec.periods = v.clone();
        }
        if let Some(v) = self.gamma {
            spec.gamma = v;
        }
        if let Some(v) = self.workers {
            spec.workers = v;
        }
        if let Some(v) = self.mode {
            spec.mode = match v {
                ModeArg::PreGenerated => SourceMode::PreGenerated,
                ModeArg::Streamed => SourceMode::Streamed,
            };
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        match self.interleave {
            Some(InterleaveArg::RoundRobin) => spec.interleave = Interleave::RoundRobin,
            Some(InterleaveArg::Random) => {
                spec.interleave = Interleave::Random {
                    seed: self.interleave_seed.unwrap_or(spec.seed),
                }
            }
            None => {}
        }
        if self.max_duration.is_some() {
            spec.max_duration_secs = self.max_duration;
        }
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

/// FNV-1a over the per-key checksums in key order.
pub fn combined_checksum(outcome: &BenchOutcome) -> u64 {
    let mut h = FnvHasher::default();
    for (key, sum) in outcome.checksums() {
        h.write(key.as_bytes());
        h.write_u8(0xff);
        h.write_u64(sum);
    }
    h.finish()
}

fn run_spec(spec: &BenchmarkSpec) -> CliResult<BenchOutcome> {
    run_benchmark(spec).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn run(args: &BenchArgs) -> CliResult {
    let spec = args.build_spec()?;
    match &args.sweep {
        Some(periods) => sweep(args, &spec, periods),
        None => {
            let outcome = run_spec(&spec)?;
            let checksum = format!("{:016x}", combined_checksum(&outcome));
            let mut out = open_output(None)?;
            if args.json {
                let doc = json!({ "spec": spec, "report": outcome.report, "checksum": checksum });
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?
                )?;
            } else {
                writeln!(out, "{}", outcome.report)?;
                writeln!(out, "checksum: {checksum}")?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

fn sweep(args: &BenchArgs, base: &BenchmarkSpec, periods: &[usize]) -> CliResult {
    if periods.is_empty() {
        return Err(CliError::Usage("--sweep needs at least one period".into()));
    }
    let mut w = csv::Writer::from_writer(open_output(args.output.as_deref())?);
    w.write_record(["seasonality", "throughput"])?;
    for &m in periods {
        let spec = BenchmarkSpec {
            periods: vec![m],
            points_per_key: base.points_per_key + 4 * m,
            ..base.clone()
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let outcome = run_spec(&spec)?;
        w.write_record([m.to_string(), fmt_f64(outcome.report.aggregate_points_per_sec)])?;
        w.flush()?;
    }
    Ok(())
}
