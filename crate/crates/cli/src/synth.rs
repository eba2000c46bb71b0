//! `onlinestl synth`: write a synthetic series with its true components.

use std::path::PathBuf;

use clap::Args;
use onlinestl::synth::{SynthConfig, SynthStream};

use crate::error::{CliError, CliResult};
use crate::format::fmt_f64;
use crate::output::open_output;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 750)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [25, 50])]
    pub periods: Vec<usize>,
    /// One amplitude per period; defaults to 2, 3, 4, ...
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub changepoints: usize,
    /// Slope range as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true, default_values_t = [-0.02, 0.02])]
    pub slope_range: Vec<f64>,
    /// Jump range as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true, default_values_t = [-2.0, 2.0])]
    pub jump_range: Vec<f64>,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl SynthArgs {
    pub fn config(&self) -> SynthConfig {
        let amplitudes = self
            .amplitudes
            .clone()
            .unwrap_or_else(|| (0..self.periods.len()).map(|i| 2.0 + i as f64).collect());
        SynthConfig {
            n: self.n,
            periods: self.periods.clone(),
            amplitudes,
            n_changepoints: self.changepoints,
            slope_range: (self.slope_range[0], self.slope_range[1]),
            jump_range: (self.jump_range[0], self.jump_range[1]),
            noise_sigma: self.noise,
            seed: self.seed,
        }
    }
}

pub fn run(args: &SynthArgs) -> CliResult {
    let config = args.config();
    let stream = SynthStream::new(config.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut w = csv::Writer::from_writer(open_output(args.output.as_deref())?);
    let mut header = vec!["value".to_string(), "true_trend".to_string()];
    header.extend(config.periods.iter().map(|m| format!("true_seasonal_{m}")));
    header.push("true_noise".into());
    w.write_record(&header)?;
    for p in stream {
        let mut row = Vec::with_capacity(header.len());
        row.push(fmt_f64(p.value));
        row.push(fmt_f64(p.trend));
        row.extend(p.seasonal.iter().map(|&s| fmt_f64(s)));
        row.push(fmt_f64(p.noise));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
