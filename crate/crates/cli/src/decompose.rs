//! `onlinestl decompose`: stream a series (or many keyed series) through the
//! decomposer and write one CSV row per emitted point.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgAction, Args};
use onlinestl::{DecomposedPoint, Decomposer, DecomposerConfig, DEFAULT_GAMMA};

use crate::error::{CliError, CliResult};
use crate::format::fmt_f64;
use crate::input::{self, Format, InputRecord, RecordReader};
use crate::output::open_output;

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input file (CSV with a `value` column, or NDJSON); stdin when omitted or `-`.
    pub input: Option<PathBuf>,
    /// Seasonal periods, comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub periods: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Emit retroactive rows for the warm-up window.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub emit_warmup: bool,
    /// Output file; for keyed input without `--keyed`, a directory receiving one file per key.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write keyed input as one long-format CSV with a leading `key` column.
    #[arg(long)]
    pub keyed: bool,
}

pub fn header(periods: &[usize], keyed: bool) -> Vec<String> {
    let mut h = Vec::with_capacity(periods.len() + 5);
    if keyed {
        h.push("key".to_string());
    }
    h.extend(["index", "value", "trend"].map(String::from));
    h.extend(periods.iter().map(|m| format!("seasonal_{m}")));
    h.push("residual".into());
    h
}

pub fn row(key: Option<&str>, p: &DecomposedPoint) -> Vec<String> {
    let mut r = Vec::with_capacity(p.seasonal.len() + 5);
    if let Some(k) = key {
        r.push(k.to_string());
    }
    r.push(p.index.to_string());
    r.push(fmt_f64(p.value));
    r.push(fmt_f64(p.trend));
    r.extend(p.seasonal.iter().map(|&s| fmt_f64(s)));
    r.push(fmt_f64(p.residual));
    r
}

/// Characters allowed verbatim in per-key file names.
fn file_stem(key: &str) -> String {
    key.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct KeyStream {
    decomposer: Decomposer,
    last_timestamp: Option<i64>,
    seen: u64,
    /// Own writer when writing one file per key.
    writer: Option<csv::Writer<Box<dyn Write>>>,
}

impl KeyStream {
    fn accept(&mut self, key: Option<&str>, record: &InputRecord) -> CliResult<Vec<DecomposedPoint>> {
        if let Some(ts) = record.timestamp {
            if let Some(prev) = self.last_timestamp {
                if ts != prev + 1 {
                    let who = key.map_or(String::new(), |k| format!(" for key `{k}`"));
                    return Err(CliError::Input(format!(
                        "line {}: timestamp {ts}{who} does not follow {prev}; timestamps must increase by 1",
                        record.line
                    )));
                }
            }
            self.last_timestamp = Some(ts);
        }
        self.seen += 1;
        let emitted = self
            .decomposer
            .push(record.value)
            .map_err(|e| CliError::Input(format!("line {}: {e}", record.line)))?;
        Ok(emitted.into_points())
    }
}

pub fn run(args: &DecomposeArgs) -> CliResult {
    let config = DecomposerConfig::new(args.periods.clone())
        .and_then(|c| c.with_gamma(args.gamma))
        .map_err(|e| CliError::Usage(e.to_string()))?
        .with_emit_warmup(args.emit_warmup);
    let mut reader = RecordReader::new(input::open(args.input.as_deref())?, args.format)?;
    let keyed_input = reader.is_keyed();
    let per_key_files = keyed_input && !args.keyed;
    if per_key_files {
        let dir = args.output.as_deref().ok_or_else(|| {
            CliError::Usage("keyed input needs --keyed or an --output directory for per-key files".into())
        })?;
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let long_format = keyed_input && args.keyed;

    let mut shared = if per_key_files {
        None
    } else {
        let mut w = csv::Writer::from_writer(open_output(args.output.as_deref())?);
        w.write_record(header(&config.periods, long_format))?;
        Some(w)
    };

    // Key order of first appearance, so diagnostics are deterministic.
    let mut order: Vec<String> = Vec::new();
    let mut streams: HashMap<String, KeyStream> = HashMap::new();
    while let Some(record) = reader.next_record()? {
        let key = record.key.clone().unwrap_or_default();
        if !streams.contains_key(&key) {
            let writer = if per_key_files {
                let dir = args.output.as_deref().expect("checked above");
                let path = dir.join(format!("{}.csv", file_stem(&key)));
                let mut w = csv::Writer::from_writer(open_output(Some(&path))?);
                w.write_record(header(&config.periods, false))?;
                Some(w)
            } else {
                None
            };
            let decomposer = Decomposer::new(config.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
            streams.insert(
                key.clone(),
                KeyStream {
                    decomposer,
                    last_timestamp: None,
                    seen: 0,
                    writer,
                },
            );
            order.push(key.clone());
        }
        let stream = streams.get_mut(&key).expect("inserted above");
        let label = record.key.as_deref();
        let points = stream.accept(label, &record)?;
        let out = match stream.writer.as_mut() {
            Some(w) => w,
            None => shared.as_mut().expect("shared writer exists without per-key files"),
        };
        let row_key = if long_format { label } else { None };
        for p in &points {
            out.write_record(row(row_key, p))?;
        }
    }

    if let Some(w) = shared.as_mut() {
        w.flush()?;
    }
    for s in streams.values_mut() {
        if let Some(w) = s.writer.as_mut() {
            w.flush()?;
        }
    }

    let need = config.warmup_len();
    if order.is_empty() {
        return Err(CliError::Insufficient(format!(
            "input is empty; need at least {need} points"
        )));
    }
    for key in &order {
        let s = &streams[key];
        if !s.decomposer.is_initialized() {
            let who = if keyed_input {
                format!("key `{key}`: ")
            } else {
                String::new()
            };
            return Err(CliError::Insufficient(format!(
                "{who}series has {} points; need at least {need} (4 x largest period)",
                s.seen
            )));
        }
    }
    Ok(())
}
