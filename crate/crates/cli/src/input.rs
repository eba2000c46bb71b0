//! Line-oriented readers for CSV and NDJSON series input.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Ndjson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputRecord {
    pub key: Option<String>,
    pub timestamp: Option<i64>,
    pub value: f64,
    /// 1-based line in the input, header included.
    pub line: u64,
}

pub fn open(path: Option<&Path>) -> CliResult<Box<dyn Read>> {
    match path {
        None => Ok(Box::new(io::stdin().lock())),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(io::stdin().lock())),
        Some(p) => File::open(p)
            .map(|f| Box::new(f) as Box<dyn Read>)
            .map_err(|e| CliError::Input(format!("cannot open {}: {e}", p.display()))),
    }
}

fn parse_value(raw: &str, line: u64) -> CliResult<f64> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("line {line}: cannot parse value `{raw}`")))?;
    if !value.is_finite() {
        return Err(CliError::Input(format!("line {line}: non-finite value `{raw}`")));
    }
    Ok(value)
}

fn parse_timestamp(raw: &str, line: u64) -> CliResult<i64> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Input(format!("line {line}: timestamp `{raw}` is not an integer")))
}

struct CsvSource {
    reader: csv::Reader<Box<dyn Read>>,
    record: csv::StringRecord,
    value: usize,
    key: Option<usize>,
    timestamp: Option<usize>,
}

struct NdjsonSource {
    lines: io::Lines<BufReader<Box<dyn Read>>>,
    line: u64,
    peeked: Option<InputRecord>,
}

enum Source {
    Csv(CsvSource),
    Ndjson(NdjsonSource),
}

/// Streams [`InputRecord`]s one at a time.
pub struct RecordReader {
    source: Source,
    keyed: bool,
}

impl RecordReader {
    pub fn new(input: Box<dyn Read>, format: Format) -> CliResult<Self> {
        match format {
            Format::Csv => {
                let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
                let headers = reader.headers()?.clone();
                let find = |name: &str| headers.iter().position(|h| h == name);
                let value = find("value").ok_or_else(|| CliError::Input("input is missing column `value`".into()))?;
                let key = find("key");
                Ok(Self {
                    keyed: key.is_some(),
                    source: Source::Csv(CsvSource {
                        reader,
                        record: csv::StringRecord::new(),
                        value,
                        key,
                        timestamp: find("timestamp"),
                    }),
                })
            }
            Format::Ndjson => {
                let mut source = NdjsonSource {
                    lines: BufReader::new(input).lines(),
                    line: 0,
                    peeked: None,
                };
                source.peeked = source.next_record()?;
                Ok(Self {
                    keyed: source.peeked.as_ref().is_some_and(|r| r.key.is_some()),
                    source: Source::Ndjson(source),
                })
            }
        }
    }

    /// Whether records carry a series key.
    pub fn is_keyed(&self) -> bool {
        self.keyed
    }

    pub fn next_record(&mut self) -> CliResult<Option<InputRecord>> {
        let record = match &mut self.source {
            Source::Csv(src) => src.next_record()?,
            Source::Ndjson(src) => match src.peeked.take() {
                Some(r) => Some(r),
                None => src.next_record()?,
            },
        };
        if let Some(r) = &record {
            if r.key.is_some() != self.keyed {
                return Err(CliError::Input(format!(
                    "line {}: key present on some records but not others",
                    r.line
                )));
            }
        }
        Ok(record)
    }
}

impl CsvSource {
    fn next_record(&mut self) -> CliResult<Option<InputRecord>> {
        if !self.reader.read_record(&mut self.record)? {
            return Ok(None);
        }
        let line = self.record.position().map_or(0, |p| p.line());
        let field = |idx: usize| {
            self.record
                .get(idx)
                .ok_or_else(|| CliError::Input(format!("line {line}: too few fields")))
        };
        let value = parse_value(field(self.value)?, line)?;
        let key = self.key.map(|k| field(k).map(str::to_string)).transpose()?;
        let timestamp = self
            .timestamp
            .map(|t| field(t).and_then(|raw| parse_timestamp(raw, line)))
            .transpose()?;
        Ok(Some(InputRecord {
            key,
            timestamp,
            value,
            line,
        }))
    }
}

impl NdjsonSource {
    fn next_record(&mut self) -> CliResult<Option<InputRecord>> {
        loop {
            let Some(text) = self.lines.next() else {
                return Ok(None);
            };
            let text = text?;
            self.line += 1;
            let line = self.line;
            if text.trim().is_empty() {
                continue;
            }
            let obj: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("line {line}: invalid JSON: {e}")))?;
            let value = match obj.get("value") {
                Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
                Some(Value::String(s)) => parse_value(s, line)?,
                _ => return Err(CliError::Input(format!("line {line}: missing numeric `value`"))),
            };
            if !value.is_finite() {
                return Err(CliError::Input(format!("line {line}: non-finite value")));
            }
            let key = match obj.get("key") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(other) => Some(other.to_string()),
            };
            let timestamp = match obj.get("timestamp") {
                None | Some(Value::Null) => None,
                Some(Value::Number(n)) => Some(
                    n.as_i64()
                        .ok_or_else(|| CliError::Input(format!("line {line}: timestamp is not an integer")))?,
                ),
                Some(other) => Some(parse_timestamp(&other.to_string(), line)?),
            };
            return Ok(Some(InputRecord {
                key,
                timestamp,
                value,
                line,
            }));
        }
    }
}
