//! Flat-file formats.
//!
//! Dataset CSV:
//!
//! ```text
//! p,n
//! 3,2
//! <n rows of p+1 X values>
//! <n rows of p+1 W values>
//! <one row of n Y values>
//! ```
//!
//! The `p,n` label line is optional. Values are written in shortest round-trip
//! form, so reading back is exact.
//!
//! Result files hold one `key=value` pair per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::bootstrap::BootstrapOutcome;
use crate::error::{Error, Result};
use crate::exotest::TestOutcome;
use crate::fourier::SampledCurve;
use crate::spectra::Dataset;

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_floats(record: &csv::StringRecord, line: u64, expected: usize, what: &str) -> Result<Vec<f64>> {
    if record.len() != expected {
        return Err(parse_error(
            line,
            format!("{what} row has {} values, expected {expected}", record.len()),
        ));
    }
    record
        .iter()
        .map(|field| {
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_error(line, format!("{what} row: cannot parse '{field}' as a number")))
        })
        .collect()
}

fn parse_usize(field: &str, line: u64, name: &str) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| parse_error(line, format!("cannot parse {name} = '{field}'")))
}

pub fn read_dataset_from<R: Read>(source: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();
    let mut next = |what: &str| -> Result<(csv::StringRecord, u64)> {
        match records.next() {
            Some(rec) => {
                let rec = rec?;
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                Ok((rec, line))
            }
            None => Err(parse_error(0, format!("unexpected end of file, expected {what}"))),
        }
    };

    let (mut rec, mut line) = next("header")?;
    if rec.len() == 2 && rec[0].eq_ignore_ascii_case("p") && rec[1].eq_ignore_ascii_case("n") {
        (rec, line) = next("dimensions")?;
    }
    if rec.len() != 2 {
        return Err(parse_error(line, format!("header has {} fields, expected 'p,n'", rec.len())));
    }
    let p = parse_usize(&rec[0], line, "p")?;
    let n = parse_usize(&rec[1], line, "n")?;
    if p < 1 {
        return Err(parse_error(line, "grid order p must be at least 1"));
    }

    let mut curves = |what: &str| -> Result<Vec<SampledCurve>> {
        (0..n)
            .map(|_| {
                let (rec, line) = next(what)?;
                let values = parse_floats(&rec, line, p + 1, what)?;
                SampledCurve::new(values).map_err(|e| parse_error(line, e.to_string()))
            })
            .collect()
    };
    let x = curves("X")?;
    let w = curves("W")?;
    let (rec, line) = next("Y")?;
    let y = parse_floats(&rec, line, n, "Y")?;
    if let Some(extra) = records.next() {
        let line = extra?.position().map(|p| p.line()).unwrap_or(0);
        return Err(parse_error(line, "trailing rows after the response row"));
    }
    Dataset::new(x, w, y).map_err(|e| parse_error(line, e.to_string()))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset_from(BufReader::new(File::open(path)?))
}

pub fn write_dataset_to<W: Write>(data: &Dataset, sink: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(sink);
    writer.write_record(["p", "n"])?;
    writer.write_record([data.p().to_string(), data.n().to_string()])?;
    for curve in data.x().iter().chain(data.w()) {
        writer.write_record(curve.values().iter().map(f64::to_string))?;
    }
    writer.write_record(data.y().iter().map(f64::to_string))?;
    writer.flush()?;
    Ok(())
}

pub fn write_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset_to(data, File::create(path)?)
}

/// Either kind of single-dataset test result.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Asymptotic(TestOutcome),
    Bootstrap(BootstrapOutcome),
}

impl Outcome {
    pub fn reject(&self) -> bool {
        match self {
            Outcome::Asymptotic(o) => o.reject,
            Outcome::Bootstrap(o) => o.reject,
        }
    }

    /// Ordered `key=value` pairs.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        match self {
            Outcome::Asymptotic(o) => vec![
                ("test", "asymptotic".into()),
                ("statistic", o.statistic.to_string()),
                ("t_hat", o.t_hat.to_string()),
                ("b_hat", o.b_hat.to_string()),
                ("r_hat", o.r_hat.to_string()),
                ("v_hat", o.v_hat.to_string()),
                ("sigma_sq", o.sigma_sq.to_string()),
                ("z", o.z.to_string()),
                ("p_value", o.p_value.to_string()),
                ("gamma", o.gamma.to_string()),
                ("selected", o.selected.to_string()),
                ("reject", o.reject.to_string()),
            ],
            Outcome::Bootstrap(o) => vec![
                ("test", "bootstrap".into()),
                ("scheme", o.scheme.to_string()),
                ("statistic", o.statistic.to_string()),
                ("q_star", o.q_star.to_string()),
                ("p_value", o.p_value.to_string()),
                ("B", o.b().to_string()),
                ("gamma", o.gamma.to_string()),
                ("seed", o.seed.to_string()),
                ("selected", o.selected.to_string()),
                ("reject", o.reject.to_string()),
                (
                    "replicates",
                    o.replicates.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
                ),
            ],
        }
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> Result<()> {
        for (key, value) in self.key_values() {
            writeln!(sink, "{key}={value}")?;
        }
        Ok(())
    }
}

/// A parsed result file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRecord {
    pub fields: BTreeMap<String, String>,
}

impl ResultRecord {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn from_reader<R: Read>(source: R) -> Result<Self> {
        let mut fields = BTreeMap::new();
        for (i, line) in BufReader::new(source).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| parse_error(i as u64 + 1, format!("expected key=value, got '{trimmed}'")))?;
            fields.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ResultRecord { fields })
    }
}

pub fn write_result(outcome: &Outcome, path: impl AsRef<Path>) -> Result<()> {
    let mut file = File::create(path)?;
    outcome.write_to(&mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultRecord> {
    ResultRecord::from_reader(File::open(path)?)
}
