use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::experiment::{CellStatus, SweepRecord};
use crate::process::ProcessKind;

/// Column names, in the declared field order of [`SweepRecord`].
pub const COLUMNS: [&str; 16] = [
    "n",
    "lambda",
    "radius",
    "eta",
    "theta",
    "seed",
    "process",
    "mu_eff_over_mu",
    "err_einstein",
    "err_naive",
    "a0",
    "b2_max_ratio",
    "sweeps",
    "wall_time",
    "status",
    "message",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => invalid(format!("unknown report format '{other}'")),
        }
    }
}

/// Seventeen significant digits, which round-trips every finite `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("bad float '{s}'")))
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("bad integer '{s}'")))
}

fn row(r: &SweepRecord) -> [String; 16] {
    [
        r.n.to_string(),
        format_float(r.lambda),
        format_float(r.radius),
        format_float(r.eta),
        format_float(r.theta),
        r.seed.to_string(),
        r.process.to_string(),
        format_float(r.mu_eff_over_mu),
        format_float(r.err_einstein),
        format_float(r.err_naive),
        format_float(r.a0),
        format_float(r.b2_max_ratio),
        r.sweeps.to_string(),
        format_float(r.wall_time),
        r.status.to_string(),
        r.message.clone(),
    ]
}

fn from_row(f: &[&str]) -> Result<SweepRecord> {
    if f.len() != COLUMNS.len() {
        return invalid(format!(
            "expected {} columns, got {}",
            COLUMNS.len(),
            f.len()
        ));
    }
    Ok(SweepRecord {
        n: parse_int(f[0])?,
        lambda: parse_float(f[1])?,
        radius: parse_float(f[2])?,
        eta: parse_float(f[3])?,
        theta: parse_float(f[4])?,
        seed: parse_int(f[5])?,
        process: f[6].parse::<ProcessKind>()?,
        mu_eff_over_mu: parse_float(f[7])?,
        err_einstein: parse_float(f[8])?,
        err_naive: parse_float(f[9])?,
        a0: parse_float(f[10])?,
        b2_max_ratio: parse_float(f[11])?,
        sweeps: parse_int(f[12])?,
        wall_time: parse_float(f[13])?,
        status: f[14].parse()?,
        message: f[15].to_string(),
    })
}

fn require_records(records: &[SweepRecord]) -> Result<()> {
    if records.is_empty() {
        return invalid("no records to report");
    }
    Ok(())
}

pub fn to_csv_string(records: &[SweepRecord]) -> Result<String> {
    require_records(records)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(COLUMNS).map_err(io)?;
    for r in records {
        w.write_record(row(r)).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn from_csv_str(s: &str) -> Result<Vec<SweepRecord>> {
    let mut reader = csv::Reader::from_reader(s.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return invalid(format!("unexpected CSV header {header:?}"));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::InvalidArgument(e.to_string()))?;
            from_row(&rec.iter().collect::<Vec<_>>())
        })
        .collect()
}

fn json_float(v: f64) -> String {
    if v.is_finite() {
        format_float(v)
    } else {
        "null".into()
    }
}

pub fn to_json_string(records: &[SweepRecord]) -> Result<String> {
    require_records(records)?;
    let mut out = String::from("[\n");
    for (k, r) in records.iter().enumerate() {
        let cells = row(r);
        let fields: Vec<String> = COLUMNS
            .iter()
            .zip(cells)
            .enumerate()
            .map(|(c, (name, value))| {
                let value = match c {
                    0 | 5 | 12 => value,
                    6 | 14 | 15 => serde_json::to_string(&value).expect("string serialises"),
                    _ => json_float(value.parse().expect("formatted float")),
                };
                format!("\"{name}\": {value}")
            })
            .collect();
        out.push_str("  {");
        out.push_str(&fields.join(", "));
        out.push('}');
        if k + 1 < records.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    n: usize,
    lambda: Option<f64>,
    radius: Option<f64>,
    eta: Option<f64>,
    theta: Option<f64>,
    seed: u64,
    process: ProcessKind,
    mu_eff_over_mu: Option<f64>,
    err_einstein: Option<f64>,
    err_naive: Option<f64>,
    a0: Option<f64>,
    b2_max_ratio: Option<f64>,
    sweeps: usize,
    wall_time: Option<f64>,
    status: String,
    message: String,
}

pub fn from_json_str(s: &str) -> Result<Vec<SweepRecord>> {
    let raw: Vec<JsonRecord> = serde_json::from_str(s)?;
    let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
    raw.into_iter()
        .map(|r| {
            Ok(SweepRecord {
                n: r.n,
                lambda: nan(r.lambda),
                radius: nan(r.radius),
                eta: nan(r.eta),
                theta: nan(r.theta),
                seed: r.seed,
                process: r.process,
                mu_eff_over_mu: nan(r.mu_eff_over_mu),
                err_einstein: nan(r.err_einstein),
                err_naive: nan(r.err_naive),
                a0: nan(r.a0),
                b2_max_ratio: nan(r.b2_max_ratio),
                sweeps: r.sweeps,
                wall_time: nan(r.wall_time),
                status: r.status.parse::<CellStatus>()?,
                message: r.message,
            })
        })
        .collect()
}

/// Writes the report; nothing is created when `records` is empty.
pub fn write_report(records: &[SweepRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => to_csv_string(records)?,
        ReportFormat::Json => to_json_string(records)?,
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report(format: ReportFormat, path: &Path) -> Result<Vec<SweepRecord>> {
    let text = fs::read_to_string(path)?;
    match format {
        ReportFormat::Csv => from_csv_str(&text),
        ReportFormat::Json => from_json_str(&text),
    }
}
