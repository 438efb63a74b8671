use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// What the value columns of a trace measure.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    /// One relative DFT error per tracked frequency.
    Spectral { frequencies: Vec<usize> },
    /// `e_low`, `e_high` per filter variance, in that order.
    Filter { deltas: Vec<f64> },
}

impl TraceKind {
    pub fn columns(&self) -> Vec<String> {
        match self {
            Self::Spectral { frequencies } => frequencies.iter().map(|k| format!("delta_k{k}")).collect(),
            Self::Filter { deltas } => deltas
                .iter()
                .flat_map(|d| [format!("e_low_d{d}"), format!("e_high_d{d}")])
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Self::Spectral { frequencies } => frequencies.len(),
            Self::Filter { deltas } => 2 * deltas.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub loss: f64,
    pub values: Vec<f64>,
}

/// Per-epoch measurements of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub kind: TraceKind,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(kind: TraceKind) -> Self {
        Self { kind, rows: Vec::new() }
    }

    pub fn push(&mut self, epoch: usize, loss: f64, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.kind.width());
        self.rows.push(TraceRow { epoch, loss, values });
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["epoch".to_string(), "loss".to_string()];
        h.extend(self.kind.columns());
        h
    }

    /// Column `c` of the value block across all rows.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[c]).collect()
    }

    /// Series of the tracked frequency `k`, if the trace is spectral and
    /// tracks it.
    pub fn frequency(&self, k: usize) -> Option<Vec<f64>> {
        match &self.kind {
            TraceKind::Spectral { frequencies } => frequencies.iter().position(|&f| f == k).map(|c| self.column(c)),
            TraceKind::Filter { .. } => None,
        }
    }

    /// `(e_low, e_high)` series for the `i`-th filter variance.
    pub fn filter_pair(&self, i: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            TraceKind::Filter { deltas } if i < deltas.len() => Some((self.column(2 * i), self.column(2 * i + 1))),
            _ => None,
        }
    }

    pub fn epochs(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.epoch).collect()
    }
}

/// 17 significant digits, enough to reproduce every `f64` exactly.
fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the trace as CSV.
pub fn emit_csv(trace: &Trace, path: &Path) -> Result<()> {
    if trace.rows.is_empty() {
        return Err(Error::config("refusing to write an empty trace"));
    }
    let mut out = csv::Writer::from_writer(File::create(path)?);
    write_records(trace, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_records<W: Write>(trace: &Trace, out: &mut csv::Writer<W>) -> Result<()> {
    out.write_record(trace.header())?;
    for row in &trace.rows {
        let mut record = vec![row.epoch.to_string(), fmt_value(row.loss)];
        record.extend(row.values.iter().map(|&v| fmt_value(v)));
        out.write_record(&record)?;
    }
    Ok(())
}

/// Reads a trace written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Trace> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_csv(&text)
}

fn parse_kind(columns: &[String]) -> Result<TraceKind> {
    let bad = || Error::config(format!("unrecognized trace columns {columns:?}"));
    if columns.iter().all(|c| c.starts_with("delta_k")) {
        let frequencies = columns
            .iter()
            .map(|c| c["delta_k".len()..].parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        return Ok(TraceKind::Spectral { frequencies });
    }
    if columns.len() % 2 == 0 {
        let mut deltas = Vec::new();
        for pair in columns.chunks(2) {
            let lo = pair[0].strip_prefix("e_low_d").ok_or_else(bad)?;
            let hi = pair[1].strip_prefix("e_high_d").ok_or_else(bad)?;
            if lo != hi {
                return Err(bad());
            }
            deltas.push(lo.parse::<f64>().map_err(|_| bad())?);
        }
        return Ok(TraceKind::Filter { deltas });
    }
    Err(bad())
}

pub fn parse_csv(text: &str) -> Result<Trace> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "epoch" || header[1] != "loss" {
        return Err(Error::config("trace header must start with epoch,loss"));
    }
    let mut trace = Trace::new(parse_kind(&header[2..])?);
    for record in reader.records() {
        let record = record?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::config(format!("bad number {s:?} in trace")));
        let epoch = record[0]
            .parse::<usize>()
            .map_err(|_| Error::config(format!("bad epoch {:?}", &record[0])))?;
        let loss = num(&record[1])?;
        let values = record.iter().skip(2).map(num).collect::<Result<Vec<_>>>()?;
        trace.push(epoch, loss, values);
    }
    Ok(trace)
}
