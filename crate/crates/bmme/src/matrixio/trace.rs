//! Per-iteration convergence traces and their CSV/JSON serialization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_CSV_HEADER: &str =
    "iter,wall_seconds,objective,rel_objective,alpha_W,alpha_H,kkt_residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

/// One traced iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: u64,
    pub wall_seconds: f64,
    pub objective: f64,
    pub rel_objective: f64,
    pub alpha_w: f64,
    pub alpha_h: f64,
    pub kkt_residual: Option<f64>,
}

/// Ordered per-iteration records; iterations strictly increasing, wall time
/// nondecreasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            debug_assert!(record.iter > last.iter, "iterations must increase");
            debug_assert!(
                record.wall_seconds >= last.wall_seconds,
                "wall time must not decrease"
            );
        }
        self.records.push(record);
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    fn validate(&self) -> Result<()> {
        for pair in self.records.windows(2) {
            if pair[1].iter <= pair[0].iter {
                return Err(Error::InvalidParameter(format!(
                    "trace iterations not strictly increasing at iter {}",
                    pair[1].iter
                )));
            }
            if pair[1].wall_seconds < pair[0].wall_seconds {
                return Err(Error::InvalidParameter(format!(
                    "trace wall time decreases at iter {}",
                    pair[1].iter
                )));
            }
        }
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a trace; the CSV header is fixed and an absent KKT residual becomes
/// an empty trailing field.
pub fn write_trace(trace: &ConvergenceTrace, path: &Path, format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Csv => {
            let mut out = BufWriter::new(File::create(path)?);
            writeln!(out, "{TRACE_CSV_HEADER}")?;
            for r in &trace.records {
                let kkt = r.kkt_residual.map(fmt).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.iter,
                    fmt(r.wall_seconds),
                    fmt(r.objective),
                    fmt(r.rel_objective),
                    fmt(r.alpha_w),
                    fmt(r.alpha_h),
                    kkt
                )?;
            }
            Ok(())
        }
        TraceFormat::Json => {
            let out = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(out, &trace.records)
                .map_err(|e| Error::InvalidParameter(format!("json write: {e}")))?;
            Ok(())
        }
    }
}

/// Reads a trace written by [`write_trace`].
pub fn read_trace(path: &Path, format: TraceFormat) -> Result<ConvergenceTrace> {
    let trace = match format {
        TraceFormat::Csv => {
            let file = BufReader::new(File::open(path)?);
            let mut lines = file.lines();
            let header = lines.next().ok_or(Error::Parse {
                line: 1,
                msg: "empty trace file".into(),
            })??;
            if header.trim() != TRACE_CSV_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected header '{header}'"),
                });
            }
            let mut records = Vec::new();
            for (idx, line) in lines.enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 7 {
                    return Err(Error::Parse {
                        line: idx + 2,
                        msg: format!("expected 7 fields, got {}", fields.len()),
                    });
                }
                let num = |tok: &str| -> Result<f64> {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 2,
                        msg: format!("cannot parse '{tok}'"),
                    })
                };
                records.push(TraceRecord {
                    iter: fields[0].parse().map_err(|_| Error::Parse {
                        line: idx + 2,
                        msg: format!("bad iter '{}'", fields[0]),
                    })?,
                    wall_seconds: num(fields[1])?,
                    objective: num(fields[2])?,
                    rel_objective: num(fields[3])?,
                    alpha_w: num(fields[4])?,
                    alpha_h: num(fields[5])?,
                    kkt_residual: if fields[6].is_empty() {
                        None
                    } else {
                        Some(num(fields[6])?)
                    },
                });
            }
            ConvergenceTrace { records }
        }
        TraceFormat::Json => {
            let file = BufReader::new(File::open(path)?);
            let records: Vec<TraceRecord> =
                serde_json::from_reader(file).map_err(|e| Error::Parse {
                    line: 0,
                    msg: format!("json read: {e}"),
                })?;
            ConvergenceTrace { records }
        }
    };
    trace.validate()?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iter: u64, kkt: Option<f64>) -> TraceRecord {
        TraceRecord {
            iter,
            wall_seconds: iter as f64 * 0.5,
            objective: 10.0 / iter as f64,
            rel_objective: 1.0 / iter as f64,
            alpha_w: 0.3,
            alpha_h: 0.25,
            kkt_residual: kkt,
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace(&ConvergenceTrace::new(), &path, TraceFormat::Csv).unwrap();
        let contents = std::fs::read_to_string(&path).unwrap();
        assert_eq!(contents, format!("{TRACE_CSV_HEADER}\n"));
    }

    #[test]
    fn one_record_round_trips() {
        let mut trace = ConvergenceTrace::new();
        trace.push(record(1, Some(1e-4)));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace(&trace, &path, TraceFormat::Csv).unwrap();
        let contents = std::fs::read_to_string(&path).unwrap();
        assert_eq!(contents.lines().count(), 2);
        let back = read_trace(&path, TraceFormat::Csv).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn absent_kkt_is_trailing_empty_field() {
        let mut trace = ConvergenceTrace::new();
        trace.push(record(1, None));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace(&trace, &path, TraceFormat::Csv).unwrap();
        let contents = std::fs::read_to_string(&path).unwrap();
        let data_line = contents.lines().nth(1).unwrap();
        assert!(data_line.ends_with(','), "line: {data_line}");
        let back = read_trace(&path, TraceFormat::Csv).unwrap();
        assert_eq!(back.records[0].kkt_residual, None);
    }

    #[test]
    fn json_round_trips() {
        let mut trace = ConvergenceTrace::new();
        trace.push(record(1, None));
        trace.push(record(2, Some(0.5)));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        write_trace(&trace, &path, TraceFormat::Json).unwrap();
        let back = read_trace(&path, TraceFormat::Json).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn reader_rejects_nonincreasing_iters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            format!("{TRACE_CSV_HEADER}\n2,0.1,1,1,0,0,\n1,0.2,1,1,0,0,\n"),
        )
        .unwrap();
        assert!(read_trace(&path, TraceFormat::Csv).is_err());
    }
}
