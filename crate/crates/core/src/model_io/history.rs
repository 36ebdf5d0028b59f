//! Time-history and FSI-iteration CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One accepted time level.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRecord {
    pub time: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    /// Generalized forces.
    pub forces: Vec<f64>,
}

/// One inner FSI iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FsiIterationRecord {
    pub step: usize,
    pub iteration: usize,
    /// RMS of the incremental physical translations (m).
    pub residual_rms: f64,
    pub omega: f64,
    /// Wall time spent in the iteration (s).
    pub seconds: f64,
}

/// Formats like C's `%.12e` (`1.234567890123e+00`).
pub fn format_sci(value: f64) -> String {
    let s = format!("{value:.12e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

pub fn history_header(n: usize) -> String {
    let mut cols = vec!["time".to_string()];
    cols.extend((1..=n).map(|i| format!("q_{i}")));
    cols.extend((1..=n).map(|i| format!("qd_{i}")));
    cols.extend((1..=n).map(|i| format!("f_{i}")));
    cols.join(",")
}

pub fn format_history(n: usize, records: &[HistoryRecord]) -> Result<String> {
    let mut out = history_header(n);
    out.push('\n');
    for (k, r) in records.iter().enumerate() {
        if r.q.len() != n || r.qd.len() != n || r.forces.len() != n {
            return Err(Error::SizeMismatch {
                what: "history record width",
                expected: n,
                actual: r.q.len(),
            });
        }
        if k > 0 && r.time < records[k - 1].time {
            return Err(Error::InvalidInput(format!("history records not time-sorted at record {k}")));
        }
        out.push_str(&format_sci(r.time));
        for v in r.q.iter().chain(&r.qd).chain(&r.forces) {
            out.push(',');
            out.push_str(&format_sci(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes records as CSV with header `time,q_1..q_n,qd_1..qd_n,f_1..f_n`.
pub fn write_history(path: impl AsRef<Path>, n: usize, records: &[HistoryRecord]) -> Result<()> {
    let text = format_history(n, records)?;
    fs::write(path.as_ref(), text).map_err(|e| Error::io(path, e))
}

pub fn parse_history(text: &str) -> Result<(usize, Vec<HistoryRecord>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty history file"))?;
    let cols = header.split(',').count();
    if cols < 1 || (cols - 1) % 3 != 0 || !header.starts_with("time") {
        return Err(Error::parse(1, 1, "history header must be time,q_*,qd_*,f_*"));
    }
    let n = (cols - 1) / 3;
    if header != history_header(n) {
        return Err(Error::parse(1, 1, "unexpected history header"));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .enumerate()
            .map(|(k, f)| f.trim().parse::<f64>().map_err(|_| Error::parse(idx + 1, k + 1, format!("bad number '{f}'"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != cols {
            return Err(Error::parse(idx + 1, 1, format!("expected {cols} columns, found {}", values.len())));
        }
        records.push(HistoryRecord {
            time: values[0],
            q: values[1..=n].to_vec(),
            qd: values[n + 1..=2 * n].to_vec(),
            forces: values[2 * n + 1..].to_vec(),
        });
    }
    Ok((n, records))
}

pub fn read_history(path: impl AsRef<Path>) -> Result<(usize, Vec<HistoryRecord>)> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path, e))?;
    parse_history(&text)
}

pub fn format_iteration_log(records: &[FsiIterationRecord]) -> String {
    let mut out = String::from("step,iter,residual_rms,omega,seconds\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.step,
            r.iteration,
            format_sci(r.residual_rms),
            format_sci(r.omega),
            format_sci(r.seconds)
        );
    }
    out
}

pub fn write_iteration_log(path: impl AsRef<Path>, records: &[FsiIterationRecord]) -> Result<()> {
    fs::write(path.as_ref(), format_iteration_log(records)).map_err(|e| Error::io(path, e))
}
