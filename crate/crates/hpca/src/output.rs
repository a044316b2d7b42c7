//! CSV files written by a run.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly. Optional values are empty fields. Wall-clock times go to a
//! separate file so the trials file is byte-for-byte reproducible.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::config::{Experiment, Method};
use crate::error::{Error, Result};
use crate::runner::{AggregateRecord, RunOutput, Summary, TrialRecord};

pub const TRIAL_HEADER: [&str; 11] = [
    "experiment",
    "method",
    "sweep_param",
    "sweep_value",
    "rep_index",
    "stream_id",
    "sin_theta_u",
    "sin_theta_v",
    "frob_rel_err",
    "iterations",
    "error",
];

pub const AGGREGATE_HEADER: [&str; 14] = [
    "experiment",
    "method",
    "sweep_param",
    "sweep_value",
    "n_reps",
    "n_failed",
    "sin_theta_u_mean",
    "sin_theta_u_sd",
    "sin_theta_v_mean",
    "sin_theta_v_sd",
    "frob_rel_err_mean",
    "frob_rel_err_sd",
    "iterations_mean",
    "iterations_sd",
];

pub const TIMING_HEADER: [&str; 5] = ["sweep_value", "rep_index", "method", "stream_id", "wall_ms"];

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

pub fn aggregate_path(path: &Path) -> PathBuf {
    with_suffix(path, ".agg.csv")
}

pub fn timing_path(path: &Path) -> PathBuf {
    with_suffix(path, ".timing.csv")
}

pub fn plot_path(path: &Path) -> PathBuf {
    with_suffix(path, ".svg")
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv { path: path.into(), source })
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut w = writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trials(records: &[TrialRecord], path: &Path) -> Result<()> {
    write_rows(
        path,
        &TRIAL_HEADER,
        records.iter().map(|t| {
            vec![
                t.experiment.to_string(),
                t.method.to_string(),
                t.sweep_param.clone(),
                fmt_float(t.sweep_value),
                t.rep_index.to_string(),
                t.stream_id.to_string(),
                fmt_opt(t.sin_theta_u),
                fmt_opt(t.sin_theta_v),
                fmt_opt(t.frob_rel_err),
                t.iterations.to_string(),
                t.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_aggregates(records: &[AggregateRecord], path: &Path) -> Result<()> {
    let pair = |s: Option<Summary>| match s {
        Some(s) => [fmt_float(s.mean), fmt_float(s.sd)],
        None => [String::new(), String::new()],
    };
    write_rows(
        path,
        &AGGREGATE_HEADER,
        records.iter().map(|a| {
            let mut row = vec![
                a.experiment.to_string(),
                a.method.to_string(),
                a.sweep_param.clone(),
                fmt_float(a.sweep_value),
                a.n_reps.to_string(),
                a.n_failed.to_string(),
            ];
            row.extend(pair(Some(a.sin_theta_u)));
            row.extend(pair(a.sin_theta_v));
            row.extend(pair(a.frob_rel_err));
            row.extend(pair(Some(a.iterations)));
            row
        }),
    )
}

pub fn write_timing(records: &[TrialRecord], path: &Path) -> Result<()> {
    write_rows(
        path,
        &TIMING_HEADER,
        records.iter().map(|t| {
            vec![
                fmt_float(t.sweep_value),
                t.rep_index.to_string(),
                t.method.to_string(),
                t.stream_id.to_string(),
                format!("{:.3}", t.wall_ms),
            ]
        }),
    )
}

struct Fields<'a> {
    path: &'a Path,
    line: u64,
    record: csv::StringRecord,
}

impl Fields<'_> {
    fn err(&self, reason: String) -> Error {
        Error::Parse { path: self.path.into(), reason: format!("line {}: {reason}", self.line) }
    }

    fn str(&self, i: usize) -> Result<&str> {
        self.record
            .get(i)
            .ok_or_else(|| self.err(format!("missing field {i}")))
    }

    fn parse<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        let s = self.str(i)?;
        s.parse().map_err(|_| self.err(format!("field {i}: cannot parse {s:?}")))
    }

    fn opt(&self, i: usize) -> Result<Option<f64>> {
        if self.str(i)?.is_empty() {
            Ok(None)
        } else {
            self.parse(i).map(Some)
        }
    }

    fn experiment(&self, i: usize) -> Result<Experiment> {
        self.str(i)?.parse().map_err(|e: Error| self.err(e.to_string()))
    }

    fn method(&self, i: usize) -> Result<Method> {
        self.str(i)?.parse().map_err(|e: Error| self.err(e.to_string()))
    }
}

fn read_rows<T>(path: &Path, header: &[&str], mut f: impl FnMut(&Fields) -> Result<T>) -> Result<Vec<T>> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    let got = r.headers().map_err(wrap)?;
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Parse { path: path.into(), reason: format!("unexpected header {got:?}") });
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(wrap)?;
        let line = record.position().map_or(0, |p| p.line());
        out.push(f(&Fields { path, line, record })?);
    }
    Ok(out)
}

/// Reads a trials file. `wall_ms` is not stored there and comes back as 0.
pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    read_rows(path, &TRIAL_HEADER, |f| {
        let error = f.str(10)?;
        Ok(TrialRecord {
            experiment: f.experiment(0)?,
            method: f.method(1)?,
            sweep_param: f.str(2)?.to_string(),
            sweep_value: f.parse(3)?,
            rep_index: f.parse(4)?,
            stream_id: f.parse(5)?,
            sin_theta_u: f.opt(6)?,
            sin_theta_v: f.opt(7)?,
            frob_rel_err: f.opt(8)?,
            iterations: f.parse(9)?,
            wall_ms: 0.0,
            error: (!error.is_empty()).then(|| error.to_string()),
        })
    })
}

pub fn read_aggregates(path: &Path) -> Result<Vec<AggregateRecord>> {
    read_rows(path, &AGGREGATE_HEADER, |f| {
        let pair = |i: usize| -> Result<Option<Summary>> {
            Ok(match (f.opt(i)?, f.opt(i + 1)?) {
                (Some(mean), Some(sd)) => Some(Summary { mean, sd }),
                _ => None,
            })
        };
        let required = |i: usize| -> Result<Summary> { pair(i)?.ok_or_else(|| f.err(format!("field {i} is empty"))) };
        Ok(AggregateRecord {
            experiment: f.experiment(0)?,
            method: f.method(1)?,
            sweep_param: f.str(2)?.to_string(),
            sweep_value: f.parse(3)?,
            n_reps: f.parse(4)?,
            n_failed: f.parse(5)?,
            sin_theta_u: required(6)?,
            sin_theta_v: pair(8)?,
            frob_rel_err: pair(10)?,
            iterations: required(12)?,
        })
    })
}

/// Writes the trials, aggregates and timing files (and the plot if asked)
/// and returns their paths.
pub fn write_run(out: &RunOutput, path: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    let mut written = vec![path.to_path_buf(), aggregate_path(path), timing_path(path)];
    write_trials(&out.trials, &written[0])?;
    write_aggregates(&out.aggregates, &written[1])?;
    write_timing(&out.trials, &written[2])?;
    if plot {
        let svg = plot_path(path);
        crate::plot::emit_plot(&out.aggregates, &svg)?;
        written.push(svg);
    }
    Ok(written)
}
