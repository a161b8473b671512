//! CSV output. UTF-8, header row, `.` decimals, shortest round-trip float
//! formatting. Files are staged next to the destination and renamed into
//! place, so a failed run never leaves a partial file.
//!
//! * trials: `param,value,trial,total`
//! * aggregate: `param,value,mean,ci95`
//! * plot data: `param,value,mean,ci95,reference_mean`

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentResult;
use crate::error::{Error, Result};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.{}.tmp", file_name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn render<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.into_inner().map_err(|e| Error::io(path, e.into_error()))
}

#[derive(Debug, Serialize)]
struct TrialRow<'a> {
    param: &'a str,
    value: f64,
    trial: usize,
    total: f64,
}

pub fn write_trials_csv(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no results to write".into()));
    }
    let rows = results.iter().flat_map(|r| {
        let (param, value) = r.param();
        r.totals.iter().enumerate().map(move |(trial, &total)| TrialRow {
            param,
            value,
            trial,
            total,
        })
    });
    write_atomic(path, &render(path, rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub param: String,
    pub value: f64,
    pub mean: f64,
    pub ci95: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_mean: Option<f64>,
}

fn aggregate_rows(results: &[ExperimentResult]) -> impl Iterator<Item = AggregateRow> + '_ {
    results.iter().map(|r| {
        let (param, value) = r.param();
        AggregateRow {
            param: param.to_string(),
            value,
            mean: r.mean,
            ci95: r.ci95,
            reference_mean: None,
        }
    })
}

pub fn write_aggregate_csv(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no results to write".into()));
    }
    write_atomic(path, &render(path, aggregate_rows(results))?)
}

#[derive(Debug, Serialize)]
struct PlotRow {
    param: String,
    value: f64,
    mean: f64,
    ci95: f64,
    reference_mean: Option<f64>,
}

/// Aggregate CSV with a constant `reference_mean` column (empty without a
/// reference run).
pub fn emit_plot_data(path: &Path, results: &[ExperimentResult], reference: Option<&ExperimentResult>) -> Result<()> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no results to plot".into()));
    }
    let rows = aggregate_rows(results).map(|r| PlotRow {
        param: r.param,
        value: r.value,
        mean: r.mean,
        ci95: r.ci95,
        reference_mean: reference.map(|x| x.mean),
    });
    write_atomic(path, &render(path, rows)?)
}

/// Reads an aggregate or plot-data CSV.
pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<AggregateRow>, _>>().map_err(csv_err(path))
}
