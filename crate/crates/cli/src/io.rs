//! Plain-text formats: headerless comma-separated data, one label per line,
//! and JSON records.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mfcpd::{ChangePoint, ChangePointSet, TimeSeries};
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_rows<'a>(path: &'a Path, text: &'a str) -> impl Iterator<Item = CliResult<(usize, csv::StringRecord)>> + 'a {
    csv_reader(text).into_records().map(move |r| {
        let rec = r.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        Ok((line, rec))
    })
}

/// Reads a headerless CSV with one row per time step. Blank lines are skipped.
pub fn read_series(path: &Path) -> CliResult<TimeSeries> {
    let text = read(path)?;
    let mut values = Vec::new();
    let mut dim = None;
    for row in csv_rows(path, &text) {
        let (line, rec) = row?;
        for field in &rec {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(_) => return Err(parse_err(path, line, format!("non-finite value '{field}'"))),
                Err(_) => return Err(parse_err(path, line, format!("not a number: '{field}'"))),
            }
        }
        match dim {
            None => dim = Some(rec.len()),
            Some(d) if d != rec.len() => {
                return Err(parse_err(path, line, format!("expected {d} columns, found {}", rec.len())));
            }
            _ => {}
        }
    }
    let Some(dim) = dim else {
        return Err(parse_err(path, 1, "no data rows"));
    };
    Ok(TimeSeries::new(values, dim)?)
}

pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, i + 1, format!("not a nonnegative integer: '{}'", l.trim())))
        })
        .collect()
}

/// Reads detections from a `detect` JSON result, or from lines of `t` or
/// `t,score`.
pub fn read_predictions(path: &Path) -> CliResult<ChangePointSet> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        #[derive(serde::Deserialize)]
        struct Detections {
            change_points: Vec<ChangePoint>,
        }
        let parsed: Detections = serde_json::from_str(&text)
            .map_err(|e| parse_err(path, e.line(), e.to_string()))?;
        return Ok(ChangePointSet::new(parsed.change_points));
    }
    let mut points = Vec::new();
    for row in csv_rows(path, &text) {
        let (line, rec) = row?;
        let t = rec
            .get(0)
            .and_then(|f| f.parse::<usize>().ok())
            .ok_or_else(|| parse_err(path, line, format!("bad time index in '{}'", rec.as_slice())))?;
        let score = match rec.get(1) {
            Some(f) => f
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("bad score '{f}'")))?,
            None => 1.0,
        };
        points.push(ChangePoint { t, score });
    }
    Ok(ChangePointSet::new(points))
}

/// Buffered writer for `path`, or stdout when absent.
pub fn writer(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

pub fn with_writer(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
    let target = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    let mut w = writer(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(target, e))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    with_writer(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

pub fn write_series(path: &Path, x: &TimeSeries) -> CliResult<()> {
    with_writer(Some(path), |w| {
        for t in 0..x.len() {
            let row: Vec<String> = x.row(t).iter().map(f64::to_string).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

pub fn write_labels(path: &Path, labels: &[usize]) -> CliResult<()> {
    with_writer(Some(path), |w| {
        for l in labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}
