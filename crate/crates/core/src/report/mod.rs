//! File artifacts: score matrices, group series and forecasts as CSV, fitted
//! models as JSON, charts as SVG.
//!
//! Floats are written with Rust's shortest round-trip formatting so that a
//! value read back parses to the identical `f64`.

pub mod svg;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::difficulty::{DifficultyGrouping, GroupSeries};
use crate::error::{Error, Result};
use crate::metrics::{MetricKind, ScoreMatrix};
use crate::stats::CorrelationReport;
use crate::trendfit::{ForecastSeries, SweepCell};

pub use svg::{render_svg, ChartLayout, ChartSpec, Series, SeriesStyle};

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::parse(path, pos.line(), e.to_string()),
        None => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, 0, format!("{other:?}")),
        },
    }
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Contents of a `scores.csv` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoresFile {
    pub metric: MetricKind,
    pub model_ids: Vec<String>,
    pub effective_sizes: Vec<f64>,
    pub aggregates: Vec<f64>,
    /// Present when the file carries per-question columns.
    pub matrix: Option<ScoreMatrix>,
}

impl ScoresFile {
    /// The per-question matrix, or a validation error naming `path`.
    pub fn require_matrix(&self, path: &Path) -> Result<&ScoreMatrix> {
        self.matrix.as_ref().ok_or_else(|| {
            Error::Validation(format!(
                "{}: no per-question columns (re-run score without --aggregate-only)",
                path.display()
            ))
        })
    }
}

const SCORES_FIXED: [&str; 4] = ["model_id", "M", "metric", "aggregate"];

/// Writes `model_id,M,metric,aggregate[,<question_id>...]`.
pub fn write_scores(scores: &ScoreMatrix, per_question: bool, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = SCORES_FIXED.to_vec();
    if per_question {
        header.extend(scores.question_ids.iter().map(String::as_str));
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for m in 0..scores.n_models() {
        let mut row = vec![
            scores.model_ids[m].clone(),
            fmt_f64(scores.effective_sizes[m]),
            scores.metric.name().to_string(),
            fmt_f64(scores.aggregate(m)),
        ];
        if per_question {
            row.extend(scores.row(m).iter().map(|&v| fmt_f64(v)));
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

fn parse_f64(path: &Path, line: u64, field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(path, line, format!("bad {what} value {field:?}")))
}

pub fn read_scores(path: &Path) -> Result<ScoresFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    for (i, name) in SCORES_FIXED.iter().enumerate() {
        if header.get(i) != Some(*name) {
            return Err(Error::parse(
                path,
                1,
                format!("expected column {} to be {name:?}", i + 1),
            ));
        }
    }
    let question_ids: Vec<String> = header.iter().skip(SCORES_FIXED.len()).map(String::from).collect();
    let mut metric = None;
    let (mut ids, mut ms, mut aggs, mut values) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        ids.push(rec[0].to_string());
        ms.push(parse_f64(path, line, &rec[1], "M")?);
        let kind: MetricKind = rec[2]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("unknown metric {:?}", &rec[2])))?;
        if metric.is_some_and(|m| m != kind) {
            return Err(Error::parse(path, line, "mixed metrics in one scores file"));
        }
        metric = Some(kind);
        aggs.push(parse_f64(path, line, &rec[3], "aggregate")?);
        for (j, field) in rec.iter().skip(SCORES_FIXED.len()).enumerate() {
            values.push(parse_f64(path, line, field, &question_ids[j])?);
        }
    }
    let metric = metric.ok_or_else(|| Error::Validation(format!("{}: no models", path.display())))?;
    let matrix = if question_ids.is_empty() {
        None
    } else {
        Some(
            ScoreMatrix::new(metric, ids.clone(), ms.clone(), question_ids, values)
                .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?,
        )
    };
    Ok(ScoresFile {
        metric,
        model_ids: ids,
        effective_sizes: ms,
        aggregates: aggs,
        matrix,
    })
}

/// Accuracy aggregates from `accuracy`, matched to the rows of `scores` by
/// model id.
pub fn align_accuracy(scores: &ScoreMatrix, accuracy: &ScoresFile, path: &Path) -> Result<Vec<f64>> {
    if accuracy.metric != MetricKind::Accuracy {
        return Err(Error::Validation(format!(
            "{}: expected accuracy scores, found {}",
            path.display(),
            accuracy.metric
        )));
    }
    scores
        .model_ids
        .iter()
        .map(|id| {
            accuracy
                .model_ids
                .iter()
                .position(|a| a == id)
                .map(|i| accuracy.aggregates[i])
                .ok_or_else(|| {
                    Error::Validation(format!("{}: no accuracy for model {id:?}", path.display()))
                })
        })
        .collect()
}

/// Writes `grouping.json` plus `<label>.csv` per group into `dir`.
pub fn write_groups(
    grouping: &DifficultyGrouping,
    series: &[GroupSeries],
    model_ids: &[String],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    write_json(grouping, &dir.join("grouping.json"))?;
    let mut written = Vec::with_capacity(series.len());
    for s in series {
        let path = dir.join(format!("{}.csv", s.label));
        let mut w = csv_writer(&path)?;
        w.write_record(["model_id", "M", "value"]).map_err(|e| csv_err(&path, e))?;
        for (id, &(m, v)) in model_ids.iter().zip(&s.points) {
            w.write_record([id.as_str(), &fmt_f64(m), &fmt_f64(v)])
                .map_err(|e| csv_err(&path, e))?;
        }
        finish(&path, w)?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_grouping(path: &Path) -> Result<DifficultyGrouping> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))
}

pub fn write_forecast(series: &ForecastSeries, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["method", "M", "predicted_brier", "predicted_accuracy", "is_train_region"])
        .map_err(|e| csv_err(path, e))?;
    for p in &series.points {
        w.write_record([
            series.method.name(),
            &fmt_f64(p.m),
            &p.predicted_brier.map(fmt_f64).unwrap_or_default(),
            &fmt_f64(p.predicted_accuracy),
            if p.is_train_region { "true" } else { "false" },
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Summary of a sweep: one row per configuration with its test RMSE or error.
pub fn write_sweep_summary(cells: &[SweepCell], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["config", "threshold", "easy_degree", "hard_degree", "n_test", "test_rmse", "error"])
        .map_err(|e| csv_err(path, e))?;
    let opt = |d: Option<usize>| d.map(|d| d.to_string()).unwrap_or_default();
    for c in cells {
        let (n_test, rmse, err) = match &c.result {
            Ok(f) => (f.test.len().to_string(), fmt_f64(f.test_rmse()), String::new()),
            Err(e) => (String::new(), String::new(), e.to_string()),
        };
        w.write_record([
            c.tag(),
            fmt_f64(c.threshold),
            opt(c.easy_degree),
            opt(c.hard_degree),
            n_test,
            rmse,
            err,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Correlation table: one row per Brier variant, three coefficient columns
/// per dataset. Undefined coefficients are written as `degenerate`.
pub fn write_correlations(
    datasets: &[(String, CorrelationReport, CorrelationReport)],
    path: &Path,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["variant".to_string()];
    for (name, _, _) in datasets {
        for k in ["P", "S", "K"] {
            header.push(format!("{name}:{k}"));
        }
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let cell = |r: &std::result::Result<f64, String>| match r {
        Ok(v) => fmt_f64(*v),
        Err(_) => "degenerate".to_string(),
    };
    for (variant, pick) in [
        ("un-conditionalized", 0usize),
        ("conditionalized", 1usize),
    ] {
        let mut row = vec![variant.to_string()];
        for (_, raw, cond) in datasets {
            let r = if pick == 0 { raw } else { cond };
            row.extend([cell(&r.pearson), cell(&r.spearman), cell(&r.kendall)]);
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// A numeric table read for plotting: header names plus rows of raw fields.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let header: Vec<String> = r
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map(|r| r.iter().map(String::from).collect())
                    .map_err(|e| csv_err(path, e))
            })
            .collect::<Result<Vec<Vec<String>>>>()?;
        if rows.is_empty() {
            return Err(Error::Validation(format!("{}: series file has no rows", path.display())));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric `(x, y)` pairs; rows with an empty y field are skipped.
    pub fn xy(&self, path: &Path, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
        let missing = |c: &str| Error::Validation(format!("{}: no column {c:?}", path.display()));
        let xi = self.column(x).ok_or_else(|| missing(x))?;
        let yi = self.column(y).ok_or_else(|| missing(y))?;
        let mut out = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row[yi].trim().is_empty() {
                continue;
            }
            let line = i as u64 + 2;
            out.push((parse_f64(path, line, &row[xi], x)?, parse_f64(path, line, &row[yi], y)?));
        }
        if out.is_empty() {
            return Err(Error::Validation(format!("{}: column {y:?} is empty", path.display())));
        }
        Ok(out)
    }
}
