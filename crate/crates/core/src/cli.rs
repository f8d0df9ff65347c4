//! `soar` command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::difficulty::{group_questions, group_series, ANALYSIS_GROUPS, FORECAST_GROUPS};
use crate::error::{Error, Result};
use crate::ingest::{load_evals, load_manifest, split_by_threshold, Preset};
use crate::metrics::{score_matrix, MetricKind};
use crate::report::{self, ChartSpec, Series, SeriesStyle, Table};
use crate::stats::correlate;
use crate::synth::{generate, write_corpus, Scenario, ScenarioSpec};
use crate::trendfit::{
    robustness_sweep, run_forecast, ForecastConfig, Method, ScalingData, DEFAULT_EASY_DEGREE,
    DEFAULT_HARD_DEGREE, SWEEP_EASY_DEGREES, SWEEP_HARD_DEGREES,
};

#[derive(Debug, Parser)]
#[command(name = "soar", version, about = "Difficulty-stratified scaling analysis of benchmark results")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every (model, question) pair under one metric.
    Score(ScoreArgs),
    /// Rank questions by difficulty below the threshold and write group series.
    Group(GroupArgs),
    /// Forecast accuracy past the threshold.
    Forecast(ForecastArgs),
    /// Forecast over a grid of thresholds and polynomial degrees.
    Sweep(SweepArgs),
    /// Correlate accuracy with raw and conditional binary Brier scores.
    Correlate(CorrelateArgs),
    /// Render CSV series as an SVG chart.
    Plot(PlotArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub evals: PathBuf,
    #[arg(long, default_value = "cond-brier")]
    pub metric: MetricKind,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Omit the per-question columns.
    #[arg(long)]
    pub aggregate_only: bool,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct ThresholdArgs {
    /// Emergence threshold on the effective-size axis.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Dataset preset supplying the threshold (mmlu, arithmetic, persian-qa).
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
}

impl ThresholdArgs {
    fn resolve(self) -> Result<f64> {
        match (self.threshold, self.preset) {
            (Some(t), _) => Ok(t),
            (None, Some(p)) => Ok(p.threshold()),
            (None, None) => Err(Error::Config("pass --threshold or --preset".into())),
        }
    }
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    Preset::from_name(s).ok_or_else(|| format!("unknown preset {s:?} (mmlu, arithmetic, persian-qa)"))
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[arg(long, default_value_t = ANALYSIS_GROUPS)]
    pub groups: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Continuous-metric scores with per-question columns.
    #[arg(long)]
    pub scores: PathBuf,
    /// Accuracy scores of the same models.
    #[arg(long)]
    pub accuracy: PathBuf,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// sandwich, hard-lift or sigmoid.
    #[arg(long, default_value = "sandwich")]
    pub method: Method,
    #[arg(long, default_value_t = FORECAST_GROUPS)]
    pub groups: usize,
    #[arg(long, default_value_t = DEFAULT_EASY_DEGREE)]
    pub easy_degree: usize,
    #[arg(long, default_value_t = DEFAULT_HARD_DEGREE)]
    pub hard_degree: usize,
    /// Reuse a grouping.json written by `group` instead of regrouping.
    #[arg(long)]
    pub grouping: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub accuracy: PathBuf,
    #[arg(long, default_value = "sandwich")]
    pub method: Method,
    /// Supplies the threshold grid when --thresholds is absent.
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = SWEEP_EASY_DEGREES)]
    pub easy_degrees: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = SWEEP_HARD_DEGREES)]
    pub hard_degrees: Vec<usize>,
    #[arg(long, default_value_t = FORECAST_GROUPS)]
    pub groups: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// One per dataset, paired in order with --evals.
    #[arg(long, required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub evals: Vec<PathBuf>,
    /// Column names for the datasets; defaults to the evals file stem.
    #[arg(long)]
    pub dataset: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Line series, as `path` or `label=path`.
    #[arg(long)]
    pub series: Vec<String>,
    /// Scatter series; split into train and test points by the marker.
    #[arg(long)]
    pub points: Vec<String>,
    /// Column for x.
    #[arg(long, default_value = "M")]
    pub x: String,
    /// Column for y; by default the first of value, predicted_accuracy, aggregate.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub threshold_marker: Option<f64>,
    #[arg(long, default_value = "")]
    pub title: String,
    #[arg(long)]
    pub y_label: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "emergent")]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub models: usize,
    #[arg(long, default_value_t = 300)]
    pub questions: usize,
    #[arg(long, default_value_t = 4)]
    pub choices: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Planted threshold.
    #[arg(long, default_value_t = 1.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub m_min: f64,
    #[arg(long, default_value_t = 2.5, allow_hyphen_values = true)]
    pub m_max: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(a) => cmd_score(&a),
        Command::Group(a) => cmd_group(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Correlate(a) => cmd_correlate(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

pub fn cmd_score(a: &ScoreArgs) -> Result<()> {
    let manifest = load_manifest(&a.models)?;
    let evals = load_evals(&a.evals, &manifest)?;
    let scores = score_matrix(&evals, a.metric)?;
    report::write_scores(&scores, !a.aggregate_only, &a.out)
}

pub fn cmd_group(a: &GroupArgs) -> Result<()> {
    let threshold = a.threshold.resolve()?;
    let file = report::read_scores(&a.scores)?;
    let scores = file.require_matrix(&a.scores)?;
    let split = split_by_threshold(&scores.effective_sizes, threshold)?;
    let grouping = group_questions(scores, &split, a.groups)?;
    let series = group_series(scores, &grouping)?;
    report::write_groups(&grouping, &series, &scores.model_ids, &a.out)?;
    Ok(())
}

pub fn cmd_forecast(a: &ForecastArgs) -> Result<()> {
    let threshold = a.threshold.resolve()?;
    let file = report::read_scores(&a.scores)?;
    let scores = file.require_matrix(&a.scores)?;
    let acc_file = report::read_scores(&a.accuracy)?;
    let accuracy = report::align_accuracy(scores, &acc_file, &a.accuracy)?;
    let data = ScalingData::new(scores, &accuracy)?;
    let grouping = match &a.grouping {
        Some(p) => Some(report::read_grouping(p)?.rebind(&scores.question_ids)?),
        None => None,
    };
    let config = ForecastConfig {
        method: a.method,
        threshold,
        groups: a.groups,
        easy_degree: a.easy_degree,
        hard_degree: a.hard_degree,
    };
    let forecast = run_forecast(&data, &config, grouping.as_ref())?;
    report::write_forecast(&forecast.series, &a.out.join("forecast.csv"))?;
    report::write_json(&forecast.report, &a.out.join("fit.json"))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let thresholds = if !a.thresholds.is_empty() {
        a.thresholds.clone()
    } else if let Some(p) = a.preset {
        p.sweep_thresholds().to_vec()
    } else {
        return Err(Error::Config("pass --thresholds or --preset".into()));
    };
    let file = report::read_scores(&a.scores)?;
    let scores = file.require_matrix(&a.scores)?;
    let acc_file = report::read_scores(&a.accuracy)?;
    let accuracy = report::align_accuracy(scores, &acc_file, &a.accuracy)?;
    let data = ScalingData::new(scores, &accuracy)?;
    let cells = robustness_sweep(&data, a.method, a.groups, &thresholds, &a.easy_degrees, &a.hard_degrees);
    for cell in &cells {
        if let Ok(f) = &cell.result {
            let tag = cell.tag();
            report::write_forecast(&f.series, &a.out.join(format!("forecast_{tag}.csv")))?;
            report::write_json(&f.report, &a.out.join(format!("fit_{tag}.json")))?;
        }
    }
    report::write_sweep_summary(&cells, &a.out.join("summary.csv"))?;
    let failed: Vec<String> = cells
        .iter()
        .filter_map(|c| c.result.as_ref().err().map(|e| format!("{}: {e}", c.tag())))
        .collect();
    if failed.len() == cells.len() {
        return Err(Error::Config(format!(
            "all {} sweep configurations failed ({})",
            cells.len(),
            failed.join("; ")
        )));
    }
    Ok(())
}

pub fn cmd_correlate(a: &CorrelateArgs) -> Result<()> {
    if a.models.len() != a.evals.len() {
        return Err(Error::Config(format!(
            "{} --models files for {} --evals files",
            a.models.len(),
            a.evals.len()
        )));
    }
    if !a.dataset.is_empty() && a.dataset.len() != a.evals.len() {
        return Err(Error::Config("--dataset must be given once per --evals".into()));
    }
    let mut rows = Vec::with_capacity(a.evals.len());
    for (i, (models, evals)) in a.models.iter().zip(&a.evals).enumerate() {
        let name = a.dataset.get(i).cloned().unwrap_or_else(|| {
            evals.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        });
        let manifest = load_manifest(models)?;
        let table = load_evals(evals, &manifest)?;
        let acc = score_matrix(&table, MetricKind::Accuracy)?.aggregates();
        let raw = score_matrix(&table, MetricKind::BinaryBrierRaw)?.aggregates();
        let cond = score_matrix(&table, MetricKind::BinaryBrierConditional)?.aggregates();
        let r = correlate(MetricKind::BinaryBrierRaw, &raw, MetricKind::Accuracy, &acc)?;
        let c = correlate(MetricKind::BinaryBrierConditional, &cond, MetricKind::Accuracy, &acc)?;
        rows.push((name, r, c));
    }
    report::write_correlations(&rows, &a.out)
}

fn labeled(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (label, path)
        }
    }
}

const DEFAULT_Y: [&str; 3] = ["value", "predicted_accuracy", "aggregate"];

fn y_column(table: &Table, path: &Path, requested: Option<&str>) -> Result<String> {
    if let Some(y) = requested {
        return Ok(y.to_string());
    }
    DEFAULT_Y
        .iter()
        .find(|c| table.column(c).is_some())
        .map(|c| c.to_string())
        .ok_or_else(|| {
            Error::Validation(format!("{}: no plottable column; pass --y", path.display()))
        })
}

pub fn cmd_plot(a: &PlotArgs) -> Result<()> {
    if a.series.is_empty() && a.points.is_empty() {
        return Err(Error::Config("pass at least one --series or --points file".into()));
    }
    let mut series = Vec::new();
    let mut y_name = None;
    for arg in &a.series {
        let (label, path) = labeled(arg);
        let table = Table::read(&path)?;
        let y = y_column(&table, &path, a.y.as_deref())?;
        let mut points = table.xy(&path, &a.x, &y)?;
        points.sort_by(|p, q| p.0.total_cmp(&q.0));
        y_name.get_or_insert(y);
        series.push(Series {
            label,
            points,
            style: SeriesStyle::Line,
        });
    }
    for arg in &a.points {
        let (label, path) = labeled(arg);
        let table = Table::read(&path)?;
        let y = y_column(&table, &path, a.y.as_deref())?;
        let points = table.xy(&path, &a.x, &y)?;
        y_name.get_or_insert(y);
        match a.threshold_marker {
            Some(t) => {
                let (train, test): (Vec<_>, Vec<_>) = points.into_iter().partition(|p| p.0 < t);
                for (suffix, pts, style) in [
                    ("train", train, SeriesStyle::Points),
                    ("test", test, SeriesStyle::HollowPoints),
                ] {
                    if !pts.is_empty() {
                        series.push(Series {
                            label: format!("{label} ({suffix})"),
                            points: pts,
                            style,
                        });
                    }
                }
            }
            None => series.push(Series {
                label,
                points,
                style: SeriesStyle::Points,
            }),
        }
    }
    let spec = ChartSpec {
        title: a.title.clone(),
        x_label: a.x.clone(),
        y_label: a.y_label.clone().or(y_name).unwrap_or_default(),
        series,
        marker: a.threshold_marker,
    };
    let svg = report::render_svg(&spec)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&a.out, svg).map_err(|e| Error::io(&a.out, e))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let spec = ScenarioSpec {
        scenario: a.scenario,
        n_models: a.models,
        n_questions: a.questions,
        m_range: [a.m_min, a.m_max],
        planted_threshold: a.threshold,
        noise_sd: a.noise,
        seed: a.seed,
        n_choices: a.choices,
    };
    let (manifest, table) = generate(&spec)?;
    write_corpus(&manifest, &table, &a.out_dir)
}
