use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{fit_brier_to_acc_map, LinearMap};
use super::poly::{fit_polynomial, PolyFit};
use super::sigmoid::{fit_sigmoid_baseline, SigmoidFit};
use crate::difficulty::{group_questions, group_series, DifficultyGrouping, FORECAST_GROUPS};
use crate::error::{Error, Result};
use crate::ingest::{split_by_threshold, Split};
use crate::metrics::ScoreMatrix;

pub const DEFAULT_EASY_DEGREE: usize = 5;
pub const DEFAULT_HARD_DEGREE: usize = 2;
/// Degree grids of the polynomial-order robustness sweep.
pub const SWEEP_EASY_DEGREES: [usize; 3] = [3, 5, 7];
pub const SWEEP_HARD_DEGREES: [usize; 3] = [2, 4, 6];

const GRID_POINTS: usize = 200;
const GRID_OVERSHOOT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sandwich,
    HardLift,
    SigmoidBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sandwich => "sandwich",
            Method::HardLift => "hard_lift",
            Method::SigmoidBaseline => "sigmoid_baseline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sandwich" => Ok(Method::Sandwich),
            "hard-lift" | "hard_lift" => Ok(Method::HardLift),
            "sigmoid" | "sigmoid_baseline" => Ok(Method::SigmoidBaseline),
            _ => Err(Error::Config(format!(
                "unknown method {s:?} (expected sandwich, hard-lift or sigmoid)"
            ))),
        }
    }
}

/// Mean of the easy-group and hard-group trends.
pub fn sandwich(fit_easy: &PolyFit, fit_hard: &PolyFit, x: f64) -> f64 {
    0.5 * (fit_easy.eval(x) + fit_hard.eval(x))
}

/// Additive constant that makes the mean projected accuracy over the training
/// models equal their mean true accuracy.
pub fn calibration_constant(
    forecast_brier: &dyn Fn(f64) -> f64,
    map: &LinearMap,
    train: &[(f64, f64)],
) -> f64 {
    let n = train.len() as f64;
    let predicted: f64 = train.iter().map(|&(m, _)| map.apply(forecast_brier(m))).sum::<f64>() / n;
    let actual: f64 = train.iter().map(|p| p.1).sum::<f64>() / n;
    actual - predicted
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub m: f64,
    pub predicted_brier: Option<f64>,
    pub predicted_accuracy: f64,
    pub is_train_region: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub method: Method,
    pub threshold: f64,
    /// Sorted ascending by `m`.
    pub points: Vec<ForecastPoint>,
    pub calibration_constant: Option<f64>,
}

/// Projects a continuous-metric forecast onto accuracy through `map` plus the
/// calibration constant, sampled on `grid`.
pub fn project_to_accuracy(
    method: Method,
    threshold: f64,
    forecast_brier: &dyn Fn(f64) -> f64,
    map: &LinearMap,
    train: &[(f64, f64)],
    grid: &[f64],
) -> ForecastSeries {
    let c = calibration_constant(forecast_brier, map, train);
    let mut points: Vec<ForecastPoint> = grid
        .iter()
        .map(|&m| {
            let b = forecast_brier(m);
            ForecastPoint {
                m,
                predicted_brier: Some(b),
                predicted_accuracy: map.apply(b) + c,
                is_train_region: m < threshold,
            }
        })
        .collect();
    points.sort_by(|a, b| a.m.total_cmp(&b.m));
    ForecastSeries {
        method,
        threshold,
        points,
        calibration_constant: Some(c),
    }
}

/// Training and test `M` values plus a uniform grid over
/// `[min train M, max test M + 0.2]`, sorted and deduplicated.
pub fn forecast_grid(train_m: &[f64], test_m: &[f64]) -> Vec<f64> {
    let lo = train_m.iter().chain(test_m).copied().fold(f64::INFINITY, f64::min);
    let hi = train_m.iter().chain(test_m).copied().fold(f64::NEG_INFINITY, f64::max) + GRID_OVERSHOOT;
    let mut grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .chain(train_m.iter().copied())
        .chain(test_m.iter().copied())
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Fitted forecasting model, serializable as `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TrendModel {
    Sandwich {
        easy_group: String,
        hard_group: String,
        easy_fit: PolyFit,
        hard_fit: PolyFit,
        accuracy_map: LinearMap,
        calibration_constant: f64,
    },
    HardLift {
        hard_group: String,
        hard_fit: PolyFit,
        /// Constant added to the hard-group fit.
        lift: f64,
        /// Aggregate score of the largest training model the lift anchors to.
        anchor_m: f64,
        anchor_value: f64,
        accuracy_map: LinearMap,
        calibration_constant: f64,
    },
    SigmoidBaseline {
        sigmoid: SigmoidFit,
    },
}

impl TrendModel {
    pub fn method(&self) -> Method {
        match self {
            TrendModel::Sandwich { .. } => Method::Sandwich,
            TrendModel::HardLift { .. } => Method::HardLift,
            TrendModel::SigmoidBaseline { .. } => Method::SigmoidBaseline,
        }
    }

    /// Forecast of the continuous metric, when the method has one.
    pub fn brier_at(&self, x: f64) -> Option<f64> {
        match self {
            TrendModel::Sandwich {
                easy_fit, hard_fit, ..
            } => Some(sandwich(easy_fit, hard_fit, x)),
            TrendModel::HardLift { hard_fit, lift, .. } => Some(hard_fit.eval(x) + lift),
            TrendModel::SigmoidBaseline { .. } => None,
        }
    }

    pub fn accuracy_at(&self, x: f64) -> f64 {
        match self {
            TrendModel::Sandwich {
                accuracy_map,
                calibration_constant,
                ..
            }
            | TrendModel::HardLift {
                accuracy_map,
                calibration_constant,
                ..
            } => accuracy_map.apply(self.brier_at(x).unwrap_or(f64::NAN)) + calibration_constant,
            TrendModel::SigmoidBaseline { sigmoid } => sigmoid.eval(x),
        }
    }
}

/// Everything that goes into `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub threshold: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub easy_degree: Option<usize>,
    pub hard_degree: Option<usize>,
    pub group_labels: Vec<String>,
    pub model: TrendModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub report: FitReport,
    pub series: ForecastSeries,
    /// `(M, true accuracy)` of the test models.
    pub test: Vec<(f64, f64)>,
}

impl Forecast {
    pub fn accuracy_at(&self, x: f64) -> f64 {
        self.report.model.accuracy_at(x)
    }

    /// Root-mean-square error of predicted accuracy on the test models.
    pub fn test_rmse(&self) -> f64 {
        let sq: f64 = self
            .test
            .iter()
            .map(|&(m, a)| {
                let r = self.accuracy_at(m) - a;
                r * r
            })
            .sum();
        (sq / self.test.len() as f64).sqrt()
    }
}

/// Per-model inputs shared by every forecasting method.
#[derive(Debug, Clone, Copy)]
pub struct ScalingData<'a> {
    /// Continuous-metric matrix (binary Brier by default).
    pub scores: &'a ScoreMatrix,
    /// Aggregate accuracy per model, in the matrix row order.
    pub accuracy: &'a [f64],
}

impl<'a> ScalingData<'a> {
    pub fn new(scores: &'a ScoreMatrix, accuracy: &'a [f64]) -> Result<Self> {
        if accuracy.len() != scores.n_models() {
            return Err(Error::Validation(format!(
                "{} accuracy values for {} models",
                accuracy.len(),
                scores.n_models()
            )));
        }
        Ok(Self { scores, accuracy })
    }

    fn points(&self, rows: &[usize], values: &[f64]) -> Vec<(f64, f64)> {
        rows.iter()
            .map(|&r| (self.scores.effective_sizes[r], values[r]))
            .collect()
    }

    fn m_of(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&r| self.scores.effective_sizes[r]).collect()
    }
}

fn require_train(split: &Split, degree: usize, what: &str) -> Result<()> {
    if split.n_train() < degree + 1 {
        return Err(Error::Config(format!(
            "{what} fit of degree {degree} needs at least {} training models below T={}, got {}",
            degree + 1,
            split.threshold,
            split.n_train()
        )));
    }
    Ok(())
}

fn accuracy_projection(
    data: &ScalingData<'_>,
    split: &Split,
) -> Result<(LinearMap, Vec<(f64, f64)>)> {
    let aggregates = data.scores.aggregates();
    let pairs: Vec<(f64, f64)> = split
        .train
        .iter()
        .map(|&r| (aggregates[r], data.accuracy[r]))
        .collect();
    let map = fit_brier_to_acc_map(&pairs)?;
    Ok((map, data.points(&split.train, data.accuracy)))
}

/// Fits the easiest and hardest groups below the threshold, averages the two
/// trends, and projects the result onto accuracy. Middle groups are unused.
pub fn slice_and_sandwich(
    data: &ScalingData<'_>,
    grouping: &DifficultyGrouping,
    split: &Split,
    easy_degree: usize,
    hard_degree: usize,
) -> Result<Forecast> {
    if grouping.n_groups() < 3 {
        return Err(Error::Config(format!(
            "slice-and-sandwich needs at least 3 difficulty groups, got {}",
            grouping.n_groups()
        )));
    }
    require_train(split, easy_degree, "easy-group")?;
    require_train(split, hard_degree, "hard-group")?;
    let series = group_series(data.scores, grouping)?;
    let easy = &series[0];
    let hard = &series[series.len() - 1];
    let easy_fit = fit_polynomial(&easy.subset(&split.train), easy_degree)?;
    let hard_fit = fit_polynomial(&hard.subset(&split.train), hard_degree)?;
    let (map, train_acc) = accuracy_projection(data, split)?;

    let forecast = |x: f64| sandwich(&easy_fit, &hard_fit, x);
    let grid = forecast_grid(&data.m_of(&split.train), &data.m_of(&split.test));
    let out = project_to_accuracy(Method::Sandwich, split.threshold, &forecast, &map, &train_acc, &grid);
    let calibration_constant = out.calibration_constant.unwrap_or(0.0);
    Ok(Forecast {
        report: FitReport {
            threshold: split.threshold,
            n_train: split.n_train(),
            n_test: split.test.len(),
            easy_degree: Some(easy_degree),
            hard_degree: Some(hard_degree),
            group_labels: grouping.labels.clone(),
            model: TrendModel::Sandwich {
                easy_group: easy.label.clone(),
                hard_group: hard.label.clone(),
                easy_fit,
                hard_fit,
                accuracy_map: map,
                calibration_constant,
            },
        },
        series: out,
        test: data.points(&split.test, data.accuracy),
    })
}

/// Hardest-group trend shifted so it passes through the aggregate score of the
/// largest training model, then projected onto accuracy.
pub fn hard_lift(
    data: &ScalingData<'_>,
    grouping: &DifficultyGrouping,
    split: &Split,
    hard_degree: usize,
) -> Result<Forecast> {
    if grouping.n_groups() < 2 {
        return Err(Error::Config("hard-lift needs at least 2 difficulty groups".into()));
    }
    require_train(split, hard_degree, "hard-group")?;
    let series = group_series(data.scores, grouping)?;
    let hard = &series[series.len() - 1];
    let hard_fit = fit_polynomial(&hard.subset(&split.train), hard_degree)?;

    let anchor_row = *split
        .train
        .iter()
        .max_by(|&&a, &&b| data.scores.effective_sizes[a].total_cmp(&data.scores.effective_sizes[b]))
        .expect("split has training models");
    let anchor_m = data.scores.effective_sizes[anchor_row];
    let anchor_value = data.scores.aggregate(anchor_row);
    let lift = anchor_value - hard_fit.eval(anchor_m);

    let (map, train_acc) = accuracy_projection(data, split)?;
    let forecast = |x: f64| hard_fit.eval(x) + lift;
    let grid = forecast_grid(&data.m_of(&split.train), &data.m_of(&split.test));
    let out = project_to_accuracy(Method::HardLift, split.threshold, &forecast, &map, &train_acc, &grid);
    let calibration_constant = out.calibration_constant.unwrap_or(0.0);
    Ok(Forecast {
        report: FitReport {
            threshold: split.threshold,
            n_train: split.n_train(),
            n_test: split.test.len(),
            easy_degree: None,
            hard_degree: Some(hard_degree),
            group_labels: grouping.labels.clone(),
            model: TrendModel::HardLift {
                hard_group: hard.label.clone(),
                hard_fit,
                lift,
                anchor_m,
                anchor_value,
                accuracy_map: map,
                calibration_constant,
            },
        },
        series: out,
        test: data.points(&split.test, data.accuracy),
    })
}

/// Logistic regression of accuracy on `M` using the training models only.
pub fn sigmoid_baseline(data: &ScalingData<'_>, split: &Split) -> Result<Forecast> {
    let train = data.points(&split.train, data.accuracy);
    let sigmoid = fit_sigmoid_baseline(&train)?;
    let grid = forecast_grid(&data.m_of(&split.train), &data.m_of(&split.test));
    let points = grid
        .iter()
        .map(|&m| ForecastPoint {
            m,
            predicted_brier: None,
            predicted_accuracy: sigmoid.eval(m),
            is_train_region: m < split.threshold,
        })
        .collect();
    Ok(Forecast {
        report: FitReport {
            threshold: split.threshold,
            n_train: split.n_train(),
            n_test: split.test.len(),
            easy_degree: None,
            hard_degree: None,
            group_labels: Vec::new(),
            model: TrendModel::SigmoidBaseline { sigmoid },
        },
        series: ForecastSeries {
            method: Method::SigmoidBaseline,
            threshold: split.threshold,
            points,
            calibration_constant: None,
        },
        test: data.points(&split.test, data.accuracy),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastConfig {
    pub method: Method,
    pub threshold: f64,
    pub groups: usize,
    pub easy_degree: usize,
    pub hard_degree: usize,
}

impl ForecastConfig {
    pub fn new(method: Method, threshold: f64) -> Self {
        Self {
            method,
            threshold,
            groups: FORECAST_GROUPS,
            easy_degree: DEFAULT_EASY_DEGREE,
            hard_degree: DEFAULT_HARD_DEGREE,
        }
    }
}

/// Splits at the configured threshold, groups questions (unless a grouping is
/// supplied), and runs the configured method.
pub fn run_forecast(
    data: &ScalingData<'_>,
    config: &ForecastConfig,
    grouping: Option<&DifficultyGrouping>,
) -> Result<Forecast> {
    let split = split_by_threshold(&data.scores.effective_sizes, config.threshold)?;
    if config.method == Method::SigmoidBaseline {
        return sigmoid_baseline(data, &split);
    }
    let owned;
    let grouping = match grouping {
        Some(g) => g,
        None => {
            owned = group_questions(data.scores, &split, config.groups)?;
            &owned
        }
    };
    match config.method {
        Method::Sandwich => {
            slice_and_sandwich(data, grouping, &split, config.easy_degree, config.hard_degree)
        }
        Method::HardLift => hard_lift(data, grouping, &split, config.hard_degree),
        Method::SigmoidBaseline => unreachable!(),
    }
}

/// One configuration of a robustness sweep and its outcome.
#[derive(Debug)]
pub struct SweepCell {
    pub threshold: f64,
    pub easy_degree: Option<usize>,
    pub hard_degree: Option<usize>,
    pub result: Result<Forecast>,
}

impl SweepCell {
    pub fn tag(&self) -> String {
        let mut t = format!("T{}", self.threshold);
        if let Some(e) = self.easy_degree {
            t += &format!("_e{e}");
        }
        if let Some(h) = self.hard_degree {
            t += &format!("_h{h}");
        }
        t
    }
}

/// Runs `method` over the Cartesian product of thresholds and degrees.
/// Cells come back in configuration order (threshold, easy, hard); a failing
/// cell carries its error instead of aborting the sweep. Degrees a method does
/// not use are not swept.
pub fn robustness_sweep(
    data: &ScalingData<'_>,
    method: Method,
    groups: usize,
    thresholds: &[f64],
    easy_degrees: &[usize],
    hard_degrees: &[usize],
) -> Vec<SweepCell> {
    let easy: Vec<Option<usize>> = match method {
        Method::Sandwich => easy_degrees.iter().copied().map(Some).collect(),
        _ => vec![None],
    };
    let hard: Vec<Option<usize>> = match method {
        Method::SigmoidBaseline => vec![None],
        _ => hard_degrees.iter().copied().map(Some).collect(),
    };
    let mut configs = Vec::new();
    for &t in thresholds {
        for &e in &easy {
            for &h in &hard {
                configs.push((t, e, h));
            }
        }
    }
    configs
        .into_par_iter()
        .map(|(threshold, easy_degree, hard_degree)| {
            let config = ForecastConfig {
                method,
                threshold,
                groups,
                easy_degree: easy_degree.unwrap_or(DEFAULT_EASY_DEGREE),
                hard_degree: hard_degree.unwrap_or(DEFAULT_HARD_DEGREE),
            };
            SweepCell {
                threshold,
                easy_degree,
                hard_degree,
                result: run_forecast(data, &config, None),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::difficulty::sort_and_group;
    use crate::metrics::MetricKind;

    fn constant(c: f64) -> PolyFit {
        PolyFit::from_coefficients(vec![c], [0.0, 1.0])
    }

    #[test]
    fn sandwich_examples() {
        assert_eq!(sandwich(&constant(-0.2), &constant(-0.8), 0.3), -0.5);
        let f = PolyFit::from_coefficients(vec![-0.5, 0.1, 0.02], [0.0, 1.0]);
        assert_eq!(sandwich(&f, &f, 1.7), f.eval(1.7));
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(sandwich(&constant(-0.1), &constant(-0.9), x), -0.5);
        }
    }

    #[test]
    fn calibration_examples() {
        let train = [(0.0, 0.5), (1.0, 0.5), (2.0, 0.5)];
        assert_eq!(calibration_constant(&|_| 0.5, &LinearMap::IDENTITY, &train), 0.0);
        let c = calibration_constant(&|_| 0.4, &LinearMap::IDENTITY, &train);
        assert!((c - 0.1).abs() < 1e-15);
    }

    #[test]
    fn grid_contains_models_and_overshoots() {
        let g = forecast_grid(&[0.0, 0.5], &[1.0, 1.3]);
        assert!(g.contains(&0.5) && g.contains(&1.3));
        assert_eq!(g[0], 0.0);
        assert!((g[g.len() - 1] - 1.5).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    fn synthetic(easy: impl Fn(f64) -> f64, hard: impl Fn(f64) -> f64, n_models: usize) -> (ScoreMatrix, Vec<f64>) {
        // three questions per group; the middle group sits between the two
        let ms: Vec<f64> = (0..n_models).map(|i| i as f64 * 0.25).collect();
        let mut values = Vec::new();
        let mut acc = Vec::new();
        for &m in &ms {
            let (e, h) = (easy(m), hard(m));
            let mid = 0.5 * (e + h);
            let row = [e + 0.01, e, e - 0.01, mid + 0.01, mid, mid - 0.01, h + 0.01, h, h - 0.01];
            acc.push(0.3 + 0.5 * (row.iter().sum::<f64>() / 9.0 + 1.0));
            values.extend(row);
        }
        let qids = (0..9).map(|i| format!("q{i}")).collect();
        let m = ScoreMatrix::new(
            MetricKind::BinaryBrierConditional,
            (0..n_models).map(|i| format!("m{i:02}")).collect(),
            ms,
            qids,
            values,
        )
        .unwrap();
        (m, acc)
    }

    #[test]
    fn equal_groups_reduce_to_single_fit() {
        let trend = |m: f64| -0.5 + 0.05 * (m - 1.0) * (m - 1.0);
        let (scores, acc) = synthetic(trend, trend, 12);
        let data = ScalingData::new(&scores, &acc).unwrap();
        let split = split_by_threshold(&scores.effective_sizes, 2.0).unwrap();
        let grouping = group_questions(&scores, &split, 3).unwrap();
        let f = slice_and_sandwich(&data, &grouping, &split, 2, 2).unwrap();
        // easy and hard sit at trend +- 0.01, so the sandwich is the trend itself
        let aggregate: Vec<(f64, f64)> = split.train.iter().map(|&r| (scores.effective_sizes[r], scores.aggregate(r))).collect();
        let single = fit_polynomial(&aggregate, 2).unwrap();
        for x in [0.0, 1.0, 2.5, 3.0] {
            assert!((f.report.model.brier_at(x).unwrap() - single.eval(x)).abs() < 1e-12);
            assert!((single.eval(x) - trend(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_lift_anchor() {
        let (scores, acc) = synthetic(|m| -0.2 - 0.02 * m, |m| -0.8 + 0.03 * m * m, 12);
        let data = ScalingData::new(&scores, &acc).unwrap();
        let split = split_by_threshold(&scores.effective_sizes, 2.0).unwrap();
        let grouping = group_questions(&scores, &split, 3).unwrap();
        let f = hard_lift(&data, &grouping, &split, 2).unwrap();
        let last = *split.train.last().unwrap();
        let anchor = scores.aggregate(last);
        let at = f.report.model.brier_at(scores.effective_sizes[last]).unwrap();
        assert!((at - anchor).abs() < 1e-12);
        let TrendModel::HardLift { lift, .. } = f.report.model else { panic!() };
        // hard trend is an exact quadratic, aggregate is its average with the easy line
        assert!((lift - (anchor - (-0.8 + 0.03 * 1.75 * 1.75))).abs() < 1e-12);
    }

    #[test]
    fn hard_lift_zero_when_anchor_on_fit() {
        let g = sort_and_group(&[0.0, -0.5, -1.0], &["a".into(), "b".into(), "c".into()], 3, MetricKind::BinaryBrierConditional).unwrap();
        // aggregate of each model equals its hard-group score when all groups move together
        let ms: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let vals: Vec<f64> = ms.iter().flat_map(|&m| {
            let h = -0.6 + 0.01 * m * m;
            [h, h, h]
        }).collect();
        let scores = ScoreMatrix::new(
            MetricKind::BinaryBrierConditional,
            (0..6).map(|i| format!("m{i}")).collect(),
            ms.clone(),
            vec!["a".into(), "b".into(), "c".into()],
            vals,
        ).unwrap();
        let acc: Vec<f64> = ms.iter().map(|m| 0.3 + 0.05 * m).collect();
        let data = ScalingData::new(&scores, &acc).unwrap();
        let split = split_by_threshold(&ms, 2.2).unwrap();
        let f = hard_lift(&data, &g, &split, 2).unwrap();
        let TrendModel::HardLift { lift, .. } = f.report.model else { panic!() };
        assert!(lift.abs() < 1e-12);
    }

    #[test]
    fn insufficient_training_models() {
        let (scores, acc) = synthetic(|m| -0.2 - 0.02 * m, |m| -0.8 + 0.03 * m * m, 8);
        let data = ScalingData::new(&scores, &acc).unwrap();
        let mut cfg = ForecastConfig::new(Method::Sandwich, 1.1);
        // M = 0, .25, .5, .75, 1.0 below T: five models cannot support degree 5
        assert!(matches!(run_forecast(&data, &cfg, None), Err(Error::Config(_))));
        cfg.easy_degree = 3;
        assert!(run_forecast(&data, &cfg, None).is_ok());
    }

    #[test]
    fn sweep_single_cell_matches_direct_call() {
        let (scores, acc) = synthetic(|m| -0.2 - 0.02 * m, |m| -0.8 + 0.03 * m * m, 14);
        let data = ScalingData::new(&scores, &acc).unwrap();
        let cells = robustness_sweep(&data, Method::Sandwich, 3, &[2.2], &[3], &[2]);
        assert_eq!(cells.len(), 1);
        let mut cfg = ForecastConfig::new(Method::Sandwich, 2.2);
        cfg.easy_degree = 3;
        let direct = run_forecast(&data, &cfg, None).unwrap();
        assert_eq!(cells[0].result.as_ref().unwrap(), &direct);
        assert_eq!(cells[0].tag(), "T2.2_e3_h2");
    }

    #[test]
    fn sweep_records_bad_cells() {
        let (scores, acc) = synthetic(|m| -0.2 - 0.02 * m, |m| -0.8 + 0.03 * m * m, 10);
        let data = ScalingData::new(&scores, &acc).unwrap();
        let cells = robustness_sweep(&data, Method::Sandwich, 3, &[1.6, 0.1], &[3, 7], &[2]);
        assert_eq!(cells.len(), 4);
        assert!(cells[0].result.is_ok());
        assert!(cells[1].result.is_err()); // degree 7 with 7 training models
        assert!(cells[2].result.is_err() && cells[3].result.is_err());
        let order: Vec<String> = cells.iter().map(SweepCell::tag).collect();
        assert_eq!(order, ["T1.6_e3_h2", "T1.6_e7_h2", "T0.1_e3_h2", "T0.1_e7_h2"]);
    }
}
