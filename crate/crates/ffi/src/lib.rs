//! C ABI over `soar-core`.
//!
//! Objects are opaque heap handles created by `soar_*_load` / `soar_*_compute`
//! / `soar_*_run` and released with the matching `soar_*_free`. Every function
//! returns a [`SoarStatus`]; results come back through out-pointers. On a
//! non-OK status, `soar_last_error_message` describes the failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use soar::ingest::{effective_model_size, load_evals, load_manifest, EvalTable};
use soar::metrics::{binary_brier_question, conditional_prob, score_matrix, MetricKind, ScoreMatrix};
use soar::stats::{kendall, pearson, spearman};
use soar::trendfit::{run_forecast, Forecast, ForecastConfig, Method, ScalingData};
use soar::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoarStatus {
    Ok = 0,
    /// Malformed input data or files.
    Validation = 1,
    /// Degenerate data or a failed numerical solve.
    Numerical = 2,
    Io = 3,
    NullPointer = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoarMetric {
    Accuracy = 0,
    BrierStandard = 1,
    BinaryBrierRaw = 2,
    BinaryBrierConditional = 3,
    TokenEditDistance = 4,
    ModifiedCosineSimilarity = 5,
}

impl From<SoarMetric> for MetricKind {
    fn from(m: SoarMetric) -> Self {
        match m {
            SoarMetric::Accuracy => MetricKind::Accuracy,
            SoarMetric::BrierStandard => MetricKind::BrierStandard,
            SoarMetric::BinaryBrierRaw => MetricKind::BinaryBrierRaw,
            SoarMetric::BinaryBrierConditional => MetricKind::BinaryBrierConditional,
            SoarMetric::TokenEditDistance => MetricKind::TokenEditDistance,
            SoarMetric::ModifiedCosineSimilarity => MetricKind::ModifiedCosineSimilarity,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoarMethod {
    Sandwich = 0,
    HardLift = 1,
    SigmoidBaseline = 2,
}

impl From<SoarMethod> for Method {
    fn from(m: SoarMethod) -> Self {
        match m {
            SoarMethod::Sandwich => Method::Sandwich,
            SoarMethod::HardLift => Method::HardLift,
            SoarMethod::SigmoidBaseline => Method::SigmoidBaseline,
        }
    }
}

/// One sample of a forecast curve. `predicted_brier` is NaN for the
/// sigmoid baseline.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoarForecastPoint {
    pub m: f64,
    pub predicted_brier: f64,
    pub predicted_accuracy: f64,
    pub is_train_region: bool,
}

/// Loaded models manifest and evaluation records.
pub struct SoarDataset {
    table: EvalTable,
}

/// Models x questions score matrix.
pub struct SoarScores {
    matrix: ScoreMatrix,
}

pub struct SoarForecast {
    forecast: Forecast,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SoarStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => SoarStatus::Io,
            Error::Parse { .. } | Error::Validation(_) => SoarStatus::Validation,
            Error::Config(_) => SoarStatus::InvalidArgument,
            Error::Degenerate(_) | Error::Numerical(_) => SoarStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SoarStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> Failure {
    Failure(SoarStatus::InvalidArgument, msg)
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SoarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SoarStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            SoarStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn floats<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

/// Message for the last failing call on this thread; empty after a success.
/// The pointer stays valid until the next `soar_*` call on the same thread.
#[no_mangle]
pub extern "C" fn soar_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads `models.csv` and `evals.jsonl`.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_dataset_load(
    models_path: *const c_char,
    evals_path: *const c_char,
    out: *mut *mut SoarDataset,
) -> SoarStatus {
    guard(|| {
        let models = str_arg(models_path, "models_path")?;
        let evals = str_arg(evals_path, "evals_path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let manifest = load_manifest(models)?;
        let table = load_evals(evals, &manifest)?;
        write(out, Box::into_raw(Box::new(SoarDataset { table })), "out")
    })
}

/// # Safety
/// `dataset` must come from `soar_dataset_load` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn soar_dataset_free(dataset: *mut SoarDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `dataset` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_dataset_shape(
    dataset: *const SoarDataset,
    n_models: *mut usize,
    n_questions: *mut usize,
) -> SoarStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        write(n_models, d.table.n_models(), "n_models")?;
        write(n_questions, d.table.n_questions(), "n_questions")
    })
}

/// Scores every (model, question) pair. Rows are ordered by ascending
/// effective size, columns by question id.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scores_compute(
    dataset: *const SoarDataset,
    metric: SoarMetric,
    out: *mut *mut SoarScores,
) -> SoarStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let matrix = score_matrix(&d.table, metric.into())?;
        write(out, Box::into_raw(Box::new(SoarScores { matrix })), "out")
    })
}

/// # Safety
/// `scores` must come from `soar_scores_compute` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn soar_scores_free(scores: *mut SoarScores) {
    if !scores.is_null() {
        drop(Box::from_raw(scores));
    }
}

/// # Safety
/// `scores` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scores_shape(
    scores: *const SoarScores,
    n_models: *mut usize,
    n_questions: *mut usize,
) -> SoarStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        write(n_models, s.matrix.n_models(), "n_models")?;
        write(n_questions, s.matrix.n_questions(), "n_questions")
    })
}

fn check_model(s: &SoarScores, model: usize) -> Result<(), Failure> {
    if model >= s.matrix.n_models() {
        return Err(invalid(format!("model index {model} out of range ({})", s.matrix.n_models())));
    }
    Ok(())
}

/// # Safety
/// `scores` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scores_get(
    scores: *const SoarScores,
    model: usize,
    question: usize,
    out: *mut f64,
) -> SoarStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        check_model(s, model)?;
        if question >= s.matrix.n_questions() {
            return Err(invalid(format!(
                "question index {question} out of range ({})",
                s.matrix.n_questions()
            )));
        }
        write(out, s.matrix.get(model, question), "out")
    })
}

/// Mean score of one model over all questions.
///
/// # Safety
/// `scores` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scores_aggregate(scores: *const SoarScores, model: usize, out: *mut f64) -> SoarStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        check_model(s, model)?;
        write(out, s.matrix.aggregate(model), "out")
    })
}

/// # Safety
/// `scores` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_scores_effective_size(
    scores: *const SoarScores,
    model: usize,
    out: *mut f64,
) -> SoarStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        check_model(s, model)?;
        write(out, s.matrix.effective_sizes[model], "out")
    })
}

/// Runs one forecasting method. `scores` is the continuous-metric matrix,
/// `accuracy` the accuracy matrix of the same models; only its per-model
/// aggregates are used.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_forecast_run(
    scores: *const SoarScores,
    accuracy: *const SoarScores,
    method: SoarMethod,
    threshold: f64,
    groups: usize,
    easy_degree: usize,
    hard_degree: usize,
    out: *mut *mut SoarForecast,
) -> SoarStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        let a = handle(accuracy, "accuracy")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if s.matrix.model_ids != a.matrix.model_ids {
            return Err(invalid("scores and accuracy cover different models".into()));
        }
        let acc = a.matrix.aggregates();
        let data = ScalingData::new(&s.matrix, &acc)?;
        let config = ForecastConfig {
            method: method.into(),
            threshold,
            groups,
            easy_degree,
            hard_degree,
        };
        let forecast = run_forecast(&data, &config, None)?;
        write(out, Box::into_raw(Box::new(SoarForecast { forecast })), "out")
    })
}

/// # Safety
/// `forecast` must come from `soar_forecast_run` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn soar_forecast_free(forecast: *mut SoarForecast) {
    if !forecast.is_null() {
        drop(Box::from_raw(forecast));
    }
}

/// Number of samples on the forecast grid.
///
/// # Safety
/// `forecast` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_forecast_len(forecast: *const SoarForecast, out: *mut usize) -> SoarStatus {
    guard(|| {
        let f = handle(forecast, "forecast")?;
        write(out, f.forecast.series.points.len(), "out")
    })
}

/// # Safety
/// `forecast` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_forecast_point(
    forecast: *const SoarForecast,
    index: usize,
    out: *mut SoarForecastPoint,
) -> SoarStatus {
    guard(|| {
        let f = handle(forecast, "forecast")?;
        let p = f
            .forecast
            .series
            .points
            .get(index)
            .ok_or_else(|| invalid(format!("point index {index} out of range")))?;
        write(
            out,
            SoarForecastPoint {
                m: p.m,
                predicted_brier: p.predicted_brier.unwrap_or(f64::NAN),
                predicted_accuracy: p.predicted_accuracy,
                is_train_region: p.is_train_region,
            },
            "out",
        )
    })
}

/// Predicted accuracy at an arbitrary effective size.
///
/// # Safety
/// `forecast` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_forecast_accuracy_at(forecast: *const SoarForecast, m: f64, out: *mut f64) -> SoarStatus {
    guard(|| {
        let f = handle(forecast, "forecast")?;
        write(out, f.forecast.accuracy_at(m), "out")
    })
}

/// Root-mean-square accuracy error over the held-out models (NaN if none).
///
/// # Safety
/// `forecast` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_forecast_test_rmse(forecast: *const SoarForecast, out: *mut f64) -> SoarStatus {
    guard(|| {
        let f = handle(forecast, "forecast")?;
        write(out, f.forecast.test_rmse(), "out")
    })
}

/// `log10(compute_flops / 1e21)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_effective_model_size(compute_flops: f64, out: *mut f64) -> SoarStatus {
    guard(|| write(out, effective_model_size(compute_flops)?, "out"))
}

/// `-(p - 1)^2` for a probability `p` on the correct choice.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_binary_brier(p: f64, out: *mut f64) -> SoarStatus {
    guard(|| write(out, binary_brier_question(p)?, "out"))
}

/// Share of the total choice mass held by `correct_index`.
///
/// # Safety
/// `probs` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_conditional_prob(
    probs: *const f64,
    n: usize,
    correct_index: usize,
    out: *mut f64,
) -> SoarStatus {
    guard(|| {
        let probs = floats(probs, n, "probs")?;
        if correct_index >= n {
            return Err(invalid(format!("correct_index {correct_index} out of range ({n})")));
        }
        write(out, conditional_prob(probs, correct_index)?, "out")
    })
}

unsafe fn correlation(
    f: fn(&[f64], &[f64]) -> soar::Result<f64>,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> SoarStatus {
    guard(|| {
        let x = floats(x, n, "x")?;
        let y = floats(y, n, "y")?;
        write(out, f(x, y)?, "out")
    })
}

/// # Safety
/// `x` and `y` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_pearson(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> SoarStatus {
    correlation(pearson, x, y, n, out)
}

/// # Safety
/// `x` and `y` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_spearman(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> SoarStatus {
    correlation(spearman, x, y, n, out)
}

/// # Safety
/// `x` and `y` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soar_kendall_tau_b(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> SoarStatus {
    correlation(kendall, x, y, n, out)
}

/// Writes the `groups + 1` cut points `floor(i * n / groups)` into `out`,
/// which must have room for `out_len >= groups + 1` entries.
///
/// # Safety
/// `out` must point to `out_len` writable `size_t` slots.
#[no_mangle]
pub unsafe extern "C" fn soar_group_boundaries(n: usize, groups: usize, out: *mut usize, out_len: usize) -> SoarStatus {
    guard(|| {
        if groups == 0 || groups > n {
            return Err(invalid(format!("cannot cut {n} questions into {groups} groups")));
        }
        if out_len < groups + 1 {
            return Err(invalid(format!("output buffer holds {out_len}, need {}", groups + 1)));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let b = soar::difficulty::group_boundaries(n, groups);
        ptr::copy_nonoverlapping(b.as_ptr(), out, b.len());
        Ok(())
    })
}
