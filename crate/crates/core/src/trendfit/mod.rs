//! Trend fitting and forecasting.
//!
//! The continuous-metric trend of the easiest and hardest question groups is
//! fitted with low-degree polynomials on the models below the emergence
//! threshold. Their average is the forecast of the aggregate score
//! ([`sandwich`]); an OLS line from aggregate score to accuracy, shifted so the
//! training-set mean accuracy is reproduced exactly, turns it into an accuracy
//! forecast ([`project_to_accuracy`]). [`hard_lift`] uses the hard group alone,
//! and [`sigmoid_baseline`] regresses accuracy on `M` directly.

mod forecast;
mod linear;
mod poly;
mod sigmoid;

pub use forecast::{
    calibration_constant, forecast_grid, hard_lift, project_to_accuracy, robustness_sweep,
    run_forecast, sandwich, sigmoid_baseline, slice_and_sandwich, FitReport, Forecast,
    ForecastConfig, ForecastPoint, ForecastSeries, Method, ScalingData, SweepCell, TrendModel,
    DEFAULT_EASY_DEGREE, DEFAULT_HARD_DEGREE, SWEEP_EASY_DEGREES, SWEEP_HARD_DEGREES,
};
pub use linear::{fit_brier_to_acc_map, LinearMap, DEGENERATE_SPREAD};
pub use poly::{fit_polynomial, PolyFit};
pub use sigmoid::{fit_sigmoid_baseline, SigmoidFit, MAX_ITERATIONS, PARAM_TOLERANCE};
