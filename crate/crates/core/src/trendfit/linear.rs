use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative spread of the regressor below which the map is undefined.
pub const DEGENERATE_SPREAD: f64 = 1e-12;

/// `y = slope * x + intercept`, fitted by ordinary least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearMap {
    pub const IDENTITY: LinearMap = LinearMap {
        slope: 1.0,
        intercept: 0.0,
    };

    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// OLS line through `(brier, accuracy)` training pairs.
pub fn fit_brier_to_acc_map(pairs: &[(f64, f64)]) -> Result<LinearMap> {
    if pairs.len() < 2 {
        return Err(Error::Config(format!(
            "the accuracy map needs at least 2 training models, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Validation("non-finite pair in accuracy map fit".into()));
    }
    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    // a spread at rounding level carries no signal
    if hi - lo <= DEGENERATE_SPREAD * lo.abs().max(hi.abs()).max(1.0) {
        return Err(Error::Degenerate(
            "all training Brier scores are identical; accuracy map is undefined".into(),
        ));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    Ok(LinearMap {
        slope,
        intercept: my - slope * mx,
    })
}
