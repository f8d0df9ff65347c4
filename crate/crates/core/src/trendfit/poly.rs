use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares polynomial in one variable.
///
/// The fit is computed in a centered and scaled variable
/// `t = (x - center) / scale` and evaluated there; `coefficients` holds the
/// same polynomial expanded in the original `x` basis (constant term first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    /// `[min x, max x]` of the fitted data.
    pub domain: [f64; 2],
    center: f64,
    scale: f64,
    scaled_coefficients: Vec<f64>,
}

impl PolyFit {
    /// A polynomial given directly by its coefficients in `x`.
    pub fn from_coefficients(coefficients: Vec<f64>, domain: [f64; 2]) -> Self {
        Self {
            degree: coefficients.len().saturating_sub(1),
            scaled_coefficients: coefficients.clone(),
            coefficients,
            domain,
            center: 0.0,
            scale: 1.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.scale;
        self.scaled_coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * t + c)
    }

    /// Sum of squared residuals on `points`.
    pub fn sse(&self, points: &[(f64, f64)]) -> f64 {
        points
            .iter()
            .map(|&(x, y)| {
                let r = y - self.eval(x);
                r * r
            })
            .sum()
    }
}

fn distinct_count(xs: &mut [f64]) -> usize {
    xs.sort_by(f64::total_cmp);
    let mut n = 0;
    let mut prev: Option<f64> = None;
    for &x in xs.iter() {
        if prev != Some(x) {
            n += 1;
            prev = Some(x);
        }
    }
    n
}

/// `c_k` such that `sum_k a_k ((x - center) / scale)^k = sum_k c_k x^k`.
fn expand_to_x_basis(scaled: &[f64], center: f64, scale: f64) -> Vec<f64> {
    let d = scaled.len();
    let mut out = vec![0.0; d];
    // (x - center)^k built up by repeated multiplication
    let mut power = vec![1.0];
    for (k, &a) in scaled.iter().enumerate() {
        let factor = a / scale.powi(k as i32);
        for (j, &p) in power.iter().enumerate() {
            out[j] += factor * p;
        }
        if k + 1 < d {
            let mut next = vec![0.0; power.len() + 1];
            for (j, &p) in power.iter().enumerate() {
                next[j + 1] += p;
                next[j] -= center * p;
            }
            power = next;
        }
    }
    out
}

/// Least-squares fit of a degree-`degree` polynomial through `points`, solved
/// by a QR decomposition of the scaled Vandermonde matrix.
pub fn fit_polynomial(points: &[(f64, f64)], degree: usize) -> Result<PolyFit> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Validation("non-finite point in polynomial fit".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let distinct = distinct_count(&mut xs);
    if distinct < degree + 1 {
        return Err(Error::Numerical(format!(
            "degree {degree} fit needs {} distinct x values, got {distinct}",
            degree + 1
        )));
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let center = 0.5 * (lo + hi);
    let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };

    let n = points.len();
    let cols = degree + 1;
    let mut a = DMatrix::<f64>::zeros(n, cols);
    for (i, &(x, _)) in points.iter().enumerate() {
        let t = (x - center) / scale;
        let mut v = 1.0;
        for j in 0..cols {
            a[(i, j)] = v;
            v *= t;
        }
    }
    let y = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| r[(i, i)].abs() <= 1e-13 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(Error::Numerical(format!(
            "rank-deficient Vandermonde system for degree {degree}"
        )));
    }
    let qty = qr.q().transpose() * y;
    let sol = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;
    let scaled: Vec<f64> = sol.iter().copied().collect();
    if scaled.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("non-finite polynomial coefficients".into()));
    }
    Ok(PolyFit {
        degree,
        coefficients: expand_to_x_basis(&scaled, center, scale),
        domain: [lo, hi],
        center,
        scale,
        scaled_coefficients: scaled,
    })
}
