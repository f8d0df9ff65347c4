use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const PARAM_TOLERANCE: f64 = 1e-10;
const GRID_RATES: usize = 41;
const GRID_MIDPOINTS: usize = 61;
const MIN_RATE: f64 = 1e-8;
const DEGENERATE_GAP: f64 = 1e-6;

/// `y(x) = lower + (upper - lower) / (1 + exp(-rate * (x - midpoint)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub lower: f64,
    pub upper: f64,
    pub rate: f64,
    pub midpoint: f64,
    /// Sum of squared residuals on the training points.
    pub sse: f64,
    /// False when refinement hit the iteration cap; the grid solution is returned.
    pub converged: bool,
    /// True when the data are (nearly) flat and `upper - lower` collapsed.
    pub degenerate: bool,
}

impl SigmoidFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.lower + (self.upper - self.lower) * logistic(self.rate * (x - self.midpoint))
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy)]
struct Params {
    lower: f64,
    upper: f64,
    rate: f64,
    midpoint: f64,
}

impl Params {
    fn eval(&self, x: f64) -> f64 {
        self.lower + (self.upper - self.lower) * logistic(self.rate * (x - self.midpoint))
    }

    fn sse(&self, pts: &[(f64, f64)]) -> f64 {
        pts.iter()
            .map(|&(x, y)| {
                let r = y - self.eval(x);
                r * r
            })
            .sum()
    }

    fn clamped(self) -> Option<Params> {
        let p = Params {
            lower: self.lower.max(0.0),
            upper: self.upper.min(1.0),
            rate: self.rate.max(MIN_RATE),
            midpoint: self.midpoint,
        };
        (p.lower < p.upper && [p.lower, p.upper, p.rate, p.midpoint].iter().all(|v| v.is_finite()))
            .then_some(p)
    }

    fn max_abs_diff(&self, o: &Params) -> f64 {
        [
            self.lower - o.lower,
            self.upper - o.upper,
            self.rate - o.rate,
            self.midpoint - o.midpoint,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Best `(lower, upper)` for fixed `(rate, midpoint)` by linear least squares
/// on the basis `(1 - s, s)`.
fn solve_bounds(pts: &[(f64, f64)], rate: f64, midpoint: f64) -> Option<Params> {
    let (mut a, mut b, mut c, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let s = logistic(rate * (x - midpoint));
        let t = 1.0 - s;
        a += t * t;
        b += t * s;
        c += s * s;
        r1 += t * y;
        r2 += s * y;
    }
    let det = a * c - b * b;
    if det <= 1e-12 * a * c {
        return None;
    }
    Params {
        lower: (c * r1 - b * r2) / det,
        upper: (a * r2 - b * r1) / det,
        rate,
        midpoint,
    }
    .clamped()
}

fn grid_search(pts: &[(f64, f64)]) -> Option<(Params, f64)> {
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = (xmax - xmin).max(1e-9);
    let mut best: Option<(Params, f64)> = None;
    for i in 0..GRID_RATES {
        // rates from 0.1 to 100 per unit of x-span, geometric
        let rate = 0.1 * 1000f64.powf(i as f64 / (GRID_RATES - 1) as f64) / span;
        for j in 0..GRID_MIDPOINTS {
            let midpoint = xmin - 0.5 * span + 2.0 * span * j as f64 / (GRID_MIDPOINTS - 1) as f64;
            if let Some(p) = solve_bounds(pts, rate, midpoint) {
                let sse = p.sse(pts);
                if best.as_ref().is_none_or(|(_, b)| sse < *b) {
                    best = Some((p, sse));
                }
            }
        }
    }
    best
}

/// Gauss-Newton refinement with step halving. Returns the refined parameters
/// and whether the parameter change dropped below tolerance within the cap.
fn gauss_newton(pts: &[(f64, f64)], start: Params) -> (Params, bool) {
    let n = pts.len();
    let mut p = start;
    let mut sse = p.sse(pts);
    for _ in 0..MAX_ITERATIONS {
        let mut jac = DMatrix::<f64>::zeros(n, 4);
        let mut res = DVector::<f64>::zeros(n);
        let gap = p.upper - p.lower;
        for (i, &(x, y)) in pts.iter().enumerate() {
            let s = logistic(p.rate * (x - p.midpoint));
            let ds = s * (1.0 - s);
            jac[(i, 0)] = 1.0 - s;
            jac[(i, 1)] = s;
            jac[(i, 2)] = gap * ds * (x - p.midpoint);
            jac[(i, 3)] = -gap * ds * p.rate;
            res[i] = y - p.eval(x);
        }
        let Ok(step) = jac.svd(true, true).solve(&res, 1e-14) else {
            return (p, false);
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = Params {
                lower: p.lower + alpha * step[0],
                upper: p.upper + alpha * step[1],
                rate: p.rate + alpha * step[2],
                midpoint: p.midpoint + alpha * step[3],
            }
            .clamped();
            if let Some(c) = cand {
                let s = c.sse(pts);
                if s <= sse {
                    accepted = Some((c, s));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, next_sse)) = accepted else {
            // no descent direction left at working precision
            return (p, true);
        };
        let change = next.max_abs_diff(&p);
        p = next;
        sse = next_sse;
        if change < PARAM_TOLERANCE {
            return (p, true);
        }
    }
    (p, false)
}

/// Fits the four-parameter logistic to `(M, accuracy)` training points.
///
/// Grid search over `(rate, midpoint)` with closed-form bounds per cell, then
/// Gauss-Newton refinement. Bounds are kept in `0 <= lower < upper <= 1`.
pub fn fit_sigmoid_baseline(points: &[(f64, f64)]) -> Result<SigmoidFit> {
    if points.len() < 4 {
        return Err(Error::Config(format!(
            "sigmoid baseline needs at least 4 training points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Validation("non-finite point in sigmoid fit".into()));
    }
    let (ymin, ymax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let xmean = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;

    let flat = |level: f64| {
        let lower = level.clamp(0.0, 1.0 - 1e-9);
        let p = Params {
            lower,
            upper: lower + 1e-9,
            rate: 1.0,
            midpoint: xmean,
        };
        SigmoidFit {
            lower: p.lower,
            upper: p.upper,
            rate: p.rate,
            midpoint: p.midpoint,
            sse: p.sse(points),
            converged: true,
            degenerate: true,
        }
    };

    if ymax - ymin <= 1e-12 {
        return Ok(flat(ymin));
    }
    let Some((grid, _)) = grid_search(points) else {
        let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        return Ok(flat(mean));
    };
    let (refined, converged) = gauss_newton(points, grid);
    let p = if converged { refined } else { grid };
    Ok(SigmoidFit {
        lower: p.lower,
        upper: p.upper,
        rate: p.rate,
        midpoint: p.midpoint,
        sse: p.sse(points),
        converged,
        degenerate: p.upper - p.lower < DEGENERATE_GAP,
    })
}
