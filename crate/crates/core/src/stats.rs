//! Correlation coefficients between per-model metric aggregates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::MetricKind;

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "correlation inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Validation(
            "correlation needs at least 2 observations".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in correlation input".into()));
    }
    Ok(())
}

fn constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Sample Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if constant(x) || constant(y) {
        return Err(Error::Degenerate("zero variance in correlation input".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based fractional ranks; tied values share the mean of their positions.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation: Pearson on midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&midranks(x), &midranks(y))
}

/// Number of pairs within runs of equal values of a sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` in place and returns the number of inversions (strictly greater
/// element before a smaller one).
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall tau-b, O(n log n) (Knight's algorithm).
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tied_pairs(&xs);
    let n3 = tied_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys);

    if n0 == n1 || n0 == n2 {
        return Err(Error::Degenerate(
            "all pairs tied in one variable; Kendall tau-b undefined".into(),
        ));
    }
    // concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
    let num = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    let den = ((n0 - n1) as f64).sqrt() * ((n0 - n2) as f64).sqrt();
    Ok((num / den).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub metric_a: MetricKind,
    pub metric_b: MetricKind,
    pub pearson: Result<f64, String>,
    pub spearman: Result<f64, String>,
    pub kendall: Result<f64, String>,
    pub n: usize,
}

/// All three coefficients; a degenerate coefficient is kept as its message.
pub fn correlate(
    metric_a: MetricKind,
    a: &[f64],
    metric_b: MetricKind,
    b: &[f64],
) -> Result<CorrelationReport> {
    check_pair(a, b)?;
    let keep = |r: Result<f64>| r.map_err(|e| e.to_string());
    Ok(CorrelationReport {
        metric_a,
        metric_b,
        pearson: keep(pearson(a, b)),
        spearman: keep(spearman(a, b)),
        kendall: keep(kendall(a, b)),
        n: a.len(),
    })
}
