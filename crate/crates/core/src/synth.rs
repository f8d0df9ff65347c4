//! Synthetic evaluation corpora with planted per-difficulty scaling shapes.
//!
//! Every question gets a latent difficulty `d` in `[0, 1]` and a planted
//! conditional binary Brier trajectory `b*(M, d)`. The trajectory is linear in
//! `d` between an easy archetype (rise, dip ending at the threshold, then a
//! steady rise) and a hard archetype (fall, trough, rise), so group means of
//! the recovered scores equal the planted curve at the group-mean difficulty.
//!
//! Below the threshold the two archetypes mirror each other around the
//! accuracy boundary `beta0`, which keeps aggregate accuracy on a plateau.
//!
//! All randomness is drawn from a ChaCha stream keyed by the cell, so the
//! output does not depend on generation order or thread count.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{write_evals, write_manifest, ChoiceEval, EvalTable, Manifest, ModelRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Emergent,
    NonEmergent,
    Flat,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Emergent => "emergent",
            Scenario::NonEmergent => "non_emergent",
            Scenario::Flat => "flat",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "emergent" => Ok(Scenario::Emergent),
            "non_emergent" | "non-emergent" => Ok(Scenario::NonEmergent),
            "flat" => Ok(Scenario::Flat),
            _ => Err(Error::Config(format!(
                "unknown scenario {s:?} (expected emergent, non_emergent or flat)"
            ))),
        }
    }
}

/// Smallest question count accepted: three forecasting groups of three.
pub const MIN_QUESTIONS: usize = 9;
pub const MIN_MODELS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n_models: usize,
    pub n_questions: usize,
    pub m_range: [f64; 2],
    pub planted_threshold: f64,
    pub noise_sd: f64,
    pub seed: u64,
    pub n_choices: usize,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            n_models: 30,
            n_questions: 300,
            m_range: [-1.0, 2.5],
            planted_threshold: 1.5,
            noise_sd: 0.01,
            seed: 0,
            n_choices: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.m_range;
        let bad = |msg: String| Err(Error::Config(format!("infeasible scenario: {msg}")));
        if self.n_models < MIN_MODELS {
            return bad(format!("need at least {MIN_MODELS} models, got {}", self.n_models));
        }
        if self.n_questions < MIN_QUESTIONS {
            return bad(format!(
                "need at least {MIN_QUESTIONS} questions, got {}",
                self.n_questions
            ));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("M range [{lo}, {hi}] is empty"));
        }
        if !(self.planted_threshold > lo && self.planted_threshold < hi) {
            return bad(format!(
                "planted threshold {} outside ({lo}, {hi})",
                self.planted_threshold
            ));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd {} must be non-negative", self.noise_sd));
        }
        if self.n_choices < 2 {
            return bad(format!("need at least 2 choices, got {}", self.n_choices));
        }
        Ok(())
    }

    pub fn effective_sizes(&self) -> Vec<f64> {
        let [lo, hi] = self.m_range;
        (0..self.n_models)
            .map(|i| lo + (hi - lo) * i as f64 / (self.n_models - 1) as f64)
            .collect()
    }

    /// Latent difficulty of each question: one stratified draw per slot.
    pub fn latent_difficulties(&self) -> Vec<f64> {
        let n = self.n_questions as f64;
        (0..self.n_questions)
            .map(|q| {
                let mut rng = cell_rng(self.seed, QUESTION_STREAM | q as u64);
                let u: f64 = Uniform::new(0.0, 1.0).unwrap().sample(&mut rng);
                (q as f64 + u) / n
            })
            .collect()
    }

    /// Accuracy boundary on the conditional probability of the correct choice.
    pub fn accuracy_boundary(&self) -> f64 {
        let rho = distractor_share(self.n_choices);
        rho / (1.0 + rho)
    }

    /// Planted conditional binary Brier score at size `m` and difficulty `d`.
    pub fn planted_brier(&self, m: f64, d: f64) -> f64 {
        let theta = self.accuracy_boundary();
        let beta0 = -(1.0 - theta) * (1.0 - theta);
        let scale = -beta0;
        let [lo, hi] = self.m_range;
        let t = self.planted_threshold;
        let split = 0.15 * scale * (0.5 - d).signum() + 0.6 * scale * (0.5 - d);
        let b = match self.scenario {
            Scenario::Flat => beta0 + split,
            Scenario::NonEmergent => {
                let u = ((m - lo) / (hi - lo)).clamp(0.0, 1.0);
                beta0 + split + 0.3 * scale * u
            }
            Scenario::Emergent => {
                let (easy, hard) = emergent_archetypes(m, lo, t, hi, beta0);
                (1.0 - d) * easy + d * hard
            }
        };
        b.clamp(-1.0, 0.0)
    }

    pub fn is_noiseless(&self) -> bool {
        self.noise_sd == 0.0
    }
}

/// Easy and hard planted Brier at `m`.
fn emergent_archetypes(m: f64, lo: f64, t: f64, hi: f64, beta0: f64) -> (f64, f64) {
    let scale = -beta0;
    if m < t {
        let f = ((m - lo) / (t - lo)).max(0.0);
        let offset = scale * easy_offset().eval(f);
        let drift = DRIFT * scale * (std::f64::consts::PI * f).sin();
        (beta0 + offset + drift, beta0 - offset + drift)
    } else {
        let r = ((m - t) / (hi - t)).min(1.0);
        let offset = scale * easy_offset().eval(1.0);
        let (e0, h0) = (beta0 + offset, beta0 - offset);
        (
            e0 + (EASY_FINAL - e0) * r * r,
            h0 + (HARD_FINAL - h0) * r * r,
        )
    }
}

const EASY_FINAL: f64 = -0.01;
const HARD_FINAL: f64 = -0.12;
/// Amplitude of the common non-monotone wobble below the threshold.
const DRIFT: f64 = 0.02;

/// Easy-archetype lift above the boundary, in units of `|beta0|`, over the
/// normalized pre-threshold axis. Peaks early, bottoms out at the threshold.
fn easy_offset() -> ClampedSpline {
    ClampedSpline::new(&[(0.0, 0.4), (0.45, 0.93), (1.0, 0.4)], 2.0, 0.0)
}

/// Share of the non-correct mass placed on the strongest distractor.
fn distractor_share(n_choices: usize) -> f64 {
    if n_choices == 2 {
        1.0
    } else {
        0.6
    }
}

/// Cubic spline through control points with prescribed end slopes.
#[derive(Debug, Clone)]
pub struct ClampedSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl ClampedSpline {
    pub fn new(points: &[(f64, f64)], start_slope: f64, end_slope: f64) -> Self {
        let n = points.len();
        assert!(n >= 2, "spline needs two control points");
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        // tridiagonal system for second derivatives
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 6.0 * ((ys[1] - ys[0]) / h[0] - start_slope);
        for i in 1..n - 1 {
            lower[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        lower[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (end_slope - (ys[n - 1] - ys[n - 2]) / h[n - 2]);
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - upper[i] * second[i + 1]) / diag[i];
        }
        Self { xs, ys, second }
    }

    /// Evaluates the spline; outside the knots the end segment is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.iter().rposition(|&k| k <= x) {
            None => 0,
            Some(i) => i.min(n - 2),
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - x) / h, (x - x0) / h);
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }
}

const QUESTION_STREAM: u64 = 1 << 62;
const MODEL_STREAM: u64 = 1 << 61;

fn cell_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Turns a planted conditional correct-choice probability into a full record.
/// Total mass on the choices is `mass`; the strongest distractor sits right
/// after the correct choice.
fn realize_record(
    model_id: &str,
    question_id: &str,
    p: f64,
    mass: f64,
    n_choices: usize,
    correct_index: usize,
) -> ChoiceEval {
    let rho = distractor_share(n_choices);
    let rest = (1.0 - p) * mass;
    let mut probs = vec![0.0; n_choices];
    probs[correct_index] = p * mass;
    let distractor = (correct_index + 1) % n_choices;
    probs[distractor] = rho * rest;
    if n_choices > 2 {
        let share = (1.0 - rho) * rest / (n_choices - 2) as f64;
        for (i, slot) in probs.iter_mut().enumerate() {
            if i != correct_index && i != distractor {
                *slot = share;
            }
        }
    }
    ChoiceEval {
        model_id: model_id.to_string(),
        question_id: question_id.to_string(),
        choice_probs: probs,
        correct_index,
        prediction: None,
        target: None,
    }
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    let width = (n.max(2) - 1).to_string().len();
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Builds a corpus from an arbitrary planted Brier function
/// `target(model_index, question_index)`. `noise_sd` perturbs the conditional
/// correct-choice probability; `seed` keys all randomness.
pub fn realize(
    effective_sizes: &[f64],
    n_questions: usize,
    n_choices: usize,
    noise_sd: f64,
    seed: u64,
    target: &(dyn Fn(usize, usize) -> f64 + Sync),
) -> Result<(Manifest, EvalTable)> {
    let model_ids = ids("m", effective_sizes.len());
    let question_ids = ids("q", n_questions);
    let manifest = Manifest::new(
        model_ids
            .iter()
            .zip(effective_sizes)
            .map(|(id, &m)| ModelRecord::with_size(id.clone(), m))
            .collect::<Result<_>>()?,
    )?;
    let correct: Vec<usize> = (0..n_questions)
        .map(|q| {
            let mut rng = cell_rng(seed, QUESTION_STREAM | (1 << 40) | q as u64);
            Uniform::new(0, n_choices).unwrap().sample(&mut rng)
        })
        .collect();
    let unit = Uniform::new_inclusive(0.0, 1.0).unwrap();
    let records: Vec<ChoiceEval> = (0..effective_sizes.len())
        .into_par_iter()
        .flat_map_iter(|m| {
            let mut model_rng = cell_rng(seed, MODEL_STREAM | m as u64);
            let base_mass: f64 = 0.6 + 0.4 * unit.sample(&mut model_rng);
            let (model_ids, question_ids, correct) = (&model_ids, &question_ids, &correct);
            (0..n_questions).map(move |q| {
                let mut rng = cell_rng(seed, (m * n_questions + q) as u64);
                let z: f64 = StandardNormal.sample(&mut rng);
                let jitter: f64 = 0.1 * unit.sample(&mut rng) - 0.05;
                let b = target(m, q).clamp(-1.0, 0.0);
                let p = (1.0 - (-b).sqrt() + noise_sd * z).clamp(0.0, 1.0);
                let mass = (base_mass + jitter).clamp(0.6, 1.0);
                realize_record(&model_ids[m], &question_ids[q], p, mass, n_choices, correct[q])
            })
        })
        .collect();
    let table = EvalTable::from_records(manifest.clone(), records)?;
    Ok((manifest, table))
}

/// Generates the corpus described by `spec`.
pub fn generate(spec: &ScenarioSpec) -> Result<(Manifest, EvalTable)> {
    spec.validate()?;
    let ms = spec.effective_sizes();
    let d = spec.latent_difficulties();
    realize(
        &ms,
        spec.n_questions,
        spec.n_choices,
        spec.noise_sd,
        spec.seed,
        &|m, q| spec.planted_brier(ms[m], d[q]),
    )
}

/// Writes `models.csv` and `evals.jsonl` into `dir`.
pub fn write_corpus(manifest: &Manifest, table: &EvalTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut models = Vec::new();
    write_manifest(manifest, &mut models)?;
    let path = dir.join("models.csv");
    fs::write(&path, models).map_err(|e| Error::io(&path, e))?;
    let mut evals = Vec::new();
    write_evals(table, &mut evals)?;
    let path = dir.join("evals.jsonl");
    fs::write(&path, evals).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::difficulty::{difficulties, group_questions, group_series};
    use crate::ingest::split_by_threshold;
    use crate::metrics::{score_matrix, MetricKind};
    use crate::stats::kendall;

    fn small(scenario: Scenario) -> ScenarioSpec {
        ScenarioSpec {
            n_models: 16,
            n_questions: 60,
            ..ScenarioSpec::new(scenario)
        }
    }

    #[test]
    fn spline_hits_knots_and_slopes() {
        let s = ClampedSpline::new(&[(0.0, 1.0), (1.0, 2.0), (3.0, 0.0)], 0.5, -1.0);
        for (x, y) in [(0.0, 1.0), (1.0, 2.0), (3.0, 0.0)] {
            assert!((s.eval(x) - y).abs() < 1e-12);
        }
        let h = 1e-6;
        assert!(((s.eval(h) - s.eval(0.0)) / h - 0.5).abs() < 1e-4);
        assert!(((s.eval(3.0) - s.eval(3.0 - h)) / h + 1.0).abs() < 1e-4);
    }

    #[test]
    fn infeasible_specs() {
        let mut s = small(Scenario::Emergent);
        s.n_questions = 5;
        assert!(matches!(generate(&s), Err(Error::Config(_))));
        let mut s = small(Scenario::Emergent);
        s.planted_threshold = 9.0;
        assert!(generate(&s).is_err());
        let mut s = small(Scenario::Emergent);
        s.n_models = 3;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn deterministic_and_valid() {
        let spec = small(Scenario::Emergent);
        let (m1, t1) = generate(&spec).unwrap();
        let (m2, t2) = generate(&spec).unwrap();
        assert_eq!(m1, m2);
        for m in 0..t1.n_models() {
            assert_eq!(t1.model_records(m), t2.model_records(m));
            for r in t1.model_records(m) {
                r.validate().unwrap();
            }
        }
        let mut other = spec.clone();
        other.seed = 99;
        let (_, t3) = generate(&other).unwrap();
        assert_ne!(t1.model_records(3), t3.model_records(3));
    }

    #[test]
    fn noiseless_series_match_planted_curves() {
        let spec = ScenarioSpec {
            noise_sd: 0.0,
            ..small(Scenario::Emergent)
        };
        let (_, table) = generate(&spec).unwrap();
        let scores = score_matrix(&table, MetricKind::BinaryBrierConditional).unwrap();
        let split = split_by_threshold(&scores.effective_sizes, spec.planted_threshold).unwrap();
        let grouping = group_questions(&scores, &split, 3).unwrap();
        let d = spec.latent_difficulties();
        // noiseless recovery keeps the latent order exactly
        let mut latent_order: Vec<usize> = (0..d.len()).collect();
        latent_order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        assert_eq!(grouping.order, latent_order);
        for (g, series) in group_series(&scores, &grouping).unwrap().iter().enumerate() {
            let members = grouping.members(g);
            let dbar = members.iter().map(|&q| d[q]).sum::<f64>() / members.len() as f64;
            for &(m, v) in &series.points {
                assert!((v - spec.planted_brier(m, dbar)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recovered_difficulty_tracks_latent() {
        let spec = ScenarioSpec::new(Scenario::Emergent);
        let (_, table) = generate(&spec).unwrap();
        let scores = score_matrix(&table, MetricKind::BinaryBrierConditional).unwrap();
        let split = split_by_threshold(&scores.effective_sizes, spec.planted_threshold).unwrap();
        let recovered = difficulties(&scores, &split).unwrap();
        let latent: Vec<f64> = spec.latent_difficulties().iter().map(|d| -d).collect();
        assert!(kendall(&latent, &recovered).unwrap() > 0.9);
    }

    #[test]
    fn emergent_accuracy_plateau_then_soar() {
        let spec = ScenarioSpec::new(Scenario::Emergent);
        let (_, table) = generate(&spec).unwrap();
        let acc = score_matrix(&table, MetricKind::Accuracy).unwrap().aggregates();
        let ms = spec.effective_sizes();
        let below: Vec<f64> = ms.iter().zip(&acc).filter(|(m, _)| **m < spec.planted_threshold).map(|p| *p.1).collect();
        let lo = below.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 0.05, "plateau spread {}", hi - lo);
        let plateau = below.iter().sum::<f64>() / below.len() as f64;
        assert!(acc[acc.len() - 1] > plateau + 0.2);
    }

    #[test]
    fn emergent_group_shapes() {
        let spec = ScenarioSpec {
            noise_sd: 0.0,
            ..ScenarioSpec::new(Scenario::Emergent)
        };
        let (_, table) = generate(&spec).unwrap();
        let scores = score_matrix(&table, MetricKind::BinaryBrierConditional).unwrap();
        let split = split_by_threshold(&scores.effective_sizes, spec.planted_threshold).unwrap();
        let grouping = group_questions(&scores, &split, 3).unwrap();
        let series = group_series(&scores, &grouping).unwrap();
        let argext = |v: &[f64], max: bool| {
            (0..v.len())
                .max_by(|&a, &b| if max { v[a].total_cmp(&v[b]) } else { v[b].total_cmp(&v[a]) })
                .unwrap()
        };
        let n_train = split.n_train();
        let easy = series[0].values();
        let peak = argext(&easy[..n_train], true);
        assert!(peak > 0 && peak < n_train - 1, "easy peak at {peak}");
        assert!(easy[n_train - 1] < easy[peak]);
        assert!(easy[easy.len() - 1] > easy[peak]);
        let hard = series[2].values();
        let trough = argext(&hard[..n_train], false);
        assert!(trough > 0 && trough < n_train - 1, "hard trough at {trough}");
        assert!(hard[n_train - 1] > hard[trough]);
    }

    #[test]
    fn flat_series_are_constant() {
        let spec = ScenarioSpec {
            noise_sd: 0.0,
            ..small(Scenario::Flat)
        };
        let (_, table) = generate(&spec).unwrap();
        let scores = score_matrix(&table, MetricKind::BinaryBrierConditional).unwrap();
        let split = split_by_threshold(&scores.effective_sizes, spec.planted_threshold).unwrap();
        let grouping = group_questions(&scores, &split, 3).unwrap();
        for s in group_series(&scores, &grouping).unwrap() {
            let v0 = s.points[0].1;
            assert!(s.points.iter().all(|p| (p.1 - v0).abs() < 1e-12));
        }
    }

    #[test]
    fn raw_and_conditional_differ() {
        let (_, table) = generate(&small(Scenario::Emergent)).unwrap();
        let raw = score_matrix(&table, MetricKind::BinaryBrierRaw).unwrap();
        let cond = score_matrix(&table, MetricKind::BinaryBrierConditional).unwrap();
        assert!(raw.values().iter().zip(cond.values()).all(|(r, c)| r <= c));
        assert!(raw.aggregate(0) < cond.aggregate(0));
    }

    #[test]
    fn two_choice_corpus_is_valid() {
        let spec = ScenarioSpec {
            n_choices: 2,
            ..small(Scenario::Emergent)
        };
        let (_, table) = generate(&spec).unwrap();
        for m in 0..table.n_models() {
            for r in table.model_records(m) {
                r.validate().unwrap();
            }
        }
    }
}
