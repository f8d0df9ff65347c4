//! Per-question metrics and the models x questions score matrix.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ChoiceEval, EvalTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    BrierStandard,
    BinaryBrierRaw,
    #[default]
    BinaryBrierConditional,
    TokenEditDistance,
    ModifiedCosineSimilarity,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Accuracy,
        MetricKind::BrierStandard,
        MetricKind::BinaryBrierRaw,
        MetricKind::BinaryBrierConditional,
        MetricKind::TokenEditDistance,
        MetricKind::ModifiedCosineSimilarity,
    ];

    /// Name used on the command line and in score files.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::BrierStandard => "std-brier",
            MetricKind::BinaryBrierRaw => "raw-brier",
            MetricKind::BinaryBrierConditional => "cond-brier",
            MetricKind::TokenEditDistance => "ted",
            MetricKind::ModifiedCosineSimilarity => "mcs",
        }
    }

    /// Suffix used in difficulty-group labels, e.g. `0_1404_brier`.
    pub fn tag(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "acc",
            MetricKind::BrierStandard => "stdbrier",
            MetricKind::BinaryBrierRaw => "rawbrier",
            MetricKind::BinaryBrierConditional => "brier",
            MetricKind::TokenEditDistance => "ted",
            MetricKind::ModifiedCosineSimilarity => "mcs",
        }
    }

    /// Whether larger values mean better performance (easier question).
    pub fn higher_is_better(self) -> bool {
        !matches!(
            self,
            MetricKind::BrierStandard | MetricKind::TokenEditDistance
        )
    }

    pub fn needs_strings(self) -> bool {
        matches!(
            self,
            MetricKind::TokenEditDistance | MetricKind::ModifiedCosineSimilarity
        )
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown metric {s:?} (expected one of: {})",
                    MetricKind::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }
}

/// Share of the correct choice in the mass placed on all available choices.
pub fn conditional_prob(choice_probs: &[f64], correct_index: usize) -> Result<f64> {
    if correct_index >= choice_probs.len() {
        return Err(Error::Validation(format!(
            "correct_index {correct_index} out of range for {} choices",
            choice_probs.len()
        )));
    }
    let total: f64 = choice_probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "all choice probabilities are zero; conditional probability undefined".into(),
        ));
    }
    Ok(choice_probs[correct_index] / total)
}

/// `-(p - 1)^2` for the probability on the correct choice.
pub fn binary_brier_question(p_hat: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::Validation(format!(
            "probability {p_hat} outside [0, 1]"
        )));
    }
    let miss = p_hat - 1.0;
    Ok(-(miss * miss))
}

/// Multi-class Brier score of one question against the one-hot target.
pub fn standard_brier(choice_probs: &[f64], correct_index: usize) -> f64 {
    choice_probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let target = if i == correct_index { 1.0 } else { 0.0 };
            (p - target) * (p - target)
        })
        .sum()
}

/// 1 when the correct choice is the argmax; ties go to the lowest index.
pub fn accuracy_question(choice_probs: &[f64], correct_index: usize) -> f64 {
    let mut best = 0;
    for (i, &p) in choice_probs.iter().enumerate().skip(1) {
        if p > choice_probs[best] {
            best = i;
        }
    }
    if best == correct_index {
        1.0
    } else {
        0.0
    }
}

/// Levenshtein distance with unit insert/delete/substitute costs.
pub fn token_edit_distance<T: PartialEq>(prediction: &[T], target: &[T]) -> usize {
    if prediction.is_empty() {
        return target.len();
    }
    let mut row: Vec<usize> = (0..=target.len()).collect();
    for (i, a) in prediction.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, b) in target.iter().enumerate() {
            let above = row[j + 1];
            let cost = usize::from(a != b);
            row[j + 1] = (diag + cost).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[target.len()]
}

/// Whitespace tokenization used for string-match records.
pub fn tokenize(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Maps a string to a fixed-dimension vector.
pub trait Embedder: Sync {
    fn dim(&self) -> usize;
    fn embed(&self, s: &str) -> Vec<f64>;
}

/// Character-bigram counts hashed into a fixed number of buckets. The string
/// is padded with start/end markers so every input, including `""`, has at
/// least one bigram.
#[derive(Debug, Clone, Copy)]
pub struct BigramEmbedder {
    buckets: usize,
}

impl BigramEmbedder {
    pub const START: char = '\u{2}';
    pub const END: char = '\u{3}';

    pub fn new(buckets: usize) -> Self {
        assert!(buckets > 0, "bucket count must be positive");
        Self { buckets }
    }

    /// Padded bigrams of `s`, in order.
    pub fn bigrams(s: &str) -> Vec<(char, char)> {
        let chars: Vec<char> = std::iter::once(Self::START)
            .chain(s.chars())
            .chain(std::iter::once(Self::END))
            .collect();
        chars.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn bucket(&self, bigram: (char, char)) -> usize {
        // FNV-1a over the two code points
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for c in [bigram.0 as u32, bigram.1 as u32] {
            for byte in c.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        (h % self.buckets as u64) as usize
    }
}

impl Default for BigramEmbedder {
    fn default() -> Self {
        Self::new(4096)
    }
}

impl Embedder for BigramEmbedder {
    fn dim(&self) -> usize {
        self.buckets
    }

    fn embed(&self, s: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.buckets];
        for bg in Self::bigrams(s) {
            v[self.bucket(bg)] += 1.0;
        }
        v
    }
}

/// True when every character of `s1` occurs in `s2` at least as often.
pub fn chars_contained(s1: &str, s2: &str) -> bool {
    let mut avail: HashMap<char, usize> = HashMap::new();
    for c in s2.chars() {
        *avail.entry(c).or_default() += 1;
    }
    s1.chars().all(|c| match avail.get_mut(&c) {
        Some(n) if *n > 0 => {
            *n -= 1;
            true
        }
        _ => false,
    })
}

/// Cosine similarity of the two embeddings, zeroed unless `s1` is contained in `s2`.
pub fn modified_cosine_similarity(s1: &str, s2: &str, embedder: &dyn Embedder) -> Result<f64> {
    let a = embedder.embed(s1);
    let b = embedder.embed(s2);
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "embedder returned vectors of different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(&a), norm(&b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate(format!(
            "zero-norm embedding for {:?}",
            if na == 0.0 { s1 } else { s2 }
        )));
    }
    if !chars_contained(s1, s2) {
        return Ok(0.0);
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Per-question value of `metric` for one record.
pub fn question_score(rec: &ChoiceEval, metric: MetricKind, embedder: &dyn Embedder) -> Result<f64> {
    let with_ctx = |e: Error| match e {
        Error::Degenerate(m) => Error::Degenerate(format!(
            "model {} question {}: {m}",
            rec.model_id, rec.question_id
        )),
        Error::Validation(m) => Error::Validation(format!(
            "model {} question {}: {m}",
            rec.model_id, rec.question_id
        )),
        other => other,
    };
    let strings = || -> Result<(&str, &str)> {
        let missing = |field: &str| {
            Error::Validation(format!(
                "metric {metric} needs the \"{field}\" field, missing for model {} question {}",
                rec.model_id, rec.question_id
            ))
        };
        let p = rec.prediction.as_deref().ok_or_else(|| missing("prediction"))?;
        let t = rec.target.as_deref().ok_or_else(|| missing("target"))?;
        Ok((p, t))
    };
    match metric {
        MetricKind::Accuracy => Ok(accuracy_question(&rec.choice_probs, rec.correct_index)),
        MetricKind::BrierStandard => Ok(standard_brier(&rec.choice_probs, rec.correct_index)),
        MetricKind::BinaryBrierRaw => {
            binary_brier_question(rec.choice_probs[rec.correct_index]).map_err(with_ctx)
        }
        MetricKind::BinaryBrierConditional => {
            let p = conditional_prob(&rec.choice_probs, rec.correct_index).map_err(with_ctx)?;
            // guard against p = 1 + ulp from the division
            binary_brier_question(p.min(1.0)).map_err(with_ctx)
        }
        MetricKind::TokenEditDistance => {
            let (p, t) = strings()?;
            Ok(token_edit_distance(&tokenize(p), &tokenize(t)) as f64)
        }
        MetricKind::ModifiedCosineSimilarity => {
            let (p, t) = strings()?;
            modified_cosine_similarity(p, t, embedder).map_err(with_ctx)
        }
    }
}

/// Dense models x questions matrix of one metric. Rows follow ascending `M`,
/// columns follow ascending question id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub metric: MetricKind,
    pub model_ids: Vec<String>,
    pub effective_sizes: Vec<f64>,
    pub question_ids: Vec<String>,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(
        metric: MetricKind,
        model_ids: Vec<String>,
        effective_sizes: Vec<f64>,
        question_ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if model_ids.len() != effective_sizes.len() {
            return Err(Error::Validation(
                "model ids and effective sizes differ in length".into(),
            ));
        }
        if values.len() != model_ids.len() * question_ids.len() {
            return Err(Error::Validation(format!(
                "score matrix has {} values, expected {} x {}",
                values.len(),
                model_ids.len(),
                question_ids.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite score {v}")));
        }
        if effective_sizes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Validation(
                "score matrix rows must be ordered by ascending M".into(),
            ));
        }
        Ok(Self {
            metric,
            model_ids,
            effective_sizes,
            question_ids,
            values,
        })
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn n_questions(&self) -> usize {
        self.question_ids.len()
    }

    pub fn get(&self, model: usize, question: usize) -> f64 {
        self.values[model * self.n_questions() + question]
    }

    pub fn row(&self, model: usize) -> &[f64] {
        let n = self.n_questions();
        &self.values[model * n..(model + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean over questions, summed in ascending question order.
    pub fn aggregate(&self, model: usize) -> f64 {
        mean_in_order(self.row(model))
    }

    pub fn aggregates(&self) -> Vec<f64> {
        (0..self.n_models()).map(|m| self.aggregate(m)).collect()
    }
}

/// Arithmetic mean with a plain left-to-right sum.
pub fn mean_in_order(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in xs {
        s += x;
    }
    s / xs.len() as f64
}

/// Builds the score matrix of `metric` using the default embedder for MCS.
pub fn score_matrix(evals: &EvalTable, metric: MetricKind) -> Result<ScoreMatrix> {
    score_matrix_with(evals, metric, &BigramEmbedder::default())
}

pub fn score_matrix_with(
    evals: &EvalTable,
    metric: MetricKind,
    embedder: &dyn Embedder,
) -> Result<ScoreMatrix> {
    let rows: Vec<Vec<f64>> = (0..evals.n_models())
        .into_par_iter()
        .map(|m| {
            evals
                .model_records(m)
                .iter()
                .map(|rec| question_score(rec, metric, embedder))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let manifest = evals.manifest();
    ScoreMatrix::new(
        metric,
        manifest.models().iter().map(|m| m.model_id.clone()).collect(),
        manifest.effective_sizes(),
        evals.question_ids().to_vec(),
        rows.concat(),
    )
}
