//! Question difficulty from small-model performance, and slicing into groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Split;
use crate::metrics::{mean_in_order, MetricKind, ScoreMatrix};

/// Group count used for the per-group scaling plots.
pub const ANALYSIS_GROUPS: usize = 10;
/// Group count used for forecasting.
pub const FORECAST_GROUPS: usize = 3;

/// Mean score of one question over the training models.
pub fn question_difficulty(train_scores: &[f64]) -> Result<f64> {
    if train_scores.is_empty() {
        return Err(Error::Config(
            "question difficulty needs at least one model below the threshold".into(),
        ));
    }
    Ok(mean_in_order(train_scores))
}

/// Difficulty of every question, averaged over the `split.train` rows.
pub fn difficulties(scores: &ScoreMatrix, split: &Split) -> Result<Vec<f64>> {
    let mut column = Vec::with_capacity(split.train.len());
    (0..scores.n_questions())
        .map(|q| {
            column.clear();
            column.extend(split.train.iter().map(|&m| scores.get(m, q)));
            question_difficulty(&column)
        })
        .collect()
}

/// Questions sorted easiest first and cut into contiguous groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyGrouping {
    pub metric: MetricKind,
    /// Question column indices, easiest first.
    pub order: Vec<usize>,
    /// `G + 1` cut points into `order`.
    pub boundaries: Vec<usize>,
    pub labels: Vec<String>,
    /// `question_ids[order[i]]`, kept so a grouping file is self-describing.
    pub question_ids: Vec<String>,
}

/// `floor(i * n / g)` for `i = 0..=g`.
pub fn group_boundaries(n: usize, g: usize) -> Vec<usize> {
    (0..=g).map(|i| i * n / g).collect()
}

/// Sorts questions easiest first (best mean score first, ties by question id)
/// and splits them into `g` groups at `floor(i * n / g)`.
pub fn sort_and_group(
    difficulties: &[f64],
    question_ids: &[String],
    g: usize,
    metric: MetricKind,
) -> Result<DifficultyGrouping> {
    let n = difficulties.len();
    if question_ids.len() != n {
        return Err(Error::Validation(format!(
            "{} difficulties for {} questions",
            n,
            question_ids.len()
        )));
    }
    if g < 2 {
        return Err(Error::Config(format!("group count must be at least 2, got {g}")));
    }
    if g > n {
        return Err(Error::Config(format!(
            "group count {g} exceeds the number of questions {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let by_score = if metric.higher_is_better() {
            difficulties[b].total_cmp(&difficulties[a])
        } else {
            difficulties[a].total_cmp(&difficulties[b])
        };
        by_score.then_with(|| question_ids[a].cmp(&question_ids[b]))
    });
    let boundaries = group_boundaries(n, g);
    let labels = boundaries
        .windows(2)
        .map(|w| format!("{}_{}_{}", w[0], w[1], metric.tag()))
        .collect();
    let question_ids = order.iter().map(|&i| question_ids[i].clone()).collect();
    Ok(DifficultyGrouping {
        metric,
        order,
        boundaries,
        labels,
        question_ids,
    })
}

impl DifficultyGrouping {
    pub fn n_groups(&self) -> usize {
        self.labels.len()
    }

    pub fn n_questions(&self) -> usize {
        self.order.len()
    }

    /// Question indices of group `i`, in ascending index order.
    pub fn members(&self, i: usize) -> Vec<usize> {
        let mut m = self.order[self.boundaries[i]..self.boundaries[i + 1]].to_vec();
        m.sort_unstable();
        m
    }

    /// Re-indexes the grouping against another matrix with the same question set.
    pub fn rebind(&self, question_ids: &[String]) -> Result<Self> {
        let index: std::collections::HashMap<&str, usize> = question_ids
            .iter()
            .enumerate()
            .map(|(i, q)| (q.as_str(), i))
            .collect();
        if index.len() != self.question_ids.len() {
            return Err(Error::Validation(format!(
                "grouping covers {} questions, scores have {}",
                self.question_ids.len(),
                index.len()
            )));
        }
        let order = self
            .question_ids
            .iter()
            .map(|q| {
                index.get(q.as_str()).copied().ok_or_else(|| {
                    Error::Validation(format!("grouping question {q} not in scores"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            order,
            ..self.clone()
        })
    }
}

/// Full pipeline: difficulty on the training rows, then sort and group.
pub fn group_questions(scores: &ScoreMatrix, split: &Split, g: usize) -> Result<DifficultyGrouping> {
    let d = difficulties(scores, split)?;
    sort_and_group(&d, &scores.question_ids, g, scores.metric)
}

/// Mean score of one group per model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSeries {
    pub label: String,
    /// `(M, mean score)`, one point per model in row order.
    pub points: Vec<(f64, f64)>,
}

impl GroupSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Points of the given rows only.
    pub fn subset(&self, rows: &[usize]) -> Vec<(f64, f64)> {
        rows.iter().map(|&r| self.points[r]).collect()
    }
}

pub fn group_series(scores: &ScoreMatrix, grouping: &DifficultyGrouping) -> Result<Vec<GroupSeries>> {
    if grouping.n_questions() != scores.n_questions() {
        return Err(Error::Validation(format!(
            "grouping has {} questions, score matrix has {}",
            grouping.n_questions(),
            scores.n_questions()
        )));
    }
    Ok((0..grouping.n_groups())
        .map(|g| {
            let members = grouping.members(g);
            let points = (0..scores.n_models())
                .map(|m| {
                    let row = scores.row(m);
                    let mut s = 0.0;
                    for &q in &members {
                        s += row[q];
                    }
                    (scores.effective_sizes[m], s / members.len() as f64)
                })
                .collect();
            GroupSeries {
                label: grouping.labels[g].clone(),
                points,
            }
        })
        .collect())
}
