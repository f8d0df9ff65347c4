//! Loading and validating the model manifest and the evaluation records.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training compute that maps to `M = 0`.
pub const REFERENCE_FLOPS: f64 = 1e21;

/// Slack allowed on the sum of choice probabilities.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

pub const MANIFEST_HEADER: [&str; 5] = [
    "model_id",
    "effective_size",
    "compute_flops",
    "n_params",
    "n_tokens",
];

/// `M = log10(C / 1e21)`.
pub fn effective_model_size(compute_flops: f64) -> Result<f64> {
    if !compute_flops.is_finite() || compute_flops <= 0.0 {
        return Err(Error::Validation(format!(
            "training compute must be positive and finite, got {compute_flops}"
        )));
    }
    Ok((compute_flops / REFERENCE_FLOPS).log10())
}

/// One evaluated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model_id: String,
    /// `M` as given in the manifest, if any. Takes precedence over compute.
    pub explicit_size: Option<f64>,
    pub compute_flops: Option<f64>,
    pub n_params: Option<u64>,
    pub n_tokens: Option<u64>,
    /// Resolved effective model size `M`.
    pub effective_size: f64,
}

impl ModelRecord {
    /// Resolves `M` with precedence explicit size > FLOPs > `6 * N * D`.
    pub fn new(
        model_id: impl Into<String>,
        explicit_size: Option<f64>,
        compute_flops: Option<f64>,
        n_params: Option<u64>,
        n_tokens: Option<u64>,
    ) -> Result<Self> {
        let model_id = model_id.into();
        let effective_size = match (explicit_size, compute_flops, n_params, n_tokens) {
            (Some(m), _, _, _) => {
                if !m.is_finite() {
                    return Err(Error::Validation(format!(
                        "model {model_id}: effective_size must be finite"
                    )));
                }
                m
            }
            (None, Some(c), _, _) => effective_model_size(c)
                .map_err(|e| Error::Validation(format!("model {model_id}: {e}")))?,
            (None, None, Some(n), Some(d)) => effective_model_size(6.0 * n as f64 * d as f64)
                .map_err(|e| Error::Validation(format!("model {model_id}: {e}")))?,
            _ => {
                return Err(Error::Validation(format!(
                    "model {model_id}: no resolvable size (need effective_size, compute_flops, or both n_params and n_tokens)"
                )))
            }
        };
        Ok(Self {
            model_id,
            explicit_size,
            compute_flops,
            n_params,
            n_tokens,
            effective_size,
        })
    }

    /// Shorthand for a manifest row that only carries `M`.
    pub fn with_size(model_id: impl Into<String>, m: f64) -> Result<Self> {
        Self::new(model_id, Some(m), None, None, None)
    }
}

/// Models sorted ascending by `M`, ties broken by `model_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    models: Vec<ModelRecord>,
}

impl Manifest {
    pub fn new(mut models: Vec<ModelRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for m in &models {
            if !seen.insert(m.model_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate model_id {}",
                    m.model_id
                )));
            }
        }
        models.sort_by(|a, b| {
            a.effective_size
                .total_cmp(&b.effective_size)
                .then_with(|| a.model_id.cmp(&b.model_id))
        });
        Ok(Self { models })
    }

    pub fn models(&self) -> &[ModelRecord] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn effective_sizes(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.effective_size).collect()
    }

    pub fn index_of(&self, model_id: &str) -> Option<usize> {
        self.models.iter().position(|m| m.model_id == model_id)
    }
}

fn parse_opt_f64(path: &Path, line: u64, column: &str, cell: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::parse(path, line, format!("column {column}: not a number: {cell:?}")))
}

fn parse_opt_count(path: &Path, line: u64, column: &str, cell: &str) -> Result<Option<u64>> {
    match parse_opt_f64(path, line, column, cell)? {
        None => Ok(None),
        Some(v) if v.is_finite() && v >= 1.0 && v.fract() == 0.0 && v < u64::MAX as f64 => {
            Ok(Some(v as u64))
        }
        Some(v) => Err(Error::parse(
            path,
            line,
            format!("column {column}: expected a positive integer, got {v}"),
        )),
    }
}

/// Reads `models.csv`. Columns are matched by header name, so their order is free.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();

    let mut col: HashMap<&str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if !MANIFEST_HEADER.contains(&h) {
            return Err(Error::parse(path, 1, format!("unknown column {h:?}")));
        }
        if col.insert(MANIFEST_HEADER.iter().find(|k| **k == h).unwrap(), i).is_some() {
            return Err(Error::parse(path, 1, format!("duplicate column {h:?}")));
        }
    }
    let Some(&id_col) = col.get("model_id") else {
        return Err(Error::parse(path, 1, "missing model_id column"));
    };

    let mut models = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(path, line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() > headers.len() {
            return Err(Error::parse(
                path,
                line,
                format!("{} fields for {} columns", row.len(), headers.len()),
            ));
        }
        let cell = |name: &str| col.get(name).and_then(|&i| row.get(i)).unwrap_or("");
        let model_id = row.get(id_col).unwrap_or("").to_string();
        if model_id.is_empty() {
            return Err(Error::parse(path, line, "empty model_id"));
        }
        if let Some(first) = seen.insert(model_id.clone(), line) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate model_id {model_id} (first seen on line {first})"),
            ));
        }
        let record = ModelRecord::new(
            model_id,
            parse_opt_f64(path, line, "effective_size", cell("effective_size"))?,
            parse_opt_f64(path, line, "compute_flops", cell("compute_flops"))?,
            parse_opt_count(path, line, "n_params", cell("n_params"))?,
            parse_opt_count(path, line, "n_tokens", cell("n_tokens"))?,
        )
        .map_err(|e| Error::parse(path, line, e.to_string()))?;
        models.push(record);
    }
    if models.is_empty() {
        return Err(Error::parse(path, 1, "manifest has no models"));
    }
    Manifest::new(models)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the manifest in canonical column order, sorted by `M`.
pub fn write_manifest<W: Write>(manifest: &Manifest, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Validation(format!("writing manifest: {e}"));
    w.write_record(MANIFEST_HEADER).map_err(io)?;
    for m in manifest.models() {
        w.write_record([
            m.model_id.clone(),
            fmt_opt(m.explicit_size),
            fmt_opt(m.compute_flops),
            fmt_opt(m.n_params),
            fmt_opt(m.n_tokens),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Validation(format!("writing manifest: {e}")))?;
    Ok(())
}

/// One (model, question) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceEval {
    pub model_id: String,
    pub question_id: String,
    pub choice_probs: Vec<f64>,
    pub correct_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl ChoiceEval {
    pub fn validate(&self) -> Result<()> {
        let ctx = || format!("model {} question {}", self.model_id, self.question_id);
        if self.choice_probs.len() < 2 {
            return Err(Error::Validation(format!(
                "{}: need at least 2 choices, got {}",
                ctx(),
                self.choice_probs.len()
            )));
        }
        if self.correct_index >= self.choice_probs.len() {
            return Err(Error::Validation(format!(
                "{}: correct_index {} out of range for {} choices",
                ctx(),
                self.correct_index,
                self.choice_probs.len()
            )));
        }
        if let Some(p) = self
            .choice_probs
            .iter()
            .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::Validation(format!(
                "{}: probability {p} outside [0, 1]",
                ctx()
            )));
        }
        let sum: f64 = self.choice_probs.iter().sum();
        if sum > 1.0 + PROB_SUM_TOLERANCE {
            return Err(Error::Validation(format!(
                "{}: choice probabilities sum to {sum} > 1",
                ctx()
            )));
        }
        Ok(())
    }
}

/// Complete evaluation table: every model answers the same question set.
#[derive(Debug, Clone)]
pub struct EvalTable {
    manifest: Manifest,
    question_ids: Vec<String>,
    /// `records[model][question]`, models in manifest order, questions sorted by id.
    records: Vec<Vec<ChoiceEval>>,
}

impl EvalTable {
    /// Builds a table from loose records. Fails on unknown models, duplicate
    /// cells, invalid probabilities, or uneven question coverage.
    pub fn from_records(manifest: Manifest, records: Vec<ChoiceEval>) -> Result<Self> {
        let mut per_model: Vec<BTreeMap<String, ChoiceEval>> =
            vec![BTreeMap::new(); manifest.len()];
        let index: HashMap<&str, usize> = manifest
            .models()
            .iter()
            .enumerate()
            .map(|(i, m)| (m.model_id.as_str(), i))
            .collect();
        for rec in records {
            rec.validate()?;
            let Some(&mi) = index.get(rec.model_id.as_str()) else {
                return Err(Error::Validation(format!(
                    "unknown model_id {} (not in manifest)",
                    rec.model_id
                )));
            };
            if per_model[mi].contains_key(&rec.question_id) {
                return Err(Error::Validation(format!(
                    "duplicate record for model {} question {}",
                    rec.model_id, rec.question_id
                )));
            }
            per_model[mi].insert(rec.question_id.clone(), rec);
        }
        drop(index);
        Self::check_coverage(&manifest, &per_model)?;
        let question_ids: Vec<String> = per_model[0].keys().cloned().collect();
        let records = per_model
            .into_iter()
            .map(|m| m.into_values().collect())
            .collect();
        Ok(Self {
            manifest,
            question_ids,
            records,
        })
    }

    fn check_coverage(manifest: &Manifest, per_model: &[BTreeMap<String, ChoiceEval>]) -> Result<()> {
        let all: BTreeSet<&str> = per_model
            .iter()
            .flat_map(|m| m.keys().map(String::as_str))
            .collect();
        if all.is_empty() {
            return Err(Error::Validation("no evaluation records".into()));
        }
        for (model, recs) in manifest.models().iter().zip(per_model) {
            if recs.len() != all.len() {
                let missing: Vec<&str> = all
                    .iter()
                    .copied()
                    .filter(|q| !recs.contains_key(*q))
                    .collect();
                return Err(Error::Validation(format!(
                    "question coverage mismatch: model {} lacks {} question(s): {}",
                    model.model_id,
                    missing.len(),
                    missing.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn question_ids(&self) -> &[String] {
        &self.question_ids
    }

    pub fn n_models(&self) -> usize {
        self.records.len()
    }

    pub fn n_questions(&self) -> usize {
        self.question_ids.len()
    }

    /// Records of one model, ordered by question id.
    pub fn model_records(&self, model: usize) -> &[ChoiceEval] {
        &self.records[model]
    }

    pub fn record(&self, model: usize, question: usize) -> &ChoiceEval {
        &self.records[model][question]
    }

    pub fn len(&self) -> usize {
        self.n_models() * self.n_questions()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads `evals.jsonl` against a loaded manifest.
pub fn load_evals(path: impl AsRef<Path>, manifest: &Manifest) -> Result<EvalTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut seen: HashMap<(String, String), u64> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ChoiceEval = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        rec.validate()
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if manifest.index_of(&rec.model_id).is_none() {
            return Err(Error::parse(
                path,
                lineno,
                format!("unknown model_id {} (not in manifest)", rec.model_id),
            ));
        }
        let key = (rec.model_id.clone(), rec.question_id.clone());
        if let Some(first) = seen.insert(key, lineno) {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "duplicate record for model {} question {} (first on line {first})",
                    rec.model_id, rec.question_id
                ),
            ));
        }
        records.push(rec);
    }
    EvalTable::from_records(manifest.clone(), records).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes evaluation records as JSON lines, in table order.
pub fn write_evals<W: Write>(table: &EvalTable, mut out: W) -> Result<()> {
    for m in 0..table.n_models() {
        for rec in table.model_records(m) {
            let line = serde_json::to_string(rec)
                .map_err(|e| Error::Validation(format!("serializing record: {e}")))?;
            writeln!(out, "{line}")
                .map_err(|e| Error::Validation(format!("writing records: {e}")))?;
        }
    }
    Ok(())
}

/// Models split at the emergence threshold: train is `M < T`, test is `M >= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub threshold: f64,
    /// Row indices (ascending `M`) of models strictly below the threshold.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn n_train(&self) -> usize {
        self.train.len()
    }
}

/// Splits models (given by their `M`, in any order) at `threshold`.
pub fn split_by_threshold(effective_sizes: &[f64], threshold: f64) -> Result<Split> {
    if !threshold.is_finite() {
        return Err(Error::Config(format!("threshold {threshold} is not finite")));
    }
    let (train, test): (Vec<usize>, Vec<usize>) =
        (0..effective_sizes.len()).partition(|&i| effective_sizes[i] < threshold);
    if train.is_empty() {
        return Err(Error::Config(format!(
            "threshold T={threshold} leaves no training models (all M >= T)"
        )));
    }
    if test.is_empty() {
        return Err(Error::Config(format!(
            "threshold T={threshold} leaves no test models (all M < T)"
        )));
    }
    Ok(Split {
        threshold,
        train,
        test,
    })
}

pub fn split_train_test(manifest: &Manifest, threshold: f64) -> Result<Split> {
    split_by_threshold(&manifest.effective_sizes(), threshold)
}

/// Per-benchmark defaults for the emergence threshold and the split sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Mmlu,
    Arithmetic,
    PersianQa,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Mmlu, Preset::Arithmetic, Preset::PersianQa];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Mmlu => "mmlu",
            Preset::Arithmetic => "arithmetic",
            Preset::PersianQa => "persian-qa",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn threshold(self) -> f64 {
        match self {
            Preset::Mmlu => 1.5,
            Preset::Arithmetic => 1.8,
            Preset::PersianQa => 2.3,
        }
    }

    /// Thresholds used for the train/test split robustness sweep.
    pub fn sweep_thresholds(self) -> [f64; 3] {
        match self {
            Preset::Mmlu => [1.5, 1.3, 1.1],
            Preset::Arithmetic => [1.8, 1.6, 1.4],
            Preset::PersianQa => [2.3, 2.1, 1.9],
        }
    }
}
