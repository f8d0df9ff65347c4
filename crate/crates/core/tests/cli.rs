use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use soar::report::{read_scores, Table};

fn soar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = soar(args);
    assert!(
        out.status.success(),
        "soar {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Corpus {
    dir: tempfile::TempDir,
}

impl Corpus {
    fn new(extra: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("corpus");
        let mut args = vec!["synth", "--out-dir", s(&out)];
        args.extend_from_slice(extra);
        ok(&args);
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn score(&self, metric: &str, out: &str) -> PathBuf {
        let out = self.path(out);
        ok(&[
            "score",
            "--models",
            s(&self.path("corpus/models.csv")),
            "--evals",
            s(&self.path("corpus/evals.jsonl")),
            "--metric",
            metric,
            "--out",
            s(&out),
        ]);
        out
    }

    fn forecast(&self, brier: &Path, acc: &Path, method: &str, out: &str) -> PathBuf {
        let out = self.path(out);
        ok(&[
            "forecast", "--scores", s(brier), "--accuracy", s(acc), "--threshold", "1.5", "--method", method,
            "--out", s(&out),
        ]);
        out
    }
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let t = Table::read(path).unwrap();
    let i = t.column(name).unwrap();
    t.rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn forecast_rows(path: &Path) -> Vec<(f64, f64, bool)> {
    let t = Table::read(&path.join("forecast.csv")).unwrap();
    t.rows
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[3].parse().unwrap(), r[4] == "true"))
        .collect()
}

#[test]
fn score_writes_brier_matrix_in_range() {
    let c = Corpus::new(&["--models", "8", "--questions", "30"]);
    let scores = read_scores(&c.score("cond-brier", "brier.csv")).unwrap();
    let m = scores.matrix.unwrap();
    assert_eq!((m.n_models(), m.n_questions()), (8, 30));
    assert!(m.values().iter().all(|v| (-1.0..=0.0).contains(v)));
}

#[test]
fn all_correct_accuracy_and_missing_strings() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models.csv");
    let evals = dir.path().join("evals.jsonl");
    fs::write(&models, "model_id,effective_size\nsmall,-0.5\nbig,1.0\n").unwrap();
    let mut lines = String::new();
    for m in ["small", "big"] {
        for q in ["q1", "q2"] {
            lines += &format!(
                "{{\"model_id\":\"{m}\",\"question_id\":\"{q}\",\"choice_probs\":[0.1,0.7,0.2],\"correct_index\":1}}\n"
            );
        }
    }
    fs::write(&evals, lines).unwrap();
    let out = dir.path().join("acc.csv");
    ok(&["score", "--models", s(&models), "--evals", s(&evals), "--metric", "accuracy", "--out", s(&out), "--aggregate-only"]);
    assert_eq!(column(&out, "aggregate"), [1.0, 1.0]);
    assert_eq!(Table::read(&out).unwrap().header, ["model_id", "M", "metric", "aggregate"]);

    let r = soar(&["score", "--models", s(&models), "--evals", s(&evals), "--metric", "ted", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("prediction"));
}

#[test]
fn ingest_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models.csv");
    let evals = dir.path().join("evals.jsonl");
    fs::write(&models, "model_id,effective_size\na,0.1\nb,oops\n").unwrap();
    fs::write(&evals, "").unwrap();
    let r = soar(&["score", "--models", s(&models), "--evals", s(&evals), "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("models.csv:3"), "{err}");
}

#[test]
fn group_file_names_follow_boundaries() {
    let c = Corpus::new(&["--models", "6", "--questions", "14042"]);
    let brier = c.score("cond-brier", "brier.csv");
    let out = c.path("groups");
    ok(&["group", "--scores", s(&brier), "--threshold", "1.5", "--groups", "10", "--out", s(&out)]);
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 11);
    assert!(names.contains(&"0_1404_brier.csv".to_string()));
    assert!(names.contains(&"12637_14042_brier.csv".to_string()));
    assert!(names.contains(&"grouping.json".to_string()));

    let r = soar(&["group", "--scores", s(&brier), "--threshold", "1.5", "--groups", "20000", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn forecast_sandwich_rises_and_sigmoid_stays() {
    let c = Corpus::new(&[]);
    let brier = c.score("cond-brier", "brier.csv");
    let acc = c.score("accuracy", "acc.csv");
    let train: Vec<f64> = column(&acc, "aggregate")
        .into_iter()
        .zip(column(&acc, "M"))
        .filter(|(_, m)| *m < 1.5)
        .map(|(a, _)| a)
        .collect();
    let plateau = train.iter().sum::<f64>() / train.len() as f64;

    let sandwich = forecast_rows(&c.forecast(&brier, &acc, "sandwich", "sandwich"));
    let test: Vec<_> = sandwich.iter().filter(|p| !p.2).collect();
    assert!(test.first().unwrap().1 < test.last().unwrap().1);
    assert!(test.last().unwrap().1 > plateau + 0.15);

    let sigmoid = forecast_rows(&c.forecast(&brier, &acc, "sigmoid", "sigmoid"));
    assert!(sigmoid.iter().all(|p| (p.1 - plateau).abs() < 0.05));
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(c.path("sandwich/fit.json")).unwrap()).unwrap();
    assert_eq!(fit["model"]["method"], "sandwich");
    assert_eq!(fit["easy_degree"], 5);

    let r = soar(&[
        "forecast", "--scores", s(&brier), "--accuracy", s(&acc), "--threshold", "1.5", "--easy-degree", "40",
        "--out", s(&c.path("bad")),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("degree 40"));
}

#[test]
fn group_then_forecast_matches_direct_run() {
    let c = Corpus::new(&["--models", "20", "--questions", "60"]);
    let brier = c.score("cond-brier", "brier.csv");
    let acc = c.score("accuracy", "acc.csv");
    ok(&["group", "--scores", s(&brier), "--threshold", "1.5", "--groups", "3", "--out", s(&c.path("g"))]);
    ok(&[
        "forecast", "--scores", s(&brier), "--accuracy", s(&acc), "--threshold", "1.5", "--grouping",
        s(&c.path("g/grouping.json")), "--out", s(&c.path("composed")),
    ]);
    let direct = c.forecast(&brier, &acc, "sandwich", "direct");
    for f in ["forecast.csv", "fit.json"] {
        assert_eq!(fs::read(c.path("composed").join(f)).unwrap(), fs::read(direct.join(f)).unwrap());
    }
}

#[test]
fn sweep_single_cell_and_all_invalid() {
    let c = Corpus::new(&["--models", "20", "--questions", "60"]);
    let brier = c.score("cond-brier", "brier.csv");
    let acc = c.score("accuracy", "acc.csv");
    let out = c.path("sweep");
    ok(&[
        "sweep", "--scores", s(&brier), "--accuracy", s(&acc), "--thresholds", "1.5", "--easy-degrees", "5",
        "--hard-degrees", "2", "--out", s(&out),
    ]);
    let direct = c.forecast(&brier, &acc, "sandwich", "direct");
    assert_eq!(
        fs::read(out.join("forecast_T1.5_e5_h2.csv")).unwrap(),
        fs::read(direct.join("forecast.csv")).unwrap()
    );
    let summary = Table::read(&out.join("summary.csv")).unwrap();
    assert_eq!(summary.rows.len(), 1);
    assert!(summary.rows[0][6].is_empty());

    ok(&["sweep", "--scores", s(&brier), "--accuracy", s(&acc), "--preset", "mmlu", "--out", s(&c.path("grid"))]);
    assert_eq!(Table::read(&c.path("grid/summary.csv")).unwrap().rows.len(), 27);

    let r = soar(&[
        "sweep", "--scores", s(&brier), "--accuracy", s(&acc), "--thresholds", "1.5", "--easy-degrees", "30,40",
        "--hard-degrees", "2", "--out", s(&c.path("bad")),
    ]);
    assert_ne!(r.status.code(), Some(0));
    let summary = Table::read(&c.path("bad/summary.csv")).unwrap();
    assert!(summary.rows.iter().all(|r| r[6].contains("degree")));
}

fn write_affine_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let models = dir.join("models.csv");
    let evals = dir.join("evals.jsonl");
    fs::write(&models, "model_id,effective_size\na,0\nb,1\nc,2\nd,3\n").unwrap();
    let mut lines = String::new();
    for (m, correct) in [("a", 1), ("b", 2), ("c", 2), ("d", 4)] {
        for q in 0..5 {
            let probs = if q < correct { "[1.0,0.0]" } else { "[0.0,1.0]" };
            lines += &format!(
                "{{\"model_id\":\"{m}\",\"question_id\":\"q{q}\",\"choice_probs\":{probs},\"correct_index\":0}}\n"
            );
        }
    }
    fs::write(&evals, lines).unwrap();
    (models, evals)
}

#[test]
fn correlate_layout_and_affine_case() {
    let dir = tempfile::tempdir().unwrap();
    let (models, evals) = write_affine_fixture(dir.path());
    let c = Corpus::new(&[]);
    let out = dir.path().join("corr.csv");
    ok(&[
        "correlate", "--models", s(&models), "--evals", s(&evals), "--dataset", "affine", "--models",
        s(&c.path("corpus/models.csv")), "--evals", s(&c.path("corpus/evals.jsonl")), "--dataset", "synth",
        "--out", s(&out),
    ]);
    let t = Table::read(&out).unwrap();
    assert_eq!(t.header, ["variant", "affine:P", "affine:S", "affine:K", "synth:P", "synth:S", "synth:K"]);
    assert_eq!(t.rows[0][0], "un-conditionalized");
    assert_eq!(t.rows[1][0], "conditionalized");
    let p: f64 = t.rows[1][1].parse().unwrap();
    assert!((p - 1.0).abs() < 1e-12);
    for k in 4..7 {
        let raw: f64 = t.rows[0][k].parse().unwrap();
        let cond: f64 = t.rows[1][k].parse().unwrap();
        assert!(cond >= raw, "{}: cond {cond} < raw {raw}", t.header[k]);
    }
}

#[test]
fn correlate_marks_degenerate_cells() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models.csv");
    let evals = dir.path().join("evals.jsonl");
    fs::write(&models, "model_id,effective_size\na,0\nb,1\nc,2\n").unwrap();
    let mut lines = String::new();
    for (m, p) in [("a", 0.6), ("b", 0.7), ("c", 0.8)] {
        lines += &format!(
            "{{\"model_id\":\"{m}\",\"question_id\":\"q\",\"choice_probs\":[{p},{}],\"correct_index\":0}}\n",
            1.0 - p
        );
    }
    fs::write(&evals, lines).unwrap();
    let out = dir.path().join("corr.csv");
    ok(&["correlate", "--models", s(&models), "--evals", s(&evals), "--out", s(&out)]);
    let t = Table::read(&out).unwrap();
    assert!(t.rows[0][1..].iter().all(|c| c == "degenerate"));
}

#[test]
fn plot_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut series = Vec::new();
    for g in 0..10 {
        let p = dir.path().join(format!("{g}_brier.csv"));
        fs::write(&p, format!("model_id,M,value\na,0,{}\nb,1,{}\n", -0.1 * g as f64, -0.05 * g as f64)).unwrap();
        series.push(p);
    }
    let out = dir.path().join("groups.svg");
    let mut args = vec!["plot".to_string()];
    for p in &series {
        args.extend(["--series".into(), s(p).into()]);
    }
    args.extend(["--out".into(), s(&out).into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&args);
    let svg = fs::read_to_string(&out).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let legend: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("legend"))
        .map(|n| n.descendants().find(|d| d.has_tag_name("text")).unwrap().text().unwrap())
        .collect();
    assert_eq!(legend, (0..10).map(|g| format!("{g}_brier")).collect::<Vec<_>>());
    ok(&args);
    assert_eq!(fs::read_to_string(&out).unwrap(), svg);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "model_id,M,value\n").unwrap();
    let r = soar(&["plot", "--series", s(&empty), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn plot_forecast_overlay() {
    let c = Corpus::new(&["--models", "20", "--questions", "60"]);
    let brier = c.score("cond-brier", "brier.csv");
    let acc = c.score("accuracy", "acc.csv");
    let sw = c.forecast(&brier, &acc, "sandwich", "sw");
    let sg = c.forecast(&brier, &acc, "sigmoid", "sg");
    let out = c.path("overlay.svg");
    ok(&[
        "plot", "--points", &format!("accuracy={}", s(&acc)), "--series",
        &format!("sandwich={}", s(&sw.join("forecast.csv"))), "--series",
        &format!("sigmoid={}", s(&sg.join("forecast.csv"))), "--threshold-marker", "1.5", "--out", s(&out),
    ]);
    let svg = fs::read_to_string(&out).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let labels: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("series"))
        .map(|n| n.attribute("data-label").unwrap())
        .collect();
    assert_eq!(labels, ["sandwich", "sigmoid", "accuracy (train)", "accuracy (test)"]);
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("marker")).count(), 1);
}

#[test]
fn synth_is_reproducible_and_scores() {
    let a = Corpus::new(&["--seed", "5", "--models", "10", "--questions", "40"]);
    let b = Corpus::new(&["--seed", "5", "--models", "10", "--questions", "40"]);
    for f in ["corpus/models.csv", "corpus/evals.jsonl"] {
        assert_eq!(fs::read(a.path(f)).unwrap(), fs::read(b.path(f)).unwrap());
    }
    let d = Corpus::new(&[]);
    d.score("std-brier", "std.csv");

    let dir = tempfile::tempdir().unwrap();
    let r = soar(&["synth", "--questions", "4", "--out-dir", s(dir.path())]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn flat_scenario_forecast_is_constant() {
    let c = Corpus::new(&["--scenario", "flat"]);
    let brier = c.score("cond-brier", "brier.csv");
    let acc = c.score("accuracy", "acc.csv");
    let level = column(&acc, "aggregate")[0];
    let rows = forecast_rows(&c.forecast(&brier, &acc, "sandwich", "f"));
    assert!(rows.iter().all(|p| (p.1 - level).abs() < 0.05));

    // without noise every Brier aggregate is identical: the accuracy map is undefined
    let n = Corpus::new(&["--scenario", "flat", "--noise", "0"]);
    let brier = n.score("cond-brier", "brier.csv");
    let acc = n.score("accuracy", "acc.csv");
    let r = soar(&[
        "forecast", "--scores", s(&brier), "--accuracy", s(&acc), "--threshold", "1.5", "--out", s(&n.path("f")),
    ]);
    assert_eq!(r.status.code(), Some(2));
}
