use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use soar::synth::{generate, write_corpus, Scenario, ScenarioSpec};
use soar_ffi::*;

fn corpus(dir: &Path) -> (CString, CString) {
    let spec = ScenarioSpec {
        n_models: 12,
        n_questions: 30,
        ..ScenarioSpec::new(Scenario::Emergent)
    };
    let (m, t) = generate(&spec).unwrap();
    write_corpus(&m, &t, dir).unwrap();
    let c = |name: &str| CString::new(dir.join(name).to_str().unwrap()).unwrap();
    (c("models.csv"), c("evals.jsonl"))
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(soar_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn dataset_scores_forecast_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (models, evals) = corpus(dir.path());
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(soar_dataset_load(models.as_ptr(), evals.as_ptr(), &mut ds), SoarStatus::Ok);
        let (mut nm, mut nq) = (0, 0);
        assert_eq!(soar_dataset_shape(ds, &mut nm, &mut nq), SoarStatus::Ok);
        assert_eq!((nm, nq), (12, 30));

        let mut brier = ptr::null_mut();
        let mut acc = ptr::null_mut();
        assert_eq!(soar_scores_compute(ds, SoarMetric::BinaryBrierConditional, &mut brier), SoarStatus::Ok);
        assert_eq!(soar_scores_compute(ds, SoarMetric::Accuracy, &mut acc), SoarStatus::Ok);
        let mut v = 0.0;
        assert_eq!(soar_scores_get(brier, 3, 7, &mut v), SoarStatus::Ok);
        assert!((-1.0..=0.0).contains(&v));
        assert_eq!(soar_scores_get(brier, 12, 0, &mut v), SoarStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        let (mut agg, mut m) = (0.0, 0.0);
        assert_eq!(soar_scores_aggregate(acc, 0, &mut agg), SoarStatus::Ok);
        assert_eq!(soar_scores_effective_size(acc, 0, &mut m), SoarStatus::Ok);
        assert_eq!(m, -1.0);

        let mut f = ptr::null_mut();
        assert_eq!(
            soar_forecast_run(brier, acc, SoarMethod::Sandwich, 1.5, 3, 5, 2, &mut f),
            SoarStatus::Ok,
            "{}",
            last_error()
        );
        let mut n = 0;
        assert_eq!(soar_forecast_len(f, &mut n), SoarStatus::Ok);
        assert!(n >= 200);
        let mut p = SoarForecastPoint {
            m: 0.0,
            predicted_brier: 0.0,
            predicted_accuracy: 0.0,
            is_train_region: false,
        };
        assert_eq!(soar_forecast_point(f, 0, &mut p), SoarStatus::Ok);
        assert!(p.is_train_region && p.predicted_brier.is_finite());
        let mut a = 0.0;
        assert_eq!(soar_forecast_accuracy_at(f, p.m, &mut a), SoarStatus::Ok);
        assert!((a - p.predicted_accuracy).abs() < 1e-12);
        assert_eq!(soar_forecast_point(f, n, &mut p), SoarStatus::InvalidArgument);
        soar_forecast_free(f);

        let mut f = ptr::null_mut();
        assert_eq!(soar_forecast_run(brier, acc, SoarMethod::Sandwich, 1.5, 3, 40, 2, &mut f), SoarStatus::InvalidArgument);
        assert!(f.is_null());
        assert!(last_error().contains("degree 40"));

        soar_scores_free(brier);
        soar_scores_free(acc);
        soar_dataset_free(ds);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let missing = CString::new("/nonexistent/models.csv").unwrap();
        let mut ds = ptr::null_mut();
        assert_eq!(soar_dataset_load(missing.as_ptr(), missing.as_ptr(), &mut ds), SoarStatus::Io);
        assert!(last_error().contains("/nonexistent/models.csv"));
        assert_eq!(soar_dataset_load(ptr::null(), missing.as_ptr(), &mut ds), SoarStatus::NullPointer);

        let mut out = 0.0;
        assert_eq!(soar_binary_brier(1.5, &mut out), SoarStatus::Validation);
        assert_eq!(soar_binary_brier(0.5, ptr::null_mut()), SoarStatus::NullPointer);
        let flat = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        assert_eq!(soar_pearson(flat.as_ptr(), y.as_ptr(), 3, &mut out), SoarStatus::Numerical);
        soar_dataset_free(ptr::null_mut());
        soar_scores_free(ptr::null_mut());
        soar_forecast_free(ptr::null_mut());
    }
}

#[test]
fn pure_helpers() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(soar_binary_brier(0.5, &mut out), SoarStatus::Ok);
        assert_eq!(out, -0.25);
        assert_eq!(soar_effective_model_size(1e22, &mut out), SoarStatus::Ok);
        assert!((out - 1.0).abs() < 1e-12);
        let probs = [0.2, 0.2, 0.1, 0.1];
        assert_eq!(soar_conditional_prob(probs.as_ptr(), 4, 0, &mut out), SoarStatus::Ok);
        assert!((out - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(soar_conditional_prob(probs.as_ptr(), 4, 4, &mut out), SoarStatus::InvalidArgument);

        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0];
        assert_eq!(soar_pearson(x.as_ptr(), y.as_ptr(), 3, &mut out), SoarStatus::Ok);
        assert!((out - 0.5).abs() < 1e-12);
        assert_eq!(soar_spearman(x.as_ptr(), y.as_ptr(), 3, &mut out), SoarStatus::Ok);
        assert!((out - 0.5).abs() < 1e-12);
        assert_eq!(soar_kendall_tau_b(x.as_ptr(), y.as_ptr(), 3, &mut out), SoarStatus::Ok);
        assert!((out - 1.0 / 3.0).abs() < 1e-12);

        let mut b = [0usize; 11];
        assert_eq!(soar_group_boundaries(14042, 10, b.as_mut_ptr(), 11), SoarStatus::Ok);
        assert_eq!((b[1], b[9], b[10]), (1404, 12637, 14042));
        assert_eq!(soar_group_boundaries(14042, 10, b.as_mut_ptr(), 10), SoarStatus::InvalidArgument);
        assert_eq!(soar_group_boundaries(3, 10, b.as_mut_ptr(), 11), SoarStatus::InvalidArgument);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/soar.h")
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(header()).unwrap();
    for f in [
        "soar_last_error_message",
        "soar_dataset_load",
        "soar_dataset_free",
        "soar_dataset_shape",
        "soar_scores_compute",
        "soar_scores_free",
        "soar_scores_shape",
        "soar_scores_get",
        "soar_scores_aggregate",
        "soar_scores_effective_size",
        "soar_forecast_run",
        "soar_forecast_free",
        "soar_forecast_len",
        "soar_forecast_point",
        "soar_forecast_accuracy_at",
        "soar_forecast_test_rmse",
        "soar_effective_model_size",
        "soar_binary_brier",
        "soar_conditional_prob",
        "soar_pearson",
        "soar_spearman",
        "soar_kendall_tau_b",
        "soar_group_boundaries",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct SoarDataset SoarDataset;"));
    assert!(h.contains("SOAR_STATUS_NUMERICAL = 2"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "soar.h"

int main(int argc, char **argv) {
    SoarDataset *ds = NULL;
    SoarScores *brier = NULL, *acc = NULL;
    SoarForecast *f = NULL;
    if (soar_dataset_load(argv[1], argv[2], &ds) != SOAR_STATUS_OK) return 10;
    if (soar_scores_compute(ds, SOAR_METRIC_BINARY_BRIER_CONDITIONAL, &brier) != SOAR_STATUS_OK) return 11;
    if (soar_scores_compute(ds, SOAR_METRIC_ACCURACY, &acc) != SOAR_STATUS_OK) return 12;
    if (soar_forecast_run(brier, acc, SOAR_METHOD_SANDWICH, 1.5, 3, 5, 2, &f) != SOAR_STATUS_OK) return 13;
    double a = 0.0;
    soar_forecast_accuracy_at(f, 2.5, &a);
    printf("%.17g\n", a);
    double bad = 0.0;
    if (soar_binary_brier(2.0, &bad) != SOAR_STATUS_VALIDATION) return 14;
    if (soar_last_error_message()[0] == '\0') return 15;
    soar_forecast_free(f);
    soar_scores_free(brier);
    soar_scores_free(acc);
    soar_dataset_free(ds);
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let target = Path::new(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().to_path_buf();
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("libsoar_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let cc = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("cc available");
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));

    let data = dir.path().join("corpus");
    let (models, evals) = corpus(&data);
    let run = Command::new(&exe)
        .arg(models.to_str().unwrap())
        .arg(evals.to_str().unwrap())
        .output()
        .unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let from_c: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();

    unsafe {
        let (mut ds, mut b, mut a, mut f) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        soar_dataset_load(models.as_ptr(), evals.as_ptr(), &mut ds);
        soar_scores_compute(ds, SoarMetric::BinaryBrierConditional, &mut b);
        soar_scores_compute(ds, SoarMetric::Accuracy, &mut a);
        soar_forecast_run(b, a, SoarMethod::Sandwich, 1.5, 3, 5, 2, &mut f);
        let mut expected = 0.0;
        soar_forecast_accuracy_at(f, 2.5, &mut expected);
        assert_eq!(from_c, expected);
        soar_forecast_free(f);
        soar_scores_free(a);
        soar_scores_free(b);
        soar_dataset_free(ds);
    }
}
