use std::path::{Path, PathBuf};

use siegel::pipeline::*;
use siegel_core::arithmetic::ClassKind;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("siegel-pipeline-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig { escape_resolution: 128, mu_resolution: 128, invariance_samples: 20, out_dir: out.into(), ..Default::default() }
}

fn bundle(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn golden_run_completes_and_repeats_byte_for_byte() {
    let dir = scratch("golden");
    let cfg = small(&dir);
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.completed.len(), 8);
    assert!(report.failure.is_none());
    let first = bundle(&dir);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    for f in ["report.json", "model.json", "partitions.csv", "cells.csv", "dilatation.csv", "area_decay.csv"] {
        assert!(names.contains(&f), "missing {f}");
    }

    let classify = report.classify.as_ref().unwrap();
    assert_eq!(classify.class.kind, ClassKind::BoundedType);
    assert!(classify.interlacing.all_pass());
    let solve = report.solve.as_ref().unwrap();
    assert!((solve.rho_quotient - solve.alpha).abs() < 2e-5);
    assert!(solve.alpha_quotients.iter().all(|&a| a == 4));
    let area = report.area_decay.as_ref().unwrap();
    assert!(area.decay.strictly_decreasing && area.decay.delta_fit < 1.0);
    assert!(area.invariance_defect < 1e-6);

    run_pipeline(&cfg).unwrap();
    assert!(first == bundle(&dir), "rerun changed the bundle");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn low_degree_stops_at_the_model_stage() {
    let dir = scratch("degree4");
    let cfg = ExperimentConfig { degree: 4, ..small(&dir) };
    match run_pipeline(&cfg) {
        Err(PipelineError::StageFailure { stage, cause }) => {
            assert_eq!(stage, Stage::Model);
            assert!(cause.contains("residual"), "{cause}");
        }
        other => panic!("expected a model failure, got {other:?}"),
    }
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    let report: PipelineReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.completed, vec![Stage::Classify]);
    assert_eq!(report.failure.unwrap().stage, Stage::Model);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_configs_are_rejected_before_any_output() {
    let dir = scratch("invalid");
    for cfg in [
        ExperimentConfig { eps_lo: 0.6, ..small(&dir) },
        ExperimentConfig { fit_tol: 0.0, ..small(&dir) },
        ExperimentConfig { max_level: 2, ..small(&dir) },
        ExperimentConfig { theta: "1/2".into(), ..small(&dir) },
    ] {
        assert!(matches!(run_pipeline(&cfg), Err(PipelineError::Config(_))));
    }
    assert!(!dir.exists());
}

#[test]
fn config_json_is_strict_and_defaults_missing_fields() {
    let cfg: ExperimentConfig = serde_json::from_str(r#"{"theta": "silver", "seed": 7}"#).unwrap();
    assert_eq!(cfg.theta, "silver");
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.max_level, ExperimentConfig::default().max_level);
    assert!(serde_json::from_str::<ExperimentConfig>(r#"{"thetta": "golden"}"#).is_err());
    let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn stage_names_are_kebab_case() {
    assert_eq!(Stage::AreaDecay.to_string(), "area-decay");
    assert_eq!(Stage::DavidCheck.to_string(), "david-check");
}
