use anisocs_core::experiments::{
    aggregate, emit_report, run, ExperimentConfig, ExperimentReport, MeasurementKind, OutputFormat,
    SamplingKind, SparsifierKind, StudyTag,
};
use anisocs_core::Error;

fn small(study: StudyTag) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        study,
        trials: 4,
        sparsity: vec![2, 3],
        budgets: vec![10, 16],
        ..ExperimentConfig::default()
    };
    cfg.geometry.grid_n = 32;
    cfg
}

#[test]
fn phase_runs_are_deterministic() {
    let cfg = small(StudyTag::Phase);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trials.len(), 2 * 2 * 4);
    let mut other = cfg.clone();
    other.seed = 1;
    assert_ne!(run(&other).unwrap().trials, a.trials);
}

#[test]
fn aggregates_are_recomputable_from_trials() {
    let mut cfg = small(StudyTag::Phase);
    cfg.schemes = vec![SamplingKind::Uniform, SamplingKind::Bernoulli];
    let report = run(&cfg).unwrap();
    assert_eq!(aggregate(&report.trials), report.aggregates);
    for row in &report.aggregates {
        assert_eq!(row.trials, 4);
        assert!((row.success_rate - row.successes as f64 / 4.0).abs() < 1e-15);
    }
}

#[test]
fn report_json_round_trip_is_exact() {
    let mut cfg = small(StudyTag::Recover);
    cfg.geometry.sparsifier = SparsifierKind::Haar;
    cfg.schemes = vec![SamplingKind::VariableDensity];
    cfg.solver.trace = true;
    let report = run(&cfg).unwrap();
    assert!(!report.trace.is_empty());
    let back = ExperimentReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn emitted_files_parse() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small(StudyTag::Phase)).unwrap();
    let files = emit_report(&report, dir.path(), &[OutputFormat::Csv, OutputFormat::Svg, OutputFormat::Json]).unwrap();
    assert!(files.iter().all(|f| f.exists()));
    let csv = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), report.trials.len() + 1);
    let svg = std::fs::read_to_string(dir.path().join("success.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn eit_arms_see_identical_trials() {
    let mut cfg = small(StudyTag::EitDemo);
    cfg.geometry.measurement = MeasurementKind::Cgo;
    cfg.sparsity = vec![2];
    cfg.budgets = vec![16];
    let report = run(&cfg).unwrap();
    let cgo: Vec<_> = report.trials.iter().filter(|t| t.arm.starts_with("cgo:")).collect();
    let four: Vec<_> = report.trials.iter().filter(|t| t.arm.starts_with("fourier:")).collect();
    assert_eq!(cgo.len(), four.len());
    for (a, b) in cgo.iter().zip(&four) {
        assert_eq!(a.seed, b.seed);
    }
    assert_eq!(report.extras["bounds_ok"], 1.0);
}

#[test]
fn config_errors_carry_pointers() {
    match ExperimentConfig::from_json(r#"{"geometry": {"grid_n": "big"}}"#) {
        Err(Error::Config { pointer, .. }) => assert_eq!(pointer, "/geometry/grid_n"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        ExperimentConfig::from_json(r#"{"bogus": 1}"#),
        Err(Error::Config { .. })
    ));
    let cfg = ExperimentConfig::from_json(r#"{"study": "coherence", "seed": 3}"#).unwrap();
    assert_eq!(cfg.study, StudyTag::Coherence);
    assert_eq!(cfg.seed, 3);
}
