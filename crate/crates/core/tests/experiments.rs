use std::fs;
use std::sync::OnceLock;

use approx::assert_relative_eq;
use kobalab::experiments::*;
use kobalab::geodesics::CertificateStatus;
use kobalab::goldilocks::Finding;
use kobalab::LabError;

fn family() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| run_visibility_family(&ExperimentConfig::visibility_family()).unwrap())
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = ExperimentConfig::parse("version = 1\n").unwrap();
    assert_eq!(cfg, ExperimentConfig::visibility_family());
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = ExperimentConfig::counterexample_suite();
    assert_eq!(
        ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap(),
        cfg
    );
}

#[test]
fn config_overrides() {
    let text = "version = 1\nprofile = \"mollified\"\nalpha = 0.5\nf0 = [1e-3, 1e-5]\nconvexity = \"c_convex\"\nbase_point = [0.0, 0.0, 2.0, 0.0]\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(cfg.profile, ProfileKind::Mollified);
    assert_eq!(cfg.f0, vec![1e-3, 1e-5]);
    assert_eq!(cfg.base_point[2], 2.0);
}

#[test]
fn invalid_configs_are_rejected() {
    for text in [
        "",
        "version = 2",
        "version = 1\nunknown_key = 3",
        "version = 1\nf0 = [1e-3, 1e-2]",
        "version = 1\nf0 = [20.0]",
        "version = 1\nc = -1.0",
        "version = 1\nlambda = 0.5",
        "version = 1\nprofile = \"mollified\"\nj_max = 12\nchords = [2, 10]",
        "version = 1\ngrid_y = [0.0, 1.0]",
        "version = 1\nprofile = \"spiral\"",
    ] {
        assert!(
            matches!(
                ExperimentConfig::parse(text),
                Err(LabError::InvalidConfig(_))
            ),
            "{text:?}"
        );
    }
}

#[test]
fn family_depths_follow_closed_form() {
    let report = family();
    assert_eq!(report.curves.len(), 8);
    let depths: Vec<f64> = report
        .curves
        .iter()
        .map(|c| c.terminal_depth.unwrap().value)
        .collect();
    // The closed form holds while D stays below the inflection value e^{-2}.
    for (c, d) in report.curves.iter().zip(&depths) {
        assert_relative_eq!(*d, c.predicted_depth.unwrap().depth, max_relative = 1e-4);
        let closed = (-(1.0 / c.f0).ln() / std::f64::consts::E).exp();
        if closed < (-2.0f64).exp() {
            assert_relative_eq!(*d, closed, max_relative = 1e-4);
        }
    }
    assert!(depths.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn family_is_certified_and_hugs_the_face() {
    let report = family();
    for c in &report.curves {
        assert_eq!(c.status, CurveStatus::Reached);
        assert_eq!(
            c.certificate.unwrap().status,
            CertificateStatus::Certified,
            "f0 = {}",
            c.f0
        );
        let d = c.terminal_depth.unwrap().value;
        assert_relative_eq!(c.endpoint_face_dist.unwrap().value, d, max_relative = 1e-12);
        assert_eq!(c.max_delta.unwrap().bound, BoundKind::PointEstimate);
    }
    assert_eq!(report.quarantined(), 0);
    let last = report.curves.last().unwrap();
    assert!(last.endpoint_face_dist.unwrap().value < 1e-2);
}

#[test]
fn family_gromov_series_grows() {
    let series = family().gromov.as_ref().unwrap();
    assert_eq!(series.entries.len(), 8);
    assert_eq!(series.bound, BoundKind::Lower);
    assert!(series.strictly_increasing);
    assert!(series.gain.unwrap() >= 1.0);
    for e in &series.entries {
        assert!(e.lower.unwrap() <= e.upper.unwrap());
        assert!((e.balance_ratio.unwrap() - 1.0).abs() < 1e-3);
    }
    let classification = family().classification.as_ref().unwrap();
    assert_eq!(classification.is_strongly_non_goldilocks, Finding::Yes);
}

#[test]
fn control_run_escapes() {
    let report = run_visibility_family(&ExperimentConfig::visibility_control()).unwrap();
    assert!(report
        .curves
        .iter()
        .all(|c| c.status == CurveStatus::Escaped && c.certificate.is_none()));
    assert!(report.gromov.is_none());
    assert_eq!(
        report.classification.as_ref().unwrap().is_weakly_goldilocks,
        Finding::Yes
    );
}

#[test]
fn counterexample_suite_passes_its_checks() {
    let report = run_counterexample_suite(&ExperimentConfig::counterexample_suite()).unwrap();
    let block = report.counterexample.as_ref().unwrap();
    for check in &block.checks {
        assert!(check.passed, "{}: {}", check.name, check.detail);
    }
    assert_eq!(block.inverse_bound.len(), 50);
    assert_eq!(block.faces.len(), 9);
    assert!(block
        .faces
        .iter()
        .all(|f| f.passed && f.witness.unwrap() > 0.0));
    let c = report.classification.as_ref().unwrap();
    assert_eq!(c.is_weakly_goldilocks, Finding::Yes);
    assert_eq!(c.is_local_goldilocks, Finding::No);
}

#[test]
fn counterexample_suite_needs_chord_profile() {
    let cfg = ExperimentConfig::visibility_family();
    assert!(matches!(
        run_counterexample_suite(&cfg),
        Err(LabError::InvalidConfig(_))
    ));
}

#[test]
fn empty_family_emits_empty_arrays() {
    let cfg = ExperimentConfig {
        f0: Vec::new(),
        ..ExperimentConfig::visibility_family()
    };
    let report = run_visibility_family(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit(&report, dir.path(), EmitFormat::Json).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], REPORT_SCHEMA);
    assert_eq!(json["curves"], serde_json::json!([]));
    assert_eq!(json["gromov"]["entries"], serde_json::json!([]));
    let back: ExperimentReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, report);
}

#[test]
fn csv_headers_are_fixed() {
    let report = run_visibility_family(&ExperimentConfig::visibility_control()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit(&report, dir.path(), EmitFormat::Csv).unwrap();
    assert_eq!(paths.len(), 3);
    let first_line = |name: &str| {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(
        first_line("curves.csv"),
        "f0,D,max_delta,lambda_target,sup_ratio,status,endpoint_face_dist"
    );
    assert_eq!(first_line("gromov.csv"), "f0,tau,balance_ratio,lower,upper");
    assert_eq!(
        first_line("classify.csv"),
        "test,status,value,decay_exponent,partial_sum,epsilon"
    );
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 9);
    assert!(curves.lines().skip(1).all(|l| l.contains(",escaped,")));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = ExperimentConfig::counterexample_suite();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let report = run_counterexample_suite(&cfg).unwrap();
        emit(&report, dir.path(), EmitFormat::Json).unwrap();
        emit(&report, dir.path(), EmitFormat::Csv).unwrap();
    }
    for name in [
        "report.json",
        "curves.csv",
        "gromov.csv",
        "classify.csv",
        "faces.csv",
    ] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
