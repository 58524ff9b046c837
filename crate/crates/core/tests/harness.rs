use splicelab::config::RunConfig;
use splicelab::cutoff::Regime;
use splicelab::harness::{fit_rate, run_check, CheckId, CheckMode, CheckSpec, Param, RateModel, Sweep};
use splicelab::report::{self, read_report, to_csv_string, write_report};
use splicelab::SpliceError;

#[test]
fn asymptotic_regime_skips_grid_checks() {
    let mut cfg = RunConfig::default();
    cfg.regime = Regime::Asymptotic;
    cfg.splice.r = 1e6;
    let rep = report::verify(&cfg).unwrap();
    for id in CheckId::ALL {
        let skipped = rep.skipped.iter().any(|s| s.check_id == id);
        assert_eq!(skipped, id.mode() == CheckMode::Grid, "{id}");
    }
    assert!(rep.all_pass, "{:?}", rep.checks);
    assert!(rep.results.iter().all(|r| r.pass));
}

#[test]
fn asymptotic_regime_rejects_small_r() {
    let mut cfg = RunConfig::default();
    cfg.regime = Regime::Asymptotic;
    assert!(cfg.validate().is_err());
}

#[test]
fn native_sweep_over_d_recovers_the_decay_rate() {
    let cfg = RunConfig::default();
    let spec = CheckSpec {
        sweep: Some(Sweep { param: Param::D, values: vec![12.0, 12.5, 13.0, 13.5, 14.0] }),
        ..CheckSpec::new(CheckId::CrossTermDecay)
    };
    let rows = run_check(&spec, &cfg).unwrap();
    assert!(rows.iter().all(|r| r.pass));
    let fit = fit_rate(&rows, "scaled_cross_term", Param::D, RateModel::Exp).unwrap();
    // e^{−2δd} with δ = 0.5
    assert!((fit.rate + 1.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn foreign_sweep_repeats_the_check_and_marks_infeasible_points() {
    let cfg = RunConfig::default();
    let spec = CheckSpec {
        sweep: Some(Sweep { param: Param::R, values: vec![10.0, 20.0] }),
        ..CheckSpec::new(CheckId::Roundtrip)
    };
    let rows = run_check(&spec, &cfg).unwrap();
    let infeasible: Vec<_> = rows.iter().filter(|r| r.quantity == "infeasible").collect();
    assert_eq!(infeasible.len(), 1);
    assert_eq!(infeasible[0].point.r, 10.0);
    assert!(!infeasible[0].pass);
    assert!(rows.iter().filter(|r| r.quantity == "sup_error").all(|r| r.pass && r.point.r == 20.0));
}

#[test]
fn profile_radius_is_not_a_foreign_sweep() {
    let spec = CheckSpec {
        sweep: Some(Sweep { param: Param::SmallR, values: vec![0.1] }),
        ..CheckSpec::new(CheckId::Jensen)
    };
    assert!(matches!(run_check(&spec, &RunConfig::default()), Err(SpliceError::InvalidParameter(_))));
}

#[test]
fn zero_tolerance_fails_the_constant_envelope() {
    let spec = CheckSpec { tolerance: Some(0.0), ..CheckSpec::new(CheckId::DthetaRate) };
    let rows = run_check(&spec, &RunConfig::default()).unwrap();
    let spread = rows.iter().find(|r| r.quantity == "constant_spread").unwrap();
    assert!(!spread.pass);
    // the exact-zero row still passes at zero tolerance
    assert!(rows.iter().find(|r| r.quantity == "s_independent").unwrap().pass);
}

#[test]
fn report_files_roundtrip_and_csv_is_deterministic() {
    let mut cfg = RunConfig::default();
    for id in CheckId::ALL {
        if !matches!(id, CheckId::DetBounds | CheckId::Jensen | CheckId::DrRate) {
            cfg.checks.entry(id.as_str().to_string()).or_default().enabled = false;
        }
    }
    let a = report::verify(&cfg).unwrap();
    let b = report::verify(&cfg).unwrap();
    assert_eq!(to_csv_string(&a.results).unwrap(), to_csv_string(&b.results).unwrap());
    assert_eq!(a.checks.len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = report::verify_paths(dir.path());
    write_report(&a, &csv, &json).unwrap();
    assert_eq!(read_report(&json).unwrap(), a);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), to_csv_string(&a.results).unwrap());
}

#[test]
fn config_rejects_unknown_fields_and_roundtrips() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    assert!(RunConfig::from_json(r#"{"splice": {"R": 20.0, "width": 1.0}}"#).is_err());
    let partial = RunConfig::from_json(r#"{"splice": {"R": 30.0}, "weight": {"delta": 0.4, "k": 2, "p": 4.0}}"#).unwrap();
    assert_eq!(partial.splice.r, 30.0);
    assert_eq!(partial.splice.l, cfg.splice.l);
    assert_eq!(partial.weight.k, 2);
}
