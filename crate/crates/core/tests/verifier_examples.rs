use cpmetric::constitutive::{EnergyKind, MaterialParams};
use cpmetric::scenario::{self, LoadingKind, LoadingProgram};
use cpmetric::verifier::{
    check_consistency, check_deficiencies, check_equivalence, check_stress_identities, run_suite, Bound, CheckReport,
    Suite, VerifyOptions,
};
use cpmetric::{Error, ModelId, Scheme, StepControls};

fn by_name<'a>(reports: &'a [CheckReport], name: &str) -> &'a CheckReport {
    reports.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn small() -> VerifyOptions {
    VerifyOptions { samples: 200, estimate_samples: 2000, ..Default::default() }
}

#[test]
fn grandi_stefanelli_shear_run_is_consistent() {
    let t = scenario::demo(ModelId::GrandiStefanelli2015).run(ModelId::GrandiStefanelli2015).unwrap();
    let reports = check_consistency(&t, &VerifyOptions::default()).unwrap();
    assert!(!reports.is_empty());
    for r in &reports {
        assert!(r.pass, "{}", r.line());
        assert!(r.witness.is_none());
    }
}

#[test]
fn simo_hughes_shear_run_fails_the_det_check() {
    let cfg = scenario::demo(ModelId::SimoHughes1998);
    let t = cfg.run(ModelId::SimoHughes1998).unwrap();
    let reports = check_consistency(&t, &VerifyOptions::default()).unwrap();
    let det = reports.iter().find(|r| r.name.ends_with(".det")).unwrap();
    assert!(!det.pass);
    assert!(det.worst_residual > 1e-4);
    assert!(det.witness.is_some());
    // The drift grows along the run.
    let k = t.records.len() / 2;
    assert!(t.records[k].det_residual < t.last().det_residual);
    assert!(by_name(&reports, "consistency.simo_hughes1998.symmetry").pass);
}

#[test]
fn appendix_a3_run_fails_the_symmetry_check() {
    let t = scenario::demo(ModelId::AppendixA3).run(ModelId::AppendixA3).unwrap();
    let reports = check_consistency(&t, &VerifyOptions::default()).unwrap();
    let sym = by_name(&reports, "consistency.appendix_a3.symmetry");
    assert!(!sym.pass);
    assert!(sym.worst_residual > 1e-6);
}

#[test]
fn lion_and_grandi_stefanelli_trajectories_agree() {
    let p = MaterialParams::with_energy(EnergyKind::IsochoricNeoHooke);
    let prog = LoadingProgram::ramp(LoadingKind::SimpleShear, 1.0, 0.0, 0.5);
    let r = check_equivalence(
        ModelId::Lion1997,
        ModelId::GrandiStefanelli2015,
        &p,
        &p,
        &prog,
        &StepControls::default(),
        1000,
        &VerifyOptions::default(),
    )
    .unwrap();
    assert!(r.pass && r.worst_residual < 1e-6, "{}", r.line());
}

#[test]
fn equivalence_refuses_mismatched_radii() {
    let a = MaterialParams::default();
    let b = MaterialParams { yield_radius_factor: (1.0f64 / 3.0).sqrt(), ..a };
    let prog = LoadingProgram::ramp(LoadingKind::SimpleShear, 1.0, 0.0, 0.5);
    let r = check_equivalence(
        ModelId::SimoMiehe1992,
        ModelId::Lion1997,
        &a,
        &b,
        &prog,
        &StepControls::default(),
        10,
        &VerifyOptions::default(),
    );
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn equivalence_refuses_inconsistent_models() {
    let p = MaterialParams::default();
    let prog = LoadingProgram::ramp(LoadingKind::SimpleShear, 1.0, 0.0, 0.5);
    let c = StepControls { scheme: Scheme::ForwardEuler, ..Default::default() };
    let r = check_equivalence(ModelId::SimoHughes1998, ModelId::Lion1997, &p, &p, &prog, &c, 10, &VerifyOptions::default());
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn stress_identities_pass_at_default_tolerances() {
    let reports = check_stress_identities(&VerifyOptions::default());
    for energy in EnergyKind::ALL {
        for check in ["yield_measure_coincidence", "transform_relations", "sigma_tilde_cp_symmetry", "f_script_frame"] {
            let r = by_name(&reports, &format!("stress.{check}.{}", energy.key()));
            assert_eq!(r.samples, 1000);
            assert!(r.pass, "{}", r.line());
        }
    }
    let inv = by_name(&reports, "stress.invariant_equality");
    assert!(inv.pass && inv.threshold == 1e-10);
}

#[test]
fn deficiencies_are_exhibited() {
    let reports = check_deficiencies(&VerifyOptions::default()).unwrap();
    for r in &reports {
        assert!(r.pass, "{}", r.line());
    }
    assert_eq!(by_name(&reports, "deficiency.nonconvexity_witness").worst_residual, 0.0);
    let drift = by_name(&reports, "deficiency.simo_hughes_det_drift");
    assert_eq!(drift.bound, Bound::Lower);
    assert!(drift.worst_residual > 1e-4);
    let gap = by_name(&reports, "deficiency.f_script_gap");
    assert!(gap.worst_residual > 1e-3);
    assert!(by_name(&reports, "deficiency.appendix_a3_skew").worst_residual > 1e-6);
}

#[test]
fn reports_are_reproducible_for_a_seed() {
    let a = run_suite(Suite::Stress, &small()).unwrap();
    let b = run_suite(Suite::Stress, &small()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let other = run_suite(Suite::Stress, &VerifyOptions { seed: 7, ..small() }).unwrap();
    assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&other).unwrap());
}

#[test]
fn suite_output_is_sorted_by_name() {
    let r = run_suite(Suite::Algebra, &small()).unwrap();
    assert!(r.windows(2).all(|w| w[0].name < w[1].name));
}

#[test]
fn a_tightened_threshold_fails_with_a_witness() {
    let mut opts = small();
    opts.thresholds.overrides.insert("stress.yield_measure_coincidence.svk".into(), 0.0);
    let r = run_suite(Suite::Stress, &opts).unwrap();
    let bad = by_name(&r, "stress.yield_measure_coincidence.svk");
    assert!(!bad.pass);
    let w = bad.witness.as_ref().expect("failure carries a witness");
    assert!(w.get("f").is_some() && w.get("cp").is_some());
    assert!(r.iter().filter(|x| !x.pass).count() == 1);
}

#[test]
fn pass_follows_the_bound() {
    assert!(CheckReport::new("x", "", 1.0, 2.0, Bound::Upper, 1, None).pass);
    assert!(!CheckReport::new("x", "", 3.0, 2.0, Bound::Upper, 1, None).pass);
    assert!(CheckReport::new("x", "", 3.0, 2.0, Bound::Lower, 1, None).pass);
    assert!(!CheckReport::new("x", "", f64::NAN, 2.0, Bound::Upper, 1, None).pass);
}
