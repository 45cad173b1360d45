use cpmetric::constitutive::EnergyKind;
use cpmetric::scenario::{self, parse_config, write_trajectory_csv, LoadingKind, CSV_COLUMNS, PRESETS};
use cpmetric::{Error, MaterialParams, ModelId, Scheme, StepControls};

const MINIMAL: &str = r#"
model = "lion1997"
energy = "isochoric_nh"
preset = "simple_shear"
"#;

#[test]
fn minimal_config_fills_defaults() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.models, vec![ModelId::Lion1997]);
    let d = MaterialParams::default();
    assert_eq!(cfg.params, MaterialParams { energy: EnergyKind::IsochoricNeoHooke, ..d });
    assert_eq!(cfg.steps, 1000);
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.loading.kind, LoadingKind::SimpleShear);
    assert_eq!(cfg.loading.total_time, 1.0);
    assert_eq!(cfg.controls, StepControls { dt: 1e-3, scheme: Scheme::ExponentialMap, ..Default::default() });
}

#[test]
fn negative_eta_names_the_field() {
    let text = format!("{MINIMAL}\n[material]\neta = -1.0\n");
    match parse_config(&text) {
        Err(Error::Validation { field, .. }) => assert_eq!(field, "material.eta"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_errors_carry_a_line() {
    let text = "model = \"lion1997\"\n\n[material\nmu = 1\n";
    match parse_config(text) {
        Err(Error::Parse(msg)) => assert!(msg.contains("line 3"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = format!("{MINIMAL}\n[material]\nmuu = 1.0\n");
    assert!(matches!(parse_config(&text), Err(Error::Parse(msg)) if msg.contains("muu")));
}

#[test]
fn unknown_ids_are_validation_errors() {
    assert!(matches!(parse_config("model = \"nope\""), Err(Error::Validation { field, .. }) if field == "model"));
    assert!(matches!(
        parse_config("model = \"lion1997\"\nenergy = \"nope\""),
        Err(Error::Validation { field, .. }) if field == "energy"
    ));
}

#[test]
fn non_increasing_knots_are_rejected() {
    let text = format!("{MINIMAL}\n[loading]\nknots = [[0.0, 0.0], [0.5, 0.2], [0.5, 0.3]]\n");
    assert!(matches!(parse_config(&text), Err(Error::Validation { field, .. }) if field.starts_with("loading")));
}

#[test]
fn exponential_map_with_simo_hughes_is_refused() {
    let text = "model = \"simo_hughes1998\"\n[controls]\nscheme = \"exponential_map\"\n";
    assert!(matches!(parse_config(text), Err(Error::InadmissibleScheme { .. })));
}

#[test]
fn round_trip() {
    let texts = [
        MINIMAL.to_string(),
        "models = [\"helm2001\", \"miehe1995\"]\nenergy = \"svk\"\nseed = 7\n[material]\nlambda = 3.5\n[controls]\nsteps = 250\nscheme = \"rk4\"\n".into(),
        "model = \"appendix_a3\"\npreset = \"non_proportional\"\n[output]\ntrajectory = \"a3.csv\"\n".into(),
        "model = \"lion1997\"\n[loading]\nkind = \"piecewise_table\"\ntotal_time = 2.0\ntable = [[0.0, 1, 0, 0, 0, 1, 0, 0, 0, 1], [2.0, 1, 0.4, 0, 0, 1, 0, 0, 0, 1]]\n".into(),
    ];
    for text in texts {
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{text}");
    }
    for name in PRESETS {
        let cfg = parse_config(&format!("model = \"lion1997\"\npreset = \"{name}\"\n")).unwrap();
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg, "{name}");
    }
}

#[test]
fn loading_programs_keep_det_positive() {
    for name in PRESETS {
        let (prog, _) = scenario::preset(name).unwrap();
        for k in 0..=100 {
            let t = prog.total_time * k as f64 / 100.0;
            assert!(cpmetric::integrator::DeformationPath::at(&prog, t).det() > 0.0, "{name} t={t}");
        }
    }
    let f = scenario::uniaxial_stretch(1.3);
    assert!((f.det() - 1.0).abs() < 1e-15);
    assert_eq!(scenario::simple_shear(0.5).0[0][1], 0.5);
}

#[test]
fn csv_layout_is_fixed() {
    assert_eq!(CSV_COLUMNS.len(), 27);
    let cfg = scenario::demo(ModelId::Lion1997);
    let t = cfg.run(ModelId::Lion1997).unwrap();
    let mut a = Vec::new();
    write_trajectory_csv(&t, &mut a).unwrap();
    let text = String::from_utf8(a.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# format_version: 1"));
    assert_eq!(lines.next().unwrap().split(',').collect::<Vec<_>>(), CSV_COLUMNS);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), t.records.len());
    assert!(rows.iter().all(|r| r.split(',').count() == CSV_COLUMNS.len()));

    let mut b = Vec::new();
    write_trajectory_csv(&cfg.run(ModelId::Lion1997).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_demo_runs() {
    for m in ModelId::ALL {
        let cfg = scenario::demo(m);
        cfg.validate().unwrap();
        let t = cfg.run(m).unwrap();
        assert_eq!(t.records.len(), cfg.steps + 1, "{m}");
    }
}
