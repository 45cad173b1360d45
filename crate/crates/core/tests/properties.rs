use cpmetric::constitutive::{stress_bundle, EnergyKind};
use cpmetric::flow::{evaluate, ModelId};
use cpmetric::sampling::{random_deformation, random_rotation, random_state, random_sym, rng_for};
use cpmetric::scenario::parse_config;
use cpmetric::tensor::{dev3, exp_sym, inner, log_psd, principal_invariants, sqrt_psd};
use cpmetric::verifier::plastic_params;
use cpmetric::{Mat3, SymMat3};
use proptest::prelude::*;

fn mat() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-3.0f64..3.0).prop_map(|v| Mat3::from_row_slice(&v))
}

fn energy() -> impl Strategy<Value = EnergyKind> {
    prop::sample::select(EnergyKind::ALL.to_vec())
}

fn spd(seed: u64) -> SymMat3 {
    exp_sym(&random_sym(&mut rng_for(seed, 0), 1.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn deviator_is_trace_free(x in mat()) {
        let d = dev3(&x);
        prop_assert!(d.trace().abs() <= 1e-14 * x.norm().max(1.0));
    }

    #[test]
    fn deviator_norm_splits(x in mat()) {
        let d = dev3(&x);
        let tr = x.trace();
        let want = inner(&x, &x.transpose()) - tr * tr / 3.0;
        let got = inner(&d, &d.transpose());
        prop_assert!((got - want).abs() <= 1e-12 * x.norm().powi(2).max(1.0));
    }

    #[test]
    fn invariants_commute(a in mat(), b in mat()) {
        let (i1, i2, i3) = principal_invariants(&(a * b));
        let (j1, j2, j3) = principal_invariants(&(b * a));
        let s = (a.norm() * b.norm()).max(1.0);
        prop_assert!((i1 - j1).abs() <= 1e-12 * s);
        prop_assert!((i2 - j2).abs() <= 1e-12 * s * s);
        prop_assert!((i3 - j3).abs() <= 1e-12 * s * s * s);
    }

    #[test]
    fn spectral_functions_are_isotropic(seed in any::<u64>()) {
        let s = spd(seed);
        let q = random_rotation(&mut rng_for(seed, 1));
        let rotated = s.congruence(&q.transpose());
        let cases: [(SymMat3, SymMat3); 3] = [
            (sqrt_psd(&rotated).unwrap(), sqrt_psd(&s).unwrap().congruence(&q.transpose())),
            (log_psd(&rotated).unwrap(), log_psd(&s).unwrap().congruence(&q.transpose())),
            (exp_sym(&rotated), exp_sym(&s).congruence(&q.transpose())),
        ];
        for (a, b) in cases {
            prop_assert!((a.to_mat() - b.to_mat()).norm() <= 1e-10 * b.norm().max(1.0));
        }
    }

    #[test]
    fn sqrt_squares_back(seed in any::<u64>()) {
        let s = spd(seed);
        let r = sqrt_psd(&s).unwrap();
        prop_assert!(((r * r) - s.to_mat()).norm() <= 1e-12 * s.norm());
        prop_assert!((exp_sym(&log_psd(&s).unwrap()).to_mat() - s.to_mat()).norm() <= 1e-12 * s.norm());
    }

    #[test]
    fn transport_does_not_collapse(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let fe = random_deformation(&mut rng, 0.5);
        let s = random_sym(&mut rng, 2.0).to_mat();
        let t = fe.transpose() * s * fe.inv().unwrap().transpose();
        prop_assert!(inner(&t, &t.transpose()) >= 0.5 * s.norm().powi(2) - 1e-12);
    }

    #[test]
    fn sigma_tilde_cp_is_symmetric(seed in any::<u64>(), e in energy()) {
        let st = random_state(seed, 0);
        let b = stress_bundle(&plastic_params(e), &st.c, &st.cp, Some(&st.f)).unwrap();
        let m = b.sigma_tilde * st.cp;
        prop_assert!(m.asymmetry() <= 1e-10 * m.norm().max(1.0));
        prop_assert!(b.f_script >= 0.0);
        for v in b.yield_measures() {
            prop_assert!(v >= 0.0 && v.is_finite());
        }
    }

    #[test]
    fn consistent_models_keep_det(seed in any::<u64>(), e in energy()) {
        let st = random_state(seed, 0);
        let p = plastic_params(e);
        for m in ModelId::CONSISTENT {
            let ev = evaluate(m, &p, &st.c, &st.cp.to_mat(), Some(&st.f)).unwrap();
            let r = inner(&ev.direction, &st.cp.to_mat());
            prop_assert!(r.abs() <= 1e-12 * ev.direction.norm().max(1.0), "{m}: {r:e}");
            prop_assert!(ev.dissipation_rate <= 1e-12 * ev.measure.max(1.0));
        }
    }

    #[test]
    fn config_round_trip(
        model in prop::sample::select(ModelId::CONSISTENT.to_vec()),
        e in energy(),
        mu in 0.1f64..10.0,
        lambda in 0.0f64..50.0,
        eta in 1e-3f64..10.0,
        steps in 1usize..5000,
        seed in 0u64..(i64::MAX as u64),
        preset in prop::sample::select(cpmetric::scenario::PRESETS.to_vec()),
    ) {
        let text = format!(
            "model = \"{}\"\nenergy = \"{}\"\nseed = {seed}\npreset = \"{preset}\"\n[material]\nmu = {mu:?}\nlambda = {lambda:?}\neta = {eta:?}\n[controls]\nsteps = {steps}\n",
            model.key(),
            e.key(),
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(cfg.params.mu, mu);
        prop_assert_eq!(cfg.steps, steps);
        prop_assert_eq!(cfg.seed, seed);
        prop_assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }
}
