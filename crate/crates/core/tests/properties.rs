use std::f64::consts::PI;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use adiabatic_lab::adiabatic::{
    fit_power_law, prepare_run, AdiabaticApproximant, RunSettings, System,
};
use adiabatic_lab::cli::parse_config;
use adiabatic_lab::evolve::{
    factor_picture, propagate, EvolutionSpec, Generator, Picture, DUAL_PHASE_STEP,
};
use adiabatic_lab::models::{ParamValue, SpinRotatingField};
use adiabatic_lab::numerics::{
    expm_antiherm, herm_eig, ComplexMatrix, HermitianMatrix, StateVector,
};

fn hermitian(dim: usize, entries: &[(f64, f64)]) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(dim, |i, j| {
        let (re, im) = entries[i * dim + j];
        num_complex::Complex64::new(re, im)
    });
    HermitianMatrix::from_hermitian_part(&m)
}

fn matrix_entries() -> impl Strategy<Value = (usize, Vec<(f64, f64)>)> {
    (2usize..=4).prop_flat_map(|dim| {
        (
            Just(dim),
            prop::collection::vec((-5.0..5.0, -5.0..5.0), dim * dim),
        )
    })
}

fn spin_model() -> impl Strategy<Value = SpinRotatingField> {
    (1.0f64..8.0, 0.5f64..2.0, 0.1f64..3.0).prop_map(|(omega0, omega, theta)| SpinRotatingField {
        omega0,
        omega,
        theta,
        cycles: 1,
    })
}

fn ground(model: &SpinRotatingField) -> StateVector {
    StateVector::new(herm_eig(&model.hamiltonian(0.0)).unwrap().vector(0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigendecomposition_reconstructs((dim, entries) in matrix_entries()) {
        let h = hermitian(dim, &entries);
        let eig = herm_eig(&h).unwrap();
        prop_assert!(eig.reconstruct().max_diff(h.as_matrix()) < 1e-10);
        prop_assert!(eig.vectors.defect() < 1e-12);
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn step_exponential_is_unitary((dim, entries) in matrix_entries(), tau in -10.0f64..10.0) {
        let u = expm_antiherm(&hermitian(dim, &entries), tau).unwrap();
        prop_assert!(u.defect() < 1e-12);
    }

    #[test]
    fn power_law_fit_recovers_exact_data(slope in -3.0f64..0.5, scale in 1e-3f64..1e3, n in 3usize..9) {
        let times: Vec<f64> = (0..n).map(|k| 10.0 * 2f64.powi(k as i32)).collect();
        let values: Vec<f64> = times.iter().map(|t| scale * t.powf(slope)).collect();
        let fit = fit_power_law(&times, &values).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.intercept - scale.ln()).abs() < 1e-8);
        prop_assert!(fit.residual < 1e-9);
        prop_assert!(!fit.discarded);
    }

    #[test]
    fn config_round_trip(
        times in prop::collection::btree_set(1u32..5000, 1..6),
        theta in 0.0f64..PI,
        level in 0usize..2,
        phase in 1e-4f64..0.1,
        json in any::<bool>(),
    ) {
        let times: Vec<f64> = times.into_iter().map(|t| t as f64 / 4.0).collect();
        let listed: Vec<String> = times.iter().map(|t| format!("{t:?}")).collect();
        let text = format!(
            "[model]\nname = spin-rotating-field\ntheta = {theta:?}\n\n[run]\nT = {}\nlevel = {level}\nphase_step = {phase:?}\n\n[output]\nformat = {}\n",
            listed.join(", "),
            if json { "json" } else { "csv" },
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(&cfg.run.times, &times);
        prop_assert_eq!(cfg.run.level, level);
        prop_assert_eq!(cfg.run.phase_step, phase);
        prop_assert_eq!(&cfg.model_params["theta"], &ParamValue::Number(theta));
        prop_assert_eq!(cfg.output.format == adiabatic_lab::cli::Format::Json, json);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn propagation_preserves_norm_and_pictures_reconstruct(model in spin_model(), t in 1.0f64..40.0) {
        let spec = EvolutionSpec::new(model.path().unwrap(), t, ground(&model), 65, None).unwrap();
        let trace = propagate(&spec).unwrap();
        prop_assert!(trace.unitarity_defect() <= 1e-9);
        prop_assert!(trace.norm_defect() <= 1e-9);
        let ep = trace.eigenpath(1e-8).unwrap();
        for picture in [Picture::A, Picture::B] {
            let factor = factor_picture(&trace, &ep, picture).unwrap();
            for c in &factor.coefficients {
                let weight: f64 = c.iter().map(|z| z.norm_sqr()).sum();
                prop_assert!((weight - 1.0).abs() < 1e-9);
            }
            for frame in &factor.frames {
                prop_assert!(frame.defect() < 1e-9);
            }
        }
    }

    #[test]
    fn approximant_has_unit_norm_and_is_gauge_robust(
        model in spin_model(),
        t in 5.0f64..60.0,
        level in 0usize..2,
        seed in any::<u64>(),
    ) {
        let path = model.path().unwrap();
        let run = prepare_run(&path, t, System::A, &RunSettings::default()).unwrap();
        let ep = &run.eigenpath;
        let approx = AdiabaticApproximant::new(ep, level, t).unwrap();
        for k in 0..ep.len() {
            prop_assert!((approx.state(k).norm() - 1.0).abs() < 1e-12);
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let phases: Vec<Vec<f64>> = (0..ep.len())
            .map(|_| vec![rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)])
            .collect();
        let regauged = ep.regauged(&phases).unwrap();
        let other = AdiabaticApproximant::new(&regauged, level, t).unwrap();
        let base = approx.deviations(&run.trace).unwrap();
        let moved = other.deviations(&run.trace).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dual_of_dual_reproduces_original(model in spin_model(), t in 1.0f64..5.0) {
        let path = model.path().unwrap();
        let spec = |g: Generator| {
            EvolutionSpec::with_phase_step(g, t, ground(&model), 17, None, DUAL_PHASE_STEP).unwrap()
        };
        let a = propagate(&spec(Generator::Path(path.clone()))).unwrap();
        let c = propagate(&spec(Generator::Path(path).dual().dual())).unwrap();
        for (x, y) in a.samples().iter().zip(c.samples()) {
            prop_assert!(x.propagator.as_matrix().max_diff(y.propagator.as_matrix()) < 2e-6);
        }
    }
}
