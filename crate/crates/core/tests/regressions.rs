use std::f64::consts::PI;

use adiabatic_lab::adiabatic::{condition_sweep, prepare_run, ConditionMode, RunSettings, System};
use adiabatic_lab::evolve::{derivative_probe, propagate, EvolutionSpec, DUAL_PHASE_STEP};
use adiabatic_lab::inconsistency::{premise_probe, spin_fidelity_check};
use adiabatic_lab::models::SpinRotatingField;
use adiabatic_lab::numerics::{herm_eig, StateVector};

fn spin(theta: f64) -> SpinRotatingField {
    SpinRotatingField {
        omega0: 4.0,
        omega: 1.0,
        theta,
        cycles: 1,
    }
}

fn overlap_gap(theta: f64) -> f64 {
    let path = spin(theta).path().unwrap();
    let run = prepare_run(&path, 50.0, System::A, &RunSettings::default()).unwrap();
    premise_probe(&run.eigenpath, &run.trace, "spin")
        .unwrap()
        .overlap_gap
}

#[test]
fn overlap_gap_baseline() {
    let gap = overlap_gap(PI / 3.0);
    assert!((gap - 2.399049377185e-2).abs() < 1e-9, "{gap:e}");
}

#[test]
fn overlap_gap_grows_with_tilt() {
    let gaps: Vec<f64> = (0..9)
        .map(|k| overlap_gap(PI / 8.0 * k as f64 / 8.0))
        .collect();
    assert!(gaps[0] < 1e-12, "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
}

#[test]
fn frozen_condition_vanishes_on_occupied_level() {
    let path = spin(PI / 4.0).path().unwrap();
    let sweep = condition_sweep(
        &path,
        &[16.0, 64.0],
        System::A,
        ConditionMode::Frozen,
        None,
        &RunSettings::default(),
    )
    .unwrap();
    for r in &sweep.reports {
        assert!(r.max < 1e-12, "T = {}: {}", r.t_total, r.max);
    }
}

#[test]
fn frozen_and_self_consistent_agree_on_other_level() {
    let path = spin(PI / 4.0).path().unwrap();
    let times = [16.0, 64.0, 256.0];
    let run = |mode| {
        condition_sweep(
            &path,
            &times,
            System::A,
            mode,
            Some(1),
            &RunSettings::default(),
        )
        .unwrap()
    };
    let frozen = run(ConditionMode::Frozen);
    let consistent = run(ConditionMode::SelfConsistent);
    for (f, c) in frozen.reports.iter().zip(&consistent.reports) {
        let ratio = f.max / c.max;
        assert!(
            (0.5..=2.0).contains(&ratio),
            "T = {}: {} vs {}",
            f.t_total,
            f.max,
            c.max
        );
    }
    for sweep in [&frozen, &consistent] {
        let slope = sweep.fit.unwrap().slope;
        assert!((slope + 1.0).abs() < 0.2, "{slope}");
    }
}

#[test]
fn commensurate_fidelity_is_periodic() {
    let model = SpinRotatingField {
        omega0: 399f64.sqrt(),
        omega: 1.0,
        theta: PI / 2.0,
        cycles: 2,
    };
    let report = spin_fidelity_check(&model, 33, 0, DUAL_PHASE_STEP).unwrap();
    for j in 0..16 {
        let (a, b) = (report.rows[j], report.rows[j + 16]);
        assert!(
            (a.computed - b.computed).abs() < 1e-6,
            "row {j}: {} vs {}",
            a.computed,
            b.computed
        );
        assert!((a.formula - b.formula).abs() < 1e-12);
    }
}

#[test]
fn derivative_probe_state_gap_shrinks() {
    let model = spin(PI / 4.0);
    let ground = StateVector::new(herm_eig(&model.hamiltonian(0.0)).unwrap().vector(0)).unwrap();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for t in [25.0, 50.0, 100.0, 200.0] {
        let samples = (200.0 * t) as usize + 1;
        let spec =
            EvolutionSpec::new(model.path().unwrap(), t, ground.clone(), samples, None).unwrap();
        let trace = propagate(&spec).unwrap();
        let ep = trace.eigenpath(1e-8).unwrap();
        let rows = derivative_probe(&trace, &ep, 0).unwrap();
        let state = rows.iter().map(|r| r.state_gap).fold(0.0, f64::max);
        let scaled = rows
            .iter()
            .map(|r| r.scaled_derivative_gap)
            .fold(0.0, f64::max);
        assert!(
            state < last.0 && scaled < last.1,
            "T = {t}: {state} {scaled}"
        );
        last = (state, scaled);
    }
}
