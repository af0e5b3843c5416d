//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use adiabatic_lab::adiabatic::{
    coefficient_residual, condition_sweep, convergence_sweep, prepare_run, ConditionMode,
    ResidualForm, RunSettings, SweepSettings, System,
};
use adiabatic_lab::evolve::{
    dual_system, propagate, propagate_validated, EvolutionSpec, Picture, DUAL_PHASE_STEP,
};
use adiabatic_lab::inconsistency::{premise_probe, spin_fidelity_check};
use adiabatic_lab::models::{model_catalog, RabiOracle, SpinRotatingField};
use adiabatic_lab::numerics::{herm_eig, StateVector};
use adiabatic_lab::spectral::{
    berry_phase, build_eigenpath, phase_distance, wrap_phase, DEFAULT_GAP_THRESHOLD,
};

struct Outcome {
    pass: bool,
    detail: String,
    /// Largest unitarity defect among the runs of the criterion.
    defect: f64,
}

type Criterion = fn() -> Result<Outcome, String>;

fn ground(model: &SpinRotatingField) -> StateVector {
    let h = model.hamiltonian(0.0);
    StateVector::new(herm_eig(&h).unwrap().vector(0)).unwrap()
}

fn spin(omega0: f64, omega: f64, theta: f64, cycles: u32) -> SpinRotatingField {
    SpinRotatingField {
        omega0,
        omega,
        theta,
        cycles,
    }
}

fn oracle_equivalence() -> Result<Outcome, String> {
    let clock = Instant::now();
    let sets = [
        spin(10.0, 1.0, PI / 3.0, 1),
        spin(4.0, 1.0, PI / 4.0, 1),
        spin(20.0, 1.0, PI / 6.0, 1),
        spin(2.0, 0.5, PI / 2.0, 1),
        spin(8.0, 2.0, 2.0 * PI / 3.0, 2),
    ];
    let mut worst: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for model in sets {
        let oracle = RabiOracle::new(model).map_err(|e| e.to_string())?;
        let t_total = model.total_time();
        let spec = EvolutionSpec::with_phase_step(
            model.path().unwrap(),
            t_total,
            ground(&model),
            21,
            None,
            1e-4,
        )
        .map_err(|e| e.to_string())?;
        let trace = propagate(&spec).map_err(|e| e.to_string())?;
        defect = defect.max(trace.unitarity_defect());
        for x in &trace.samples()[1..] {
            let exact = oracle.propagator(x.s * t_total);
            worst = worst.max(x.propagator.as_matrix().max_diff(exact.as_matrix()));
        }
    }
    let elapsed = clock.elapsed();
    Ok(Outcome {
        pass: worst <= 1e-8 && elapsed < Duration::from_secs(10),
        detail: format!("max |U - U_oracle| = {worst:.3e} over 20 times x 5 sets in {elapsed:.1?}"),
        defect,
    })
}

fn counterexample() -> Result<Outcome, String> {
    let clock = Instant::now();
    let path = spin(4.0, 1.0, PI / 4.0, 1).path().unwrap();
    let times: Vec<f64> = (4..=10).map(|p| 2f64.powi(p)).collect();
    let sweep = |system| {
        convergence_sweep(
            &path,
            "spin-rotating-field",
            &SweepSettings {
                system,
                picture: Picture::A,
                times: times.clone(),
                run: RunSettings::default(),
            },
        )
        .map_err(|e| e.to_string())
    };
    let a = sweep(System::A)?;
    let b = sweep(System::B)?;
    let slope_a = a.slope().ok_or("no fit for system a")?;
    let slope_b = b.slope().ok_or("no fit for system b")?;
    let min_b = b.deviations().into_iter().fold(f64::INFINITY, f64::min);
    let defect = a
        .points
        .iter()
        .chain(&b.points)
        .map(|p| p.unitarity_defect)
        .fold(0.0, f64::max);
    let elapsed = clock.elapsed();
    Ok(Outcome {
        pass: slope_a <= -0.8
            && slope_b.abs() <= 0.2
            && min_b >= 0.1
            && elapsed < Duration::from_secs(120),
        detail: format!(
            "slope a = {slope_a:.4}, slope b = {slope_b:.2e}, min D_b = {min_b:.4} in {elapsed:.1?}"
        ),
        defect,
    })
}

fn dual_exact() -> Result<Outcome, String> {
    let model = spin(4.0, 1.0, PI / 4.0, 1);
    let mut worst: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for t in [10.0, 100.0, 1000.0] {
        let spec = EvolutionSpec::with_phase_step(
            model.path().unwrap(),
            t,
            ground(&model),
            513,
            None,
            DUAL_PHASE_STEP,
        )
        .map_err(|e| e.to_string())?;
        let trace = propagate(&spec).map_err(|e| e.to_string())?;
        let dual = dual_system(&trace).map_err(|e| e.to_string())?;
        worst = worst.max(dual.consistency);
        defect = defect
            .max(trace.unitarity_defect())
            .max(dual.trace.unitarity_defect());
    }
    Ok(Outcome {
        pass: worst <= 1e-6,
        detail: format!("max |U_b U_a - I| = {worst:.3e} for T in {{10, 100, 1000}}"),
        defect,
    })
}

fn fidelity_formula() -> Result<Outcome, String> {
    // Commensurate parameters: the effective Rabi frequency is 20ω, so the
    // exact overlap vanishes at ωt = π.
    let model = spin(399f64.sqrt(), 1.0, PI / 2.0, 1);
    let report = spin_fidelity_check(&model, 33, 0, DUAL_PHASE_STEP).map_err(|e| e.to_string())?;
    let half = report.rows[16];
    let at_pi = match report.convention {
        adiabatic_lab::inconsistency::Convention::Amplitude => half.computed,
        adiabatic_lab::inconsistency::Convention::Squared => half.formula_sq,
    };
    let tilted = spin_fidelity_check(&spin(4.0, 1.0, PI / 4.0, 1), 33, 0, DUAL_PHASE_STEP)
        .map_err(|e| e.to_string())?;
    Ok(Outcome {
        pass: report.oracle_discrepancy <= 1e-6
            && tilted.oracle_discrepancy <= 1e-6
            && (half.t - PI).abs() < 1e-12
            && half.formula.abs() <= 1e-15
            && at_pi <= 1e-6,
        detail: format!(
            "oracle gap {:.2e}/{:.2e}, formula(pi) = {:.1e}, overlap(pi) = {at_pi:.2e}, convention = {} (tilted: {})",
            report.oracle_discrepancy,
            tilted.oracle_discrepancy,
            half.formula,
            report.convention.label(),
            tilted.convention.label()
        ),
        defect: 0.0,
    })
}

fn berry() -> Result<Outcome, String> {
    let phase = |theta: f64| -> Result<f64, String> {
        let ep = build_eigenpath(
            &spin(4.0, 1.0, theta, 1).path().unwrap(),
            4096,
            DEFAULT_GAP_THRESHOLD,
        )
        .map_err(|e| e.to_string())?;
        berry_phase(&ep, 1).map_err(|e| e.to_string())
    };
    let g0 = wrap_phase(phase(0.0)?).abs();
    let gpi = wrap_phase(phase(PI)?).abs();
    let geq = phase_distance(phase(PI / 2.0)?, -PI);
    Ok(Outcome {
        pass: g0 <= 1e-6 && gpi <= 1e-6 && geq <= 1e-6,
        detail: format!("|g(0)| = {g0:.1e}, |g(pi)| = {gpi:.1e}, dist(g(pi/2), -pi) = {geq:.1e}"),
        defect: 0.0,
    })
}

fn dichotomy() -> Result<Outcome, String> {
    let settings = RunSettings {
        min_samples: 2049,
        ..Default::default()
    };
    let mut cases = 0;
    let mut violations = 0;
    let mut coupling_err: f64 = 0.0;
    let mut defect: f64 = 0.0;
    let mut check = |path: &adiabatic_lab::spectral::HamiltonianPath,
                     id: &str|
     -> Result<f64, String> {
        let run = prepare_run(path, 20.0, System::A, &settings).map_err(|e| e.to_string())?;
        defect = defect.max(run.trace.unitarity_defect());
        let report = premise_probe(&run.eigenpath, &run.trace, id).map_err(|e| e.to_string())?;
        cases += 1;
        if !report.dichotomy_holds() {
            violations += 1;
        }
        Ok(report.max_offdiag)
    };
    for entry in model_catalog() {
        let model = entry.build_default().map_err(|e| e.to_string())?;
        check(&model.path().unwrap(), &model.id())?;
    }
    for k in 0..9 {
        let theta = PI * k as f64 / 8.0;
        let offdiag = check(&spin(4.0, 1.0, theta, 1).path().unwrap(), "spin")?;
        coupling_err = coupling_err.max((offdiag - PI * theta.sin()).abs());
    }
    Ok(Outcome {
        pass: violations == 0 && coupling_err <= 1e-6,
        detail: format!("{violations} violations in {cases} cases, max |c - pi sin(theta)| = {coupling_err:.2e}"),
        defect,
    })
}

fn condition_decay() -> Result<Outcome, String> {
    let path = spin(4.0, 1.0, PI / 4.0, 1).path().unwrap();
    let times: Vec<f64> = (3..=10).map(|p| 2f64.powi(p)).collect();
    let settings = RunSettings::default();
    let a = condition_sweep(
        &path,
        &times,
        System::A,
        ConditionMode::SelfConsistent,
        None,
        &settings,
    )
    .map_err(|e| e.to_string())?;
    let b = condition_sweep(
        &path,
        &times,
        System::B,
        ConditionMode::SelfConsistent,
        None,
        &settings,
    )
    .map_err(|e| e.to_string())?;
    let slope = a.fit.ok_or("no fit for system a")?.slope;
    let floor = b
        .reports
        .iter()
        .map(|r| r.max)
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        pass: (slope + 1.0).abs() <= 0.2 && floor > 0.05,
        detail: format!("slope a = {slope:.4} over T = 8..1024, min max_s C_b = {floor:.4}"),
        defect: 0.0,
    })
}

fn hygiene(defect_so_far: f64) -> Result<Outcome, String> {
    let path = spin(4.0, 1.0, PI / 4.0, 1).path().unwrap();
    let settings = RunSettings {
        min_samples: 16385,
        ..Default::default()
    };
    let a = prepare_run(&path, 100.0, System::A, &settings).map_err(|e| e.to_string())?;
    let b = prepare_run(&path, 100.0, System::B, &settings).map_err(|e| e.to_string())?;
    let reference = &b.original.as_ref().ok_or("missing original system")?.1;
    let r4a = coefficient_residual(&a.eigenpath, &a.trace, ResidualForm::Oscillating)
        .map_err(|e| e.to_string())?;
    let r4b = coefficient_residual(&b.eigenpath, &b.trace, ResidualForm::Oscillating)
        .map_err(|e| e.to_string())?;
    let r5b = coefficient_residual(
        &b.eigenpath,
        &b.trace,
        ResidualForm::Counterbalanced { reference },
    )
    .map_err(|e| e.to_string())?;
    let r5a = coefficient_residual(
        &a.eigenpath,
        &a.trace,
        ResidualForm::Counterbalanced {
            reference: &b.eigenpath,
        },
    )
    .map_err(|e| e.to_string())?;
    let mut defect = defect_so_far
        .max(a.trace.unitarity_defect())
        .max(b.trace.unitarity_defect());
    let model = spin(4.0, 1.0, PI / 4.0, 1);
    let mut doubling: f64 = 0.0;
    for t in [10.0, 100.0, 1000.0] {
        let spec = EvolutionSpec::with_phase_step(
            model.path().unwrap(),
            t,
            ground(&model),
            513,
            None,
            2.5e-4,
        )
        .map_err(|e| e.to_string())?;
        let (trace, change) = propagate_validated(&spec).map_err(|e| e.to_string())?;
        doubling = doubling.max(change);
        defect = defect.max(trace.unitarity_defect());
    }
    let residual = r4a.max(r4b).max(r5a).max(r5b);
    Ok(Outcome {
        pass: defect <= 1e-9 && residual <= 1e-5 && doubling <= 1e-8,
        detail: format!(
            "unitarity {defect:.1e}; residuals a:osc {r4a:.1e} a:cb {r5a:.1e} b:osc {r4b:.1e} b:cb {r5b:.1e}; step doubling {doubling:.1e}"
        ),
        defect,
    })
}

fn determinism() -> Result<Outcome, String> {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/spin-sweep.cfg");
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_adiabatic-lab"))
            .args(["sweep", "--config", config])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        Ok(out.stdout)
    };
    let first = run()?;
    let second = run()?;
    Ok(Outcome {
        pass: first == second && !first.is_empty(),
        detail: format!(
            "two sweep runs, {} bytes each, identical = {}",
            first.len(),
            first == second
        ),
        defect: 0.0,
    })
}

fn main() {
    let criteria: [(&str, Criterion); 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("counterexample reproduced", counterexample),
        ("dual construction exact", dual_exact),
        ("spin fidelity formula", fidelity_formula),
        ("berry phase", berry),
        ("inconsistency dichotomy", dichotomy),
        ("condition decay", condition_decay),
    ];
    let mut failures = 0;
    let mut defect: f64 = 0.0;
    let mut report = |index: usize, name: &str, outcome: Result<Outcome, String>| -> f64 {
        match outcome {
            Ok(o) => {
                println!(
                    "criterion {index} {} {name}: {}",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.detail
                );
                if !o.pass {
                    failures += 1;
                }
                o.defect
            }
            Err(e) => {
                println!("criterion {index} FAIL {name}: error {e}");
                failures += 1;
                0.0
            }
        }
    };
    for (i, (name, f)) in criteria.iter().enumerate() {
        defect = defect.max(report(i + 1, name, f()));
    }
    report(8, "numerical hygiene", hygiene(defect));
    report(9, "determinism", determinism());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
