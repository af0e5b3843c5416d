//! Numerical propagation of the rotating-field spin against its closed form.

use adiabatic_lab::evolve::{propagate, EvolutionSpec};
use adiabatic_lab::models::{RabiOracle, SpinRotatingField};
use adiabatic_lab::numerics::StateVector;

fn main() -> adiabatic_lab::Result<()> {
    let model = SpinRotatingField {
        omega0: 6.0,
        omega: 1.0,
        theta: 0.9,
        cycles: 1,
    };
    let oracle = RabiOracle::new(model)?;
    let t_total = model.total_time();
    println!("effective frequency {:.6}", model.effective_frequency());
    for phase_step in [1e-2, 1e-3, 1e-4] {
        let spec = EvolutionSpec::with_phase_step(
            model.path()?,
            t_total,
            StateVector::basis(2, 0),
            11,
            None,
            phase_step,
        )?;
        let trace = propagate(&spec)?;
        let err = trace
            .samples()
            .iter()
            .map(|x| {
                x.propagator
                    .as_matrix()
                    .max_diff(oracle.propagator(x.s * t_total).as_matrix())
            })
            .fold(0.0, f64::max);
        println!(
            "phase step {phase_step:.0e}: {:>7} steps, max |U - U_exact| = {err:.3e}",
            spec.steps()
        );
    }
    Ok(())
}
