//! Distance between the evolved state and the adiabatic approximant, and
//! between their s-derivatives.

use adiabatic_lab::evolve::{derivative_probe, propagate, EvolutionSpec};
use adiabatic_lab::models::SpinRotatingField;
use adiabatic_lab::numerics::{herm_eig, StateVector};

fn main() -> adiabatic_lab::Result<()> {
    let model = SpinRotatingField::default();
    let ground = StateVector::new(herm_eig(&model.hamiltonian(0.0))?.vector(0))?;
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "T", "state", "derivative", "scaled"
    );
    for t in [25.0, 50.0, 100.0, 200.0] {
        let samples = (200.0 * t) as usize + 1;
        let trace = propagate(&EvolutionSpec::new(
            model.path()?,
            t,
            ground.clone(),
            samples,
            None,
        )?)?;
        let rows = derivative_probe(&trace, &trace.eigenpath(1e-8)?, 0)?;
        let max = |f: fn(&adiabatic_lab::evolve::DerivativeProbeRow) -> f64| {
            rows.iter().map(f).fold(0.0, f64::max)
        };
        println!(
            "{t:>6} {:>12.4e} {:>12.4e} {:>12.4e}",
            max(|r| r.state_gap),
            max(|r| r.derivative_gap),
            max(|r| r.scaled_derivative_gap)
        );
    }
    Ok(())
}
