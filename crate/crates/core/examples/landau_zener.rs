//! Excitation left after a finite Landau–Zener sweep, against the
//! asymptotic formula exp(−πΔ²T/(2κ)).

use std::f64::consts::PI;

use adiabatic_lab::evolve::{propagate, EvolutionSpec};
use adiabatic_lab::models::LandauZenerPath;
use adiabatic_lab::numerics::{herm_eig, inner, StateVector};

fn main() -> adiabatic_lab::Result<()> {
    let model = LandauZenerPath {
        delta: 0.1,
        kappa: 5.0,
    };
    let path = model.path()?;
    let start = herm_eig(&path.value(0.0))?;
    let end = herm_eig(&path.value(1.0))?;
    println!("minimum gap {:.3} at s = 1/2", model.gap(0.5));
    println!("{:>8} {:>12} {:>12}", "T", "excited", "asymptotic");
    for t in [50.0, 200.0, 800.0, 3200.0] {
        let spec =
            EvolutionSpec::new(path.clone(), t, StateVector::new(start.vector(0))?, 2, None)?;
        let trace = propagate(&spec)?;
        let excited = inner(&end.vector(1), trace.final_state().amplitudes())?.norm_sqr();
        let asymptotic = (-PI * model.delta.powi(2) * t / (2.0 * model.kappa)).exp();
        println!("{t:>8} {excited:>12.4e} {asymptotic:>12.4e}");
    }
    Ok(())
}
