//! Builds the dual system and checks that its propagator inverts the original.

use adiabatic_lab::evolve::{dual_system, propagate, EvolutionSpec, DUAL_PHASE_STEP};
use adiabatic_lab::models::SpinRotatingField;
use adiabatic_lab::numerics::{herm_eig, StateVector};

fn main() -> adiabatic_lab::Result<()> {
    let model = SpinRotatingField::default();
    let ground = StateVector::new(herm_eig(&model.hamiltonian(0.0))?.vector(0))?;
    for t in [10.0, 100.0] {
        let spec = EvolutionSpec::with_phase_step(
            model.path()?,
            t,
            ground.clone(),
            257,
            None,
            DUAL_PHASE_STEP,
        )?;
        let trace = propagate(&spec)?;
        let dual = dual_system(&trace)?;
        let mid = dual.hamiltonians.len() / 2;
        let original = herm_eig(&trace.samples()[mid].hamiltonian)?.values;
        let mirrored = herm_eig(&dual.hamiltonians[mid])?.values;
        println!("T = {t}: |U_b U_a - I| = {:.2e}", dual.consistency);
        println!("  spectrum at s = 1/2: {original:?} -> {mirrored:?}");
    }
    Ok(())
}
