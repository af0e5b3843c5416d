//! Berry phase of the spin-half loop against the solid-angle value.

use std::f64::consts::PI;

use adiabatic_lab::models::SpinRotatingField;
use adiabatic_lab::spectral::{
    berry_phase, build_eigenpath, phase_distance, wrap_phase, DEFAULT_GAP_THRESHOLD,
};

fn main() -> adiabatic_lab::Result<()> {
    println!(
        "{:>8} {:>12} {:>12} {:>10}",
        "theta", "gamma_1", "solid", "distance"
    );
    for k in 0..=8 {
        let theta = PI * k as f64 / 8.0;
        let model = SpinRotatingField {
            theta,
            ..Default::default()
        };
        let ep = build_eigenpath(&model.path()?, 4096, DEFAULT_GAP_THRESHOLD)?;
        let gamma = berry_phase(&ep, 1)?;
        let solid = wrap_phase(-PI * (1.0 - theta.cos()));
        println!(
            "{theta:>8.4} {gamma:>12.8} {solid:>12.8} {:>10.2e}",
            phase_distance(gamma, solid)
        );
    }
    Ok(())
}
