//! Survival overlap of the dual spin-half system against its closed form.

use std::f64::consts::PI;

use adiabatic_lab::evolve::DUAL_PHASE_STEP;
use adiabatic_lab::inconsistency::spin_fidelity_check;
use adiabatic_lab::models::SpinRotatingField;

fn main() -> adiabatic_lab::Result<()> {
    // Effective Rabi frequency 20ω.
    let model = SpinRotatingField {
        omega0: 399f64.sqrt(),
        omega: 1.0,
        theta: PI / 2.0,
        cycles: 1,
    };
    let report = spin_fidelity_check(&model, 17, 0, DUAL_PHASE_STEP)?;
    println!("convention {}", report.convention.label());
    println!("oracle discrepancy {:.2e}", report.oracle_discrepancy);
    println!(
        "{:>8} {:>12} {:>12} {:>12}",
        "wt", "computed", "formula", "computed^2"
    );
    for r in &report.rows {
        println!(
            "{:>8.4} {:>12.8} {:>12.8} {:>12.8}",
            r.t, r.computed, r.formula, r.formula_sq
        );
    }
    Ok(())
}
