//! Adiabatic condition integral for both systems over two decades of T.

use adiabatic_lab::adiabatic::{condition_sweep, ConditionMode, RunSettings, System};
use adiabatic_lab::models::SpinRotatingField;

fn main() -> adiabatic_lab::Result<()> {
    let path = SpinRotatingField::default().path()?;
    let times = [10.0, 31.6, 100.0, 316.0, 1000.0];
    for system in [System::A, System::B] {
        let sweep = condition_sweep(
            &path,
            &times,
            system,
            ConditionMode::SelfConsistent,
            None,
            &RunSettings::default(),
        )?;
        println!("system {}", system.label());
        for r in &sweep.reports {
            println!(
                "  T = {:>7}  max_s C = {:.5e}  grid {}  refinement {:.1e}",
                r.t_total,
                r.max,
                r.s.len(),
                r.refinement_change
            );
        }
        if let Some(fit) = sweep.fit {
            println!("  slope {:.4}", fit.slope);
        }
    }
    Ok(())
}
