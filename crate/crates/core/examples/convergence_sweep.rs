//! Coefficient deviation against T for the original and the dual system.
//!
//! The original decays like 1/T. The dual keeps the same deviation at every T.

use adiabatic_lab::adiabatic::{convergence_sweep, RunSettings, SweepSettings, System};
use adiabatic_lab::evolve::Picture;
use adiabatic_lab::models::SpinRotatingField;

fn main() -> adiabatic_lab::Result<()> {
    let path = SpinRotatingField::default().path()?;
    let times: Vec<f64> = (4..=9).map(|p| 2f64.powi(p)).collect();
    for system in [System::A, System::B] {
        let settings = SweepSettings {
            system,
            picture: Picture::A,
            times: times.clone(),
            run: RunSettings::default(),
        };
        let report = convergence_sweep(&path, "spin", &settings)?;
        println!("system {}", system.label());
        for p in &report.points {
            println!(
                "  T = {:>6}  D = {:.6e}  steps = {}",
                p.t_total, p.deviation, p.steps
            );
        }
        if let Some(fit) = report.fit {
            println!(
                "  slope {:.4} (rms log residual {:.3})",
                fit.slope, fit.residual
            );
        }
    }
    Ok(())
}
