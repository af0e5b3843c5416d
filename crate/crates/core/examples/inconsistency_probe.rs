//! Premise diagnostics across the catalog and along a tilt scan.

use std::f64::consts::PI;

use adiabatic_lab::adiabatic::{prepare_run, RunSettings, System};
use adiabatic_lab::inconsistency::premise_probe;
use adiabatic_lab::models::{model_catalog, SpinRotatingField};

fn main() -> adiabatic_lab::Result<()> {
    let settings = RunSettings::default();
    for entry in model_catalog() {
        let model = entry.build_default()?;
        let run = prepare_run(&model.path()?, 50.0, System::A, &settings)?;
        let r = premise_probe(&run.eigenpath, &run.trace, &model.id())?;
        println!(
            "{:<20} max coupling {:.4}  overlap gap {:.3e}  dichotomy {}",
            entry.name,
            r.max_offdiag,
            r.overlap_gap,
            r.dichotomy_holds()
        );
    }
    println!();
    for k in 0..=4 {
        let theta = PI / 2.0 * k as f64 / 4.0;
        let path = SpinRotatingField {
            theta,
            ..Default::default()
        }
        .path()?;
        let run = prepare_run(&path, 50.0, System::A, &settings)?;
        let r = premise_probe(&run.eigenpath, &run.trace, "spin")?;
        println!(
            "theta {theta:.4}: coupling {:.6} (pi sin theta = {:.6}), berry {:?}",
            r.max_offdiag,
            PI * theta.sin(),
            r.berry_phases.unwrap_or_default()
        );
    }
    Ok(())
}
