//! Drives the batch runner from an in-memory configuration.

use adiabatic_lab::cli::{parse_config, run, Subcommand};

const CONFIG: &str = "\
[model]
name = spin-rotating-field
theta = 1.0471975511965976

[run]
T = 16, 32, 64, 128
";

fn main() -> adiabatic_lab::Result<()> {
    let cfg = parse_config(CONFIG)?;
    for command in [Subcommand::Sweep, Subcommand::Berry] {
        let out = run(command, Some(&cfg))?;
        print!("{}", out.table.to_csv());
        for (k, v) in &out.meta {
            println!("# {k} = {v}");
        }
        println!();
    }
    Ok(())
}
