//! Subcommand dispatch.

use crate::adiabatic::{
    condition_sweep, convergence_sweep, prepare_run, AdiabaticApproximant, RunSettings,
    SweepSettings, System,
};
use crate::cli::config::RunConfig;
use crate::cli::output::{format_decimal, key_value_table, Cell, Table};
use crate::error::{LabError, Result};
use crate::evolve::{factor_picture, Picture};
use crate::inconsistency::{premise_probe, spin_fidelity_check};
use crate::models::{lookup, model_catalog, Model, ParamDefault};
use crate::numerics::inner;
use crate::spectral::{berry_phase, build_eigenpath, DEFAULT_GAP_THRESHOLD};

/// Experiment to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Evolve,
    Sweep,
    Dual,
    Berry,
    Condition,
    Probe,
    Fidelity,
    Models,
}

impl Subcommand {
    pub fn label(self) -> &'static str {
        match self {
            Subcommand::Evolve => "evolve",
            Subcommand::Sweep => "sweep",
            Subcommand::Dual => "dual",
            Subcommand::Berry => "berry",
            Subcommand::Condition => "condition",
            Subcommand::Probe => "probe",
            Subcommand::Fidelity => "fidelity",
            Subcommand::Models => "models",
        }
    }
}

/// Result table plus run metadata destined for the sidecar file.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub table: Table,
    pub meta: Vec<(String, String)>,
}

fn settings(cfg: &RunConfig) -> RunSettings {
    RunSettings {
        level: cfg.run.level,
        min_samples: cfg.run.sample_count,
        max_phase_step: cfg.run.phase_step,
        dual_phase_step: cfg.run.dual_phase_step,
        steps: cfg.run.steps,
        gap_threshold: DEFAULT_GAP_THRESHOLD,
    }
}

fn build_model(cfg: &RunConfig) -> Result<Model> {
    let entry = lookup(&cfg.model_name)?;
    entry
        .build(&cfg.model_params)
        .map_err(|e| LabError::config(cfg.model_line, e.to_string()))
}

fn slope_cell(slope: Option<f64>) -> Cell {
    slope.map_or(Cell::Missing, Cell::Num)
}

/// Runs one subcommand. `models` ignores the configuration.
pub fn run(command: Subcommand, cfg: Option<&RunConfig>) -> Result<RunOutput> {
    if command == Subcommand::Models {
        return Ok(models_table());
    }
    let cfg =
        cfg.ok_or_else(|| LabError::config(0, format!("`{}` needs --config", command.label())))?;
    let model = build_model(cfg)?;
    let path = model.path()?;
    let id = model.id();
    let mut meta = vec![("model".to_string(), id.clone())];
    let first_t = cfg.run.times[0];

    let table = match command {
        Subcommand::Models => unreachable!("handled above"),
        Subcommand::Evolve => {
            let run = prepare_run(&path, first_t, cfg.run.system, &settings(cfg))?;
            let last = run.eigenpath.len() - 1;
            let final_state = run.trace.final_state();
            let mut pairs = vec![
                ("model".to_string(), Cell::text(id.clone())),
                ("system".to_string(), Cell::text(cfg.run.system.label())),
                ("T".to_string(), Cell::Num(first_t)),
                (
                    "steps".to_string(),
                    Cell::Int(run.trace.spec().steps() as u64),
                ),
                (
                    "samples".to_string(),
                    Cell::Int(run.trace.samples().len() as u64),
                ),
                ("level".to_string(), Cell::Int(run.level as u64)),
                (
                    "unitarity_defect".to_string(),
                    Cell::Num(run.trace.unitarity_defect()),
                ),
                (
                    "norm_defect".to_string(),
                    Cell::Num(run.trace.norm_defect()),
                ),
            ];
            for n in 0..run.eigenpath.dim() {
                let p = inner(&run.eigenpath.vector(last, n), final_state.amplitudes())?.norm_sqr();
                pairs.push((format!("final_population_{n}"), Cell::Num(p)));
            }
            let approx = AdiabaticApproximant::new(&run.eigenpath, run.level, first_t)?;
            let dev = approx
                .deviations(&run.trace)?
                .into_iter()
                .fold(0.0, f64::max);
            pairs.push(("max_adiabatic_deviation".to_string(), Cell::Num(dev)));
            for picture in [Picture::A, Picture::B] {
                let d = factor_picture(&run.trace, &run.eigenpath, picture)?.max_deviation();
                pairs.push((
                    format!("picture_{}_deviation", picture.label()),
                    Cell::Num(d),
                ));
            }
            if let Some(c) = run.dual_consistency {
                pairs.push(("dual_consistency".to_string(), Cell::Num(c)));
            }
            key_value_table("evolve", pairs)
        }
        Subcommand::Sweep | Subcommand::Dual => {
            let (system, picture) = if command == Subcommand::Dual {
                (System::B, Picture::A)
            } else {
                (cfg.run.system, cfg.run.picture)
            };
            let sweep = SweepSettings {
                system,
                picture,
                times: cfg.run.times.clone(),
                run: settings(cfg),
            };
            let report = convergence_sweep(&path, &id, &sweep)?;
            meta.push(("system".into(), system.label().into()));
            meta.push(("picture".into(), picture.label().into()));
            meta.push(("exact".into(), report.exact.to_string()));
            if let Some(fit) = report.fit {
                meta.push(("slope".into(), format_decimal(fit.slope)));
                meta.push(("intercept".into(), format_decimal(fit.intercept)));
                meta.push(("fit_residual".into(), format_decimal(fit.residual)));
                meta.push(("discarded_smallest_two".into(), fit.discarded.to_string()));
            }
            let columns = if command == Subcommand::Dual {
                vec!["T", "consistency", "D", "slope_so_far"]
            } else {
                vec!["T", "D", "picture", "slope_so_far"]
            };
            let mut table = Table::new(command.label(), columns);
            for (i, p) in report.points.iter().enumerate() {
                let slope = if report.exact {
                    Cell::text("exact")
                } else {
                    slope_cell(report.slope_so_far(i))
                };
                if command == Subcommand::Dual {
                    let consistency = p.dual_consistency.map_or(Cell::Missing, Cell::Num);
                    table.push(vec![
                        Cell::Num(p.t_total),
                        consistency,
                        Cell::Num(p.deviation),
                        slope,
                    ]);
                } else {
                    table.push(vec![
                        Cell::Num(p.t_total),
                        Cell::Num(p.deviation),
                        Cell::text(picture.label()),
                        slope,
                    ]);
                }
            }
            table
        }
        Subcommand::Berry => {
            let ep = build_eigenpath(&path, cfg.run.k_steps, DEFAULT_GAP_THRESHOLD)?;
            meta.push(("K".into(), cfg.run.k_steps.to_string()));
            let mut table = Table::new("berry", vec!["level", "phase"]);
            for n in 0..ep.dim() {
                table.push(vec![Cell::Int(n as u64), Cell::Num(berry_phase(&ep, n)?)]);
            }
            table
        }
        Subcommand::Condition => {
            let sweep = condition_sweep(
                &path,
                &cfg.run.times,
                cfg.run.system,
                cfg.run.mode,
                cfg.run.target,
                &settings(cfg),
            )?;
            meta.push(("system".into(), cfg.run.system.label().into()));
            meta.push(("mode".into(), cfg.run.mode.label().into()));
            if let Some(fit) = sweep.fit {
                meta.push(("slope_of_max".into(), format_decimal(fit.slope)));
                meta.push(("fit_residual".into(), format_decimal(fit.residual)));
            }
            let mut table = Table::new("condition", vec!["s", "T", "C_n"]);
            for report in &sweep.reports {
                meta.push((
                    format!("max_T_{}", format_decimal(report.t_total)),
                    format_decimal(report.max),
                ));
                for (s, c) in report.s.iter().zip(&report.values) {
                    table.push(vec![
                        Cell::Num(*s),
                        Cell::Num(report.t_total),
                        Cell::Num(*c),
                    ]);
                }
            }
            table
        }
        Subcommand::Probe => {
            let run = prepare_run(&path, first_t, System::A, &settings(cfg))?;
            let report = premise_probe(&run.eigenpath, &run.trace, &id)?;
            let mut pairs = vec![
                ("model".to_string(), Cell::text(id.clone())),
                ("T".to_string(), Cell::Num(first_t)),
                ("level".to_string(), Cell::Int(report.level as u64)),
                ("max_offdiag".to_string(), Cell::Num(report.max_offdiag)),
                (
                    "max_offdiag_at".to_string(),
                    Cell::Num(report.max_offdiag_at),
                ),
            ];
            match &report.berry_phases {
                Some(phases) => {
                    for (n, g) in phases.iter().enumerate() {
                        pairs.push((format!("berry_phase_{n}"), Cell::Num(*g)));
                    }
                }
                None => pairs.push(("berry_phase".to_string(), Cell::text("open-path"))),
            }
            pairs.push((
                "frozen_basis_deviation".to_string(),
                Cell::Num(report.frozen_basis_deviation),
            ));
            pairs.push(("overlap_gap".to_string(), Cell::Num(report.overlap_gap)));
            pairs.push((
                "dichotomy".to_string(),
                Cell::text(if report.dichotomy_holds() {
                    "holds"
                } else {
                    "violated"
                }),
            ));
            key_value_table("probe", pairs)
        }
        Subcommand::Fidelity => {
            let Model::SpinRotatingField(spin) = model else {
                return Err(LabError::config(
                    cfg.model_line,
                    "`fidelity` needs model `spin-rotating-field`",
                ));
            };
            let report = spin_fidelity_check(
                &spin,
                cfg.run.sample_count,
                cfg.run.level,
                cfg.run.dual_phase_step,
            )?;
            meta.push(("convention".into(), report.convention.label().into()));
            meta.push((
                "oracle_discrepancy".into(),
                format_decimal(report.oracle_discrepancy),
            ));
            meta.push((
                "amplitude_discrepancy".into(),
                format_decimal(report.amplitude_discrepancy),
            ));
            meta.push((
                "squared_discrepancy".into(),
                format_decimal(report.squared_discrepancy),
            ));
            meta.push((
                "dual_consistency".into(),
                format_decimal(report.dual_consistency),
            ));
            let mut table = Table::new("fidelity", vec!["t", "computed", "formula", "formula_sq"]);
            for r in &report.rows {
                table.push(vec![
                    Cell::Num(r.t),
                    Cell::Num(r.computed),
                    Cell::Num(r.formula),
                    Cell::Num(r.formula_sq),
                ]);
            }
            table
        }
    };
    Ok(RunOutput { table, meta })
}

fn models_table() -> RunOutput {
    let mut table = Table::new(
        "models",
        vec!["name", "parameter", "default", "closed_loop"],
    );
    for entry in model_catalog() {
        for p in entry.params {
            let default = match p.default {
                ParamDefault::Number(x) => Cell::Num(x),
                ParamDefault::List(v) => Cell::text(
                    v.iter()
                        .map(|x| format_decimal(*x))
                        .collect::<Vec<_>>()
                        .join(";"),
                ),
            };
            table.push(vec![
                Cell::text(entry.name),
                Cell::text(p.name),
                default,
                Cell::text(entry.closed_loop.to_string()),
            ]);
        }
    }
    RunOutput {
        table,
        meta: Vec::new(),
    }
}
