//! Numerical probes of the premises that would force a vanishing Berry phase,
//! and of the spin-half fidelity formula for the dual system.

use crate::adiabatic::{best_match, AdiabaticApproximant};
use crate::error::{LabError, Result};
use crate::evolve::{dual_system, propagate, sample_indices, EvolutionSpec, EvolutionTrace};
use crate::models::{RabiOracle, SpinRotatingField};
use crate::numerics::{herm_eig, inner, StateVector, C64};
use crate::spectral::{berry_phase, EigenPath};

/// Largest accepted gap between the integrated dual overlap and the oracle.
pub const ORACLE_TOL: f64 = 1e-6;

/// How far a model sits from the premises of the differential formalism.
#[derive(Clone, Debug)]
pub struct InconsistencyReport {
    pub model_id: String,
    pub level: usize,
    /// `max_{s, n≠m} |⟨n|∂_s|m⟩|`.
    pub max_offdiag: f64,
    pub max_offdiag_at: f64,
    /// Berry phase of every level, when the path is a closed loop.
    pub berry_phases: Option<Vec<f64>>,
    /// `max_s ‖ψ_A(s) − e^{−iT∫ε_n}|n(0)⟩‖`.
    pub frozen_basis_deviation: f64,
    /// See [`overlap_identity_check`].
    pub overlap_gap: f64,
}

impl InconsistencyReport {
    /// False exactly when couplings vanish while some Berry phase does not.
    pub fn dichotomy_holds(&self) -> bool {
        let couplings_vanish = self.max_offdiag <= 1e-6;
        let phase_nonzero = self
            .berry_phases
            .as_ref()
            .is_some_and(|p| p.iter().any(|g| g.abs() >= 1e-3));
        !(couplings_vanish && phase_nonzero)
    }
}

/// Evaluates all premise diagnostics for the level holding the trace's
/// initial state.
pub fn premise_probe(
    ep: &EigenPath,
    trace: &EvolutionTrace,
    model_id: &str,
) -> Result<InconsistencyReport> {
    let dim = ep.dim();
    let n = best_match(ep, 0, trace.initial().amplitudes());
    let mut max_offdiag: f64 = 0.0;
    let mut max_offdiag_at = 0.0;
    for k in 0..ep.len() {
        for a in 0..dim {
            for b in (0..dim).filter(|&b| b != a) {
                let c = ep.coupling_value(a, b, k).norm();
                if c > max_offdiag {
                    max_offdiag = c;
                    max_offdiag_at = ep.grid()[k];
                }
            }
        }
    }
    let berry_phases = if ep.is_closed() {
        Some(
            (0..dim)
                .map(|m| berry_phase(ep, m))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let t = trace.t_total();
    let approx = AdiabaticApproximant::new(ep, n, t)?;
    let origin = ep.vector(0, n);
    let frozen_basis_deviation = (0..ep.len())
        .map(|k| {
            let frozen = C64::from_polar(1.0, -approx.dynamical_phase(k));
            approx
                .state(k)
                .amplitudes()
                .iter()
                .zip(&origin)
                .map(|(a, b)| (a - b * frozen).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    let overlap_gap = overlap_identity_check(ep, trace, n)?;
    Ok(InconsistencyReport {
        model_id: model_id.to_string(),
        level: n,
        max_offdiag,
        max_offdiag_at,
        berry_phases,
        frozen_basis_deviation,
        overlap_gap,
    })
}

/// `max_s | |⟨n(s)|U(s)|n(s)⟩| − |⟨n(s)|n(0)⟩| |` over the trace samples.
pub fn overlap_identity_check(ep: &EigenPath, trace: &EvolutionTrace, n: usize) -> Result<f64> {
    if n >= ep.dim() {
        return Err(LabError::InputDomain(format!("level {n} out of range")));
    }
    let start = inner(&ep.vector(0, n), trace.initial().amplitudes())?.norm();
    if (start - 1.0).abs() > 1e-9 {
        return Err(LabError::Precondition(format!(
            "trace must start in level {n} (overlap {start})"
        )));
    }
    let ks = sample_indices(trace, ep)?;
    let origin = ep.vector(0, n);
    let mut gap: f64 = 0.0;
    for (x, &k) in trace.samples().iter().zip(&ks) {
        let v = ep.vector(k, n);
        let propagated = x.propagator.as_matrix().mul_vec(&v)?;
        let lhs = inner(&v, &propagated)?.norm();
        let rhs = inner(&v, &origin)?.norm();
        gap = gap.max((lhs - rhs).abs());
    }
    Ok(gap)
}

/// Reading of the printed fidelity formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `|⟨ψ^b(t)|ψ^b(0)⟩|`.
    Amplitude,
    /// `|⟨ψ^b(t)|ψ^b(0)⟩|²`.
    Squared,
}

impl Convention {
    pub fn label(self) -> &'static str {
        match self {
            Convention::Amplitude => "amplitude",
            Convention::Squared => "squared",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FidelityRow {
    pub t: f64,
    /// `|⟨ψ^b(t)|ψ^b(0)⟩|` from the integrated dual system.
    pub computed: f64,
    /// The same overlap from the closed-form propagator.
    pub oracle: f64,
    /// `1 − sin²θ·sin²(ωt/2)`.
    pub formula: f64,
    /// `computed²`, the squared-convention value.
    pub formula_sq: f64,
}

#[derive(Clone, Debug)]
pub struct FidelityReport {
    pub model: SpinRotatingField,
    pub level: usize,
    pub rows: Vec<FidelityRow>,
    pub oracle_discrepancy: f64,
    /// `max_t |computed − formula|`.
    pub amplitude_discrepancy: f64,
    /// `max_t |computed² − formula|`.
    pub squared_discrepancy: f64,
    pub convention: Convention,
    pub dual_consistency: f64,
}

/// Integrates the dual of the spin-half model from the state dual to level
/// `level` of `H_a(0)` on `points` uniform times over all cycles, and compares
/// the survival overlap with the oracle and with the printed formula.
pub fn spin_fidelity_check(
    model: &SpinRotatingField,
    points: usize,
    level: usize,
    max_phase_step: f64,
) -> Result<FidelityReport> {
    let path = model.path()?;
    let oracle = RabiOracle::new(*model)?;
    if level >= 2 {
        return Err(LabError::InputDomain(format!(
            "level {level} out of range for a spin-half model"
        )));
    }
    let initial = StateVector::new(herm_eig(&path.value(0.0))?.vector(level))?;
    let t_total = model.total_time();
    let spec = EvolutionSpec::with_phase_step(
        path,
        t_total,
        initial.clone(),
        points,
        None,
        max_phase_step,
    )?;
    let trace_a = propagate(&spec)?;
    let dual = dual_system(&trace_a)?;

    let (sin_t, omega) = (model.theta.sin(), model.omega);
    let rows: Vec<FidelityRow> = dual
        .trace
        .samples()
        .iter()
        .map(|x| {
            let t = x.s * t_total;
            let computed = x.state.inner(&initial).norm();
            let oracle = initial.inner(&oracle.propagator(t).apply(&initial)).norm();
            let formula = 1.0 - sin_t.powi(2) * (0.5 * omega * t).sin().powi(2);
            FidelityRow {
                t,
                computed,
                oracle,
                formula,
                formula_sq: computed * computed,
            }
        })
        .collect();
    let max_of = |f: &dyn Fn(&FidelityRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let oracle_discrepancy = max_of(&|r| (r.computed - r.oracle).abs());
    if oracle_discrepancy > ORACLE_TOL {
        return Err(LabError::Numerical(format!(
            "dual overlap differs from the closed-form oracle by {oracle_discrepancy:e}"
        )));
    }
    let amplitude_discrepancy = max_of(&|r| (r.computed - r.formula).abs());
    let squared_discrepancy = max_of(&|r| (r.formula_sq - r.formula).abs());
    let convention = if squared_discrepancy < amplitude_discrepancy {
        Convention::Squared
    } else {
        Convention::Amplitude
    };
    Ok(FidelityReport {
        model: *model,
        level,
        rows,
        oracle_discrepancy,
        amplitude_discrepancy,
        squared_discrepancy,
        convention,
        dual_consistency: dual.consistency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adiabatic::{prepare_run, RunSettings, System};
    use crate::evolve::DUAL_PHASE_STEP;
    use crate::models::ConstantModel;
    use std::f64::consts::PI;

    fn spin(theta: f64) -> SpinRotatingField {
        SpinRotatingField {
            omega0: 4.0,
            omega: 1.0,
            theta,
            cycles: 1,
        }
    }

    #[test]
    fn constant_premises_hold() {
        let path = ConstantModel::new(vec![0.0, 2.0]).unwrap().path().unwrap();
        let run = prepare_run(&path, 20.0, System::A, &RunSettings::default()).unwrap();
        let r = premise_probe(&run.eigenpath, &run.trace, "constant").unwrap();
        assert!(r.max_offdiag < 1e-12 && r.frozen_basis_deviation < 1e-12 && r.overlap_gap < 1e-12);
        assert!(r
            .berry_phases
            .clone()
            .unwrap()
            .iter()
            .all(|g| g.abs() < 1e-12));
        assert!(r.dichotomy_holds());
    }

    #[test]
    fn spin_equator_premises_fail() {
        let path = spin(PI / 2.0).path().unwrap();
        let run = prepare_run(
            &path,
            20.0,
            System::A,
            &RunSettings {
                min_samples: 4097,
                ..Default::default()
            },
        )
        .unwrap();
        let r = premise_probe(&run.eigenpath, &run.trace, "spin").unwrap();
        assert!((r.max_offdiag - PI).abs() < 1e-9);
        let phases = r.berry_phases.clone().unwrap();
        assert!(crate::spectral::phase_distance(phases[0], PI) < 1e-5);
        assert!(r.frozen_basis_deviation > 0.5);
        assert!(r.dichotomy_holds());
    }

    #[test]
    fn overlap_gap_vanishes_on_axis() {
        let path = spin(0.0).path().unwrap();
        let run = prepare_run(&path, 50.0, System::A, &RunSettings::default()).unwrap();
        assert!(overlap_identity_check(&run.eigenpath, &run.trace, 0).unwrap() <= 1e-9);
    }

    #[test]
    fn overlap_check_requires_eigenstate_start() {
        let path = spin(PI / 3.0).path().unwrap();
        let run = prepare_run(&path, 5.0, System::A, &RunSettings::default()).unwrap();
        assert!(matches!(
            overlap_identity_check(&run.eigenpath, &run.trace, 1),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn fidelity_on_axis_is_one() {
        let r = spin_fidelity_check(&spin(0.0), 33, 0, DUAL_PHASE_STEP).unwrap();
        for row in &r.rows {
            assert!((row.computed - 1.0).abs() < 1e-12 && (row.formula - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fidelity_quarter_point_formula() {
        let model = SpinRotatingField {
            omega0: 40.0,
            omega: 1.0,
            theta: PI / 4.0,
            cycles: 1,
        };
        let r = spin_fidelity_check(&model, 5, 0, DUAL_PHASE_STEP).unwrap();
        let row = r.rows[1];
        assert!((row.t - PI / 2.0).abs() < 1e-12);
        assert!((row.formula - 0.75).abs() < 1e-12);
        assert!(r.oracle_discrepancy <= ORACLE_TOL);
        assert_eq!(r.convention, Convention::Squared);
    }
}
