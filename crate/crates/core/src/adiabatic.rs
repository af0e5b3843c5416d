//! Adiabatic approximant, the adiabatic condition integral, residuals of the
//! coefficient integral equations and convergence sweeps over `T`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::evolve::{
    dual_system, factor_picture, propagate, sample_indices, EvolutionSpec, EvolutionTrace, Picture,
    DUAL_PHASE_STEP, MAX_PHASE_STEP,
};
use crate::numerics::{c64, herm_eig, inner, StateVector, C64};
use crate::spectral::{EigenPath, HamiltonianPath, DEFAULT_GAP_THRESHOLD};

/// Deviations at or below this are reported as exact and not fitted.
pub const EXACT_THRESHOLD: f64 = 1e-9;
/// Fit residual above which the two smallest `T` are discarded.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.1;
/// Largest accepted change of the condition integral under grid halving.
pub const CONDITION_REFINEMENT_TOL: f64 = 1e-6;
/// Minimum points per oscillation period for oscillatory integrals.
pub const POINTS_PER_PERIOD: f64 = 20.0;
/// Largest sample count tried by the refinement driver.
pub const MAX_REFINED_SAMPLES: usize = (1 << 17) + 1;

/// `ψ_A(s) = e^{−iT∫ε_n}·g(s)·|n(s)⟩` on the grid of an eigenpath.
#[derive(Clone, Debug)]
pub struct AdiabaticApproximant {
    level: usize,
    t_total: f64,
    grid: Vec<f64>,
    dynamical: Vec<f64>,
    geometric: Vec<C64>,
    vectors: Vec<Vec<C64>>,
}

impl AdiabaticApproximant {
    /// The geometric factor is accumulated as a discrete holonomy, so it is
    /// identically 1 in the parallel-transport gauge and follows any other
    /// gauge covariantly.
    pub fn new(ep: &EigenPath, n: usize, t_total: f64) -> Result<Self> {
        if n >= ep.dim() {
            return Err(LabError::InputDomain(format!(
                "level {n} out of range for dimension {}",
                ep.dim()
            )));
        }
        if !(t_total.is_finite() && t_total >= 0.0) {
            return Err(LabError::InputDomain(format!(
                "T must be finite and non-negative, got {t_total}"
            )));
        }
        let mut geometric = Vec::with_capacity(ep.len());
        let mut g = c64(1.0, 0.0);
        geometric.push(g);
        for k in 0..ep.len() - 1 {
            let o = ep.step_overlap(k, n);
            g *= o.conj() / o.norm();
            geometric.push(g);
        }
        Ok(Self {
            level: n,
            t_total,
            grid: ep.grid().to_vec(),
            dynamical: (0..ep.len())
                .map(|k| t_total * ep.energy_integral(k, n))
                .collect(),
            geometric,
            vectors: (0..ep.len()).map(|k| ep.vector(k, n)).collect(),
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `T·∫₀^s ε_n` at grid point `k`.
    pub fn dynamical_phase(&self, k: usize) -> f64 {
        self.dynamical[k]
    }

    pub fn geometric_factor(&self, k: usize) -> C64 {
        self.geometric[k]
    }

    pub fn state(&self, k: usize) -> StateVector {
        let phase = C64::from_polar(1.0, -self.dynamical[k]) * self.geometric[k];
        StateVector::from_raw(self.vectors[k].iter().map(|z| z * phase).collect())
    }

    pub fn state_at(&self, s: f64) -> Result<StateVector> {
        let k = grid_index(&self.grid, s)
            .ok_or_else(|| LabError::Precondition(format!("s = {s} is not a grid point")))?;
        Ok(self.state(k))
    }

    /// `‖ψ(s) − c₀·ψ_A(s)‖` at every trace sample, with `c₀ = ⟨n(0)|ψ(0)⟩`
    /// so the comparison does not depend on the phase of `|n(0)⟩`.
    pub fn deviations(&self, trace: &EvolutionTrace) -> Result<Vec<f64>> {
        let anchor = inner(&self.vectors[0], trace.initial().amplitudes())?;
        trace
            .samples()
            .iter()
            .map(|x| {
                let k = grid_index(&self.grid, x.s).ok_or_else(|| {
                    LabError::Precondition(format!(
                        "trace sample s = {} is not on the eigenpath grid",
                        x.s
                    ))
                })?;
                let approx = self.state(k);
                Ok(x.state
                    .amplitudes()
                    .iter()
                    .zip(approx.amplitudes())
                    .map(|(a, b)| (a - b * anchor).norm_sqr())
                    .sum::<f64>()
                    .sqrt())
            })
            .collect()
    }
}

fn grid_index(grid: &[f64], s: f64) -> Option<usize> {
    let k = grid.partition_point(|&g| g < s - 1e-12);
    (k < grid.len() && (grid[k] - s).abs() <= 1e-12).then_some(k)
}

pub fn adiabatic_state(ep: &EigenPath, n: usize, s: f64, t_total: f64) -> Result<StateVector> {
    AdiabaticApproximant::new(ep, n, t_total)?.state_at(s)
}

/// Which system of a dual pair to study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum System {
    /// The model Hamiltonian itself.
    A,
    /// Its dual, `H_b = −U_a† H_a U_a`.
    B,
}

impl System {
    pub fn label(self) -> &'static str {
        match self {
            System::A => "a",
            System::B => "b",
        }
    }
}

/// Discretization settings shared by the sweep drivers.
#[derive(Clone, Debug)]
pub struct RunSettings {
    /// Eigenlevel of `H_a(0)` used as the initial state.
    pub level: usize,
    /// Lower bound on retained samples; raised to `2^p + 1` and to at least
    /// [`POINTS_PER_PERIOD`] samples per fastest oscillation.
    pub min_samples: usize,
    pub max_phase_step: f64,
    /// Phase step used instead of `max_phase_step` when the dual system is
    /// integrated, if smaller.
    pub dual_phase_step: f64,
    pub steps: Option<usize>,
    pub gap_threshold: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            level: 0,
            min_samples: 513,
            max_phase_step: MAX_PHASE_STEP,
            dual_phase_step: DUAL_PHASE_STEP,
            steps: None,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

impl RunSettings {
    /// Sample count used for a run of duration `t_total`.
    pub fn samples_for(&self, path: &HamiltonianPath, t_total: f64) -> Result<usize> {
        let spread = path.spectral_spread()?;
        let periods = POINTS_PER_PERIOD * t_total * spread / (2.0 * PI);
        let intervals = (self.min_samples.max(3) - 1).max(periods.ceil() as usize);
        Ok(intervals.next_power_of_two() + 1)
    }
}

/// A propagated run together with the eigenpath of the traced system.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub system: System,
    pub t_total: f64,
    pub trace: EvolutionTrace,
    pub eigenpath: EigenPath,
    /// Level of the traced system that holds the initial state.
    pub level: usize,
    /// The original system when `system` is [`System::B`].
    pub original: Option<(EvolutionTrace, EigenPath)>,
    pub dual_consistency: Option<f64>,
}

/// Propagates `path` (or its dual) from eigenlevel `settings.level` of `H(0)`.
pub fn prepare_run(
    path: &HamiltonianPath,
    t_total: f64,
    system: System,
    settings: &RunSettings,
) -> Result<PreparedRun> {
    let samples = settings.samples_for(path, t_total)?;
    prepare_run_with_samples(path, t_total, system, settings, samples)
}

pub(crate) fn prepare_run_with_samples(
    path: &HamiltonianPath,
    t_total: f64,
    system: System,
    settings: &RunSettings,
    samples: usize,
) -> Result<PreparedRun> {
    if settings.level >= path.dim() {
        return Err(LabError::InputDomain(format!(
            "level {} out of range for dimension {}",
            settings.level,
            path.dim()
        )));
    }
    let eig = herm_eig(&path.value(0.0))?;
    let initial = StateVector::new(eig.vector(settings.level))?;
    let phase_step = match system {
        System::A => settings.max_phase_step,
        System::B => settings.max_phase_step.min(settings.dual_phase_step),
    };
    let spec = EvolutionSpec::with_phase_step(
        path.clone(),
        t_total,
        initial.clone(),
        samples,
        settings.steps,
        phase_step,
    )?;
    let trace_a = propagate(&spec)?;
    let ep_a = trace_a.eigenpath(settings.gap_threshold)?;
    match system {
        System::A => Ok(PreparedRun {
            system,
            t_total,
            trace: trace_a,
            eigenpath: ep_a,
            level: settings.level,
            original: None,
            dual_consistency: None,
        }),
        System::B => {
            let dual = dual_system(&trace_a)?;
            let ep_b = dual.trace.eigenpath(settings.gap_threshold)?;
            let level = best_match(&ep_b, 0, initial.amplitudes());
            Ok(PreparedRun {
                system,
                t_total,
                trace: dual.trace,
                eigenpath: ep_b,
                level,
                original: Some((trace_a, ep_a)),
                dual_consistency: Some(dual.consistency),
            })
        }
    }
}

pub(crate) fn best_match(ep: &EigenPath, k: usize, v: &[C64]) -> usize {
    (0..ep.dim())
        .max_by(|&a, &b| {
            let oa = inner(&ep.vector(k, a), v).expect("same dimension").norm();
            let ob = inner(&ep.vector(k, b), v).expect("same dimension").norm();
            oa.total_cmp(&ob)
        })
        .expect("non-empty")
}

/// `T·∫₀^s (ε_n − ε_m)` for every level `m`, accumulated increment by
/// increment along the eigenpath grid.
fn phase_differences(ep: &EigenPath, n: usize, t_total: f64) -> Vec<Vec<f64>> {
    let grid = ep.grid();
    let mut out = vec![vec![0.0; ep.dim()]; ep.len()];
    for k in 1..ep.len() {
        let h = grid[k] - grid[k - 1];
        let (done, rest) = out.split_at_mut(k);
        for (m, slot) in rest[0].iter_mut().enumerate() {
            let prev = ep.energy(k - 1, n) - ep.energy(k - 1, m);
            let next = ep.energy(k, n) - ep.energy(k, m);
            *slot = done[k - 1][m] + t_total * 0.5 * (prev + next) * h;
        }
    }
    out
}

/// Treatment of the coefficients inside the condition integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConditionMode {
    /// `φ_m(s′)` from the exact run.
    SelfConsistent,
    /// `φ_m(0)` held fixed.
    Frozen,
}

impl ConditionMode {
    pub fn label(self) -> &'static str {
        match self {
            ConditionMode::SelfConsistent => "self-consistent",
            ConditionMode::Frozen => "frozen",
        }
    }
}

/// `C_n(s, T) = |Σ_{m≠n} ∫₀^s ⟨n|∂m⟩ e^{iT∫(ε_n−ε_m)} φ_m ds′|` on the trace samples.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub t_total: f64,
    pub level: usize,
    pub mode: ConditionMode,
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
    /// Largest change of the integral when every other sample is dropped.
    pub refinement_change: f64,
}

/// Evaluates the adiabatic condition integral by the trapezoid rule on the
/// trace samples and checks it against the same rule on every other sample.
pub fn qat_condition(
    ep: &EigenPath,
    trace: &EvolutionTrace,
    n: usize,
    mode: ConditionMode,
) -> Result<ConditionReport> {
    if n >= ep.dim() {
        return Err(LabError::InputDomain(format!("level {n} out of range")));
    }
    let samples = trace.samples();
    if !(samples.len() - 1).is_multiple_of(2) {
        return Err(LabError::Precondition(
            "condition integral needs an even number of sample intervals".into(),
        ));
    }
    let t = trace.t_total();
    let ks = sample_indices(trace, ep)?;
    let dim = ep.dim();
    let max_step = 2.0 * PI / POINTS_PER_PERIOD;
    for j in 1..samples.len() {
        let h = samples[j].s - samples[j - 1].s;
        for m in 0..dim {
            let rate = (ep.energy(ks[j], n) - ep.energy(ks[j], m))
                .abs()
                .max((ep.energy(ks[j - 1], n) - ep.energy(ks[j - 1], m)).abs());
            if t * rate * h > max_step {
                return Err(LabError::Accuracy(format!(
                    "fewer than {POINTS_PER_PERIOD} samples per oscillation period near s = {}",
                    samples[j].s
                )));
            }
        }
    }
    let phi = factor_picture(trace, ep, Picture::A)?.coefficients;
    let phases = phase_differences(ep, n, t);
    let integrand: Vec<C64> = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            (0..dim)
                .filter(|&m| m != n)
                .map(|m| {
                    let coeff = match mode {
                        ConditionMode::SelfConsistent => phi[j][m],
                        ConditionMode::Frozen => phi[0][m],
                    };
                    ep.coupling_value(n, m, k) * C64::from_polar(1.0, phases[k][m]) * coeff
                })
                .sum()
        })
        .collect();
    let s: Vec<f64> = samples.iter().map(|x| x.s).collect();
    let full = cumulative_trapezoid(&s, &integrand);
    let coarse_s: Vec<f64> = s.iter().step_by(2).copied().collect();
    let coarse_f: Vec<C64> = integrand.iter().step_by(2).copied().collect();
    let coarse = cumulative_trapezoid(&coarse_s, &coarse_f);
    let refinement_change = coarse
        .iter()
        .zip(full.iter().step_by(2))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if refinement_change >= CONDITION_REFINEMENT_TOL {
        return Err(LabError::Accuracy(format!(
            "condition integral changed by {refinement_change:e} under grid halving; refine the sample grid"
        )));
    }
    let values: Vec<f64> = full.iter().map(|z| z.norm()).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(ConditionReport {
        t_total: t,
        level: n,
        mode,
        s,
        values,
        max,
        refinement_change,
    })
}

fn cumulative_trapezoid(s: &[f64], f: &[C64]) -> Vec<C64> {
    let mut acc = c64(0.0, 0.0);
    let mut out = Vec::with_capacity(s.len());
    out.push(acc);
    for j in 1..s.len() {
        acc += (f[j - 1] + f[j]) * (0.5 * (s[j] - s[j - 1]));
        out.push(acc);
    }
    out
}

/// Runs the condition integral for one `T`, doubling the retained samples
/// until the grid-halving check passes or [`MAX_REFINED_SAMPLES`] is reached.
/// `target` is a level of the traced system; `None` selects the occupied one.
pub fn refined_condition(
    path: &HamiltonianPath,
    t_total: f64,
    system: System,
    mode: ConditionMode,
    target: Option<usize>,
    settings: &RunSettings,
) -> Result<ConditionReport> {
    let mut samples = settings.samples_for(path, t_total)?;
    loop {
        let run = prepare_run_with_samples(path, t_total, system, settings, samples)?;
        let n = target.unwrap_or(run.level);
        match qat_condition(&run.eigenpath, &run.trace, n, mode) {
            Err(LabError::Accuracy(msg)) => {
                if samples >= MAX_REFINED_SAMPLES {
                    return Err(LabError::Accuracy(format!(
                        "refinement cap of {MAX_REFINED_SAMPLES} samples reached: {msg}"
                    )));
                }
                samples = 2 * (samples - 1) + 1;
            }
            other => return other,
        }
    }
}

/// Condition maxima over a set of durations, with a power-law fit.
#[derive(Clone, Debug)]
pub struct ConditionSweep {
    pub system: System,
    pub mode: ConditionMode,
    pub reports: Vec<ConditionReport>,
    pub fit: Option<PowerFit>,
}

pub fn condition_sweep(
    path: &HamiltonianPath,
    times: &[f64],
    system: System,
    mode: ConditionMode,
    target: Option<usize>,
    settings: &RunSettings,
) -> Result<ConditionSweep> {
    validate_times(times)?;
    let reports = times
        .par_iter()
        .map(|&t| {
            refined_condition(path, t, system, mode, target, settings).map_err(|e| {
                LabError::Sweep {
                    t,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let maxima: Vec<f64> = reports.iter().map(|r| r.max).collect();
    let fit = if maxima.iter().all(|&d| d <= EXACT_THRESHOLD) {
        None
    } else {
        fit_with_discard(times, &maxima)
    };
    Ok(ConditionSweep {
        system,
        mode,
        reports,
        fit,
    })
}

/// Integral equation checked by [`coefficient_residual`].
#[derive(Clone, Copy, Debug)]
pub enum ResidualForm<'a> {
    /// `φ_n(s) = φ_n(0) − Σ_m ∫ ⟨n|∂m⟩ e^{iT∫(ε_n−ε_m)} φ_m`, with the
    /// traced system's own couplings.
    Oscillating,
    /// The same equation written with the couplings of the partner system
    /// of a dual pair, where the oscillating factors cancel. `reference` is
    /// the partner's eigenpath on the same grid.
    Counterbalanced { reference: &'a EigenPath },
}

/// Maximum over the even samples of `‖φ(s) − φ(0) + ∫₀^s K φ‖₂`, with `φ`
/// the picture-a coefficients of `trace` and the integral by composite
/// Simpson on the uniform sample grid.
pub fn coefficient_residual(
    ep: &EigenPath,
    trace: &EvolutionTrace,
    form: ResidualForm<'_>,
) -> Result<f64> {
    let samples = trace.samples();
    if !(samples.len() - 1).is_multiple_of(2) {
        return Err(LabError::Precondition(
            "residual quadrature needs an even number of sample intervals".into(),
        ));
    }
    let ks = sample_indices(trace, ep)?;
    let phi = factor_picture(trace, ep, Picture::A)?.coefficients;
    let dim = ep.dim();
    let t = trace.t_total();

    let kernel: Box<dyn Fn(usize, usize, usize) -> C64 + '_> = match form {
        ResidualForm::Oscillating => {
            let phases: Vec<Vec<Vec<f64>>> =
                (0..dim).map(|n| phase_differences(ep, n, t)).collect();
            Box::new(move |j, n, m| {
                let k = ks[j];
                ep.coupling_value(n, m, k) * C64::from_polar(1.0, phases[n][k][m])
            })
        }
        ResidualForm::Counterbalanced { reference } => {
            if reference.dim() != dim {
                return Err(LabError::DimensionMismatch {
                    expected: dim,
                    got: reference.dim(),
                });
            }
            let rks = sample_indices(trace, reference)?;
            // Level j of this system starts as a phase multiple of a level of
            // the reference system; align labels and phases at s = 0.
            let mut map = vec![0; dim];
            let mut beta = vec![0.0; dim];
            for (j, (slot, b)) in map.iter_mut().zip(beta.iter_mut()).enumerate() {
                let v = ep.vector(0, j);
                let jr = best_match(reference, 0, &v);
                let o = inner(&reference.vector(0, jr), &v)?;
                if (o.norm() - 1.0).abs() > 1e-9 {
                    return Err(LabError::Precondition(
                        "reference eigenbasis does not match at s = 0".into(),
                    ));
                }
                *slot = jr;
                *b = o.arg();
            }
            Box::new(move |j, n, m| {
                reference.coupling_value(map[n], map[m], rks[j])
                    * C64::from_polar(1.0, beta[m] - beta[n])
            })
        }
    };

    let integrand: Vec<Vec<C64>> = (0..samples.len())
        .map(|j| {
            (0..dim)
                .map(|n| (0..dim).map(|m| kernel(j, n, m) * phi[j][m]).sum())
                .collect()
        })
        .collect();

    let h = samples[1].s - samples[0].s;
    if samples
        .windows(2)
        .any(|w| ((w[1].s - w[0].s) - h).abs() > 1e-12)
    {
        return Err(LabError::Precondition(
            "residual quadrature needs a uniform sample grid".into(),
        ));
    }
    let mut acc = vec![c64(0.0, 0.0); dim];
    let mut worst: f64 = 0.0;
    for j in (2..samples.len()).step_by(2) {
        for (n, a) in acc.iter_mut().enumerate() {
            *a += (integrand[j - 2][n] + integrand[j - 1][n] * 4.0 + integrand[j][n]) * (h / 3.0);
        }
        let r = (0..dim)
            .map(|n| (phi[j][n] - phi[0][n] + acc[n]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Least-squares line through `(log T, log D)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in natural-log units.
    pub residual: f64,
    /// Whether the two smallest `T` were dropped.
    pub discarded: bool,
}

/// Fits `log D = slope·log T + intercept`; `None` with fewer than two points
/// or a non-positive value.
pub fn fit_power_law(times: &[f64], values: &[f64]) -> Option<PowerFit> {
    if times.len() < 2 || times.len() != values.len() || values.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some(PowerFit {
        slope,
        intercept,
        residual,
        discarded: false,
    })
}

/// [`fit_power_law`], refitted without the two smallest `T` when the residual
/// exceeds [`FIT_RESIDUAL_LIMIT`] and at least two points would remain.
pub fn fit_with_discard(times: &[f64], values: &[f64]) -> Option<PowerFit> {
    let fit = fit_power_law(times, values)?;
    if fit.residual > FIT_RESIDUAL_LIMIT && times.len() >= 4 {
        if let Some(refit) = fit_power_law(&times[2..], &values[2..]) {
            return Some(PowerFit {
                discarded: true,
                ..refit
            });
        }
    }
    Some(fit)
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(LabError::InputDomain("sweep needs at least one T".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(LabError::InputDomain(
            "every T must be positive and finite".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InputDomain(
            "T values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One member of a convergence sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub t_total: f64,
    /// `max_s ‖φ(s) − φ(0)‖₂`.
    pub deviation: f64,
    pub samples: usize,
    pub steps: usize,
    pub unitarity_defect: f64,
    pub dual_consistency: Option<f64>,
}

/// Settings of a convergence sweep.
#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub system: System,
    pub picture: Picture,
    pub times: Vec<f64>,
    pub run: RunSettings,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub model_id: String,
    pub system: System,
    pub picture: Picture,
    pub level: usize,
    pub points: Vec<SweepPoint>,
    pub fit: Option<PowerFit>,
    /// Every deviation is at or below [`EXACT_THRESHOLD`]; no fit attempted.
    pub exact: bool,
}

impl ConvergenceReport {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t_total).collect()
    }

    pub fn deviations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.deviation).collect()
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Slope fitted to the first `i + 1` points.
    pub fn slope_so_far(&self, i: usize) -> Option<f64> {
        if self.exact {
            return None;
        }
        let end = (i + 1).min(self.points.len());
        fit_power_law(&self.times()[..end], &self.deviations()[..end]).map(|f| f.slope)
    }
}

/// Propagates and factors the model for every `T` concurrently and fits the
/// decay of `D(T)`.
pub fn convergence_sweep(
    path: &HamiltonianPath,
    model_id: &str,
    settings: &SweepSettings,
) -> Result<ConvergenceReport> {
    validate_times(&settings.times)?;
    let members = settings
        .times
        .par_iter()
        .map(|&t| {
            sweep_member(path, t, settings).map_err(|e| LabError::Sweep {
                t,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let level = members.first().map(|m| m.1).unwrap_or(settings.run.level);
    let points: Vec<SweepPoint> = members.into_iter().map(|m| m.0).collect();
    let deviations: Vec<f64> = points.iter().map(|p| p.deviation).collect();
    let exact = deviations.iter().all(|&d| d <= EXACT_THRESHOLD);
    let fit = if exact {
        None
    } else {
        fit_with_discard(&settings.times, &deviations)
    };
    Ok(ConvergenceReport {
        model_id: model_id.to_string(),
        system: settings.system,
        picture: settings.picture,
        level,
        points,
        fit,
        exact,
    })
}

fn sweep_member(
    path: &HamiltonianPath,
    t: f64,
    settings: &SweepSettings,
) -> Result<(SweepPoint, usize)> {
    let run = prepare_run(path, t, settings.system, &settings.run)?;
    let factor = factor_picture(&run.trace, &run.eigenpath, settings.picture)?;
    Ok((
        SweepPoint {
            t_total: t,
            deviation: factor.max_deviation(),
            samples: run.trace.samples().len(),
            steps: run.trace.spec().steps(),
            unitarity_defect: run.trace.unitarity_defect(),
            dual_consistency: run.dual_consistency,
        },
        run.level,
    ))
}
