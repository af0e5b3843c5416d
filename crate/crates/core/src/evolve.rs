//! Scaled-time propagation `i ∂_s ψ = T·H(s)·ψ`, picture factorization and
//! the dual system `H_b = −U_a† H_a U_a`.
//!
//! The integrator is the exponential midpoint rule,
//! `U ← exp(−i·T·Δs·H(s_mid))·U`, which is unitary by construction. States
//! are never renormalized; drift beyond tolerance is an error.

use std::fmt;

use crate::adiabatic::AdiabaticApproximant;
use crate::error::{LabError, Result};
use crate::numerics::{
    c64, exp_from_eigen, herm_eig, inner, ComplexMatrix, HermitianMatrix, StateVector,
    UnitaryMatrix, C64, NORM_TOL, UNITARY_TOL,
};
use crate::spectral::{EigenPath, HamiltonianPath};

/// Upper bound on `T·max‖H‖_max·Δs` enforced on every run.
pub const MAX_PHASE_STEP: f64 = 0.1;
/// Default number of retained samples.
pub const DEFAULT_SAMPLE_COUNT: usize = 513;
/// Step-doubling acceptance threshold on the final state.
pub const STEP_DOUBLING_TOL: f64 = 1e-8;
/// Bound on `‖U_b U_a − I‖_max` for the dual construction.
pub const DUAL_CONSISTENCY_TOL: f64 = 1e-6;
/// Phase step that keeps the dual construction within
/// [`DUAL_CONSISTENCY_TOL`]; the consistency error is close to
/// `1.4·(phase step)²` independently of `T`.
pub const DUAL_PHASE_STEP: f64 = 5e-4;

/// Source of the Hamiltonian being integrated.
#[derive(Clone)]
pub enum Generator {
    /// An explicit path `H(s)`.
    Path(HamiltonianPath),
    /// The dual of another generator, `−U† H U` with `U` that generator's
    /// propagator, integrated alongside it.
    Dual(Box<Generator>),
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl From<HamiltonianPath> for Generator {
    fn from(path: HamiltonianPath) -> Self {
        Generator::Path(path)
    }
}

impl Generator {
    pub fn dual(self) -> Self {
        Generator::Dual(Box::new(self))
    }

    pub fn root(&self) -> &HamiltonianPath {
        match self {
            Generator::Path(p) => p,
            Generator::Dual(inner) => inner.root(),
        }
    }

    /// Number of dual constructions stacked on the root path.
    pub fn depth(&self) -> usize {
        match self {
            Generator::Path(_) => 0,
            Generator::Dual(inner) => 1 + inner.depth(),
        }
    }

    pub fn dim(&self) -> usize {
        self.root().dim()
    }

    pub fn label(&self) -> String {
        match self {
            Generator::Path(p) => p.name().to_string(),
            Generator::Dual(inner) => format!("dual({})", inner.label()),
        }
    }

    /// Bound on `‖H(s)‖_max` for every level of the stack. Conjugation keeps
    /// the spectrum up to sign, so the root's spectral radius bounds the duals.
    fn entry_norm_bound(&self) -> Result<f64> {
        let root = self.root();
        if self.depth() == 0 {
            return Ok(root.max_entry_norm());
        }
        let mut radius: f64 = 0.0;
        for k in 0..=256 {
            let eig = herm_eig(&root.value(k as f64 / 256.0))?;
            radius = radius
                .max(eig.values[0].abs())
                .max(eig.values[eig.values.len() - 1].abs());
        }
        Ok(radius.max(root.max_entry_norm()))
    }
}

/// Hamiltonian of stack level `level` at `s` inside the step starting at
/// `s0`, where `chain[j]` holds level `j`'s propagator at `s0`. A parent's
/// propagator at `s` is advanced from `s0` by one midpoint exponential.
fn hamiltonian_in_step(
    root: &HamiltonianPath,
    level: usize,
    s: f64,
    s0: f64,
    chain: &[UnitaryMatrix],
    t_total: f64,
) -> Result<HermitianMatrix> {
    if level == 0 {
        return Ok(root.value(s));
    }
    let parent = level - 1;
    let parent_h = hamiltonian_in_step(root, parent, s, s0, chain, t_total)?;
    let parent_u = if s == s0 {
        chain[parent].clone()
    } else {
        let mid = hamiltonian_in_step(root, parent, 0.5 * (s0 + s), s0, chain, t_total)?;
        let step = exp_from_eigen(&herm_eig(&mid)?, t_total * (s - s0));
        step.compose(&chain[parent])
    };
    Ok(parent_h.conjugate_by(&parent_u).scaled(-1.0))
}

fn derivative_at_sample(
    root: &HamiltonianPath,
    level: usize,
    s: f64,
    chain: &[UnitaryMatrix],
) -> Option<HermitianMatrix> {
    if level == 0 {
        return root.derivative(s);
    }
    // d/ds(−U†HU) = −U† H′ U: the terms from ∂U cancel.
    let parent = derivative_at_sample(root, level - 1, s, chain)?;
    Some(parent.conjugate_by(&chain[level - 1]).scaled(-1.0))
}

/// Everything needed to run one propagation.
#[derive(Clone, Debug)]
pub struct EvolutionSpec {
    generator: Generator,
    t_total: f64,
    steps: usize,
    initial: StateVector,
    sample_count: usize,
}

impl EvolutionSpec {
    /// `steps = None` derives the count from the phase-step rule; a requested
    /// count that is too small is raised. The count is always a multiple of
    /// `sample_count − 1` so samples fall on step boundaries.
    pub fn new(
        generator: impl Into<Generator>,
        t_total: f64,
        initial: StateVector,
        sample_count: usize,
        steps: Option<usize>,
    ) -> Result<Self> {
        Self::with_phase_step(
            generator,
            t_total,
            initial,
            sample_count,
            steps,
            MAX_PHASE_STEP,
        )
    }

    /// Like [`EvolutionSpec::new`] with a stricter bound on `T·max‖H‖·Δs`.
    pub fn with_phase_step(
        generator: impl Into<Generator>,
        t_total: f64,
        initial: StateVector,
        sample_count: usize,
        steps: Option<usize>,
        max_phase_step: f64,
    ) -> Result<Self> {
        let generator = generator.into();
        if !(t_total.is_finite() && t_total > 0.0) {
            return Err(LabError::InputDomain(format!(
                "T must be positive and finite, got {t_total}"
            )));
        }
        if sample_count < 2 {
            return Err(LabError::InputDomain("need at least 2 samples".into()));
        }
        if initial.dim() != generator.dim() {
            return Err(LabError::DimensionMismatch {
                expected: generator.dim(),
                got: initial.dim(),
            });
        }
        if !(max_phase_step > 0.0 && max_phase_step <= MAX_PHASE_STEP) {
            return Err(LabError::InputDomain(format!(
                "phase step must lie in (0, {MAX_PHASE_STEP}], got {max_phase_step}"
            )));
        }
        let bound = generator.entry_norm_bound()?;
        let rule = (t_total * bound / max_phase_step).ceil() as usize;
        let wanted = steps.unwrap_or(0).max(rule).max(1);
        let stride = sample_count - 1;
        let steps = wanted.div_ceil(stride) * stride;
        Ok(Self {
            generator,
            t_total,
            steps,
            initial,
            sample_count,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Same run with twice the steps.
    pub fn doubled(&self) -> Self {
        Self {
            steps: self.steps * 2,
            ..self.clone()
        }
    }

    /// Same run for the dual system.
    pub fn dual(&self) -> Self {
        Self {
            generator: self.generator.clone().dual(),
            ..self.clone()
        }
    }
}

/// One retained point of a propagation.
#[derive(Clone, Debug)]
pub struct TraceSample {
    pub s: f64,
    pub state: StateVector,
    pub propagator: UnitaryMatrix,
    pub hamiltonian: HermitianMatrix,
    pub derivative: Option<HermitianMatrix>,
}

/// Sampled exact solution of one run.
#[derive(Clone, Debug)]
pub struct EvolutionTrace {
    spec: EvolutionSpec,
    samples: Vec<TraceSample>,
    unitarity_defect: f64,
    norm_defect: f64,
}

impl EvolutionTrace {
    pub fn spec(&self) -> &EvolutionSpec {
        &self.spec
    }

    pub fn t_total(&self) -> f64 {
        self.spec.t_total
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn initial(&self) -> &StateVector {
        &self.spec.initial
    }

    pub fn final_state(&self) -> &StateVector {
        &self.samples[self.samples.len() - 1].state
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    pub fn norm_defect(&self) -> f64 {
        self.norm_defect
    }

    pub fn sample_grid(&self) -> Vec<f64> {
        self.samples.iter().map(|x| x.s).collect()
    }

    /// Eigenpath on the sample grid, using the stored Hamiltonian samples.
    pub fn eigenpath(&self, gap_threshold: f64) -> Result<EigenPath> {
        let hs = self.samples.iter().map(|x| x.hamiltonian.clone()).collect();
        let ds = self
            .samples
            .iter()
            .map(|x| x.derivative.clone())
            .collect::<Option<Vec<_>>>();
        EigenPath::from_samples(self.sample_grid(), hs, ds, gap_threshold)
    }
}

/// Integrates the spec with the exponential midpoint rule.
pub fn propagate(spec: &EvolutionSpec) -> Result<EvolutionTrace> {
    let depth = spec.generator.depth();
    let root = spec.generator.root();
    let dim = spec.generator.dim();
    let t = spec.t_total;
    let steps = spec.steps;
    let stride = steps / (spec.sample_count - 1);
    let ds = 1.0 / steps as f64;

    let mut chain: Vec<UnitaryMatrix> = vec![UnitaryMatrix::identity(dim); depth + 1];
    let mut samples = Vec::with_capacity(spec.sample_count);
    let mut unitarity_defect: f64 = 0.0;
    let mut norm_defect: f64 = 0.0;

    let record = |j: usize, chain: &[UnitaryMatrix]| -> Result<TraceSample> {
        let s = j as f64 / steps as f64;
        let u = chain[depth].clone();
        let state = u.apply(&spec.initial);
        if state
            .amplitudes()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LabError::Numerical(format!("non-finite state at s = {s}")));
        }
        Ok(TraceSample {
            s,
            hamiltonian: hamiltonian_in_step(root, depth, s, s, chain, t)?,
            derivative: derivative_at_sample(root, depth, s, chain),
            state,
            propagator: u,
        })
    };

    for j in 0..=steps {
        if j % stride == 0 {
            let sample = record(j, &chain)?;
            unitarity_defect = unitarity_defect.max(sample.propagator.defect());
            norm_defect = norm_defect.max((sample.state.norm() - 1.0).abs());
            samples.push(sample);
        }
        if j == steps {
            break;
        }
        let s0 = j as f64 * ds;
        let mid = s0 + 0.5 * ds;
        let mut next = Vec::with_capacity(depth + 1);
        for level in 0..=depth {
            let h = hamiltonian_in_step(root, level, mid, s0, &chain, t)?;
            let step = exp_from_eigen(&herm_eig(&h)?, t * ds);
            next.push(step.compose(&chain[level]));
        }
        chain = next;
    }

    if unitarity_defect > UNITARY_TOL {
        return Err(LabError::Numerical(format!(
            "propagator lost unitarity: defect {unitarity_defect:e}"
        )));
    }
    if norm_defect > NORM_TOL {
        return Err(LabError::Numerical(format!(
            "state norm drifted by {norm_defect:e}"
        )));
    }
    Ok(EvolutionTrace {
        spec: spec.clone(),
        samples,
        unitarity_defect,
        norm_defect,
    })
}

/// `‖ψ_{2·steps}(1) − ψ_{steps}(1)‖₂`.
pub fn step_doubling_change(spec: &EvolutionSpec) -> Result<f64> {
    let coarse = propagate(spec)?;
    let fine = propagate(&spec.doubled())?;
    Ok(coarse.final_state().distance(fine.final_state()))
}

/// Propagation in validation mode: the result is accepted only when doubling
/// the step count moves the final state by at most [`STEP_DOUBLING_TOL`].
pub fn propagate_validated(spec: &EvolutionSpec) -> Result<(EvolutionTrace, f64)> {
    let coarse = propagate(spec)?;
    let fine = propagate(&spec.doubled())?;
    let change = coarse.final_state().distance(fine.final_state());
    if change > STEP_DOUBLING_TOL {
        return Err(LabError::Accuracy(format!(
            "doubling {} steps moved the final state by {change:e}; use more steps",
            spec.steps
        )));
    }
    Ok((coarse, change))
}

/// Which coefficients to extract from a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Picture {
    /// Adiabatic frame with dynamical phases stripped:
    /// `φ_n = e^{+iT∫ε_n}⟨n(s)|ψ(s)⟩`.
    A,
    /// Adiabatic frame only: `φ_n = ⟨n(s)|ψ(s)⟩`.
    B,
}

impl Picture {
    pub fn label(self) -> &'static str {
        match self {
            Picture::A => "a",
            Picture::B => "b",
        }
    }
}

/// Frame operators `V(s)` and coefficients `φ(s)` with `ψ(s) = V(s)·φ(s)`.
#[derive(Clone, Debug)]
pub struct PictureFactor {
    pub kind: Picture,
    pub s: Vec<f64>,
    pub frames: Vec<UnitaryMatrix>,
    pub coefficients: Vec<Vec<C64>>,
    /// Grid index in the eigenpath for every sample.
    pub ep_index: Vec<usize>,
}

impl PictureFactor {
    /// `max_s ‖φ(s) − φ(0)‖₂`.
    pub fn max_deviation(&self) -> f64 {
        let first = &self.coefficients[0];
        self.coefficients
            .iter()
            .map(|c| {
                c.iter()
                    .zip(first)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Maps every trace sample to its eigenpath grid index.
pub(crate) fn sample_indices(trace: &EvolutionTrace, ep: &EigenPath) -> Result<Vec<usize>> {
    trace
        .samples
        .iter()
        .map(|x| {
            ep.index_of(x.s).ok_or_else(|| {
                LabError::Precondition(format!(
                    "trace sample s = {} is not on the eigenpath grid",
                    x.s
                ))
            })
        })
        .collect()
}

/// Factors the traced state into frame and coefficients.
pub fn factor_picture(
    trace: &EvolutionTrace,
    ep: &EigenPath,
    kind: Picture,
) -> Result<PictureFactor> {
    if ep.dim() != trace.spec.generator.dim() {
        return Err(LabError::DimensionMismatch {
            expected: trace.spec.generator.dim(),
            got: ep.dim(),
        });
    }
    let ep_index = sample_indices(trace, ep)?;
    let dim = ep.dim();
    let t = trace.t_total();
    let basis0 = ep.basis(0);

    let mut frames = Vec::with_capacity(ep_index.len());
    let mut coefficients = Vec::with_capacity(ep_index.len());
    for (sample, &k) in trace.samples.iter().zip(&ep_index) {
        let phases: Vec<C64> = (0..dim)
            .map(|n| match kind {
                Picture::A => C64::from_polar(1.0, -t * ep.energy_integral(k, n)),
                Picture::B => c64(1.0, 0.0),
            })
            .collect();
        let basis = ep.basis(k);
        let coeffs: Vec<C64> = (0..dim)
            .map(|n| {
                let proj =
                    inner(&basis.column(n), sample.state.amplitudes()).expect("same dimension");
                proj * phases[n].conj()
            })
            .collect();
        // V = Σ_n phase_n |n(s)⟩⟨n(0)|.
        let frame = ComplexMatrix::from_fn(dim, |i, j| {
            (0..dim)
                .map(|n| basis[(i, n)] * phases[n] * basis0[(j, n)].conj())
                .sum()
        });
        let frame = UnitaryMatrix::new_unchecked(frame);

        let weight: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if (weight - 1.0).abs() > NORM_TOL {
            return Err(LabError::Numerical(format!(
                "coefficient norm {weight} at s = {} (eigenbasis not orthonormal?)",
                sample.s
            )));
        }
        let coeff_vec: Vec<C64> = (0..dim)
            .map(|i| (0..dim).map(|n| basis0[(i, n)] * coeffs[n]).sum())
            .collect();
        let rebuilt = frame.as_matrix().mul_vec_unchecked(&coeff_vec);
        let err = rebuilt
            .iter()
            .zip(sample.state.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if err > NORM_TOL {
            return Err(LabError::Numerical(format!(
                "picture reconstruction error {err:e} at s = {}",
                sample.s
            )));
        }
        frames.push(frame);
        coefficients.push(coeffs);
    }
    Ok(PictureFactor {
        kind,
        s: trace.sample_grid(),
        frames,
        coefficients,
        ep_index,
    })
}

/// The dual system of a traced run.
#[derive(Clone, Debug)]
pub struct DualSystem {
    /// `H_b(s_k) = −U_a(s_k)† H_a(s_k) U_a(s_k)` at the sample points.
    pub hamiltonians: Vec<HermitianMatrix>,
    pub trace: EvolutionTrace,
    /// `max_k ‖U_b(s_k) U_a(s_k) − I‖_max`.
    pub consistency: f64,
}

/// Builds and independently integrates the dual of `trace_a`'s system,
/// starting from the same initial state.
pub fn dual_system(trace_a: &EvolutionTrace) -> Result<DualSystem> {
    let spec_b = trace_a.spec.dual();
    let trace_b = propagate(&spec_b)?;
    let dim = trace_a.spec.generator.dim();
    let identity = ComplexMatrix::identity(dim);
    let mut consistency: f64 = 0.0;
    for (a, b) in trace_a.samples.iter().zip(&trace_b.samples) {
        let product = b.propagator.compose(&a.propagator);
        consistency = consistency.max(product.as_matrix().max_diff(&identity));
    }
    if consistency > DUAL_CONSISTENCY_TOL {
        return Err(LabError::Numerical(format!(
            "dual propagator is not the adjoint of the original: ‖U_b U_a − I‖ = {consistency:e}; raise the step count"
        )));
    }
    let hamiltonians = trace_b
        .samples
        .iter()
        .map(|x| x.hamiltonian.clone())
        .collect();
    Ok(DualSystem {
        hamiltonians,
        trace: trace_b,
        consistency,
    })
}

/// One row of the derivative-versus-limit diagnostic.
#[derive(Clone, Copy, Debug)]
pub struct DerivativeProbeRow {
    pub s: f64,
    /// `‖ψ − ψ_A‖`.
    pub state_gap: f64,
    /// `‖∂_sψ − ∂_sψ_A‖`.
    pub derivative_gap: f64,
    /// `‖∂_sψ − ∂_sψ_A‖ / T`.
    pub scaled_derivative_gap: f64,
}

/// Compares the traced state and its scaled-time derivative against the
/// adiabatic approximant of level `n` on the interior sample points.
pub fn derivative_probe(
    trace: &EvolutionTrace,
    ep: &EigenPath,
    n: usize,
) -> Result<Vec<DerivativeProbeRow>> {
    let t = trace.t_total();
    let max_h = trace
        .samples
        .iter()
        .map(|x| x.hamiltonian.as_matrix().max_norm())
        .fold(0.0, f64::max);
    let spacing = 1.0 / (trace.samples.len() - 1) as f64;
    let limit = 1.0 / (100.0 * t * max_h.max(f64::MIN_POSITIVE));
    if spacing > limit {
        return Err(LabError::Precondition(format!(
            "sample spacing {spacing:e} exceeds 1/(100·T·max‖H‖) = {limit:e}; retain more samples"
        )));
    }
    let ks = sample_indices(trace, ep)?;
    let approx = AdiabaticApproximant::new(ep, n, t)?;
    let anchor = inner(&ep.vector(0, n), trace.initial().amplitudes())?;
    let approx_states: Vec<Vec<C64>> = ks
        .iter()
        .map(|&k| {
            approx
                .state(k)
                .amplitudes()
                .iter()
                .map(|z| z * anchor)
                .collect()
        })
        .collect();

    let diff = |a: &[C64], b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let samples = &trace.samples;
    let mut rows = Vec::with_capacity(samples.len().saturating_sub(2));
    for j in 1..samples.len() - 1 {
        let h2 = samples[j + 1].s - samples[j - 1].s;
        let dpsi: Vec<C64> = diff(
            samples[j + 1].state.amplitudes(),
            samples[j - 1].state.amplitudes(),
        )
        .into_iter()
        .map(|z| z / h2)
        .collect();
        let dpsi_a: Vec<C64> = diff(&approx_states[j + 1], &approx_states[j - 1])
            .into_iter()
            .map(|z| z / h2)
            .collect();
        let state_gap = norm(&diff(samples[j].state.amplitudes(), &approx_states[j]));
        let derivative_gap = norm(&diff(&dpsi, &dpsi_a));
        rows.push(DerivativeProbeRow {
            s: samples[j].s,
            state_gap,
            derivative_gap,
            scaled_derivative_gap: derivative_gap / t,
        });
    }
    Ok(rows)
}
