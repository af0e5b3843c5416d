//! Instantaneous spectra along a Hamiltonian path: level tracking,
//! parallel-transport gauge, couplings `⟨n|∂_s|m⟩` and Berry holonomies.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{LabError, Result};
use crate::numerics::{c64, herm_eig, inner, ComplexMatrix, HermitianMatrix, C64};

/// Default refusal threshold for near-degenerate levels.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-8;
/// Two candidate overlaps closer than this make level assignment ambiguous.
pub const AMBIGUITY_THRESHOLD: f64 = 1e-3;
/// Tolerance for `value(0) == value(1)` on closed loops.
pub const CLOSURE_TOL: f64 = 1e-10;

const DERIVATIVE_CHECK_POINTS: usize = 10;
const DERIVATIVE_CHECK_STEP: f64 = 1e-5;
const DERIVATIVE_CHECK_TOL: f64 = 1e-6;
const PROBE_POINTS: usize = 257;

pub type MatrixFn = Arc<dyn Fn(f64) -> HermitianMatrix + Send + Sync>;

/// A smooth family `s ∈ [0,1] ↦ H(s)` with an optional analytic `dH/ds`.
#[derive(Clone)]
pub struct HamiltonianPath {
    name: String,
    dim: usize,
    params: BTreeMap<String, f64>,
    value: MatrixFn,
    derivative: Option<MatrixFn>,
}

impl fmt::Debug for HamiltonianPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianPath")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .field("derivative", &self.derivative.is_some())
            .finish()
    }
}

impl HamiltonianPath {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        params: BTreeMap<String, f64>,
        value: impl Fn(f64) -> HermitianMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        let path = Self {
            name: name.into(),
            dim,
            params,
            value: Arc::new(value),
            derivative: None,
        };
        for k in 0..=8 {
            let h = path.value(k as f64 / 8.0);
            if h.dim() != dim {
                return Err(LabError::DimensionMismatch {
                    expected: dim,
                    got: h.dim(),
                });
            }
        }
        Ok(path)
    }

    /// Attaches an analytic derivative after checking it against central
    /// differences of `value` at ten pseudo-random points.
    pub fn with_derivative(
        mut self,
        derivative: impl Fn(f64) -> HermitianMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        let derivative: MatrixFn = Arc::new(derivative);
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let h = DERIVATIVE_CHECK_STEP;
        for _ in 0..DERIVATIVE_CHECK_POINTS {
            let s: f64 = rng.gen_range(h..1.0 - h);
            let plus = (self.value)(s + h);
            let minus = (self.value)(s - h);
            let fd = plus
                .as_matrix()
                .sub(minus.as_matrix())?
                .scale(c64(0.5 / h, 0.0));
            let exact = derivative(s);
            let err = fd.max_diff(exact.as_matrix());
            let scale = exact.as_matrix().max_norm().max(1.0);
            if err > DERIVATIVE_CHECK_TOL * scale {
                return Err(LabError::InputDomain(format!(
                    "derivative of path `{}` disagrees with finite differences at s = {s:.6}: {err:e}",
                    self.name
                )));
            }
        }
        self.derivative = Some(derivative);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn value(&self, s: f64) -> HermitianMatrix {
        (self.value)(s)
    }

    pub fn derivative(&self, s: f64) -> Option<HermitianMatrix> {
        self.derivative.as_ref().map(|d| d(s))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `H(0) = H(1)` entrywise to 1e-10.
    pub fn is_closed(&self) -> bool {
        self.value(0.0)
            .as_matrix()
            .max_diff(self.value(1.0).as_matrix())
            <= CLOSURE_TOL
    }

    /// `max_s ‖H(s)‖_max` estimated on a fixed probe grid.
    pub fn max_entry_norm(&self) -> f64 {
        (0..PROBE_POINTS)
            .map(|k| {
                self.value(k as f64 / (PROBE_POINTS - 1) as f64)
                    .as_matrix()
                    .max_norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest spectral width `ε_max − ε_min` on the probe grid.
    pub fn spectral_spread(&self) -> Result<f64> {
        let mut spread: f64 = 0.0;
        for k in 0..PROBE_POINTS {
            let eig = herm_eig(&self.value(k as f64 / (PROBE_POINTS - 1) as f64))?;
            spread = spread.max(eig.values[eig.values.len() - 1] - eig.values[0]);
        }
        Ok(spread)
    }
}

/// Phase convention carried by an [`EigenPath`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// `⟨n(s_k)|n(s_{k+1})⟩` real and non-negative for every step.
    ParallelTransport,
    /// Phases were altered after construction.
    Arbitrary,
}

/// Gauge-fixed instantaneous spectral data on a grid `0 = s_0 < … < s_K = 1`.
#[derive(Clone, Debug)]
pub struct EigenPath {
    grid: Vec<f64>,
    energies: Vec<Vec<f64>>,
    vectors: Vec<ComplexMatrix>,
    derivatives: Option<Vec<HermitianMatrix>>,
    energy_integrals: Vec<Vec<f64>>,
    min_gap: f64,
    min_gap_at: f64,
    gap_threshold: f64,
    closed: bool,
    gauge: Gauge,
}

/// Evaluates `path` on a uniform grid of `k_steps + 1` points and tracks levels.
pub fn build_eigenpath(
    path: &HamiltonianPath,
    k_steps: usize,
    gap_threshold: f64,
) -> Result<EigenPath> {
    if k_steps < 16 {
        return Err(LabError::Precondition(format!(
            "eigenpath grid needs K ≥ 16 intervals, got {k_steps}"
        )));
    }
    let grid: Vec<f64> = (0..=k_steps).map(|k| k as f64 / k_steps as f64).collect();
    let hs: Vec<HermitianMatrix> = grid.iter().map(|&s| path.value(s)).collect();
    let ds = path.has_derivative().then(|| {
        grid.iter()
            .map(|&s| path.derivative(s).expect("derivative present"))
            .collect()
    });
    EigenPath::from_samples(grid, hs, ds, gap_threshold)
}

impl EigenPath {
    /// Builds an eigenpath from Hamiltonian samples on an arbitrary strictly
    /// increasing grid from 0 to 1.
    pub fn from_samples(
        grid: Vec<f64>,
        hamiltonians: Vec<HermitianMatrix>,
        derivatives: Option<Vec<HermitianMatrix>>,
        gap_threshold: f64,
    ) -> Result<Self> {
        validate_grid(&grid)?;
        if hamiltonians.len() != grid.len() {
            return Err(LabError::DimensionMismatch {
                expected: grid.len(),
                got: hamiltonians.len(),
            });
        }
        if let Some(ds) = &derivatives {
            if ds.len() != grid.len() {
                return Err(LabError::DimensionMismatch {
                    expected: grid.len(),
                    got: ds.len(),
                });
            }
        }
        let dim = hamiltonians[0].dim();
        let mut energies = Vec::with_capacity(grid.len());
        let mut vectors: Vec<ComplexMatrix> = Vec::with_capacity(grid.len());
        let mut min_gap = f64::INFINITY;
        let mut min_gap_at = 0.0;

        for (&s, h) in grid.iter().zip(&hamiltonians) {
            if h.dim() != dim {
                return Err(LabError::DimensionMismatch {
                    expected: dim,
                    got: h.dim(),
                });
            }
            let eig = herm_eig(h)?;
            for n in 0..dim.saturating_sub(1) {
                let gap = eig.values[n + 1] - eig.values[n];
                if gap <= gap_threshold {
                    return Err(LabError::Degeneracy {
                        s,
                        lower: n,
                        upper: n + 1,
                        gap,
                        threshold: gap_threshold,
                    });
                }
                if gap < min_gap {
                    min_gap = gap;
                    min_gap_at = s;
                }
            }
            let raw = eig.vectors.as_matrix().clone();
            let fixed = match vectors.last() {
                None => raw,
                Some(prev) => track(prev, &raw, s)?,
            };
            vectors.push(fixed);
            energies.push(eig.values);
        }

        let closed = hamiltonians[0]
            .as_matrix()
            .max_diff(hamiltonians[hamiltonians.len() - 1].as_matrix())
            <= CLOSURE_TOL;
        let energy_integrals = cumulative_trapezoid(&grid, &energies, dim);

        Ok(Self {
            grid,
            energies,
            vectors,
            derivatives,
            energy_integrals,
            min_gap,
            min_gap_at,
            gap_threshold,
            closed,
            gauge: Gauge::ParallelTransport,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    /// Number of grid points (`K + 1`).
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn energy(&self, k: usize, n: usize) -> f64 {
        self.energies[k][n]
    }

    pub fn energies_at(&self, k: usize) -> &[f64] {
        &self.energies[k]
    }

    /// `|n(s_k)⟩`.
    pub fn vector(&self, k: usize, n: usize) -> Vec<C64> {
        self.vectors[k].column(n)
    }

    /// Columns are the eigenvectors at `s_k`.
    pub fn basis(&self, k: usize) -> &ComplexMatrix {
        &self.vectors[k]
    }

    pub fn derivative(&self, k: usize) -> Option<&HermitianMatrix> {
        self.derivatives.as_ref().map(|d| &d[k])
    }

    pub fn has_derivative(&self) -> bool {
        self.derivatives.is_some()
    }

    /// `∫₀^{s_k} ε_n ds′` by the composite trapezoid rule.
    pub fn energy_integral(&self, k: usize, n: usize) -> f64 {
        self.energy_integrals[n][k]
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn min_gap_location(&self) -> f64 {
        self.min_gap_at
    }

    pub fn gap_threshold(&self) -> f64 {
        self.gap_threshold
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    /// Grid index holding `s`, if any (to 1e-12).
    pub fn index_of(&self, s: f64) -> Option<usize> {
        let pos = self.grid.partition_point(|&g| g < s - 1e-12);
        (pos < self.grid.len() && (self.grid[pos] - s).abs() <= 1e-12).then_some(pos)
    }

    /// `⟨n(s_k)|n(s_{k+1})⟩`.
    pub fn step_overlap(&self, k: usize, n: usize) -> C64 {
        inner(&self.vector(k, n), &self.vector(k + 1, n)).expect("same dimension")
    }

    /// Copy with every vector `|n(s_k)⟩` multiplied by `e^{i·phases[k][n]}`.
    /// The result is no longer in parallel-transport gauge.
    pub fn regauged(&self, phases: &[Vec<f64>]) -> Result<Self> {
        if phases.len() != self.len() {
            return Err(LabError::DimensionMismatch {
                expected: self.len(),
                got: phases.len(),
            });
        }
        let dim = self.dim();
        let vectors = self
            .vectors
            .iter()
            .zip(phases)
            .map(|(v, ph)| {
                ComplexMatrix::from_fn(dim, |i, j| v[(i, j)] * C64::from_polar(1.0, ph[j]))
            })
            .collect();
        Ok(Self {
            vectors,
            gauge: Gauge::Arbitrary,
            ..self.clone()
        })
    }

    /// Maximum over grid points of `‖V_k†V_k − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| v.unitarity_defect())
            .fold(0.0, f64::max)
    }

    /// Best available `⟨n|∂_s|m⟩` at grid point `k`: the spectral ratio when a
    /// derivative is stored and the pair is non-degenerate, otherwise finite
    /// differences (one-sided second order at the ends).
    pub fn coupling_value(&self, n: usize, m: usize, k: usize) -> C64 {
        if n != m {
            if let Some(d) = self.derivative(k) {
                let gap = self.energies[k][m] - self.energies[k][n];
                if gap.abs() >= self.gap_threshold {
                    return d.expectation(&self.vector(k, n), &self.vector(k, m)) / gap;
                }
            }
        }
        self.fd_coupling_any(n, m, k)
    }

    fn fd_coupling_any(&self, n: usize, m: usize, k: usize) -> C64 {
        let last = self.len() - 1;
        let bra = self.vector(k, n);
        let proj = |j: usize| inner(&bra, &self.vector(j, m)).expect("same dimension");
        if k == 0 {
            let (h1, h2) = (self.grid[1] - self.grid[0], self.grid[2] - self.grid[0]);
            // Second-order one-sided difference on a possibly non-uniform grid.
            let (f0, f1, f2) = (proj(0), proj(1), proj(2));
            let a = -(h1 + h2) / (h1 * h2);
            let b = h2 / (h1 * (h2 - h1));
            let c = -h1 / (h2 * (h2 - h1));
            f0 * a + f1 * b + f2 * c
        } else if k == last {
            let (h1, h2) = (
                self.grid[last] - self.grid[last - 1],
                self.grid[last] - self.grid[last - 2],
            );
            let (f0, f1, f2) = (proj(last), proj(last - 1), proj(last - 2));
            let a = (h1 + h2) / (h1 * h2);
            let b = -h2 / (h1 * (h2 - h1));
            let c = h1 / (h2 * (h2 - h1));
            f0 * a + f1 * b + f2 * c
        } else {
            (proj(k + 1) - proj(k - 1)) / (self.grid[k + 1] - self.grid[k - 1])
        }
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(LabError::Precondition(
            "eigenpath grid needs at least 3 points".into(),
        ));
    }
    if grid[0] != 0.0 || (grid[grid.len() - 1] - 1.0).abs() > 1e-12 {
        return Err(LabError::Precondition(
            "eigenpath grid must run from 0 to 1".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Precondition(
            "eigenpath grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Assigns the raw eigenvectors at the next grid point to the tracked levels
/// by maximum overlap and rotates their phases so consecutive overlaps are
/// real and positive.
fn track(prev: &ComplexMatrix, raw: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let dim = prev.dim();
    let overlaps: Vec<Vec<C64>> = (0..dim)
        .map(|n| {
            let p = prev.column(n);
            (0..dim)
                .map(|m| inner(&p, &raw.column(m)).expect("same dimension"))
                .collect()
        })
        .collect();

    for (n, row) in overlaps.iter().enumerate() {
        let mut mags: Vec<f64> = row.iter().map(|z| z.norm()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        if dim > 1 && mags[0] - mags[1] < AMBIGUITY_THRESHOLD {
            return Err(LabError::Tracking {
                s,
                reason: format!(
                    "level {n} overlaps two candidates almost equally ({:.6} vs {:.6})",
                    mags[0], mags[1]
                ),
            });
        }
    }

    let mut assigned = vec![usize::MAX; dim];
    let mut taken = vec![false; dim];
    for _ in 0..dim {
        let mut best = (usize::MAX, usize::MAX, -1.0);
        for n in (0..dim).filter(|&n| assigned[n] == usize::MAX) {
            for m in (0..dim).filter(|&m| !taken[m]) {
                let mag = overlaps[n][m].norm();
                if mag > best.2 {
                    best = (n, m, mag);
                }
            }
        }
        assigned[best.0] = best.1;
        taken[best.1] = true;
    }
    if assigned.iter().enumerate().any(|(n, &m)| n != m) {
        return Err(LabError::Tracking {
            s,
            reason: format!("maximum-overlap assignment {assigned:?} reorders levels (crossing)"),
        });
    }

    let mut out = raw.clone();
    for n in 0..dim {
        let ov = overlaps[n][n];
        let phase = ov.conj() / ov.norm();
        for i in 0..dim {
            out[(i, n)] *= phase;
        }
    }
    Ok(out)
}

fn cumulative_trapezoid(grid: &[f64], energies: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|n| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(grid.len());
            out.push(0.0);
            for k in 1..grid.len() {
                acc += 0.5 * (energies[k - 1][n] + energies[k][n]) * (grid[k] - grid[k - 1]);
                out.push(acc);
            }
            out
        })
        .collect()
}

/// Availability of the spectral-ratio coupling estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioStatus {
    Available,
    Diagonal,
    NoDerivative,
    Degenerate,
}

/// Two estimates of `⟨n|∂_s|m⟩` at one grid point.
#[derive(Clone, Debug)]
pub struct CouplingEstimate {
    pub n: usize,
    pub m: usize,
    pub s: f64,
    pub fd_value: C64,
    pub ratio_value: Option<C64>,
    pub ratio_status: RatioStatus,
    /// `|fd − ratio|` when both exist.
    pub agreement: Option<f64>,
}

impl CouplingEstimate {
    /// `|fd − ratio| ≤ 1e-4·max(1, |fd|)`, vacuous when only one estimator exists.
    pub fn estimators_agree(&self) -> bool {
        self.agreement
            .is_none_or(|d| d <= 1e-4 * self.fd_value.norm().max(1.0))
    }
}

/// Centered finite-difference and spectral-ratio estimates of `⟨n|∂_s|m⟩`
/// at interior grid point `k`.
pub fn coupling(ep: &EigenPath, n: usize, m: usize, k: usize) -> Result<CouplingEstimate> {
    let dim = ep.dim();
    if n >= dim || m >= dim {
        return Err(LabError::Precondition(format!(
            "level index out of range for dimension {dim}"
        )));
    }
    if k == 0 || k + 1 >= ep.len() {
        return Err(LabError::Precondition(format!(
            "centered difference needs an interior grid point, got k = {k}"
        )));
    }
    let bra = ep.vector(k, n);
    let up = inner(&bra, &ep.vector(k + 1, m))?;
    let down = inner(&bra, &ep.vector(k - 1, m))?;
    let fd_value = (up - down) / (ep.grid[k + 1] - ep.grid[k - 1]);

    let (ratio_value, ratio_status) = if n == m {
        (None, RatioStatus::Diagonal)
    } else {
        match ep.derivative(k) {
            None => (None, RatioStatus::NoDerivative),
            Some(d) => {
                let gap = ep.energy(k, m) - ep.energy(k, n);
                if gap.abs() < ep.gap_threshold {
                    (None, RatioStatus::Degenerate)
                } else {
                    (
                        Some(d.expectation(&bra, &ep.vector(k, m)) / gap),
                        RatioStatus::Available,
                    )
                }
            }
        }
    };
    Ok(CouplingEstimate {
        n,
        m,
        s: ep.grid[k],
        fd_value,
        ratio_value,
        ratio_status,
        agreement: ratio_value.map(|r| (r - fd_value).norm()),
    })
}

/// Discrete Pancharatnam holonomy of level `n` around a closed loop:
/// `γ_n = −arg Π_k ⟨n(s_k)|n(s_{k+1})⟩`, the last factor closing against
/// `|n(s_0)⟩`, reduced to `(−π, π]`.
pub fn berry_phase(ep: &EigenPath, n: usize) -> Result<f64> {
    if !ep.is_closed() {
        return Err(LabError::Precondition(
            "Berry phase needs a closed loop: H(0) ≠ H(1)".into(),
        ));
    }
    if n >= ep.dim() {
        return Err(LabError::Precondition(format!("level {n} out of range")));
    }
    let last = ep.len() - 1;
    let mut product = c64(1.0, 0.0);
    for k in 0..last {
        let next = if k + 1 == last { 0 } else { k + 1 };
        let ov = inner(&ep.vector(k, n), &ep.vector(next, n))?;
        product *= ov / ov.norm();
    }
    Ok(wrap_phase(-product.arg()))
}

/// Reduces an angle to `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Circular distance between two angles.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

pub fn min_gap(ep: &EigenPath) -> f64 {
    ep.min_gap()
}
