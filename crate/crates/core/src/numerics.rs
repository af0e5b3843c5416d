//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for dimensions up to 16: plain row-major
//! storage, a cyclic complex Jacobi eigensolver and matrix exponentials of
//! anti-Hermitian generators built from the eigendecomposition, so every
//! propagator step is unitary up to the eigensolver residual.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{LabError, Result};

pub type C64 = Complex64;

/// Largest dimension the lab is tuned for.
pub const MAX_DIM: usize = 16;

/// Relative Hermiticity tolerance applied at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute tolerance on `‖U†U − I‖_max`.
pub const UNITARY_TOL: f64 = 1e-9;
/// Absolute tolerance on `|‖ψ‖ − 1|` for physical states.
pub const NORM_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 64;

#[inline]
pub(crate) fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense `N×N` complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InputDomain(
                "matrix dimension must be positive".into(),
            ));
        }
        if data.len() != dim * dim {
            return Err(LabError::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::InputDomain(
                "matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        Ok(self.mul_unchecked(rhs))
    }

    pub(crate) fn mul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// `A·v` for a column vector.
    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(self.mul_vec_unchecked(v))
    }

    pub(crate) fn mul_vec_unchecked(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖A − B‖_max`; panics on dimension mismatch.
    pub fn max_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim, "max_diff dimension mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖A − A†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `‖A†A − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .mul_unchecked(self)
            .max_diff(&Self::identity(self.dim))
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on dimension mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

/// A matrix that passed the Hermiticity check.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let scale = m.max_norm().max(1.0);
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL * scale {
            return Err(LabError::InputDomain(format!(
                "matrix is not Hermitian: ‖A − A†‖_max = {defect:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Hermitian part of an arbitrary matrix; used where rounding may leave
    /// a tiny anti-Hermitian remainder, e.g. after unitary conjugation.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(diag))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real linear combination `a·self + b·other`, still Hermitian.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        let m = self.0.scale(c64(a, 0.0)).add(&other.0.scale(c64(b, 0.0)))?;
        Ok(Self(m))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(self.0.scale(c64(k, 0.0)))
    }

    /// `⟨u|H|v⟩`.
    pub fn expectation(&self, u: &[C64], v: &[C64]) -> C64 {
        inner(u, &self.0.mul_vec_unchecked(v)).expect("expectation dimension mismatch")
    }

    /// `U† H U`, symmetrized.
    pub fn conjugate_by(&self, u: &UnitaryMatrix) -> Self {
        let m = &(&u.0.adjoint() * &self.0) * &u.0;
        Self::from_hermitian_part(&m)
    }
}

/// A matrix with `‖U†U − I‖_max ≤ 1e-9`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(LabError::Numerical(format!(
                "matrix is not unitary: ‖U†U − I‖_max = {defect:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Skips the defect check; for products of known unitaries inside hot loops.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self(&self.0 * &rhs.0)
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(self.0.mul_vec_unchecked(&v.0))
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j)
    }

    pub fn defect(&self) -> f64 {
        self.0.unitarity_defect()
    }
}

/// Unit-norm state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<C64>);

impl StateVector {
    /// Accepts amplitudes that already have unit norm.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_finite_vec(&amplitudes)?;
        let norm = vecnorm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(LabError::InputDomain(format!(
                "state is not normalized (‖ψ‖ = {norm}); use StateVector::normalized"
            )));
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        check_finite_vec(&amplitudes)?;
        let norm = vecnorm(&amplitudes);
        if norm == 0.0 {
            return Err(LabError::InputDomain(
                "cannot normalize the zero vector".into(),
            ));
        }
        Ok(Self(amplitudes.into_iter().map(|z| z / norm).collect()))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[k] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub(crate) fn from_raw(amplitudes: Vec<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        vecnorm(&self.0)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.0, &other.0).expect("state dimension mismatch")
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_finite_vec(v: &[C64]) -> Result<()> {
    if v.is_empty() {
        return Err(LabError::InputDomain("empty state vector".into()));
    }
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LabError::InputDomain(
            "state has non-finite amplitudes".into(),
        ));
    }
    Ok(())
}

/// `⟨u|v⟩`, conjugate-linear in `u`.
pub fn inner(u: &[C64], v: &[C64]) -> Result<C64> {
    if u.len() != v.len() {
        return Err(LabError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(a, b)| a.conj() * b).sum())
}

pub fn vecnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.matmul(b)
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// Spectral decomposition `H = V diag(values) V†`, values ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: UnitaryMatrix,
}

impl Eigen {
    pub fn vector(&self, n: usize) -> Vec<C64> {
        self.vectors.column(n)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = self.vectors.as_matrix();
        let scaled = ComplexMatrix::from_fn(v.dim(), |i, j| v[(i, j)] * self.values[j]);
        &scaled * &v.adjoint()
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Degenerate eigenvalues come back with an arbitrary orthonormal basis of
/// the degenerate subspace.
pub fn herm_eig(h: &HermitianMatrix) -> Result<Eigen> {
    let m = h.as_matrix();
    if m.data()
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(LabError::InputDomain(
            "non-finite Hamiltonian entries".into(),
        ));
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let frob2: f64 = a.data().iter().map(|z| z.norm_sqr()).sum();
    let target = (1e-15f64).powi(2) * frob2;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Eigen {
        values,
        vectors: UnitaryMatrix::new_unchecked(vectors),
    })
}

/// One Jacobi rotation zeroing `a[p][q]`: phase-rotate to a real symmetric
/// 2×2 block, then apply the classical rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let b = a[(p, q)];
    let mag = b.norm();
    if mag == 0.0 {
        return;
    }
    let n = a.dim();
    let e = (b / mag).conj();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = [[c, s], [-s e, c e]] on the (p, q) plane.
    let jpp = c64(c, 0.0);
    let jpq = c64(s, 0.0);
    let jqp = -e * s;
    let jqq = e * c;

    for r in 0..n {
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * jpp + arq * jqp;
        a[(r, q)] = arp * jpq + arq * jqq;
    }
    for col in 0..n {
        let apc = a[(p, col)];
        let aqc = a[(q, col)];
        a[(p, col)] = jpp.conj() * apc + jqp.conj() * aqc;
        a[(q, col)] = jpq.conj() * apc + jqq.conj() * aqc;
    }
    a[(p, q)] = c64(0.0, 0.0);
    a[(q, p)] = c64(0.0, 0.0);
    a[(p, p)] = c64(a[(p, p)].re, 0.0);
    a[(q, q)] = c64(a[(q, q)].re, 0.0);

    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp * jpp + vrq * jqp;
        v[(r, q)] = vrp * jpq + vrq * jqq;
    }
}

/// `exp(−iHτ)` through the eigendecomposition of `H`.
pub fn expm_antiherm(h: &HermitianMatrix, tau: f64) -> Result<UnitaryMatrix> {
    if !tau.is_finite() {
        return Err(LabError::InputDomain(format!(
            "non-finite time step τ = {tau}"
        )));
    }
    let eig = herm_eig(h)?;
    Ok(exp_from_eigen(&eig, tau))
}

pub(crate) fn exp_from_eigen(eig: &Eigen, tau: f64) -> UnitaryMatrix {
    let v = &orthonormal_columns(eig.vectors.as_matrix());
    let n = v.dim();
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * tau))
        .collect();
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = c64(0.0, 0.0);
            for k in 0..n {
                acc += v[(i, k)] * phases[k] * v[(j, k)].conj();
            }
            out[(i, j)] = acc;
        }
    }
    UnitaryMatrix::new_unchecked(out)
}

/// Modified Gram–Schmidt on the columns.
fn orthonormal_columns(v: &ComplexMatrix) -> ComplexMatrix {
    let n = v.dim();
    let mut q = v.clone();
    for j in 0..n {
        for k in 0..j {
            let mut proj = c64(0.0, 0.0);
            for i in 0..n {
                proj += q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..n {
                let qik = q[(i, k)];
                q[(i, j)] -= proj * qik;
            }
        }
        let norm = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[(i, j)] /= norm;
        }
    }
    q
}

/// Pauli matrices.
pub mod pauli {
    use super::{c64, ComplexMatrix, HermitianMatrix};

    pub fn sigma_x() -> HermitianMatrix {
        HermitianMatrix(ComplexMatrix::from_fn(2, |i, j| {
            if i != j {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        }))
    }

    pub fn sigma_y() -> HermitianMatrix {
        HermitianMatrix(ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c64(0.0, -1.0),
            (1, 0) => c64(0.0, 1.0),
            _ => c64(0.0, 0.0),
        }))
    }

    pub fn sigma_z() -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    /// `x σx + y σy + z σz`.
    pub fn bloch(x: f64, y: f64, z: f64) -> HermitianMatrix {
        HermitianMatrix(ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c64(z, 0.0),
            (1, 1) => c64(-z, 0.0),
            (0, 1) => c64(x, -y),
            _ => c64(x, y),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_hermitian(rng: &mut StdRng, n: usize) -> HermitianMatrix {
        let raw = ComplexMatrix::from_fn(n, |_, _| {
            c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        HermitianMatrix::from_hermitian_part(&raw)
    }

    /// Scaled-and-squared Taylor series for `exp(−iHτ)`, independent of the eigensolver.
    fn taylor_expm(h: &HermitianMatrix, tau: f64) -> ComplexMatrix {
        let n = h.dim();
        let a = h.as_matrix().scale(c64(0.0, -tau));
        let mut squarings = 0;
        let mut norm = a.max_norm() * n as f64;
        while norm > 0.25 {
            norm /= 2.0;
            squarings += 1;
        }
        let a = a.scale(c64(0.5f64.powi(squarings), 0.0));
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..30 {
            term = (&term * &a).scale(c64(1.0 / k as f64, 0.0));
            sum = sum.add(&term).unwrap();
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn pauli_z_spectrum() {
        let eig = herm_eig(&pauli::sigma_z()).unwrap();
        assert_eq!(eig.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn identity_is_degenerate_with_orthonormal_basis() {
        let eig = herm_eig(&HermitianMatrix::from_real_diagonal(&[1.0, 1.0])).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0]);
        assert!(eig.vectors.defect() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = StdRng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 4);
        let eig = herm_eig(&h).unwrap();
        let scale = h.as_matrix().max_norm().max(1.0);
        assert!(eig.reconstruct().max_diff(h.as_matrix()) <= 1e-10 * scale);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(eig.vectors.defect() <= 1e-10);
    }

    #[test]
    fn reconstruction_many_random() {
        let mut rng = StdRng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 2 + trial % 7;
            let h = random_hermitian(&mut rng, n);
            let eig = herm_eig(&h).unwrap();
            let scale = h.as_matrix().max_norm().max(1.0);
            let res = eig.reconstruct().max_diff(h.as_matrix());
            assert!(res <= 1e-10 * scale, "trial {trial} n={n} residual {res:e}");
        }
    }

    #[test]
    fn sixteen_dimensional() {
        let mut rng = StdRng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, MAX_DIM);
        let eig = herm_eig(&h).unwrap();
        assert!(
            eig.reconstruct().max_diff(h.as_matrix()) <= 1e-10 * h.as_matrix().max_norm().max(1.0)
        );
    }

    #[test]
    fn non_finite_rejected() {
        let m = ComplexMatrix::new(1, vec![c64(f64::NAN, 0.0)]);
        assert!(matches!(m, Err(LabError::InputDomain(_))));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::new(
            2,
            vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)],
        )
        .unwrap();
        assert!(HermitianMatrix::new(m).is_err());
    }

    #[test]
    fn expm_zero_is_identity() {
        let u = expm_antiherm(&HermitianMatrix::zeros(3), 2.5).unwrap();
        assert_eq!(u.as_matrix(), &ComplexMatrix::identity(3));
    }

    #[test]
    fn expm_sigma_z_pi() {
        let u = expm_antiherm(&pauli::sigma_z(), PI).unwrap();
        let minus_i = ComplexMatrix::identity(2).scale(c64(-1.0, 0.0));
        assert!(u.as_matrix().max_diff(&minus_i) < 1e-15);
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        let mut rng = StdRng::seed_from_u64(42);
        let h = random_hermitian(&mut rng, 3);
        let u = expm_antiherm(&h, 0.7).unwrap();
        let oracle = taylor_expm(&h, 0.7);
        assert!(u.as_matrix().max_diff(&oracle) <= 1e-10);
    }

    #[test]
    fn expm_rejects_non_finite_tau() {
        assert!(expm_antiherm(&pauli::sigma_x(), f64::INFINITY).is_err());
    }

    #[test]
    fn expm_semigroup() {
        let mut rng = StdRng::seed_from_u64(5);
        for n in 2..=6 {
            let h = random_hermitian(&mut rng, n);
            let a = expm_antiherm(&h, 0.3).unwrap();
            let b = expm_antiherm(&h, 1.1).unwrap();
            let ab = expm_antiherm(&h, 1.4).unwrap();
            assert!(a.compose(&b).as_matrix().max_diff(ab.as_matrix()) <= 1e-10);
        }
    }

    #[test]
    fn long_chain_stays_unitary() {
        let mut rng = StdRng::seed_from_u64(9);
        let h = random_hermitian(&mut rng, 2);
        let step = expm_antiherm(&h, 1e-3).unwrap();
        let mut u = UnitaryMatrix::identity(2);
        for _ in 0..1_000_000 {
            u = step.compose(&u);
        }
        assert!(u.defect() <= 1e-9, "defect {:e}", u.defect());
    }

    #[test]
    fn adjoint_algebra() {
        let mut rng = StdRng::seed_from_u64(1);
        let a = ComplexMatrix::from_fn(4, |_, _| c64(rng.gen(), rng.gen()));
        let b = ComplexMatrix::from_fn(4, |_, _| c64(rng.gen(), rng.gen()));
        assert_eq!(adjoint(&adjoint(&a)), a);
        let lhs = matmul(&a, &b).unwrap().adjoint();
        let rhs = matmul(&b.adjoint(), &a.adjoint()).unwrap();
        assert!(lhs.max_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn inner_norm_consistency() {
        let v = vec![c64(0.3, -0.2), c64(1.0, 0.5), c64(-0.1, 0.0)];
        let ip = inner(&v, &v).unwrap();
        assert!((ip.re - vecnorm(&v).powi(2)).abs() < 1e-15);
        assert_eq!(ip.im, 0.0);
        assert!(matches!(
            inner(&v, &v[..2]),
            Err(LabError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let u = vec![c64(1.0, 0.0), c64(0.0, 1.0)];
        let v = vec![c64(0.5, 0.5), c64(1.0, -2.0)];
        let k = c64(0.0, 2.0);
        let scaled: Vec<C64> = u.iter().map(|z| z * k).collect();
        let lhs = inner(&scaled, &v).unwrap();
        let rhs = k.conj() * inner(&u, &v).unwrap();
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(
            matmul(&a, &b),
            Err(LabError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn state_normalization() {
        assert!(StateVector::new(vec![c64(1.0, 0.0), c64(1.0, 0.0)]).is_err());
        let s = StateVector::normalized(vec![c64(1.0, 0.0), c64(1.0, 0.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::normalized(vec![c64(0.0, 0.0)]).is_err());
    }
}
