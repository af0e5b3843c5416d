//! Concrete Hamiltonian paths with closed-form oracles.
//!
//! * `constant`: a fixed diagonal Hamiltonian; the adiabatic approximant is exact.
//! * `spin-rotating-field`: a spin-half in a field of fixed magnitude that
//!   precesses around `z` at tilt `θ`, `cycles` full turns over `s ∈ [0,1]`.
//! * `landau-zener`: a non-cyclic avoided crossing, used only as a stress
//!   model for the adiabatic-condition integrals.
//!
//! For the rotating field the scaled path does not depend on `ω`; `ω` only
//! fixes the physical duration `2π·cycles/ω` used by the Rabi oracle and the
//! fidelity check. Adiabatic sweeps vary `T` with `ω₀` fixed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::numerics::{
    c64, expm_antiherm, pauli, ComplexMatrix, HermitianMatrix, UnitaryMatrix, MAX_DIM,
};
use crate::spectral::HamiltonianPath;

/// Diagonal, time-independent Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantModel {
    pub energies: Vec<f64>,
}

impl ConstantModel {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() || energies.len() > MAX_DIM {
            return Err(LabError::InputDomain(format!(
                "constant model needs 1..={MAX_DIM} energies, got {}",
                energies.len()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(LabError::InputDomain("non-finite energy".into()));
        }
        Ok(Self { energies })
    }

    pub fn path(&self) -> Result<HamiltonianPath> {
        let h = HermitianMatrix::from_real_diagonal(&self.energies);
        let dim = self.energies.len();
        let params = self
            .energies
            .iter()
            .enumerate()
            .map(|(i, e)| (format!("energy{i}"), *e))
            .collect();
        HamiltonianPath::new("constant", dim, params, move |_| h.clone())?
            .with_derivative(move |_| HermitianMatrix::zeros(dim))
    }
}

/// `H(s) = (ω₀/2)[sinθ cos(2π·cycles·s) σx + sinθ sin(2π·cycles·s) σy + cosθ σz]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinRotatingField {
    /// Level splitting.
    pub omega0: f64,
    /// Physical rotation rate of the field.
    pub omega: f64,
    /// Tilt from the rotation axis, in `[0, π]`.
    pub theta: f64,
    pub cycles: u32,
}

impl Default for SpinRotatingField {
    fn default() -> Self {
        Self {
            omega0: 4.0,
            omega: 1.0,
            theta: PI / 4.0,
            cycles: 1,
        }
    }
}

impl SpinRotatingField {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(LabError::InputDomain(format!(
                "omega0 must be positive, got {}",
                self.omega0
            )));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(LabError::InputDomain(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(LabError::InputDomain(format!(
                "theta must lie in [0, π], got {}",
                self.theta
            )));
        }
        if self.cycles == 0 {
            return Err(LabError::InputDomain(
                "cycles must be a positive integer".into(),
            ));
        }
        Ok(())
    }

    /// Physical duration of the path, `2π·cycles/ω`.
    pub fn total_time(&self) -> f64 {
        2.0 * PI * self.cycles as f64 / self.omega
    }

    /// Field azimuth at scaled time `s`.
    fn azimuth(&self, s: f64) -> f64 {
        2.0 * PI * self.cycles as f64 * s
    }

    pub fn hamiltonian(&self, s: f64) -> HermitianMatrix {
        let half = 0.5 * self.omega0;
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.azimuth(s).sin_cos();
        pauli::bloch(half * st * cp, half * st * sp, half * ct)
    }

    pub fn hamiltonian_derivative(&self, s: f64) -> HermitianMatrix {
        let rate = 0.5 * self.omega0 * self.theta.sin() * 2.0 * PI * self.cycles as f64;
        let (sp, cp) = self.azimuth(s).sin_cos();
        pauli::bloch(-rate * sp, rate * cp, 0.0)
    }

    pub fn path(&self) -> Result<HamiltonianPath> {
        self.validate()?;
        let model = *self;
        let params = BTreeMap::from([
            ("omega0".to_string(), self.omega0),
            ("omega".to_string(), self.omega),
            ("theta".to_string(), self.theta),
            ("cycles".to_string(), self.cycles as f64),
        ]);
        HamiltonianPath::new("spin-rotating-field", 2, params, move |s| {
            model.hamiltonian(s)
        })?
        .with_derivative(move |s| model.hamiltonian_derivative(s))
    }

    /// Constant rotating-frame generator `H(0) − (ω/2)σz`.
    pub fn effective_hamiltonian(&self) -> HermitianMatrix {
        self.hamiltonian(0.0)
            .combine(1.0, &pauli::sigma_z(), -0.5 * self.omega)
            .expect("2x2")
    }

    /// Rabi frequency of the rotating-frame generator,
    /// `√(ω₀² sin²θ + (ω₀ cosθ − ω)²)`.
    pub fn effective_frequency(&self) -> f64 {
        let (st, ct) = self.theta.sin_cos();
        ((self.omega0 * st).powi(2) + (self.omega0 * ct - self.omega).powi(2)).sqrt()
    }
}

/// `H(s) = Δσx + κ(2s − 1)σz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauZenerPath {
    pub delta: f64,
    pub kappa: f64,
}

impl Default for LandauZenerPath {
    fn default() -> Self {
        Self {
            delta: 0.1,
            kappa: 1.0,
        }
    }
}

impl LandauZenerPath {
    /// Closed-form gap `2√(Δ² + κ²(2s−1)²)`.
    pub fn gap(&self, s: f64) -> f64 {
        2.0 * (self.delta.powi(2) + (self.kappa * (2.0 * s - 1.0)).powi(2)).sqrt()
    }

    pub fn path(&self) -> Result<HamiltonianPath> {
        if !(self.delta.is_finite() && self.kappa.is_finite()) || self.delta == 0.0 {
            return Err(LabError::InputDomain(
                "landau-zener needs finite, nonzero delta".into(),
            ));
        }
        let Self { delta, kappa } = *self;
        let params = BTreeMap::from([("delta".to_string(), delta), ("kappa".to_string(), kappa)]);
        HamiltonianPath::new("landau-zener", 2, params, move |s| {
            pauli::bloch(delta, 0.0, kappa * (2.0 * s - 1.0))
        })?
        .with_derivative(move |_| pauli::bloch(0.0, 0.0, 2.0 * kappa))
    }
}

/// Closed-form propagator of the rotating-field model in physical time.
///
/// With `R(t) = exp(−iωtσz/2)` the Hamiltonian is `R H(0) R†`, so
/// `U(t) = R(t)·exp(−i(H(0) − ωσz/2)t)`. Construction checks
/// `i dU/dt = H(t)U` by Richardson-extrapolated central differences.
#[derive(Clone, Debug)]
pub struct RabiOracle {
    model: SpinRotatingField,
    h_eff: HermitianMatrix,
}

const ORACLE_CHECK_TOL: f64 = 1e-8;

impl RabiOracle {
    pub fn new(model: SpinRotatingField) -> Result<Self> {
        model.validate()?;
        let oracle = Self {
            model,
            h_eff: model.effective_hamiltonian(),
        };
        oracle.verify()?;
        Ok(oracle)
    }

    pub fn model(&self) -> &SpinRotatingField {
        &self.model
    }

    /// Hamiltonian at physical time `t`.
    pub fn hamiltonian_at(&self, t: f64) -> HermitianMatrix {
        self.model.hamiltonian(t / self.model.total_time())
    }

    pub fn propagator(&self, t: f64) -> UnitaryMatrix {
        let half = 0.5 * self.model.omega * t;
        let frame = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c64(half.cos(), -half.sin()),
            (1, 1) => c64(half.cos(), half.sin()),
            _ => c64(0.0, 0.0),
        });
        let inner = expm_antiherm(&self.h_eff, t).expect("finite t");
        UnitaryMatrix::new_unchecked(&frame * inner.as_matrix())
    }

    fn verify(&self) -> Result<()> {
        let scale = self.model.omega0.max(self.model.omega).max(1.0);
        let delta = 1e-3 / scale;
        let horizon = self.model.total_time();
        for k in 0..8 {
            let t = horizon * (0.05 + 0.9 * k as f64 / 7.0);
            let d = |h: f64| {
                self.propagator(t + h)
                    .as_matrix()
                    .sub(self.propagator(t - h).as_matrix())
                    .expect("2x2")
                    .scale(c64(0.5 / h, 0.0))
            };
            let coarse = d(delta);
            let fine = d(0.5 * delta);
            let deriv = fine
                .scale(c64(4.0 / 3.0, 0.0))
                .sub(&coarse.scale(c64(1.0 / 3.0, 0.0)))?;
            let lhs = deriv.scale(c64(0.0, 1.0));
            let rhs = self.hamiltonian_at(t).as_matrix() * self.propagator(t).as_matrix();
            let err = lhs.max_diff(&rhs);
            if err > ORACLE_CHECK_TOL * scale {
                return Err(LabError::Oracle(format!(
                    "i dU/dt ≠ H U at t = {t}: residual {err:e}"
                )));
            }
        }
        Ok(())
    }
}

/// `U(t)` for the rotating-field model at physical time `t`.
pub fn rabi_oracle(model: &SpinRotatingField, t: f64) -> Result<UnitaryMatrix> {
    Ok(RabiOracle::new(*model)?.propagator(t))
}

/// Parameter value as read from a config file.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Number(f64),
    List(Vec<f64>),
}

#[derive(Clone, Copy, Debug)]
pub enum ParamDefault {
    Number(f64),
    List(&'static [f64]),
}

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: ParamDefault,
    pub doc: &'static str,
}

/// One entry of the model catalog.
#[derive(Clone, Copy, Debug)]
pub struct ModelEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
    /// Whether the path closes with default parameters.
    pub closed_loop: bool,
}

static CATALOG: [ModelEntry; 3] = [
    ModelEntry {
        name: "constant",
        description: "time-independent diagonal Hamiltonian",
        params: &[ParamSpec {
            name: "energies",
            default: ParamDefault::List(&[0.0, 1.0]),
            doc: "diagonal entries, comma separated",
        }],
        closed_loop: true,
    },
    ModelEntry {
        name: "spin-rotating-field",
        description: "spin-half in a field precessing about z",
        params: &[
            ParamSpec {
                name: "omega0",
                default: ParamDefault::Number(4.0),
                doc: "level splitting",
            },
            ParamSpec {
                name: "omega",
                default: ParamDefault::Number(1.0),
                doc: "physical rotation rate",
            },
            ParamSpec {
                name: "theta",
                default: ParamDefault::Number(PI / 4.0),
                doc: "tilt from the rotation axis, radians",
            },
            ParamSpec {
                name: "cycles",
                default: ParamDefault::Number(1.0),
                doc: "full turns over s in [0,1]",
            },
        ],
        closed_loop: true,
    },
    ModelEntry {
        name: "landau-zener",
        description: "avoided crossing delta*sx + kappa*(2s-1)*sz",
        params: &[
            ParamSpec {
                name: "delta",
                default: ParamDefault::Number(0.1),
                doc: "tunnelling coupling",
            },
            ParamSpec {
                name: "kappa",
                default: ParamDefault::Number(1.0),
                doc: "sweep amplitude",
            },
        ],
        closed_loop: false,
    },
];

pub fn model_catalog() -> &'static [ModelEntry] {
    &CATALOG
}

pub fn lookup(name: &str) -> Result<&'static ModelEntry> {
    CATALOG
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| LabError::Catalog {
            name: name.to_string(),
            available: CATALOG
                .iter()
                .map(|e| e.name)
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// A catalog model with concrete parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Constant(ConstantModel),
    SpinRotatingField(SpinRotatingField),
    LandauZener(LandauZenerPath),
}

impl ModelEntry {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Builds the model, filling missing parameters with defaults.
    pub fn build(&self, params: &BTreeMap<String, ParamValue>) -> Result<Model> {
        if let Some(bad) = params.keys().find(|k| self.param(k).is_none()) {
            return Err(LabError::InputDomain(format!(
                "model `{}` has no parameter `{bad}`",
                self.name
            )));
        }
        let number = |name: &str| -> Result<f64> {
            match params.get(name) {
                Some(ParamValue::Number(x)) => Ok(*x),
                Some(ParamValue::List(_)) => Err(LabError::InputDomain(format!(
                    "`{name}` must be a single number"
                ))),
                None => match self.param(name).map(|p| p.default) {
                    Some(ParamDefault::Number(x)) => Ok(x),
                    _ => unreachable!("catalog defaults are consistent"),
                },
            }
        };
        match self.name {
            "constant" => {
                let energies = match params.get("energies") {
                    Some(ParamValue::List(v)) => v.clone(),
                    Some(ParamValue::Number(x)) => vec![*x],
                    None => vec![0.0, 1.0],
                };
                Ok(Model::Constant(ConstantModel::new(energies)?))
            }
            "spin-rotating-field" => {
                let cycles = number("cycles")?;
                if cycles.fract() != 0.0 || cycles < 1.0 {
                    return Err(LabError::InputDomain(format!(
                        "cycles must be a positive integer, got {cycles}"
                    )));
                }
                let model = SpinRotatingField {
                    omega0: number("omega0")?,
                    omega: number("omega")?,
                    theta: number("theta")?,
                    cycles: cycles as u32,
                };
                model.validate()?;
                Ok(Model::SpinRotatingField(model))
            }
            "landau-zener" => Ok(Model::LandauZener(LandauZenerPath {
                delta: number("delta")?,
                kappa: number("kappa")?,
            })),
            other => unreachable!("catalog entry {other} without constructor"),
        }
    }

    pub fn build_default(&self) -> Result<Model> {
        self.build(&BTreeMap::new())
    }
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Constant(_) => "constant",
            Model::SpinRotatingField(_) => "spin-rotating-field",
            Model::LandauZener(_) => "landau-zener",
        }
    }

    pub fn path(&self) -> Result<HamiltonianPath> {
        match self {
            Model::Constant(m) => m.path(),
            Model::SpinRotatingField(m) => m.path(),
            Model::LandauZener(m) => m.path(),
        }
    }

    /// Stable identifier with parameters, e.g. `landau-zener(delta=0.1,kappa=1)`.
    pub fn id(&self) -> String {
        let params: Vec<String> = match self {
            Model::Constant(m) => vec![format!(
                "energies={}",
                m.energies
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            )],
            Model::SpinRotatingField(m) => vec![
                format!("omega0={}", m.omega0),
                format!("omega={}", m.omega),
                format!("theta={}", m.theta),
                format!("cycles={}", m.cycles),
            ],
            Model::LandauZener(m) => {
                vec![format!("delta={}", m.delta), format!("kappa={}", m.kappa)]
            }
        };
        format!("{}({})", self.name(), params.join(","))
    }
}
