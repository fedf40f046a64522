//! Complex field storage and the polar decomposition.
//!
//! No unwrapped phase is ever stored: every use of the phase gradient goes
//! through `hbar * Im(grad psi / psi)`, which is single-valued.

use num_complex::Complex64 as C64;

use crate::constants::{PhysicalConstants, NODE_EPS_REL};
use crate::error::{PilotWaveError, Result};
use crate::grid::GridSpec;
use crate::spectral::SpectralGrid;

/// Complex amplitudes sampled on a periodic grid at a fixed time.
#[derive(Debug, Clone)]
pub struct ComplexScalarField {
    pub grid: GridSpec,
    pub values: Vec<C64>,
    pub time: f64,
}

impl ComplexScalarField {
    pub fn new(grid: GridSpec, values: Vec<C64>, time: f64) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(PilotWaveError::config(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.total_points()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(PilotWaveError::config("field contains non-finite values"));
        }
        if values.iter().all(|v| v.norm_sqr() == 0.0) {
            return Err(PilotWaveError::DegenerateField("field is identically zero".into()));
        }
        Ok(ComplexScalarField { grid, values, time })
    }

    pub fn from_fn(grid: GridSpec, time: f64, f: impl Fn([f64; 2]) -> C64) -> Result<Self> {
        let values = (0..grid.total_points()).map(|i| f(grid.coords(i))).collect();
        Self::new(grid, values, time)
    }

    pub fn born_density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Riemann-sum Born norm `sum |psi|^2 dV`.
    pub fn born_norm(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv
    }

    pub fn normalize(&mut self) {
        let n = self.born_norm().sqrt();
        if n > 0.0 {
            for v in &mut self.values {
                *v /= n;
            }
        }
    }
}

/// Two complex components per node: Pauli spinor in the sigma_z basis, or the
/// two surviving components of the 1+1D Dirac spinor.
#[derive(Debug, Clone)]
pub struct SpinorField {
    pub grid: GridSpec,
    pub components: [Vec<C64>; 2],
    pub time: f64,
}

impl SpinorField {
    pub fn new(grid: GridSpec, components: [Vec<C64>; 2], time: f64) -> Result<Self> {
        for c in &components {
            if c.len() != grid.total_points() {
                return Err(PilotWaveError::config("spinor component length mismatch"));
            }
            if c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(PilotWaveError::config("spinor contains non-finite values"));
            }
        }
        let norm: f64 = components
            .iter()
            .flat_map(|c| c.iter().map(|v| v.norm_sqr()))
            .sum();
        if norm == 0.0 {
            return Err(PilotWaveError::DegenerateField("spinor is identically zero".into()));
        }
        Ok(SpinorField { grid, components, time })
    }

    /// Pointwise `psi^dagger psi`.
    pub fn born_density(&self) -> Vec<f64> {
        (0..self.grid.total_points())
            .map(|i| self.components[0][i].norm_sqr() + self.components[1][i].norm_sqr())
            .collect()
    }

    pub fn born_norm(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.born_density().iter().sum::<f64>() * dv
    }

    pub fn normalize(&mut self) {
        let n = self.born_norm().sqrt();
        if n > 0.0 {
            for c in &mut self.components {
                for v in c.iter_mut() {
                    *v /= n;
                }
            }
        }
    }
}

/// State of any supported system.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Scalar(ComplexScalarField),
    Spinor(SpinorField),
}

impl QuantumState {
    pub fn grid(&self) -> &GridSpec {
        match self {
            QuantumState::Scalar(f) => &f.grid,
            QuantumState::Spinor(f) => &f.grid,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            QuantumState::Scalar(f) => f.time,
            QuantumState::Spinor(f) => f.time,
        }
    }

    pub fn set_time(&mut self, t: f64) {
        match self {
            QuantumState::Scalar(f) => f.time = t,
            QuantumState::Spinor(f) => f.time = t,
        }
    }

    pub fn born_density(&self) -> Vec<f64> {
        match self {
            QuantumState::Scalar(f) => f.born_density(),
            QuantumState::Spinor(f) => f.born_density(),
        }
    }

    pub fn born_norm(&self) -> f64 {
        match self {
            QuantumState::Scalar(f) => f.born_norm(),
            QuantumState::Spinor(f) => f.born_norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        let ok = |c: &[C64]| c.iter().all(|v| v.re.is_finite() && v.im.is_finite());
        match self {
            QuantumState::Scalar(f) => ok(&f.values),
            QuantumState::Spinor(f) => ok(&f.components[0]) && ok(&f.components[1]),
        }
    }

    pub fn as_scalar(&self) -> Result<&ComplexScalarField> {
        match self {
            QuantumState::Scalar(f) => Ok(f),
            QuantumState::Spinor(_) => {
                Err(PilotWaveError::config("expected a scalar state"))
            }
        }
    }

    pub fn as_spinor(&self) -> Result<&SpinorField> {
        match self {
            QuantumState::Spinor(f) => Ok(f),
            QuantumState::Scalar(_) => {
                Err(PilotWaveError::config("expected a spinor state"))
            }
        }
    }
}

/// Amplitude and kinetic phase gradient of `psi = R exp(iS/hbar)`.
///
/// `grad_s_kinetic = hbar * Im(conj(psi) grad psi) / |psi|^2` equals `grad S`
/// wherever the phase is differentiable, without ever unwrapping `S`.
#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    pub grid: GridSpec,
    pub r: Vec<f64>,
    /// One vector component per axis.
    pub grad_s_kinetic: Vec<Vec<f64>>,
    /// True where `|psi|^2` fell below the node threshold; the phase gradient
    /// there is set to zero and must not be trusted.
    pub mask: Vec<bool>,
}

/// Polar-decompose a scalar field using spectral derivatives.
pub fn polar_decompose(
    spectral: &SpectralGrid,
    field: &ComplexScalarField,
    constants: &PhysicalConstants,
) -> Result<PolarDecomposition> {
    let grid = field.grid.clone();
    let dens = field.born_density();
    let max_d = dens.iter().cloned().fold(0.0, f64::max);
    if max_d == 0.0 {
        return Err(PilotWaveError::DegenerateField("cannot decompose zero field".into()));
    }
    let eps = NODE_EPS_REL * max_d;
    let r: Vec<f64> = dens.iter().map(|d| d.sqrt()).collect();
    let mut grad_s = Vec::with_capacity(grid.dim());
    let mut mask = vec![false; grid.total_points()];
    for axis in 0..grid.dim() {
        let dpsi = spectral.gradient_axis(&field.values, axis);
        let mut comp = vec![0.0; grid.total_points()];
        for i in 0..grid.total_points() {
            if dens[i] > eps {
                comp[i] = constants.hbar * (field.values[i].conj() * dpsi[i]).im / dens[i];
            } else {
                mask[i] = true;
            }
        }
        grad_s.push(comp);
    }
    Ok(PolarDecomposition { grid, r, grad_s_kinetic: grad_s, mask })
}
