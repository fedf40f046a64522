//! Ready-made initial states and run setups shared by tests and the CLI.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::constants::PhysicalConstants;
use crate::dynamics::{SystemConfig, SystemKind};
use crate::error::{PilotWaveError, Result};
use crate::field::{ComplexScalarField, QuantumState, SpinorField};
use crate::gaugefield::{Coupling, FnField, GaugeConfiguration};
use crate::grid::GridSpec;

/// Normalized 1D Gaussian `psi ~ exp(-(x-c)^2/(4 sigma^2) + i k0 x)`;
/// `sigma` is the standard deviation of `|psi|^2`.
pub fn gaussian_1d(grid: &GridSpec, center: f64, sigma: f64, k0: f64) -> Result<QuantumState> {
    if !(sigma > 0.0) {
        return Err(PilotWaveError::config(format!("sigma must be positive, got {sigma}")));
    }
    let mut f = ComplexScalarField::from_fn(grid.clone(), 0.0, |[x, _]| {
        let d = x - center;
        C64::new(-d * d / (4.0 * sigma * sigma), k0 * x).exp()
    })?;
    f.normalize();
    Ok(QuantumState::Scalar(f))
}

/// Normalized plane wave on the momentum lattice, `k = 2 pi mode / L`.
pub fn plane_wave_1d(grid: &GridSpec, mode: i32) -> Result<QuantumState> {
    let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.axis(0).len();
    let mut f =
        ComplexScalarField::from_fn(grid.clone(), 0.0, |[x, _]| C64::new(0.0, k * x).exp())?;
    f.normalize();
    Ok(QuantumState::Scalar(f))
}

/// Normalized superposition of momentum modes `sum c_n exp(i k_n x)`.
pub fn mode_superposition_1d(grid: &GridSpec, modes: &[(i32, C64)]) -> Result<QuantumState> {
    if modes.is_empty() {
        return Err(PilotWaveError::config("mode superposition needs at least one mode"));
    }
    let l = grid.axis(0).len();
    let mut f = ComplexScalarField::from_fn(grid.clone(), 0.0, |[x, _]| {
        modes
            .iter()
            .map(|&(n, c)| c * C64::new(0.0, 2.0 * std::f64::consts::PI * n as f64 * x / l).exp())
            .sum()
    })?;
    f.normalize();
    Ok(QuantumState::Scalar(f))
}

/// Normalized 2D Gaussian (product along axes) with per-axis momenta.
pub fn gaussian_2d(
    grid: &GridSpec,
    center: [f64; 2],
    sigma: [f64; 2],
    k0: [f64; 2],
) -> Result<ComplexScalarField> {
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(PilotWaveError::config("sigma must be positive"));
    }
    let mut f = ComplexScalarField::from_fn(grid.clone(), 0.0, |[x, y]| {
        let dx = x - center[0];
        let dy = y - center[1];
        C64::new(
            -dx * dx / (4.0 * sigma[0] * sigma[0]) - dy * dy / (4.0 * sigma[1] * sigma[1]),
            k0[0] * x + k0[1] * y,
        )
        .exp()
    })?;
    f.normalize();
    Ok(f)
}

/// Two-particle state `c1 f(x1) g(x2) + c2 g(x1) f(x2)` from Gaussian factors.
/// `swap = 0` gives a product state; `swap != 0` an entangled superposition.
pub fn two_particle_gaussians(
    grid: &GridSpec,
    centers: [f64; 2],
    sigmas: [f64; 2],
    momenta: [f64; 2],
    swap: f64,
) -> Result<QuantumState> {
    let g = |x: f64, c: f64, s: f64, k: f64| -> C64 {
        let d = x - c;
        C64::new(-d * d / (4.0 * s * s), k * x).exp()
    };
    let mut f = ComplexScalarField::from_fn(grid.clone(), 0.0, |[x1, x2]| {
        let direct =
            g(x1, centers[0], sigmas[0], momenta[0]) * g(x2, centers[1], sigmas[1], momenta[1]);
        let swapped =
            g(x1, centers[1], sigmas[1], momenta[1]) * g(x2, centers[0], sigmas[0], momenta[0]);
        direct + swap * swapped
    })?;
    f.normalize();
    Ok(QuantumState::Scalar(f))
}

/// Pauli state: a normalized 2D Gaussian carrying a constant spinor.
pub fn pauli_gaussian(
    grid: &GridSpec,
    center: [f64; 2],
    sigma: [f64; 2],
    k0: [f64; 2],
    spinor: [C64; 2],
) -> Result<QuantumState> {
    let envelope = gaussian_2d(grid, center, sigma, k0)?;
    let snorm = (spinor[0].norm_sqr() + spinor[1].norm_sqr()).sqrt();
    if snorm == 0.0 {
        return Err(PilotWaveError::config("spinor must be nonzero"));
    }
    let c0: Vec<C64> = envelope.values.iter().map(|&v| v * spinor[0] / snorm).collect();
    let c1: Vec<C64> = envelope.values.iter().map(|&v| v * spinor[1] / snorm).collect();
    Ok(QuantumState::Spinor(SpinorField::new(grid.clone(), [c0, c1], 0.0)?))
}

/// Positive-energy Dirac plane-wave spinor at lattice momentum
/// `k = 2 pi mode / L`: `u ~ (E + m c^2, hbar k c)`, energy
/// `E = sqrt((hbar k c)^2 + (m c^2)^2)`.
pub fn dirac_plane_wave(
    grid: &GridSpec,
    mode: i32,
    mass: f64,
    constants: &PhysicalConstants,
) -> Result<QuantumState> {
    let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.axis(0).len();
    let mc2 = mass * constants.c * constants.c;
    let e = ((constants.hbar * k * constants.c).powi(2) + mc2 * mc2).sqrt();
    let u = [e + mc2, constants.hbar * k * constants.c];
    let un = (u[0] * u[0] + u[1] * u[1]).sqrt();
    let phase = |x: f64| C64::new(0.0, k * x).exp();
    let n = grid.total_points();
    let c0: Vec<C64> = (0..n).map(|i| phase(grid.coords(i)[0]) * (u[0] / un)).collect();
    let c1: Vec<C64> = (0..n).map(|i| phase(grid.coords(i)[0]) * (u[1] / un)).collect();
    let mut f = SpinorField::new(grid.clone(), [c0, c1], 0.0)?;
    f.normalize();
    Ok(QuantumState::Spinor(f))
}

/// Dirac wavepacket: Gaussian envelope times the positive-energy spinor of
/// the carrier momentum.
pub fn dirac_gaussian(
    grid: &GridSpec,
    center: f64,
    sigma: f64,
    k0: f64,
    mass: f64,
    constants: &PhysicalConstants,
) -> Result<QuantumState> {
    let mc2 = mass * constants.c * constants.c;
    let e = ((constants.hbar * k0 * constants.c).powi(2) + mc2 * mc2).sqrt();
    let u = [e + mc2, constants.hbar * k0 * constants.c];
    let un = (u[0] * u[0] + u[1] * u[1]).sqrt();
    let n = grid.total_points();
    let env = |x: f64| -> C64 {
        let d = x - center;
        C64::new(-d * d / (4.0 * sigma * sigma), k0 * x).exp()
    };
    let c0: Vec<C64> = (0..n).map(|i| env(grid.coords(i)[0]) * (u[0] / un)).collect();
    let c1: Vec<C64> = (0..n).map(|i| env(grid.coords(i)[0]) * (u[1] / un)).collect();
    let mut f = SpinorField::new(grid.clone(), [c0, c1], 0.0)?;
    f.normalize();
    Ok(QuantumState::Spinor(f))
}

/// The worked 1D example: a particle in the non-Hermitian potential
/// `V(x) = i sin x`, modeled as `e = 0`, `e_I = 1`, `phi = sin x`, `A = 0`,
/// with `m = hbar = c = 1`.
pub struct SinxPreset {
    pub config: SystemConfig,
    pub initial: QuantumState,
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
}

/// Preset parameters; `Default` gives the committed reproduction setup
/// (N = 1024 on a domain of length 16 pi, dt = 1e-3, snapshots every 10
/// steps, Gaussian start of width 1 at the origin, t_final = 5).
#[derive(Debug, Clone, Copy)]
pub struct SinxParams {
    pub points: usize,
    pub dt: f64,
    pub stride: usize,
    pub t_final: f64,
    pub sigma: f64,
    pub center: f64,
    pub k0: f64,
}

impl Default for SinxParams {
    fn default() -> Self {
        SinxParams {
            points: 1024,
            dt: 1e-3,
            stride: 10,
            t_final: 5.0,
            sigma: 1.0,
            center: 0.0,
            k0: 0.0,
        }
    }
}

pub fn sinx_preset(p: SinxParams) -> Result<SinxPreset> {
    let l = 8.0 * std::f64::consts::PI;
    let grid = GridSpec::new_1d(-l, l, p.points)?;
    let config = SystemConfig {
        kind: SystemKind::Schrodinger1d,
        grid: grid.clone(),
        constants: PhysicalConstants::default(),
        couplings: vec![Coupling::new(0.0, 1.0)?],
        masses: vec![1.0],
        gauge: GaugeConfiguration::scalar(1, Arc::new(FnField(|x: [f64; 2], _| x[0].sin())), true),
    };
    let initial = gaussian_1d(&grid, p.center, p.sigma, p.k0)?;
    Ok(SinxPreset { config, initial, dt: p.dt, t_final: p.t_final, stride: p.stride })
}

/// Number of steps implied by the preset's `dt` and `t_final`.
impl SinxPreset {
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}
