//! Hamiltonians and time steppers.
//!
//! All operators insert the complex coupling `e_C = e + i e_I` exactly where
//! the charge appears in the Hermitian theory:
//!
//! - scalar systems: `H = (-i hbar grad - e_C A/c)^2 / 2m + e_C phi`,
//!   with the cross term split symmetrically between `div(A psi)` and
//!   `A . grad psi`;
//! - Pauli (2D grid, `B = (0, 0, dAy/dx - dAx/dy)`): the scalar operator on
//!   each component plus `-hbar e_C B.sigma / 2mc`;
//! - Dirac in 1+1D with `alpha = sigma_x`, `beta = sigma_z`:
//!   `H = c alpha (p - e_C A/c) + beta m c^2 + e_C phi`, which makes
//!   `j0 = psi^dag psi` and `j1 = c psi^dag sigma_x psi`, so `|v| <= c`
//!   holds structurally.
//!
//! The Crank-Nicolson stepper uses second-order central differences and a
//! cyclic banded solve (unconditionally stable in the Hermitian limit); the
//! spectral RK4 stepper covers the systems where the banded structure is lost
//! and serves as the accuracy cross-check.

use num_complex::Complex64 as C64;

use crate::constants::PhysicalConstants;
use crate::error::{PilotWaveError, Result};
use crate::field::{ComplexScalarField, QuantumState, SpinorField};
use crate::gaugefield::{Coupling, GaugeConfiguration};
use crate::grid::GridSpec;
use crate::spectral::SpectralGrid;

/// Supported physical systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// One spinless particle on a 1D periodic line.
    Schrodinger1d,
    /// Two spinless particles on a line; the grid is their 2D configuration
    /// space and the potentials act per particle.
    TwoParticle1d,
    /// One spin-1/2 particle on a 2D grid with `B = B_z zhat`.
    Pauli2d,
    /// One Dirac particle in 1+1 dimensions (two-component spinor).
    Dirac1p1,
}

impl SystemKind {
    pub fn grid_dim(&self) -> usize {
        match self {
            SystemKind::Schrodinger1d | SystemKind::Dirac1p1 => 1,
            SystemKind::TwoParticle1d | SystemKind::Pauli2d => 2,
        }
    }

    pub fn n_particles(&self) -> usize {
        match self {
            SystemKind::TwoParticle1d => 2,
            _ => 1,
        }
    }

    /// Spatial dimension the gauge potentials live on.
    pub fn gauge_dim(&self) -> usize {
        match self {
            SystemKind::Pauli2d => 2,
            _ => 1,
        }
    }

    pub fn is_spinor(&self) -> bool {
        matches!(self, SystemKind::Pauli2d | SystemKind::Dirac1p1)
    }
}

/// Full description of a system: kind, grid, constants, per-particle couplings
/// and masses, and the external potentials.
#[derive(Clone)]
pub struct SystemConfig {
    pub kind: SystemKind,
    pub grid: GridSpec,
    pub constants: PhysicalConstants,
    pub couplings: Vec<Coupling>,
    pub masses: Vec<f64>,
    pub gauge: GaugeConfiguration,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.dim() != self.kind.grid_dim() {
            return Err(PilotWaveError::config(format!(
                "{:?} needs a {}D grid, got {}D",
                self.kind,
                self.kind.grid_dim(),
                self.grid.dim()
            )));
        }
        let n = self.kind.n_particles();
        if self.couplings.len() != n {
            return Err(PilotWaveError::config(format!(
                "{:?} needs {} coupling(s), got {}",
                self.kind,
                n,
                self.couplings.len()
            )));
        }
        if self.masses.len() != n {
            return Err(PilotWaveError::config(format!(
                "{:?} needs {} mass(es), got {}",
                self.kind,
                n,
                self.masses.len()
            )));
        }
        if self.masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(PilotWaveError::config("masses must be positive"));
        }
        if self.gauge.spatial_dim() != self.kind.gauge_dim() {
            return Err(PilotWaveError::config(format!(
                "{:?} needs {} vector-potential component(s), got {}",
                self.kind,
                self.kind.gauge_dim(),
                self.gauge.spatial_dim()
            )));
        }
        Ok(())
    }

    pub fn coupling(&self) -> Coupling {
        self.couplings[0]
    }

    pub fn mass(&self) -> f64 {
        self.masses[0]
    }

    /// True in the exact Hermitian limit (all imaginary couplings zero).
    pub fn is_hermitian(&self) -> bool {
        self.couplings.iter().all(|c| c.is_hermitian())
    }
}

/// Per-term gauge samples on the grid.
///
/// For scalar systems there is one entry per particle (potentials evaluated at
/// that particle's coordinate); for Pauli there is a single `phi` and one `a`
/// entry per grid axis.
struct GaugeSamples {
    phi: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    b_z: Option<Vec<f64>>,
}

/// Applies `H` to states and steps them in time.
pub struct HamiltonianOperator {
    pub config: SystemConfig,
    spectral: SpectralGrid,
    cached: Option<GaugeSamples>,
}

impl HamiltonianOperator {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let spectral = SpectralGrid::new(&config.grid)?;
        let mut op = HamiltonianOperator { config, spectral, cached: None };
        if op.config.gauge.is_static {
            op.cached = Some(op.sample_gauge(0.0));
        }
        Ok(op)
    }

    pub fn spectral(&self) -> &SpectralGrid {
        &self.spectral
    }

    fn sample_gauge(&self, t: f64) -> GaugeSamples {
        let grid = &self.config.grid;
        let gauge = &self.config.gauge;
        let n = grid.total_points();
        match self.config.kind {
            SystemKind::Schrodinger1d | SystemKind::Dirac1p1 => GaugeSamples {
                phi: vec![gauge.sample_phi(grid, t)],
                a: vec![gauge.sample_a(grid, 0, t)],
                b_z: None,
            },
            SystemKind::TwoParticle1d => {
                // potentials evaluated at each particle's own coordinate
                let mut phi = vec![vec![0.0; n], vec![0.0; n]];
                let mut a = vec![vec![0.0; n], vec![0.0; n]];
                for i in 0..n {
                    let q = grid.coords(i);
                    for j in 0..2 {
                        let xj = [q[j], 0.0];
                        phi[j][i] = gauge.phi_at(xj, t);
                        if !gauge.a_is_zero {
                            a[j][i] = gauge.a[0].value(xj, t);
                        }
                    }
                }
                GaugeSamples { phi, a, b_z: None }
            }
            SystemKind::Pauli2d => GaugeSamples {
                phi: vec![gauge.sample_phi(grid, t)],
                a: vec![gauge.sample_a(grid, 0, t), gauge.sample_a(grid, 1, t)],
                b_z: Some(gauge.sample_b_z(grid, t)),
            },
        }
    }

    fn with_samples<R>(&self, t: f64, f: impl FnOnce(&GaugeSamples) -> R) -> R {
        match &self.cached {
            Some(s) => f(s),
            None => f(&self.sample_gauge(t)),
        }
    }

    /// `H psi` for any supported state, with potentials evaluated at time `t`.
    pub fn apply(&self, state: &QuantumState, t: f64) -> Result<QuantumState> {
        self.check_state(state)?;
        Ok(self.with_samples(t, |s| self.apply_with(state, s)))
    }

    fn check_state(&self, state: &QuantumState) -> Result<()> {
        if state.grid() != &self.config.grid {
            return Err(PilotWaveError::config("state grid does not match system grid"));
        }
        match (self.config.kind.is_spinor(), state) {
            (false, QuantumState::Scalar(_)) | (true, QuantumState::Spinor(_)) => Ok(()),
            _ => Err(PilotWaveError::config(format!(
                "state shape does not match {:?}",
                self.config.kind
            ))),
        }
    }

    fn apply_with(&self, state: &QuantumState, samples: &GaugeSamples) -> QuantumState {
        match (self.config.kind, state) {
            (SystemKind::Schrodinger1d, QuantumState::Scalar(f))
            | (SystemKind::TwoParticle1d, QuantumState::Scalar(f)) => {
                let out = self.apply_scalar(&f.values, samples);
                QuantumState::Scalar(ComplexScalarField {
                    grid: f.grid.clone(),
                    values: out,
                    time: f.time,
                })
            }
            (SystemKind::Pauli2d, QuantumState::Spinor(f)) => {
                let mut comp0 = self.apply_scalar_single(&f.components[0], samples);
                let mut comp1 = self.apply_scalar_single(&f.components[1], samples);
                // -hbar e_C B.sigma / 2mc, diagonal for B along z
                let k = &self.config.constants;
                let e_c = self.config.coupling().e_c();
                let m = self.config.mass();
                let pref = e_c * (-(k.hbar) / (2.0 * m * k.c));
                if let Some(bz) = &samples.b_z {
                    for i in 0..comp0.len() {
                        comp0[i] += pref * bz[i] * f.components[0][i];
                        comp1[i] -= pref * bz[i] * f.components[1][i];
                    }
                }
                QuantumState::Spinor(SpinorField {
                    grid: f.grid.clone(),
                    components: [comp0, comp1],
                    time: f.time,
                })
            }
            (SystemKind::Dirac1p1, QuantumState::Spinor(f)) => {
                let k = &self.config.constants;
                let e_c = self.config.coupling().e_c();
                let m = self.config.mass();
                let n = f.grid.total_points();
                let d0 = self.spectral.gradient_axis(&f.components[0], 0);
                let d1 = self.spectral.gradient_axis(&f.components[1], 0);
                let mc2 = m * k.c * k.c;
                let mut comp0 = vec![C64::new(0.0, 0.0); n];
                let mut comp1 = vec![C64::new(0.0, 0.0); n];
                let phi = &samples.phi[0];
                let a = &samples.a[0];
                for i in 0..n {
                    // c sigma_x (-i hbar d/dx - e_C A/c) + sigma_z m c^2 + e_C phi
                    let p1 = C64::new(0.0, -k.hbar) * d1[i] - e_c * a[i] / k.c * f.components[1][i];
                    let p0 = C64::new(0.0, -k.hbar) * d0[i] - e_c * a[i] / k.c * f.components[0][i];
                    comp0[i] = k.c * p1 + mc2 * f.components[0][i] + e_c * phi[i] * f.components[0][i];
                    comp1[i] = k.c * p0 - mc2 * f.components[1][i] + e_c * phi[i] * f.components[1][i];
                }
                QuantumState::Spinor(SpinorField {
                    grid: f.grid.clone(),
                    components: [comp0, comp1],
                    time: f.time,
                })
            }
            _ => unreachable!("state shape checked in apply"),
        }
    }

    /// Scalar kinetic + potential application, summing per-particle terms.
    fn apply_scalar(&self, values: &[C64], samples: &GaugeSamples) -> Vec<C64> {
        let k = &self.config.constants;
        let n = values.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..self.config.kind.n_particles() {
            let m = self.config.masses[j];
            let e_c = self.config.couplings[j].e_c();
            let lap = self.spectral.laplacian_axis(values, j.min(self.config.grid.dim() - 1));
            let kin = -k.hbar * k.hbar / (2.0 * m);
            for i in 0..n {
                out[i] += kin * lap[i] + e_c * samples.phi[j][i] * values[i];
            }
            if !self.config.gauge.a_is_zero {
                let a = &samples.a[j];
                let axis = j.min(self.config.grid.dim() - 1);
                let a_psi: Vec<C64> = (0..n).map(|i| a[i] * values[i]).collect();
                let d_a_psi = self.spectral.gradient_axis(&a_psi, axis);
                let d_psi = self.spectral.gradient_axis(values, axis);
                let cross = C64::new(0.0, k.hbar) * e_c / (2.0 * m * k.c);
                let quad = e_c * e_c / (2.0 * m * k.c * k.c);
                for i in 0..n {
                    out[i] += cross * (d_a_psi[i] + a[i] * d_psi[i]);
                    out[i] += quad * a[i] * a[i] * values[i];
                }
            }
        }
        out
    }

    /// Single-particle scalar application (used per Pauli component); the
    /// kinetic term runs over every grid axis with the single mass/coupling.
    fn apply_scalar_single(&self, values: &[C64], samples: &GaugeSamples) -> Vec<C64> {
        let k = &self.config.constants;
        let n = values.len();
        let m = self.config.mass();
        let e_c = self.config.coupling().e_c();
        let lap = self.spectral.laplacian(values);
        let kin = -k.hbar * k.hbar / (2.0 * m);
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            out[i] = kin * lap[i] + e_c * samples.phi[0][i] * values[i];
        }
        if !self.config.gauge.a_is_zero {
            let cross = C64::new(0.0, k.hbar) * e_c / (2.0 * m * k.c);
            let quad = e_c * e_c / (2.0 * m * k.c * k.c);
            for axis in 0..self.config.grid.dim() {
                let a = &samples.a[axis];
                let a_psi: Vec<C64> = (0..n).map(|i| a[i] * values[i]).collect();
                let d_a_psi = self.spectral.gradient_axis(&a_psi, axis);
                let d_psi = self.spectral.gradient_axis(values, axis);
                for i in 0..n {
                    out[i] += cross * (d_a_psi[i] + a[i] * d_psi[i]);
                    out[i] += quad * a[i] * a[i] * values[i];
                }
            }
        }
        out
    }

    /// Conservative bound on the spectral radius of `H / hbar`, used to refuse
    /// explicit steps that would be unstable.
    pub fn frequency_scale(&self, t: f64) -> f64 {
        let k = &self.config.constants;
        let k_max = self.spectral.k_max();
        self.with_samples(t, |s| {
            let max_abs = |v: &Vec<f64>| v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            match self.config.kind {
                SystemKind::Dirac1p1 => {
                    let e_c = self.config.coupling().e_c().norm();
                    let m = self.config.mass();
                    k.c * k_max
                        + m * k.c * k.c / k.hbar
                        + e_c * (max_abs(&s.phi[0]) + max_abs(&s.a[0]) / k.c) / k.hbar
                }
                _ => {
                    let mut w: f64 = 0.0;
                    for j in 0..self.config.kind.n_particles() {
                        let m = self.config.masses[j];
                        let e_c = self.config.couplings[j].e_c().norm();
                        let a_max = s.a.iter().map(max_abs).fold(0.0f64, f64::max);
                        let phi_max = s.phi.iter().map(max_abs).fold(0.0f64, f64::max);
                        w += k.hbar * k_max * k_max / (2.0 * m)
                            + e_c * phi_max / k.hbar
                            + e_c * a_max * k_max / (m * k.c)
                            + e_c * e_c * a_max * a_max / (2.0 * m * k.c * k.c * k.hbar);
                        if let Some(bz) = &s.b_z {
                            w += e_c * max_abs(bz) / (2.0 * m * k.c);
                        }
                    }
                    w
                }
            }
        })
    }
}

/// Time steppers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// Banded Crank-Nicolson; Schrodinger1d only.
    CrankNicolson,
    /// Classic 4-stage explicit step on spectral derivatives.
    Rk4Spectral,
}

impl Stepper {
    /// The stepper a system uses unless overridden.
    pub fn default_for(kind: SystemKind) -> Stepper {
        match kind {
            SystemKind::Schrodinger1d => Stepper::CrankNicolson,
            _ => Stepper::Rk4Spectral,
        }
    }
}

/// RK4 stability margin on the imaginary axis (2*sqrt(2), minus headroom).
const RK4_STABILITY: f64 = 2.7;

/// One explicit RK4 step of `d psi/dt = -i H psi / hbar`.
pub fn step_rk4_spectral(
    op: &HamiltonianOperator,
    state: &QuantumState,
    t: f64,
    dt: f64,
) -> Result<QuantumState> {
    let w = op.frequency_scale(t);
    if dt * w > RK4_STABILITY {
        return Err(PilotWaveError::Stepper(format!(
            "dt = {dt} exceeds the RK4 stability bound {:.3e} (frequency scale {:.3e})",
            RK4_STABILITY / w,
            w
        )));
    }
    let ih = C64::new(0.0, -1.0 / op.config.constants.hbar);
    let rhs = |s: &QuantumState, tau: f64| -> Result<QuantumState> {
        let mut h = op.apply(s, tau)?;
        scale_state(&mut h, ih);
        Ok(h)
    };
    let k1 = rhs(state, t)?;
    let s2 = add_scaled(state, &k1, 0.5 * dt);
    let k2 = rhs(&s2, t + 0.5 * dt)?;
    let s3 = add_scaled(state, &k2, 0.5 * dt);
    let k3 = rhs(&s3, t + 0.5 * dt)?;
    let s4 = add_scaled(state, &k3, dt);
    let k4 = rhs(&s4, t + dt)?;
    let mut out = state.clone();
    for (o, (a, (b, (c, d)))) in components_mut(&mut out).into_iter().zip(
        components(&k1)
            .into_iter()
            .zip(components(&k2).into_iter().zip(components(&k3).into_iter().zip(components(&k4)))),
    ) {
        for i in 0..o.len() {
            o[i] += dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
        }
    }
    out.set_time(t + dt);
    Ok(out)
}

fn components(s: &QuantumState) -> Vec<&[C64]> {
    match s {
        QuantumState::Scalar(f) => vec![&f.values],
        QuantumState::Spinor(f) => vec![&f.components[0], &f.components[1]],
    }
}

fn components_mut(s: &mut QuantumState) -> Vec<&mut Vec<C64>> {
    match s {
        QuantumState::Scalar(f) => vec![&mut f.values],
        QuantumState::Spinor(f) => {
            let [a, b] = &mut f.components;
            vec![a, b]
        }
    }
}

fn scale_state(s: &mut QuantumState, z: C64) {
    for comp in components_mut(s) {
        for v in comp.iter_mut() {
            *v *= z;
        }
    }
}

fn add_scaled(base: &QuantumState, dir: &QuantumState, h: f64) -> QuantumState {
    let mut out = base.clone();
    for (o, d) in components_mut(&mut out).into_iter().zip(components(dir)) {
        for i in 0..o.len() {
            o[i] += h * d[i];
        }
    }
    out
}

/// Banded second-order-central-difference coefficients of `H` at one time.
/// Row `j`: `alpha[j] psi[j-1] + beta[j] psi[j] + gamma[j] psi[j+1]`,
/// periodic at the ends.
struct Banded {
    alpha: Vec<C64>,
    beta: Vec<C64>,
    gamma: Vec<C64>,
}

fn banded_hamiltonian(op: &HamiltonianOperator, t: f64) -> Banded {
    let grid = &op.config.grid;
    let n = grid.axis(0).points;
    let dx = grid.axis(0).dx();
    let k = &op.config.constants;
    let m = op.config.mass();
    let e_c = op.config.coupling().e_c();
    let kin = k.hbar * k.hbar / (2.0 * m * dx * dx);
    op.with_samples(t, |s| {
        let phi = &s.phi[0];
        let a = &s.a[0];
        let mut alpha = vec![C64::new(0.0, 0.0); n];
        let mut beta = vec![C64::new(0.0, 0.0); n];
        let mut gamma = vec![C64::new(0.0, 0.0); n];
        let cross = C64::new(0.0, k.hbar) * e_c / (4.0 * m * k.c * dx);
        let quad = e_c * e_c / (2.0 * m * k.c * k.c);
        for j in 0..n {
            let jm = (j + n - 1) % n;
            let jp = (j + 1) % n;
            alpha[j] = -kin - cross * (a[jm] + a[j]);
            gamma[j] = -kin + cross * (a[jp] + a[j]);
            beta[j] = C64::new(2.0 * kin, 0.0) + e_c * phi[j] + quad * a[j] * a[j];
        }
        Banded { alpha, beta, gamma }
    })
}

/// Solve a cyclic tridiagonal system via Sherman-Morrison over two Thomas
/// sweeps. `sub[j]` couples to `x[j-1]`, `sup[j]` to `x[j+1]`; `sub[0]` and
/// `sup[n-1]` are the periodic corner entries.
fn solve_cyclic_tridiagonal(
    sub: &[C64],
    diag: &[C64],
    sup: &[C64],
    rhs: &[C64],
) -> Result<Vec<C64>> {
    let n = diag.len();
    let corner_top = sub[0]; // A[0][n-1]
    let corner_bot = sup[n - 1]; // A[n-1][0]
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= corner_top * corner_bot / gamma;
    let y = thomas(sub, &d, sup, rhs)?;
    let mut u = vec![C64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = corner_bot;
    let z = thomas(sub, &d, sup, &u)?;
    // v = (1, 0, ..., 0, corner_top / gamma)
    let vy = y[0] + corner_top / gamma * y[n - 1];
    let vz = z[0] + corner_top / gamma * z[n - 1];
    let denom = C64::new(1.0, 0.0) + vz;
    if denom.norm() < 1e-300 {
        return Err(PilotWaveError::Stepper("singular cyclic correction".into()));
    }
    let f = vy / denom;
    Ok((0..n).map(|i| y[i] - f * z[i]).collect())
}

/// Thomas algorithm, interior bands only (corners ignored).
fn thomas(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64]) -> Result<Vec<C64>> {
    let n = diag.len();
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut d = vec![C64::new(0.0, 0.0); n];
    let mut piv = diag[0];
    if piv.norm() < 1e-300 {
        return Err(PilotWaveError::Stepper("singular banded system".into()));
    }
    c[0] = sup[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv.norm() < 1e-300 {
            return Err(PilotWaveError::Stepper("singular banded system".into()));
        }
        if i < n - 1 {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// One Crank-Nicolson step `(1 + i dt H/2hbar) psi' = (1 - i dt H/2hbar) psi`
/// with `H` evaluated at the midpoint time.
pub fn step_crank_nicolson_1d(
    op: &HamiltonianOperator,
    state: &QuantumState,
    t: f64,
    dt: f64,
) -> Result<QuantumState> {
    if op.config.kind != SystemKind::Schrodinger1d {
        return Err(PilotWaveError::config(
            "Crank-Nicolson stepper only supports Schrodinger1d",
        ));
    }
    let f = state.as_scalar()?;
    let h = banded_hamiltonian(op, t + 0.5 * dt);
    let n = f.values.len();
    let lam = C64::new(0.0, 0.5 * dt / op.config.constants.hbar);
    // RHS = (1 - lam H) psi, cyclic banded matvec
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        let hpsi = h.alpha[j] * f.values[jm] + h.beta[j] * f.values[j] + h.gamma[j] * f.values[jp];
        rhs[j] = f.values[j] - lam * hpsi;
    }
    let sub: Vec<C64> = h.alpha.iter().map(|&a| lam * a).collect();
    let sup: Vec<C64> = h.gamma.iter().map(|&g| lam * g).collect();
    let diag: Vec<C64> = h.beta.iter().map(|&b| C64::new(1.0, 0.0) + lam * b).collect();
    let next = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs)?;
    Ok(QuantumState::Scalar(ComplexScalarField {
        grid: f.grid.clone(),
        values: next,
        time: t + dt,
    }))
}

/// Stored propagation history: snapshots every `stride` steps plus the Born
/// norm after every step.
pub struct Timeline {
    pub config: SystemConfig,
    pub t0: f64,
    pub dt: f64,
    pub stride: usize,
    pub n_steps: usize,
    pub snapshots: Vec<QuantumState>,
    /// `born_norms[k]` is the norm after `k` steps; `born_norms[0]` is initial.
    pub born_norms: Vec<f64>,
}

impl Timeline {
    pub fn snapshot_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn n_snapshots(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshot_time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.snapshot_dt()
    }

    pub fn t_final(&self) -> f64 {
        self.t0 + self.n_steps as f64 * self.dt
    }

    /// Snapshot index whose time matches `t` (within a small tolerance).
    pub fn index_at_time(&self, t: f64) -> Result<usize> {
        let h = self.snapshot_dt();
        let raw = (t - self.t0) / h;
        let i = raw.round();
        if (raw - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.snapshots.len() {
            return Err(PilotWaveError::config(format!(
                "time {t} is not on the snapshot lattice (t0 = {}, spacing = {h})",
                self.t0
            )));
        }
        Ok(i as usize)
    }
}

/// Propagate `n_steps` of size `dt`, storing a snapshot every `stride` steps.
///
/// Requires `n_steps` divisible by `stride` so the final state is stored.
/// Aborts with a divergence error naming the step if non-finite values appear.
pub fn propagate(
    op: &HamiltonianOperator,
    initial: &QuantumState,
    stepper: Stepper,
    t0: f64,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<Timeline> {
    if stride == 0 || (n_steps > 0 && n_steps % stride != 0) {
        return Err(PilotWaveError::config(format!(
            "snapshot stride {stride} must divide n_steps {n_steps}"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(PilotWaveError::config(format!("dt must be positive, got {dt}")));
    }
    op.check_state(initial)?;
    let mut state = initial.clone();
    state.set_time(t0);
    let mut snapshots = vec![state.clone()];
    let mut born_norms = vec![state.born_norm()];
    for step in 0..n_steps {
        let t = t0 + step as f64 * dt;
        state = match stepper {
            Stepper::CrankNicolson => step_crank_nicolson_1d(op, &state, t, dt)?,
            Stepper::Rk4Spectral => step_rk4_spectral(op, &state, t, dt)?,
        };
        let norm = state.born_norm();
        if !norm.is_finite() || !state.is_finite() {
            return Err(PilotWaveError::Divergence {
                step: step + 1,
                detail: format!("Born norm became {norm}"),
            });
        }
        born_norms.push(norm);
        if (step + 1) % stride == 0 {
            snapshots.push(state.clone());
        }
    }
    Ok(Timeline {
        config: op.config.clone(),
        t0,
        dt,
        stride,
        n_steps,
        snapshots,
        born_norms,
    })
}
