//! The Weyl scale factor and everything built on it.
//!
//! Along a pilot-wave trajectory `C` the log scale factor accumulates as
//!
//! `d ln S = (e_I / hbar c) (phi c dt - A . dx)`
//!
//! (midpoint rule per integrator substep; sum over particles for the
//! two-particle system). In the reference gauge `ln S(t0) = 0`, and the
//! conserved, gauge-invariant density at `(x, t)` is `|psi(x,t)|^2 / S^2[C]`
//! with `C` the unique trajectory arriving at `x` at time `t`. In the
//! Hermitian limit `e_I = 0` every increment is exactly zero and the ratio
//! collapses to the Born density.

use rayon::prelude::*;

use num_complex::Complex64 as C64;

use crate::constants::{
    PhysicalConstants, NODE_EPS_REL, SNAPSHOT_DEGRADED_FRACTION, SUPPORT_EPS_REL,
};
use crate::dynamics::{SystemKind, Timeline};
use crate::error::{PilotWaveError, Result};
use crate::field::ComplexScalarField;
use crate::gaugefield::{Coupling, GaugeConfiguration};
use crate::grid::GridSpec;
use crate::guidance::{integrate_trajectory, trace_scale, Flow, IntegrateOptions, SystemFlow};
use crate::interp::MonotoneCubic;
use crate::spectral::SpectralGrid;

/// Sign and normalization conventions, echoed into every output manifest so
/// they cannot drift silently.
#[derive(Debug, Clone, Copy)]
pub struct ScaleConvention {
    /// Minkowski signature used for raising/lowering.
    pub metric_signature: &'static str,
    /// The line integral accumulated along trajectories.
    pub line_integral: &'static str,
    /// Initial condition on the scale factor.
    pub reference_gauge: &'static str,
}

pub const SCALE_CONVENTION: ScaleConvention = ScaleConvention {
    metric_signature: "(+,-,-,-)",
    line_integral: "d ln S = (e_I/(hbar c)) * (phi*c*dt - A.dx)",
    reference_gauge: "ln S(t0) = 0 (input state declared in the reference gauge)",
};

/// Nodes with Born density below this fraction of the maximum are counted in
/// degradation statistics only if they carry meaningful density.
const DEGRADE_EPS_REL: f64 = 1e-10;

/// Midpoint-rule increment of `ln S` between consecutive trajectory samples.
///
/// Positions are unwrapped (true displacements); the midpoint is wrapped into
/// the domain for field evaluation. Exactly zero in the Hermitian limit.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_log_scale_step(
    gauge: &GaugeConfiguration,
    couplings: &[Coupling],
    constants: &PhysicalConstants,
    kind: SystemKind,
    grid: &GridSpec,
    q_from: [f64; 2],
    q_to: [f64; 2],
    t_from: f64,
    t_to: f64,
) -> f64 {
    if couplings.iter().all(|c| c.e_i == 0.0) {
        return 0.0;
    }
    let dt = t_to - t_from;
    let t_mid = 0.5 * (t_from + t_to);
    let q_mid = grid.wrap_point([
        0.5 * (q_from[0] + q_to[0]),
        0.5 * (q_from[1] + q_to[1]),
    ]);
    let hc = constants.hbar * constants.c;
    match kind {
        SystemKind::Schrodinger1d | SystemKind::Dirac1p1 => {
            let e_i = couplings[0].e_i;
            let phi = gauge.phi_at(q_mid, t_mid);
            let a = gauge.a_at(q_mid, t_mid)[0];
            e_i / hc * (phi * constants.c * dt - a * (q_to[0] - q_from[0]))
        }
        SystemKind::Pauli2d => {
            let e_i = couplings[0].e_i;
            let phi = gauge.phi_at(q_mid, t_mid);
            let a = gauge.a_at(q_mid, t_mid);
            e_i / hc
                * (phi * constants.c * dt
                    - a[0] * (q_to[0] - q_from[0])
                    - a[1] * (q_to[1] - q_from[1]))
        }
        SystemKind::TwoParticle1d => {
            let mut total = 0.0;
            for j in 0..2 {
                let e_i = couplings[j].e_i;
                if e_i == 0.0 {
                    continue;
                }
                let xj = [q_mid[j], 0.0];
                let phi = gauge.phi_at(xj, t_mid);
                let a = if gauge.a_is_zero { 0.0 } else { gauge.a[0].value(xj, t_mid) };
                total += e_i / hc * (phi * constants.c * dt - a * (q_to[j] - q_from[j]));
            }
            total
        }
    }
}

/// How a conserved-density snapshot was reconstructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMethod {
    /// Backward-trace every grid node to `t0`.
    Backward,
    /// Seed trajectories on the `t0` grid, carry the scale forward, and
    /// scatter-interpolate. 1D only.
    Comoving,
}

/// The conserved ratio `|psi|^2 / S^2[C]` on the grid at a fixed time.
#[derive(Debug, Clone)]
pub struct DensitySnapshot {
    pub grid: GridSpec,
    pub rho: Vec<f64>,
    /// Per-node `ln S[C]` of the trajectory arriving there (0 where skipped).
    pub ln_one: Vec<f64>,
    /// Per-node unreliability (trajectory crossed masked regions).
    pub unreliable_nodes: Vec<bool>,
    pub t: f64,
    pub method: DensityMethod,
    /// Fraction of meaningful nodes whose trajectory was unreliable.
    pub unreliable_fraction: f64,
    /// More than [`SNAPSHOT_DEGRADED_FRACTION`] of meaningful nodes were
    /// unreliable.
    pub degraded: bool,
}

/// Riemann-sum total `integral rho dV`.
pub fn total_norm(snapshot: &DensitySnapshot) -> f64 {
    snapshot.rho.iter().sum::<f64>() * snapshot.grid.cell_volume()
}

/// Reconstruct the conserved density at a snapshot time.
pub fn conserved_density_grid(
    flow: &SystemFlow<'_>,
    t: f64,
    method: DensityMethod,
    opts: &IntegrateOptions,
) -> Result<DensitySnapshot> {
    match method {
        DensityMethod::Backward => backward_density(flow, t, opts),
        DensityMethod::Comoving => comoving_density(flow, t, opts),
    }
}

fn backward_density(
    flow: &SystemFlow<'_>,
    t: f64,
    opts: &IntegrateOptions,
) -> Result<DensitySnapshot> {
    let tl = flow.timeline;
    let idx = tl.index_at_time(t)?;
    let state = &tl.snapshots[idx];
    let born = state.born_density();
    let grid = tl.config.grid.clone();
    let n = grid.total_points();
    let max_b = born.iter().cloned().fold(0.0, f64::max);
    let support = SUPPORT_EPS_REL * max_b;
    let meaningful = DEGRADE_EPS_REL * max_b;
    let hermitian = tl.config.is_hermitian();

    #[derive(Clone, Copy)]
    struct NodeOut {
        rho: f64,
        ln_one: f64,
        unreliable: bool,
        counted: bool,
    }

    let results: Vec<NodeOut> = (0..n)
        .into_par_iter()
        .map(|i| {
            if born[i] <= support || (hermitian && born[i] <= meaningful) {
                // Negligible density; in the Hermitian limit the whole trace
                // is also a no-op because ln S is identically zero.
                let ln = 0.0;
                return NodeOut { rho: born[i], ln_one: ln, unreliable: false, counted: false };
            }
            if hermitian {
                return NodeOut { rho: born[i], ln_one: 0.0, unreliable: false, counted: true };
            }
            match trace_scale(flow, grid.coords(i), t, opts) {
                Ok((ln_one, _origin, unreliable)) => NodeOut {
                    rho: born[i] * (-2.0 * ln_one).exp(),
                    ln_one,
                    unreliable,
                    counted: born[i] > meaningful,
                },
                Err(_) => NodeOut { rho: born[i], ln_one: 0.0, unreliable: true, counted: true },
            }
        })
        .collect();

    let mut rho = vec![0.0; n];
    let mut ln_one = vec![0.0; n];
    let mut unreliable_nodes = vec![false; n];
    let mut counted = 0usize;
    let mut bad = 0usize;
    for (i, r) in results.iter().enumerate() {
        rho[i] = r.rho;
        ln_one[i] = r.ln_one;
        unreliable_nodes[i] = r.unreliable;
        if r.counted {
            counted += 1;
            if r.unreliable {
                bad += 1;
            }
        }
    }
    let frac = if counted == 0 { 0.0 } else { bad as f64 / counted as f64 };
    Ok(DensitySnapshot {
        grid,
        rho,
        ln_one,
        unreliable_nodes,
        t,
        method: DensityMethod::Backward,
        unreliable_fraction: frac,
        degraded: frac > SNAPSHOT_DEGRADED_FRACTION,
    })
}

fn comoving_density(
    flow: &SystemFlow<'_>,
    t: f64,
    opts: &IntegrateOptions,
) -> Result<DensitySnapshot> {
    let tl = flow.timeline;
    if tl.config.grid.dim() != 1 {
        return Err(PilotWaveError::Unsupported(
            "comoving reconstruction is 1D-only; use the backward method".into(),
        ));
    }
    let idx = tl.index_at_time(t)?;
    let state = &tl.snapshots[idx];
    let born = state.born_density();
    let born0 = tl.snapshots[0].born_density();
    let grid = tl.config.grid.clone();
    let n = grid.total_points();
    let max_b0 = born0.iter().cloned().fold(0.0, f64::max);
    let support0 = DEGRADE_EPS_REL * max_b0;
    let t0 = tl.t0;

    // Seed trajectories on every t0 node carrying meaningful density, plus
    // the midpoints between them (halves the scatter-interpolation spacing).
    let dx = grid.axis(0).dx();
    let mut seeds: Vec<f64> = Vec::new();
    for i in 0..n {
        let ip = (i + 1) % n;
        if born0[i] > support0 {
            seeds.push(grid.coords(i)[0]);
        }
        if born0[i] > support0 || born0[ip] > support0 {
            seeds.push(grid.coords(i)[0] + 0.5 * dx);
        }
    }
    if seeds.len() < 4 {
        return Err(PilotWaveError::DegenerateField(
            "too few supported nodes for comoving reconstruction".into(),
        ));
    }
    struct SeedOut {
        x: f64,
        ln_one: f64,
        unreliable: bool,
    }
    let outs: Vec<SeedOut> = seeds
        .par_iter()
        .map(|&x0| {
            match integrate_trajectory(flow, [x0, 0.0], t0, t, opts) {
                Ok(traj) => {
                    let end = traj.endpoint();
                    SeedOut { x: end.q[0], ln_one: end.ln_one, unreliable: traj.unreliable }
                }
                Err(_) => SeedOut { x: x0, ln_one: 0.0, unreliable: true },
            }
        })
        .collect();

    let bad = outs.iter().filter(|o| o.unreliable).count();
    let frac = bad as f64 / outs.len() as f64;

    // Sort by arrival position and keep strictly increasing, reliable points.
    let mut pts: Vec<(f64, f64)> = outs
        .iter()
        .filter(|o| !o.unreliable)
        .map(|o| (o.x, (2.0 * o.ln_one).exp()))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
    if pts.len() < 4 {
        return Err(PilotWaveError::DegenerateField(
            "too few reliable comoving seeds for interpolation".into(),
        ));
    }
    let period = grid.axis(0).len();
    let (xs, one_sq): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let interp = MonotoneCubic::new_periodic(xs, one_sq, period).ok_or_else(|| {
        PilotWaveError::DegenerateField("comoving seeds are not interpolable".into())
    })?;

    let max_b = born.iter().cloned().fold(0.0, f64::max);
    let support = SUPPORT_EPS_REL * max_b;
    let mut rho = vec![0.0; n];
    let mut ln_one = vec![0.0; n];
    for i in 0..n {
        if born[i] <= support {
            rho[i] = born[i];
            continue;
        }
        let s2 = interp.eval(grid.coords(i)[0]).max(1e-300);
        rho[i] = born[i] / s2;
        ln_one[i] = 0.5 * s2.ln();
    }
    Ok(DensitySnapshot {
        grid,
        rho,
        ln_one,
        unreliable_nodes: vec![false; n],
        t,
        method: DensityMethod::Comoving,
        unreliable_fraction: frac,
        degraded: frac > SNAPSHOT_DEGRADED_FRACTION,
    })
}

/// Pointwise continuity residual `d rho/dt + div(rho v)` at an interior
/// snapshot time, plus its L2 norm `sqrt(integral r^2 dV)`.
pub struct ContinuityResidual {
    pub residual: Vec<f64>,
    pub l2: f64,
    pub degraded: bool,
}

pub fn continuity_residual(
    flow: &SystemFlow<'_>,
    t: f64,
    opts: &IntegrateOptions,
) -> Result<ContinuityResidual> {
    let tl = flow.timeline;
    let idx = tl.index_at_time(t)?;
    if idx == 0 || idx + 1 >= tl.n_snapshots() {
        return Err(PilotWaveError::config(
            "continuity residual needs an interior snapshot time",
        ));
    }
    let delta = tl.snapshot_dt();
    let rho_m = backward_density(flow, t - delta, opts)?;
    let rho_0 = backward_density(flow, t, opts)?;
    let rho_p = backward_density(flow, t + delta, opts)?;
    let grid = &tl.config.grid;
    let spectral = SpectralGrid::new(grid)?;
    let n = grid.total_points();
    let vfield = flow.velocity(idx);
    let mut residual = vec![0.0; n];
    for i in 0..n {
        residual[i] = (rho_p.rho[i] - rho_m.rho[i]) / (2.0 * delta);
    }
    for axis in 0..grid.dim() {
        let flux: Vec<C64> =
            (0..n).map(|i| C64::new(rho_0.rho[i] * vfield.v[axis][i], 0.0)).collect();
        let div = spectral.gradient_axis(&flux, axis);
        for i in 0..n {
            residual[i] += div[i].re;
        }
    }
    let l2 = (residual.iter().map(|r| r * r).sum::<f64>() * grid.cell_volume()).sqrt();
    Ok(ContinuityResidual {
        residual,
        l2,
        degraded: rho_m.degraded || rho_0.degraded || rho_p.degraded,
    })
}

/// Real field with a node mask.
#[derive(Debug, Clone)]
pub struct MaskedField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl MaskedField {
    /// L-infinity difference over jointly unmasked nodes.
    pub fn linf_diff(&self, other: &MaskedField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.mask.iter().zip(&other.mask))
            .filter(|(_, (m1, m2))| !**m1 && !**m2)
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The local-scale-invariant curvature ratio `D^2 R / R` with
/// `D = grad + (e_I/hbar c) A`; the modified quantum potential is
/// `-(hbar^2 / 2m) * D^2 R / R`.
pub fn quantum_potential(
    spectral: &SpectralGrid,
    state: &ComplexScalarField,
    gauge: &GaugeConfiguration,
    coupling: Coupling,
    constants: &PhysicalConstants,
) -> Result<MaskedField> {
    let grid = state.grid.clone();
    let n = grid.total_points();
    let dens = state.born_density();
    let max_d = dens.iter().cloned().fold(0.0, f64::max);
    if max_d == 0.0 {
        return Err(PilotWaveError::DegenerateField("zero field has no quantum potential".into()));
    }
    let eps = NODE_EPS_REL * max_d;
    let r: Vec<C64> = dens.iter().map(|&d| C64::new(d.sqrt(), 0.0)).collect();
    let mut d2r: Vec<f64> = spectral.laplacian(&r).iter().map(|c| c.re).collect();
    let kappa = coupling.e_i / (constants.hbar * constants.c);
    if !gauge.a_is_zero && kappa != 0.0 {
        let t = state.time;
        for axis in 0..grid.dim() {
            let a = gauge.sample_a(&grid, axis, t);
            let ar: Vec<C64> = (0..n).map(|i| a[i] * r[i]).collect();
            let d_ar = spectral.gradient_axis(&ar, axis);
            let d_r = spectral.gradient_axis(&r, axis);
            for i in 0..n {
                d2r[i] += kappa * (d_ar[i].re + a[i] * d_r[i].re)
                    + kappa * kappa * a[i] * a[i] * r[i].re;
            }
        }
    }
    let mut values = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        if dens[i] > eps {
            values[i] = d2r[i] / r[i].re;
        } else {
            mask[i] = true;
        }
    }
    Ok(MaskedField { grid, values, mask })
}

/// L2 norm of the quantum Hamilton-Jacobi residual
/// `dS/dt + sum_j [(grad_j S - e_j A_j/c)^2 / 2m_j + e_j phi_j
///  - (hbar^2/2m_j) D_j^2 R / R]`
/// over unmasked nodes, with `dS/dt` from time-centered snapshots.
pub struct HjResidual {
    pub residual: Vec<f64>,
    pub mask: Vec<bool>,
    pub l2: f64,
}

pub fn hamilton_jacobi_residual(timeline: &Timeline, t: f64) -> Result<HjResidual> {
    let cfg = &timeline.config;
    if cfg.kind.is_spinor() {
        return Err(PilotWaveError::Unsupported(
            "Hamilton-Jacobi residual applies to scalar systems only".into(),
        ));
    }
    let idx = timeline.index_at_time(t)?;
    if idx == 0 || idx + 1 >= timeline.n_snapshots() {
        return Err(PilotWaveError::config(
            "Hamilton-Jacobi residual needs an interior snapshot time",
        ));
    }
    let grid = &cfg.grid;
    let spectral = SpectralGrid::new(grid)?;
    let n = grid.total_points();
    let psi = timeline.snapshots[idx].as_scalar()?;
    let psi_m = timeline.snapshots[idx - 1].as_scalar()?;
    let psi_p = timeline.snapshots[idx + 1].as_scalar()?;
    let delta = timeline.snapshot_dt();
    let hbar = cfg.constants.hbar;
    let c = cfg.constants.c;
    let dens = psi.born_density();
    let max_d = dens.iter().cloned().fold(0.0, f64::max);
    let eps = NODE_EPS_REL * max_d;

    // dS/dt = hbar Im(conj(psi) dpsi/dt) / |psi|^2
    let mut residual = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        if dens[i] <= eps {
            mask[i] = true;
            continue;
        }
        let dpsi_dt = (psi_p.values[i] - psi_m.values[i]) / (2.0 * delta);
        residual[i] = hbar * (psi.values[i].conj() * dpsi_dt).im / dens[i];
    }

    let r_c: Vec<C64> = dens.iter().map(|&d| C64::new(d.sqrt(), 0.0)).collect();
    for j in 0..cfg.kind.n_particles() {
        let axis = j.min(grid.dim() - 1);
        let m = cfg.masses[j];
        let e = cfg.couplings[j].e;
        let kappa = cfg.couplings[j].e_i / (hbar * c);
        let dpsi = spectral.gradient_axis(&psi.values, axis);
        // per-particle covariant curvature D_j^2 R
        let mut d2r: Vec<f64> =
            spectral.laplacian_axis(&r_c, axis).iter().map(|z| z.re).collect();
        let a_j: Vec<f64> = (0..n)
            .map(|i| {
                let q = grid.coords(i);
                let xj = if cfg.kind == SystemKind::TwoParticle1d { [q[j], 0.0] } else { q };
                if cfg.gauge.a_is_zero { 0.0 } else { cfg.gauge.a[0].value(xj, t) }
            })
            .collect();
        if !cfg.gauge.a_is_zero {
            let ar: Vec<C64> = (0..n).map(|i| a_j[i] * r_c[i]).collect();
            let d_ar = spectral.gradient_axis(&ar, axis);
            let d_r = spectral.gradient_axis(&r_c, axis);
            for i in 0..n {
                d2r[i] += kappa * (d_ar[i].re + a_j[i] * d_r[i].re)
                    + kappa * kappa * a_j[i] * a_j[i] * r_c[i].re;
            }
        }
        for i in 0..n {
            if mask[i] {
                continue;
            }
            let q = grid.coords(i);
            let xj = if cfg.kind == SystemKind::TwoParticle1d { [q[j], 0.0] } else { q };
            let grad_s = hbar * (psi.values[i].conj() * dpsi[i]).im / dens[i];
            let kin = grad_s - e * a_j[i] / c;
            residual[i] += kin * kin / (2.0 * m) + e * cfg.gauge.phi_at(xj, t)
                - hbar * hbar / (2.0 * m) * d2r[i] / r_c[i].re;
        }
    }
    let l2 = (residual
        .iter()
        .zip(&mask)
        .filter(|(_, m)| !**m)
        .map(|(r, _)| r * r)
        .sum::<f64>()
        * grid.cell_volume())
    .sqrt();
    Ok(HjResidual { residual, mask, l2 })
}
