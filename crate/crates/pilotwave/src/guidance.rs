//! Pilot-wave velocity fields and trajectory integration.
//!
//! Velocities are built from `hbar Im(conj(psi) grad psi) / |psi|^2` so no
//! phase ever needs unwrapping. Near wavefunction nodes (density below the
//! relative threshold) velocities are unreliable: they are computed with a
//! floored denominator, capped at a multiple of the largest trustworthy
//! velocity, and the nodes are masked. Trajectories that cross masked regions
//! carry flags instead of aborting.

use num_complex::Complex64 as C64;

use crate::constants::{
    PhysicalConstants, NODE_EPS_REL, TRAJECTORY_FLAG_FRACTION, VELOCITY_CAP_FACTOR,
};
use crate::dynamics::{SystemKind, Timeline};
use crate::error::{PilotWaveError, Result};
use crate::field::{ComplexScalarField, QuantumState, SpinorField};
use crate::gaugefield::{Coupling, GaugeConfiguration};
use crate::grid::GridSpec;
use crate::interp::interpolate_real;
use crate::spectral::SpectralGrid;
use crate::weylscale::accumulate_log_scale_step;

/// Configuration-space velocity sampled on the grid.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub grid: GridSpec,
    /// One component per configuration-space axis.
    pub v: Vec<Vec<f64>>,
    /// True where `|psi|^2` was below the node threshold.
    pub mask: Vec<bool>,
    /// Cap applied to masked-node velocities.
    pub cap: f64,
}

impl VelocityField {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Interpolated velocity plus a flag when the query sits in a masked
    /// region.
    pub fn at(&self, q: [f64; 2]) -> ([f64; 2], bool) {
        let mut out = [0.0; 2];
        for (k, comp) in self.v.iter().enumerate() {
            out[k] = interpolate_real(&self.grid, comp, q);
        }
        let flagged = self.mask[self.nearest_node(q)];
        (out, flagged)
    }

    fn nearest_node(&self, q: [f64; 2]) -> usize {
        let mut idx = [0usize; 2];
        for k in 0..self.grid.dim() {
            let ax = self.grid.axis(k);
            let u = (ax.wrap(q[k]) - ax.min) / ax.dx();
            idx[k] = (u.round() as usize) % ax.points;
        }
        self.grid.flat(idx[0], idx[1])
    }

    /// Largest |v| over unmasked nodes.
    pub fn max_unmasked(&self) -> f64 {
        let n = self.grid.total_points();
        let mut vmax: f64 = 0.0;
        for i in 0..n {
            if !self.mask[i] {
                let mut s = 0.0;
                for comp in &self.v {
                    s += comp[i] * comp[i];
                }
                vmax = vmax.max(s.sqrt());
            }
        }
        vmax
    }
}

/// Assemble a velocity field from per-axis numerators and the density:
/// `v_k = numer_k / (scale_k * rho)`, flooring the denominator at the node
/// threshold, then capping masked nodes.
fn assemble_velocity(
    grid: &GridSpec,
    numer: Vec<Vec<f64>>,
    denom_scale: &[f64],
    rho: &[f64],
) -> VelocityField {
    let n = grid.total_points();
    let max_rho = rho.iter().cloned().fold(0.0, f64::max);
    let eps = NODE_EPS_REL * max_rho;
    let mut mask = vec![false; n];
    let mut v: Vec<Vec<f64>> = numer;
    for i in 0..n {
        let floored = rho[i].max(eps);
        if rho[i] <= eps {
            mask[i] = true;
        }
        for (k, comp) in v.iter_mut().enumerate() {
            comp[i] /= denom_scale[k] * floored;
        }
    }
    let mut field = VelocityField { grid: grid.clone(), v, mask, cap: f64::INFINITY };
    let vmax = field.max_unmasked();
    let cap = if vmax > 0.0 { VELOCITY_CAP_FACTOR * vmax } else { 1.0 };
    for i in 0..n {
        if field.mask[i] {
            let mut s = 0.0;
            for comp in &field.v {
                s += comp[i] * comp[i];
            }
            let mag = s.sqrt();
            if mag > cap {
                let scale = cap / mag;
                for comp in &mut field.v {
                    comp[i] *= scale;
                }
            }
        }
    }
    field.cap = cap;
    field
}

/// `v = (hbar Im(grad psi / psi) - e A/c) / m` for the single 1D particle.
pub fn velocity_schrodinger(
    spectral: &SpectralGrid,
    state: &ComplexScalarField,
    gauge: &GaugeConfiguration,
    coupling: Coupling,
    constants: &PhysicalConstants,
    mass: f64,
    t: f64,
) -> Result<VelocityField> {
    let grid = &state.grid;
    let n = grid.total_points();
    let rho = state.born_density();
    let dpsi = spectral.gradient_axis(&state.values, 0);
    let mut numer = vec![vec![0.0; n]];
    for i in 0..n {
        let a = gauge.a_at([grid.coords(i)[0], 0.0], t)[0];
        numer[0][i] = constants.hbar * (state.values[i].conj() * dpsi[i]).im
            - coupling.e * a / constants.c * rho[i];
    }
    Ok(assemble_velocity(grid, numer, &[mass], &rho))
}

/// Component `j` uses particle `j`'s charge, mass, and `A` evaluated at `x_j`.
pub fn velocity_two_particle(
    spectral: &SpectralGrid,
    state: &ComplexScalarField,
    gauge: &GaugeConfiguration,
    couplings: &[Coupling],
    constants: &PhysicalConstants,
    masses: &[f64],
    t: f64,
) -> Result<VelocityField> {
    let grid = &state.grid;
    let n = grid.total_points();
    let rho = state.born_density();
    let mut numer = vec![vec![0.0; n], vec![0.0; n]];
    for j in 0..2 {
        let dpsi = spectral.gradient_axis(&state.values, j);
        for i in 0..n {
            let xj = grid.coords(i)[j];
            let a = if gauge.a_is_zero { 0.0 } else { gauge.a[0].value([xj, 0.0], t) };
            numer[j][i] = constants.hbar * (state.values[i].conj() * dpsi[i]).im
                - couplings[j].e * a / constants.c * rho[i];
        }
    }
    Ok(assemble_velocity(grid, numer, masses, &rho))
}

/// Local spin density `s = (hbar/2) <psi| sigma |psi>` per node.
pub fn spin_density(state: &SpinorField, constants: &PhysicalConstants) -> [Vec<f64>; 3] {
    let n = state.grid.total_points();
    let mut sx = vec![0.0; n];
    let mut sy = vec![0.0; n];
    let mut sz = vec![0.0; n];
    let h = constants.hbar;
    for i in 0..n {
        let up = state.components[0][i];
        let dn = state.components[1][i];
        let cross = up.conj() * dn;
        sx[i] = h * cross.re;
        sy[i] = h * cross.im;
        sz[i] = 0.5 * h * (up.norm_sqr() - dn.norm_sqr());
    }
    [sx, sy, sz]
}

/// Pauli velocity: phase currents of both components, the charge drift, the
/// spin curl, and the Weyl term `(2 e_I / hbar c) A x s`, all divided by
/// `m (|psi_+|^2 + |psi_-|^2)`.
pub fn velocity_pauli(
    spectral: &SpectralGrid,
    state: &SpinorField,
    gauge: &GaugeConfiguration,
    coupling: Coupling,
    constants: &PhysicalConstants,
    mass: f64,
    t: f64,
) -> Result<VelocityField> {
    let grid = &state.grid;
    if grid.dim() != 2 {
        return Err(PilotWaveError::config("Pauli velocity needs a 2D grid"));
    }
    let n = grid.total_points();
    let rho = state.born_density();
    let [_, _, sz] = spin_density(state, constants);
    let sz_c: Vec<C64> = sz.iter().map(|&s| C64::new(s, 0.0)).collect();
    // in-plane curl of s: (d sz/dy, -d sz/dx)
    let dsz_dy: Vec<C64> = spectral.gradient_axis(&sz_c, 1);
    let dsz_dx: Vec<C64> = spectral.gradient_axis(&sz_c, 0);
    let mut numer = vec![vec![0.0; n], vec![0.0; n]];
    for axis in 0..2 {
        let d0 = spectral.gradient_axis(&state.components[0], axis);
        let d1 = spectral.gradient_axis(&state.components[1], axis);
        for i in 0..n {
            numer[axis][i] = constants.hbar
                * ((state.components[0][i].conj() * d0[i]).im
                    + (state.components[1][i].conj() * d1[i]).im);
        }
    }
    let weyl = 2.0 * coupling.e_i / (constants.hbar * constants.c);
    for i in 0..n {
        let x = grid.coords(i);
        let a = gauge.a_at(x, t);
        // curl s (in-plane part), charge drift, and A x s
        numer[0][i] += dsz_dy[i].re;
        numer[1][i] += -dsz_dx[i].re;
        numer[0][i] += -coupling.e * a[0] / constants.c * rho[i] + weyl * a[1] * sz[i];
        numer[1][i] += -coupling.e * a[1] / constants.c * rho[i] - weyl * a[0] * sz[i];
    }
    Ok(assemble_velocity(grid, numer, &[mass, mass], &rho))
}

/// Dirac velocity `v = c (psi^dag sigma_x psi) / (psi^dag psi)`; bounded by
/// `c` pointwise by construction.
pub fn velocity_dirac(
    state: &SpinorField,
    constants: &PhysicalConstants,
) -> Result<VelocityField> {
    let grid = &state.grid;
    if grid.dim() != 1 {
        return Err(PilotWaveError::config("Dirac velocity needs a 1D grid"));
    }
    let n = grid.total_points();
    let rho = state.born_density();
    let mut numer = vec![vec![0.0; n]];
    for i in 0..n {
        let cross = state.components[0][i].conj() * state.components[1][i];
        numer[0][i] = constants.c * 2.0 * cross.re;
    }
    Ok(assemble_velocity(grid, numer, &[1.0], &rho))
}

/// Velocity field of a snapshot, dispatching on the system kind.
pub fn velocity_field(
    spectral: &SpectralGrid,
    cfg: &crate::dynamics::SystemConfig,
    state: &QuantumState,
    t: f64,
) -> Result<VelocityField> {
    match cfg.kind {
        SystemKind::Schrodinger1d => velocity_schrodinger(
            spectral,
            state.as_scalar()?,
            &cfg.gauge,
            cfg.coupling(),
            &cfg.constants,
            cfg.mass(),
            t,
        ),
        SystemKind::TwoParticle1d => velocity_two_particle(
            spectral,
            state.as_scalar()?,
            &cfg.gauge,
            &cfg.couplings,
            &cfg.constants,
            &cfg.masses,
            t,
        ),
        SystemKind::Pauli2d => velocity_pauli(
            spectral,
            state.as_spinor()?,
            &cfg.gauge,
            cfg.coupling(),
            &cfg.constants,
            cfg.mass(),
            t,
        ),
        SystemKind::Dirac1p1 => velocity_dirac(state.as_spinor()?, &cfg.constants),
    }
}

/// Everything a trajectory integrator needs: the snapshot lattice, a velocity
/// field per snapshot, and the gauge context for scale accumulation.
pub trait Flow: Sync {
    fn grid(&self) -> &GridSpec;
    fn t0(&self) -> f64;
    fn snapshot_dt(&self) -> f64;
    fn n_snapshots(&self) -> usize;
    fn velocity(&self, idx: usize) -> &VelocityField;
    fn kind(&self) -> SystemKind;
    fn gauge(&self) -> &GaugeConfiguration;
    fn couplings(&self) -> &[Coupling];
    fn constants(&self) -> &PhysicalConstants;

    fn t_final(&self) -> f64 {
        self.t0() + (self.n_snapshots() - 1) as f64 * self.snapshot_dt()
    }

    /// Snapshot index for a time on the lattice.
    fn snapshot_index(&self, t: f64) -> Result<usize> {
        let raw = (t - self.t0()) / self.snapshot_dt();
        let i = raw.round();
        if (raw - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.n_snapshots() {
            return Err(PilotWaveError::config(format!(
                "time {t} is not on the snapshot lattice"
            )));
        }
        Ok(i as usize)
    }

    /// Linear-in-time interpolation of the velocity between snapshots. Node
    /// values are already capped at construction; the flag reports queries in
    /// masked territory.
    fn velocity_at(&self, q: [f64; 2], t: f64) -> ([f64; 2], bool) {
        let h = self.snapshot_dt();
        let raw = (t - self.t0()) / h;
        let last = self.n_snapshots() - 1;
        let j = (raw.floor().max(0.0) as usize).min(last.saturating_sub(1));
        let w = (raw - j as f64).clamp(0.0, 1.0);
        let (va, fa) = self.velocity(j).at(q);
        if w == 0.0 || last == 0 {
            return (va, fa);
        }
        let (vb, fb) = self.velocity(j + 1).at(q);
        let mut v = [0.0; 2];
        for k in 0..2 {
            v[k] = (1.0 - w) * va[k] + w * vb[k];
        }
        (v, fa || fb)
    }
}

/// Flow backed by a propagated timeline, with velocity fields precomputed at
/// every snapshot.
pub struct SystemFlow<'a> {
    pub timeline: &'a Timeline,
    fields: Vec<VelocityField>,
}

impl<'a> SystemFlow<'a> {
    pub fn new(timeline: &'a Timeline) -> Result<Self> {
        let spectral = SpectralGrid::new(&timeline.config.grid)?;
        let mut fields = Vec::with_capacity(timeline.n_snapshots());
        for i in 0..timeline.n_snapshots() {
            let t = timeline.snapshot_time(i);
            fields.push(velocity_field(&spectral, &timeline.config, &timeline.snapshots[i], t)?);
        }
        Ok(SystemFlow { timeline, fields })
    }

    pub fn fields(&self) -> &[VelocityField] {
        &self.fields
    }

    /// Build a flow over the same timeline with replaced velocity fields
    /// (used by the modified-velocity experiments).
    pub fn with_fields(timeline: &'a Timeline, fields: Vec<VelocityField>) -> Self {
        SystemFlow { timeline, fields }
    }
}

impl Flow for SystemFlow<'_> {
    fn grid(&self) -> &GridSpec {
        &self.timeline.config.grid
    }
    fn t0(&self) -> f64 {
        self.timeline.t0
    }
    fn snapshot_dt(&self) -> f64 {
        self.timeline.snapshot_dt()
    }
    fn n_snapshots(&self) -> usize {
        self.timeline.n_snapshots()
    }
    fn velocity(&self, idx: usize) -> &VelocityField {
        &self.fields[idx]
    }
    fn kind(&self) -> SystemKind {
        self.timeline.config.kind
    }
    fn gauge(&self) -> &GaugeConfiguration {
        &self.timeline.config.gauge
    }
    fn couplings(&self) -> &[Coupling] {
        &self.timeline.config.couplings
    }
    fn constants(&self) -> &PhysicalConstants {
        &self.timeline.config.constants
    }
}

/// One recorded trajectory point.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub t: f64,
    /// Wrapped configuration-space position.
    pub q: [f64; 2],
    /// Accumulated log scale factor; `ln_one(t0) = 0` in the reference gauge.
    pub ln_one: f64,
    pub flagged: bool,
}

/// Time-ordered configuration-space path plus its accumulated log scale.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub dim: usize,
    pub flagged_fraction: f64,
    /// More than [`TRAJECTORY_FLAG_FRACTION`] of the samples were flagged.
    pub unreliable: bool,
}

impl Trajectory {
    pub fn endpoint(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories have at least one sample")
    }
}

/// Trajectory integration controls.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegrateOptions {
    /// Upper bound on the RK4 step; defaults to the snapshot spacing.
    pub max_step: Option<f64>,
}

const MAX_SUBSTEPS: usize = 256;

struct StepOutcome {
    q_unwrapped: [f64; 2],
    ln_one: f64,
    flagged: bool,
}

/// RK4 over one snapshot interval (signed `h`), with CFL-driven 4x substepping
/// and midpoint-rule scale accumulation.
fn step_interval<F: Flow + ?Sized>(
    flow: &F,
    q_unwrapped: [f64; 2],
    ln_one: f64,
    t: f64,
    h: f64,
    opts: &IntegrateOptions,
) -> StepOutcome {
    let grid = flow.grid();
    let dim = grid.dim();
    let dx = grid.min_dx();
    let wrap = |q: [f64; 2]| grid.wrap_point(q);
    let (v0, _) = flow.velocity_at(wrap(q_unwrapped), t);
    let speed = (v0[0] * v0[0] + v0[1] * v0[1]).sqrt();
    let mut n_sub = 1usize;
    if let Some(ms) = opts.max_step {
        while h.abs() / n_sub as f64 > ms * (1.0 + 1e-12) && n_sub < MAX_SUBSTEPS {
            n_sub *= 2;
        }
    }
    while speed * h.abs() / n_sub as f64 > dx && n_sub < MAX_SUBSTEPS {
        n_sub *= 4;
    }
    let hs = h / n_sub as f64;
    let mut q = q_unwrapped;
    let mut ln = ln_one;
    let mut flagged = false;
    for s in 0..n_sub {
        let ts = t + s as f64 * hs;
        let (k1, f1) = flow.velocity_at(wrap(q), ts);
        let q2 = [q[0] + 0.5 * hs * k1[0], q[1] + 0.5 * hs * k1[1]];
        let (k2, f2) = flow.velocity_at(wrap(q2), ts + 0.5 * hs);
        let q3 = [q[0] + 0.5 * hs * k2[0], q[1] + 0.5 * hs * k2[1]];
        let (k3, f3) = flow.velocity_at(wrap(q3), ts + 0.5 * hs);
        let q4 = [q[0] + hs * k3[0], q[1] + hs * k3[1]];
        let (k4, f4) = flow.velocity_at(wrap(q4), ts + hs);
        let mut q_next = q;
        for k in 0..dim {
            q_next[k] += hs / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        ln += accumulate_log_scale_step(
            flow.gauge(),
            flow.couplings(),
            flow.constants(),
            flow.kind(),
            grid,
            q,
            q_next,
            ts,
            ts + hs,
        );
        flagged |= f1 || f2 || f3 || f4;
        q = q_next;
    }
    StepOutcome { q_unwrapped: q, ln_one: ln, flagged }
}

/// Integrate the guidance flow from `(q0, t_start)` to `t_end` (either
/// direction), sampling at snapshot times. `ln_one` is accumulated along the
/// walk direction starting at zero; [`backward_trace`] applies the
/// forward-consistent normalization.
pub fn integrate_trajectory<F: Flow + ?Sized>(
    flow: &F,
    q0: [f64; 2],
    t_start: f64,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let i0 = flow.snapshot_index(t_start)?;
    let i1 = flow.snapshot_index(t_end)?;
    let grid = flow.grid();
    let dim = grid.dim();
    let mut q = grid.wrap_point(q0);
    let h = flow.snapshot_dt();
    let mut samples = Vec::with_capacity(i0.abs_diff(i1) + 1);
    samples.push(TrajectorySample { t: flow.t0() + i0 as f64 * h, q, ln_one: 0.0, flagged: false });
    let mut ln = 0.0;
    let mut flagged_count = 0usize;
    let forward = i1 >= i0;
    let steps = i0.abs_diff(i1);
    let mut q_unwrapped = q;
    for s in 0..steps {
        let idx = if forward { i0 + s } else { i0 - s };
        let t = flow.t0() + idx as f64 * h;
        let hh = if forward { h } else { -h };
        let out = step_interval(flow, q_unwrapped, ln, t, hh, opts);
        q_unwrapped = out.q_unwrapped;
        ln = out.ln_one;
        q = grid.wrap_point(q_unwrapped);
        if out.flagged {
            flagged_count += 1;
        }
        samples.push(TrajectorySample { t: t + hh, q, ln_one: ln, flagged: out.flagged });
    }
    let flagged_fraction =
        if steps == 0 { 0.0 } else { flagged_count as f64 / steps as f64 };
    Ok(Trajectory {
        samples,
        dim,
        flagged_fraction,
        unreliable: flagged_fraction > TRAJECTORY_FLAG_FRACTION,
    })
}

/// Transport a single point from `t_start` to `t_end` without storing the
/// path; returns the endpoint, the accumulated `ln_one`, and the flagged
/// fraction.
pub fn transport_point<F: Flow + ?Sized>(
    flow: &F,
    q0: [f64; 2],
    t_start: f64,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<([f64; 2], f64, f64)> {
    let i0 = flow.snapshot_index(t_start)?;
    let i1 = flow.snapshot_index(t_end)?;
    let grid = flow.grid();
    let h = flow.snapshot_dt();
    let mut q_unwrapped = grid.wrap_point(q0);
    let mut ln = 0.0;
    let mut flagged_count = 0usize;
    let forward = i1 >= i0;
    let steps = i0.abs_diff(i1);
    for s in 0..steps {
        let idx = if forward { i0 + s } else { i0 - s };
        let t = flow.t0() + idx as f64 * h;
        let hh = if forward { h } else { -h };
        let out = step_interval(flow, q_unwrapped, ln, t, hh, opts);
        q_unwrapped = out.q_unwrapped;
        ln = out.ln_one;
        if out.flagged {
            flagged_count += 1;
        }
    }
    let frac = if steps == 0 { 0.0 } else { flagged_count as f64 / steps as f64 };
    Ok((grid.wrap_point(q_unwrapped), ln, frac))
}

/// Trace the flow backward from `(x, t)` to the start of the timeline and
/// return the path in forward time order with `ln_one(t0) = 0`.
pub fn backward_trace<F: Flow + ?Sized>(
    flow: &F,
    x: [f64; 2],
    t: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let mut traj = integrate_trajectory(flow, x, t, flow.t0(), opts)?;
    let offset = traj.samples.last().map(|s| s.ln_one).unwrap_or(0.0);
    traj.samples.reverse();
    for s in &mut traj.samples {
        s.ln_one -= offset;
    }
    Ok(traj)
}

/// Lean backward trace for density reconstruction: returns the
/// forward-consistent `ln_one` at `(x, t)`, the traced starting point, and a
/// reliability flag, without storing the path.
pub fn trace_scale<F: Flow + ?Sized>(
    flow: &F,
    x: [f64; 2],
    t: f64,
    opts: &IntegrateOptions,
) -> Result<(f64, [f64; 2], bool)> {
    let i1 = flow.snapshot_index(t)?;
    let grid = flow.grid();
    let h = flow.snapshot_dt();
    let mut q_unwrapped = grid.wrap_point(x);
    let mut ln = 0.0;
    let mut flagged_count = 0usize;
    for s in 0..i1 {
        let idx = i1 - s;
        let tcur = flow.t0() + idx as f64 * h;
        let out = step_interval(flow, q_unwrapped, ln, tcur, -h, opts);
        q_unwrapped = out.q_unwrapped;
        ln = out.ln_one;
        if out.flagged {
            flagged_count += 1;
        }
    }
    let frac = if i1 == 0 { 0.0 } else { flagged_count as f64 / i1 as f64 };
    Ok((-ln, grid.wrap_point(q_unwrapped), frac > TRAJECTORY_FLAG_FRACTION))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpinorField;

    #[test]
    fn spin_density_eigenstates() {
        let grid = GridSpec::new_2d([(0.0, 1.0, 16), (0.0, 1.0, 16)]).unwrap();
        let n = grid.total_points();
        let k = PhysicalConstants::default();
        let up = SpinorField::new(
            grid.clone(),
            [vec![C64::new(1.0, 0.0); n], vec![C64::new(0.0, 0.0); n]],
            0.0,
        )
        .unwrap();
        let [sx, sy, sz] = spin_density(&up, &k);
        assert!(sx.iter().all(|&s| s.abs() < 1e-15));
        assert!(sy.iter().all(|&s| s.abs() < 1e-15));
        assert!(sz.iter().all(|&s| (s - 0.5).abs() < 1e-15));

        let r = 1.0 / 2.0_f64.sqrt();
        let xp = SpinorField::new(
            grid,
            [vec![C64::new(r, 0.0); n], vec![C64::new(r, 0.0); n]],
            0.0,
        )
        .unwrap();
        let [sx, sy, sz] = spin_density(&xp, &k);
        assert!(sx.iter().all(|&s| (s - 0.5).abs() < 1e-15));
        assert!(sy.iter().all(|&s| s.abs() < 1e-15));
        assert!(sz.iter().all(|&s| s.abs() < 1e-15));
    }

    #[test]
    fn spin_magnitude_identity_for_pure_spinors() {
        // |s| = (hbar/2) (|psi+|^2 + |psi-|^2) pointwise for any spinor field.
        let grid = GridSpec::new_2d([(0.0, 1.0, 16), (0.0, 1.0, 16)]).unwrap();
        let n = grid.total_points();
        let k = PhysicalConstants::default();
        let c0: Vec<C64> = (0..n)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.73).cos()))
            .collect();
        let c1: Vec<C64> = (0..n)
            .map(|i| C64::new((i as f64 * 0.11).cos() * 0.4, (i as f64 * 0.29).sin()))
            .collect();
        let f = SpinorField::new(grid, [c0, c1], 0.0).unwrap();
        let [sx, sy, sz] = spin_density(&f, &k);
        let rho = f.born_density();
        for i in 0..n {
            let mag = (sx[i] * sx[i] + sy[i] * sy[i] + sz[i] * sz[i]).sqrt();
            assert!((mag - 0.5 * rho[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_velocity_eigenstates() {
        let grid = GridSpec::new_1d(0.0, 1.0, 16).unwrap();
        let n = 16;
        let k = PhysicalConstants::default();
        let up = SpinorField::new(
            grid.clone(),
            [vec![C64::new(1.0, 0.0); n], vec![C64::new(0.0, 0.0); n]],
            0.0,
        )
        .unwrap();
        let vf = velocity_dirac(&up, &k).unwrap();
        assert!(vf.v[0].iter().all(|&v| v.abs() < 1e-15));

        let r = 1.0 / 2.0_f64.sqrt();
        let lum = SpinorField::new(
            grid,
            [vec![C64::new(r, 0.0); n], vec![C64::new(r, 0.0); n]],
            0.0,
        )
        .unwrap();
        let vf = velocity_dirac(&lum, &k).unwrap();
        assert!(vf.v[0].iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn dirac_speed_never_exceeds_c() {
        let grid = GridSpec::new_1d(0.0, 2.0, 64).unwrap();
        let n = 64;
        let k = PhysicalConstants::default();
        let c0: Vec<C64> =
            (0..n).map(|i| C64::new((i as f64).sin(), (i as f64 * 1.3).cos())).collect();
        let c1: Vec<C64> =
            (0..n).map(|i| C64::new((i as f64 * 0.7).cos(), (i as f64 * 2.1).sin())).collect();
        let f = SpinorField::new(grid, [c0, c1], 0.0).unwrap();
        let vf = velocity_dirac(&f, &k).unwrap();
        for &v in &vf.v[0] {
            assert!(v.abs() <= 1.0 + 1e-12, "superluminal velocity {v}");
        }
    }
}
