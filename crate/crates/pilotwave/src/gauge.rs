//! Gauge transformations with complex coupling, and end-to-end invariance
//! checks.
//!
//! Under `A^mu -> A^mu - d^mu lambda` the state picks up
//! `psi' = psi exp(i e_C lambda / hbar c)`: a phase rotation by
//! `e lambda / hbar c` *and* an amplitude rescale by
//! `exp(-e_I lambda / hbar c)`. With the mostly-negative metric this means
//! `A -> A + grad lambda` and `phi -> phi - d lambda / d(ct)`.
//!
//! Invariance checks are genuine twin runs: the transformed initial data is
//! re-propagated with the transformed potentials, so the comparison exercises
//! the full dynamics rather than a post-hoc rescale.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::constants::PhysicalConstants;
use crate::dynamics::{propagate, HamiltonianOperator, Stepper, SystemConfig, SystemKind, Timeline};
use crate::error::{PilotWaveError, Result};
use crate::field::{ComplexScalarField, QuantumState, SpinorField};
use crate::gaugefield::{Coupling, FieldFn, GaugeConfiguration, GaugeFn};
use crate::grid::GridSpec;
use crate::guidance::{integrate_trajectory, trace_scale, Flow, IntegrateOptions, SystemFlow};
use crate::weylscale::{DensityMethod, DensitySnapshot};

struct PhiTransformed {
    base: Arc<dyn FieldFn>,
    lambda: Arc<dyn GaugeFn>,
    inv_c: f64,
}

impl FieldFn for PhiTransformed {
    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        self.base.value(x, t) - self.inv_c * self.lambda.dt(x, t)
    }
}

struct ATransformed {
    base: Arc<dyn FieldFn>,
    lambda: Arc<dyn GaugeFn>,
    axis: usize,
}

impl FieldFn for ATransformed {
    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        self.base.value(x, t) + self.lambda.grad(x, t)[self.axis]
    }
}

/// Verify that `lambda` and its gradient are compatible with the periodic
/// domain, so transformed fields stay on the grid.
fn check_periodic_compatible(
    lambda: &Arc<dyn GaugeFn>,
    grid: &GridSpec,
    t: f64,
) -> Result<()> {
    let probes = [0.13, 0.41, 0.77];
    for axis in 0..grid.dim() {
        let ax = grid.axis(axis);
        for &frac in &probes {
            let mut lo = [0.0; 2];
            let mut hi = [0.0; 2];
            for k in 0..grid.dim() {
                let a = grid.axis(k);
                let transverse = a.min + frac * a.len();
                lo[k] = transverse;
                hi[k] = transverse;
            }
            lo[axis] = ax.min;
            hi[axis] = ax.min + ax.len();
            let v_lo = lambda.value(lo, t);
            let v_hi = lambda.value(hi, t);
            let scale = 1.0 + v_lo.abs().max(v_hi.abs());
            if (v_lo - v_hi).abs() > 1e-8 * scale {
                return Err(PilotWaveError::config(format!(
                    "gauge function is not periodic along axis {axis}: \
                     lambda({:.3}) = {v_lo}, lambda({:.3}) = {v_hi}",
                    lo[axis], hi[axis]
                )));
            }
            let g_lo = lambda.grad(lo, t)[axis];
            let g_hi = lambda.grad(hi, t)[axis];
            if (g_lo - g_hi).abs() > 1e-8 * (1.0 + g_lo.abs().max(g_hi.abs())) {
                return Err(PilotWaveError::config(format!(
                    "gauge-function gradient is not periodic along axis {axis}"
                )));
            }
        }
    }
    Ok(())
}

/// The per-node complex exponent `i e_C lambda / hbar c` (summed over
/// particles for configuration-space states).
fn transform_exponent(
    kind: SystemKind,
    grid: &GridSpec,
    node: usize,
    lambda: &Arc<dyn GaugeFn>,
    couplings: &[Coupling],
    constants: &PhysicalConstants,
    t: f64,
) -> C64 {
    let hc = constants.hbar * constants.c;
    let q = grid.coords(node);
    match kind {
        SystemKind::TwoParticle1d => {
            let mut z = C64::new(0.0, 0.0);
            for j in 0..2 {
                let l = lambda.value([q[j], 0.0], t);
                z += C64::new(0.0, 1.0) * couplings[j].e_c() * l / hc;
            }
            z
        }
        _ => {
            let l = lambda.value(q, t);
            C64::new(0.0, 1.0) * couplings[0].e_c() * l / hc
        }
    }
}

/// Transform a state and its gauge configuration together.
///
/// Returns `(psi', gauge')` with `psi' = psi exp(i e_C lambda/hbar c)`
/// (componentwise for spinors, per-particle product for the two-particle
/// system), `A' = A + grad lambda`, `phi' = phi - d lambda/d(ct)`.
pub fn apply_gauge_transform(
    state: &QuantumState,
    gauge: &GaugeConfiguration,
    lambda: Arc<dyn GaugeFn>,
    couplings: &[Coupling],
    constants: &PhysicalConstants,
    kind: SystemKind,
    lambda_is_static: bool,
) -> Result<(QuantumState, GaugeConfiguration)> {
    let grid = state.grid();
    check_periodic_compatible(&lambda, grid, state.time())?;
    let t = state.time();
    let n = grid.total_points();
    let new_state = match state {
        QuantumState::Scalar(f) => {
            let values = (0..n)
                .map(|i| {
                    f.values[i]
                        * transform_exponent(kind, grid, i, &lambda, couplings, constants, t)
                            .exp()
                })
                .collect();
            QuantumState::Scalar(ComplexScalarField {
                grid: f.grid.clone(),
                values,
                time: f.time,
            })
        }
        QuantumState::Spinor(f) => {
            let mut components = f.components.clone();
            for comp in &mut components {
                for (i, v) in comp.iter_mut().enumerate() {
                    *v *= transform_exponent(kind, grid, i, &lambda, couplings, constants, t)
                        .exp();
                }
            }
            QuantumState::Spinor(SpinorField { grid: f.grid.clone(), components, time: f.time })
        }
    };
    let phi = Arc::new(PhiTransformed {
        base: gauge.phi.clone(),
        lambda: lambda.clone(),
        inv_c: 1.0 / constants.c,
    });
    let a: Vec<Arc<dyn FieldFn>> = (0..gauge.spatial_dim())
        .map(|axis| {
            Arc::new(ATransformed { base: gauge.a[axis].clone(), lambda: lambda.clone(), axis })
                as Arc<dyn FieldFn>
        })
        .collect();
    let new_gauge = GaugeConfiguration {
        phi,
        a,
        // B is gauge invariant; reuse the base field.
        b_z: gauge.b_z.clone(),
        a_is_zero: false,
        is_static: gauge.is_static && lambda_is_static,
    };
    Ok((new_state, new_gauge))
}

/// Pointwise Weyl rescale `f -> f exp(-omega e_I lambda / hbar c)` of a real
/// field sampled on the grid.
#[allow(clippy::too_many_arguments)]
pub fn weyl_rescale(
    values: &[f64],
    grid: &GridSpec,
    t: f64,
    lambda: &Arc<dyn GaugeFn>,
    omega: i32,
    coupling: Coupling,
    constants: &PhysicalConstants,
) -> Vec<f64> {
    if omega == 0 {
        return values.to_vec();
    }
    let hc = constants.hbar * constants.c;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let l = lambda.value(grid.coords(i), t);
            v * (-(omega as f64) * coupling.e_i * l / hc).exp()
        })
        .collect()
}

/// A base run and its gauge-transformed twin, re-propagated from transformed
/// initial data.
pub struct TwinRun {
    pub base: Timeline,
    pub twin: Timeline,
    pub lambda: Arc<dyn GaugeFn>,
}

/// Propagate `initial` under `config`, transform the initial data with
/// `lambda`, and propagate the twin with the transformed potentials.
#[allow(clippy::too_many_arguments)]
pub fn make_twin_run(
    config: &SystemConfig,
    initial: &QuantumState,
    stepper: Stepper,
    t0: f64,
    dt: f64,
    n_steps: usize,
    stride: usize,
    lambda: Arc<dyn GaugeFn>,
    lambda_is_static: bool,
) -> Result<TwinRun> {
    let op = HamiltonianOperator::new(config.clone())?;
    let base = propagate(&op, initial, stepper, t0, dt, n_steps, stride)?;
    let mut init = initial.clone();
    init.set_time(t0);
    let (twin_init, twin_gauge) = apply_gauge_transform(
        &init,
        &config.gauge,
        lambda.clone(),
        &config.couplings,
        &config.constants,
        config.kind,
        lambda_is_static,
    )?;
    let mut twin_config = config.clone();
    twin_config.gauge = twin_gauge;
    let twin_op = HamiltonianOperator::new(twin_config)?;
    let twin = propagate(&twin_op, &twin_init, stepper, t0, dt, n_steps, stride)?;
    Ok(TwinRun { base, twin, lambda })
}

/// L-infinity deviation between the velocity fields of the two gauges at time
/// `t`, over jointly unmasked nodes. The guidance velocity is gauge invariant,
/// so this measures the covariance defect of the whole pipeline.
pub fn check_velocity_invariance(run: &TwinRun, t: f64) -> Result<f64> {
    let base_flow = SystemFlow::new(&run.base)?;
    let twin_flow = SystemFlow::new(&run.twin)?;
    let idx = base_flow.snapshot_index(t)?;
    let vb = base_flow.velocity(idx);
    let vt = twin_flow.velocity(idx);
    let n = vb.grid.total_points();
    let mut linf: f64 = 0.0;
    for i in 0..n {
        if vb.mask[i] || vt.mask[i] {
            continue;
        }
        for k in 0..vb.dim() {
            linf = linf.max((vb.v[k][i] - vt.v[k][i]).abs());
        }
    }
    Ok(linf)
}

/// L-infinity deviation between trajectory endpoints integrated in the two
/// gauges from the same seeds over `[t0, t]`.
pub fn check_trajectory_invariance(run: &TwinRun, seeds: &[[f64; 2]], t: f64) -> Result<f64> {
    let base_flow = SystemFlow::new(&run.base)?;
    let twin_flow = SystemFlow::new(&run.twin)?;
    let opts = IntegrateOptions::default();
    let t0 = run.base.t0;
    let mut linf: f64 = 0.0;
    for &s in seeds {
        let a = integrate_trajectory(&base_flow, s, t0, t, &opts)?;
        let b = integrate_trajectory(&twin_flow, s, t0, t, &opts)?;
        let (qa, qb) = (a.endpoint().q, b.endpoint().q);
        for k in 0..base_flow.grid().dim() {
            // compare on the torus
            let l = base_flow.grid().axis(k).len();
            let d = (qa[k] - qb[k]).abs();
            linf = linf.max(d.min(l - d));
        }
    }
    Ok(linf)
}

/// Conserved density of the *twin* run, including the transformed initial
/// scale `ln S'(t0, x0) = -sum_j e_Ij lambda(x_j0, t0) / hbar c` prescribed by
/// the transformation law.
pub fn transformed_density(
    run: &TwinRun,
    t: f64,
    opts: &IntegrateOptions,
) -> Result<DensitySnapshot> {
    let flow = SystemFlow::new(&run.twin)?;
    let tl = &run.twin;
    let idx = tl.index_at_time(t)?;
    let state = &tl.snapshots[idx];
    let born = state.born_density();
    let grid = tl.config.grid.clone();
    let n = grid.total_points();
    let max_b = born.iter().cloned().fold(0.0, f64::max);
    let support = crate::constants::SUPPORT_EPS_REL * max_b;
    let k = &tl.config.constants;
    let hc = k.hbar * k.c;
    let t0 = tl.t0;
    let mut rho = vec![0.0; n];
    let mut ln_one = vec![0.0; n];
    let mut unreliable_nodes = vec![false; n];
    let mut counted = 0usize;
    let mut bad = 0usize;
    for i in 0..n {
        if born[i] <= support {
            rho[i] = born[i];
            continue;
        }
        let (ln_ref, origin, unreliable) = trace_scale(&flow, grid.coords(i), t, opts)?;
        let mut ln0 = 0.0;
        match tl.config.kind {
            SystemKind::TwoParticle1d => {
                for j in 0..2 {
                    ln0 -= tl.config.couplings[j].e_i
                        * run.lambda.value([origin[j], 0.0], t0)
                        / hc;
                }
            }
            _ => {
                ln0 -= tl.config.couplings[0].e_i * run.lambda.value(origin, t0) / hc;
            }
        }
        let ln_total = ln_ref + ln0;
        rho[i] = born[i] * (-2.0 * ln_total).exp();
        ln_one[i] = ln_total;
        unreliable_nodes[i] = unreliable;
        counted += 1;
        if unreliable {
            bad += 1;
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
        degraded: frac > crate::constants::SNAPSHOT_DEGRADED_FRACTION,
    })
}

/// L-infinity deviation between the conserved densities reconstructed in the
/// two gauges at time `t`.
pub fn check_density_invariance(
    run: &TwinRun,
    t: f64,
    opts: &IntegrateOptions,
) -> Result<f64> {
    let base_flow = SystemFlow::new(&run.base)?;
    let rho_base =
        crate::weylscale::conserved_density_grid(&base_flow, t, DensityMethod::Backward, opts)?;
    let rho_twin = transformed_density(run, t, opts)?;
    let mut linf: f64 = 0.0;
    for (a, b) in rho_base.rho.iter().zip(&rho_twin.rho) {
        linf = linf.max((a - b).abs());
    }
    Ok(linf)
}
