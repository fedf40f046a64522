//! Ensemble dynamics over pilot-wave trajectories.
//!
//! An ensemble of configurations with density `rho` is transported by the
//! guidance flow; the pilot-wave equilibrium density is the conserved ratio
//! `|psi|^2 / S^2[C]`. The fine-grained H-function (relative entropy of `rho`
//! against equilibrium) is constant along the flow; the coarse-grained one
//! decreases under chaotic mixing. The modified-velocity experiment probes the
//! uniqueness of the guidance law: adding a Weyl-divergence-free current
//! changes the trajectories and with them the equilibrium density itself.
//!
//! All randomness is seeded; stochastic acceptance checks state their test
//! and confidence level instead of a bare tolerance.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::{PhysicalConstants, TRAJECTORY_FLAG_FRACTION, VELOCITY_CAP_FACTOR};
use crate::dynamics::{
    propagate, HamiltonianOperator, Stepper, SystemConfig, SystemKind, Timeline,
};
use crate::error::{PilotWaveError, Result};
use crate::gaugefield::{Coupling, GaugeConfiguration};
use crate::grid::GridSpec;
use crate::guidance::{trace_scale, transport_point, Flow, IntegrateOptions, SystemFlow, VelocityField};
use crate::interp::interpolate_real;
use crate::presets::mode_superposition_1d;
use crate::weylscale::{conserved_density_grid, DensityMethod, DensitySnapshot};
use crate::C64;

/// Minimum ensemble size for statistically meaningful operations.
pub const MIN_STATISTICAL_SIZE: usize = 1000;

/// Relative floor applied to `|psi|^2` when forming the modified velocity
/// `v + eps/R^2`; below it the addition is capped and flagged.
const V_PRIME_FLOOR_REL: f64 = 1e-6;

/// A weighted-equally ensemble of configuration-space points at one time.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub positions: Vec<[f64; 2]>,
    pub dim: usize,
    pub t: f64,
    /// False when the ensemble is too small for statistical operations.
    pub statistically_valid: bool,
    /// Fraction of members whose transport was unreliable.
    pub unreliable_fraction: f64,
    pub degraded: bool,
}

/// Uniform cells tiling the domain exactly, each covering >= 4 grid points
/// per axis direction overall.
#[derive(Debug, Clone)]
pub struct CoarseGraining {
    grid: GridSpec,
    pub cells_per_axis: [usize; 2],
}

impl CoarseGraining {
    pub fn new(grid: &GridSpec, cells_per_axis: &[usize]) -> Result<Self> {
        if cells_per_axis.len() != grid.dim() {
            return Err(PilotWaveError::config("one cell count per axis required"));
        }
        let mut arr = [1usize; 2];
        for (k, &c) in cells_per_axis.iter().enumerate() {
            let points = grid.axis(k).points;
            if c == 0 || points % c != 0 || points / c < 4 {
                return Err(PilotWaveError::config(format!(
                    "axis {k}: {c} cells must divide {points} grid points with >= 4 points per cell"
                )));
            }
            arr[k] = c;
        }
        Ok(CoarseGraining { grid: grid.clone(), cells_per_axis: arr })
    }

    pub fn n_cells(&self) -> usize {
        self.cells_per_axis[..self.grid.dim()].iter().product()
    }

    pub fn cell_of(&self, q: [f64; 2]) -> usize {
        let mut idx = [0usize; 2];
        for k in 0..self.grid.dim() {
            let ax = self.grid.axis(k);
            let u = (ax.wrap(q[k]) - ax.min) / ax.len();
            idx[k] = ((u * self.cells_per_axis[k] as f64) as usize).min(self.cells_per_axis[k] - 1);
        }
        idx[1] * self.cells_per_axis[0] + idx[0]
    }

    /// Cell index of a grid node.
    fn cell_of_node(&self, node: usize) -> usize {
        self.cell_of(self.grid.coords(node))
    }

    /// Cell-integrated (normalized) weights of a grid density.
    pub fn cell_weights(&self, rho: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n_cells()];
        for (i, &r) in rho.iter().enumerate() {
            q[self.cell_of_node(i)] += r;
        }
        let total: f64 = q.iter().sum();
        if total > 0.0 {
            for w in &mut q {
                *w /= total;
            }
        }
        q
    }

    /// Ensemble histogram (normalized).
    pub fn histogram(&self, ens: &Ensemble) -> Vec<f64> {
        let mut p = vec![0.0; self.n_cells()];
        for &q in &ens.positions {
            p[self.cell_of(q)] += 1.0;
        }
        let n = ens.positions.len().max(1) as f64;
        for w in &mut p {
            *w /= n;
        }
        p
    }
}

/// Draw `n` points from a nonnegative grid density, deterministically for a
/// given seed. 1D uses inverse-CDF sampling on the grid histogram; 2D uses
/// rejection sampling with the maximum density as envelope.
pub fn sample_from_weights(
    grid: &GridSpec,
    weights: &[f64],
    t: f64,
    n: usize,
    seed: u64,
) -> Result<Ensemble> {
    if weights.len() != grid.total_points() {
        return Err(PilotWaveError::config("weight array does not match grid"));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(PilotWaveError::config("weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(PilotWaveError::DegenerateField("cannot sample from zero density".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    match grid.dim() {
        1 => {
            let mut cdf = Vec::with_capacity(weights.len());
            let mut acc = 0.0;
            for &w in weights {
                acc += w;
                cdf.push(acc);
            }
            let ax = grid.axis(0);
            for _ in 0..n {
                let u: f64 = rng.gen::<f64>() * total;
                let cell = match cdf.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.min(weights.len() - 1),
                };
                let lo = if cell == 0 { 0.0 } else { cdf[cell - 1] };
                let frac = if weights[cell] > 0.0 { (u - lo) / weights[cell] } else { 0.5 };
                positions.push([ax.node(cell) + frac.clamp(0.0, 1.0) * ax.dx(), 0.0]);
            }
        }
        _ => {
            let wmax = weights.iter().cloned().fold(0.0, f64::max);
            let (ax, ay) = (grid.axis(0), grid.axis(1));
            let mut proposals = 0usize;
            let budget = n.saturating_mul(100_000).max(1_000_000);
            while positions.len() < n {
                proposals += 1;
                if proposals > budget {
                    return Err(PilotWaveError::DegenerateField(
                        "rejection sampling acceptance rate too low".into(),
                    ));
                }
                let x = ax.min + rng.gen::<f64>() * ax.len();
                let y = ay.min + rng.gen::<f64>() * ay.len();
                // piecewise-constant density on cells anchored at nodes
                let ix = (((x - ax.min) / ax.dx()) as usize).min(ax.points - 1);
                let iy = (((y - ay.min) / ay.dx()) as usize).min(ay.points - 1);
                let w = weights[grid.flat(ix, iy)];
                if rng.gen::<f64>() * wmax <= w {
                    positions.push([x, y]);
                }
            }
        }
    }
    Ok(Ensemble {
        positions,
        dim: grid.dim(),
        t,
        statistically_valid: n >= MIN_STATISTICAL_SIZE,
        unreliable_fraction: 0.0,
        degraded: false,
    })
}

/// Sample from a conserved-density snapshot.
pub fn sample_ensemble(snapshot: &DensitySnapshot, n: usize, seed: u64) -> Result<Ensemble> {
    sample_from_weights(&snapshot.grid, &snapshot.rho, snapshot.t, n, seed)
}

/// Transport every member along the guidance flow to `t1`.
pub fn evolve_ensemble<F: Flow + ?Sized>(
    flow: &F,
    ensemble: &Ensemble,
    t1: f64,
    opts: &IntegrateOptions,
) -> Result<Ensemble> {
    let outs: Vec<([f64; 2], f64)> = ensemble
        .positions
        .par_iter()
        .map(|&q| {
            transport_point(flow, q, ensemble.t, t1, opts)
                .map(|(q1, _ln, frac)| (q1, frac))
                .unwrap_or((q, 1.0))
        })
        .collect();
    let bad = outs
        .iter()
        .filter(|(_, frac)| *frac > TRAJECTORY_FLAG_FRACTION)
        .count();
    let frac = if outs.is_empty() { 0.0 } else { bad as f64 / outs.len() as f64 };
    Ok(Ensemble {
        positions: outs.into_iter().map(|(q, _)| q).collect(),
        dim: ensemble.dim,
        t: t1,
        statistically_valid: ensemble.statistically_valid,
        unreliable_fraction: frac,
        degraded: frac > 0.01,
    })
}

/// Relative entropy value plus support diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct RelativeEntropy {
    pub value: f64,
    /// Number of cells/nodes where `rho > 0` but the reference vanished
    /// (value is +inf when nonzero).
    pub support_violations: usize,
}

/// Fine-grained H: Riemann-sum KL divergence `integral rho ln(rho/rho_eq)`.
/// Both inputs must be normalized on the same grid; they are renormalized
/// exactly before integration to remove discretization bias.
pub fn h_function_fine(grid: &GridSpec, rho: &[f64], rho_eq: &[f64]) -> Result<RelativeEntropy> {
    if rho.len() != grid.total_points() || rho_eq.len() != grid.total_points() {
        return Err(PilotWaveError::config("density length does not match grid"));
    }
    let dv = grid.cell_volume();
    let na: f64 = rho.iter().sum::<f64>() * dv;
    let nb: f64 = rho_eq.iter().sum::<f64>() * dv;
    for (label, n) in [("rho", na), ("rho_eq", nb)] {
        if (n - 1.0).abs() > 1e-3 {
            return Err(PilotWaveError::config(format!(
                "{label} must be normalized (norm = {n})"
            )));
        }
    }
    let max_rho = rho.iter().cloned().fold(0.0, f64::max);
    let skip = 1e-15 * max_rho;
    let mut value = 0.0;
    let mut violations = 0usize;
    for i in 0..rho.len() {
        let p = rho[i] / na;
        if p <= skip {
            continue;
        }
        let q = rho_eq[i] / nb;
        if q < 1e-300 {
            violations += 1;
            continue;
        }
        value += p * (p / q).ln() * dv;
    }
    if violations > 0 {
        value = f64::INFINITY;
    }
    Ok(RelativeEntropy { value, support_violations: violations })
}

/// Coarse-grained H: `sum p ln(p/q)` over cells, `p` from the ensemble
/// histogram and `q` from cell integrals of the reference density.
pub fn h_function_coarse(
    ensemble: &Ensemble,
    graining: &CoarseGraining,
    rho_eq: &[f64],
) -> Result<RelativeEntropy> {
    let p = graining.histogram(ensemble);
    let q = graining.cell_weights(rho_eq);
    let mut value = 0.0;
    let mut violations = 0usize;
    for (pi, qi) in p.iter().zip(&q) {
        if *pi <= 0.0 {
            continue;
        }
        if *qi < 1e-300 {
            violations += 1;
            continue;
        }
        value += pi * (pi / qi).ln();
    }
    if violations > 0 {
        value = f64::INFINITY;
    }
    Ok(RelativeEntropy { value, support_violations: violations })
}

/// 95th percentile of the null distribution of the coarse H for samples drawn
/// *from* the reference density (parametric bootstrap, seeded).
pub fn coarse_h_null_quantile(
    graining: &CoarseGraining,
    rho_eq: &[f64],
    n_samples: usize,
    n_boot: usize,
    seed: u64,
) -> f64 {
    let q = graining.cell_weights(rho_eq);
    let mut cdf = Vec::with_capacity(q.len());
    let mut acc = 0.0;
    for &w in &q {
        acc += w;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut hs = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let mut counts = vec![0usize; q.len()];
        for _ in 0..n_samples {
            let u: f64 = rng.gen();
            let cell = match cdf.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
                Ok(i) => i,
                Err(i) => i.min(q.len() - 1),
            };
            counts[cell] += 1;
        }
        let mut h = 0.0;
        for (c, qi) in counts.iter().zip(&q) {
            if *c > 0 && *qi > 0.0 {
                let p = *c as f64 / n_samples as f64;
                h += p * (p / qi).ln();
            }
        }
        hs.push(h);
    }
    hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((0.95 * n_boot as f64) as usize).min(n_boot - 1);
    hs[idx]
}

/// Push a 1D grid density forward along the flow to time `t` using the flow
/// map only: `rho_t(x) = rho_0(x_0(x)) |dx_0/dx|`, with the Jacobian from
/// central differences of backtraced origins. Independent of the conserved
/// density machinery.
pub fn transported_density_1d(
    flow: &SystemFlow<'_>,
    rho0: &[f64],
    t: f64,
    opts: &IntegrateOptions,
) -> Result<Vec<f64>> {
    let grid = flow.grid().clone();
    if grid.dim() != 1 {
        return Err(PilotWaveError::Unsupported("density transport is 1D-only".into()));
    }
    let n = grid.total_points();
    let origins: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            trace_scale(flow, grid.coords(i), t, opts)
                .map(|(_, x0, _)| x0[0])
                .unwrap_or(grid.coords(i)[0])
        })
        .collect();
    let l = grid.axis(0).len();
    let dx = grid.axis(0).dx();
    let min_image = |d: f64| {
        let mut r = d.rem_euclid(l);
        if r > 0.5 * l {
            r -= l;
        }
        r
    };
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        let jac = min_image(origins[ip] - origins[im]) / (2.0 * dx);
        let r0 = interpolate_real(&grid, rho0, [origins[i], 0.0]);
        out[i] = (r0 * jac.abs()).max(0.0);
    }
    Ok(out)
}

/// `v_mod = v + eps / R^2` per snapshot, for 1D runs with `A = 0`. The
/// addition is floored near nodes (`R^2 < 1e-6 max`), where it is capped and
/// masked; the zero-Weyl-divergence identity `d(R^2 v')/dx = 0` holds exactly
/// away from those nodes.
pub fn modified_velocity_fields(
    base: &SystemFlow<'_>,
    eps: f64,
) -> Result<Vec<VelocityField>> {
    let tl = base.timeline;
    if tl.config.kind != SystemKind::Schrodinger1d {
        return Err(PilotWaveError::Unsupported(
            "modified velocity requires a 1D scalar run".into(),
        ));
    }
    if !tl.config.gauge.a_is_zero {
        return Err(PilotWaveError::Unsupported(
            "modified velocity requires A = 0 (general zero-Weyl-divergence currents \
             are not implemented)"
                .into(),
        ));
    }
    let mut fields = Vec::with_capacity(tl.n_snapshots());
    for (idx, snap) in tl.snapshots.iter().enumerate() {
        let born = snap.born_density();
        let vbase = base.velocity(idx);
        let n = born.len();
        let max_b = born.iter().cloned().fold(0.0, f64::max);
        let floor = V_PRIME_FLOOR_REL * max_b;
        let mut v = vec![vec![0.0; n]];
        let mut mask = vec![false; n];
        for i in 0..n {
            let floored = born[i].max(floor);
            v[0][i] = vbase.v[0][i] + eps / floored;
            mask[i] = vbase.mask[i] || born[i] < floor;
        }
        let mut field = VelocityField { grid: vbase.grid.clone(), v, mask, cap: f64::INFINITY };
        let vmax = field.max_unmasked();
        let cap = if vmax > 0.0 { VELOCITY_CAP_FACTOR * vmax } else { 1.0 };
        for i in 0..n {
            if field.mask[i] && field.v[0][i].abs() > cap {
                field.v[0][i] = field.v[0][i].signum() * cap;
            }
        }
        field.cap = cap;
        fields.push(field);
    }
    Ok(fields)
}

/// Everything the uniqueness experiment produces.
pub struct UniquenessReport {
    pub rho_base: DensitySnapshot,
    pub rho_modified: DensitySnapshot,
    /// `integral |rho_C - rho_C'| dx` at the comparison time.
    pub l1_distance: f64,
    /// Same distance for the `eps = 0` twin (measurement floor).
    pub noise_floor: f64,
    pub norm_base: f64,
    pub norm_modified: f64,
    /// Density-weighted fraction of mass on unreliable nodes.
    pub mass_contamination: f64,
    pub degraded: bool,
}

fn l1_distance(a: &DensitySnapshot, b: &DensitySnapshot) -> f64 {
    a.rho
        .iter()
        .zip(&b.rho)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.grid.cell_volume()
}

fn mass_contamination(s: &DensitySnapshot) -> f64 {
    let total: f64 = s.rho.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    s.rho
        .iter()
        .zip(&s.unreliable_nodes)
        .filter(|(_, u)| **u)
        .map(|(r, _)| r)
        .sum::<f64>()
        / total
}

/// Compare the equilibrium densities of the original flow `C` and the
/// modified flow `C'` (velocity `v + eps/R^2`) at time `t`.
pub fn uniqueness_experiment(
    timeline: &Timeline,
    t: f64,
    eps: f64,
    opts: &IntegrateOptions,
) -> Result<UniquenessReport> {
    let base = SystemFlow::new(timeline)?;
    let rho_base = conserved_density_grid(&base, t, DensityMethod::Backward, opts)?;

    let zero_fields = modified_velocity_fields(&base, 0.0)?;
    let zero_flow = SystemFlow::with_fields(timeline, zero_fields);
    let rho_zero = conserved_density_grid(&zero_flow, t, DensityMethod::Backward, opts)?;
    let noise_floor = l1_distance(&rho_base, &rho_zero);

    let mod_fields = modified_velocity_fields(&base, eps)?;
    let mod_flow = SystemFlow::with_fields(timeline, mod_fields);
    let rho_mod = conserved_density_grid(&mod_flow, t, DensityMethod::Backward, opts)?;

    let l1 = l1_distance(&rho_base, &rho_mod);
    let contamination = mass_contamination(&rho_mod).max(mass_contamination(&rho_base));
    Ok(UniquenessReport {
        norm_base: crate::weylscale::total_norm(&rho_base),
        norm_modified: crate::weylscale::total_norm(&rho_mod),
        l1_distance: l1,
        noise_floor,
        mass_contamination: contamination,
        degraded: contamination > 0.05,
        rho_base,
        rho_modified: rho_mod,
    })
}

/// Configuration of the committed relaxation benchmark: a superposition of
/// low momentum modes on a periodic box, an out-of-equilibrium initial
/// ensemble, and checkpointed coarse-grained H values.
#[derive(Debug, Clone)]
pub struct RelaxationConfig {
    pub points: usize,
    pub length: f64,
    /// (mode, amplitude) pairs of the guiding superposition.
    pub modes: Vec<(i32, C64)>,
    pub coupling: Coupling,
    /// Scalar potential amplitude `phi = amp * sin(2 pi x / L)`; 0 for free.
    pub phi_amp: f64,
    pub dt: f64,
    pub stride: usize,
    pub t_final: f64,
    pub n_checkpoints: usize,
    pub n_samples: usize,
    pub cells: usize,
    pub seed: u64,
    /// Start from equilibrium (null experiment) instead of uniform.
    pub start_in_equilibrium: bool,
}

impl RelaxationConfig {
    /// The committed benchmark preset. The quantitative decrease is a
    /// regression fixture established by the first validated run.
    pub fn benchmark() -> Self {
        RelaxationConfig {
            points: 256,
            length: 2.0 * std::f64::consts::PI,
            modes: vec![
                (0, C64::new(1.0, 0.0)),
                (1, C64::new(0.809, 0.588)),
                (-1, C64::new(0.309, -0.951)),
                (2, C64::new(-0.587, 0.809)),
                (-2, C64::new(0.951, 0.309)),
                (3, C64::new(-0.105, -0.995)),
                (4, C64::new(0.737, -0.676)),
            ],
            coupling: Coupling::hermitian(0.0),
            phi_amp: 0.0,
            dt: 2e-4,
            stride: 10,
            t_final: 4.0,
            n_checkpoints: 8,
            n_samples: 10_000,
            cells: 32,
            seed: 11,
            start_in_equilibrium: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RelaxationPoint {
    pub t: f64,
    pub h_coarse: f64,
    pub degraded: bool,
}

pub struct RelaxationResult {
    pub series: Vec<RelaxationPoint>,
    /// 95% null band for an in-equilibrium ensemble of the same size at t0.
    pub null_quantile_95: f64,
}

/// Run the relaxation experiment: evolve the ensemble through the superposed
/// state's flow and record the coarse-grained H at each checkpoint.
pub fn relaxation_experiment(cfg: &RelaxationConfig) -> Result<RelaxationResult> {
    let grid = GridSpec::new_1d(0.0, cfg.length, cfg.points)?;
    let gauge = if cfg.phi_amp == 0.0 {
        GaugeConfiguration::free(1)
    } else {
        let amp = cfg.phi_amp;
        let k = 2.0 * std::f64::consts::PI / cfg.length;
        GaugeConfiguration::scalar(
            1,
            std::sync::Arc::new(crate::gaugefield::FnField(move |x: [f64; 2], _| {
                amp * (k * x[0]).sin()
            })),
            true,
        )
    };
    let config = SystemConfig {
        kind: SystemKind::Schrodinger1d,
        grid: grid.clone(),
        constants: PhysicalConstants::default(),
        couplings: vec![cfg.coupling],
        masses: vec![1.0],
        gauge,
    };
    let initial = mode_superposition_1d(&grid, &cfg.modes)?;
    let op = HamiltonianOperator::new(config)?;
    let n_steps = (cfg.t_final / cfg.dt).round() as usize;
    let timeline = propagate(&op, &initial, Stepper::CrankNicolson, 0.0, cfg.dt, n_steps, cfg.stride)?;
    let flow = SystemFlow::new(&timeline)?;
    let graining = CoarseGraining::new(&grid, &[cfg.cells])?;
    let hermitian = timeline.config.is_hermitian();

    let equilibrium_density = |t: f64| -> Result<Vec<f64>> {
        let idx = timeline.index_at_time(t)?;
        if hermitian {
            Ok(timeline.snapshots[idx].born_density())
        } else {
            let opts = IntegrateOptions::default();
            Ok(conserved_density_grid(&flow, t, DensityMethod::Backward, &opts)?.rho)
        }
    };

    // Initial ensemble: uniform (far from equilibrium) or in-equilibrium null.
    let mut ensemble = if cfg.start_in_equilibrium {
        sample_from_weights(&grid, &equilibrium_density(0.0)?, 0.0, cfg.n_samples, cfg.seed)?
    } else {
        sample_from_weights(&grid, &vec![1.0; grid.total_points()], 0.0, cfg.n_samples, cfg.seed)?
    };

    let rho_eq0 = equilibrium_density(0.0)?;
    let null_q = coarse_h_null_quantile(&graining, &rho_eq0, cfg.n_samples, 200, cfg.seed);

    let opts = IntegrateOptions::default();
    let mut series = Vec::with_capacity(cfg.n_checkpoints + 1);
    let h0 = h_function_coarse(&ensemble, &graining, &rho_eq0)?;
    series.push(RelaxationPoint { t: 0.0, h_coarse: h0.value, degraded: false });
    let checkpoint_dt = cfg.t_final / cfg.n_checkpoints as f64;
    for k in 1..=cfg.n_checkpoints {
        let t = k as f64 * checkpoint_dt;
        ensemble = evolve_ensemble(&flow, &ensemble, t, &opts)?;
        let rho_eq = equilibrium_density(t)?;
        let h = h_function_coarse(&ensemble, &graining, &rho_eq)?;
        series.push(RelaxationPoint { t, h_coarse: h.value, degraded: ensemble.degraded });
    }
    Ok(RelaxationResult { series, null_quantile_95: null_q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ensemble_is_flagged_invalid() {
        let grid = GridSpec::new_1d(0.0, 1.0, 32).unwrap();
        let ens = sample_from_weights(&grid, &vec![1.0; 32], 0.0, 0, 1).unwrap();
        assert!(ens.positions.is_empty());
        assert!(!ens.statistically_valid);
    }

    #[test]
    fn fine_h_zero_for_identical_densities() {
        let grid = GridSpec::new_1d(-10.0, 10.0, 128).unwrap();
        let rho: Vec<f64> = (0..128)
            .map(|i| {
                let x = grid.coords(i)[0];
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            })
            .collect();
        let h = h_function_fine(&grid, &rho, &rho).unwrap();
        assert!(h.value.abs() < 1e-12, "H = {}", h.value);
        assert_eq!(h.support_violations, 0);
    }

    #[test]
    fn fine_h_gaussian_shift_closed_form() {
        // KL(N(d, s) || N(0, s)) = d^2 / (2 s^2)
        let grid = GridSpec::new_1d(-16.0, 16.0, 512).unwrap();
        let s = 1.0;
        let d = 0.6;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * s * s).sqrt();
        let g = |x: f64, mu: f64| norm * (-(x - mu) * (x - mu) / (2.0 * s * s)).exp();
        let rho: Vec<f64> = (0..512).map(|i| g(grid.coords(i)[0], d)).collect();
        let rho_eq: Vec<f64> = (0..512).map(|i| g(grid.coords(i)[0], 0.0)).collect();
        let h = h_function_fine(&grid, &rho, &rho_eq).unwrap();
        let expect = d * d / (2.0 * s * s);
        assert!((h.value - expect).abs() < 1e-4, "{} vs {expect}", h.value);
    }

    #[test]
    fn coarse_h_degenerate_histogram() {
        // all points in one cell against uniform rho_eq over K cells: ln K
        let grid = GridSpec::new_1d(0.0, 1.0, 64).unwrap();
        let graining = CoarseGraining::new(&grid, &[16]).unwrap();
        let ens = Ensemble {
            positions: vec![[0.01, 0.0]; 500],
            dim: 1,
            t: 0.0,
            statistically_valid: false,
            unreliable_fraction: 0.0,
            degraded: false,
        };
        let rho_eq = vec![1.0; 64];
        let h = h_function_coarse(&ens, &graining, &rho_eq).unwrap();
        assert!((h.value - (16.0_f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn coarse_graining_validates_cell_counts() {
        let grid = GridSpec::new_1d(0.0, 1.0, 64).unwrap();
        assert!(CoarseGraining::new(&grid, &[64]).is_err()); // 1 point per cell
        assert!(CoarseGraining::new(&grid, &[12]).is_err()); // does not divide
        assert!(CoarseGraining::new(&grid, &[16]).is_ok());
    }

    #[test]
    fn sampling_uniform_passes_ks() {
        // Kolmogorov-Smirnov against uniform at 95%: D < 1.36 / sqrt(n)
        let grid = GridSpec::new_1d(0.0, 2.0, 64).unwrap();
        let n = 10_000;
        let ens = sample_from_weights(&grid, &vec![1.0; 64], 0.0, n, 42).unwrap();
        let mut xs: Vec<f64> = ens.positions.iter().map(|p| p[0] / 2.0).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let emp_hi = (i + 1) as f64 / n as f64;
            let emp_lo = i as f64 / n as f64;
            d = d.max((emp_hi - x).abs()).max((x - emp_lo).abs());
        }
        assert!(d < 1.36 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn sampling_gaussian_mean_within_clt_bound() {
        let grid = GridSpec::new_1d(-10.0, 10.0, 256).unwrap();
        let s = 0.4;
        let c = 1.3;
        let rho: Vec<f64> = (0..256)
            .map(|i| {
                let x = grid.coords(i)[0];
                (-(x - c) * (x - c) / (2.0 * s * s)).exp()
            })
            .collect();
        let n = 20_000;
        let ens = sample_from_weights(&grid, &rho, 0.0, n, 7).unwrap();
        let mean: f64 = ens.positions.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        // 3 sigma / sqrt(n) plus the half-cell quantization of the histogram
        let bound = 3.0 * s / (n as f64).sqrt() + 0.5 * grid.axis(0).dx();
        assert!((mean - c).abs() < bound, "mean {mean} vs {c} (bound {bound})");
    }

    #[test]
    fn modified_velocity_guards() {
        // exercised end-to-end in the integration tests; here just the guard
        let grid = GridSpec::new_2d([(0.0, 1.0, 16), (0.0, 1.0, 16)]).unwrap();
        let cfg = SystemConfig {
            kind: SystemKind::TwoParticle1d,
            grid,
            constants: PhysicalConstants::default(),
            couplings: vec![Coupling::hermitian(0.0); 2],
            masses: vec![1.0; 2],
            gauge: GaugeConfiguration::free(1),
        };
        let op = HamiltonianOperator::new(cfg).unwrap();
        let state = crate::presets::two_particle_gaussians(
            op.config.grid.axes().first().map(|_| &op.config.grid).unwrap(),
            [0.4, 0.6],
            [0.08, 0.08],
            [0.0, 0.0],
            0.0,
        )
        .unwrap();
        let tl = propagate(&op, &state, Stepper::Rk4Spectral, 0.0, 1e-4, 10, 10).unwrap();
        let flow = SystemFlow::new(&tl).unwrap();
        assert!(matches!(
            modified_velocity_fields(&flow, 0.1),
            Err(PilotWaveError::Unsupported(_))
        ));
    }
}
