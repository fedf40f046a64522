//! Propagation oracles: closed-form solutions, cross-stepper agreement,
//! self-convergence, and divergence detection.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use pilotwave::constants::PhysicalConstants;
use pilotwave::dynamics::{
    propagate, step_crank_nicolson_1d, HamiltonianOperator, Stepper, SystemConfig, SystemKind,
};
use pilotwave::error::PilotWaveError;
use pilotwave::field::{ComplexScalarField, QuantumState};
use pilotwave::gaugefield::{ConstField, Coupling, FnField, GaugeConfiguration};
use pilotwave::grid::GridSpec;
use pilotwave::guidance::spin_density;
use pilotwave::presets;

fn scalar_config(
    grid: GridSpec,
    coupling: Coupling,
    gauge: GaugeConfiguration,
) -> SystemConfig {
    SystemConfig {
        kind: SystemKind::Schrodinger1d,
        grid,
        constants: PhysicalConstants::default(),
        couplings: vec![coupling],
        masses: vec![1.0],
        gauge,
    }
}

#[test]
fn constant_imaginary_potential_exact_growth() {
    // e = 0, e_I = 1, phi = phi0: |psi|^2 grows by exactly exp(2 phi0 t / hbar).
    let phi0 = 0.3;
    let grid = GridSpec::new_1d(-20.0, 20.0, 512).unwrap();
    let cfg = scalar_config(
        grid.clone(),
        Coupling::new(0.0, 1.0).unwrap(),
        GaugeConfiguration::scalar(1, Arc::new(ConstField(phi0)), true),
    );
    let op = HamiltonianOperator::new(cfg).unwrap();
    let initial = presets::gaussian_1d(&grid, 0.0, 3.0, 0.0).unwrap();
    let dt = 1e-3;
    let tl = propagate(&op, &initial, Stepper::CrankNicolson, 0.0, dt, 1000, 100).unwrap();
    let expect = (2.0 * phi0 * 1.0).exp();
    let got = tl.born_norms.last().unwrap() / tl.born_norms[0];
    let rel = (got - expect).abs() / expect;
    assert!(rel < 1e-6, "norm growth {got} vs {expect} (rel {rel:.2e})");
}

#[test]
fn rk4_matches_crank_nicolson_on_free_gaussian() {
    // Cross-stepper oracle: both solve the same problem; on a well-resolved
    // wide packet the spatial truncation of the banded operator is tiny and
    // the two must agree pointwise.
    let grid = GridSpec::new_1d(-8.0 * PI, 8.0 * PI, 8192).unwrap();
    let cfg = scalar_config(grid.clone(), Coupling::hermitian(0.0), GaugeConfiguration::free(1));
    let op = HamiltonianOperator::new(cfg).unwrap();
    let initial = presets::gaussian_1d(&grid, 0.0, 3.0, 0.25).unwrap();
    let t_final = 0.1;
    let tl_cn =
        propagate(&op, &initial, Stepper::CrankNicolson, 0.0, 1e-4, 1000, 1000).unwrap();
    let tl_rk =
        propagate(&op, &initial, Stepper::Rk4Spectral, 0.0, 2e-5, 5000, 5000).unwrap();
    assert!((tl_cn.t_final() - t_final).abs() < 1e-12);
    assert!((tl_rk.t_final() - t_final).abs() < 1e-12);
    let a = tl_cn.snapshots.last().unwrap().as_scalar().unwrap();
    let b = tl_rk.snapshots.last().unwrap().as_scalar().unwrap();
    let mut linf: f64 = 0.0;
    for i in 0..grid.total_points() {
        linf = linf.max((a.values[i] - b.values[i]).norm());
    }
    assert!(linf < 1e-8, "steppers disagree by {linf:.2e}");
}

#[test]
fn cn_self_convergence_is_second_order_in_dt() {
    let grid = GridSpec::new_1d(-8.0 * PI, 8.0 * PI, 1024).unwrap();
    let cfg = scalar_config(
        grid.clone(),
        Coupling::hermitian(1.0),
        GaugeConfiguration::scalar(1, Arc::new(FnField(|x: [f64; 2], _| x[0].sin())), true),
    );
    let op = HamiltonianOperator::new(cfg).unwrap();
    let initial = presets::gaussian_1d(&grid, 0.0, 2.0, 0.0).unwrap();
    let t_final = 0.2;
    let run = |dt: f64| {
        let steps = (t_final / dt).round() as usize;
        let tl = propagate(&op, &initial, Stepper::CrankNicolson, 0.0, dt, steps, steps).unwrap();
        tl.snapshots.last().unwrap().as_scalar().unwrap().values.clone()
    };
    let reference = run(2.5e-4);
    let err = |dt: f64| -> f64 {
        run(dt)
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    };
    let e1 = err(4e-3);
    let e2 = err(2e-3);
    let e3 = err(1e-3);
    let r1 = e1 / e2;
    let r2 = e2 / e3;
    // halving dt reduces the error ~4x
    assert!(r1 > 3.3 && r1 < 4.7, "first refinement ratio {r1} (errors {e1:.2e}, {e2:.2e})");
    assert!(r2 > 3.3 && r2 < 4.7, "second refinement ratio {r2} (errors {e2:.2e}, {e3:.2e})");
}

#[test]
fn dirac_plane_wave_dispersion_phase() {
    // Positive-energy plane wave rotates as exp(-i E t / hbar) with
    // E = sqrt((hbar k c)^2 + (m c^2)^2).
    let grid = GridSpec::new_1d(-16.0, 16.0, 256).unwrap();
    let k = PhysicalConstants::default();
    let cfg = SystemConfig {
        kind: SystemKind::Dirac1p1,
        grid: grid.clone(),
        constants: k,
        couplings: vec![Coupling::hermitian(0.0)],
        masses: vec![1.0],
        gauge: GaugeConfiguration::free(1),
    };
    let op = HamiltonianOperator::new(cfg).unwrap();
    let initial = presets::dirac_plane_wave(&grid, 3, 1.0, &k).unwrap();
    let t_final = 1.0;
    let tl = propagate(&op, &initial, Stepper::Rk4Spectral, 0.0, 1e-3, 1000, 1000).unwrap();
    let kk = 2.0 * PI * 3.0 / 32.0;
    let e = (kk * kk + 1.0).sqrt();
    let phase = C64::new(0.0, -e * t_final).exp();
    let got = tl.snapshots.last().unwrap().as_spinor().unwrap();
    let want = initial.as_spinor().unwrap();
    let mut linf: f64 = 0.0;
    for comp in 0..2 {
        for i in 0..grid.total_points() {
            linf = linf.max((got.components[comp][i] - phase * want.components[comp][i]).norm());
        }
    }
    assert!(linf < 1e-7, "dispersion phase error {linf:.2e}");
}

#[test]
fn pauli_uniform_b_larmor_precession() {
    // Uniform B_z via A = (0, B x): the spinor factor precesses at
    // omega = e B / m c regardless of the orbital dynamics.
    let b = 0.5;
    let e_charge = 1.0;
    let grid = GridSpec::new_2d([(-12.0, 12.0, 64), (-12.0, 12.0, 64)]).unwrap();
    let k = PhysicalConstants::default();
    let gauge = GaugeConfiguration::new(
        Arc::new(ConstField(0.0)),
        vec![
            Arc::new(ConstField(0.0)),
            Arc::new(FnField(move |x: [f64; 2], _| b * x[0])),
        ],
        Some(Arc::new(ConstField(b))),
        true,
    );
    let cfg = SystemConfig {
        kind: SystemKind::Pauli2d,
        grid: grid.clone(),
        constants: k,
        couplings: vec![Coupling::hermitian(e_charge)],
        masses: vec![1.0],
        gauge,
    };
    let op = HamiltonianOperator::new(cfg).unwrap();
    let r = 1.0 / 2.0_f64.sqrt();
    let initial = presets::pauli_gaussian(
        &grid,
        [0.0, 0.0],
        [1.5, 1.5],
        [0.0, 0.0],
        [C64::new(r, 0.0), C64::new(r, 0.0)],
    )
    .unwrap();
    let t_final = 2.0;
    let tl = propagate(&op, &initial, Stepper::Rk4Spectral, 0.0, 1e-3, 2000, 2000).unwrap();
    let state = tl.snapshots.last().unwrap().as_spinor().unwrap();
    let [sx, sy, sz] = spin_density(state, &k);
    let rho = state.born_density();
    let total_rho: f64 = rho.iter().sum();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / (0.5 * total_rho);
    let omega = e_charge * b;
    let (got_x, got_y, got_z) = (mean(&sx), mean(&sy), mean(&sz));
    let want_x = (omega * t_final).cos();
    let want_y = -(omega * t_final).sin();
    assert!((got_x - want_x).abs() < 1e-6, "S_x {got_x} vs {want_x}");
    assert!((got_y - want_y).abs() < 1e-6, "S_y {got_y} vs {want_y}");
    assert!(got_z.abs() < 1e-6, "S_z {got_z} should stay 0");
}

#[test]
fn pauli_b_zero_matches_independent_scalar_runs() {
    // With B = 0 and no potentials the two spinor components evolve as two
    // independent scalar fields; the two-particle system on the same 2D grid
    // with zero gauge is exactly that scalar problem.
    let grid = GridSpec::new_2d([(-10.0, 10.0, 64), (-10.0, 10.0, 64)]).unwrap();
    let k = PhysicalConstants::default();
    let pauli_cfg = SystemConfig {
        kind: SystemKind::Pauli2d,
        grid: grid.clone(),
        constants: k,
        couplings: vec![Coupling::hermitian(0.7)],
        masses: vec![1.0],
        gauge: GaugeConfiguration::free(2),
    };
    let scalar_cfg = SystemConfig {
        kind: SystemKind::TwoParticle1d,
        grid: grid.clone(),
        constants: k,
        couplings: vec![Coupling::hermitian(0.7), Coupling::hermitian(0.7)],
        masses: vec![1.0, 1.0],
        gauge: GaugeConfiguration::free(1),
    };
    let up = presets::gaussian_2d(&grid, [-1.0, 0.5], [1.2, 1.0], [0.3, -0.2]).unwrap();
    let dn = presets::gaussian_2d(&grid, [1.5, -0.5], [0.9, 1.4], [-0.1, 0.4]).unwrap();
    let spinor = QuantumState::Spinor(
        pilotwave::field::SpinorField::new(
            grid.clone(),
            [up.values.clone(), dn.values.clone()],
            0.0,
        )
        .unwrap(),
    );
    let op_p = HamiltonianOperator::new(pauli_cfg).unwrap();
    let op_s = HamiltonianOperator::new(scalar_cfg).unwrap();
    let dt = 1e-3;
    let steps = 300;
    let tl_p = propagate(&op_p, &spinor, Stepper::Rk4Spectral, 0.0, dt, steps, steps).unwrap();
    let run_scalar = |f: &ComplexScalarField| {
        let st = QuantumState::Scalar(f.clone());
        let tl = propagate(&op_s, &st, Stepper::Rk4Spectral, 0.0, dt, steps, steps).unwrap();
        tl.snapshots.last().unwrap().as_scalar().unwrap().values.clone()
    };
    let want_up = run_scalar(&up);
    let want_dn = run_scalar(&dn);
    let got = tl_p.snapshots.last().unwrap().as_spinor().unwrap();
    let mut linf: f64 = 0.0;
    for i in 0..grid.total_points() {
        linf = linf.max((got.components[0][i] - want_up[i]).norm());
        linf = linf.max((got.components[1][i] - want_dn[i]).norm());
    }
    assert!(linf < 1e-10, "decoupling violation {linf:.2e}");
}

#[test]
fn hermitian_run_conserves_born_norm() {
    let grid = GridSpec::new_1d(-8.0 * PI, 8.0 * PI, 512).unwrap();
    let cfg = scalar_config(
        grid.clone(),
        Coupling::hermitian(1.0),
        GaugeConfiguration::scalar(1, Arc::new(FnField(|x: [f64; 2], _| x[0].sin())), true),
    );
    let op = HamiltonianOperator::new(cfg).unwrap();
    let initial = presets::gaussian_1d(&grid, 0.0, 1.0, 0.0).unwrap();
    let tl = propagate(&op, &initial, Stepper::CrankNicolson, 0.0, 1e-3, 1000, 100).unwrap();
    for (i, n) in tl.born_norms.iter().enumerate() {
        assert!((n - 1.0).abs() < 1e-8, "norm drift {:.2e} at step {i}", (n - 1.0).abs());
    }
}

#[test]
fn sine_imaginary_potential_grows_born_norm() {
    // the worked example's hallmark: |psi|^2 is not conserved and grows
    let preset = presets::sinx_preset(pilotwave::presets::SinxParams {
        points: 256,
        dt: 2e-3,
        stride: 100,
        t_final: 2.0,
        ..Default::default()
    })
    .unwrap();
    let op = HamiltonianOperator::new(preset.config.clone()).unwrap();
    let tl = propagate(
        &op,
        &preset.initial,
        Stepper::CrankNicolson,
        0.0,
        preset.dt,
        preset.n_steps(),
        preset.stride,
    )
    .unwrap();
    let growth = tl.born_norms.last().unwrap() / tl.born_norms[0];
    assert!(growth > 1.5, "expected nontrivial growth, got {growth}");
}

#[test]
fn runaway_imaginary_potential_reports_divergence_step() {
    let grid = GridSpec::new_1d(-10.0, 10.0, 64).unwrap();
    let cfg = scalar_config(
        grid.clone(),
        Coupling::new(0.0, 1.0).unwrap(),
        GaugeConfiguration::scalar(1, Arc::new(ConstField(1.0e4)), true),
    );
    let op = HamiltonianOperator::new(cfg).unwrap();
    let initial = presets::gaussian_1d(&grid, 0.0, 1.0, 0.0).unwrap();
    let res = propagate(&op, &initial, Stepper::CrankNicolson, 0.0, 1e-3, 1000, 100);
    match res {
        Err(PilotWaveError::Divergence { step, .. }) => {
            assert!(step > 0 && step <= 1000, "divergence step {step}");
        }
        Err(other) => panic!("expected divergence, got {other:?}"),
        Ok(_) => panic!("expected divergence, run completed"),
    }
}

#[test]
fn cn_step_rejects_non_1d_system() {
    let grid = GridSpec::new_2d([(-10.0, 10.0, 32), (-10.0, 10.0, 32)]).unwrap();
    let cfg = SystemConfig {
        kind: SystemKind::TwoParticle1d,
        grid: grid.clone(),
        constants: PhysicalConstants::default(),
        couplings: vec![Coupling::hermitian(0.0); 2],
        masses: vec![1.0; 2],
        gauge: GaugeConfiguration::free(1),
    };
    let op = HamiltonianOperator::new(cfg).unwrap();
    let st = presets::two_particle_gaussians(&grid, [0.0, 1.0], [1.0, 1.0], [0.0, 0.0], 0.0)
        .unwrap();
    assert!(step_crank_nicolson_1d(&op, &st, 0.0, 1e-3).is_err());
}

#[test]
fn gauge_coupling_consistency_constant_gradient() {
    // lambda = alpha x (a pure momentum shift, alpha tuned to the lattice):
    // A -> A + alpha with psi -> psi exp(i e alpha x / hbar c) leaves
    // <psi|H|psi>/<psi|psi> unchanged.
    let l = 16.0 * PI;
    let grid = GridSpec::new_1d(-l / 2.0, l / 2.0, 512).unwrap();
    let e_charge = 1.0;
    // e * alpha * L / (hbar c) = 2 pi n  ->  alpha = 2 pi n hbar c / (e L)
    let alpha = 2.0 * PI * 3.0 / l;
    let gauge0 = GaugeConfiguration::new(
        Arc::new(FnField(|x: [f64; 2], _| 0.3 * x[0].cos())),
        vec![Arc::new(FnField(|x: [f64; 2], _| 0.2 * x[0].sin()))],
        None,
        true,
    );
    let gauge1 = GaugeConfiguration::new(
        Arc::new(FnField(|x: [f64; 2], _| 0.3 * x[0].cos())),
        vec![Arc::new(FnField(move |x: [f64; 2], _| 0.2 * x[0].sin() + alpha))],
        None,
        true,
    );
    let cfg0 = scalar_config(grid.clone(), Coupling::hermitian(e_charge), gauge0);
    let cfg1 = scalar_config(grid.clone(), Coupling::hermitian(e_charge), gauge1);
    let op0 = HamiltonianOperator::new(cfg0).unwrap();
    let op1 = HamiltonianOperator::new(cfg1).unwrap();
    let psi0 = presets::gaussian_1d(&grid, 0.5, 1.5, 0.7).unwrap();
    let f0 = psi0.as_scalar().unwrap();
    let shifted = ComplexScalarField::new(
        grid.clone(),
        (0..grid.total_points())
            .map(|i| {
                let x = grid.coords(i)[0];
                f0.values[i] * C64::new(0.0, e_charge * alpha * x).exp()
            })
            .collect(),
        0.0,
    )
    .unwrap();
    let psi1 = QuantumState::Scalar(shifted);
    let energy = |op: &HamiltonianOperator, st: &QuantumState| -> C64 {
        let h = op.apply(st, 0.0).unwrap();
        let hs = h.as_scalar().unwrap();
        let ss = st.as_scalar().unwrap();
        let num: C64 = ss
            .values
            .iter()
            .zip(&hs.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let den: f64 = ss.values.iter().map(|a| a.norm_sqr()).sum();
        num / den
    };
    let e0 = energy(&op0, &psi0);
    let e1 = energy(&op1, &psi1);
    assert!((e0 - e1).norm() < 1e-10, "energy changed under gauge shift: {e0} vs {e1}");
}
