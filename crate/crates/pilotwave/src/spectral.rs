//! FFT-based derivatives on periodic grids.
//!
//! Exact for band-limited fields. First derivatives zero the Nyquist mode (its
//! sign is ambiguous under `ik`); the Laplacian keeps it with the full `-k^2`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{PilotWaveError, Result};
use crate::grid::GridSpec;

/// Cached FFT plans and wavenumbers for a grid. Cheap to clone (plans shared).
#[derive(Clone)]
pub struct SpectralGrid {
    grid: GridSpec,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Angular wavenumbers per axis, FFT ordering.
    k: Vec<Vec<f64>>,
}

impl SpectralGrid {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        let mut planner = FftPlanner::new();
        let mut forward = Vec::new();
        let mut inverse = Vec::new();
        let mut k = Vec::new();
        for ax in grid.axes() {
            let n = ax.points;
            if !n.is_power_of_two() {
                return Err(PilotWaveError::config(format!(
                    "spectral derivatives require power-of-two grids, got {n}"
                )));
            }
            forward.push(planner.plan_fft_forward(n));
            inverse.push(planner.plan_fft_inverse(n));
            let dk = 2.0 * std::f64::consts::PI / ax.len();
            k.push(
                (0..n)
                    .map(|i| {
                        let f = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                        f * dk
                    })
                    .collect(),
            );
        }
        Ok(SpectralGrid { grid: grid.clone(), forward, inverse, k })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Wavenumbers along `axis` in FFT ordering.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.k[axis]
    }

    /// Largest resolvable |k| over all axes.
    pub fn k_max(&self) -> f64 {
        self.k
            .iter()
            .flat_map(|ks| ks.iter().map(|k| k.abs()))
            .fold(0.0, f64::max)
    }

    fn lines(&self, axis: usize) -> (usize, usize, usize) {
        // (n_lines, line_len, stride within a line)
        let nx = self.grid.axis(0).points;
        match (self.grid.dim(), axis) {
            (1, 0) => (1, nx, 1),
            (2, 0) => (self.grid.axis(1).points, nx, 1),
            (2, 1) => (nx, self.grid.axis(1).points, nx),
            _ => unreachable!("axis out of range"),
        }
    }

    /// Apply `multiplier[k]` in Fourier space along one axis, in place.
    fn apply_axis_multiplier(&self, values: &mut [C64], axis: usize, mult: &[C64]) {
        let (n_lines, len, stride) = self.lines(axis);
        let fwd = &self.forward[axis];
        let inv = &self.inverse[axis];
        let norm = 1.0 / len as f64;
        let mut line = vec![C64::default(); len];
        let mut scratch = vec![C64::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        for l in 0..n_lines {
            let base = if stride == 1 { l * len } else { l };
            for j in 0..len {
                line[j] = values[base + j * stride];
            }
            fwd.process_with_scratch(&mut line, &mut scratch);
            for j in 0..len {
                line[j] *= mult[j] * norm;
            }
            inv.process_with_scratch(&mut line, &mut scratch);
            for j in 0..len {
                values[base + j * stride] = line[j];
            }
        }
    }

    /// Spectral partial derivative along `axis`.
    pub fn gradient_axis(&self, values: &[C64], axis: usize) -> Vec<C64> {
        let n = self.grid.axis(axis).points;
        let mult: Vec<C64> = self.k[axis]
            .iter()
            .enumerate()
            .map(|(i, &k)| if i == n / 2 { C64::new(0.0, 0.0) } else { C64::new(0.0, k) })
            .collect();
        let mut out = values.to_vec();
        self.apply_axis_multiplier(&mut out, axis, &mult);
        out
    }

    /// Second derivative along a single axis.
    pub fn laplacian_axis(&self, values: &[C64], axis: usize) -> Vec<C64> {
        let mult: Vec<C64> =
            self.k[axis].iter().map(|&k| C64::new(-k * k, 0.0)).collect();
        let mut out = values.to_vec();
        self.apply_axis_multiplier(&mut out, axis, &mult);
        out
    }

    /// Spectral Laplacian over all axes.
    pub fn laplacian(&self, values: &[C64]) -> Vec<C64> {
        let mut out = values.to_vec();
        for axis in 0..self.grid.dim() {
            let mult: Vec<C64> =
                self.k[axis].iter().map(|&k| C64::new(-k * k, 0.0)).collect();
            if axis == 0 {
                self.apply_axis_multiplier(&mut out, 0, &mult);
            } else {
                let mut part = values.to_vec();
                self.apply_axis_multiplier(&mut part, axis, &mult);
                for (o, p) in out.iter_mut().zip(part.iter()) {
                    *o += p;
                }
            }
        }
        out
    }

    /// Forward transform along every axis (unnormalized), for diagnostics.
    pub fn forward_full(&self, values: &[C64]) -> Vec<C64> {
        let mut out = values.to_vec();
        for axis in 0..self.grid.dim() {
            let (n_lines, len, stride) = self.lines(axis);
            let fwd = &self.forward[axis];
            let mut line = vec![C64::default(); len];
            let mut scratch = vec![C64::default(); fwd.get_inplace_scratch_len()];
            for l in 0..n_lines {
                let base = if stride == 1 { l * len } else { l };
                for j in 0..len {
                    line[j] = out[base + j * stride];
                }
                fwd.process_with_scratch(&mut line, &mut scratch);
                for j in 0..len {
                    out[base + j * stride] = line[j];
                }
            }
        }
        out
    }
}

/// Spectral derivative of a complex field along `axis`.
pub fn spectral_gradient(
    spectral: &SpectralGrid,
    values: &[C64],
    axis: usize,
) -> Result<Vec<C64>> {
    if axis >= spectral.grid().dim() {
        return Err(PilotWaveError::config(format!(
            "gradient axis {axis} out of range for {}D grid",
            spectral.grid().dim()
        )));
    }
    if values.len() != spectral.grid().total_points() {
        return Err(PilotWaveError::config("field length does not match grid".to_string()));
    }
    Ok(spectral.gradient_axis(values, axis))
}

/// Real-part helper: spectral derivative of a real field along `axis`.
pub fn spectral_gradient_real(
    spectral: &SpectralGrid,
    values: &[f64],
    axis: usize,
) -> Vec<f64> {
    let complex: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    spectral.gradient_axis(&complex, axis).iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn plane_wave(grid: &GridSpec, mode: i32) -> Vec<C64> {
        let k = 2.0 * PI * mode as f64 / grid.axis(0).len();
        (0..grid.total_points())
            .map(|i| {
                let x = grid.coords(i)[0];
                C64::new(0.0, k * x).exp()
            })
            .collect()
    }

    #[test]
    fn plane_wave_is_eigenfunction() {
        let grid = GridSpec::new_1d(0.0, 2.0 * PI, 64).unwrap();
        let sp = SpectralGrid::new(&grid).unwrap();
        let psi = plane_wave(&grid, 1);
        let dpsi = spectral_gradient(&sp, &psi, 0).unwrap();
        let k = 1.0;
        for (d, p) in dpsi.iter().zip(psi.iter()) {
            let expect = C64::new(0.0, k) * p;
            assert!((d - expect).norm() < 1e-12, "got {d}, want {expect}");
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        let grid = GridSpec::new_1d(-1.0, 3.0, 32).unwrap();
        let sp = SpectralGrid::new(&grid).unwrap();
        let psi = vec![C64::new(2.5, -0.5); 32];
        let dpsi = spectral_gradient(&sp, &psi, 0).unwrap();
        for d in dpsi {
            assert!(d.norm() < 1e-13);
        }
    }

    #[test]
    fn gradient_axis_out_of_range_errors() {
        let grid = GridSpec::new_1d(0.0, 1.0, 16).unwrap();
        let sp = SpectralGrid::new(&grid).unwrap();
        let psi = vec![C64::new(1.0, 0.0); 16];
        assert!(spectral_gradient(&sp, &psi, 1).is_err());
    }

    #[test]
    fn gaussian_refinement_agreement() {
        // Spectral derivative of a resolved Gaussian should not depend on N.
        let l = 40.0;
        let gauss = |x: f64| (-0.5 * x * x).exp();
        let coarse = GridSpec::new_1d(-l / 2.0, l / 2.0, 256).unwrap();
        let fine = GridSpec::new_1d(-l / 2.0, l / 2.0, 512).unwrap();
        let sp_c = SpectralGrid::new(&coarse).unwrap();
        let sp_f = SpectralGrid::new(&fine).unwrap();
        let f_c: Vec<C64> =
            (0..256).map(|i| C64::new(gauss(coarse.coords(i)[0]), 0.0)).collect();
        let f_f: Vec<C64> =
            (0..512).map(|i| C64::new(gauss(fine.coords(i)[0]), 0.0)).collect();
        let d_c = spectral_gradient(&sp_c, &f_c, 0).unwrap();
        let d_f = spectral_gradient(&sp_f, &f_f, 0).unwrap();
        // Every coarse node is an even fine node.
        let mut max_diff: f64 = 0.0;
        for i in 0..256 {
            max_diff = max_diff.max((d_c[i] - d_f[2 * i]).norm());
        }
        assert!(max_diff < 1e-10, "refinement disagreement {max_diff}");
    }

    #[test]
    fn laplacian_of_plane_wave_2d() {
        let grid = GridSpec::new_2d([(0.0, 2.0 * PI, 32), (0.0, 2.0 * PI, 16)]).unwrap();
        let sp = SpectralGrid::new(&grid).unwrap();
        let (kx, ky) = (3.0, 2.0);
        let psi: Vec<C64> = (0..grid.total_points())
            .map(|i| {
                let [x, y] = grid.coords(i);
                C64::new(0.0, kx * x + ky * y).exp()
            })
            .collect();
        let lap = sp.laplacian(&psi);
        for (l, p) in lap.iter().zip(psi.iter()) {
            let expect = -(kx * kx + ky * ky) * p;
            assert!((l - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn parseval_consistency() {
        // sum |d psi|^2 on the grid matches the mode-space computation.
        let grid = GridSpec::new_1d(0.0, 4.0, 128).unwrap();
        let sp = SpectralGrid::new(&grid).unwrap();
        // smooth band-limited field
        let psi: Vec<C64> = (0..128)
            .map(|i| {
                let x = grid.coords(i)[0];
                let t = 2.0 * PI * x / 4.0;
                C64::new((t.cos() + 0.3 * (2.0 * t).sin()).exp().cos(), (t * 2.0).sin())
            })
            .collect();
        let d = spectral_gradient(&sp, &psi, 0).unwrap();
        let direct: f64 = d.iter().map(|c| c.norm_sqr()).sum();
        let spec = sp.forward_full(&psi);
        let n = 128.0;
        let k = sp.wavenumbers(0);
        let mode_space: f64 = spec
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let kk = if i == 64 { 0.0 } else { k[i] };
                kk * kk * c.norm_sqr() / (n * n)
            })
            .sum::<f64>()
            * n;
        let rel = (direct - mode_space).abs() / direct.max(1e-300);
        assert!(rel < 1e-12, "Parseval mismatch rel {rel}");
    }
}
