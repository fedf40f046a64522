//! External gauge potentials and the complex coupling.
//!
//! Conventions (mostly-negative metric): `A^mu = (phi, A)`, and the line
//! integral entering the scale factor is
//! `int A^mu dx_mu = int phi c dt - int A . dx`.
//! A gauge transform acts as `A -> A + grad lambda`,
//! `phi -> phi - d lambda / d(ct)`.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{PilotWaveError, Result};
use crate::grid::GridSpec;
use crate::interp::interpolate_real;

/// Real electromagnetic charge `e` and the imaginary coupling component `e_I`;
/// the full coupling is `e_C = e + i e_I`. The Hermitian limit is `e_I = 0`
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub e: f64,
    pub e_i: f64,
}

impl Coupling {
    pub fn new(e: f64, e_i: f64) -> Result<Self> {
        if !e.is_finite() || !e_i.is_finite() {
            return Err(PilotWaveError::config("coupling must be finite"));
        }
        Ok(Coupling { e, e_i })
    }

    pub fn hermitian(e: f64) -> Self {
        Coupling { e, e_i: 0.0 }
    }

    pub fn e_c(&self) -> C64 {
        C64::new(self.e, self.e_i)
    }

    pub fn is_hermitian(&self) -> bool {
        self.e_i == 0.0
    }
}

/// A real function of space and time, evaluable anywhere on the domain.
pub trait FieldFn: Send + Sync {
    fn value(&self, x: [f64; 2], t: f64) -> f64;
}

/// A gauge function `lambda(x, t)` with analytic first partials, as required
/// to transform the potentials.
pub trait GaugeFn: Send + Sync {
    fn value(&self, x: [f64; 2], t: f64) -> f64;
    /// Spatial gradient.
    fn grad(&self, x: [f64; 2], t: f64) -> [f64; 2];
    /// Time partial.
    fn dt(&self, x: [f64; 2], t: f64) -> f64;
}

/// Constant in space and time.
pub struct ConstField(pub f64);

impl FieldFn for ConstField {
    fn value(&self, _x: [f64; 2], _t: f64) -> f64 {
        self.0
    }
}

/// Wrap a closure as a field.
pub struct FnField<F>(pub F);

impl<F> FieldFn for FnField<F>
where
    F: Fn([f64; 2], f64) -> f64 + Send + Sync,
{
    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        (self.0)(x, t)
    }
}

/// Gauge function built from closures supplying the partials analytically.
pub struct FnGauge<V, G, D> {
    pub value: V,
    pub grad: G,
    pub dt: D,
}

impl<V, G, D> GaugeFn for FnGauge<V, G, D>
where
    V: Fn([f64; 2], f64) -> f64 + Send + Sync,
    G: Fn([f64; 2], f64) -> [f64; 2] + Send + Sync,
    D: Fn([f64; 2], f64) -> f64 + Send + Sync,
{
    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        (self.value)(x, t)
    }
    fn grad(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        (self.grad)(x, t)
    }
    fn dt(&self, x: [f64; 2], t: f64) -> f64 {
        (self.dt)(x, t)
    }
}

/// Static field tabulated on a grid, interpolated between nodes.
pub struct TabulatedField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl FieldFn for TabulatedField {
    fn value(&self, x: [f64; 2], _t: f64) -> f64 {
        interpolate_real(&self.grid, &self.values, x)
    }
}

/// Scalar potential `phi` plus vector potential components.
///
/// `a` has one entry per spatial axis the potentials live on: one for the 1D
/// systems (including the two-particle system, whose physical space is 1D),
/// two for the Pauli system. `b_z` is the magnetic field `dA_y/dx - dA_x/dy`,
/// supplied analytically where the Pauli term needs it; it is gauge invariant,
/// so transformed configurations reuse it.
#[derive(Clone)]
pub struct GaugeConfiguration {
    pub phi: Arc<dyn FieldFn>,
    pub a: Vec<Arc<dyn FieldFn>>,
    pub b_z: Option<Arc<dyn FieldFn>>,
    /// True when the vector potential is identically zero (skips work).
    pub a_is_zero: bool,
    /// True when neither potential depends on time (enables caching).
    pub is_static: bool,
}

impl GaugeConfiguration {
    /// No potentials at all.
    pub fn free(spatial_dim: usize) -> Self {
        GaugeConfiguration {
            phi: Arc::new(ConstField(0.0)),
            a: (0..spatial_dim).map(|_| Arc::new(ConstField(0.0)) as Arc<dyn FieldFn>).collect(),
            b_z: Some(Arc::new(ConstField(0.0))),
            a_is_zero: true,
            is_static: true,
        }
    }

    /// Scalar potential only.
    pub fn scalar(spatial_dim: usize, phi: Arc<dyn FieldFn>, is_static: bool) -> Self {
        GaugeConfiguration {
            phi,
            a: (0..spatial_dim).map(|_| Arc::new(ConstField(0.0)) as Arc<dyn FieldFn>).collect(),
            b_z: Some(Arc::new(ConstField(0.0))),
            a_is_zero: true,
            is_static,
        }
    }

    pub fn new(
        phi: Arc<dyn FieldFn>,
        a: Vec<Arc<dyn FieldFn>>,
        b_z: Option<Arc<dyn FieldFn>>,
        is_static: bool,
    ) -> Self {
        GaugeConfiguration { phi, a, b_z, a_is_zero: false, is_static }
    }

    pub fn spatial_dim(&self) -> usize {
        self.a.len()
    }

    pub fn phi_at(&self, x: [f64; 2], t: f64) -> f64 {
        self.phi.value(x, t)
    }

    pub fn a_at(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        if !self.a_is_zero {
            for (k, a) in self.a.iter().enumerate() {
                out[k] = a.value(x, t);
            }
        }
        out
    }

    pub fn b_z_at(&self, x: [f64; 2], t: f64) -> f64 {
        self.b_z.as_ref().map(|b| b.value(x, t)).unwrap_or(0.0)
    }

    /// Sample `phi` on all grid nodes.
    pub fn sample_phi(&self, grid: &GridSpec, t: f64) -> Vec<f64> {
        (0..grid.total_points()).map(|i| self.phi.value(grid.coords(i), t)).collect()
    }

    /// Sample one vector-potential component on all grid nodes.
    pub fn sample_a(&self, grid: &GridSpec, axis: usize, t: f64) -> Vec<f64> {
        if self.a_is_zero {
            return vec![0.0; grid.total_points()];
        }
        (0..grid.total_points()).map(|i| self.a[axis].value(grid.coords(i), t)).collect()
    }

    pub fn sample_b_z(&self, grid: &GridSpec, t: f64) -> Vec<f64> {
        match &self.b_z {
            Some(b) => (0..grid.total_points()).map(|i| b.value(grid.coords(i), t)).collect(),
            None => vec![0.0; grid.total_points()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_limits() {
        let c = Coupling::new(1.0, 0.5).unwrap();
        assert_eq!(c.e_c(), C64::new(1.0, 0.5));
        assert!(!c.is_hermitian());
        assert!(Coupling::hermitian(2.0).is_hermitian());
        assert!(Coupling::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn free_configuration_is_zero() {
        let g = GaugeConfiguration::free(2);
        assert_eq!(g.phi_at([1.0, 2.0], 3.0), 0.0);
        assert_eq!(g.a_at([1.0, 2.0], 3.0), [0.0, 0.0]);
        assert!(g.a_is_zero);
    }

    #[test]
    fn tabulated_field_interpolates() {
        let grid = GridSpec::new_1d(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        let values: Vec<f64> = (0..64).map(|i| grid.axis(0).node(i).sin()).collect();
        let tf = TabulatedField { grid, values };
        let x = 1.234;
        assert!((tf.value([x, 0.0], 0.0) - x.sin()).abs() < 1e-6);
    }
}
