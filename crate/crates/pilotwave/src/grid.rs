use crate::error::{PilotWaveError, Result};

/// One periodic axis: nodes at `min + i * dx`, `i = 0..points`, with
/// `dx = (max - min) / points`. The right endpoint is identified with the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn len(&self) -> f64 {
        self.max - self.min
    }

    pub fn dx(&self) -> f64 {
        self.len() / self.points as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.min + i as f64 * self.dx()
    }

    /// Wrap a coordinate into `[min, max)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.len();
        let mut y = (x - self.min).rem_euclid(l) + self.min;
        // rem_euclid can round to exactly `l` when x is a hair below min.
        if y >= self.max {
            y -= l;
        }
        y
    }
}

/// Periodic, power-of-two sampling grid in 1 or 2 dimensions.
///
/// 2D storage is row-major with x fastest: `index = iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new_1d(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis { min, max, points }])
    }

    pub fn new_2d(axes: [(f64, f64, usize); 2]) -> Result<Self> {
        Self::new(
            axes.iter()
                .map(|&(min, max, points)| Axis { min, max, points })
                .collect(),
        )
    }

    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(PilotWaveError::config(format!(
                "grids must be 1D or 2D, got {} axes",
                axes.len()
            )));
        }
        for (i, ax) in axes.iter().enumerate() {
            if !(ax.max > ax.min) || !ax.min.is_finite() || !ax.max.is_finite() {
                return Err(PilotWaveError::config(format!(
                    "axis {i}: invalid extent [{}, {})",
                    ax.min, ax.max
                )));
            }
            if ax.points < 16 || !ax.points.is_power_of_two() {
                return Err(PilotWaveError::config(format!(
                    "axis {i}: points must be a power of two >= 16, got {}",
                    ax.points
                )));
            }
        }
        Ok(GridSpec { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn total_points(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    /// Cell volume `dx` (1D) or `dx * dy` (2D).
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.dx()).product()
    }

    /// Smallest axis spacing; used for CFL-style step control.
    pub fn min_dx(&self) -> f64 {
        self.axes.iter().map(|a| a.dx()).fold(f64::INFINITY, f64::min)
    }

    /// Coordinates of flat node index.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        match self.axes.len() {
            1 => [self.axes[0].node(idx), 0.0],
            _ => {
                let nx = self.axes[0].points;
                [self.axes[0].node(idx % nx), self.axes[1].node(idx / nx)]
            }
        }
    }

    /// Flat index from per-axis node indices.
    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        match self.axes.len() {
            1 => ix,
            _ => iy * self.axes[0].points + ix,
        }
    }

    /// Wrap a configuration-space point into the domain, component-wise.
    pub fn wrap_point(&self, q: [f64; 2]) -> [f64; 2] {
        let mut out = q;
        for (k, ax) in self.axes.iter().enumerate() {
            out[k] = ax.wrap(q[k]);
        }
        out
    }
}
