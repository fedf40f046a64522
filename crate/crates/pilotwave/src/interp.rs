//! Periodic interpolation.
//!
//! Grid fields use an 8-point local Lagrange stencil per axis (tensor product
//! in 2D). Queries landing exactly on a node return the stored value bitwise.
//! Scattered comoving data uses a monotone piecewise cubic (Fritsch-Carlson),
//! which never overshoots and so keeps positive data positive.

use num_complex::Complex64 as C64;

use crate::grid::GridSpec;

const STENCIL: usize = 8;
const OFFSET_LO: isize = -3; // stencil covers nodes j0-3 ..= j0+4
/// Denominators of the Lagrange basis over integer offsets -3..=4.
const DENOM: [f64; STENCIL] =
    [-5040.0, 720.0, -240.0, 144.0, -144.0, 240.0, -720.0, 5040.0];

struct AxisQuery {
    /// Index of the node at or left of the query point.
    base: usize,
    /// Fractional offset in [0, 1); 0 means "exactly on node `base`".
    frac: f64,
}

fn locate(grid: &GridSpec, axis: usize, x: f64) -> AxisQuery {
    let ax = grid.axis(axis);
    let xw = ax.wrap(x);
    let u = (xw - ax.min) / ax.dx();
    let mut base = u.floor() as isize;
    let mut frac = u - base as f64;
    let n = ax.points as isize;
    if frac >= 1.0 {
        base += 1;
        frac = 0.0;
    }
    if base >= n {
        base -= n;
    }
    AxisQuery { base: base as usize, frac }
}

fn lagrange_weights(s: f64) -> [f64; STENCIL] {
    // Full product over the stencil, then divide back out per node.
    let mut p = 1.0;
    for m in 0..STENCIL {
        p *= s - (OFFSET_LO + m as isize) as f64;
    }
    let mut w = [0.0; STENCIL];
    for m in 0..STENCIL {
        let sm = s - (OFFSET_LO + m as isize) as f64;
        w[m] = p / (sm * DENOM[m]);
    }
    w
}

fn wrap_index(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Interpolate a complex grid field at an arbitrary point (wrapped into the
/// domain). Total on any finite input.
pub fn interpolate_complex(grid: &GridSpec, values: &[C64], point: [f64; 2]) -> C64 {
    match grid.dim() {
        1 => {
            let q = locate(grid, 0, point[0]);
            if q.frac == 0.0 {
                return values[q.base];
            }
            let n = grid.axis(0).points;
            let w = lagrange_weights(q.frac);
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..STENCIL {
                let j = wrap_index(q.base as isize + OFFSET_LO + m as isize, n);
                acc += w[m] * values[j];
            }
            acc
        }
        _ => {
            let qx = locate(grid, 0, point[0]);
            let qy = locate(grid, 1, point[1]);
            let nx = grid.axis(0).points;
            let ny = grid.axis(1).points;
            if qx.frac == 0.0 && qy.frac == 0.0 {
                return values[grid.flat(qx.base, qy.base)];
            }
            let wx = lagrange_weights(qx.frac);
            let wy = lagrange_weights(qy.frac);
            let mut acc = C64::new(0.0, 0.0);
            for my in 0..STENCIL {
                let jy = wrap_index(qy.base as isize + OFFSET_LO + my as isize, ny);
                let mut row = C64::new(0.0, 0.0);
                for mx in 0..STENCIL {
                    let jx = wrap_index(qx.base as isize + OFFSET_LO + mx as isize, nx);
                    row += wx[mx] * values[jy * nx + jx];
                }
                acc += wy[my] * row;
            }
            acc
        }
    }
}

/// Interpolate a real grid field.
pub fn interpolate_real(grid: &GridSpec, values: &[f64], point: [f64; 2]) -> f64 {
    match grid.dim() {
        1 => {
            let q = locate(grid, 0, point[0]);
            if q.frac == 0.0 {
                return values[q.base];
            }
            let n = grid.axis(0).points;
            let w = lagrange_weights(q.frac);
            let mut acc = 0.0;
            for m in 0..STENCIL {
                let j = wrap_index(q.base as isize + OFFSET_LO + m as isize, n);
                acc += w[m] * values[j];
            }
            acc
        }
        _ => {
            let qx = locate(grid, 0, point[0]);
            let qy = locate(grid, 1, point[1]);
            let nx = grid.axis(0).points;
            let ny = grid.axis(1).points;
            if qx.frac == 0.0 && qy.frac == 0.0 {
                return values[grid.flat(qx.base, qy.base)];
            }
            let wx = lagrange_weights(qx.frac);
            let wy = lagrange_weights(qy.frac);
            let mut acc = 0.0;
            for my in 0..STENCIL {
                let jy = wrap_index(qy.base as isize + OFFSET_LO + my as isize, ny);
                let mut row = 0.0;
                for mx in 0..STENCIL {
                    let jx = wrap_index(qx.base as isize + OFFSET_LO + mx as isize, nx);
                    row += wx[mx] * values[jy * nx + jx];
                }
                acc += wy[my] * row;
            }
            acc
        }
    }
}

/// Monotone piecewise-cubic interpolant (Fritsch-Carlson) over scattered,
/// strictly increasing abscissas on a periodic domain of the given period.
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    period: f64,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, spanning less than one period.
    pub fn new_periodic(xs: Vec<f64>, ys: Vec<f64>, period: f64) -> Option<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n || !(period > 0.0) {
            return None;
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs[n - 1] - xs[0] >= period {
            return None;
        }
        // Periodic ghost intervals on both ends.
        let mut h = Vec::with_capacity(n + 1);
        let mut d = Vec::with_capacity(n + 1);
        // interval i connects node i-1 to node i in the extended indexing below
        let h_wrap = period - (xs[n - 1] - xs[0]);
        let d_wrap = (ys[0] - ys[n - 1]) / h_wrap;
        h.push(h_wrap);
        d.push(d_wrap);
        for i in 0..n - 1 {
            h.push(xs[i + 1] - xs[i]);
            d.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        h.push(h_wrap);
        d.push(d_wrap);
        let mut slopes = vec![0.0; n];
        for i in 0..n {
            let (d0, d1) = (d[i], d[i + 1]);
            slopes[i] = if d0 * d1 <= 0.0 {
                0.0
            } else {
                let (h0, h1) = (h[i], h[i + 1]);
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / d0 + w2 / d1)
            };
        }
        Some(MonotoneCubic { xs, ys, slopes, period })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        // Map into [xs[0], xs[0] + period).
        let mut u = (x - self.xs[0]).rem_euclid(self.period) + self.xs[0];
        if u - self.xs[0] >= self.period {
            u -= self.period;
        }
        // Find the interval; the wrap interval connects node n-1 back to node 0.
        let (x0, x1, y0, y1, m0, m1) = if u >= self.xs[n - 1] {
            (
                self.xs[n - 1],
                self.xs[0] + self.period,
                self.ys[n - 1],
                self.ys[0],
                self.slopes[n - 1],
                self.slopes[0],
            )
        } else {
            let i = match self.xs.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
                Ok(i) => i,
                Err(i) => i.saturating_sub(1),
            };
            let i = i.min(n - 2);
            (
                self.xs[i],
                self.xs[i + 1],
                self.ys[i],
                self.ys[i + 1],
                self.slopes[i],
                self.slopes[i + 1],
            )
        };
        let h = x1 - x0;
        let t = (u - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn nodal_queries_are_bitwise_exact() {
        let grid = GridSpec::new_1d(-3.0, 5.0, 32).unwrap();
        let values: Vec<C64> =
            (0..32).map(|i| C64::new((i as f64).sin(), (i as f64).cos())).collect();
        for i in 0..32 {
            let x = grid.axis(0).node(i);
            let v = interpolate_complex(&grid, &values, [x, 0.0]);
            assert_eq!(v, values[i]);
        }
    }

    #[test]
    fn linear_function_reproduced_interior() {
        // Away from the wrap seam an 8-point stencil reproduces low-degree
        // polynomials exactly.
        let grid = GridSpec::new_1d(0.0, 16.0, 64).unwrap();
        let f = |x: f64| 2.0 * x - 5.0;
        let values: Vec<f64> = (0..64).map(|i| f(grid.axis(0).node(i))).collect();
        for j in 10..50 {
            let x = grid.axis(0).node(j) + 0.5 * grid.axis(0).dx();
            let v = interpolate_real(&grid, &values, [x, 0.0]);
            assert!((v - f(x)).abs() < 1e-12, "at {x}: {v} vs {}", f(x));
        }
    }

    #[test]
    fn plane_wave_accuracy() {
        let n = 256;
        let l = 2.0 * PI;
        let grid = GridSpec::new_1d(0.0, l, n).unwrap();
        let k = 2.0 * PI * 4.0 / l;
        let values: Vec<C64> = (0..n)
            .map(|i| C64::new(0.0, k * grid.axis(0).node(i)).exp())
            .collect();
        let mut max_err: f64 = 0.0;
        for j in 0..n {
            for s in [0.21, 0.5, 0.83] {
                let x = grid.axis(0).node(j) + s * grid.axis(0).dx();
                let v = interpolate_complex(&grid, &values, [x, 0.0]);
                let exact = C64::new(0.0, k * x).exp();
                max_err = max_err.max((v - exact).norm());
            }
        }
        assert!(max_err < 1e-8, "plane-wave interp error {max_err}");
    }

    #[test]
    fn bicubic_2d_plane_wave() {
        let grid = GridSpec::new_2d([(0.0, 2.0 * PI, 128), (0.0, 2.0 * PI, 128)]).unwrap();
        let (kx, ky) = (3.0, 2.0);
        let values: Vec<C64> = (0..grid.total_points())
            .map(|i| {
                let [x, y] = grid.coords(i);
                C64::new(0.0, kx * x + ky * y).exp()
            })
            .collect();
        let mut max_err: f64 = 0.0;
        for &(x, y) in &[(0.37, 1.21), (3.4, 5.9), (6.1, 0.05), (2.0, 2.0)] {
            let v = interpolate_complex(&grid, &values, [x, y]);
            let exact = C64::new(0.0, kx * x + ky * y).exp();
            max_err = max_err.max((v - exact).norm());
        }
        assert!(max_err < 1e-8, "2d interp error {max_err}");
    }

    #[test]
    fn wrapped_queries_match_periodic_extension() {
        let grid = GridSpec::new_1d(0.0, 2.0 * PI, 64).unwrap();
        let values: Vec<f64> =
            (0..64).map(|i| (grid.axis(0).node(i)).sin()).collect();
        let a = interpolate_real(&grid, &values, [0.3, 0.0]);
        let b = interpolate_real(&grid, &values, [0.3 + 2.0 * PI, 0.0]);
        let c = interpolate_real(&grid, &values, [0.3 - 4.0 * PI, 0.0]);
        assert!((a - b).abs() < 1e-12);
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn monotone_cubic_no_overshoot() {
        let xs: Vec<f64> = vec![0.0, 1.0, 2.0, 3.1, 4.0, 5.5];
        let ys: Vec<f64> = vec![1.0, 1.0, 2.0, 8.0, 8.2, 1.2];
        let mc = MonotoneCubic::new_periodic(xs.clone(), ys.clone(), 7.0).unwrap();
        // interpolates the data
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((mc.eval(*x) - y).abs() < 1e-12);
        }
        // stays within the local data range on each interval
        for i in 0..xs.len() - 1 {
            let (lo, hi) = (ys[i].min(ys[i + 1]), ys[i].max(ys[i + 1]));
            for k in 1..20 {
                let x = xs[i] + (xs[i + 1] - xs[i]) * k as f64 / 20.0;
                let v = mc.eval(x);
                assert!(
                    v >= lo - 1e-12 && v <= hi + 1e-12,
                    "overshoot at {x}: {v} not in [{lo}, {hi}]"
                );
            }
        }
    }
}
