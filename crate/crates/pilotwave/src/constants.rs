use crate::error::{PilotWaveError, Result};

/// Fundamental constants threaded through every operator.
///
/// Defaults to natural units `hbar = c = 1`, matching the worked examples.
/// Both are injectable for dimensional runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: 1.0, c: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, c: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(PilotWaveError::config(format!("hbar must be positive, got {hbar}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(PilotWaveError::config(format!("c must be positive, got {c}")));
        }
        Ok(PhysicalConstants { hbar, c })
    }
}

/// Relative threshold on `|psi|^2` below which a grid point is treated as a
/// wavefunction node: phase gradients and velocities there are unreliable and
/// get masked. Relative to `max |psi|^2` over the grid.
pub const NODE_EPS_REL: f64 = 1e-12;

/// Velocities at masked nodes are capped at this multiple of the largest
/// unmasked velocity.
pub const VELOCITY_CAP_FACTOR: f64 = 10.0;

/// A trajectory is marked unreliable when more than this fraction of its
/// samples were flagged (masked-region crossings).
pub const TRAJECTORY_FLAG_FRACTION: f64 = 0.01;

/// A density snapshot is marked degraded when more than this fraction of its
/// supporting trajectories were unreliable.
pub const SNAPSHOT_DEGRADED_FRACTION: f64 = 0.05;

/// Nodes with `|psi|^2` below this fraction of the maximum carry negligible
/// density; reconstruction skips tracing them.
pub const SUPPORT_EPS_REL: f64 = 1e-14;
