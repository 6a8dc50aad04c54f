//! Four-velocity bookkeeping and the light-cone variable s = gamma - u_z.
//!
//! States are carried as (u_perp, u_z, gamma, s) with gamma and s redundant;
//! constructors keep the mass shell gamma^2 - |u|^2 = 1 exact by building the
//! redundant entries from the independent ones instead of re-rooting.

use crate::constants::{E_CHARGE, M_ELECTRON, M_PROTON};
use crate::error::Error;
use crate::Result;
use nalgebra::{Vector2, Vector3};

/// A point charge species: mass (g) and signed charge (statC).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Species {
    pub mass: f64,
    pub charge: f64,
}

impl Species {
    /// Electron: mass m_e, charge -e.
    pub fn electron() -> Self {
        Species { mass: M_ELECTRON, charge: -E_CHARGE }
    }

    /// Proton: mass m_p, charge +e.
    pub fn proton() -> Self {
        Species { mass: M_PROTON, charge: E_CHARGE }
    }

    /// Generic ion of `a` atomic mass units (approximated as a multiples of
    /// the proton mass) carrying `z` elementary charges.
    pub fn ion(a: f64, z: f64) -> Self {
        Species { mass: a * M_PROTON, charge: z * E_CHARGE }
    }

    /// Rest energy m c^2 (erg).
    pub fn rest_energy(&self) -> f64 {
        self.mass * crate::constants::C * crate::constants::C
    }

    /// Coupling q/(m c^2) (1/statvolt = cm/erg * statC), the factor turning a
    /// vector potential into a dimensionless four-velocity.
    pub fn coupling(&self) -> f64 {
        self.charge / self.rest_energy()
    }

    /// Transverse four-velocity induced by a transverse vector potential:
    /// u_perp = -q a_perp / (m c^2), the conserved transverse canonical
    /// momentum written for a particle that starts at rest ahead of the wave.
    pub fn transverse_momentum(&self, a_perp: Vector2<f64>) -> Vector2<f64> {
        -self.coupling() * a_perp
    }
}

/// Instantaneous kinematic state of a particle.
///
/// `u_perp` and `u_z` are the space components of the four-velocity
/// u = (gamma, gamma*beta); `s = gamma - u_z` is the light-cone combination
/// that stays exactly 1 along every zero-density trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub u_perp: Vector2<f64>,
    pub u_z: f64,
    pub gamma: f64,
    pub s: f64,
}

impl KinematicState {
    /// Particle at rest.
    pub fn rest() -> Self {
        KinematicState { u_perp: Vector2::zeros(), u_z: 0.0, gamma: 1.0, s: 1.0 }
    }

    /// Build from the spatial four-velocity; gamma is rebuilt from the mass
    /// shell, s from its definition.
    pub fn from_four_velocity(u_perp: Vector2<f64>, u_z: f64) -> Self {
        let gamma = (1.0 + u_perp.norm_squared() + u_z * u_z).sqrt();
        KinematicState { u_perp, u_z, gamma, s: gamma - u_z }
    }

    /// Rational recovery of the full state from (u_perp, s):
    /// gamma = (1 + |u_perp|^2 + s^2) / (2s), u_z = (1 + |u_perp|^2 - s^2) / (2s).
    ///
    /// Errors on non-positive or non-finite s.
    pub fn from_s(u_perp: Vector2<f64>, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain(format!("light-cone variable s must be positive, got {s}")));
        }
        let p = 1.0 + u_perp.norm_squared();
        let gamma = (p + s * s) / (2.0 * s);
        let u_z = (p - s * s) / (2.0 * s);
        Ok(KinematicState { u_perp, u_z, gamma, s })
    }

    /// Spatial four-velocity as a 3-vector (x, y, z).
    pub fn u(&self) -> Vector3<f64> {
        Vector3::new(self.u_perp.x, self.u_perp.y, self.u_z)
    }

    /// Transverse velocity beta_perp = u_perp / gamma.
    pub fn beta_perp(&self) -> Vector2<f64> {
        self.u_perp / self.gamma
    }

    /// Longitudinal velocity. In terms of (u_perp, s):
    /// beta_z = (1 + |u_perp|^2 - s^2) / (1 + |u_perp|^2 + s^2).
    pub fn beta_z(&self) -> f64 {
        self.u_z / self.gamma
    }

    /// Velocity 3-vector.
    pub fn beta(&self) -> Vector3<f64> {
        self.u() / self.gamma
    }

    /// Mass-shell residual gamma^2 - |u|^2 - 1 (zero up to roundoff for states
    /// built by the constructors).
    pub fn mass_shell_residual(&self) -> f64 {
        self.gamma * self.gamma - self.u().norm_squared() - 1.0
    }
}
