//! Phase-space primitives of the zero-density solution and their monotone
//! inverse.
//!
//! For a particle of species h born at rest, the free-wave state depends on
//! spacetime only through xi = x0 - z, with u_perp = -q a_perp/(m c^2),
//! u_z = |u_perp|^2/2, gamma = 1 + u_z and s = gamma - u_z = 1. This module
//! tabulates the primitives
//!
//!   Y(xi)  = int_0^xi u(y) dy        (cm, 3-vector)
//!   Xi(xi) = xi + Y3(xi)             (cm, strictly increasing)
//!   V3(xi) = int_0^xi Y3(y) dy       (cm^2)
//!
//! and inverts Xi by bracketed Newton (d Xi/d xi = gamma >= 1). Beyond the
//! wave support the four-velocity is frozen, so Y continues linearly and V3
//! quadratically; those extensions are exact, not extrapolations.

use crate::error::Error;
use crate::kinematics::{KinematicState, Species};
use crate::numerics::{newton_bracketed, CumulativeTable};
use crate::pulse::WavePotential;
use crate::Result;
use nalgebra::{Vector2, Vector3};
use std::sync::Arc;

/// One row of the tabulation dump (`xi,Y3,Xi,V3`).
#[derive(Debug, Clone, Copy)]
pub struct PhaseSample {
    pub xi: f64,
    pub y3: f64,
    pub xi_fn: f64,
    pub v3: f64,
}

/// Cached primitives for one species in one wave.
pub struct PhaseFunctions {
    species: Species,
    potential: Arc<dyn WavePotential>,
    y_table: Arc<CumulativeTable<3>>,
    v3_table: CumulativeTable<1>,
    xi_max: f64,
    table_end: f64,
    /// Four-velocity after the wave has passed (frozen).
    u_final: Vector3<f64>,
    y_final: Vector3<f64>,
    v3_final: f64,
}

impl PhaseFunctions {
    /// Tabulate the primitives for `species` in `potential` up to `xi_max`
    /// (which must reach past the support end), each panel integrated to
    /// relative tolerance `tol`. Tables span [0, support end] with panels at
    /// most lambda/32 wide; the exact ballistic continuation covers the rest.
    pub fn build(
        species: Species,
        potential: Arc<dyn WavePotential>,
        xi_max: f64,
        tol: f64,
    ) -> Result<Self> {
        let (_, s_end) = potential.support();
        if !s_end.is_finite() || !(s_end > 0.0) {
            return Err(Error::domain(format!("wave support must end at finite xi > 0, got {s_end}")));
        }
        if !xi_max.is_finite() || xi_max < s_end {
            return Err(Error::domain(format!(
                "xi_max = {xi_max} must be finite and reach past the support end {s_end}"
            )));
        }
        let lambda = potential.oscillation_scale();

        let pot = Arc::clone(&potential);
        let u_of = move |xi: f64| -> [f64; 3] {
            let u_perp = species.transverse_momentum(pot.a_perp(xi));
            [u_perp.x, u_perp.y, 0.5 * u_perp.norm_squared()]
        };
        let y_table = Arc::new(CumulativeTable::build(
            Box::new(u_of),
            0.0,
            s_end,
            lambda / 32.0,
            &potential.breakpoints(),
            tol,
        )?);

        // Node-wise sanity: Y3 nondecreasing, Xi strictly increasing.
        {
            let nodes = y_table.nodes();
            let vals = y_table.node_values();
            for i in 1..nodes.len() {
                let dy3 = vals[i][2] - vals[i - 1][2];
                if dy3 < -1e-14 * (1.0 + vals[i - 1][2].abs()) {
                    return Err(Error::numerical(format!(
                        "Y3 decreased by {dy3:e} near xi = {:e}; u_z >= 0 violated",
                        nodes[i]
                    )));
                }
                if nodes[i] + vals[i][2] <= nodes[i - 1] + vals[i - 1][2] {
                    return Err(Error::numerical(format!(
                        "Xi not strictly increasing near xi = {:e}",
                        nodes[i]
                    )));
                }
            }
        }

        let inner = Arc::clone(&y_table);
        let y3_of = move |xi: f64| -> [f64; 1] { [inner.eval(xi)[2]] };
        let v3_table = CumulativeTable::build(
            Box::new(y3_of),
            0.0,
            s_end,
            lambda / 32.0,
            &potential.breakpoints(),
            tol,
        )?;

        let uf = y_table.integrand(s_end);
        let yf = y_table.value_at_end();
        Ok(PhaseFunctions {
            species,
            potential,
            u_final: Vector3::new(uf[0], uf[1], uf[2]),
            y_final: Vector3::new(yf[0], yf[1], yf[2]),
            v3_final: v3_table.value_at_end()[0],
            y_table,
            v3_table,
            xi_max,
            table_end: s_end,
        })
    }

    pub fn species(&self) -> Species {
        self.species
    }

    pub fn potential(&self) -> &Arc<dyn WavePotential> {
        &self.potential
    }

    /// Declared range of interest (the tables themselves end at the wave
    /// support; beyond it every quantity continues exactly).
    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    /// End of the wave support (cm).
    pub fn support_end(&self) -> f64 {
        self.table_end
    }

    /// Zero-density kinematic state at phase xi: s = 1 exactly, the rest
    /// follows rationally from u_perp.
    pub fn state(&self, xi: f64) -> KinematicState {
        let u_perp = self.species.transverse_momentum(self.potential.a_perp(xi));
        KinematicState::from_s(u_perp, 1.0).expect("s = 1 is always admissible")
    }

    fn y_raw(&self, xi: f64) -> Vector3<f64> {
        if xi <= 0.0 {
            Vector3::zeros()
        } else if xi >= self.table_end {
            self.y_final + (xi - self.table_end) * self.u_final
        } else {
            let y = self.y_table.eval(xi);
            Vector3::new(y[0], y[1], y[2])
        }
    }

    /// Y_perp(xi) = int_0^xi u_perp (cm).
    pub fn y_perp(&self, xi: f64) -> Vector2<f64> {
        let y = self.y_raw(xi);
        Vector2::new(y.x, y.y)
    }

    /// Y3(xi) = int_0^xi u_z (cm), nondecreasing.
    pub fn y3(&self, xi: f64) -> f64 {
        self.y_raw(xi).z
    }

    /// Full primitive vector (Y_perp, Y3).
    pub fn y(&self, xi: f64) -> Vector3<f64> {
        self.y_raw(xi)
    }

    /// Xi(xi) = xi + Y3(xi), strictly increasing, identity for xi <= 0.
    pub fn xi_fn(&self, xi: f64) -> f64 {
        xi + self.y3(xi)
    }

    /// V3(xi) = int_0^xi Y3 (cm^2), nonnegative, nondecreasing, convex.
    pub fn v3(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            0.0
        } else if xi >= self.table_end {
            let d = xi - self.table_end;
            self.v3_final + d * self.y_final.z + 0.5 * d * d * self.u_final.z
        } else {
            self.v3_table.eval(xi)[0]
        }
    }

    /// Solve Xi(xi) = eta. Monotonicity makes the root unique; below the
    /// wavefront and past the support the solution is closed-form, in
    /// between it is a node-bracketed Newton iteration with derivative
    /// gamma(xi) >= 1.
    pub fn xi_inverse(&self, eta: f64) -> Result<f64> {
        if !eta.is_finite() {
            return Err(Error::domain(format!("xi_inverse of non-finite input {eta}")));
        }
        if eta <= 0.0 {
            return Ok(eta);
        }
        let xi_at_end = self.table_end + self.y_final.z;
        if eta >= xi_at_end {
            // Linear continuation: Xi' = gamma_final exactly.
            return Ok(self.table_end + (eta - xi_at_end) / (1.0 + self.u_final.z));
        }
        let nodes = self.y_table.nodes();
        let vals = self.y_table.node_values();
        // Bracket by node: Xi at node i is nodes[i] + vals[i][2], increasing,
        // with Xi(first) = 0 < eta and Xi(last) = xi_at_end > eta here.
        let mut lo_i = 0usize;
        let mut hi_i = nodes.len() - 1;
        while hi_i - lo_i > 1 {
            let mid = (lo_i + hi_i) / 2;
            if nodes[mid] + vals[mid][2] < eta {
                lo_i = mid;
            } else {
                hi_i = mid;
            }
        }
        let (lo, hi) = (nodes[lo_i], nodes[hi_i]);
        let f_tol = 1e-13 * eta.max(1.0);
        let x_tol = 1e-15 * hi.abs().max(1.0);
        newton_bracketed(
            |x| {
                let f = self.xi_fn(x) - eta;
                let df = 1.0 + self.y_table.integrand(x)[2];
                (f, df)
            },
            lo,
            hi,
            x_tol,
            f_tol,
        )
    }

    /// Evenly spaced dump of (xi, Y3, Xi, V3) over [0, xi_max].
    pub fn samples(&self, n: usize) -> Vec<PhaseSample> {
        let n = n.max(2);
        (0..=n)
            .map(|i| {
                let xi = self.xi_max * (i as f64) / (n as f64);
                PhaseSample { xi, y3: self.y3(xi), xi_fn: self.xi_fn(xi), v3: self.v3(xi) }
            })
            .collect()
    }
}
