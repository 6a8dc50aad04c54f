//! First back-reaction correction of a step-density plasma on the exact
//! zero-density motion, and the slingshot energy estimate built on it.
//!
//! The plasma is a cold electron fluid, initially at rest, filling z >= 0 with
//! uniform density `n0` in front of singly charged ions that never move. While
//! electrons keep their longitudinal ordering, the electrostatic field on the
//! electron labelled by its initial position Z is
//!
//! ```text
//! E^z(x0, z) = 4 pi e n0 [ z theta(z) - Z theta(Z) ]
//! ```
//!
//! i.e. harmonic in the displacement once both stay positive. Feeding the
//! zero-density trajectory of [`crate::zero_density`] into that field yields a
//! correction exponent `r0`, a corrected light-cone variable `s1 = exp(r0)`,
//! and from it corrected velocity, displacement and transverse momentum. All
//! corrections are first order in the density constant
//!
//! ```text
//! K = pi e^2 n0 / (m_e c^2)      (1/cm^2)
//! ```
//!
//! and keep every zero-order quantity exact in the wave amplitude. The module
//! also evaluates the validity conditions of the expansion and the slingshot
//! estimate for the maximal energy of surface electrons expelled backwards
//! into the vacuum.

use crate::constants::{E_CHARGE, ME_C2, ME_C2_MEV};
use crate::kinematics::{KinematicState, Species};
use crate::numerics::quadrature::adaptive_gk;
use crate::numerics::rootfind::newton_bracketed;
use crate::phase::PhaseFunctions;
use crate::pulse::Pulse;
use crate::{Error, Result};
use nalgebra::Vector2;
use std::f64::consts::PI;

/// Relative tolerance of every adaptive quadrature in this module.
const QUAD_TOL: f64 = 1e-10;

/// Correction exponents above this are far outside the first-order regime and
/// would overflow `exp`; they are rejected instead of returning infinities.
const MAX_EXPONENT: f64 = 300.0;

// ---------- setup ----------

/// Uniform step-density plasma occupying z >= 0.
#[derive(Debug, Clone, Copy)]
pub struct PlasmaSetup {
    n0: f64,
    k: f64,
}

impl PlasmaSetup {
    /// `n0` is the electron (and ion) number density in cm^-3.
    pub fn new(n0: f64) -> Result<Self> {
        if !(n0 >= 0.0) || !n0.is_finite() {
            return Err(Error::domain(format!("plasma density must be nonnegative, got {n0}")));
        }
        let k = PI * E_CHARGE * E_CHARGE / ME_C2 * n0;
        Ok(PlasmaSetup { n0, k })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// Density constant K = pi e^2 n0 / (m_e c^2), in cm^-2.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Total charge density of the initial labels at `z_label`: electrons and
    /// static singly charged ions carry the same step profile, so this is
    /// exactly zero everywhere. Kept as an explicit bookkeeping check.
    pub fn neutrality_residual(&self, z_label: f64) -> f64 {
        let step = if z_label > 0.0 { self.n0 } else { 0.0 };
        let electrons = Species::electron().charge * step;
        let ions = E_CHARGE * step;
        electrons + ions
    }
}

/// Longitudinal electrostatic field (statvolt/cm) seen at height `z` by the
/// electron whose initial position is `z_label`, while longitudinal ordering
/// holds. Vanishes when the electron sits at its label and on the vacuum side.
pub fn longitudinal_field(setup: &PlasmaSetup, z: f64, z_label: f64) -> f64 {
    let zpart = if z > 0.0 { z } else { 0.0 };
    let lpart = if z_label > 0.0 { z_label } else { 0.0 };
    4.0 * PI * E_CHARGE * setup.n0 * (zpart - lpart)
}

// ---------- guards ----------

fn require_electron(pf: &PhaseFunctions) -> Result<()> {
    let sp = pf.species();
    let e = Species::electron();
    if (sp.mass - e.mass).abs() > 1e-9 * e.mass || sp.charge != e.charge {
        return Err(Error::domain(
            "plasma corrections are derived for electrons; build the phase table \
             with the electron species",
        ));
    }
    Ok(())
}

fn require_label(z_label: f64) -> Result<()> {
    if !(z_label >= 0.0) || !z_label.is_finite() {
        return Err(Error::domain(format!(
            "plasma labels live in the bulk z >= 0, got {z_label}"
        )));
    }
    Ok(())
}

// ---------- correction exponent ----------

/// Correction exponent along the phase: r0 = 4 K V3(xi). On the trajectory of
/// any label Z the Eulerian exponent [`r0`] collapses to this function of the
/// phase alone, which is why the corrected kinematics are label-free.
pub fn r0_along_phase(pf: &PhaseFunctions, setup: &PlasmaSetup, xi: f64) -> f64 {
    4.0 * setup.k * pf.v3(xi)
}

/// Correction exponent r0(x0, Z) of the electron labelled `z_label` at time
/// `x0`, in closed form through the phase primitives. Every call also
/// re-evaluates the defining time integral by adaptive quadrature and fails
/// loudly if the two disagree, so the closed form cannot drift undetected.
pub fn r0(pf: &PhaseFunctions, setup: &PlasmaSetup, x0: f64, z_label: f64) -> Result<f64> {
    require_electron(pf)?;
    require_label(z_label)?;
    if !(x0 > z_label) {
        return Ok(0.0);
    }
    let closed = r0_along_phase(pf, setup, pf.xi_inverse(x0 - z_label)?);
    let integral = r0_integral_form(pf, setup, x0, z_label)?;
    let scale = r0_along_phase(pf, setup, pf.support_end()).abs();
    let tol = 1e-8 * closed.abs() + 1e-12 * scale + 1e-300;
    if (closed - integral).abs() > tol {
        return Err(Error::numerical(format!(
            "correction exponent mismatch: closed form {closed:e} vs integral {integral:e}"
        )));
    }
    Ok(closed)
}

/// The defining form of the exponent: 4K times the time integral, from wave
/// arrival to `x0`, of the zero-density displacement over gamma. Exposed for
/// diagnostics; [`r0`] checks it against the closed form on every call.
pub fn r0_integral_form(
    pf: &PhaseFunctions,
    setup: &PlasmaSetup,
    x0: f64,
    z_label: f64,
) -> Result<f64> {
    require_electron(pf)?;
    require_label(z_label)?;
    if !(x0 > z_label) {
        return Ok(0.0);
    }
    let integrand = |eta: f64| -> [f64; 1] {
        // Finite eta keeps the inversion total; the error path is unreachable.
        let xi = pf.xi_inverse(eta - z_label).expect("finite phase inversion");
        [pf.y3(xi) / pf.state(xi).gamma]
    };
    // The integrand kinks where the trajectory crosses a potential breakpoint.
    let splits: Vec<f64> =
        pf.potential().breakpoints().iter().map(|&b| pf.xi_fn(b) + z_label).collect();
    let floor = 1e-16 * (1.0 + pf.y3(pf.support_end()).abs() * (x0 - z_label));
    let value = adaptive_gk(&integrand, z_label, x0, &splits, QUAD_TOL, floor)?;
    Ok(4.0 * setup.k * value[0])
}

// ---------- corrected kinematics ----------

/// Zero-density kinematics at phase `xi` together with the first-order
/// plasma correction of the light-cone variable.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionState {
    /// Phase (cm).
    pub xi: f64,
    /// Correction exponent r0(xi) = 4 K V3(xi).
    pub r0: f64,
    /// Corrected light-cone variable s1 = exp(r0).
    pub s1: f64,
    /// Full corrected kinematics: zero-order transverse momentum with the
    /// corrected s, recovered rationally.
    pub state: KinematicState,
}

/// First-order corrected kinematic state at phase `xi`. The transverse
/// momentum stays at its zero-density value; only `s` is corrected, which
/// tilts the longitudinal velocity backwards (the ions pull the electron).
pub fn corrected_state(
    pf: &PhaseFunctions,
    setup: &PlasmaSetup,
    xi: f64,
) -> Result<CorrectionState> {
    require_electron(pf)?;
    if !xi.is_finite() {
        return Err(Error::domain(format!("corrected state at non-finite phase {xi}")));
    }
    let r = r0_along_phase(pf, setup, xi);
    if r > MAX_EXPONENT {
        return Err(Error::domain(format!(
            "correction exponent r0 = {r:e} is far outside the first-order regime"
        )));
    }
    let s1 = r.exp();
    let state = KinematicState::from_s(pf.state(xi).u_perp, s1)?;
    Ok(CorrectionState { xi, r0: r, s1, state })
}

/// Corrected longitudinal velocity at phase `xi`, in the overflow-safe form
/// (k^2 e^{-2r} - 1)/(k^2 e^{-2r} + 1) with k^2 = 1 + |u_perp0|^2.
fn beta_z1_stable(u_z0: f64, r: f64) -> f64 {
    let t = (1.0 + 2.0 * u_z0) * (-2.0 * r).exp();
    (t - 1.0) / (t + 1.0)
}

/// Integrand of the displacement deficit: g = u_z0 - gamma0 * beta_z1, in the
/// cancellation-free form k^2 (1 - e^{-2r}) / (k^2 e^{-2r} + 1). Nonnegative
/// for r >= 0 and bounded by k^2.
fn g_value(u_z0: f64, r: f64) -> f64 {
    let ksq = 1.0 + 2.0 * u_z0;
    ksq * (-(-2.0 * r).exp_m1()) / (ksq * (-2.0 * r).exp() + 1.0)
}

// ---------- corrected displacement ----------

/// First-order corrected longitudinal displacement of the electron labelled
/// `z_label` at time `x0`: the phase quadrature of gamma0 * beta_z1.
pub fn corrected_displacement(
    pf: &PhaseFunctions,
    setup: &PlasmaSetup,
    x0: f64,
    z_label: f64,
) -> Result<f64> {
    require_electron(pf)?;
    require_label(z_label)?;
    let xi_up = pf.xi_inverse(x0 - z_label)?;
    if xi_up <= 0.0 {
        return Ok(0.0);
    }
    let integrand = |y: f64| -> [f64; 1] {
        let st = pf.state(y);
        let r = r0_along_phase(pf, setup, y);
        [st.gamma * beta_z1_stable(st.u_z, r)]
    };
    let floor = 1e-16 * (1.0 + pf.y3(xi_up).abs());
    let value =
        adaptive_gk(&integrand, 0.0, xi_up, &pf.potential().breakpoints(), QUAD_TOL, floor)?;
    Ok(value[0])
}

/// Displacement deficit G(xi) = integral of g over [0, xi]; exactly the gap
/// between the zero-density and the corrected displacement at equal phase,
/// since g = u_z0 - gamma0 * beta_z1 identically.
pub fn displacement_deficit(pf: &PhaseFunctions, setup: &PlasmaSetup, xi: f64) -> Result<f64> {
    require_electron(pf)?;
    if xi <= 0.0 {
        return Ok(0.0);
    }
    let integrand = |y: f64| -> [f64; 1] {
        let st = pf.state(y);
        [g_value(st.u_z, r0_along_phase(pf, setup, y))]
    };
    let floor = 1e-16 * (1.0 + pf.y3(xi).abs());
    let value = adaptive_gk(&integrand, 0.0, xi, &pf.potential().breakpoints(), QUAD_TOL, floor)?;
    Ok(value[0])
}

// ---------- validity ----------

/// Outcome of the first-order validity conditions.
#[derive(Debug, Clone)]
pub struct ValidityReport {
    /// First maximizer of the envelope (cm); the conditions are evaluated on
    /// the window [0, xi0] where the slingshot estimate lives.
    pub xi0: f64,
    /// Sampled relative displacement deficit T(xi) = G(xi)/Y3(xi) on (0, xi0].
    pub t_profile: Vec<(f64, f64)>,
    /// Largest sampled T, `None` when Y3 vanishes on the whole window (the
    /// pulse never overlaps it, so T is undefined and the check is vacuous).
    pub t_max: Option<f64>,
    /// Left side 2 Y3(xi0) + xi0 + 2 Z of the transverse-correction bound.
    pub cond2_lhs: f64,
    /// Right side 2 pi / (K lambda); infinite for a vacuum run.
    pub cond2_rhs: f64,
    /// Their ratio in multiply-through form, zero for a vacuum run.
    pub cond2_ratio: f64,
    /// Pass threshold used for both conditions (reading of "much less than").
    pub threshold: f64,
    pub t_pass: bool,
    pub cond2_pass: bool,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.t_pass && self.cond2_pass
    }
}

/// Evaluate the two first-order validity conditions for the electron labelled
/// `z_label`: the displacement deficit stays a small fraction of the
/// displacement on [0, xi0], and the transverse correction scale stays small
/// up to the energy maximum. `pulse` must be the wave the phase table was
/// built from; `threshold` is the numeric reading of "much less than".
pub fn validity(
    pf: &PhaseFunctions,
    setup: &PlasmaSetup,
    pulse: &Pulse,
    z_label: f64,
    threshold: f64,
) -> Result<ValidityReport> {
    require_electron(pf)?;
    require_label(z_label)?;
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::domain(format!("validity threshold must be positive, got {threshold}")));
    }
    let lambda = pulse.wavelength();
    if (lambda - pf.potential().oscillation_scale()).abs() > 1e-12 * lambda {
        return Err(Error::domain(
            "validity: pulse wavelength disagrees with the phase table; pass the \
             pulse the table was built from",
        ));
    }

    let xi0 = if pulse.peak_amplitude() > 0.0 { pulse.slowness()?.xi0 } else { 0.0 };

    // T profile by segment-wise quadrature of g up to each grid point.
    let mut t_profile = Vec::new();
    let mut t_max: Option<f64> = None;
    if xi0 > 0.0 {
        let n = ((xi0 / (lambda / 16.0)).ceil() as usize).clamp(8, 4096);
        let splits = pf.potential().breakpoints();
        let floor = 1e-16 * (1.0 + pf.y3(xi0).abs());
        let mut g_cum = 0.0;
        let mut prev = 0.0;
        for i in 1..=n {
            let xi = xi0 * (i as f64) / (n as f64);
            let integrand = |y: f64| -> [f64; 1] {
                let st = pf.state(y);
                [g_value(st.u_z, r0_along_phase(pf, setup, y))]
            };
            g_cum += adaptive_gk(&integrand, prev, xi, &splits, QUAD_TOL, floor)?[0];
            prev = xi;
            let y3 = pf.y3(xi);
            if y3 > 0.0 {
                let t = g_cum / y3;
                t_profile.push((xi, t));
                t_max = Some(t_max.map_or(t, |m: f64| m.max(t)));
            }
        }
    }

    let cond2_lhs = 2.0 * pf.y3(xi0) + xi0 + 2.0 * z_label;
    let (cond2_rhs, cond2_ratio) = if setup.k > 0.0 {
        let rhs = 2.0 * PI / (setup.k * lambda);
        (rhs, cond2_lhs * setup.k * lambda / (2.0 * PI))
    } else {
        (f64::INFINITY, 0.0)
    };

    Ok(ValidityReport {
        xi0,
        t_profile,
        t_max,
        cond2_lhs,
        cond2_rhs,
        cond2_ratio,
        threshold,
        t_pass: t_max.map_or(true, |t| t <= threshold),
        cond2_pass: cond2_ratio <= threshold,
    })
}

// ---------- slingshot ----------

/// Transverse extent and thickness of the wave pancake, user-supplied numbers
/// for the geometric sufficient conditions.
#[derive(Debug, Clone, Copy)]
pub struct PancakeGeometry {
    /// Spot radius R (cm).
    pub radius: f64,
    /// Pulse length l (cm).
    pub length: f64,
}

/// Geometric condition flags; the aspect flag is a weak proxy for "pancake
/// shaped", the reported ratio lets callers apply stricter margins.
#[derive(Debug, Clone, Copy)]
pub struct GeometryCheck {
    pub radius: f64,
    pub length: f64,
    pub aspect_ratio: f64,
    pub pancake_ok: bool,
    /// R at least twice the expulsion depth zeta, so surface electrons leave
    /// through the front face rather than sideways.
    pub radius_ok: bool,
}

/// Slingshot estimate for surface electrons (labels Z -> 0).
#[derive(Debug, Clone)]
pub struct SlingshotReport {
    /// Expulsion depth zeta = Y3(xi0) (cm).
    pub zeta: f64,
    /// Density constant K (cm^-2).
    pub plasma_k: f64,
    /// Estimated maximal Lorentz factor 1 + 2 K zeta^2 of the expelled
    /// electrons after the pulse overtakes them.
    pub gamma_m: f64,
    /// The same as an energy, m_e c^2 gamma_m, in MeV.
    pub energy_mev: f64,
    /// Validity conditions evaluated for the surface label Z = 0.
    pub validity: ValidityReport,
    pub geometry: Option<GeometryCheck>,
}

/// Estimate the maximal energy of the electrons slung backwards out of the
/// plasma surface, together with the validity and geometry condition flags.
pub fn slingshot(
    pf: &PhaseFunctions,
    setup: &PlasmaSetup,
    pulse: &Pulse,
    geometry: Option<PancakeGeometry>,
    threshold: f64,
) -> Result<SlingshotReport> {
    let validity = validity(pf, setup, pulse, 0.0, threshold)?;
    let zeta = pf.y3(validity.xi0);
    let gamma_m = 1.0 + 2.0 * setup.k * zeta * zeta;
    let geometry = match geometry {
        None => None,
        Some(g) => {
            if !(g.radius > 0.0) || !(g.length > 0.0) {
                return Err(Error::domain(format!(
                    "pancake geometry must have positive radius and length, got R = {}, l = {}",
                    g.radius, g.length
                )));
            }
            Some(GeometryCheck {
                radius: g.radius,
                length: g.length,
                aspect_ratio: g.length / g.radius,
                pancake_ok: g.length < g.radius,
                radius_ok: g.radius >= 2.0 * zeta,
            })
        }
    };
    Ok(SlingshotReport {
        zeta,
        plasma_k: setup.k,
        gamma_m,
        energy_mev: ME_C2_MEV * gamma_m,
        validity,
        geometry,
    })
}

// ---------- corrected transverse momentum ----------

/// First-order corrected transverse momentum and vector potential at the
/// event (x0, z).
#[derive(Debug, Clone, Copy)]
pub struct CorrectedPotential {
    /// u_perp1(x0, z), dimensionless.
    pub u_perp1: Vector2<f64>,
    /// The matching vector potential A_perp1 = -(m c^2 / q) u_perp1, statvolt.
    pub a_perp1: Vector2<f64>,
}

/// First-order corrected transverse momentum at the event (x0, z): the
/// zero-density value plus the retarded field of the zero-order current. The
/// source integral runs over the backward light-cone triangle cut by the
/// wavefront and by the plasma boundary; in characteristic coordinates the
/// inner integration is exact and leaves one adaptive quadrature in the
/// retarded phase, up to the kink where the boundary curve enters.
pub fn corrected_vector_potential(
    pf: &PhaseFunctions,
    setup: &PlasmaSetup,
    x0: f64,
    z: f64,
) -> Result<CorrectedPotential> {
    require_electron(pf)?;
    if !(x0 >= 0.0) || !x0.is_finite() || !z.is_finite() {
        return Err(Error::domain(format!(
            "corrected potential needs a finite event with x0 >= 0, got ({x0}, {z})"
        )));
    }
    let xi = x0 - z;
    let xi_minus = x0 + z;

    let u0 = pf.state(xi).u_perp;
    let mut u_perp1 = u0;

    // The source support in the retarded phase xi' is cut at the root of
    // xi' + 2 Y3(xi') = xi_minus: beyond it the sourcing electrons sit below
    // the plasma boundary. The left side grows strictly (slope 1 + 2 u_z0),
    // so the root is unique; no overlap at all when xi_minus <= 0.
    let upper = if xi_minus <= 0.0 || xi <= 0.0 {
        0.0
    } else {
        let kink = newton_bracketed(
            |y| (y + 2.0 * pf.y3(y) - xi_minus, 1.0 + 2.0 * pf.state(y).u_z),
            0.0,
            xi_minus,
            1e-15 * (1.0 + xi_minus),
            1e-13 * (1.0 + xi_minus),
        )?;
        kink.min(xi)
    };
    if upper > 0.0 && setup.k > 0.0 {
        let integrand = |y: f64| -> [f64; 2] {
            let up = pf.state(y).u_perp;
            let weight = xi_minus - y - 2.0 * pf.y3(y);
            [up.x * weight, up.y * weight]
        };
        let floor = 1e-16 * (1.0 + xi_minus * xi_minus);
        let value =
            adaptive_gk(&integrand, 0.0, upper, &pf.potential().breakpoints(), QUAD_TOL, floor)?;
        u_perp1 -= setup.k * Vector2::new(value[0], value[1]);
    }

    let sp = pf.species();
    let a_perp1 = -u_perp1 * (sp.rest_energy() / sp.charge);
    Ok(CorrectedPotential { u_perp1, a_perp1 })
}

// ---------- profile dump ----------

/// One row of the phase-sampled correction profile.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionRow {
    pub xi: f64,
    pub r0: f64,
    pub s1: f64,
    pub beta_z1: f64,
    /// Zero-density displacement Y3(xi).
    pub dz0: f64,
    /// Corrected displacement Y3(xi) - G(xi) at equal phase.
    pub dz1: f64,
    /// Relative deficit G/Y3; zero where Y3 vanishes.
    pub t: f64,
}

/// Phase-sampled correction profile over the pulse passage, for dumping.
#[derive(Debug, Clone)]
pub struct CorrectionProfile {
    pub rows: Vec<CorrectionRow>,
}

/// Sample the correction along the phase on `n` even intervals of
/// [0, support end].
pub fn correction_profile(
    pf: &PhaseFunctions,
    setup: &PlasmaSetup,
    n: usize,
) -> Result<CorrectionProfile> {
    require_electron(pf)?;
    let end = pf.support_end();
    let n = n.clamp(2, 200_000);
    let splits = pf.potential().breakpoints();
    let floor = 1e-16 * (1.0 + pf.y3(end).abs());
    let mut rows = Vec::with_capacity(n + 1);
    let mut g_cum = 0.0;
    let mut prev = 0.0;
    for i in 0..=n {
        let xi = end * (i as f64) / (n as f64);
        if xi > prev {
            let integrand = |y: f64| -> [f64; 1] {
                let st = pf.state(y);
                [g_value(st.u_z, r0_along_phase(pf, setup, y))]
            };
            g_cum += adaptive_gk(&integrand, prev, xi, &splits, QUAD_TOL, floor)?[0];
            prev = xi;
        }
        let st = pf.state(xi);
        let r = r0_along_phase(pf, setup, xi);
        if r > MAX_EXPONENT {
            return Err(Error::domain(format!(
                "correction exponent r0 = {r:e} at xi = {xi:e} is far outside the \
                 first-order regime"
            )));
        }
        let dz0 = pf.y3(xi);
        rows.push(CorrectionRow {
            xi,
            r0: r,
            s1: r.exp(),
            beta_z1: beta_z1_stable(st.u_z, r),
            dz0,
            dz1: dz0 - g_cum,
            t: if dz0 > 0.0 { g_cum / dz0 } else { 0.0 },
        });
    }
    Ok(CorrectionProfile { rows })
}
