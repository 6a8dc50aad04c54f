//! Longitudinal magnetic force on charges riding a modulated monochromatic
//! wave, and its cycle-averaged ponderomotive form.
//!
//! For the prototype waves built by [`crate::pulse`] the longitudinal
//! magnetic part of the Lorentz force is, to leading order in the modulation
//! slowness,
//!
//! ```text
//! F_m(xi) = mu(xi) * d/dxi [eps_s(xi) e_p(k xi)]^2
//! mu      = lambda^2 q^2 / (8 pi^2 gamma m c^2)
//! ```
//!
//! at the light-cone phase xi = x0 - z. Averaging over a carrier period
//! leaves the ponderomotive force F_p = mu (eps_s^2)' / 2 for linear
//! polarization; for circular polarization |e_p| = 1 makes F_m equal to
//! mu (eps_s^2)' pointwise, with no oscillating part at all. Both forces are
//! positive wherever eps_s^2 rises, for every charge species, which is the
//! front-edge push behind wakefield and slingshot acceleration.
//!
//! gamma inside mu is evaluated from the zero-density state at the same
//! phase; substitute gamma = 1 by hand for the non-relativistic limit. The
//! formulas assume the slowness delta = sup lambda |eps_s'/eps_s| is small;
//! `ForceProfile` carries the measured delta so callers can warn when it
//! exceeds 0.3.

use std::f64::consts::PI;

use crate::kinematics::{KinematicState, Species};
use crate::numerics::adaptive_gk;
use crate::pulse::{Polarization, Pulse};
use crate::Result;

/// gamma of the zero-density state at phase xi (unit light-cone factor).
fn gamma_zero(species: Species, pulse: &Pulse, xi: f64) -> f64 {
    let u_perp = species.transverse_momentum(pulse.a_perp(xi));
    KinematicState::from_s(u_perp, 1.0)
        .expect("unit light-cone factor is always valid")
        .gamma
}

/// Prefactor mu = lambda^2 q^2 / (8 pi^2 gamma m c^2), in cm^3/erg times
/// charge^2 (so that mu * d(field^2)/dxi is a force in erg/cm).
pub fn mu_factor(species: Species, pulse: &Pulse, xi: f64) -> f64 {
    let lambda = pulse.wavelength();
    lambda * lambda * species.charge * species.charge
        / (8.0 * PI * PI * gamma_zero(species, pulse, xi) * species.rest_energy())
}

/// Instantaneous longitudinal magnetic force -q^2 d/dz (a_perp^2) / (2 gamma m c^2)
/// on the prototype wave, in erg/cm.
///
/// With a_perp = -(eps_s/k) e_p this is mu * d/dxi (eps_s e_p)^2; the product
/// rule keeps the carrier oscillation for linear polarization and cancels it
/// exactly for circular.
pub fn magnetic_force(species: Species, pulse: &Pulse, xi: f64) -> f64 {
    let eps = pulse.envelope().value(xi);
    let deps = pulse.envelope().derivative(xi);
    let k = pulse.wavenumber();
    let pol = pulse.polarization();
    let phase = k * xi;
    // d/dxi (eps e_p)^2 = (eps^2)' |e_p|^2 + 2 eps^2 (e_p . e_p'), e_p' = k e_o.
    let slope = 2.0 * eps * deps;
    let d_sq = slope * pol.e_p_norm2(phase)
        + 2.0 * eps * eps * k * pol.e_p(phase).dot(&pol.e_o(phase));
    mu_factor(species, pulse, xi) * d_sq
}

/// Cycle-averaged (ponderomotive) force mu (eps_s^2)' / 2 for linear
/// polarization, mu (eps_s^2)' for circular, in erg/cm.
///
/// Its sign follows the monotonicity of eps_s^2. Meaningful for slowly
/// modulated pulses; check `Pulse::slowness` stays well under 0.3.
pub fn ponderomotive_force(species: Species, pulse: &Pulse, xi: f64) -> f64 {
    let eps = pulse.envelope().value(xi);
    let deps = pulse.envelope().derivative(xi);
    let pol_factor = match pulse.polarization() {
        Polarization::Linear => 0.5,
        Polarization::Circular => 1.0,
    };
    let slope = 2.0 * eps * deps;
    mu_factor(species, pulse, xi) * (slope * pol_factor)
}

/// Average of `f` over a carrier period around `xi`, as a plain quadrature.
///
/// The kernel is the centered boxcar of width `lambda` iterated twice, i.e. a
/// triangular window of full width 2 lambda. A single boxcar applied to a
/// near-exact xi-derivative (the linear-polarization magnetic force)
/// telescopes to its endpoint values and keeps a full-amplitude
/// second-harmonic residue; iterating the window once suppresses that
/// residue to O(delta) while staying a quadrature that knows nothing about
/// the integrand's structure.
pub fn cycle_average(
    f: &(dyn Fn(f64) -> f64 + '_),
    xi: f64,
    lambda: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    let kernel = move |t: f64| -> [f64; 1] {
        let w = (1.0 - (t - xi).abs() / lambda) / lambda;
        [f(t) * w]
    };
    let mut splits: Vec<f64> = vec![xi];
    splits.extend(
        breakpoints
            .iter()
            .copied()
            .filter(|&b| b > xi - lambda && b < xi + lambda),
    );
    let val = adaptive_gk(&kernel, xi - lambda, xi + lambda, &splits, 1e-10, 0.0)?;
    Ok(val[0])
}

/// Sampled force profile along the pulse, ready for CSV dumping.
pub struct ForceProfile {
    /// Light-cone phases, evenly spaced over the envelope support.
    pub xi: Vec<f64>,
    /// Instantaneous magnetic force at each phase, erg/cm.
    pub f_m: Vec<f64>,
    /// Ponderomotive force at each phase, erg/cm.
    pub f_p: Vec<f64>,
    /// Prefactor mu at each phase.
    pub mu: Vec<f64>,
    /// Modulation slowness of the pulse; above 0.3 the averaged form is
    /// advisory only.
    pub delta: f64,
}

impl ForceProfile {
    pub fn compute(species: Species, pulse: &Pulse, n: usize) -> Result<ForceProfile> {
        if n < 2 {
            return Err(crate::Error::domain(format!(
                "force profile needs at least 2 samples, got {n}"
            )));
        }
        let (start, end) = pulse.envelope().support();
        let delta = pulse.slowness()?.delta;
        let mut xi = Vec::with_capacity(n);
        let mut f_m = Vec::with_capacity(n);
        let mut f_p = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        for i in 0..n {
            let x = start + (end - start) * (i as f64) / ((n - 1) as f64);
            xi.push(x);
            f_m.push(magnetic_force(species, pulse, x));
            f_p.push(ponderomotive_force(species, pulse, x));
            mu.push(mu_factor(species, pulse, x));
        }
        Ok(ForceProfile { xi, f_m, f_p, mu, delta })
    }
}
