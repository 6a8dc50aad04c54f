//! The exact zero-density solution: forward and inverse Lagrangian maps,
//! longitudinal displacement, and the zeta estimator.
//!
//! A particle with label (X_perp, Z), at rest until the wavefront arrives,
//! moves so that its phase satisfies Xi(xi) = x0 - Z. Everything here is
//! evaluated through the cached primitives of [`PhaseFunctions`]; no
//! quadrature happens per call.

use crate::kinematics::KinematicState;
use crate::phase::PhaseFunctions;
use crate::Result;
use nalgebra::{Vector2, Vector3};

/// One trajectory point in lab coordinates.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    /// Lab time coordinate x0 = ct (cm).
    pub x0: f64,
    /// Transverse position (cm).
    pub x_perp: Vector2<f64>,
    /// Longitudinal position (cm).
    pub z: f64,
    pub state: KinematicState,
}

/// Zero-density state at phase xi (s = 1 exactly).
pub fn state_zero_density(pf: &PhaseFunctions, xi: f64) -> KinematicState {
    pf.state(xi)
}

/// Forward map: where is the particle with label X = (X_perp, Z) at time x0?
/// For x0 <= Z the wave has not arrived and the position is the label itself.
pub fn position_forward(
    pf: &PhaseFunctions,
    x0: f64,
    label: Vector3<f64>,
) -> Result<TrajectorySample> {
    let z_label = label.z;
    let xi = pf.xi_inverse(x0 - z_label)?;
    let z = x0 - xi;
    let y_perp = pf.y_perp(xi);
    Ok(TrajectorySample {
        x0,
        x_perp: Vector2::new(label.x + y_perp.x, label.y + y_perp.y),
        z,
        state: pf.state(xi),
    })
}

/// Inverse map: which label occupies position x = (x_perp, z) at time x0?
/// Closed-form, no inversion needed: Z = z - Y3(x0 - z).
pub fn position_inverse(pf: &PhaseFunctions, x0: f64, pos: Vector3<f64>) -> Vector3<f64> {
    let xi = x0 - pos.z;
    let y_perp = pf.y_perp(xi);
    Vector3::new(pos.x - y_perp.x, pos.y - y_perp.y, pos.z - pf.y3(xi))
}

/// Longitudinal displacement of the particle labelled Z at time x0:
/// delta_z = Y3(Xi^{-1}(x0 - Z)) >= 0.
pub fn displacement(pf: &PhaseFunctions, x0: f64, z_label: f64) -> Result<f64> {
    Ok(pf.y3(pf.xi_inverse(x0 - z_label)?))
}

/// The displacement accumulated by the time a given phase is reached, and
/// when that happens.
#[derive(Debug, Clone, Copy)]
pub struct ZetaEstimate {
    /// zeta = Y3(xi_check) (cm); independent of the label Z.
    pub zeta: f64,
    /// Xi(xi_check) (cm); the particle labelled Z reaches the phase at
    /// x0 = reach_offset + Z.
    pub reach_offset: f64,
}

/// Displacement at the moment the trajectory phase reaches `xi_check`. The
/// value is the same for every label Z; only the reach time shifts.
pub fn zeta_at_phase(pf: &PhaseFunctions, xi_check: f64) -> ZetaEstimate {
    ZetaEstimate { zeta: pf.y3(xi_check), reach_offset: pf.xi_fn(xi_check) }
}

/// Forward-map a whole time grid for one label.
pub fn trajectory(
    pf: &PhaseFunctions,
    label: Vector3<f64>,
    times: &[f64],
) -> Result<Vec<TrajectorySample>> {
    times.iter().map(|&x0| position_forward(pf, x0, label)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::GaussianEnvelope;
    use crate::kinematics::Species;
    use crate::pulse::{IdealCircularWave, Polarization, Pulse};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    const LAMBDA: f64 = 1e-4;

    fn ideal(w: f64) -> PhaseFunctions {
        let wave = Arc::new(IdealCircularWave::new(w, 0.25, 5.0));
        PhaseFunctions::build(Species::electron(), wave, 6.0, 1e-10).unwrap()
    }

    fn gaussian_pf() -> PhaseFunctions {
        let env = Arc::new(GaussianEnvelope::new(2.5e4, 25.0 * LAMBDA, 6.0 * LAMBDA).unwrap());
        let p = Arc::new(Pulse::new(env, LAMBDA, Polarization::Circular).unwrap());
        PhaseFunctions::build(Species::electron(), p, 80.0 * LAMBDA, 1e-10).unwrap()
    }

    #[test]
    fn state_examples() {
        let pf = ideal(1.0);
        assert_eq!(state_zero_density(&pf, -2.0), KinematicState::rest());
        // |u_perp| = 1 gives u_z = 1/2, gamma = 3/2, s = 1.
        let st = state_zero_density(&pf, 1.7);
        assert_relative_eq!(st.u_perp.norm(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(st.u_z, 0.5, max_relative = 1e-12);
        assert_relative_eq!(st.gamma, 1.5, max_relative = 1e-12);
        assert_eq!(st.s, 1.0);
    }

    #[test]
    fn gamma_minus_uz_is_one_everywhere() {
        let pf = gaussian_pf();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let xi = rng.gen_range(-10.0..70.0) * LAMBDA;
            let st = pf.state(xi);
            assert!((st.gamma - st.u_z - 1.0).abs() < 1e-12);
            assert_eq!(st.s, 1.0);
        }
    }

    #[test]
    fn forward_before_arrival_is_identity() {
        let pf = gaussian_pf();
        let label = Vector3::new(0.3, -0.2, 5.0 * LAMBDA);
        let s = position_forward(&pf, 2.0 * LAMBDA, label).unwrap();
        assert_eq!(s.z, label.z);
        assert_eq!(s.x_perp, Vector2::new(label.x, label.y));
        assert_eq!(s.state, KinematicState::rest());
    }

    #[test]
    fn forward_ideal_circular_closed_form() {
        let w = 1.2f64;
        let pf = ideal(w);
        let z_label = 0.5;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let x0 = rng.gen_range(0.6..4.0);
            let s = position_forward(&pf, x0, Vector3::new(0.0, 0.0, z_label)).unwrap();
            // z = x0 - (x0 - Z)/(1 + w^2/2)
            let expect = x0 - (x0 - z_label) / (1.0 + w * w / 2.0);
            assert_relative_eq!(s.z, expect, max_relative = 1e-9);
            assert!(s.z >= z_label, "no backward longitudinal motion");
        }
    }

    #[test]
    fn inverse_two_closed_forms_agree() {
        let pf = gaussian_pf();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let x0 = rng.gen_range(0.0..60.0) * LAMBDA;
            let z = rng.gen_range(-5.0..50.0) * LAMBDA;
            let z_label = position_inverse(&pf, x0, Vector3::new(0.0, 0.0, z)).z;
            // Other form: Z = x0 - Xi(x0 - z).
            let other = x0 - pf.xi_fn(x0 - z);
            assert!((z_label - other).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_identity() {
        let pf = gaussian_pf();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let x0 = rng.gen_range(0.0..70.0) * LAMBDA;
            let label = Vector3::new(
                rng.gen_range(-1.0..1.0) * LAMBDA,
                rng.gen_range(-1.0..1.0) * LAMBDA,
                rng.gen_range(-10.0..60.0) * LAMBDA,
            );
            let s = position_forward(&pf, x0, label).unwrap();
            let back = position_inverse(&pf, x0, Vector3::new(s.x_perp.x, s.x_perp.y, s.z));
            worst = worst.max((back - label).norm());
        }
        assert!(worst < 1e-10, "roundtrip error {worst:e} cm");
    }

    #[test]
    fn displacement_examples() {
        let w = 1.2f64;
        let pf = ideal(w);
        assert_eq!(displacement(&pf, 0.1, 0.5).unwrap(), 0.0);
        let x0 = 2.0;
        let z_label = 0.3;
        let expect = (w * w / 2.0) * (x0 - z_label) / (1.0 + w * w / 2.0);
        assert_relative_eq!(displacement(&pf, x0, z_label).unwrap(), expect, max_relative = 1e-9);
        // Definitional consistency with the forward map.
        let s = position_forward(&pf, x0, Vector3::new(0.0, 0.0, z_label)).unwrap();
        assert!((displacement(&pf, x0, z_label).unwrap() - (s.z - z_label)).abs() < 1e-12);
    }

    #[test]
    fn zeta_is_label_independent() {
        let pf = gaussian_pf();
        assert_eq!(zeta_at_phase(&pf, -3.0 * LAMBDA).zeta, 0.0);
        let xi_check = 30.0 * LAMBDA;
        let est = zeta_at_phase(&pf, xi_check);
        for &z_label in &[0.0, LAMBDA, 10.0 * LAMBDA] {
            let x0 = est.reach_offset + z_label;
            let d = displacement(&pf, x0, z_label).unwrap();
            assert!((d - est.zeta).abs() < 1e-10, "zeta {d:e} vs {:e} at Z={z_label}", est.zeta);
        }
    }

    #[test]
    fn derivative_identities() {
        // d0 Z = -u_z, dz Z = gamma, dZ z = 1/gamma~, dZ x_perp = -beta~_perp
        // by central differences.
        let pf = gaussian_pf();
        let h = LAMBDA / 2000.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for _ in 0..300 {
            let x0 = rng.gen_range(5.0..60.0) * LAMBDA;
            let z = rng.gen_range(-5.0..x0 / LAMBDA - 1.0) * LAMBDA;
            let st = pf.state(x0 - z);

            let zp = |t: f64, zz: f64| position_inverse(&pf, t, Vector3::new(0.0, 0.0, zz)).z;
            let d0 = (zp(x0 + h, z) - zp(x0 - h, z)) / (2.0 * h);
            assert_relative_eq!(d0, -st.u_z, max_relative = 1e-5, epsilon = 1e-9);
            let dz = (zp(x0, z + h) - zp(x0, z - h)) / (2.0 * h);
            assert_relative_eq!(dz, st.gamma, max_relative = 1e-5);

            let z_label = rng.gen_range(-5.0..55.0) * LAMBDA;
            let fwd = |zl: f64| position_forward(&pf, x0, Vector3::new(0.0, 0.0, zl)).unwrap();
            let tilde = pf.state(pf.xi_inverse(x0 - z_label).unwrap());
            let dzfwd = (fwd(z_label + h).z - fwd(z_label - h).z) / (2.0 * h);
            assert_relative_eq!(dzfwd, 1.0 / tilde.gamma, max_relative = 1e-5);
            let dxp = (fwd(z_label + h).x_perp - fwd(z_label - h).x_perp) / (2.0 * h);
            let expect = -tilde.beta_perp();
            assert!(
                (dxp - expect).norm() <= 1e-5 * expect.norm().max(1e-4),
                "dZ x_perp = {dxp:?} vs {expect:?}"
            );
        }
    }

    #[test]
    fn trajectory_grid_is_consistent() {
        let pf = gaussian_pf();
        let times: Vec<f64> = (0..50).map(|i| i as f64 * LAMBDA).collect();
        let label = Vector3::new(0.0, 0.0, 2.0 * LAMBDA);
        let traj = trajectory(&pf, label, &times).unwrap();
        assert_eq!(traj.len(), times.len());
        // z never decreases and matches per-call evaluation.
        for w in traj.windows(2) {
            assert!(w[1].z >= w[0].z - 1e-15);
        }
        let support_len = {
            let (a, b) = pf.potential().support();
            b - a
        };
        assert!(support_len > 0.0);
    }
}
