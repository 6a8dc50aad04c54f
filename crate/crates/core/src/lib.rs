//! Relativistic motion of cold-plasma electrons and test particles in transverse
//! plane electromagnetic travelling-waves, in CGS-Gaussian units.
//!
//! The library is organised around the light-cone phase `xi = x0 - z` of a wave
//! travelling in the +z direction:
//!
//! * [`pulse`] describes the wave itself: a carrier (linear or circular
//!   polarization) under a slowly varying envelope, together with the exact
//!   quadrature primitive `a_perp(xi) = -∫ e_perp`.
//! * [`kinematics`] holds the four-velocity bookkeeping, in particular the
//!   light-cone variable `s = gamma - u_z` and the rational recovery of the
//!   full state from `(u_perp, s)`.
//! * [`phase`] tabulates the primitives `Y(xi)`, `Xi(xi)`, `V3(xi)` of the
//!   zero-density solution and inverts the strictly increasing `Xi`.
//! * [`zero_density`] evaluates the exact zero-density trajectories and the
//!   forward/inverse Lagrangian maps built from those primitives.
//! * [`ponderomotive`] gives the longitudinal magnetic force of the prototype
//!   waves and its cycle-averaged ponderomotive form.
//! * [`test_particle`] reduces arbitrary initial conditions and wave directions
//!   to the canonical rest-at-origin problem by a Poincare transformation.
//! * [`plasma`] adds the leading back-reaction correction of a step-density
//!   plasma and the slingshot energy estimate for surface electrons.
//! * [`oracle`] is a deliberately independent fixed-step RK4 integrator of the
//!   plain Lorentz equations used to validate every analytical path.
//!
//! All lengths are cm, fields statvolt/cm, energies erg unless a function says
//! otherwise; four-velocities are dimensionless (u = gamma * beta).

pub mod constants;
pub mod envelope;
pub mod error;
pub mod kinematics;
pub mod numerics;
pub mod oracle;
pub mod phase;
pub mod plasma;
pub mod ponderomotive;
pub mod pulse;
pub mod test_particle;
pub mod zero_density;

pub use error::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
