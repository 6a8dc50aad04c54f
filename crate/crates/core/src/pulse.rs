//! The free transverse plane travelling-wave: carrier, envelope, transverse
//! field e_perp(xi), its primitive a_perp(xi), the dimensionless amplitude
//! w(xi) and the slow-variation diagnostic delta.
//!
//! Everything depends on spacetime only through the phase xi = x0 - z (cm),
//! with x0 = ct. The transverse field is
//!
//!   e_perp(xi) = eps_s(xi) * e_o(k xi)
//!
//! where eps_s is the envelope and e_o the unit carrier of the chosen
//! polarization. The potential-like primitive is a_perp(xi) =
//! -int_0^xi e_perp, computed by adaptive quadrature once at construction and
//! then evaluated from a cumulative table; for slowly varying envelopes it
//! approaches -(eps_s/k) e_p up to O(delta) (note the sign: integrating
//! eps_s e_o by parts with eps_s(0) = 0 gives the minus).

use crate::envelope::Envelope;
use crate::error::Error;
use crate::numerics::CumulativeTable;
use crate::Result;
use nalgebra::Vector2;
use std::sync::Arc;

/// Polarization of the carrier. `phase` below always means k*xi (radians).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Linear,
    Circular,
}

impl Polarization {
    /// Oscillating carrier e_o(k xi); the transverse field is eps_s * e_o.
    pub fn e_o(self, phase: f64) -> Vector2<f64> {
        match self {
            Polarization::Linear => Vector2::new(phase.cos(), 0.0),
            Polarization::Circular => Vector2::new(phase.cos(), phase.sin()),
        }
    }

    /// Companion carrier with e_p' = k e_o and e_o' = -k e_p.
    pub fn e_p(self, phase: f64) -> Vector2<f64> {
        match self {
            Polarization::Linear => Vector2::new(phase.sin(), 0.0),
            Polarization::Circular => Vector2::new(phase.sin(), -phase.cos()),
        }
    }

    /// |e_p|^2 in closed form: sin^2 for linear, exactly 1 for circular.
    pub fn e_p_norm2(self, phase: f64) -> f64 {
        match self {
            Polarization::Linear => {
                let s = phase.sin();
                s * s
            }
            Polarization::Circular => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarization::Linear => "linear",
            Polarization::Circular => "circular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Polarization::Linear),
            "circular" => Ok(Polarization::Circular),
            other => Err(Error::invalid(format!(
                "unknown polarization '{other}' (expected linear or circular)"
            ))),
        }
    }
}

/// Slow-variation diagnostic of a pulse.
#[derive(Debug, Clone, Copy)]
pub struct SlownessReport {
    /// sup over the support interior of lambda |eps_s'/eps_s|; derivative
    /// jumps are taken one-sided. Large values mean the envelope is not slow
    /// on the scale of a wavelength.
    pub delta: f64,
    /// First maximizer of eps_s (cm), from a lambda/64 grid scan refined by
    /// golden section to lambda * 1e-6.
    pub xi0: f64,
}

/// Anything that provides the transverse potential-like primitive a_perp(xi).
///
/// [`Pulse`] is the physical implementation; test fixtures with closed-form
/// primitives implement it too, so phase-map construction stays generic.
pub trait WavePotential: Send + Sync {
    /// a_perp(xi) = -int_0^xi e_perp (statvolt); zero for xi <= 0 and frozen
    /// at its final value after the support ends.
    fn a_perp(&self, xi: f64) -> Vector2<f64>;

    /// Interval outside which e_perp vanishes.
    fn support(&self) -> (f64, f64);

    /// Phases where the integrands may kink or jump.
    fn breakpoints(&self) -> Vec<f64>;

    /// Carrier wavelength (cm); sets grid and step scales downstream.
    fn oscillation_scale(&self) -> f64;
}

/// A modulated monochromatic transverse plane wave.
pub struct Pulse {
    envelope: Arc<dyn Envelope>,
    lambda: f64,
    k: f64,
    polarization: Polarization,
    a_table: CumulativeTable<2>,
}

impl Pulse {
    /// Build the pulse and its primitive table. The table spans [0, support
    /// end] with panels at most lambda/64 wide, refined to relative 1e-13.
    pub fn new(
        envelope: Arc<dyn Envelope>,
        lambda: f64,
        polarization: Polarization,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!("wavelength must be > 0, got {lambda}")));
        }
        let k = 2.0 * std::f64::consts::PI / lambda;
        let (_, s_end) = envelope.support();
        if !(s_end > 0.0) || !s_end.is_finite() {
            return Err(Error::domain(format!(
                "envelope support must extend past 0, ends at {s_end}"
            )));
        }
        let env = Arc::clone(&envelope);
        let pol = polarization;
        let integrand = move |xi: f64| -> [f64; 2] {
            let e = env.value(xi) * pol.e_o(k * xi);
            [-e.x, -e.y]
        };
        let a_table = CumulativeTable::build(
            Box::new(integrand),
            0.0,
            s_end,
            lambda / 64.0,
            &envelope.breakpoints(),
            1e-13,
        )?;
        Ok(Pulse { envelope, lambda, k, polarization, a_table })
    }

    pub fn envelope(&self) -> &Arc<dyn Envelope> {
        &self.envelope
    }

    pub fn wavelength(&self) -> f64 {
        self.lambda
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    /// Transverse electric field e_perp(xi) (statvolt/cm); zero for xi <= 0.
    pub fn e_perp(&self, xi: f64) -> Vector2<f64> {
        self.envelope.value(xi) * self.polarization.e_o(self.k * xi)
    }

    /// Primitive a_perp(xi) = -int_0^xi e_perp (statvolt), from the table.
    /// Constant after the support ends (the field is over).
    pub fn a_perp(&self, xi: f64) -> Vector2<f64> {
        let [ax, ay] = self.a_table.eval(xi);
        Vector2::new(ax, ay)
    }

    /// The O(delta) envelope shortcut -(eps_s(xi)/k) e_p(k xi), provided as a
    /// diagnostic next to the exact quadrature.
    pub fn a_perp_shortcut(&self, xi: f64) -> Vector2<f64> {
        -(self.envelope.value(xi) / self.k) * self.polarization.e_p(self.k * xi)
    }

    /// Dimensionless amplitude w(xi) = e eps_s(xi) / (k m_e c^2). The
    /// electron convention is part of the definition; other species rescale
    /// via their charge and mass where they need to.
    pub fn dimensionless_amplitude(&self, xi: f64) -> f64 {
        crate::constants::E_CHARGE * self.envelope.value(xi) / (self.k * crate::constants::ME_C2)
    }

    /// Peak of w(xi) over the support.
    pub fn peak_amplitude(&self) -> f64 {
        crate::constants::E_CHARGE * self.envelope.peak() / (self.k * crate::constants::ME_C2)
    }

    /// Compute the slow-variation diagnostic delta and the first-maximum
    /// phase xi0. Points where eps_s = 0 contribute nothing to the sup (the
    /// ratio is undefined there); for envelopes whose relative slope diverges
    /// towards a zero (the cut-off polynomial) the reported sup grows with
    /// grid resolution and simply flags "not slow".
    pub fn slowness(&self) -> Result<SlownessReport> {
        let env = self.envelope.as_ref();
        if env.peak() <= 0.0 {
            return Err(Error::domain("slowness of an identically zero envelope".to_string()));
        }
        let (s0, s1) = env.support();
        let lam = self.lambda;

        let mut points: Vec<f64> = Vec::new();
        let n = (((s1 - s0) / (lam / 64.0)).ceil() as usize).max(2);
        for i in 0..=n {
            points.push(s0 + (s1 - s0) * (i as f64) / (n as f64));
        }
        let mut bps = env.breakpoints();
        bps.sort_by(|a, b| a.partial_cmp(b).expect("non-finite breakpoint"));
        // One-sided approaches to each breakpoint, plus the point itself
        // (shape implementations return inside values at their edges).
        for w in bps.windows(2) {
            let eta = (w[1] - w[0]) * 1e-9;
            points.push(w[0] + eta);
            points.push(w[1] - eta);
        }
        points.extend_from_slice(&bps);

        let mut delta: f64 = 0.0;
        for &x in &points {
            let v = env.value(x);
            if v > 0.0 {
                delta = delta.max(lam * env.derivative(x).abs() / v);
            }
        }

        // First maximizer: lambda/64 grid, first point within 1e-12 of the
        // grid max, golden refinement between its neighbours.
        let mut vmax: f64 = 0.0;
        let grid: Vec<f64> = (0..=n).map(|i| s0 + (s1 - s0) * (i as f64) / (n as f64)).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| env.value(x)).collect();
        for &v in &vals {
            vmax = vmax.max(v);
        }
        let first = vals
            .iter()
            .position(|&v| v >= vmax * (1.0 - 1e-12))
            .expect("max attained on grid");
        let lo = grid[first.saturating_sub(1)];
        let hi = grid[(first + 1).min(n)];
        let xi0 = crate::numerics::golden_max(|x| env.value(x), lo, hi, lam * 1e-6);

        Ok(SlownessReport { delta, xi0 })
    }
}

impl WavePotential for Pulse {
    fn a_perp(&self, xi: f64) -> Vector2<f64> {
        Pulse::a_perp(self, xi)
    }

    fn support(&self) -> (f64, f64) {
        self.envelope.support()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.envelope.breakpoints()
    }

    fn oscillation_scale(&self) -> f64 {
        self.lambda
    }
}

/// Idealized circular wave with constant |u_perp|: the carrier rotates at
/// full amplitude from xi = 0 on, with no ramp. For an electron it gives the
/// textbook closed forms u_z = w0^2/2, Y3 = w0^2 xi / 2, Xi = (1 + w0^2/2) xi,
/// making it the fixture of choice for testing phase maps against paper-exact
/// expressions. The jump of u_perp at xi = 0 is the slow-ramp limit evaluated
/// on the plateau; after `xi_end` the primitive freezes (wave passed).
pub struct IdealCircularWave {
    /// Electron dimensionless amplitude on the plateau.
    pub w0: f64,
    /// Carrier wavenumber (1/cm).
    pub k: f64,
    /// End of the plateau (cm).
    pub xi_end: f64,
}

impl IdealCircularWave {
    pub fn new(w0: f64, lambda: f64, xi_end: f64) -> Self {
        IdealCircularWave { w0, k: 2.0 * std::f64::consts::PI / lambda, xi_end }
    }
}

impl WavePotential for IdealCircularWave {
    fn a_perp(&self, xi: f64) -> Vector2<f64> {
        // Electron u_perp = (e/m_e c^2) a_perp should equal w0 (cos, sin).
        let scale = self.w0 * crate::constants::ME_C2 / crate::constants::E_CHARGE;
        let p = self.k * xi.clamp(0.0, self.xi_end);
        if xi <= 0.0 {
            Vector2::zeros()
        } else {
            scale * Vector2::new(p.cos(), p.sin())
        }
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.xi_end)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, self.xi_end]
    }

    fn oscillation_scale(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k
    }
}
