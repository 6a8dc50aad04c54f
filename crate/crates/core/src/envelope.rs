//! Envelope shapes for the wave amplitude and the registry that builds them
//! by name.
//!
//! An envelope is the slowly varying amplitude eps_s(xi) >= 0 (statvolt/cm)
//! multiplying the carrier; it must vanish for xi <= 0 so the wave has not
//! yet reached the plasma/particle at x0 = 0. Each concrete shape lives
//! behind the [`Envelope`] trait object and is constructed at runtime from
//! string parameters through [`EnvelopeRegistry`], so configuration files can
//! select shapes by name and downstream code never matches on the concrete
//! type.

use crate::error::Error;
use crate::Result;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Relative level below which a nominally infinite envelope is truncated.
pub const TRUNCATION_RATIO: f64 = 1e-12;

/// A slowly varying, non-negative envelope with compact support in xi > 0.
pub trait Envelope: Send + Sync {
    /// Registry name of the shape.
    fn kind(&self) -> &'static str;

    /// eps_s(xi) (statvolt/cm); exactly 0 outside the support.
    fn value(&self, xi: f64) -> f64;

    /// d eps_s / d xi where the shape is smooth; at a breakpoint the
    /// right-side derivative.
    fn derivative(&self, xi: f64) -> f64;

    /// Closed support interval (first, last); value vanishes outside.
    fn support(&self) -> (f64, f64);

    /// Points where the shape or its derivative jumps (quadrature panels must
    /// not straddle them). Includes the support ends.
    fn breakpoints(&self) -> Vec<f64>;

    /// Peak amplitude (statvolt/cm).
    fn peak(&self) -> f64;
}

// ---------- gaussian ----------

/// Gaussian eps(xi) = peak * exp(-((xi - center)/sigma)^2), truncated where it
/// falls below `TRUNCATION_RATIO` of the peak and, if needed, shifted right so
/// the truncated support stays inside xi > 0.
#[derive(Debug, Clone)]
pub struct GaussianEnvelope {
    peak: f64,
    center: f64,
    sigma: f64,
    half_width: f64,
}

impl GaussianEnvelope {
    pub fn new(peak: f64, center: f64, sigma: f64) -> Result<Self> {
        if !(peak >= 0.0) || !peak.is_finite() {
            return Err(Error::domain(format!("gaussian peak must be >= 0, got {peak}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("gaussian sigma must be > 0, got {sigma}")));
        }
        let half_width = sigma * (1.0 / TRUNCATION_RATIO).ln().sqrt();
        // Shift right so the truncated support never reaches xi <= 0.
        let center = if center < half_width { half_width } else { center };
        Ok(GaussianEnvelope { peak, center, sigma, half_width })
    }

    /// Actual center after the possible wavefront shift.
    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Truncation half width sigma * sqrt(ln(1/TRUNCATION_RATIO)).
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

impl Envelope for GaussianEnvelope {
    fn kind(&self) -> &'static str {
        "gaussian"
    }

    fn value(&self, xi: f64) -> f64 {
        let d = xi - self.center;
        if d.abs() > self.half_width {
            return 0.0;
        }
        let t = d / self.sigma;
        self.peak * (-t * t).exp()
    }

    fn derivative(&self, xi: f64) -> f64 {
        let d = xi - self.center;
        if d.abs() > self.half_width {
            return 0.0;
        }
        self.value(xi) * (-2.0 * d / (self.sigma * self.sigma))
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.center - self.half_width, self.center + self.half_width]
    }

    fn peak(&self) -> f64 {
        self.peak
    }
}

// ---------- cutoff polynomial ----------

/// C1 bump eps(xi) = peak * 16 xi^2 (L - xi)^2 / L^4 on [0, L].
#[derive(Debug, Clone)]
pub struct PolynomialEnvelope {
    peak: f64,
    length: f64,
}

impl PolynomialEnvelope {
    pub fn new(peak: f64, length: f64) -> Result<Self> {
        if !(peak >= 0.0) || !peak.is_finite() {
            return Err(Error::domain(format!("polynomial peak must be >= 0, got {peak}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::domain(format!("polynomial length must be > 0, got {length}")));
        }
        Ok(PolynomialEnvelope { peak, length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

impl Envelope for PolynomialEnvelope {
    fn kind(&self) -> &'static str {
        "cutoff-polynomial"
    }

    fn value(&self, xi: f64) -> f64 {
        if xi <= 0.0 || xi >= self.length {
            return 0.0;
        }
        let l = self.length;
        self.peak * 16.0 * xi * xi * (l - xi) * (l - xi) / (l * l * l * l)
    }

    fn derivative(&self, xi: f64) -> f64 {
        if xi <= 0.0 || xi >= self.length {
            return 0.0;
        }
        let l = self.length;
        self.peak * 32.0 * xi * (l - xi) * (l - 2.0 * xi) / (l * l * l * l)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.length)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, self.length]
    }

    fn peak(&self) -> f64 {
        self.peak
    }
}

// ---------- constant window ----------

/// Discontinuous window eps(xi) = peak for 0 < xi <= L (a weak solution;
/// useful because every primitive has a closed form).
#[derive(Debug, Clone)]
pub struct WindowEnvelope {
    peak: f64,
    length: f64,
}

impl WindowEnvelope {
    pub fn new(peak: f64, length: f64) -> Result<Self> {
        if !(peak >= 0.0) || !peak.is_finite() {
            return Err(Error::domain(format!("window peak must be >= 0, got {peak}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::domain(format!("window length must be > 0, got {length}")));
        }
        Ok(WindowEnvelope { peak, length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

impl Envelope for WindowEnvelope {
    fn kind(&self) -> &'static str {
        "constant-window"
    }

    fn value(&self, xi: f64) -> f64 {
        if xi > 0.0 && xi <= self.length {
            self.peak
        } else {
            0.0
        }
    }

    fn derivative(&self, _xi: f64) -> f64 {
        0.0
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.length)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, self.length]
    }

    fn peak(&self) -> f64 {
        self.peak
    }
}

// ---------- user tabulated ----------

/// Piecewise-linear envelope through user-supplied (xi, eps) samples;
/// zero outside the tabulated range.
#[derive(Debug, Clone)]
pub struct TabulatedEnvelope {
    xi: Vec<f64>,
    eps: Vec<f64>,
    peak: f64,
}

impl TabulatedEnvelope {
    pub fn new(xi: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if xi.len() != eps.len() {
            return Err(Error::invalid(format!(
                "tabulated envelope: {} abscissae vs {} values",
                xi.len(),
                eps.len()
            )));
        }
        if xi.len() < 2 {
            return Err(Error::invalid("tabulated envelope needs at least 2 samples".to_string()));
        }
        for w in xi.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "tabulated envelope abscissae must increase strictly ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if xi[0] < 0.0 {
            return Err(Error::invalid(format!(
                "tabulated envelope must start at xi >= 0 (wavefront), got {}",
                xi[0]
            )));
        }
        let mut peak = 0.0f64;
        for &e in &eps {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::invalid(format!("tabulated envelope value {e} is not >= 0")));
            }
            peak = peak.max(e);
        }
        Ok(TabulatedEnvelope { xi, eps, peak })
    }

    /// Parse the two-column text format: optional `# xi epsilon` header,
    /// comment lines starting with #, rows "xi eps" in cm and statvolt/cm.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xi = Vec::new();
        let mut eps = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (a, b) = (it.next(), it.next());
            if it.next().is_some() {
                return Err(Error::invalid(format!(
                    "envelope table line {}: expected two columns, got more",
                    idx + 1
                )));
            }
            match (a, b) {
                (Some(a), Some(b)) => {
                    let x: f64 = a.parse().map_err(|_| {
                        Error::invalid(format!("envelope table line {}: bad xi '{a}'", idx + 1))
                    })?;
                    let e: f64 = b.parse().map_err(|_| {
                        Error::invalid(format!("envelope table line {}: bad epsilon '{b}'", idx + 1))
                    })?;
                    xi.push(x);
                    eps.push(e);
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "envelope table line {}: expected two columns",
                        idx + 1
                    )))
                }
            }
        }
        TabulatedEnvelope::new(xi, eps)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        TabulatedEnvelope::parse(&text)
    }

    fn segment(&self, xi: f64) -> Option<usize> {
        if xi < self.xi[0] || xi > *self.xi.last().expect("non-empty") {
            return None;
        }
        let i = match self.xi.binary_search_by(|x| x.partial_cmp(&xi).expect("NaN")) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Some(i.min(self.xi.len() - 2))
    }
}

impl Envelope for TabulatedEnvelope {
    fn kind(&self) -> &'static str {
        "user-tabulated"
    }

    fn value(&self, xi: f64) -> f64 {
        match self.segment(xi) {
            None => 0.0,
            Some(i) => {
                let t = (xi - self.xi[i]) / (self.xi[i + 1] - self.xi[i]);
                self.eps[i] + t * (self.eps[i + 1] - self.eps[i])
            }
        }
    }

    fn derivative(&self, xi: f64) -> f64 {
        match self.segment(xi) {
            None => 0.0,
            Some(i) => (self.eps[i + 1] - self.eps[i]) / (self.xi[i + 1] - self.xi[i]),
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.xi[0], *self.xi.last().expect("non-empty"))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.xi.clone()
    }

    fn peak(&self) -> f64 {
        self.peak
    }
}

// ---------- registry ----------

/// String parameters for an envelope factory (already split out of the
/// config section that selected the shape).
pub type EnvelopeParams = BTreeMap<String, String>;

/// Builds one envelope shape from named string parameters.
pub trait EnvelopeFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, params: &EnvelopeParams) -> Result<Arc<dyn Envelope>>;
}

fn require_f64(params: &EnvelopeParams, key: &str, kind: &str) -> Result<f64> {
    let raw = params
        .get(key)
        .ok_or_else(|| Error::invalid(format!("envelope '{kind}' requires parameter '{key}'")))?;
    raw.parse::<f64>()
        .map_err(|_| Error::invalid(format!("envelope '{kind}': parameter '{key}' = '{raw}' is not a number")))
}

fn reject_unknown(params: &EnvelopeParams, known: &[&str], kind: &str) -> Result<()> {
    for k in params.keys() {
        if !known.contains(&k.as_str()) {
            return Err(Error::invalid(format!("envelope '{kind}': unknown parameter '{k}'")));
        }
    }
    Ok(())
}

struct GaussianFactory;
impl EnvelopeFactory for GaussianFactory {
    fn name(&self) -> &'static str {
        "gaussian"
    }
    fn build(&self, params: &EnvelopeParams) -> Result<Arc<dyn Envelope>> {
        reject_unknown(params, &["peak", "center", "sigma"], self.name())?;
        Ok(Arc::new(GaussianEnvelope::new(
            require_f64(params, "peak", self.name())?,
            require_f64(params, "center", self.name())?,
            require_f64(params, "sigma", self.name())?,
        )?))
    }
}

struct PolynomialFactory;
impl EnvelopeFactory for PolynomialFactory {
    fn name(&self) -> &'static str {
        "cutoff-polynomial"
    }
    fn build(&self, params: &EnvelopeParams) -> Result<Arc<dyn Envelope>> {
        reject_unknown(params, &["peak", "length"], self.name())?;
        Ok(Arc::new(PolynomialEnvelope::new(
            require_f64(params, "peak", self.name())?,
            require_f64(params, "length", self.name())?,
        )?))
    }
}

struct WindowFactory;
impl EnvelopeFactory for WindowFactory {
    fn name(&self) -> &'static str {
        "constant-window"
    }
    fn build(&self, params: &EnvelopeParams) -> Result<Arc<dyn Envelope>> {
        reject_unknown(params, &["peak", "length"], self.name())?;
        Ok(Arc::new(WindowEnvelope::new(
            require_f64(params, "peak", self.name())?,
            require_f64(params, "length", self.name())?,
        )?))
    }
}

struct TabulatedFactory;
impl EnvelopeFactory for TabulatedFactory {
    fn name(&self) -> &'static str {
        "user-tabulated"
    }
    fn build(&self, params: &EnvelopeParams) -> Result<Arc<dyn Envelope>> {
        reject_unknown(params, &["path"], self.name())?;
        let path = params
            .get("path")
            .ok_or_else(|| Error::invalid("envelope 'user-tabulated' requires parameter 'path'"))?;
        Ok(Arc::new(TabulatedEnvelope::from_file(std::path::Path::new(path))?))
    }
}

/// Name-indexed collection of envelope factories. `builtin()` registers the
/// four shapes above; applications may register more.
pub struct EnvelopeRegistry {
    factories: BTreeMap<&'static str, Box<dyn EnvelopeFactory>>,
}

impl EnvelopeRegistry {
    pub fn empty() -> Self {
        EnvelopeRegistry { factories: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = EnvelopeRegistry::empty();
        r.register(Box::new(GaussianFactory));
        r.register(Box::new(PolynomialFactory));
        r.register(Box::new(WindowFactory));
        r.register(Box::new(TabulatedFactory));
        r
    }

    pub fn register(&mut self, factory: Box<dyn EnvelopeFactory>) {
        self.factories.insert(factory.name(), factory);
    }

    /// Build an envelope by registered name.
    pub fn build(&self, kind: &str, params: &EnvelopeParams) -> Result<Arc<dyn Envelope>> {
        match self.factories.get(kind) {
            Some(f) => f.build(params),
            None => Err(Error::invalid(format!(
                "unknown envelope kind '{kind}' (known: {})",
                self.names().join(", ")
            ))),
        }
    }

    /// Registered names, sorted.
    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }
}
