//! Sectioned key=value run configuration.
//!
//! The format is deliberately plain: `[section]` headers, `key = value`
//! lines, `#` or `;` comments. Validation collects every problem it can
//! find, each tagged with its line number, instead of stopping at the first.

use nalgebra::Vector3;
use planewave::envelope::EnvelopeParams;
use planewave::kinematics::Species;
use planewave::pulse::Polarization;

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

/// Everything the config file may specify, as plain data. Core objects are
/// built later so that file problems and math problems stay separable.
#[derive(Debug, Clone)]
pub struct FileConfig {
    pub kind: String,
    pub lambda: f64,
    pub polarization: Polarization,
    /// Envelope parameters forwarded to the registry; `peak` is already
    /// resolved from either `peak` or `w0`.
    pub envelope: EnvelopeParams,
    pub n0: f64,
    pub species: Species,
    pub species_name: String,
    pub run: RunParams,
}

#[derive(Debug, Clone)]
pub struct RunParams {
    pub samples: usize,
    pub t_end: Option<f64>,
    pub z_label: f64,
    pub z_count: usize,
    pub z_max: f64,
    pub step: Option<f64>,
    pub tolerance: f64,
    pub threshold_t: f64,
    pub direction: Vector3<f64>,
    pub e1: Option<Vector3<f64>>,
    pub beta0: Vector3<f64>,
    pub x_init: Vector3<f64>,
    pub spot_radius: Option<f64>,
    pub pulse_length: Option<f64>,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            samples: 400,
            t_end: None,
            z_label: 0.0,
            z_count: 1,
            z_max: 0.0,
            step: None,
            tolerance: 1e-10,
            threshold_t: 0.1,
            direction: Vector3::new(0.0, 0.0, 1.0),
            e1: None,
            beta0: Vector3::zeros(),
            x_init: Vector3::zeros(),
            spot_radius: None,
            pulse_length: None,
        }
    }
}

const SECTIONS: [&str; 4] = ["pulse", "plasma", "species", "run"];

/// Drop a trailing `; ...` or `# ...` comment. Only whitespace-preceded
/// markers count, so values themselves may contain the characters.
fn strip_inline_comment(t: &str) -> &str {
    let bytes = t.as_bytes();
    for i in 1..bytes.len() {
        if (bytes[i] == b'#' || bytes[i] == b';') && bytes[i - 1].is_ascii_whitespace() {
            return t[..i].trim_end();
        }
    }
    t
}

fn lex(text: &str) -> (Vec<(String, Entry)>, Vec<String>) {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    // None: no header seen yet. Some(None): inside an already-reported
    // unknown section, whose keys are swallowed without further noise.
    let mut section: Option<Option<String>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = strip_inline_comment(raw.trim());
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(name) = t.strip_prefix('[') {
            match name.strip_suffix(']') {
                Some(name) if SECTIONS.contains(&name) => {
                    section = Some(Some(name.to_string()))
                }
                Some(name) => {
                    errors.push(format!(
                        "line {line}: unknown section [{name}] (known: {})",
                        SECTIONS.join(", ")
                    ));
                    section = Some(None);
                }
                None => errors.push(format!("line {line}: unterminated section header '{t}'")),
            }
            continue;
        }
        let Some((key, value)) = t.split_once('=') else {
            errors.push(format!("line {line}: expected 'key = value', got '{t}'"));
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            errors.push(format!("line {line}: empty key"));
            continue;
        }
        match &section {
            Some(Some(s)) => entries.push((s.clone(), Entry { key, value, line })),
            Some(None) => {}
            None => errors.push(format!("line {line}: '{key}' appears before any [section]")),
        }
    }
    (entries, errors)
}

struct Checker<'a> {
    entries: &'a [(String, Entry)],
    errors: Vec<String>,
}

impl<'a> Checker<'a> {
    fn take(&self, section: &str, key: &str) -> Option<&'a Entry> {
        let mut found = None;
        for (s, e) in self.entries {
            if s == section && e.key == key {
                found = Some(e);
            }
        }
        found
    }

    fn f64(&mut self, section: &str, key: &str) -> Option<(f64, usize)> {
        let e = self.take(section, key)?;
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Some((v, e.line)),
            _ => {
                self.errors.push(format!(
                    "line {}: [{section}] {key} must be a finite number, got '{}'",
                    e.line, e.value
                ));
                None
            }
        }
    }

    fn positive(&mut self, section: &str, key: &str) -> Option<f64> {
        let (v, line) = self.f64(section, key)?;
        if v > 0.0 {
            Some(v)
        } else {
            self.errors
                .push(format!("line {line}: [{section}] {key} must be > 0, got {v}"));
            None
        }
    }

    fn nonnegative(&mut self, section: &str, key: &str) -> Option<f64> {
        let (v, line) = self.f64(section, key)?;
        if v >= 0.0 {
            Some(v)
        } else {
            self.errors
                .push(format!("line {line}: [{section}] {key} must be >= 0, got {v}"));
            None
        }
    }

    fn count(&mut self, section: &str, key: &str) -> Option<usize> {
        let e = self.take(section, key)?;
        match e.value.parse::<usize>() {
            Ok(v) if v >= 1 => Some(v),
            _ => {
                self.errors.push(format!(
                    "line {}: [{section}] {key} must be a positive integer, got '{}'",
                    e.line, e.value
                ));
                None
            }
        }
    }

    fn triple(&mut self, section: &str, key: &str) -> Option<Vector3<f64>> {
        let e = self.take(section, key)?;
        let parts: Vec<_> = e.value.split(',').map(|p| p.trim().parse::<f64>()).collect();
        let ok = parts.len() == 3 && parts.iter().all(|p| matches!(p, Ok(v) if v.is_finite()));
        if ok {
            let v: Vec<f64> = parts.into_iter().map(|p| p.unwrap()).collect();
            Some(Vector3::new(v[0], v[1], v[2]))
        } else {
            self.errors.push(format!(
                "line {}: [{section}] {key} must be three comma-separated numbers, got '{}'",
                e.line, e.value
            ));
            None
        }
    }

    fn reject_unknown(&mut self, section: &str, known: &[&str]) {
        for (s, e) in self.entries {
            if s == section && !known.contains(&e.key.as_str()) {
                self.errors.push(format!(
                    "line {}: [{section}] unknown key '{}' (known: {})",
                    e.line,
                    e.key,
                    known.join(", ")
                ));
            }
        }
    }
}

/// Parse and validate; on failure every collected problem is returned.
pub fn parse(text: &str) -> Result<FileConfig, Vec<String>> {
    let (entries, mut errors) = lex(text);
    let mut c = Checker { entries: &entries, errors: Vec::new() };

    // [pulse]
    let kind = match c.take("pulse", "kind") {
        Some(e) => e.value.clone(),
        None => {
            c.errors.push("[pulse] kind is required".to_string());
            String::new()
        }
    };
    let lambda = c.positive("pulse", "lambda");
    if c.take("pulse", "lambda").is_none() {
        c.errors.push("[pulse] lambda is required".to_string());
    }
    let polarization = match c.take("pulse", "polarization") {
        Some(e) => match e.value.as_str() {
            "linear" => Some(Polarization::Linear),
            "circular" => Some(Polarization::Circular),
            other => {
                c.errors.push(format!(
                    "line {}: [pulse] polarization must be 'linear' or 'circular', got '{other}'",
                    e.line
                ));
                None
            }
        },
        None => {
            c.errors.push("[pulse] polarization is required".to_string());
            None
        }
    };

    // Amplitude: exactly one of peak (statvolt/cm) or w0 (dimensionless),
    // except for the user-tabulated envelope which carries its own values.
    let w0 = c.nonnegative("pulse", "w0");
    let peak_direct = c.nonnegative("pulse", "peak");
    let tabulated = kind == "user-tabulated";
    let mut envelope = EnvelopeParams::new();
    if tabulated {
        for key in ["peak", "w0", "center", "sigma", "length"] {
            if let Some(e) = c.take("pulse", key) {
                c.errors.push(format!(
                    "line {}: [pulse] '{}' does not apply to the user-tabulated envelope",
                    e.line, e.key
                ));
            }
        }
        match c.take("pulse", "path") {
            Some(e) => {
                envelope.insert("path".to_string(), e.value.clone());
            }
            None => c.errors.push("[pulse] path is required for the user-tabulated envelope".to_string()),
        }
    } else if !kind.is_empty() {
        let peak = match (peak_direct, w0, lambda) {
            (Some(_), Some(_), _) => {
                c.errors.push("[pulse] give either peak or w0, not both".to_string());
                None
            }
            (Some(p), None, _) => Some(p),
            (None, Some(w), Some(lam)) => Some(
                w * (2.0 * std::f64::consts::PI / lam) * planewave::constants::ME_C2
                    / planewave::constants::E_CHARGE,
            ),
            (None, Some(_), None) => None,
            (None, None, _) => {
                c.errors.push("[pulse] amplitude is required: set peak or w0".to_string());
                None
            }
        };
        if let Some(p) = peak {
            envelope.insert("peak".to_string(), format!("{p:?}"));
        }
        // Center may sit anywhere (the envelope shifts truncated tails
        // itself); widths must be positive.
        if let Some(e) = c.take("pulse", "center") {
            if c.f64("pulse", "center").is_some() {
                envelope.insert("center".to_string(), e.value.clone());
            }
        }
        for key in ["sigma", "length"] {
            if let Some(e) = c.take("pulse", key) {
                if c.positive("pulse", key).is_some() {
                    envelope.insert(key.to_string(), e.value.clone());
                }
            }
        }
        let required: &[&str] = match kind.as_str() {
            "gaussian" => &["center", "sigma"],
            "cutoff-polynomial" | "constant-window" => &["length"],
            other => {
                c.errors.push(format!(
                    "[pulse] unknown kind '{other}' (known: constant-window, cutoff-polynomial, gaussian, user-tabulated)"
                ));
                &[]
            }
        };
        for key in required {
            if c.take("pulse", key).is_none() {
                c.errors.push(format!("[pulse] {key} is required for kind '{kind}'"));
            }
        }
        for key in ["center", "sigma", "length", "path"] {
            if let Some(e) = c.take("pulse", key) {
                if !required.contains(&key) {
                    c.errors.push(format!(
                        "line {}: [pulse] '{key}' does not apply to kind '{kind}'",
                        e.line
                    ));
                }
            }
        }
    }
    c.reject_unknown(
        "pulse",
        &["kind", "lambda", "polarization", "peak", "w0", "center", "sigma", "length", "path"],
    );

    // [plasma]
    let n0 = c.nonnegative("plasma", "n0").unwrap_or(0.0);
    if let Some(e) = c.take("plasma", "profile") {
        if e.value != "step" {
            c.errors.push(format!(
                "line {}: [plasma] profile must be 'step', got '{}'",
                e.line, e.value
            ));
        }
    }
    c.reject_unknown("plasma", &["n0", "profile"]);

    // [species]
    let (species, species_name) = match c.take("species", "name") {
        None => (Species::electron(), "electron".to_string()),
        Some(e) => match e.value.as_str() {
            "electron" => (Species::electron(), e.value.clone()),
            "proton" => (Species::proton(), e.value.clone()),
            other => {
                c.errors.push(format!(
                    "line {}: [species] name must be 'electron' or 'proton', got '{other}'",
                    e.line
                ));
                (Species::electron(), "electron".to_string())
            }
        },
    };
    c.reject_unknown("species", &["name"]);

    // [run]
    let mut run = RunParams::default();
    if let Some(v) = c.count("run", "samples") {
        run.samples = v;
    }
    run.t_end = c.positive("run", "t_end");
    if let Some(v) = c.nonnegative("run", "z_label") {
        run.z_label = v;
    }
    if let Some(v) = c.count("run", "z_count") {
        run.z_count = v;
    }
    if let Some(v) = c.nonnegative("run", "z_max") {
        run.z_max = v;
    }
    run.step = c.positive("run", "step");
    if let Some(v) = c.positive("run", "tolerance") {
        run.tolerance = v;
    }
    if let Some(v) = c.positive("run", "threshold_T") {
        run.threshold_t = v;
    }
    if let Some(v) = c.triple("run", "direction") {
        run.direction = v;
    }
    run.e1 = c.triple("run", "e1");
    if let Some(v) = c.triple("run", "beta0") {
        run.beta0 = v;
    }
    if let Some(v) = c.triple("run", "x_init") {
        run.x_init = v;
    }
    run.spot_radius = c.positive("run", "spot_radius");
    run.pulse_length = c.positive("run", "pulse_length");
    match (run.spot_radius, run.pulse_length) {
        (Some(_), None) => c.errors.push("[run] spot_radius needs pulse_length too".to_string()),
        (None, Some(_)) => c.errors.push("[run] pulse_length needs spot_radius too".to_string()),
        _ => {}
    }
    c.reject_unknown(
        "run",
        &[
            "samples", "t_end", "z_label", "z_count", "z_max", "step", "tolerance",
            "threshold_T", "direction", "e1", "beta0", "x_init", "spot_radius", "pulse_length",
        ],
    );

    errors.extend(c.errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(FileConfig {
        kind,
        lambda: lambda.expect("validated"),
        polarization: polarization.expect("validated"),
        envelope,
        n0,
        species,
        species_name,
        run,
    })
}
