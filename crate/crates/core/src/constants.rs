//! Physical constants in CGS-Gaussian units (CODATA 2018).

/// Speed of light (cm/s). Exact.
pub const C: f64 = 2.997_924_58e10;

/// Elementary charge (statC): 1.602176634e-19 C * 2.99792458e9 statC/C. Exact.
pub const E_CHARGE: f64 = 1.602_176_634e-19 * 2.997_924_58e9;

/// Electron mass (g).
pub const M_ELECTRON: f64 = 9.109_383_7015e-28;

/// Proton mass (g).
pub const M_PROTON: f64 = 1.672_621_923_69e-24;

/// Electron rest energy m_e c^2 (erg).
pub const ME_C2: f64 = M_ELECTRON * C * C;

/// Classical electron radius e^2 / (m_e c^2) (cm), defined through the
/// identity so that the r_e consistency check is exact by construction.
pub const R_ELECTRON: f64 = E_CHARGE * E_CHARGE / ME_C2;

/// erg per MeV. Exact.
pub const ERG_PER_MEV: f64 = 1.602_176_634e-6;

/// Electron rest energy in MeV (0.51099895...).
pub const ME_C2_MEV: f64 = ME_C2 / ERG_PER_MEV;

/// Default relative tolerance for algebraic identities and quadrature panels.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default threshold interpreting the strict inequalities ("<<") of the
/// validity conditions: a ratio passes when it is at most this value.
pub const DEFAULT_MUCH_LESS: f64 = 0.1;
