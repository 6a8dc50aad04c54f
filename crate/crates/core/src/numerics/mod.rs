//! Shared numerical kernels: Gauss-Kronrod quadrature, cumulative primitive
//! tables and bracketed root finding. Everything here is deterministic.

pub mod quadrature;
pub mod rootfind;

pub use quadrature::{adaptive_gk, gk15, CumulativeTable};
pub use rootfind::{bisect, golden_max, newton_bracketed};
