//! Physical constants in the unit system of the crate (eV, nm, keV).

/// hbar*c in eV*nm.
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;

/// Electron rest energy in keV.
pub const ELECTRON_REST_KEV: f64 = 510.999;

/// Fine-structure constant.
pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;

/// FWHM of a Gaussian divided by its standard deviation, 2*sqrt(2 ln 2).
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;
