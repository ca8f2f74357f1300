//! Desk-scale toolkit for surface-wave (2D) Cherenkov radiation.
//!
//! The crate models the full chain from stratified optics to quantum state
//! reconstruction:
//!
//! - [`materials`]: frequency-dependent complex permittivities and the
//!   metal-dielectric multilayer used in the experiment.
//! - [`dispersion`]: p-polarized reflection by interface recursion, the
//!   Im\[r_p\] ridge that acts as the quasiparticle dispersion curve, and the
//!   Cherenkov phase-matching solver.
//! - [`spectrum`]: aloof-trajectory energy-loss density, quantum coupling
//!   strength g_Qu and its scaling with impact parameter and interaction
//!   length, beam averaging, and reference spectra.
//! - [`eels`]: Poisson-convolution forward model for multi-quantum
//!   electron energy loss spectra.
//! - [`inversion`]: ZLP subtraction, peak fitting, and nonlinear recovery of
//!   (lambda, s*p, x0) from measured or synthetic spectra.
//! - [`quantum`]: truncated electron-ladder x photon-Fock joint states, the
//!   exponential scattering matrix, partial traces, and coherent-state
//!   diagnostics.
//!
//! All energies are in eV, lengths in nm, interaction lengths in um, and
//! electron kinetic energies in keV unless a name says otherwise.

pub mod constants;
pub mod dispersion;
pub mod eels;
pub mod export;
pub mod grid;
pub mod inversion;
pub mod materials;
pub mod quantum;
pub mod spectrum;

pub use dispersion::{ElectronKinematics, PhaseMatchResult};
pub use grid::{GridFunction, UniformGrid};
pub use materials::{DielectricModel, Layer, LayerStack};
pub use spectrum::{BeamGeometry, CouplingResult, LossSpectrum};
