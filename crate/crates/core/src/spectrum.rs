//! Energy-loss density of an aloof electron over the stack, the quantum
//! coupling strength, its scaling laws, and the reference spectra used for
//! comparisons.
//!
//! The loss density per electron and per eV follows the classical
//! stratified-medium formula for a trajectory parallel to the surface:
//!
//! Gamma(u) = (2 alpha L / (pi hbar-c beta^2))
//!            * Int_0^inf dk_y  e^{-2 kappa x0} (kappa / k_par^2) Im r_p
//!
//! with k_par = sqrt((u / hbar-c beta)^2 + k_y^2) and the retarded decay
//! constant kappa = sqrt(k_par^2 - (u/hbar-c)^2). Only the p-polarized term
//! contributes to the bound modes of interest.

use crate::constants::{FINE_STRUCTURE, GAUSSIAN_FWHM_PER_SIGMA, HBAR_C_EV_NM};
use crate::dispersion::{
    default_e_grid, default_k_grid, dispersion_map, extract_ridge, phase_match,
    reflection_coefficient_p, DispersionError, ElectronKinematics,
};
use crate::grid::{GridFunction, UniformGrid};
use crate::materials::{DielectricModel, LayerStack, MaterialError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("invalid beam geometry: {0}")]
    BadBeam(String),
    #[error("spectrum has no emission mass; spectral density is undefined")]
    DegenerateSpectrum,
    #[error("{kev} keV electrons are above the Cherenkov threshold; the reference would not isolate the surface-plasmon response")]
    AboveThreshold { kev: f64 },
    #[error("medium is absorbing at {energy_ev} eV (Im eps = {im_eps}); the transparent-medium emission formula does not apply")]
    AbsorbingMedium { energy_ev: f64, im_eps: f64 },
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

/// Geometry of the grazing electron beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Centroid-to-surface distance, nm.
    pub impact_nm: f64,
    /// Transverse Gaussian standard deviation, nm.
    pub sigma_nm: f64,
    /// Effective interaction length, um.
    pub l_eff_um: f64,
    /// Maximal geometric interaction length, um.
    pub l_max_um: f64,
}

impl BeamGeometry {
    pub fn new(
        impact_nm: f64,
        sigma_nm: f64,
        l_eff_um: f64,
        l_max_um: f64,
    ) -> Result<Self, SpectrumError> {
        if impact_nm.is_nan() || impact_nm <= 0.0 {
            return Err(SpectrumError::BadBeam(format!(
                "impact parameter must be positive, got {impact_nm} nm"
            )));
        }
        if sigma_nm < 0.0 {
            return Err(SpectrumError::BadBeam(format!(
                "beam sigma must be nonnegative, got {sigma_nm} nm"
            )));
        }
        if !(l_eff_um > 0.0 && l_eff_um <= l_max_um) {
            return Err(SpectrumError::BadBeam(format!(
                "need 0 < l_eff <= l_max, got {l_eff_um} and {l_max_um} um"
            )));
        }
        Ok(Self {
            impact_nm,
            sigma_nm,
            l_eff_um,
            l_max_um,
        })
    }

    pub fn with_impact(&self, impact_nm: f64) -> Self {
        Self { impact_nm, ..*self }
    }

    pub fn with_l_eff(&self, l_eff_um: f64) -> Self {
        Self {
            l_eff_um,
            l_max_um: self.l_max_um.max(l_eff_um),
            ..*self
        }
    }
}

/// Default beam standard deviation, nm.
pub const DEFAULT_BEAM_SIGMA_NM: f64 = 30.0;

/// Positions closer to the surface than this are treated as electrons lost to
/// the sample and excluded from beam averages.
pub const BEAM_X_MIN_NM: f64 = 5.0;

/// The k_y integration stops once kappa*x0 reaches this value
/// (e^{-2*14} < 1e-12).
const KAPPA_X0_CUTOFF: f64 = 14.0;

/// Relative tolerance of the adaptive k_y quadrature.
const QUAD_REL_TOL: f64 = 1e-6;

/// Energy-resolved emission probability density per electron, 1/eV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossSpectrum {
    pub grid: UniformGrid,
    pub density: Vec<f64>,
    pub kinematics: ElectronKinematics,
}

impl LossSpectrum {
    /// Band-integrated emission probability, the Poisson parameter.
    pub fn lambda(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.step()
    }

    /// Parabolic-refined (energy, density) of the spectral maximum.
    pub fn peak(&self) -> (f64, f64) {
        let mut j = 0;
        for (i, v) in self.density.iter().enumerate() {
            if *v > self.density[j] {
                j = i;
            }
        }
        crate::grid::refine_parabolic(&self.density, j, self.grid.start(), self.grid.step())
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction::new(self.grid, self.density.clone()).expect("matching lengths")
    }

    pub fn fwhm(&self) -> Option<f64> {
        self.to_grid_function().fwhm()
    }
}

/// Quantum coupling strength and companions extracted from a loss spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub g_qu: f64,
    pub lambda: f64,
    /// Vacuum field decay constant at the spectral peak with k_y = 0, 1/nm.
    pub kappa_peak_per_nm: f64,
}

/// Default energy grid for loss spectra: 1.6 to 2.6 eV in 0.01 eV steps.
pub fn default_spectrum_grid() -> UniformGrid {
    UniformGrid::from_range(1.6, 2.6, 0.01).expect("valid grid")
}

/// Adaptive Simpson integration of f over [a, b] split into initial panels,
/// each refined until the classic |S2 - S1|/15 estimate meets the tolerance.
fn adaptive_simpson<F>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64, MaterialError>
where
    F: Fn(f64) -> Result<f64, MaterialError>,
{
    const INITIAL_PANELS: usize = 32;
    const MAX_DEPTH: usize = 24;

    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        (fa + 4.0 * fm + fb) * h / 6.0
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64, MaterialError>
    where
        F: Fn(f64) -> Result<f64, MaterialError>,
    {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }

    let h = (b - a) / INITIAL_PANELS as f64;
    // Rough scale from the initial panel estimates sets the absolute budget.
    let mut edges = Vec::with_capacity(INITIAL_PANELS + 1);
    let mut mids = Vec::with_capacity(INITIAL_PANELS);
    let mut f_edges = Vec::with_capacity(INITIAL_PANELS + 1);
    let mut f_mids = Vec::with_capacity(INITIAL_PANELS);
    for i in 0..=INITIAL_PANELS {
        let x = a + h * i as f64;
        edges.push(x);
        f_edges.push(f(x)?);
        if i < INITIAL_PANELS {
            let xm = a + h * (i as f64 + 0.5);
            mids.push(xm);
            f_mids.push(f(xm)?);
        }
    }
    let mut rough = 0.0;
    for i in 0..INITIAL_PANELS {
        rough += simpson(f_edges[i], f_mids[i], f_edges[i + 1], h);
    }
    let tol_per_panel = rel_tol * rough.abs().max(1e-300) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for i in 0..INITIAL_PANELS {
        let whole = simpson(f_edges[i], f_mids[i], f_edges[i + 1], h);
        total += recurse(
            f,
            edges[i],
            edges[i + 1],
            f_edges[i],
            f_mids[i],
            f_edges[i + 1],
            whole,
            tol_per_panel,
            MAX_DEPTH,
        )?;
    }
    Ok(total)
}

/// Loss density at a single energy for an electron at height x0.
fn loss_density_at(
    stack: &LayerStack,
    kin: &ElectronKinematics,
    x0_nm: f64,
    l_eff_um: f64,
    energy_ev: f64,
) -> Result<f64, MaterialError> {
    let q = kin.line_k(energy_ev);
    let kappa_min = q / kin.gamma;
    let kappa_max = KAPPA_X0_CUTOFF / x0_nm;
    if kappa_max <= kappa_min {
        return Ok(0.0);
    }
    let ky_max = (kappa_max * kappa_max - kappa_min * kappa_min).sqrt();
    let integrand = |ky: f64| -> Result<f64, MaterialError> {
        let kpar2 = q * q + ky * ky;
        let kpar = kpar2.sqrt();
        let kappa = (kappa_min * kappa_min + ky * ky).sqrt();
        let im_rp = reflection_coefficient_p(stack, kpar, energy_ev)?.im;
        Ok((-2.0 * kappa * x0_nm).exp() * (kappa / kpar2) * im_rp)
    };
    let integral = adaptive_simpson(&integrand, 0.0, ky_max, QUAD_REL_TOL)?;
    let l_nm = l_eff_um * 1000.0;
    let prefactor =
        2.0 * FINE_STRUCTURE * l_nm / (std::f64::consts::PI * HBAR_C_EV_NM * kin.beta * kin.beta);
    Ok(prefactor * integral)
}

/// Emission spectral density of one aloof electron on the given energy grid.
pub fn loss_density(
    stack: &LayerStack,
    kin: &ElectronKinematics,
    beam: &BeamGeometry,
    grid: &UniformGrid,
) -> Result<LossSpectrum, SpectrumError> {
    let density = (0..grid.len())
        .into_par_iter()
        .map(|i| loss_density_at(stack, kin, beam.impact_nm, beam.l_eff_um, grid.value(i)))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(LossSpectrum {
        grid: *grid,
        density,
        kinematics: *kin,
    })
}

/// Unit-area spectral density f_PQP = Gamma/lambda.
pub fn spectral_density(spec: &LossSpectrum) -> Result<GridFunction, SpectrumError> {
    let lambda = spec.lambda();
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(SpectrumError::DegenerateSpectrum);
    }
    let values = spec.density.iter().map(|v| v / lambda).collect();
    Ok(GridFunction::new(spec.grid, values)?)
}

/// lambda, g_Qu = sqrt(lambda), and the peak-energy decay constant.
pub fn coupling_strength(spec: &LossSpectrum) -> CouplingResult {
    let lambda = spec.lambda();
    let (u_peak, _) = spec.peak();
    let kappa_peak = u_peak / (HBAR_C_EV_NM * spec.kinematics.beta * spec.kinematics.gamma);
    CouplingResult {
        g_qu: lambda.max(0.0).sqrt(),
        lambda,
        kappa_peak_per_nm: kappa_peak,
    }
}

fn pointwise_coupling(
    stack: &LayerStack,
    kin: &ElectronKinematics,
    beam: &BeamGeometry,
    grid: &UniformGrid,
) -> Result<CouplingResult, SpectrumError> {
    Ok(coupling_strength(&loss_density(stack, kin, beam, grid)?))
}

/// Coupling strength averaged over the beam's transverse Gaussian profile,
/// truncated at x >= 5 nm and renormalized over the retained support.
/// Electrons below the cut count as lost, not as zero coupling.
pub fn average_over_beam(
    stack: &LayerStack,
    kin: &ElectronKinematics,
    beam: &BeamGeometry,
    grid: &UniformGrid,
) -> Result<CouplingResult, SpectrumError> {
    if beam.sigma_nm == 0.0 {
        return pointwise_coupling(stack, kin, beam, grid);
    }
    const NODES: usize = 65;
    let lo = (beam.impact_nm - 6.0 * beam.sigma_nm).max(BEAM_X_MIN_NM);
    let hi = beam.impact_nm + 6.0 * beam.sigma_nm;
    if lo >= hi {
        return Err(SpectrumError::BadBeam(format!(
            "beam support empty after the {BEAM_X_MIN_NM} nm surface cut"
        )));
    }
    let h = (hi - lo) / (NODES - 1) as f64;
    let xs: Vec<f64> = (0..NODES).map(|i| lo + h * i as f64).collect();
    let gs = xs
        .par_iter()
        .map(|&x| {
            pointwise_coupling(stack, kin, &beam.with_impact(x), grid).map(|c| c.g_qu)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (&x, &g)) in xs.iter().zip(&gs).enumerate() {
        let w = (-0.5 * ((x - beam.impact_nm) / beam.sigma_nm).powi(2)).exp();
        let t = if i == 0 || i + 1 == NODES { 0.5 } else { 1.0 };
        num += w * t * g;
        den += w * t;
    }
    let g_avg = num / den;
    let center = pointwise_coupling(stack, kin, beam, grid)?;
    Ok(CouplingResult {
        g_qu: g_avg,
        lambda: g_avg * g_avg,
        kappa_peak_per_nm: center.kappa_peak_per_nm,
    })
}

/// One point of the coupling surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub x0_nm: f64,
    pub l_eff_um: f64,
    pub g_qu: f64,
}

/// g_Qu over an (x0, L_eff) sweep. With beam.sigma_nm > 0 each point is
/// beam-averaged; with sigma = 0 each point equals the pointwise coupling of
/// a fresh loss density at those parameters.
pub fn coupling_scaling(
    stack: &LayerStack,
    kin: &ElectronKinematics,
    beam: &BeamGeometry,
    x0_values_nm: &[f64],
    l_eff_values_um: &[f64],
    grid: &UniformGrid,
) -> Result<Vec<ScalingPoint>, SpectrumError> {
    let mut out = Vec::with_capacity(x0_values_nm.len() * l_eff_values_um.len());
    for &x0 in x0_values_nm {
        for &l in l_eff_values_um {
            let b = beam.with_impact(x0).with_l_eff(l);
            let c = average_over_beam(stack, kin, &b, grid)?;
            out.push(ScalingPoint {
                x0_nm: x0,
                l_eff_um: l,
                g_qu: c.g_qu,
            });
        }
    }
    Ok(out)
}

/// Gaussian smoothing with a unit-sum kernel, zero-padded at the edges.
pub fn gaussian_smooth(values: &[f64], step: f64, fwhm: f64) -> Vec<f64> {
    if fwhm <= 0.0 {
        return values.to_vec();
    }
    let sigma = fwhm / GAUSSIAN_FWHM_PER_SIGMA;
    let half = ((5.0 * sigma / step).ceil() as usize).max(1);
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = (i as f64 - half as f64) * step;
            (-0.5 * (x / sigma).powi(2)).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    let n = values.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, k) in kernel.iter().enumerate() {
            let idx = i as i64 + j as i64 - half as i64;
            if idx >= 0 && (idx as usize) < n {
                acc += k * values[idx as usize];
            }
        }
        *o = acc / norm;
    }
    out
}

/// Default sub-threshold electron energy for the surface-plasmon reference.
pub const DEFAULT_SP_REFERENCE_KEV: f64 = 30.0;

/// Velocity-independent non-propagating surface-plasmon reference curve:
/// the loss density of a sub-threshold electron convolved with a Gaussian
/// zero-loss peak. Errors if the requested electron is actually above the
/// Cherenkov threshold for this stack.
pub fn sp_reference_spectrum(
    stack: &LayerStack,
    sub_threshold_kev: f64,
    zlp_fwhm_ev: f64,
    grid: &UniformGrid,
) -> Result<LossSpectrum, SpectrumError> {
    let kin = crate::dispersion::electron_kinematics(sub_threshold_kev)?;
    let map = dispersion_map(stack, &default_k_grid(), &default_e_grid())?;
    let ridge = extract_ridge(&map);
    if phase_match(&ridge, &kin).is_ok() {
        return Err(SpectrumError::AboveThreshold {
            kev: sub_threshold_kev,
        });
    }
    let beam = BeamGeometry::new(30.0, 0.0, 50.0, 250.0)?;
    let mut spec = loss_density(stack, &kin, &beam, grid)?;
    spec.density = gaussian_smooth(&spec.density, grid.step(), zlp_fwhm_ev);
    Ok(spec)
}

/// Bulk Cherenkov photon-number rate per unit path and energy,
/// (alpha/hbar-c) (1 - 1/(beta n)^2) above threshold, for a transparent
/// medium. Used only for the qualitative 3D-vs-2D comparison.
pub fn frank_tamm_3d(
    medium: &DielectricModel,
    kin: &ElectronKinematics,
    grid: &UniformGrid,
) -> Result<GridFunction, SpectrumError> {
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let e = grid.value(i);
        let eps = medium.evaluate(e)?;
        if eps.im.abs() > 1e-9 {
            return Err(SpectrumError::AbsorbingMedium {
                energy_ev: e,
                im_eps: eps.im,
            });
        }
        let n2 = eps.re;
        let bn2 = kin.beta * kin.beta * n2;
        values.push(if n2 > 0.0 && bn2 > 1.0 {
            (FINE_STRUCTURE / HBAR_C_EV_NM) * (1.0 - 1.0 / bn2)
        } else {
            0.0
        });
    }
    Ok(GridFunction::new(*grid, values)?)
}
