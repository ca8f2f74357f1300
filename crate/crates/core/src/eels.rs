//! Poisson-convolution forward model of the electron energy loss spectrum.
//!
//! The recorded spectrum mixes the n-quantum loss profiles
//! f_n = f_{n-1} * f_PQP with Poisson weights e^{-lambda} lambda^n / n!, plus
//! the non-interacting fraction (1 - p) of unshifted electrons. The detection
//! probability s only scales the recorded signal, so the output is
//! renormalized to unit area over the grid; s is kept in the parameter set
//! because measured spectra constrain only the product s*p.

use crate::grid::{GridError, GridFunction, UniformGrid};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EelsError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("grid [{lo}, {hi}] eV must cover +-4 FWHM = {need} eV around zero loss")]
    GridTooNarrow { lo: f64, hi: f64, need: f64 },
    #[error("ZLP FWHM {0} eV outside the supported [0.1, 2.0] eV range")]
    BadFwhm(f64),
    #[error("tabulated ZLP is empty or has no positive counts")]
    EmptyZlp,
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error("n_max = {n_max} truncates Poisson(lambda = {lambda}) with tail {tail:.2e} > 1e-6")]
    TailTooHeavy { n_max: usize, lambda: f64, tail: f64 },
}

/// Zero-loss peak model: analytic Gaussian or a measured profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ZlpModel {
    Gaussian { fwhm_ev: f64 },
    Tabulated { energies_ev: Vec<f64>, counts: Vec<f64> },
}

/// Default spectrometer resolution used throughout.
pub const DEFAULT_ZLP_FWHM_EV: f64 = 0.5;

/// Detector grid: -3 to +12 eV in 0.01 eV channels.
pub fn default_detector_grid() -> UniformGrid {
    UniformGrid::from_range(-3.0, 12.0, 0.01).expect("valid grid")
}

/// Sample the zero-loss peak on the grid as a unit-area profile centered at
/// u = 0.
pub fn make_zlp(grid: &UniformGrid, model: &ZlpModel) -> Result<GridFunction, EelsError> {
    match model {
        ZlpModel::Gaussian { fwhm_ev } => {
            if !(0.1..=2.0).contains(fwhm_ev) {
                return Err(EelsError::BadFwhm(*fwhm_ev));
            }
            if grid.start() > -4.0 * fwhm_ev || grid.end() < 4.0 * fwhm_ev {
                return Err(EelsError::GridTooNarrow {
                    lo: grid.start(),
                    hi: grid.end(),
                    need: 4.0 * fwhm_ev,
                });
            }
            let sigma = fwhm_ev / crate::constants::GAUSSIAN_FWHM_PER_SIGMA;
            let values: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let u = grid.value(i);
                    (-0.5 * (u / sigma).powi(2)).exp()
                })
                .collect();
            let mut f = GridFunction::new(*grid, values)?;
            f.normalize_to_unit_area();
            Ok(f)
        }
        ZlpModel::Tabulated { energies_ev, counts } => {
            if energies_ev.is_empty() || !counts.iter().any(|c| *c > 0.0) {
                return Err(EelsError::EmptyZlp);
            }
            let values: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let u = grid.value(i);
                    interp_clamped_zero(energies_ev, counts, u).max(0.0)
                })
                .collect();
            let mut f = GridFunction::new(*grid, values)?;
            if f.area() <= 0.0 {
                return Err(EelsError::EmptyZlp);
            }
            f.normalize_to_unit_area();
            Ok(f)
        }
    }
}

fn interp_clamped_zero(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() != ys.len() || xs.is_empty() {
        return 0.0;
    }
    if x < xs[0] || x > *xs.last().unwrap() {
        return 0.0;
    }
    let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i - 1,
    };
    let f = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - f) + ys[i + 1] * f
}

/// Discrete linear convolution scaled by the channel width; see
/// [`GridFunction::convolve`].
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction, EelsError> {
    Ok(f.convolve(g)?)
}

/// w_n = e^{-lambda} lambda^n / n! for n in 0..=n_max; errors when the
/// retained mass falls below 1 - 1e-6.
pub fn poisson_weights(lambda: f64, n_max: usize) -> Result<Vec<f64>, EelsError> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(EelsError::BadParameter(format!("lambda = {lambda}")));
    }
    let mut w = Vec::with_capacity(n_max + 1);
    let mut cur = (-lambda).exp();
    w.push(cur);
    for n in 1..=n_max {
        cur *= lambda / n as f64;
        w.push(cur);
    }
    let sum: f64 = w.iter().sum();
    if sum < 1.0 - 1e-6 {
        return Err(EelsError::TailTooHeavy {
            n_max,
            lambda,
            tail: 1.0 - sum,
        });
    }
    Ok(w)
}

/// Truncation order that keeps the Poisson tail below 1e-6.
pub fn auto_n_max(lambda: f64) -> usize {
    (lambda + 8.0 * lambda.sqrt() + 8.0).ceil() as usize
}

/// Parameters of the loss-spectrum mixture model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EelsModelParams {
    /// Poisson parameter, the mean number of emitted quanta.
    pub lambda: f64,
    /// Detection probability; degenerate with overall scale after the unit-
    /// area normalization.
    pub s: f64,
    /// Interaction probability (in fits this carries the product s*p).
    pub p: f64,
    pub n_max: usize,
}

impl EelsModelParams {
    pub fn new(lambda: f64, s: f64, p: f64) -> Result<Self, EelsError> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(EelsError::BadParameter(format!("lambda = {lambda}")));
        }
        for (name, v) in [("s", s), ("p", p)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(EelsError::BadParameter(format!("{name} = {v}")));
            }
        }
        Ok(Self {
            lambda,
            s,
            p,
            n_max: auto_n_max(lambda),
        })
    }
}

/// Simulated loss spectrum on the detector grid, unit area.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulatedEels {
    pub grid: UniformGrid,
    /// dP/du in 1/eV.
    pub density: Vec<f64>,
}

impl SimulatedEels {
    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction::new(self.grid, self.density.clone()).expect("matching lengths")
    }
}

/// Forward model: dP/du proportional to
/// p * sum_n w_n f_n(u) + (1-p) f_0(u), with f_0 the ZLP and
/// f_n = f_{n-1} * f_PQP, renormalized to unit area over the grid.
pub fn forward_eels(
    params: &EelsModelParams,
    f0: &GridFunction,
    f_pqp: &GridFunction,
) -> Result<SimulatedEels, EelsError> {
    let weights = poisson_weights(params.lambda, params.n_max)?;
    let mut acc = vec![0.0; f0.grid().len()];
    let mut f_n = f0.clone();
    for (n, w) in weights.iter().enumerate() {
        if n > 0 {
            f_n = f_n.convolve(f_pqp)?;
        }
        // Skip vanishing orders but keep the recursion exact.
        if *w > 0.0 {
            for (a, v) in acc.iter_mut().zip(f_n.values()) {
                *a += params.p * w * v;
            }
        }
    }
    for (a, v) in acc.iter_mut().zip(f0.values()) {
        *a += (1.0 - params.p) * v;
        // Transform-domain rounding can leave ~1e-16 ringing below zero.
        if *a < 0.0 {
            *a = 0.0;
        }
    }
    let mut out = GridFunction::new(*f0.grid(), acc)?;
    out.normalize_to_unit_area();
    Ok(SimulatedEels {
        grid: *f0.grid(),
        density: out.values().to_vec(),
    })
}
