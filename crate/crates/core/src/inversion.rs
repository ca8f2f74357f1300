//! The data-analysis pipeline: ZLP handling, first-peak extraction,
//! repetition averaging, and nonlinear fitting of (lambda, s*p, x0).
//!
//! The fit minimizes plain least squares between the unit-area measurement
//! and the forward model, excluding channels below -1 eV (pure ZLP tail).
//! The local optimizer is a bounded Nelder-Mead simplex; multi-start points
//! come from a fixed seed list so identical inputs give bit-identical
//! results.

use crate::dispersion::ElectronKinematics;
use crate::eels::{forward_eels, EelsError, EelsModelParams};
use crate::grid::{GridError, GridFunction, UniformGrid};
use crate::materials::LayerStack;
use crate::spectrum::{loss_density, spectral_density, BeamGeometry, SpectrumError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Eels(#[from] EelsError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("measured spectrum invalid: {0}")]
    BadMeasurement(String),
    #[error("no significant peak in the window [{lo}, {hi}] eV (max {max:.3e} vs floor {floor:.3e})")]
    NoPeak { lo: f64, hi: f64, max: f64, floor: f64 },
    #[error("empty fit list")]
    EmptyFits,
    #[error("impact-parameter family must be spaced at most 5 nm, got {0} nm")]
    FamilyTooCoarse(f64),
    #[error("fit did not converge after all starts; best objective {best:.3e}")]
    NoConvergence { best: f64 },
}

/// Per-spectrum acquisition metadata carried alongside the counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SpectrumMetadata {
    pub kev: Option<f64>,
    pub x0_nm: Option<f64>,
    pub lmax_um: Option<f64>,
    pub rep: Option<u32>,
}

/// A recorded loss spectrum on uniform channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasuredSpectrum {
    pub channels: UniformGrid,
    pub counts: Vec<f64>,
    pub metadata: SpectrumMetadata,
}

impl MeasuredSpectrum {
    pub fn new(
        channels: UniformGrid,
        counts: Vec<f64>,
        metadata: SpectrumMetadata,
    ) -> Result<Self, FitError> {
        if counts.len() != channels.len() {
            return Err(FitError::BadMeasurement(format!(
                "{} counts on a {}-channel grid",
                counts.len(),
                channels.len()
            )));
        }
        if counts.iter().any(|c| *c < 0.0) {
            return Err(FitError::BadMeasurement("negative counts".into()));
        }
        let total: f64 = counts.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(FitError::BadMeasurement(
                "total counts must be positive".into(),
            ));
        }
        Ok(Self {
            channels,
            counts,
            metadata,
        })
    }

    pub fn unit_area(&self) -> GridFunction {
        let mut f = GridFunction::new(self.channels, self.counts.clone()).expect("validated");
        f.normalize_to_unit_area();
        f
    }
}

/// Gaussian matched to the first loss peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub center_ev: f64,
    pub sigma_ev: f64,
    pub amplitude: f64,
    pub residual_rms: f64,
}

/// Result of the quantum-coupling fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lambda_hat: f64,
    /// The product s*p; only it is identifiable from a normalized spectrum.
    pub sp_hat: f64,
    pub x0_hat_nm: f64,
    pub g_qu_hat: f64,
    pub residual_norm: f64,
    /// Per-parameter confidence half-widths from the local curvature of the
    /// objective along each axis (lambda, s*p, x0).
    pub confidence: [f64; 3],
    /// Index of the winning start, for reproducibility diagnostics.
    pub start_index: usize,
}

/// Normalize both spectra to unit area, align the ZLP reference to the
/// measurement's zero-loss maximum by cross-correlation, and subtract.
/// Negative residuals are clipped only in the loss region u > 3 sigma_ZLP.
pub fn normalize_and_subtract_zlp(
    meas: &MeasuredSpectrum,
    zlp_ref: &MeasuredSpectrum,
) -> Result<GridFunction, FitError> {
    let m = meas.unit_area();
    let z_raw = zlp_ref.unit_area();
    let z = if zlp_ref.channels.same_as(&meas.channels) {
        z_raw
    } else {
        let mut r = z_raw.resampled(meas.channels);
        r.normalize_to_unit_area();
        r
    };
    // Integer-channel cross-correlation over a +-1 eV window, parabolic
    // sub-channel refinement, fractional shift by linear interpolation.
    let step = meas.channels.step();
    let max_shift = (1.0 / step).round() as i64;
    let mut best = (0i64, f64::NEG_INFINITY);
    let mut scores = HashMap::new();
    for s in -max_shift..=max_shift {
        let mut acc = 0.0;
        for i in 0..m.grid().len() {
            let j = i as i64 - s;
            if j >= 0 && (j as usize) < m.grid().len() {
                acc += m.values()[i] * z.values()[j as usize];
            }
        }
        scores.insert(s, acc);
        if acc > best.1 {
            best = (s, acc);
        }
    }
    let s0 = best.0;
    let (ym, y0, yp) = (
        *scores.get(&(s0 - 1)).unwrap_or(&best.1),
        best.1,
        *scores.get(&(s0 + 1)).unwrap_or(&best.1),
    );
    let den = ym - 2.0 * y0 + yp;
    let frac = if den == 0.0 {
        0.0
    } else {
        (0.5 * (ym - yp) / den).clamp(-0.5, 0.5)
    };
    let shift = (s0 as f64 + frac) * step;
    let shifted: Vec<f64> = (0..m.grid().len())
        .map(|i| z.interp(m.grid().value(i) - shift))
        .collect();
    let sigma_zlp = z.fwhm().unwrap_or(0.5) / crate::constants::GAUSSIAN_FWHM_PER_SIGMA;
    let clip_from = 3.0 * sigma_zlp;
    let values: Vec<f64> = (0..m.grid().len())
        .map(|i| {
            let r = m.values()[i] - shifted[i];
            if m.grid().value(i) > clip_from {
                r.max(0.0)
            } else {
                r
            }
        })
        .collect();
    Ok(GridFunction::new(meas.channels, values)?)
}

/// Default first-peak search window in eV.
pub const FIRST_PEAK_WINDOW: (f64, f64) = (1.5, 2.8);

/// Least-squares Gaussian fit to the first loss lobe inside the window.
pub fn fit_first_peak(residual: &GridFunction, window: (f64, f64)) -> Result<PeakFit, FitError> {
    let (lo, hi) = window;
    let idx: Vec<usize> = (0..residual.grid().len())
        .filter(|i| {
            let u = residual.grid().value(*i);
            u >= lo && u <= hi
        })
        .collect();
    if idx.len() < 7 {
        return Err(FitError::NoPeak {
            lo,
            hi,
            max: 0.0,
            floor: 0.0,
        });
    }
    let ys: Vec<f64> = idx.iter().map(|i| residual.values()[*i]).collect();
    let us: Vec<f64> = idx.iter().map(|i| residual.grid().value(*i)).collect();
    let max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Local noise: deviation from a 7-channel moving average.
    let mut noise_acc = 0.0;
    let mut count = 0usize;
    for i in 3..ys.len() - 3 {
        let avg: f64 = ys[i - 3..=i + 3].iter().sum::<f64>() / 7.0;
        noise_acc += (ys[i] - avg).powi(2);
        count += 1;
    }
    let noise = if count > 0 {
        (noise_acc / count as f64).sqrt()
    } else {
        0.0
    };
    let floor = (3.0 * noise).max(1e-9);
    if max < floor {
        return Err(FitError::NoPeak { lo, hi, max, floor });
    }
    let jmax = ys.iter().position(|y| *y == max).unwrap_or(0);
    let start = [max, us[jmax], 0.15];
    let sse = |p: &[f64]| -> f64 {
        let (a, c, s) = (p[0], p[1], p[2].abs().max(1e-6));
        us.iter()
            .zip(&ys)
            .map(|(u, y)| {
                let g = a * (-0.5 * ((u - c) / s).powi(2)).exp();
                (g - y).powi(2)
            })
            .sum()
    };
    let scale = [0.3 * max.abs().max(1e-12), 0.1, 0.05];
    let lo_b = [0.0, lo, 1e-3];
    let hi_b = [10.0 * max.abs().max(1e-12), hi, hi - lo];
    let (best, obj) = nelder_mead(&sse, &start, &scale, &lo_b, &hi_b, 1e-10, 4000);
    let rms = (obj / us.len() as f64).sqrt();
    Ok(PeakFit {
        center_ev: best[1],
        sigma_ev: best[2].abs(),
        amplitude: best[0],
        residual_rms: rms,
    })
}

/// Unweighted mean and standard error of the fitted centers.
pub fn average_peaks(fits: &[PeakFit]) -> Result<(f64, f64), FitError> {
    if fits.is_empty() {
        return Err(FitError::EmptyFits);
    }
    let n = fits.len() as f64;
    let mean = fits.iter().map(|f| f.center_ev).sum::<f64>() / n;
    if fits.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = fits
        .iter()
        .map(|f| (f.center_ev - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Source of the single-quantum spectral profile used by the coupling fit.
pub enum FPqpModel<'a> {
    /// A fixed profile resampled to the measurement grid; the x0 axis of the
    /// fit is then inert.
    Fixed(GridFunction),
    /// Profile computed from the stack at the trial impact parameter.
    Stack {
        stack: &'a LayerStack,
        kin: ElectronKinematics,
        l_eff_um: f64,
        band: UniformGrid,
    },
}

impl FPqpModel<'_> {
    /// Unit-area f_PQP on the detector grid for the given impact parameter.
    fn profile(&self, x0_nm: f64, grid: &UniformGrid) -> Result<GridFunction, FitError> {
        match self {
            FPqpModel::Fixed(f) => {
                let mut g = f.resampled(*grid);
                g.normalize_to_unit_area();
                Ok(g)
            }
            FPqpModel::Stack {
                stack,
                kin,
                l_eff_um,
                band,
            } => {
                let beam = BeamGeometry::new(x0_nm, 0.0, *l_eff_um, f64::MAX)?;
                let spec = loss_density(stack, kin, &beam, band)?;
                let f = spectral_density(&spec)?;
                let mut g = f.resampled(*grid);
                g.normalize_to_unit_area();
                Ok(g)
            }
        }
    }
}

/// Options of the coupling fit; the defaults implement the bounded
/// multi-start search described in the module docs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub lambda_bounds: (f64, f64),
    pub sp_bounds: (f64, f64),
    pub x0_bounds_nm: (f64, f64),
    /// One start per seed; the list length fixes the number of starts.
    pub seeds: Vec<u64>,
    /// Fix the impact parameter instead of fitting it.
    pub fix_x0_nm: Option<f64>,
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lambda_bounds: (0.0, 5.0),
            sp_bounds: (0.0, 1.0),
            x0_bounds_nm: (5.0, 200.0),
            seeds: vec![1, 2, 3, 4, 5, 6, 7, 8],
            fix_x0_nm: None,
            max_iters: 400,
        }
    }
}

/// Channels below this loss are excluded from the fit objective.
const FIT_EXCLUDE_BELOW_EV: f64 = -1.0;

/// Convergence threshold on the simplex diameter in scaled parameters.
const SIMPLEX_TOL: f64 = 1e-4;

/// Objective values above this after refinement count as non-convergence.
const OBJECTIVE_CEILING: f64 = 1e3;

/// Recover (lambda, s*p, x0) from a measured spectrum by bounded multi-start
/// least squares against the forward model.
pub fn fit_quantum_coupling(
    meas: &MeasuredSpectrum,
    model: &FPqpModel,
    zlp: &GridFunction,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let target = meas.unit_area();
    let grid = meas.channels;
    if !zlp.grid().same_as(&grid) {
        return Err(FitError::BadMeasurement(
            "ZLP must be sampled on the measurement grid".into(),
        ));
    }
    let mask: Vec<usize> = (0..grid.len())
        .filter(|i| grid.value(*i) >= FIT_EXCLUDE_BELOW_EV)
        .collect();

    // Profiles are deterministic in x0; cache them keyed by the exact bits.
    let cache: Mutex<HashMap<u64, GridFunction>> = Mutex::new(HashMap::new());
    let profile_at = |x0: f64| -> Result<GridFunction, FitError> {
        let key = x0.to_bits();
        if let Some(f) = cache.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let f = model.profile(x0, &grid)?;
        cache.lock().unwrap().insert(key, f.clone());
        Ok(f)
    };

    let objective = |p: &[f64]| -> f64 {
        let (lambda, sp, x0) = (p[0], p[1], p[2]);
        let f_pqp = match profile_at(x0) {
            Ok(f) => f,
            Err(_) => return f64::INFINITY,
        };
        let params = match EelsModelParams::new(lambda, 1.0, sp) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        let sim = match forward_eels(&params, zlp, &f_pqp) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        mask.iter()
            .map(|&i| (sim.density[i] - target.values()[i]).powi(2))
            .sum()
    };

    let (x0_lo, x0_hi) = match opts.fix_x0_nm {
        Some(x) => (x, x),
        None => opts.x0_bounds_nm,
    };
    let lo = [opts.lambda_bounds.0, opts.sp_bounds.0, x0_lo];
    let hi = [opts.lambda_bounds.1, opts.sp_bounds.1, x0_hi];
    let starts: Vec<(usize, [f64; 3])> = opts
        .seeds
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut draw = |a: f64, b: f64| if a == b { a } else { rng.gen_range(a..b) };
            (
                i,
                [
                    draw(lo[0].max(0.05), hi[0]),
                    draw(lo[1].max(0.05), hi[1]),
                    draw(lo[2], hi[2]),
                ],
            )
        })
        .collect();
    let scale = [
        0.25 * (hi[0] - lo[0]).max(1e-6),
        0.25 * (hi[1] - lo[1]).max(1e-6),
        0.25 * (hi[2] - lo[2]).max(1e-6),
    ];

    let results: Vec<(usize, [f64; 3], f64)> = starts
        .par_iter()
        .map(|(i, start)| {
            let (p, obj) =
                nelder_mead(&objective, start, &scale, &lo, &hi, SIMPLEX_TOL, opts.max_iters);
            (*i, p, obj)
        })
        .collect();
    let best = results
        .iter()
        .min_by(|a, b| (a.2, a.0).partial_cmp(&(b.2, b.0)).unwrap())
        .expect("at least one start");
    if !best.2.is_finite() || best.2 > OBJECTIVE_CEILING {
        return Err(FitError::NoConvergence { best: best.2 });
    }
    let p = best.1;
    // Quadratic curvature along each axis gives the confidence half-widths.
    let dof = (mask.len().saturating_sub(3)).max(1) as f64;
    let sigma2 = best.2 / dof;
    let mut confidence = [f64::NAN; 3];
    for a in 0..3 {
        if lo[a] == hi[a] {
            confidence[a] = 0.0;
            continue;
        }
        let d = scale[a] * 0.05;
        let mut plus = p;
        plus[a] = (p[a] + d).min(hi[a]);
        let mut minus = p;
        minus[a] = (p[a] - d).max(lo[a]);
        let (op, om) = (objective(&plus), objective(&minus));
        let curv = (op + om - 2.0 * best.2) / (d * d);
        confidence[a] = if curv > 0.0 {
            (2.0 * sigma2 / curv).sqrt()
        } else {
            f64::INFINITY
        };
    }
    Ok(FitResult {
        lambda_hat: p[0],
        sp_hat: p[1],
        x0_hat_nm: p[2],
        g_qu_hat: p[0].max(0.0).sqrt(),
        residual_norm: best.2.sqrt(),
        confidence,
        start_index: best.0,
    })
}

/// Identify the impact parameter by L2 shape comparison against a
/// precomputed family, with parabolic refinement across the best three
/// grid points.
pub fn fit_impact_parameter(
    shape: &GridFunction,
    family: &[(f64, GridFunction)],
) -> Result<f64, FitError> {
    if family.len() < 3 {
        return Err(FitError::FamilyTooCoarse(f64::INFINITY));
    }
    let mut spacing: f64 = 0.0;
    for w in family.windows(2) {
        spacing = spacing.max(w[1].0 - w[0].0);
    }
    if spacing > 5.0 + 1e-9 {
        return Err(FitError::FamilyTooCoarse(spacing));
    }
    let mut target = shape.clone();
    target.normalize_to_unit_area();
    let dists: Vec<f64> = family
        .iter()
        .map(|(_, f)| {
            let mut g = f.resampled(*shape.grid());
            g.normalize_to_unit_area();
            g.values()
                .iter()
                .zip(target.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .collect();
    let mut j = 0;
    for (i, d) in dists.iter().enumerate() {
        if *d < dists[j] {
            j = i;
        }
    }
    if j == 0 || j + 1 == family.len() {
        return Ok(family[j].0);
    }
    let (y0, y1, y2) = (dists[j - 1], dists[j], dists[j + 1]);
    // An exact family member cannot be improved on by interpolation.
    if y1 <= 1e-15 * y0.max(y2) {
        return Ok(family[j].0);
    }
    let den = y0 - 2.0 * y1 + y2;
    if den <= 0.0 {
        return Ok(family[j].0);
    }
    let d = (0.5 * (y0 - y2) / den).clamp(-1.0, 1.0);
    let h = 0.5 * (family[j + 1].0 - family[j - 1].0);
    Ok(family[j].0 + d * h)
}

/// Bounded Nelder-Mead simplex minimization. Deterministic: the path depends
/// only on the start, scales and bounds. Returns the best vertex and value
/// once the simplex diameter in scaled units drops below tol or the
/// iteration budget runs out.
pub fn nelder_mead<F>(
    f: &F,
    start: &[f64; 3],
    scale: &[f64; 3],
    lo: &[f64; 3],
    hi: &[f64; 3],
    tol: f64,
    max_iters: usize,
) -> ([f64; 3], f64)
where
    F: Fn(&[f64]) -> f64,
{
    let clamp = |p: &mut [f64; 3]| {
        for a in 0..3 {
            p[a] = p[a].clamp(lo[a], hi[a]);
        }
    };
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    let mut v0 = *start;
    clamp(&mut v0);
    simplex.push((v0, f(&v0)));
    for a in 0..3 {
        let mut v = v0;
        if lo[a] == hi[a] {
            // Degenerate (fixed) axis: nudge a live axis instead to keep the
            // simplex non-flat.
            v[(a + 1) % 3] += 0.5 * scale[(a + 1) % 3];
        } else {
            v[a] += if v[a] + scale[a] <= hi[a] {
                scale[a]
            } else {
                -scale[a]
            };
        }
        clamp(&mut v);
        simplex.push((v, f(&v)));
    }
    let n = 3usize;
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let mut diam: f64 = 0.0;
        for i in 1..simplex.len() {
            let mut d: f64 = 0.0;
            for (a, sc) in scale.iter().enumerate().take(n) {
                let s = sc.max(1e-12);
                d = d.max(((simplex[i].0[a] - simplex[0].0[a]) / s).abs());
            }
            diam = diam.max(d);
        }
        if diam < tol {
            break;
        }
        let worst = simplex[n];
        let mut centroid = [0.0; 3];
        for v in simplex.iter().take(n) {
            for (a, c) in centroid.iter_mut().enumerate() {
                *c += v.0[a] / n as f64;
            }
        }
        let make = |t: f64| {
            let mut p = [0.0; 3];
            for a in 0..n {
                p[a] = centroid[a] + t * (centroid[a] - worst.0[a]);
            }
            clamp(&mut p);
            let val = f(&p);
            (p, val)
        };
        let reflect = make(1.0);
        if reflect.1 < simplex[0].1 {
            let expand = make(2.0);
            simplex[n] = if expand.1 < reflect.1 { expand } else { reflect };
        } else if reflect.1 < simplex[n - 1].1 {
            simplex[n] = reflect;
        } else {
            let contract = if reflect.1 < worst.1 {
                make(0.5)
            } else {
                make(-0.5)
            };
            if contract.1 < worst.1.min(reflect.1) {
                simplex[n] = contract;
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0];
                for v in simplex.iter_mut().skip(1) {
                    for a in 0..n {
                        v.0[a] = best.0[a] + 0.5 * (v.0[a] - best.0[a]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    (simplex[0].0, simplex[0].1)
}
