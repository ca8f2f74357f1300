//! Truncated joint electron-photon states and the exponential scattering
//! matrix S = exp(g b a† - g* b† a).
//!
//! The electron ladder is a finite shift register: rung j carries energy
//! E_ref - j*hbar-omega0, so b (one quantum emitted) moves j -> j+1 with unit
//! amplitude, and a† is the usual photon raising operator. The generator
//! couples only states with equal j - n, so the joint space splits into
//! invariant ladders; each block exponential is computed exactly by scaled
//! Taylor summation with repeated squaring, which keeps the assembled matrix
//! unitary to machine precision away from the truncation edges.
//!
//! A single photon mode at the spectral peak energy is simulated; the narrow
//! quasiparticle band justifies the single-mode treatment, and multi-mode
//! joint states (including spatial distinguishability from the finite
//! propagation length) are out of scope.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("photon truncation n_max = {n_max} too small for |g| = {g_abs} (need at least {need})")]
    TruncationTooSmall { n_max: usize, g_abs: f64, need: usize },
    #[error("electron register j_dim = {j_dim} too small: need n_max + comb width + 4 = {need}")]
    RegisterTooSmall { j_dim: usize, need: usize },
    #[error("preparation comb is empty or has zero norm")]
    EmptyComb,
    #[error("evolution leaked norm {leak:.3e} > 1e-6; truncation too tight")]
    NormLeak { leak: f64 },
    #[error("coherent amplitude |alpha|^2 = {alpha2} exceeds n_max/4 = {limit}")]
    CoherentTruncation { alpha2: f64, limit: f64 },
    #[error(transparent)]
    Eels(#[from] crate::eels::EelsError),
}

/// Smallest max photon number that keeps the Poisson tail of |g|^2 below
/// 1e-6.
pub fn required_n_max(g_abs: f64) -> usize {
    let lambda = g_abs * g_abs;
    (lambda + 8.0 * lambda.sqrt() + 8.0).ceil() as usize
}

/// Margin of electron rungs kept above the first comb rung.
const COMB_START: usize = 2;

/// Dense unitary on the (electron rung x photon Fock) product space.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    pub g: Complex64,
    pub j_dim: usize,
    /// Max photon number; the photon space has n_max + 1 states.
    pub n_max: usize,
    /// Row-major dense matrix of dimension j_dim*(n_max+1).
    data: Vec<Complex64>,
}

impl ScatteringMatrix {
    pub fn dim(&self) -> usize {
        self.j_dim * (self.n_max + 1)
    }

    #[inline]
    fn idx(&self, j: usize, n: usize) -> usize {
        j * (self.n_max + 1) + n
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        assert_eq!(psi.len(), d);
        let mut out = vec![Complex64::default(); d];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * d..(r + 1) * d];
            let mut acc = Complex64::default();
            for (m, p) in row.iter().zip(psi) {
                acc += m * p;
            }
            *o = acc;
        }
        out
    }

    /// max |(S†S - I)[r][c]| over rows and columns at least 4 indices away
    /// from every truncation edge of the register and the Fock space.
    pub fn interior_unitarity_error(&self) -> f64 {
        let d = self.dim();
        let nd = self.n_max + 1;
        let interior = |idx: usize| {
            let (j, n) = (idx / nd, idx % nd);
            j >= 4 && j + 4 < self.j_dim && n + 4 <= self.n_max
        };
        let mut max_dev = 0.0f64;
        for c in 0..d {
            if !interior(c) {
                continue;
            }
            let col: Vec<Complex64> = (0..d).map(|r| self.element(r, c)).collect();
            for r in 0..d {
                if !interior(r) {
                    continue;
                }
                let mut acc = Complex64::default();
                for (k, v) in col.iter().enumerate() {
                    acc += self.element(k, r).conj() * v;
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                max_dev = max_dev.max((acc - expect).norm());
            }
        }
        max_dev
    }
}

/// Multiply two square complex matrices (row-major).
fn matmul(a: &[Complex64], b: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::default(); m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == Complex64::default() {
                continue;
            }
            let brow = &b[k * m..(k + 1) * m];
            let crow = &mut c[i * m..(i + 1) * m];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += aik * bv;
            }
        }
    }
    c
}

/// exp(T) of a small dense matrix by scaling and squaring with a Taylor
/// series run to machine precision.
fn expm_small(t: &[Complex64], m: usize, norm_bound: f64) -> Vec<Complex64> {
    let s = if norm_bound > 0.5 {
        (norm_bound / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 1.0 / f64::powi(2.0, s as i32);
    let a: Vec<Complex64> = t.iter().map(|v| v * scale).collect();
    // exp(a) = sum a^k / k!
    let mut result = vec![Complex64::default(); m * m];
    for i in 0..m {
        result[i * m + i] = Complex64::new(1.0, 0.0);
    }
    let mut term = result.clone();
    for k in 1..200 {
        term = matmul(&term, &a, m);
        for v in &mut term {
            *v /= k as f64;
        }
        let mut max = 0.0f64;
        for (r, v) in result.iter_mut().zip(&term) {
            *r += v;
            max = max.max(v.norm());
        }
        if max < 1e-20 {
            break;
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result, m);
    }
    result
}

/// Exact exponential of G = g (b x a†) - g* (b† x a) on the truncated joint
/// space, assembled block-by-block over the invariant j - n ladders.
pub fn build_scattering_matrix(
    g: Complex64,
    j_dim: usize,
    n_max: usize,
) -> Result<ScatteringMatrix, QuantumError> {
    let need = required_n_max(g.norm());
    if n_max < need {
        return Err(QuantumError::TruncationTooSmall {
            n_max,
            g_abs: g.norm(),
            need,
        });
    }
    let n_dim = n_max + 1;
    let d = j_dim * n_dim;
    let mut data = vec![Complex64::default(); d * d];
    // Subspace label c = j - n ranges over -(n_dim-1) ..= j_dim-1.
    for c in -(n_dim as i64 - 1)..=(j_dim as i64 - 1) {
        let n_lo = (-c).max(0) as usize;
        let n_hi = n_max.min((j_dim as i64 - 1 - c) as usize);
        if n_lo > n_hi {
            continue;
        }
        let m = n_hi - n_lo + 1;
        // Tridiagonal generator within the ladder, basis index p = n - n_lo.
        let mut t = vec![Complex64::default(); m * m];
        for p in 0..m - 1 {
            let n = n_lo + p;
            // (j, n) -> (j+1, n+1) with amplitude g*sqrt(n+1).
            let amp = ((n + 1) as f64).sqrt();
            t[(p + 1) * m + p] = g * amp;
            t[p * m + (p + 1)] = -g.conj() * amp;
        }
        let norm_bound = 2.0 * g.norm() * ((n_hi + 1) as f64).sqrt();
        let block = expm_small(&t, m, norm_bound);
        for p in 0..m {
            let n_row = n_lo + p;
            let j_row = (c + n_row as i64) as usize;
            let row = j_row * n_dim + n_row;
            for q in 0..m {
                let n_col = n_lo + q;
                let j_col = (c + n_col as i64) as usize;
                let col = j_col * n_dim + n_col;
                data[row * d + col] = block[p * m + q];
            }
        }
    }
    Ok(ScatteringMatrix {
        g,
        j_dim,
        n_max,
        data,
    })
}

/// Initial electron state: a coherent comb of rung amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectronPreparation {
    pub comb: Vec<Complex64>,
}

impl ElectronPreparation {
    /// Single-rung electron, the narrow-energy-uncertainty case.
    pub fn single_rung() -> Self {
        Self {
            comb: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Flat-amplitude zero-phase comb over k rungs, the wide-uncertainty
    /// (classical-limit) case.
    pub fn flat_comb(k: usize) -> Self {
        let amp = Complex64::new(1.0 / (k as f64).sqrt(), 0.0);
        Self {
            comb: vec![amp; k.max(1)],
        }
    }

    pub fn width(&self) -> usize {
        self.comb.len()
    }
}

/// Joint amplitudes A[j][n] after the interaction plus its grid metadata.
#[derive(Debug, Clone)]
pub struct JointState {
    pub amplitudes: Vec<Complex64>,
    pub j_dim: usize,
    pub n_max: usize,
    /// First rung of the initial comb; losses are counted from here.
    pub j_ref: usize,
    pub omega0_ev: f64,
}

impl JointState {
    #[inline]
    pub fn amp(&self, j: usize, n: usize) -> Complex64 {
        self.amplitudes[j * (self.n_max + 1) + n]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rung populations P(j) = sum_n |A[j][n]|^2.
    pub fn rung_populations(&self) -> Vec<f64> {
        (0..self.j_dim)
            .map(|j| (0..=self.n_max).map(|n| self.amp(j, n).norm_sqr()).sum())
            .collect()
    }

    pub fn photon_populations(&self) -> Vec<f64> {
        (0..=self.n_max)
            .map(|n| (0..self.j_dim).map(|j| self.amp(j, n).norm_sqr()).sum())
            .collect()
    }

    pub fn mean_rung(&self) -> f64 {
        self.rung_populations()
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * p)
            .sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.photon_populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Apply S to (comb x |0>). The comb is placed COMB_START rungs below the
/// register top so neither ladder end is reachable from the populated sector.
pub fn evolve(
    prep: &ElectronPreparation,
    s: &ScatteringMatrix,
    omega0_ev: f64,
) -> Result<JointState, QuantumError> {
    let k = prep.width();
    let norm: f64 = prep.comb.iter().map(|c| c.norm_sqr()).sum();
    if k == 0 || norm <= 0.0 {
        return Err(QuantumError::EmptyComb);
    }
    let need = s.n_max + k + 4;
    if s.j_dim < need {
        return Err(QuantumError::RegisterTooSmall {
            j_dim: s.j_dim,
            need,
        });
    }
    let d = s.dim();
    let mut psi = vec![Complex64::default(); d];
    let scale = norm.sqrt();
    for (i, c) in prep.comb.iter().enumerate() {
        psi[s.idx(COMB_START + i, 0)] = c / scale;
    }
    let out = s.apply(&psi);
    let out_norm: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    let leak = (1.0 - out_norm).abs();
    if leak > 1e-6 {
        return Err(QuantumError::NormLeak { leak });
    }
    Ok(JointState {
        amplitudes: out,
        j_dim: s.j_dim,
        n_max: s.n_max,
        j_ref: COMB_START,
        omega0_ev,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    PhotonFock,
    ElectronRung,
}

/// Hermitian density matrix with its basis label.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub basis: Basis,
    pub dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.element(i, i).re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.element(i, i).re).collect()
    }

    /// Tr rho^2.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self.element(i, j) * self.element(j, i)).re;
            }
        }
        acc
    }

    pub fn max_offdiag(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    m = m.max(self.element(i, j).norm());
                }
            }
        }
        m
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }
}

/// Photon reduced density matrix: rho[n][m] = sum_j A[j][n] conj(A[j][m]).
pub fn photon_marginal(state: &JointState) -> DensityMatrix {
    let nd = state.n_max + 1;
    let mut data = vec![Complex64::default(); nd * nd];
    for j in 0..state.j_dim {
        for n in 0..nd {
            let a_n = state.amp(j, n);
            if a_n == Complex64::default() {
                continue;
            }
            for m in 0..nd {
                data[n * nd + m] += a_n * state.amp(j, m).conj();
            }
        }
    }
    DensityMatrix {
        basis: Basis::PhotonFock,
        dim: nd,
        data,
    }
}

/// Electron reduced density matrix in the rung basis.
pub fn electron_marginal_matrix(state: &JointState) -> DensityMatrix {
    let nd = state.n_max + 1;
    let jd = state.j_dim;
    let mut data = vec![Complex64::default(); jd * jd];
    for n in 0..nd {
        for j in 0..jd {
            let a_j = state.amp(j, n);
            if a_j == Complex64::default() {
                continue;
            }
            for j2 in 0..jd {
                data[j * jd + j2] += a_j * state.amp(j2, n).conj();
            }
        }
    }
    DensityMatrix {
        basis: Basis::ElectronRung,
        dim: jd,
        data,
    }
}

/// Simulated EELS curve from the rung populations: losses at
/// (j - j_ref) * omega0 convolved with the zero-loss profile.
pub fn electron_marginal(
    state: &JointState,
    zlp: &crate::grid::GridFunction,
    grid: &crate::grid::UniformGrid,
) -> Result<crate::eels::SimulatedEels, QuantumError> {
    let populations = state.rung_populations();
    let mut comb = crate::grid::GridFunction::zeros(*grid);
    let half = 0.5 * grid.step();
    for (j, p) in populations.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        let u = (j as f64 - state.j_ref as f64) * state.omega0_ev;
        // Rungs outside the detector span are simply not recorded.
        if u < grid.start() - half || u > grid.end() + half {
            continue;
        }
        let i = grid.nearest_index(u);
        comb.values_mut()[i] += p / grid.step();
    }
    let zlp_here = if zlp.grid().same_as(grid) {
        zlp.clone()
    } else {
        let mut z = zlp.resampled(*grid);
        z.normalize_to_unit_area();
        z
    };
    let density = comb.convolve(&zlp_here).map_err(crate::eels::EelsError::from)?;
    Ok(crate::eels::SimulatedEels {
        grid: *grid,
        density: density.values().to_vec(),
    })
}

/// <alpha| rho |alpha> with truncated coherent coefficients
/// e^{-|alpha|^2/2} alpha^n / sqrt(n!).
pub fn coherent_fidelity(rho: &DensityMatrix, alpha: Complex64) -> Result<f64, QuantumError> {
    let n_max = rho.dim - 1;
    let alpha2 = alpha.norm_sqr();
    let limit = n_max as f64 / 4.0;
    if alpha2 > limit {
        return Err(QuantumError::CoherentTruncation { alpha2, limit });
    }
    let mut coeff = Vec::with_capacity(rho.dim);
    let mut c = Complex64::new((-alpha2 / 2.0).exp(), 0.0);
    coeff.push(c);
    for n in 1..=n_max {
        c *= alpha / (n as f64).sqrt();
        coeff.push(c);
    }
    let mut acc = Complex64::default();
    for n in 0..rho.dim {
        for m in 0..rho.dim {
            acc += coeff[n].conj() * rho.element(n, m) * coeff[m];
        }
    }
    Ok(acc.re)
}

/// Maximum coherent-state fidelity over the phase of alpha at fixed modulus;
/// the sign convention of g fixes the phase only up to this scan.
pub fn best_coherent_fidelity(
    rho: &DensityMatrix,
    alpha_abs: f64,
    n_phases: usize,
) -> Result<(f64, f64), QuantumError> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..n_phases {
        let phase = 2.0 * std::f64::consts::PI * i as f64 / n_phases as f64;
        let alpha = Complex64::from_polar(alpha_abs, phase);
        let f = coherent_fidelity(rho, alpha)?;
        if f > best.0 {
            best = (f, phase);
        }
    }
    Ok(best)
}
