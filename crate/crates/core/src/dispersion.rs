//! p-polarized reflection of the stack, the Im[r_p] ridge, and Cherenkov
//! phase matching for relativistic electrons.
//!
//! The reflection coefficient is evaluated by interface recursion
//! r = (r01 + r_rest e^{2 i k_z d}) / (1 + r01 r_rest e^{2 i k_z d}), which
//! stays bounded through arbitrarily thick lossy layers. The normal
//! wavevector branch is Im k_z >= 0 in every medium, so exponentials always
//! decay; purely real k_z takes Re k_z >= 0.

use crate::constants::HBAR_C_EV_NM;
use crate::materials::{LayerStack, MaterialError};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("kinetic energy must be positive, got {0} keV")]
    NonPositiveKineticEnergy(f64),
    #[error("grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("electron is below the Cherenkov threshold over the ridge domain")]
    BelowThreshold,
    #[error("ridge is not defined at {0} eV")]
    RidgeAbsent(f64),
}

/// Relativistic electron kinematics derived from the kinetic energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronKinematics {
    pub kinetic_energy_kev: f64,
    /// v_e/c.
    pub beta: f64,
    /// Lorentz factor.
    pub gamma: f64,
}

pub fn electron_kinematics(kinetic_energy_kev: f64) -> Result<ElectronKinematics, DispersionError> {
    if kinetic_energy_kev.is_nan() || kinetic_energy_kev <= 0.0 {
        return Err(DispersionError::NonPositiveKineticEnergy(kinetic_energy_kev));
    }
    let gamma = 1.0 + kinetic_energy_kev / crate::constants::ELECTRON_REST_KEV;
    let beta = (1.0 - 1.0 / (gamma * gamma)).sqrt();
    Ok(ElectronKinematics {
        kinetic_energy_kev,
        beta,
        gamma,
    })
}

impl ElectronKinematics {
    /// Longitudinal wavevector omega/v_e in 1/nm at photon energy u (eV).
    pub fn line_k(&self, energy_ev: f64) -> f64 {
        energy_ev / (HBAR_C_EV_NM * self.beta)
    }
}

/// Normal wavevector in a medium, branch Im k_z >= 0 (ties: Re k_z >= 0).
fn normal_wavevector(eps: Complex64, k_par: f64, k0: f64) -> Complex64 {
    let w = eps * (k0 * k0) - Complex64::new(k_par * k_par, 0.0);
    let v = w.sqrt();
    if v.im < 0.0 || (v.im == 0.0 && v.re < 0.0) {
        -v
    } else {
        v
    }
}

fn fresnel_p(eps_i: Complex64, eps_j: Complex64, kz_i: Complex64, kz_j: Complex64) -> Complex64 {
    (eps_j * kz_i - eps_i * kz_j) / (eps_j * kz_i + eps_i * kz_j)
}

/// p-polarized amplitude reflection coefficient of the full stack seen from
/// the superstrate.
pub fn reflection_coefficient_p(
    stack: &LayerStack,
    k_par_per_nm: f64,
    energy_ev: f64,
) -> Result<Complex64, MaterialError> {
    let eps = stack.permittivities(energy_ev)?;
    let k0 = energy_ev / HBAR_C_EV_NM;
    let kz: Vec<Complex64> = eps
        .iter()
        .map(|e| normal_wavevector(*e, k_par_per_nm, k0))
        .collect();
    let n = eps.len();
    // Recursion from the deepest interface upward.
    let mut r = fresnel_p(eps[n - 2], eps[n - 1], kz[n - 2], kz[n - 1]);
    for m in (0..n - 2).rev() {
        let d = stack.layers()[m].thickness_nm();
        let phase = (Complex64::new(0.0, 2.0) * kz[m + 1] * d).exp();
        let r01 = fresnel_p(eps[m], eps[m + 1], kz[m], kz[m + 1]);
        r = (r01 + r * phase) / (Complex64::new(1.0, 0.0) + r01 * r * phase);
    }
    Ok(r)
}

/// Im[r_p] sampled on a (k_par, energy) grid; rows are energies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionMap {
    pub k_grid: Vec<f64>,
    pub e_grid: Vec<f64>,
    /// values[i][j] = Im r_p(k_grid[j], e_grid[i]).
    pub values: Vec<Vec<f64>>,
}

fn check_grid(g: &[f64]) -> Result<(), DispersionError> {
    if g.is_empty() || !g.windows(2).all(|w| w[0] < w[1]) {
        return Err(DispersionError::BadGrid);
    }
    Ok(())
}

/// Default k grid of the experiment band: 1e-3 to 0.08 1/nm, 800 points.
pub fn default_k_grid() -> Vec<f64> {
    linspace(1e-3, 0.08, 800)
}

/// Default energy grid: 1.6 to 2.6 eV, 500 points.
pub fn default_e_grid() -> Vec<f64> {
    linspace(1.6, 2.6, 500)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn dispersion_map(
    stack: &LayerStack,
    k_grid: &[f64],
    e_grid: &[f64],
) -> Result<DispersionMap, DispersionError> {
    check_grid(k_grid)?;
    check_grid(e_grid)?;
    // Rows are independent; evaluate in parallel, assemble in grid order.
    let values = e_grid
        .par_iter()
        .map(|&energy| {
            k_grid
                .iter()
                .map(|&k| reflection_coefficient_p(stack, k, energy).map(|r| r.im))
                .collect::<Result<Vec<f64>, MaterialError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DispersionMap {
        k_grid: k_grid.to_vec(),
        e_grid: e_grid.to_vec(),
        values,
    })
}

/// Maxima of Im[r_p] below this value do not count as a mode.
pub const RIDGE_NOISE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub k_per_nm: f64,
    pub im_rp: f64,
}

/// Per-energy maximizing wavevector of the dispersion map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeRidge {
    pub energies_ev: Vec<f64>,
    pub points: Vec<Option<RidgePoint>>,
}

impl ModeRidge {
    pub fn is_present_everywhere(&self) -> bool {
        self.points.iter().all(|p| p.is_some())
    }

    /// Linear interpolation of k_ridge(E); None outside the defined domain or
    /// across an absent segment.
    pub fn k_at(&self, energy_ev: f64) -> Option<f64> {
        let e = &self.energies_ev;
        if energy_ev < e[0] || energy_ev > *e.last().unwrap() {
            return None;
        }
        let i = match e.binary_search_by(|x| x.partial_cmp(&energy_ev).unwrap()) {
            Ok(i) => return self.points[i].map(|p| p.k_per_nm),
            Err(i) => i - 1,
        };
        let (p0, p1) = (self.points[i]?, self.points[i + 1]?);
        let f = (energy_ev - e[i]) / (e[i + 1] - e[i]);
        Some(p0.k_per_nm * (1.0 - f) + p1.k_per_nm * f)
    }
}

/// Per energy row, the k of the global maximum of Im[r_p], refined by 3-point
/// parabolic interpolation; rows whose maximum is below the noise floor are
/// marked absent. Ties take the smallest k.
pub fn extract_ridge(map: &DispersionMap) -> ModeRidge {
    let points = map
        .values
        .iter()
        .map(|row| {
            let mut j = 0;
            for (i, v) in row.iter().enumerate() {
                if *v > row[j] {
                    j = i;
                }
            }
            if row[j] < RIDGE_NOISE_FLOOR {
                return None;
            }
            let (k, v) = if j == 0 || j + 1 == row.len() {
                (map.k_grid[j], row[j])
            } else {
                // Parabolic refinement on the local (possibly non-uniform)
                // spacing; the default grid is uniform.
                let dk = 0.5 * (map.k_grid[j + 1] - map.k_grid[j - 1]);
                let (y0, y1, y2) = (row[j - 1], row[j], row[j + 1]);
                let den = y0 - 2.0 * y1 + y2;
                if den == 0.0 {
                    (map.k_grid[j], y1)
                } else {
                    let d = (0.5 * (y0 - y2) / den).clamp(-0.5, 0.5);
                    (map.k_grid[j] + d * dk, y1 - 0.25 * (y0 - y2) * d)
                }
            };
            let k = k.clamp(map.k_grid[0], *map.k_grid.last().unwrap());
            Some(RidgePoint { k_per_nm: k, im_rp: v })
        })
        .collect();
    ModeRidge {
        energies_ev: map.e_grid.clone(),
        points,
    }
}

/// Result of the Cherenkov phase-matching construction: the lowest-energy
/// crossing of the electron line k = omega/v_e with the ridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchResult {
    pub peak_energy_ev: f64,
    pub k_match_per_nm: f64,
    /// v_p(omega_0) as a fraction of c; at most the electron beta.
    pub phase_velocity_c: f64,
}

/// Bisection tolerance of the crossing energy in eV.
const PHASE_MATCH_TOL_EV: f64 = 1e-4;

pub fn phase_match(
    ridge: &ModeRidge,
    kin: &ElectronKinematics,
) -> Result<PhaseMatchResult, DispersionError> {
    let excess =
        |e: f64| -> Option<f64> { ridge.k_at(e).map(|k| k - kin.line_k(e)) };
    let es = &ridge.energies_ev;
    for w in 0..es.len() - 1 {
        let (e0, e1) = (es[w], es[w + 1]);
        let (f0, f1) = match (excess(e0), excess(e1)) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        if !(f0 < 0.0 && f1 >= 0.0) {
            continue;
        }
        // Bisect on the linear interpolant; keep the endpoint where the ridge
        // is at or above the electron line so v_p <= v_e holds exactly.
        let (mut lo, mut hi) = (e0, e1);
        while hi - lo > PHASE_MATCH_TOL_EV {
            let mid = 0.5 * (lo + hi);
            match excess(mid) {
                Some(f) if f < 0.0 => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
        }
        let e_star = hi;
        let k_match = ridge.k_at(e_star).ok_or(DispersionError::RidgeAbsent(e_star))?;
        return Ok(PhaseMatchResult {
            peak_energy_ev: e_star,
            k_match_per_nm: k_match,
            phase_velocity_c: e_star / (HBAR_C_EV_NM * k_match),
        });
    }
    Err(DispersionError::BelowThreshold)
}

/// In-plane emission angle relative to the trajectory,
/// phi = arccos(v_p(omega)/v_e).
pub fn emission_angle(
    energy_ev: f64,
    ridge: &ModeRidge,
    kin: &ElectronKinematics,
) -> Result<f64, DispersionError> {
    let k = ridge
        .k_at(energy_ev)
        .ok_or(DispersionError::RidgeAbsent(energy_ev))?;
    let vp = energy_ev / (HBAR_C_EV_NM * k);
    let ratio = vp / kin.beta;
    if ratio > 1.0 {
        return Err(DispersionError::BelowThreshold);
    }
    Ok(ratio.acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{build_experiment_stack, DielectricModel, Layer, LayerStack};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn vacuum_stack() -> LayerStack {
        LayerStack::new(
            DielectricModel::vacuum(),
            vec![],
            DielectricModel::vacuum(),
        )
    }

    #[test]
    fn uniform_space_reflects_nothing() {
        let s = vacuum_stack();
        for (k, e) in [(0.001, 1.8), (0.02, 2.2), (0.08, 2.6)] {
            let r = reflection_coefficient_p(&s, k, e).unwrap();
            assert!(r.norm() < 1e-14);
        }
    }

    #[test]
    fn single_interface_matches_fresnel_closed_form() {
        let eps2 = Complex64::new(-8.5, 0.9);
        let s = LayerStack::new(
            DielectricModel::vacuum(),
            vec![],
            DielectricModel::constant(eps2.re, eps2.im),
        );
        let (k_par, e) = (0.02, 2.2);
        let k0 = e / HBAR_C_EV_NM;
        let kz1 = normal_wavevector(Complex64::new(1.0, 0.0), k_par, k0);
        let kz2 = normal_wavevector(eps2, k_par, k0);
        let expect = (eps2 * kz1 - kz2) / (eps2 * kz1 + kz2);
        let got = reflection_coefficient_p(&s, k_par, e).unwrap();
        assert!((got - expect).norm() < 1e-12, "got {got}, expect {expect}");
    }

    /// Brute-force partial-wave oracle: sum the multiple-reflection series of
    /// a single film using only the closed-form interface coefficients.
    fn film_series_oracle(
        eps_film: Complex64,
        eps_sub: Complex64,
        d: f64,
        k_par: f64,
        e: f64,
        terms: usize,
    ) -> Complex64 {
        let k0 = e / HBAR_C_EV_NM;
        let one = Complex64::new(1.0, 0.0);
        let kz0 = normal_wavevector(one, k_par, k0);
        let kz1 = normal_wavevector(eps_film, k_par, k0);
        let kz2 = normal_wavevector(eps_sub, k_par, k0);
        let r01 = fresnel_p(one, eps_film, kz0, kz1);
        let r12 = fresnel_p(eps_film, eps_sub, kz1, kz2);
        let ph = (Complex64::new(0.0, 2.0) * kz1 * d).exp();
        let mut sum = r01;
        let mut bounce = (one - r01 * r01) * r12 * ph;
        for _ in 0..terms {
            sum += bounce;
            bounce *= -r01 * r12 * ph;
        }
        sum
    }

    #[test]
    fn lossless_film_matches_multiple_reflection_series() {
        let eps_film = Complex64::new(4.0, 0.0);
        let eps_sub = Complex64::new(2.13, 0.0);
        let d = 27.8;
        let s = LayerStack::new(
            DielectricModel::vacuum(),
            vec![Layer::new(d, DielectricModel::silicon_nitride()).unwrap()],
            DielectricModel::silica(),
        );
        for (k_par, e) in [(0.004, 1.9), (0.012, 2.2), (0.03, 2.5)] {
            let oracle = film_series_oracle(eps_film, eps_sub, d, k_par, e, 50);
            let got = reflection_coefficient_p(&s, k_par, e).unwrap();
            assert!(
                (got - oracle).norm() < 1e-10,
                "k={k_par} e={e}: got {got}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn kinematics_closed_forms() {
        let k = electron_kinematics(crate::constants::ELECTRON_REST_KEV).unwrap();
        assert_relative_eq!(k.gamma, 2.0, epsilon = 1e-12);
        assert_relative_eq!(k.beta, 3f64.sqrt() / 2.0, epsilon = 1e-12);
        // Frozen from the stated kinematics: gamma = 1 + T/510.999,
        // beta = sqrt(1 - 1/gamma^2).
        let k200 = electron_kinematics(200.0).unwrap();
        assert_relative_eq!(k200.beta, 0.695314451, epsilon = 1e-8);
        let k93 = electron_kinematics(93.0).unwrap();
        assert_relative_eq!(k93.beta, 0.533141266, epsilon = 1e-8);
        assert!(electron_kinematics(0.0).is_err());
    }

    #[test]
    fn vacuum_map_is_zero_and_ridge_absent() {
        let map = dispersion_map(&vacuum_stack(), &linspace(0.001, 0.05, 40), &linspace(1.8, 2.4, 20)).unwrap();
        assert!(map
            .values
            .iter()
            .flatten()
            .all(|v| v.abs() < 1e-14));
        let ridge = extract_ridge(&map);
        assert!(ridge.points.iter().all(|p| p.is_none()));
    }

    #[test]
    fn experiment_ridge_connected_and_normally_dispersive() {
        let stack = build_experiment_stack(12.6, 27.8).unwrap();
        let map = dispersion_map(&stack, &default_k_grid(), &default_e_grid()).unwrap();
        let ridge = extract_ridge(&map);
        // Present across the full band.
        for (e, p) in ridge.energies_ev.iter().zip(&ridge.points) {
            if (1.8..=2.6).contains(e) {
                assert!(p.is_some(), "ridge absent at {e} eV");
            }
        }
        // Normal dispersion (k_ridge increasing) holds through the
        // Cherenkov-active band; above ~2.35 eV the lossy mode flattens into
        // its asymptote and the maximizing k bends back.
        let in_band: Vec<(f64, f64)> = ridge
            .energies_ev
            .iter()
            .zip(&ridge.points)
            .filter(|(e, _)| **e >= 1.8 && **e <= 2.35)
            .map(|(e, p)| (*e, p.unwrap().k_per_nm))
            .collect();
        assert!(!in_band.is_empty());
        // k_ridge increasing with energy below the flat asymptote region.
        for w in in_band.windows(2) {
            assert!(
                w[1].1 >= w[0].1 - 1e-9,
                "ridge not increasing at {} eV",
                w[1].0
            );
        }
        // Present throughout 2.0-2.35 as well (subset of the above).
        for (e, p) in ridge.energies_ev.iter().zip(&ridge.points) {
            if (2.0..=2.35).contains(e) {
                assert!(p.is_some());
            }
        }
    }

    #[test]
    fn ridge_phase_velocity_overlaps_experiment_betas() {
        let stack = build_experiment_stack(12.6, 27.8).unwrap();
        let map = dispersion_map(&stack, &default_k_grid(), &default_e_grid()).unwrap();
        let ridge = extract_ridge(&map);
        let beta_lo = electron_kinematics(93.0).unwrap().beta;
        let beta_hi = electron_kinematics(200.0).unwrap().beta;
        let overlap = ridge
            .energies_ev
            .iter()
            .zip(&ridge.points)
            .filter(|(e, _)| (2.0..=2.3).contains(*e))
            .filter_map(|(e, p)| p.map(|p| e / (HBAR_C_EV_NM * p.k_per_nm)))
            .any(|vp| vp >= beta_lo && vp <= beta_hi);
        assert!(overlap, "no ridge phase velocity in the electron range");
    }

    #[test]
    fn single_interface_ridge_approaches_sp_asymptote() {
        // Vacuum over a weakly damped Drude metal: at large k_par the ridge
        // energy must approach the surface-plasmon condition Re eps = -1,
        // i.e. E_sp = Ep/sqrt(2), and the ridge k must follow the analytic
        // SPP dispersion k = (E/hbar c) sqrt(eps/(1+eps)).
        let ep = 5.0;
        let s = LayerStack::new(
            DielectricModel::vacuum(),
            vec![],
            DielectricModel::DrudeLorentz {
                eps_inf: 1.0,
                plasma_ev: ep,
                damping_ev: 0.05,
                oscillators: vec![],
            },
        );
        let e_sp = ep / 2f64.sqrt();
        let k_grid = linspace(0.005, 1.5, 3000);
        // Stay a little below the asymptote: right at it the damped ridge
        // and the lossless pole separate.
        let e_grid = linspace(2.6, e_sp - 0.15, 120);
        let map = dispersion_map(&s, &k_grid, &e_grid).unwrap();
        let ridge = extract_ridge(&map);
        for (e, p) in ridge.energies_ev.iter().zip(&ridge.points) {
            let p = p.expect("SPP ridge present below the asymptote");
            let eps = s.substrate().evaluate(*e).unwrap();
            let k_oracle = (e / HBAR_C_EV_NM) * (eps / (eps + 1.0)).sqrt().re.abs();
            assert!(
                (p.k_per_nm - k_oracle).abs() < 0.03 * k_oracle + 2e-3,
                "E={e}: ridge {} vs oracle {k_oracle}",
                p.k_per_nm
            );
        }
        // A finer scan right below the asymptote still finds the ridge: the
        // flat large-k surface-plasmon branch survives up to E_sp.
        let close = dispersion_map(&s, &k_grid, &linspace(e_sp - 0.05, e_sp - 0.01, 9)).unwrap();
        let close_ridge = extract_ridge(&close);
        assert!(
            close_ridge.points.iter().all(|p| p.is_some()),
            "ridge lost below the asymptote"
        );
    }

    #[test]
    fn phase_match_monotone_redshift_and_window() {
        let stack = build_experiment_stack(12.6, 27.8).unwrap();
        let map = dispersion_map(&stack, &default_k_grid(), &default_e_grid()).unwrap();
        let ridge = extract_ridge(&map);
        let mut last = f64::INFINITY;
        for t in [93.0, 120.0, 160.0, 200.0] {
            let kin = electron_kinematics(t).unwrap();
            let m = phase_match(&ridge, &kin).unwrap();
            assert!(m.peak_energy_ev < last, "no red-shift at {t} keV");
            assert!(
                m.phase_velocity_c <= kin.beta + 1e-12,
                "v_p exceeds v_e at {t} keV"
            );
            last = m.peak_energy_ev;
        }
        let m200 = phase_match(&ridge, &electron_kinematics(200.0).unwrap()).unwrap();
        assert!(
            (m200.peak_energy_ev - 2.083).abs() < 0.05,
            "omega0(200 keV) = {} eV",
            m200.peak_energy_ev
        );
    }

    #[test]
    fn slow_electron_is_below_threshold() {
        let stack = build_experiment_stack(12.6, 27.8).unwrap();
        let map = dispersion_map(&stack, &default_k_grid(), &default_e_grid()).unwrap();
        let ridge = extract_ridge(&map);
        let kin = electron_kinematics(10.0).unwrap();
        assert!(matches!(
            phase_match(&ridge, &kin),
            Err(DispersionError::BelowThreshold)
        ));
    }

    #[test]
    fn phase_match_stable_under_k_grid_refinement() {
        let stack = build_experiment_stack(12.6, 27.8).unwrap();
        let coarse = dispersion_map(&stack, &default_k_grid(), &default_e_grid()).unwrap();
        let fine = dispersion_map(&stack, &linspace(1e-3, 0.08, 1600), &default_e_grid()).unwrap();
        for t in [93.0, 200.0] {
            let kin = electron_kinematics(t).unwrap();
            let a = phase_match(&extract_ridge(&coarse), &kin).unwrap();
            let b = phase_match(&extract_ridge(&fine), &kin).unwrap();
            assert!(
                (a.peak_energy_ev - b.peak_energy_ev).abs() < 2e-3,
                "{t} keV: {} vs {}",
                a.peak_energy_ev,
                b.peak_energy_ev
            );
        }
    }

    #[test]
    fn ridge_and_match_invariant_under_positive_scaling() {
        let stack = build_experiment_stack(12.6, 27.8).unwrap();
        let mut map = dispersion_map(&stack, &default_k_grid(), &default_e_grid()).unwrap();
        let kin = electron_kinematics(160.0).unwrap();
        let before = phase_match(&extract_ridge(&map), &kin).unwrap();
        for row in &mut map.values {
            for v in row {
                *v *= 7.25;
            }
        }
        let after_ridge = extract_ridge(&map);
        let after = phase_match(&after_ridge, &kin).unwrap();
        assert_eq!(before.peak_energy_ev, after.peak_energy_ev);
        assert_eq!(before.k_match_per_nm, after.k_match_per_nm);
    }

    #[test]
    fn emission_angle_closed_forms() {
        // Synthetic ridge with exact phase velocities.
        let kin = electron_kinematics(200.0).unwrap();
        let e = 2.1;
        let k_eq = kin.line_k(e);
        let mk = |k: f64| ModeRidge {
            energies_ev: vec![e - 0.1, e, e + 0.1],
            points: vec![
                Some(RidgePoint { k_per_nm: k, im_rp: 1.0 }),
                Some(RidgePoint { k_per_nm: k, im_rp: 1.0 }),
                Some(RidgePoint { k_per_nm: k, im_rp: 1.0 }),
            ],
        };
        assert_relative_eq!(emission_angle(e, &mk(k_eq), &kin).unwrap(), 0.0, epsilon = 1e-9);
        assert_relative_eq!(
            emission_angle(e, &mk(2.0 * k_eq), &kin).unwrap(),
            std::f64::consts::FRAC_PI_3,
            epsilon = 1e-12
        );
        assert!(matches!(
            emission_angle(e, &mk(0.5 * k_eq), &kin),
            Err(DispersionError::BelowThreshold)
        ));
    }

    #[test]
    fn emission_angle_increases_above_threshold_on_experiment_stack() {
        let stack = build_experiment_stack(12.6, 27.8).unwrap();
        let map = dispersion_map(&stack, &default_k_grid(), &default_e_grid()).unwrap();
        let ridge = extract_ridge(&map);
        let kin = electron_kinematics(200.0).unwrap();
        let w0 = phase_match(&ridge, &kin).unwrap().peak_energy_ev;
        let mut last = -1.0;
        let mut e = w0 + 0.01;
        while e < w0 + 0.2 {
            let phi = emission_angle(e, &ridge, &kin).unwrap();
            assert!(phi > last, "angle not increasing at {e} eV");
            last = phi;
            e += 0.02;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        /// Passivity: Im r_p >= -1e-10 in the evanescent region for random
        /// passive stacks.
        #[test]
        fn passivity_random_stacks(
            re1 in -30.0..30.0f64, im1 in 0.0..5.0f64, d1 in 1.0..300.0f64,
            re2 in -30.0..30.0f64, im2 in 0.0..5.0f64, d2 in 1.0..300.0f64,
            re_sub in -30.0..-0.1f64, im_sub in 0.0..5.0f64,
            k_par in 0.012..0.1f64, e in 1.7..2.5f64,
        ) {
            let stack = LayerStack::new(
                DielectricModel::vacuum(),
                vec![
                    Layer::new(d1, DielectricModel::constant(re1, im1)).unwrap(),
                    Layer::new(d2, DielectricModel::constant(re2, im2)).unwrap(),
                ],
                DielectricModel::constant(re_sub, im_sub),
            );
            // Evanescent region: k_par > omega/c.
            prop_assume!(k_par > e / HBAR_C_EV_NM);
            let r = reflection_coefficient_p(&stack, k_par, e).unwrap();
            prop_assert!(r.im >= -1e-10, "Im r_p = {} at k={k_par}, E={e}", r.im);
        }

        /// The recursive form agrees with a full 2x2 transfer-matrix product
        /// on random 4-layer stacks.
        #[test]
        fn recursion_agrees_with_matrix_form(
            res in proptest::collection::vec((-30.0..30.0f64, 0.0..5.0f64), 4),
            ds in proptest::collection::vec(1.0..300.0f64, 4),
            re_sub in -30.0..30.0f64, im_sub in 0.0..5.0f64,
            k_par in 0.001..0.09f64, e in 1.7..2.5f64,
        ) {
            let layers: Vec<Layer> = res
                .iter()
                .zip(&ds)
                .map(|((re, im), d)| Layer::new(*d, DielectricModel::constant(*re, *im)).unwrap())
                .collect();
            let stack = LayerStack::new(
                DielectricModel::vacuum(),
                layers,
                DielectricModel::constant(re_sub, im_sub),
            );
            let got = reflection_coefficient_p(&stack, k_par, e).unwrap();
            let oracle = transfer_matrix_oracle(&stack, k_par, e);
            prop_assert!(
                (got - oracle).norm() < 1e-10 * (1.0 + oracle.norm()),
                "recursion {got} vs matrix {oracle}"
            );
        }
    }

    /// Independent 2x2 transfer-matrix product for p polarization, written in
    /// the H-field basis. Test-only oracle.
    fn transfer_matrix_oracle(stack: &LayerStack, k_par: f64, e: f64) -> Complex64 {
        let eps = stack.permittivities(e).unwrap();
        let k0 = e / HBAR_C_EV_NM;
        let kz: Vec<Complex64> = eps
            .iter()
            .map(|ep| normal_wavevector(*ep, k_par, k0))
            .collect();
        let one = Complex64::new(1.0, 0.0);
        // Interface matrix from medium i to j: (1/t) [[1, r],[r, 1]] with the
        // p-polarized Fresnel r and t = 1 + r in the H convention.
        let mut m = [[one, Complex64::default()], [Complex64::default(), one]];
        let mul = |a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]| {
            let mut c = [[Complex64::default(); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            c
        };
        for i in 0..eps.len() - 1 {
            let r = fresnel_p(eps[i], eps[i + 1], kz[i], kz[i + 1]);
            let t = one + r;
            let iface = [[one / t, r / t], [r / t, one / t]];
            m = mul(&m, &iface);
            if i + 1 < eps.len() - 1 {
                let d = stack.layers()[i].thickness_nm();
                let ph = (Complex64::new(0.0, 1.0) * kz[i + 1] * d).exp();
                let prop = [[one / ph, Complex64::default()], [Complex64::default(), ph]];
                m = mul(&m, &prop);
            }
        }
        m[1][0] / m[0][0]
    }
}
