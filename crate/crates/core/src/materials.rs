//! Complex permittivity models and the layered optical environment.
//!
//! Everything here is immutable after construction; stacks and models can be
//! shared freely across worker threads.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("energy {energy_ev} eV is outside the table range [{min_ev}, {max_ev}] eV")]
    OutOfRange {
        energy_ev: f64,
        min_ev: f64,
        max_ev: f64,
    },
    #[error("energy must be positive, got {0} eV")]
    NonPositiveEnergy(f64),
    #[error("invalid permittivity table: {0}")]
    InvalidTable(String),
    #[error("layer thickness must be finite and positive, got {0} nm")]
    BadThickness(f64),
    #[error("failed to read material table: {0}")]
    Io(#[from] std::io::Error),
}

/// One Lorentz oscillator term s / (c^2 - E^2 - i w E), strength in eV^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzOscillator {
    pub strength_ev2: f64,
    pub center_ev: f64,
    pub width_ev: f64,
}

/// Tabulated complex permittivity on a strictly increasing energy grid.
/// Evaluation is linear in both parts; outside the table is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermittivityTable {
    energies_ev: Vec<f64>,
    eps: Vec<(f64, f64)>,
}

impl PermittivityTable {
    pub fn new(energies_ev: Vec<f64>, eps: Vec<Complex64>) -> Result<Self, MaterialError> {
        if energies_ev.len() != eps.len() {
            return Err(MaterialError::InvalidTable(
                "energy and permittivity columns differ in length".into(),
            ));
        }
        if energies_ev.len() < 2 {
            return Err(MaterialError::InvalidTable(
                "table needs at least two rows".into(),
            ));
        }
        if !energies_ev.windows(2).all(|w| w[0] < w[1]) {
            return Err(MaterialError::InvalidTable(
                "energies must be strictly increasing".into(),
            ));
        }
        if eps.iter().any(|e| e.im < 0.0) {
            return Err(MaterialError::InvalidTable(
                "passive media require Im eps >= 0".into(),
            ));
        }
        Ok(Self {
            energies_ev,
            eps: eps.into_iter().map(|e| (e.re, e.im)).collect(),
        })
    }

    /// Parse a two- or three-column text table (energy_eV, Re eps[, Im eps]).
    /// Lines starting with '#' are comments; a missing third column means a
    /// lossless entry.
    pub fn parse(text: &str) -> Result<Self, MaterialError> {
        let mut energies = Vec::new();
        let mut eps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split([',', ' ', '\t']).filter(|c| !c.is_empty()).collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(MaterialError::InvalidTable(format!(
                    "line {}: expected 2 or 3 columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    MaterialError::InvalidTable(format!("line {}: bad number {s:?}", lineno + 1))
                })
            };
            energies.push(parse(cols[0])?);
            let re = parse(cols[1])?;
            let im = if cols.len() == 3 { parse(cols[2])? } else { 0.0 };
            eps.push(Complex64::new(re, im));
        }
        Self::new(energies, eps)
    }

    pub fn range_ev(&self) -> (f64, f64) {
        (self.energies_ev[0], *self.energies_ev.last().unwrap())
    }

    fn evaluate(&self, energy_ev: f64) -> Result<Complex64, MaterialError> {
        let (min_ev, max_ev) = self.range_ev();
        if energy_ev < min_ev || energy_ev > max_ev {
            return Err(MaterialError::OutOfRange {
                energy_ev,
                min_ev,
                max_ev,
            });
        }
        let i = match self
            .energies_ev
            .binary_search_by(|e| e.partial_cmp(&energy_ev).unwrap())
        {
            Ok(i) => return Ok(Complex64::new(self.eps[i].0, self.eps[i].1)),
            Err(i) => i - 1,
        };
        let (e0, e1) = (self.energies_ev[i], self.energies_ev[i + 1]);
        let f = (energy_ev - e0) / (e1 - e0);
        let re = self.eps[i].0 * (1.0 - f) + self.eps[i + 1].0 * f;
        let im = self.eps[i].1 * (1.0 - f) + self.eps[i + 1].1 * f;
        Ok(Complex64::new(re, im))
    }
}

/// Frequency-dependent relative permittivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DielectricModel {
    /// Dispersion-free complex permittivity.
    Constant { re: f64, im: f64 },
    /// Tabulated data, linear interpolation, no extrapolation.
    Tabulated(PermittivityTable),
    /// eps_inf - Ep^2/(E^2 + i g E) plus optional Lorentz oscillators.
    DrudeLorentz {
        eps_inf: f64,
        plasma_ev: f64,
        damping_ev: f64,
        oscillators: Vec<LorentzOscillator>,
    },
}

impl DielectricModel {
    pub fn vacuum() -> Self {
        Self::Constant { re: 1.0, im: 0.0 }
    }

    pub fn constant(re: f64, im: f64) -> Self {
        Self::Constant { re, im }
    }

    /// Default gold model: a Drude background with one interband oscillator,
    /// effective parameters for a sputtered film. Re eps < 0 and Im eps > 0
    /// across the 2.0-2.4 eV band.
    pub fn gold() -> Self {
        Self::DrudeLorentz {
            eps_inf: 9.0,
            plasma_ev: 9.3,
            damping_ev: 0.072,
            oscillators: vec![LorentzOscillator {
                strength_ev2: 4.0,
                center_ev: 2.65,
                width_ev: 0.35,
            }],
        }
    }

    /// Gold from the Johnson & Christy (1972) n,k table, shipped with the
    /// crate (1.39-6.60 eV).
    pub fn gold_johnson_christy() -> Self {
        let table = PermittivityTable::parse(include_str!("../data/au_johnson_christy.txt"))
            .expect("embedded gold table is valid");
        Self::Tabulated(table)
    }

    /// SiO2 over the experiment band.
    pub fn silica() -> Self {
        Self::Constant { re: 2.13, im: 0.0 }
    }

    /// Si3N4 over the experiment band.
    pub fn silicon_nitride() -> Self {
        Self::Constant { re: 4.0, im: 0.0 }
    }

    pub fn from_table_file(path: &Path) -> Result<Self, MaterialError> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::Tabulated(PermittivityTable::parse(&text)?))
    }

    /// Complex relative permittivity at the given photon energy.
    pub fn evaluate(&self, energy_ev: f64) -> Result<Complex64, MaterialError> {
        if energy_ev.is_nan() || energy_ev <= 0.0 {
            return Err(MaterialError::NonPositiveEnergy(energy_ev));
        }
        match self {
            Self::Constant { re, im } => Ok(Complex64::new(*re, *im)),
            Self::Tabulated(table) => table.evaluate(energy_ev),
            Self::DrudeLorentz {
                eps_inf,
                plasma_ev,
                damping_ev,
                oscillators,
            } => {
                let e = Complex64::new(energy_ev, 0.0);
                let mut eps = Complex64::new(*eps_inf, 0.0)
                    - plasma_ev * plasma_ev / (e * (e + Complex64::new(0.0, *damping_ev)));
                for osc in oscillators {
                    eps += osc.strength_ev2
                        / Complex64::new(
                            osc.center_ev * osc.center_ev - energy_ev * energy_ev,
                            -osc.width_ev * energy_ev,
                        );
                }
                Ok(eps)
            }
        }
    }

    fn describe(&self, out: &mut String) {
        match self {
            Self::Constant { re, im } => {
                let _ = write!(out, "const({re:.9e},{im:.9e})");
            }
            Self::Tabulated(t) => {
                let _ = write!(out, "table({},", t.energies_ev.len());
                for (e, (re, im)) in t.energies_ev.iter().zip(&t.eps) {
                    let _ = write!(out, "{e:.9e}:{re:.9e}:{im:.9e};");
                }
                out.push(')');
            }
            Self::DrudeLorentz {
                eps_inf,
                plasma_ev,
                damping_ev,
                oscillators,
            } => {
                let _ = write!(out, "drude({eps_inf:.9e},{plasma_ev:.9e},{damping_ev:.9e}");
                for o in oscillators {
                    let _ = write!(
                        out,
                        ",L({:.9e},{:.9e},{:.9e})",
                        o.strength_ev2, o.center_ev, o.width_ev
                    );
                }
                out.push(')');
            }
        }
    }
}

/// A finite layer of the stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    thickness_nm: f64,
    material: DielectricModel,
}

impl Layer {
    pub fn new(thickness_nm: f64, material: DielectricModel) -> Result<Self, MaterialError> {
        if !(thickness_nm.is_finite() && thickness_nm > 0.0) {
            return Err(MaterialError::BadThickness(thickness_nm));
        }
        Ok(Self {
            thickness_nm,
            material,
        })
    }

    pub fn thickness_nm(&self) -> f64 {
        self.thickness_nm
    }

    pub fn material(&self) -> &DielectricModel {
        &self.material
    }
}

/// Planar multilayer between two half-spaces; the superstrate is the side the
/// electron travels in, layers are listed superstrate-first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    superstrate: DielectricModel,
    layers: Vec<Layer>,
    substrate: DielectricModel,
}

impl LayerStack {
    pub fn new(
        superstrate: DielectricModel,
        layers: Vec<Layer>,
        substrate: DielectricModel,
    ) -> Self {
        Self {
            superstrate,
            layers,
            substrate,
        }
    }

    pub fn superstrate(&self) -> &DielectricModel {
        &self.superstrate
    }

    pub fn substrate(&self) -> &DielectricModel {
        &self.substrate
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Permittivities of all media at one energy, superstrate first.
    pub fn permittivities(&self, energy_ev: f64) -> Result<Vec<Complex64>, MaterialError> {
        let mut eps = Vec::with_capacity(self.layers.len() + 2);
        eps.push(self.superstrate.evaluate(energy_ev)?);
        for layer in &self.layers {
            eps.push(layer.material.evaluate(energy_ev)?);
        }
        eps.push(self.substrate.evaluate(energy_ev)?);
        Ok(eps)
    }

    /// FNV-1a hash of the full stack description, used to tag output files.
    pub fn content_hash(&self) -> u64 {
        let mut s = String::new();
        self.superstrate.describe(&mut s);
        for layer in &self.layers {
            let _ = write!(s, "|{:.9e}:", layer.thickness_nm);
            layer.material.describe(&mut s);
        }
        s.push('|');
        self.substrate.describe(&mut s);
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in s.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// The experiment multilayer: vacuum / Si3N4 / SiO2 / Au half-space, with the
/// measured layer thicknesses as defaults (27.8 nm and 12.6 nm).
///
/// The 200 nm Au film is far thicker than its skin depth in this band, so it
/// is treated as the substrate; the Ti adhesion layer and the Si wafer below
/// never see appreciable field.
pub fn build_experiment_stack(sio2_nm: f64, si3n4_nm: f64) -> Result<LayerStack, MaterialError> {
    Ok(LayerStack::new(
        DielectricModel::vacuum(),
        vec![
            Layer::new(si3n4_nm, DielectricModel::silicon_nitride())?,
            Layer::new(sio2_nm, DielectricModel::silica())?,
        ],
        DielectricModel::gold(),
    ))
}

pub const DEFAULT_SIO2_NM: f64 = 12.6;
pub const DEFAULT_SI3N4_NM: f64 = 27.8;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_is_unity_at_any_energy() {
        let v = DielectricModel::vacuum();
        for e in [0.1, 1.0, 2.2, 50.0] {
            assert_eq!(v.evaluate(e).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn lossless_drude_vanishes_at_plasma_energy() {
        let m = DielectricModel::DrudeLorentz {
            eps_inf: 1.0,
            plasma_ev: 5.0,
            damping_ev: 0.0,
            oscillators: vec![],
        };
        let eps = m.evaluate(5.0).unwrap();
        assert!(eps.norm() < 1e-12, "eps(wp) = {eps}");
    }

    #[test]
    fn tabulated_linear_interpolation_midpoint() {
        let t = PermittivityTable::new(
            vec![2.0, 3.0],
            vec![Complex64::new(-10.0, 1.0), Complex64::new(-6.0, 2.0)],
        )
        .unwrap();
        let m = DielectricModel::Tabulated(t);
        let eps = m.evaluate(2.5).unwrap();
        assert_relative_eq!(eps.re, -8.0, epsilon = 1e-12);
        assert_relative_eq!(eps.im, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_out_of_range_is_an_error() {
        let m = DielectricModel::gold_johnson_christy();
        assert!(m.evaluate(1.0).is_err());
        assert!(m.evaluate(7.0).is_err());
        assert!(m.evaluate(2.2).is_ok());
    }

    #[test]
    fn nonpositive_energy_rejected() {
        assert!(DielectricModel::vacuum().evaluate(0.0).is_err());
        assert!(DielectricModel::gold().evaluate(-1.0).is_err());
    }

    #[test]
    fn packaged_metals_are_bound_mode_capable_in_band() {
        for m in [
            DielectricModel::gold(),
            DielectricModel::gold_johnson_christy(),
        ] {
            let mut e = 2.0;
            while e <= 2.4 {
                let eps = m.evaluate(e).unwrap();
                assert!(eps.re < 0.0, "Re eps = {} at {e} eV", eps.re);
                assert!(eps.im > 0.0, "Im eps = {} at {e} eV", eps.im);
                e += 0.01;
            }
        }
    }

    #[test]
    fn evaluation_is_pure() {
        let m = DielectricModel::gold();
        let a = m.evaluate(2.137).unwrap();
        let b = m.evaluate(2.137).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn experiment_stack_defaults() {
        let stack = build_experiment_stack(DEFAULT_SIO2_NM, DEFAULT_SI3N4_NM).unwrap();
        assert_eq!(stack.layers().len(), 2);
        assert_relative_eq!(stack.layers()[0].thickness_nm(), 27.8);
        assert_relative_eq!(stack.layers()[1].thickness_nm(), 12.6);
        assert_eq!(
            stack.superstrate().evaluate(2.0).unwrap(),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn nominal_deposition_stack() {
        let stack = build_experiment_stack(10.0, 30.0).unwrap();
        assert_relative_eq!(stack.layers()[0].thickness_nm(), 30.0);
        assert_relative_eq!(stack.layers()[1].thickness_nm(), 10.0);
    }

    #[test]
    fn bad_thickness_rejected() {
        assert!(build_experiment_stack(0.0, 30.0).is_err());
        assert!(build_experiment_stack(10.0, f64::NAN).is_err());
    }

    #[test]
    fn stack_hash_distinguishes_thickness() {
        let a = build_experiment_stack(12.6, 27.8).unwrap();
        let b = build_experiment_stack(12.7, 27.8).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash(), a.content_hash());
    }

    #[test]
    fn table_parser_handles_comments_and_two_columns() {
        let t = PermittivityTable::parse("# header\n1.0 2.13\n2.0 2.13 0.0\n").unwrap();
        assert_eq!(t.range_ev(), (1.0, 2.0));
        let t = PermittivityTable::parse("2.0 1.0\n1.0 2.0\n");
        assert!(t.is_err(), "non-increasing grid must fail");
    }
}
