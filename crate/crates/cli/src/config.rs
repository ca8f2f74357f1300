//! Run configuration: one TOML file with nested sections drives every
//! command. Missing keys fall back to the experiment defaults, so an empty
//! (or absent) file reproduces the reference pipeline. CLI flags override
//! config keys.

use cherenkov2d::dispersion::{electron_kinematics, ElectronKinematics};
use cherenkov2d::eels::ZlpModel;
use cherenkov2d::grid::UniformGrid;
use cherenkov2d::materials::{DielectricModel, Layer, LayerStack};
use cherenkov2d::spectrum::BeamGeometry;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_sio2_nm() -> f64 {
    cherenkov2d::materials::DEFAULT_SIO2_NM
}
fn default_si3n4_nm() -> f64 {
    cherenkov2d::materials::DEFAULT_SI3N4_NM
}
fn default_gold() -> String {
    "drude_lorentz".into()
}
fn default_sio2_eps() -> f64 {
    2.13
}
fn default_si3n4_eps() -> f64 {
    4.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct StackConfig {
    pub sio2_nm: f64,
    pub si3n4_nm: f64,
    /// "drude_lorentz", "johnson_christy", "vacuum", or a table file path.
    pub gold: String,
    pub sio2_eps: f64,
    pub si3n4_eps: f64,
}

impl Default for StackConfig {
    fn default() -> Self {
        Self {
            sio2_nm: default_sio2_nm(),
            si3n4_nm: default_si3n4_nm(),
            gold: default_gold(),
            sio2_eps: default_sio2_eps(),
            si3n4_eps: default_si3n4_eps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ElectronConfig {
    pub energies_kev: Vec<f64>,
}

impl Default for ElectronConfig {
    fn default() -> Self {
        Self {
            energies_kev: vec![93.0, 120.0, 160.0, 200.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    pub impact_nm: f64,
    pub sigma_nm: f64,
    pub l_eff_um: f64,
    pub l_max_um: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            impact_nm: 30.0,
            sigma_nm: cherenkov2d::spectrum::DEFAULT_BEAM_SIGMA_NM,
            l_eff_um: 50.0,
            l_max_um: 250.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub k_min_per_nm: f64,
    pub k_max_per_nm: f64,
    pub k_points: usize,
    pub e_min_ev: f64,
    pub e_max_ev: f64,
    pub e_points: usize,
    pub spectrum_e_min_ev: f64,
    pub spectrum_e_max_ev: f64,
    pub spectrum_step_ev: f64,
    pub detector_min_ev: f64,
    pub detector_max_ev: f64,
    pub detector_step_ev: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            k_min_per_nm: 1e-3,
            k_max_per_nm: 0.08,
            k_points: 800,
            e_min_ev: 1.6,
            e_max_ev: 2.6,
            e_points: 500,
            spectrum_e_min_ev: 1.6,
            spectrum_e_max_ev: 2.6,
            spectrum_step_ev: 0.01,
            detector_min_ev: -3.0,
            detector_max_ev: 12.0,
            detector_step_ev: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EelsConfig {
    pub zlp_fwhm_ev: f64,
    pub lambda: f64,
    /// The product s*p of detection and interaction probability.
    pub sp: f64,
    /// Optional measured ZLP profile (two-column CSV) instead of a Gaussian.
    pub zlp_file: Option<String>,
}

impl Default for EelsConfig {
    fn default() -> Self {
        Self {
            zlp_fwhm_ev: cherenkov2d::eels::DEFAULT_ZLP_FWHM_EV,
            lambda: 1.0,
            sp: 0.7,
            zlp_file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Measurement CSV consumed by the fit command.
    pub input: Option<String>,
    pub seeds: Vec<u64>,
    pub fix_x0_nm: Option<f64>,
    pub lambda_max: f64,
    pub x0_min_nm: f64,
    pub x0_max_nm: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            seeds: vec![1, 2, 3, 4, 5, 6, 7, 8],
            fix_x0_nm: None,
            lambda_max: 5.0,
            x0_min_nm: 5.0,
            x0_max_nm: 200.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumConfig {
    pub g_re: f64,
    pub g_im: f64,
    pub comb_widths: Vec<usize>,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self {
            g_re: 1.0,
            g_im: 0.0,
            comb_widths: vec![1, 32],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Global scale applied to the coupling surface (fit once if needed).
    pub calibration: f64,
    pub sp_reference_kev: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            calibration: 1.0,
            sp_reference_kev: cherenkov2d::spectrum::DEFAULT_SP_REFERENCE_KEV,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub x0_nm: Vec<f64>,
    pub l_eff_um: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            x0_nm: vec![20.0, 40.0, 60.0, 80.0, 100.0],
            l_eff_um: vec![10.0, 50.0, 250.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub stack: StackConfig,
    pub electron: ElectronConfig,
    pub beam: BeamConfig,
    pub grids: GridConfig,
    pub eels: EelsConfig,
    pub fit: FitConfig,
    pub quantum: QuantumConfig,
    pub spectrum: SpectrumConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                toml::from_str(&text)?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.electron.energies_kev.is_empty() {
            return Err(ConfigError::Invalid("electron.energies_kev is empty".into()));
        }
        for t in &self.electron.energies_kev {
            if t.is_nan() || *t <= 0.0 {
                return Err(ConfigError::Invalid(format!("kinetic energy {t} keV")));
            }
        }
        if !(self.stack.sio2_nm > 0.0 && self.stack.si3n4_nm > 0.0) {
            return Err(ConfigError::Invalid("layer thicknesses must be positive".into()));
        }
        if self.grids.k_points < 2 || self.grids.e_points < 2 {
            return Err(ConfigError::Invalid("grids need at least 2 points".into()));
        }
        if !(self.grids.k_min_per_nm < self.grids.k_max_per_nm
            && self.grids.e_min_ev < self.grids.e_max_ev)
        {
            return Err(ConfigError::Invalid("grid bounds are not increasing".into()));
        }
        if self.beam.impact_nm.is_nan() || self.beam.impact_nm <= 0.0 {
            return Err(ConfigError::Invalid("beam.impact_nm must be positive".into()));
        }
        if self.fit.seeds.is_empty() {
            return Err(ConfigError::Invalid("fit.seeds is empty".into()));
        }
        Ok(())
    }

    /// Build the layer stack described by the config.
    pub fn stack(&self) -> Result<LayerStack, ConfigError> {
        let gold = match self.stack.gold.as_str() {
            "drude_lorentz" => DielectricModel::gold(),
            "johnson_christy" => DielectricModel::gold_johnson_christy(),
            "vacuum" => DielectricModel::vacuum(),
            path => DielectricModel::from_table_file(Path::new(path))
                .map_err(|e| ConfigError::Invalid(format!("stack.gold table: {e}")))?,
        };
        let mk = |t: f64, m: DielectricModel| {
            Layer::new(t, m).map_err(|e| ConfigError::Invalid(e.to_string()))
        };
        Ok(LayerStack::new(
            DielectricModel::vacuum(),
            vec![
                mk(
                    self.stack.si3n4_nm,
                    DielectricModel::constant(self.stack.si3n4_eps, 0.0),
                )?,
                mk(
                    self.stack.sio2_nm,
                    DielectricModel::constant(self.stack.sio2_eps, 0.0),
                )?,
            ],
            gold,
        ))
    }

    pub fn kinematics(&self) -> Result<Vec<ElectronKinematics>, ConfigError> {
        self.electron
            .energies_kev
            .iter()
            .map(|t| electron_kinematics(*t).map_err(|e| ConfigError::Invalid(e.to_string())))
            .collect()
    }

    pub fn beam(&self) -> Result<BeamGeometry, ConfigError> {
        BeamGeometry::new(
            self.beam.impact_nm,
            self.beam.sigma_nm,
            self.beam.l_eff_um,
            self.beam.l_max_um,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn k_grid(&self) -> Vec<f64> {
        cherenkov2d::dispersion::linspace(
            self.grids.k_min_per_nm,
            self.grids.k_max_per_nm,
            self.grids.k_points,
        )
    }

    pub fn e_grid(&self) -> Vec<f64> {
        cherenkov2d::dispersion::linspace(
            self.grids.e_min_ev,
            self.grids.e_max_ev,
            self.grids.e_points,
        )
    }

    pub fn spectrum_grid(&self) -> Result<UniformGrid, ConfigError> {
        UniformGrid::from_range(
            self.grids.spectrum_e_min_ev,
            self.grids.spectrum_e_max_ev,
            self.grids.spectrum_step_ev,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn detector_grid(&self) -> Result<UniformGrid, ConfigError> {
        UniformGrid::from_range(
            self.grids.detector_min_ev,
            self.grids.detector_max_ev,
            self.grids.detector_step_ev,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn zlp_model(&self) -> Result<ZlpModel, ConfigError> {
        match &self.eels.zlp_file {
            None => Ok(ZlpModel::Gaussian {
                fwhm_ev: self.eels.zlp_fwhm_ev,
            }),
            Some(path) => {
                let file = cherenkov2d::export::read_spectrum_csv(Path::new(path))
                    .map_err(|e| ConfigError::Invalid(format!("eels.zlp_file: {e}")))?;
                Ok(ZlpModel::Tabulated {
                    energies_ev: file.energies_ev,
                    counts: file.values,
                })
            }
        }
    }

    /// FNV-1a hash of the canonical serialized config; tags every output.
    pub fn content_hash(&self) -> u64 {
        let text = toml::to_string(self).unwrap_or_default();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    /// Metadata keys common to every output file.
    pub fn common_metadata(&self) -> Vec<(String, String)> {
        vec![
            ("toolkit".into(), "cherenkov2d".into()),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ("config_hash".into(), format!("{:016x}", self.content_hash())),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.content_hash(), back.content_hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let res: Result<RunConfig, _> = toml::from_str("[stack]\nbogus = 1\n");
        assert!(res.is_err());
    }

    #[test]
    fn hash_tracks_changes() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.beam.impact_nm = 31.0;
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn gold_can_come_from_a_table_file() {
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("au.txt");
        std::fs::write(&table, "# test table\n1.5 -20.0 1.5\n3.0 -3.0 2.5\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.stack.gold = table.display().to_string();
        let stack = cfg.stack().unwrap();
        let eps = stack.substrate().evaluate(2.25).unwrap();
        assert!(eps.re < 0.0 && eps.im > 0.0);
        cfg.stack.gold = dir.path().join("missing.txt").display().to_string();
        assert!(cfg.stack().is_err());
    }
}
