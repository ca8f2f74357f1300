//! File formats shared by the command-line tools and the inversion pipeline.
//!
//! Spectra travel as two-column CSV with '#'-prefixed "key=value" metadata
//! lines, then a "energy_eV,<name>" header and the rows. Dispersion maps are
//! a matrix CSV plus a JSON sidecar with the grid metadata. Structured
//! results (fits, density matrices) are JSON.

use crate::grid::UniformGrid;
use crate::inversion::{MeasuredSpectrum, SpectrumMetadata};
use crate::quantum::DensityMatrix;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed spectrum file {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Fit(#[from] crate::inversion::FitError),
}

fn io_err(path: &Path, source: std::io::Error) -> ExportError {
    ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write a spectrum CSV: metadata lines, a column header, then the rows.
/// Keys are emitted in the given order.
pub fn write_spectrum_csv(
    path: &Path,
    metadata: &[(String, String)],
    value_name: &str,
    energies: &[f64],
    values: &[f64],
) -> Result<(), ExportError> {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("energy_eV,{value_name}\n"));
    for (e, v) in energies.iter().zip(values) {
        out.push_str(&format!("{e:.6},{v:.12e}\n"));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Parsed spectrum file: metadata map plus the two columns.
pub struct SpectrumFile {
    pub metadata: BTreeMap<String, String>,
    pub energies_ev: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn read_spectrum_csv(path: &Path) -> Result<SpectrumFile, ExportError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut metadata = BTreeMap::new();
    let mut energies = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.starts_with("energy_eV") {
            continue;
        }
        let mut cols = line.split(',');
        let (a, b) = (cols.next(), cols.next());
        let parse = |s: Option<&str>| -> Result<f64, ExportError> {
            s.and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| ExportError::Malformed {
                    path: path.display().to_string(),
                    reason: format!("line {}: expected two numeric columns", lineno + 1),
                })
        };
        energies.push(parse(a)?);
        values.push(parse(b)?);
    }
    if energies.len() < 2 {
        return Err(ExportError::Malformed {
            path: path.display().to_string(),
            reason: "fewer than two data rows".into(),
        });
    }
    Ok(SpectrumFile {
        metadata,
        energies_ev: energies,
        values,
    })
}

impl SpectrumFile {
    /// Interpret the file as a measured spectrum on a uniform channel grid.
    pub fn into_measured(self) -> Result<MeasuredSpectrum, ExportError> {
        let step = self.energies_ev[1] - self.energies_ev[0];
        for w in self.energies_ev.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1e-12) {
                return Err(ExportError::Malformed {
                    path: "<spectrum>".into(),
                    reason: "channel spacing is not uniform".into(),
                });
            }
        }
        let grid = UniformGrid::new(self.energies_ev[0], step, self.energies_ev.len())?;
        let get = |k: &str| self.metadata.get(k).and_then(|v| v.parse::<f64>().ok());
        let meta = SpectrumMetadata {
            kev: get("kev"),
            x0_nm: get("x0_nm"),
            lmax_um: get("lmax_um"),
            rep: self.metadata.get("rep").and_then(|v| v.parse().ok()),
        };
        Ok(MeasuredSpectrum::new(grid, self.values, meta)?)
    }
}

/// Dispersion-map CSV (energy rows by k columns) plus its JSON grid header.
pub fn write_map_csv(
    path: &Path,
    header_path: &Path,
    metadata: &[(String, String)],
    map: &crate::dispersion::DispersionMap,
) -> Result<(), ExportError> {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for row in &map.values {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))?;

    #[derive(Serialize)]
    struct MapHeader<'a> {
        k_per_nm_min: f64,
        k_per_nm_max: f64,
        k_points: usize,
        energy_ev_min: f64,
        energy_ev_max: f64,
        energy_points: usize,
        value: &'a str,
        metadata: BTreeMap<&'a str, &'a str>,
    }
    let header = MapHeader {
        k_per_nm_min: map.k_grid[0],
        k_per_nm_max: *map.k_grid.last().unwrap(),
        k_points: map.k_grid.len(),
        energy_ev_min: map.e_grid[0],
        energy_ev_max: *map.e_grid.last().unwrap(),
        energy_points: map.e_grid.len(),
        value: "Im_r_p",
        metadata: metadata
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect(),
    };
    let file = std::fs::File::create(header_path).map_err(|e| io_err(header_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &header)?;
    w.write_all(b"\n").map_err(|e| io_err(header_path, e))?;
    Ok(())
}

/// Ridge CSV: one row per energy where the ridge exists.
pub fn write_ridge_csv(
    path: &Path,
    metadata: &[(String, String)],
    ridge: &crate::dispersion::ModeRidge,
) -> Result<(), ExportError> {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("energy_eV,k_ridge_per_nm,im_rp_max\n");
    for (e, p) in ridge.energies_ev.iter().zip(&ridge.points) {
        if let Some(p) = p {
            out.push_str(&format!("{e:.6},{:.9e},{:.9e}\n", p.k_per_nm, p.im_rp));
        }
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Serialize any result structure as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExportError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Density-matrix JSON: nested arrays of [re, im] plus the basis label.
pub fn density_matrix_json(rho: &DensityMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = rho
        .rows()
        .iter()
        .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
        .collect();
    serde_json::json!({
        "basis": match rho.basis {
            crate::quantum::Basis::PhotonFock => "photon_fock",
            crate::quantum::Basis::ElectronRung => "electron_rung",
        },
        "dim": rho.dim,
        "elements_re_im": rows,
        "purity": rho.purity(),
        "max_offdiagonal": rho.max_offdiag(),
    })
}
