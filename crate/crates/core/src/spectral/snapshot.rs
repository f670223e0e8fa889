//! On-disk snapshot format: a JSON header plus a sibling little-endian
//! binary file of complex128 values (re, im), component-major.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

pub const DTYPE: &str = "complex128";
pub const LAYOUT: &str = "row-major, component-major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n_dims: usize,
    pub resolution: usize,
    pub period: f64,
    pub components: usize,
    pub dtype: String,
    pub layout: String,
    pub data_file: String,
}

/// Path of the binary payload belonging to a header path.
pub fn data_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

pub fn encode(field: &SpectralField) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 * field.coeffs().len());
    for z in field.coeffs() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    bytes
}

/// Writes `header` (JSON) and its `.bin` sibling; returns both paths.
pub fn write_snapshot(field: &SpectralField, header: &Path) -> Result<(PathBuf, PathBuf)> {
    let bin = data_path(header);
    let g = field.grid();
    let h = SnapshotHeader {
        n_dims: g.n_dims(),
        resolution: g.resolution(),
        period: g.period(),
        components: field.components(),
        dtype: DTYPE.into(),
        layout: LAYOUT.into(),
        data_file: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let json = serde_json::to_string_pretty(&h)?;
    fs::write(header, json).map_err(|e| Error::io(header, e))?;
    fs::write(&bin, encode(field)).map_err(|e| Error::io(&bin, e))?;
    Ok((header.to_path_buf(), bin))
}

pub fn read_snapshot(header: &Path) -> Result<SpectralField> {
    let text = fs::read_to_string(header).map_err(|e| Error::io(header, e))?;
    let h: SnapshotHeader = serde_json::from_str(&text)?;
    if h.dtype != DTYPE || h.layout != LAYOUT {
        return Err(Error::RejectedInput(format!(
            "unsupported snapshot dtype/layout {:?}/{:?}",
            h.dtype, h.layout
        )));
    }
    let grid = Grid::with_period(h.n_dims, h.resolution, h.period)?;
    let bin = header.with_file_name(&h.data_file);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let expected = 16 * h.components * grid.len();
    if bytes.len() != expected {
        return Err(Error::RejectedInput(format!(
            "{} holds {} bytes, expected {expected}",
            bin.display(),
            bytes.len()
        )));
    }
    let coeffs = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    SpectralField::from_coeffs(&grid, h.components, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(2, 8).unwrap();
        let mut f = SpectralField::zeros(&g, 2);
        for (i, z) in f.coeffs_mut().iter_mut().enumerate() {
            *z = Complex64::new((i as f64).sqrt() / 3.0, -(i as f64) * 1e-300);
        }
        let h = dir.path().join("u0.json");
        let (_, bin) = write_snapshot(&f, &h).unwrap();
        assert_eq!(fs::metadata(bin).unwrap().len(), 16 * 2 * 64);
        let back = read_snapshot(&h).unwrap();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
