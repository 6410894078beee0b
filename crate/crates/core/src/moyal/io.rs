use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::GridFunction;
use crate::error::{DeformError, Result};

const MAGIC: &[u8; 8] = b"MOYGRID1";

/// JSON sidecar describing a binary grid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub format: String,
    pub halfdim: usize,
    pub points_per_axis: usize,
    pub extent: f64,
    pub spacing: f64,
    pub boundary_ratio: f64,
}

impl GridMetadata {
    pub fn of(f: &GridFunction) -> Self {
        GridMetadata {
            format: "MOYGRID1".into(),
            halfdim: f.halfdim(),
            points_per_axis: f.points(),
            extent: f.extent(),
            spacing: f.spacing(),
            boundary_ratio: f.boundary_ratio(),
        }
    }
}

/// Header: magic, halfdim (u32), M (u32), L (f64), all little-endian; then
/// row-major samples as (re, im) f64 pairs.
pub fn write_grid<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(f.halfdim() as u32).to_le_bytes())?;
    w.write_all(&(f.points() as u32).to_le_bytes())?;
    w.write_all(&f.extent().to_le_bytes())?;
    for c in f.samples() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid<R: Read>(mut r: R) -> Result<GridFunction> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DeformError::Format("not a MOYGRID1 file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let halfdim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let points = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let extent = f64::from_le_bytes(b8);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return Err(DeformError::Format("truncated sample data".into()));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    GridFunction::new(halfdim, points, extent, samples).map_err(|e| DeformError::Format(e.to_string()))
}

/// Writes `path` and a `path.json` metadata sidecar.
pub fn write_grid_file(f: &GridFunction, path: &Path) -> Result<()> {
    write_grid(f, BufWriter::new(File::create(path)?))?;
    let meta = serde_json::to_string_pretty(&GridMetadata::of(f)).expect("plain data serializes");
    std::fs::write(sidecar(path), meta)?;
    Ok(())
}

pub fn read_grid_file(path: &Path) -> Result<GridFunction> {
    read_grid(BufReader::new(File::open(path)?))
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
