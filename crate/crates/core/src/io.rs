//! Field files, CSV reports and content hashes.
//!
//! A field file is a fixed little-endian header followed by the coefficients
//! as (re, im) f64 pairs in storage order: index (m,) a, b with a the x-slot
//! and b the q-slot, both in FFT order. A JSON sidecar repeats the header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ZkError};
use crate::field::{fft_inverse, SpaceTimeField, SpectralField, C64};
use crate::grid::Grid;
use crate::harness::sweep::{EstimateRow, SweepReport};
use crate::measure::ScanRow;
use crate::solver::{mass, Trajectory};

const MAGIC: &[u8; 4] = b"ZKF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Spectral,
    SpaceTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub kind: FieldKind,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
    #[serde(rename = "Tw")]
    pub tw: f64,
    #[serde(rename = "Nt")]
    pub nt: usize,
    pub real: bool,
}

impl FieldHeader {
    fn new(kind: FieldKind, g: Grid, real: bool) -> Self {
        Self { kind, lx: g.lx, nx: g.nx, ny: g.ny, tw: g.tw, nt: g.nt, real }
    }

    fn grid(&self) -> Result<Grid> {
        Grid::new(self.lx, self.nx, self.ny, self.tw, self.nt)
    }

    fn len(&self) -> usize {
        match self.kind {
            FieldKind::Spectral => self.nx * self.ny,
            FieldKind::SpaceTime => self.nt * self.nx * self.ny,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn write_field(path: &Path, h: &FieldHeader, coeffs: &[C64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[matches!(h.kind, FieldKind::SpaceTime) as u8, h.real as u8])?;
    w.write_all(&h.lx.to_le_bytes())?;
    w.write_all(&(h.nx as u64).to_le_bytes())?;
    w.write_all(&(h.ny as u64).to_le_bytes())?;
    w.write_all(&h.tw.to_le_bytes())?;
    w.write_all(&(h.nt as u64).to_le_bytes())?;
    for z in coeffs {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(h)? + "\n")?;
    Ok(())
}

fn read_field(path: &Path) -> Result<(FieldHeader, Vec<C64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 6];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(ZkError::Io(format!("{}: not a field file", path.display())));
    }
    let mut word = [0u8; 8];
    let mut next = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let lx = f64::from_le_bytes(next(&mut r)?);
    let nx = u64::from_le_bytes(next(&mut r)?) as usize;
    let ny = u64::from_le_bytes(next(&mut r)?) as usize;
    let tw = f64::from_le_bytes(next(&mut r)?);
    let nt = u64::from_le_bytes(next(&mut r)?) as usize;
    let kind = if head[4] == 1 { FieldKind::SpaceTime } else { FieldKind::Spectral };
    let h = FieldHeader { kind, lx, nx, ny, tw, nt, real: head[5] == 1 };
    h.grid()?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * h.len() {
        return Err(ZkError::Io(format!("{}: payload has {} bytes, header needs {}", path.display(), bytes.len(), 16 * h.len())));
    }
    let coeffs = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    Ok((h, coeffs))
}

pub fn write_spectral(path: &Path, u: &SpectralField) -> Result<()> {
    write_field(path, &FieldHeader::new(FieldKind::Spectral, u.grid, u.real), &u.coeffs)
}

pub fn read_spectral(path: &Path) -> Result<SpectralField> {
    let (h, coeffs) = read_field(path)?;
    if h.kind != FieldKind::Spectral {
        return Err(ZkError::Io(format!("{}: holds a space-time field", path.display())));
    }
    Ok(SpectralField { grid: h.grid()?, coeffs, real: h.real })
}

pub fn write_space_time(path: &Path, u: &SpaceTimeField) -> Result<()> {
    write_field(path, &FieldHeader::new(FieldKind::SpaceTime, u.grid, u.real), &u.coeffs)
}

pub fn read_space_time(path: &Path) -> Result<SpaceTimeField> {
    let (h, coeffs) = read_field(path)?;
    if h.kind != FieldKind::SpaceTime {
        return Err(ZkError::Io(format!("{}: holds a spectral field", path.display())));
    }
    Ok(SpaceTimeField { grid: h.grid()?, coeffs, real: h.real })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureCsvRow {
    pub variant: String,
    pub tau: f64,
    pub xi: f64,
    pub q: i64,
    pub h: f64,
    #[serde(rename = "N1")]
    pub n1: u64,
    #[serde(rename = "N2")]
    pub n2: u64,
    pub c: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: Option<f64>,
    pub measure: f64,
    pub ratio: f64,
    pub case_tag: String,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
}

impl From<&ScanRow> for MeasureCsvRow {
    fn from(r: &ScanRow) -> Self {
        let q = &r.query;
        Self {
            variant: q.variant().name().into(),
            tau: q.tau,
            xi: q.xi,
            q: q.q,
            h: q.h,
            n1: q.n1.get(),
            n2: q.n2.get(),
            c: q.c,
            k: q.k,
            alpha: q.alpha,
            measure: r.measure,
            ratio: r.ratio,
            case_tag: r.case_tag.into(),
            mc_estimate: r.mc.map(|m| m.0),
            mc_stderr: r.mc.map(|m| m.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub estimate_id: String,
    pub k: Option<u32>,
    pub s: Option<f64>,
    pub b: f64,
    pub eps: f64,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub max_quotient: f64,
}

impl From<&SweepReport> for SweepSummaryRow {
    fn from(r: &SweepReport) -> Self {
        let p = &r.params;
        Self {
            estimate_id: r.estimate.name().into(),
            k: p.k,
            s: p.s,
            b: p.b,
            eps: p.eps,
            p: p.p,
            alpha: p.alpha,
            slope: r.fit.slope,
            ci_lo: r.fit.slope - r.fit.slope_ci,
            ci_hi: r.fit.slope + r.fit.slope_ci,
            max_quotient: r.max_quotient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn trajectory_rows(tr: &Trajectory) -> Vec<TrajectoryRow> {
    tr.times
        .iter()
        .zip(&tr.states)
        .zip(tr.conserved.mass.iter().zip(&tr.conserved.energy))
        .map(|((&t, u), (_, &e))| {
            let m = mass(u);
            TrajectoryRow { t, mass: m, energy: e, l2: m.sqrt(), linf: fft_inverse(u).max_abs() }
        })
        .collect()
}

pub fn write_estimate_rows(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    write_csv(path, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("zklab-io-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d.join(name)
    }

    #[test]
    fn field_round_trip() {
        let g = Grid::new(2.0 * PI, 8, 8, 1.0, 8).unwrap();
        let mut u = SpaceTimeField::zeros(g, false);
        u.set(3, 1, 7, C64::new(0.25, -1.5));
        let p = tmp("st.zkf");
        write_space_time(&p, &u).unwrap();
        assert_eq!(read_space_time(&p).unwrap(), u);
        assert!(read_spectral(&p).is_err());
        let side: FieldHeader = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(side.nt, 8);

        let mut s = SpectralField::zeros(g, true);
        s.set(1, 1, C64::new(1.0, 0.0));
        let p = tmp("sp.zkf");
        write_spectral(&p, &s).unwrap();
        assert_eq!(read_spectral(&p).unwrap(), s);
    }

    #[test]
    fn truncated_file_rejected() {
        let g = Grid::new(2.0 * PI, 8, 8, 1.0, 8).unwrap();
        let p = tmp("cut.zkf");
        write_spectral(&p, &SpectralField::zeros(g, false)).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_spectral(&p).is_err());
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
