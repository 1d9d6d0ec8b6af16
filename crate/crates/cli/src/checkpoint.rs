//! Binary persistence for field states and density grids.
//!
//! Field checkpoints (`.sgpf`):
//!
//! ```text
//! offset  size  content
//! 0       4     magic "SGPF"
//! 4       4     format version (u32 LE, currently 1)
//! 8       4     Nbar (u32 LE)
//! 12      8     Omega_frac (f64 LE)
//! 20      4     mode count (u32 LE)
//! 24      8     time (f64 LE)
//! 32      16*c  mode-ordered coefficients, (Re, Im) f64 LE pairs
//! ```
//!
//! The mode count must equal the band enumeration for (Nbar, Omega_frac);
//! reads rebuild the mode table and enforce this.  Write -> read round-trips
//! are bit-exact.
//!
//! Density grids (`.sgpg`) share the envelope with magic "SGPG": after the
//! version come `m` (u32 LE), the grid half-width `extent` (f64 LE, units of
//! r0), the snapshot time (f64 LE), and `m*m` row-major f64 LE density
//! values (y varies fastest within a row of constant x index).

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rotbec::basis::ModeTable;
use rotbec::field::FieldState;
use std::io::{Read, Write};
use std::path::Path;

pub const FIELD_MAGIC: [u8; 4] = *b"SGPF";
pub const GRID_MAGIC: [u8; 4] = *b"SGPG";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointHeader {
    pub nbar: u32,
    pub omega_frac: f64,
    pub mode_count: u32,
    pub time: f64,
}

pub fn write_field(path: &Path, header: &CheckpointHeader, coeffs: &[Complex64]) -> Result<()> {
    if coeffs.len() != header.mode_count as usize {
        bail!(
            "checkpoint header promises {} modes but {} coefficients were supplied",
            header.mode_count,
            coeffs.len()
        );
    }
    let mut buf = Vec::with_capacity(32 + 16 * coeffs.len());
    buf.extend_from_slice(&FIELD_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&header.nbar.to_le_bytes());
    buf.extend_from_slice(&header.omega_frac.to_le_bytes());
    buf.extend_from_slice(&header.mode_count.to_le_bytes());
    buf.extend_from_slice(&header.time.to_le_bytes());
    for c in coeffs {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating checkpoint {}", path.display()))?;
    file.write_all(&buf)
        .with_context(|| format!("writing checkpoint {}", path.display()))?;
    Ok(())
}

/// Convenience wrapper for writing a [`FieldState`] on a known band.
pub fn write_state(path: &Path, state: &FieldState, nbar: u32, omega_frac: f64) -> Result<()> {
    let header = CheckpointHeader {
        nbar,
        omega_frac,
        mode_count: state.coeffs.len() as u32,
        time: state.time,
    };
    write_field(path, &header, &state.coeffs)
}

fn read_u32(bytes: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    bytes
        .read_exact(&mut b)
        .with_context(|| format!("checkpoint truncated while reading {what}"))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(bytes: &mut impl Read, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    bytes
        .read_exact(&mut b)
        .with_context(|| format!("checkpoint truncated while reading {what}"))?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_field(path: &Path) -> Result<(CheckpointHeader, FieldState)> {
    let data = std::fs::read(path)
        .with_context(|| format!("reading checkpoint {}", path.display()))?;
    let mut cur = data.as_slice();
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)
        .with_context(|| format!("checkpoint {} is too short", path.display()))?;
    if magic != FIELD_MAGIC {
        bail!(
            "{} is not a field checkpoint: bad magic {:?} (expected \"SGPF\")",
            path.display(),
            magic
        );
    }
    let version = read_u32(&mut cur, "version")?;
    if version != FORMAT_VERSION {
        bail!(
            "{}: unsupported checkpoint format version {version} (this build reads {FORMAT_VERSION})",
            path.display()
        );
    }
    let nbar = read_u32(&mut cur, "Nbar")?;
    let omega_frac = read_f64(&mut cur, "Omega_frac")?;
    let mode_count = read_u32(&mut cur, "mode count")?;
    let time = read_f64(&mut cur, "time")?;
    if cur.len() != 16 * mode_count as usize {
        bail!(
            "{}: payload holds {} bytes but the header promises {} modes ({} bytes)",
            path.display(),
            cur.len(),
            mode_count,
            16 * mode_count as usize
        );
    }
    // Format invariant: the stored mode count matches the band enumeration.
    let table = ModeTable::build(nbar, omega_frac)
        .map_err(|e| anyhow::anyhow!("{}: invalid band parameters: {e}", path.display()))?;
    if table.len() != mode_count as usize {
        bail!(
            "{}: mode count {} does not match the (Nbar={}, Omega_frac={}) band of {} states",
            path.display(),
            mode_count,
            nbar,
            omega_frac,
            table.len()
        );
    }
    let mut coeffs = Vec::with_capacity(mode_count as usize);
    for _ in 0..mode_count {
        let re = read_f64(&mut cur, "coefficient")?;
        let im = read_f64(&mut cur, "coefficient")?;
        coeffs.push(Complex64::new(re, im));
    }
    Ok((
        CheckpointHeader {
            nbar,
            omega_frac,
            mode_count,
            time,
        },
        FieldState::new(coeffs, time),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub m: u32,
    pub extent: f64,
    pub time: f64,
}

pub fn write_grid(path: &Path, header: &GridHeader, values: &[f64]) -> Result<()> {
    let expect = header.m as usize * header.m as usize;
    if values.len() != expect {
        bail!(
            "grid header promises {}x{} values but {} were supplied",
            header.m,
            header.m,
            values.len()
        );
    }
    let mut buf = Vec::with_capacity(28 + 8 * values.len());
    buf.extend_from_slice(&GRID_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&header.m.to_le_bytes());
    buf.extend_from_slice(&header.extent.to_le_bytes());
    buf.extend_from_slice(&header.time.to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, &buf).with_context(|| format!("writing grid {}", path.display()))?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<(GridHeader, Vec<f64>)> {
    let data = std::fs::read(path).with_context(|| format!("reading grid {}", path.display()))?;
    let mut cur = data.as_slice();
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)
        .with_context(|| format!("grid {} is too short", path.display()))?;
    if magic != GRID_MAGIC {
        bail!(
            "{} is not a density grid: bad magic {:?} (expected \"SGPG\")",
            path.display(),
            magic
        );
    }
    let version = read_u32(&mut cur, "version")?;
    if version != FORMAT_VERSION {
        bail!("{}: unsupported grid format version {version}", path.display());
    }
    let m = read_u32(&mut cur, "m")?;
    let extent = read_f64(&mut cur, "extent")?;
    let time = read_f64(&mut cur, "time")?;
    let expect = m as usize * m as usize;
    if cur.len() != 8 * expect {
        bail!(
            "{}: payload holds {} bytes but the header promises {} values",
            path.display(),
            cur.len(),
            expect
        );
    }
    let mut values = Vec::with_capacity(expect);
    for _ in 0..expect {
        values.push(read_f64(&mut cur, "value")?);
    }
    Ok((GridHeader { m, extent, time }, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn field_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("state.sgpf");
        let table = ModeTable::build(6, 0.5).unwrap();
        let coeffs: Vec<Complex64> = (0..table.len())
            .map(|k| Complex64::new((k as f64).sin() * 1e-3, (k as f64 + 0.5).cos()))
            .collect();
        let state = FieldState::new(coeffs, 12.25);
        write_state(&path, &state, 6, 0.5).unwrap();
        let (header, back) = read_field(&path).unwrap();
        assert_eq!(header.nbar, 6);
        assert_eq!(header.omega_frac, 0.5);
        assert_eq!(header.mode_count as usize, table.len());
        assert_eq!(back.time.to_bits(), state.time.to_bits());
        for (a, b) in back.coeffs.iter().zip(&state.coeffs) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        // Writing the read-back state reproduces the file byte for byte.
        let path2 = dir.path().join("state2.sgpf");
        write_state(&path2, &back, 6, 0.5).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn corrupted_magic_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.sgpf");
        let state = FieldState::zeros(1);
        write_state(&path, &state, 0, 0.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        let err = read_field(&path).unwrap_err().to_string();
        assert!(err.contains("bad magic"), "unexpected error: {err}");
    }

    #[test]
    fn mode_count_must_match_the_band() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("short.sgpf");
        // 5 coefficients on a band that enumerates 35 states.
        let header = CheckpointHeader {
            nbar: 6,
            omega_frac: 0.5,
            mode_count: 5,
            time: 0.0,
        };
        write_field(&path, &header, &vec![Complex64::default(); 5]).unwrap();
        let err = read_field(&path).unwrap_err().to_string();
        assert!(err.contains("does not match"), "unexpected error: {err}");
    }

    #[test]
    fn truncated_payload_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trunc.sgpf");
        let table = ModeTable::build(2, 0.0).unwrap();
        let state = FieldState::zeros(table.len());
        write_state(&path, &state, 2, 0.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        let err = read_field(&path).unwrap_err().to_string();
        assert!(
            err.contains("payload") || err.contains("truncated"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn grid_round_trip_preserves_every_bit() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("density.sgpg");
        let m = 7u32;
        let values: Vec<f64> = (0..m * m).map(|k| (k as f64 * 0.37).exp_m1()).collect();
        let header = GridHeader {
            m,
            extent: 12.0,
            time: 3.5,
        };
        write_grid(&path, &header, &values).unwrap();
        let (back_header, back) = read_grid(&path).unwrap();
        assert_eq!(back_header, header);
        for (a, b) in back.iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
