//! Binary field snapshots.
//!
//! Layout (all numbers little-endian):
//!
//! | bytes        | content                                          |
//! |--------------|--------------------------------------------------|
//! | 4            | magic `GLVX`                                     |
//! | 4            | format version, `u32` (currently 1)              |
//! | 4            | `N`, `u32`                                       |
//! | 8            | `L`, `f64`                                       |
//! | 16 N²        | ψ, `f64` pairs (re, im), row-major               |
//! | 8 N²         | `A_x` links, row-major, padding included         |
//! | 8 N²         | `A_y` links                                      |
//! | 1            | momentum flag, `u8` (0 or 1)                     |
//! | 32 N² if set | π (16 N²), then `E_x` and `E_y` (8 N² each)      |
//!
//! λ is not stored; readers supply it.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{FieldState, FieldVector, LatticeSpec, MomentumState};
use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"GLVX";

fn write_vector<W: Write>(out: &mut W, v: &FieldVector) -> Result<()> {
    for z in &v.psi {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    for a in v.ax.iter().chain(&v.ay) {
        out.write_all(&a.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_vector<R: Read>(input: &mut R, sites: usize) -> Result<FieldVector> {
    let mut v = FieldVector::zeros(sites);
    for z in v.psi.iter_mut() {
        let re = read_f64(input)?;
        let im = read_f64(input)?;
        *z = Complex64::new(re, im);
    }
    for a in v.ax.iter_mut() {
        *a = read_f64(input)?;
    }
    for a in v.ay.iter_mut() {
        *a = read_f64(input)?;
    }
    Ok(v)
}

pub fn write_snapshot<W: Write>(mut out: W, field: &FieldState, momentum: Option<&MomentumState>) -> Result<()> {
    if let Some(m) = momentum {
        field.check_same_lattice(&m.lattice)?;
    }
    let n = field.lattice.points_per_side();
    out.write_all(MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&(n as u32).to_le_bytes())?;
    out.write_all(&field.lattice.extent().to_le_bytes())?;
    write_vector(&mut out, &field.fields)?;
    match momentum {
        Some(m) => {
            out.write_all(&[1u8])?;
            write_vector(&mut out, &m.fields)?;
        }
        None => out.write_all(&[0u8])?,
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R, lambda: f64) -> Result<(FieldState, Option<MomentumState>)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    input.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    let extent = read_f64(&mut input)?;
    let lattice = LatticeSpec::new(extent, n).map_err(|e| Error::Format(format!("bad lattice header: {e}")))?;
    let fields = read_vector(&mut input, n * n)?;
    let mut flag = [0u8; 1];
    input.read_exact(&mut flag)?;
    let momentum = match flag[0] {
        0 => None,
        1 => Some(MomentumState {
            lattice,
            fields: read_vector(&mut input, n * n)?,
        }),
        other => return Err(Error::Format(format!("bad momentum flag {other}"))),
    };
    Ok((
        FieldState {
            lattice,
            lambda,
            fields,
        },
        momentum,
    ))
}
