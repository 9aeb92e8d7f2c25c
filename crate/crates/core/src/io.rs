//! CSV and binary file formats.
//!
//! Every CSV has a header row. Floats are written with Rust's shortest
//! round-trip `{:e}` formatting, so output is byte-stable for identical values.
//!
//! The binary field format is little-endian: `nx: u64`, `ny: u64`,
//! `hx: f64`, `hy: f64`, then `nx·ny` `f64` values in row-major order
//! (`i` fastest).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::ordinates::DiscreteOrdinateSet;
use crate::regularity::BoundaryProfile;
use crate::sn::{ConvergenceTable, Grid2D, ScalarField};

/// `i,j,x_center,y_center,value`
pub fn write_field_csv<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    writeln!(w, "i,j,x_center,y_center,value")?;
    write_cells(&mut w, field)
}

/// `i,j,x,y,abs_error`
pub fn write_error_field_csv<W: Write>(mut w: W, errors: &ScalarField) -> Result<()> {
    writeln!(w, "i,j,x,y,abs_error")?;
    write_cells(&mut w, errors)
}

fn write_cells<W: Write>(w: &mut W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell_center(i, j);
            writeln!(w, "{i},{j},{:e},{:e},{:e}", c.x1, c.x2, field.get(i, j))?;
        }
    }
    Ok(())
}

/// `mesh,l1_error,rate` (rate empty on the first row).
pub fn write_table_csv<W: Write>(mut w: W, table: &ConvergenceTable) -> Result<()> {
    writeln!(w, "mesh,l1_error,rate")?;
    for row in &table.rows {
        match row.rate {
            Some(r) => writeln!(w, "{},{:e},{:e}", row.mesh, row.l1_error, r)?,
            None => writeln!(w, "{},{:e},", row.mesh, row.l1_error)?,
        }
    }
    Ok(())
}

/// `mu,eta,weight`
pub fn write_quadrature_csv<W: Write>(mut w: W, set: &DiscreteOrdinateSet) -> Result<()> {
    writeln!(w, "mu,eta,weight")?;
    for d in set.directions() {
        writeln!(w, "{:e},{:e},{:e}", d.mu, d.eta, d.weight)?;
    }
    Ok(())
}

/// `rho,derivative_estimate,fitted_value`
pub fn write_profile_csv<W: Write>(
    mut w: W,
    profile: &BoundaryProfile,
    fitted: &[f64],
) -> Result<()> {
    if fitted.len() != profile.len() {
        return Err(Error::Format(
            "fitted values do not match the profile".into(),
        ));
    }
    writeln!(w, "rho,derivative_estimate,fitted_value")?;
    for (s, f) in profile.samples().iter().zip(fitted) {
        writeln!(w, "{:e},{:e},{:e}", s.rho, s.value, f)?;
    }
    Ok(())
}

/// Binary field body; `origin` is not stored.
pub fn write_field_binary<W: Write>(w: W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    write_raw_binary(w, g.nx, g.ny, g.hx, g.hy, field.values())
}

/// Binary layout for an arbitrary `nx × ny` array (used for transfer stencils as well).
pub fn write_raw_binary<W: Write>(
    mut w: W,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    values: &[f64],
) -> Result<()> {
    if values.len() != nx * ny {
        return Err(Error::Format(format!(
            "{} values for a {nx}x{ny} array",
            values.len()
        )));
    }
    w.write_all(&(nx as u64).to_le_bytes())?;
    w.write_all(&(ny as u64).to_le_bytes())?;
    w.write_all(&hx.to_le_bytes())?;
    w.write_all(&hy.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * values.len());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Header and body of a binary array.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBinary {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub values: Vec<f64>,
}

pub fn read_raw_binary<R: Read>(mut r: R) -> Result<RawBinary> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated binary header".into()))?;
    let word = |k: usize| <[u8; 8]>::try_from(&header[8 * k..8 * k + 8]).expect("8 bytes");
    let nx = u64::from_le_bytes(word(0));
    let ny = u64::from_le_bytes(word(1));
    let hx = f64::from_le_bytes(word(2));
    let hy = f64::from_le_bytes(word(3));
    let cells = nx
        .checked_mul(ny)
        .filter(|&c| c > 0 && c <= (1 << 32))
        .ok_or_else(|| Error::Format(format!("implausible binary dimensions {nx}x{ny}")))?
        as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * cells {
        return Err(Error::Format(format!(
            "binary body has {} bytes, expected {}",
            body.len(),
            8 * cells
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(RawBinary {
        nx: nx as usize,
        ny: ny as usize,
        hx,
        hy,
        values,
    })
}

/// Reads a field written by [`write_field_binary`], placing it at `origin`.
pub fn read_field_binary<R: Read>(r: R, origin: Point2) -> Result<ScalarField> {
    let raw = read_raw_binary(r)?;
    let grid = Grid2D::new(raw.nx, raw.ny, raw.hx, raw.hy, origin)
        .map_err(|e| Error::Format(e.to_string()))?;
    ScalarField::new(grid, raw.values).map_err(|e| Error::Format(e.to_string()))
}
