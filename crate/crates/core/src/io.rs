//! Binary field and snapshot files, and the CSV tables.
//!
//! Field file, little-endian:
//!
//! ```text
//! b"MODHF01\0" | d: u32 | n: u32 | L: f64 | count: u32 | count × n^d × (re: f64, im: f64)
//! ```
//!
//! Snapshot file, little-endian:
//!
//! ```text
//! b"MODHFSNP" | d: u32 | n: u32 | L: f64 | N: u32 | snapshots: u32
//! then per snapshot: t: f64 | N × n^d × (re: f64, im: f64)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::modspace::{NormMethod, NormParams};
use crate::solver::{DiagRow, Trajectory};
use crate::symbols::ProbeRow;

pub const FIELD_MAGIC: &[u8; 8] = b"MODHF01\0";
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MODHFSNP";

fn put_grid(out: &mut Vec<u8>, grid: &GridSpec) {
    out.extend_from_slice(&(grid.d() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_width().to_le_bytes());
}

fn put_field(out: &mut Vec<u8>, f: &Field) {
    for v in f.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

fn check_grids(fields: &[Field]) -> Result<GridSpec> {
    let grid = *fields
        .first()
        .ok_or_else(|| Error::Format("nothing to write".into()))?
        .grid();
    if fields.iter().any(|f| f.grid() != &grid) {
        return Err(Error::Config("fields live on different grids".into()));
    }
    Ok(grid)
}

pub fn encode_fields(fields: &[Field]) -> Result<Vec<u8>> {
    let grid = check_grids(fields)?;
    let mut out = Vec::with_capacity(28 + 16 * grid.len() * fields.len());
    out.extend_from_slice(FIELD_MAGIC);
    put_grid(&mut out, &grid);
    out.extend_from_slice(&(fields.len() as u32).to_le_bytes());
    for f in fields {
        put_field(&mut out, f);
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < k {
            return Err(Error::Format(format!("truncated file at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn grid(&mut self) -> Result<GridSpec> {
        let d = self.u32()? as usize;
        let n = self.u32()? as usize;
        let l = self.f64()?;
        GridSpec::new(d, n, l).map_err(|e| Error::Format(format!("bad grid header: {e}")))
    }

    fn field(&mut self, grid: &GridSpec) -> Result<Field> {
        let mut v = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = self.f64()?;
            let im = self.f64()?;
            v.push(Complex64::new(re, im));
        }
        Field::new(*grid, v).map_err(|e| Error::Format(e.to_string()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn decode_fields(buf: &[u8]) -> Result<Vec<Field>> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(8)? != FIELD_MAGIC {
        return Err(Error::Format("not a field file (bad magic)".into()));
    }
    let grid = c.grid()?;
    let count = c.u32()? as usize;
    if count == 0 {
        return Err(Error::Format("field file holds no fields".into()));
    }
    let fields = (0..count).map(|_| c.field(&grid)).collect::<Result<Vec<_>>>()?;
    c.finish()?;
    Ok(fields)
}

pub fn write_fields(path: &Path, fields: &[Field]) -> Result<()> {
    Ok(fs::write(path, encode_fields(fields)?)?)
}

pub fn read_fields(path: &Path) -> Result<Vec<Field>> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_fields(&buf)
}

pub fn encode_snapshots(traj: &Trajectory) -> Result<Vec<u8>> {
    let first = traj
        .states
        .first()
        .ok_or_else(|| Error::Format("empty trajectory".into()))?;
    let grid = check_grids(first)?;
    let mut out = Vec::new();
    out.extend_from_slice(SNAPSHOT_MAGIC);
    put_grid(&mut out, &grid);
    out.extend_from_slice(&(first.len() as u32).to_le_bytes());
    out.extend_from_slice(&(traj.times.len() as u32).to_le_bytes());
    for (t, states) in traj.times.iter().zip(&traj.states) {
        out.extend_from_slice(&t.to_le_bytes());
        for f in states {
            put_field(&mut out, f);
        }
    }
    Ok(out)
}

/// `(times, states)` from a snapshot file.
pub fn decode_snapshots(buf: &[u8]) -> Result<(Vec<f64>, Vec<Vec<Field>>)> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(8)? != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a snapshot file (bad magic)".into()));
    }
    let grid = c.grid()?;
    let n = c.u32()? as usize;
    let count = c.u32()? as usize;
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        times.push(c.f64()?);
        states.push((0..n).map(|_| c.field(&grid)).collect::<Result<Vec<_>>>()?);
    }
    c.finish()?;
    Ok((times, states))
}

pub const DIAGNOSTICS_HEADER: &str = "t,k,mass,m_norm_22,m_norm_2q,strichartz_acc,picard_iters";

/// Diagnostics table; floats use Rust's shortest round-trip formatting.
pub fn diagnostics_csv(rows: &[DiagRow]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t, r.k, r.mass, r.m_norm_22, r.m_norm_2q, r.strichartz_acc, r.picard_iters
        ));
    }
    s
}

pub const NORM_HEADER: &str = "function_id,p,q,s,method,value";

pub fn norm_csv_row(function_id: &str, params: &NormParams, method: NormMethod, value: f64) -> String {
    format!(
        "{function_id},{},{},{},{},{value}\n",
        params.p,
        params.q,
        params.s,
        method.as_str()
    )
}

pub const PROBE_HEADER: &str = "symbol_id,p,q,t,ratio";

pub fn probe_csv(rows: &[ProbeRow]) -> String {
    let mut s = String::from(PROBE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.symbol_id, r.p, r.q, r.t, r.ratio));
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
