//! Little-endian binary formats for bulk data and CSV export of grids.
//!
//! * `SDE1`: `magic, d: u32, M: u64, K: u64, dt: f64, s: f64`, then
//!   `M × (K + 1) × d` doubles, path-major. Record `k` is at `s + k dt`.
//! * `PTC1`: `magic, d: u32, N: u64, dt: f64`, then per frame the time,
//!   `N × d` positions and `N` weights.
//! * `FPE1`: `magic, d: u32, M: u64, L: f64, frames: u64`, then per frame
//!   the time and `M^d` samples.

use std::io::{Read, Write};

use crate::error::{LabError, Result};
use crate::field::{GridGeometry, SampledField};
use crate::fpe::DensityTrajectory;
use crate::particles::ParticleState;
use crate::sde::PathEnsemble;

const SDE_MAGIC: &[u8; 4] = b"SDE1";
const PTC_MAGIC: &[u8; 4] = b"PTC1";
const FPE_MAGIC: &[u8; 4] = b"FPE1";

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}
fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}
fn put_f64s(w: &mut impl Write, v: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * v.len());
    for x in v {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    Ok(w.write_all(&buf)?)
}

fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => LabError::Format("truncated file".into()),
        _ => LabError::Io(e),
    })?;
    Ok(b)
}
fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(get(r)?))
}
fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(get(r)?))
}
fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(get(r)?))
}
fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf).map_err(|_| LabError::Format("truncated payload".into()))?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}
fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let m: [u8; 4] = get(r)?;
    if &m != magic {
        return Err(LabError::Format(format!("bad magic {:?}, expected {:?}", String::from_utf8_lossy(&m), std::str::from_utf8(magic).unwrap())));
    }
    Ok(())
}

/// Contents of an `SDE1` file.
#[derive(Clone, Debug, PartialEq)]
pub struct PathsFile {
    pub dims: usize,
    pub paths: usize,
    pub intervals: usize,
    pub dt: f64,
    pub start: f64,
    pub states: Vec<f64>,
}

/// Writes the recorded states. The record times must be uniformly spaced.
pub fn write_paths(w: &mut impl Write, ens: &PathEnsemble) -> Result<()> {
    let k = ens.records() - 1;
    let s = ens.times[0];
    let dt = if k == 0 { 0.0 } else { (ens.times[k] - s) / k as f64 };
    if ens.times.iter().enumerate().any(|(i, t)| (t - (s + i as f64 * dt)).abs() > 1e-9 * dt.max(1.0)) {
        return Err(LabError::Format("record times are not uniform; choose record_every dividing the step count".into()));
    }
    w.write_all(SDE_MAGIC)?;
    put_u32(w, ens.dims as u32)?;
    put_u64(w, ens.paths() as u64)?;
    put_u64(w, k as u64)?;
    put_f64s(w, &[dt, s])?;
    put_f64s(w, &ens.states)
}

pub fn read_paths(r: &mut impl Read) -> Result<PathsFile> {
    expect_magic(r, SDE_MAGIC)?;
    let dims = get_u32(r)? as usize;
    let paths = get_u64(r)? as usize;
    let intervals = get_u64(r)? as usize;
    let dt = get_f64(r)?;
    let start = get_f64(r)?;
    let states = get_f64s(r, paths * (intervals + 1) * dims)?;
    Ok(PathsFile { dims, paths, intervals, dt, start, states })
}

/// Contents of a `PTC1` file: `(time, positions, weights)` per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleFile {
    pub dims: usize,
    pub particles: usize,
    pub dt: f64,
    pub frames: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

pub fn write_particle_frames(w: &mut impl Write, frames: &[ParticleState], dt: f64) -> Result<()> {
    let first = frames.first().ok_or_else(|| LabError::Format("no frames to write".into()))?;
    w.write_all(PTC_MAGIC)?;
    put_u32(w, first.dims as u32)?;
    put_u64(w, first.len() as u64)?;
    put_f64s(w, &[dt])?;
    for f in frames {
        if f.len() != first.len() || f.dims != first.dims {
            return Err(LabError::Format("frames differ in shape".into()));
        }
        put_f64s(w, &[f.time])?;
        put_f64s(w, &f.positions)?;
        put_f64s(w, &f.weights)?;
    }
    Ok(())
}

pub fn read_particle_frames(r: &mut impl Read) -> Result<ParticleFile> {
    expect_magic(r, PTC_MAGIC)?;
    let dims = get_u32(r)? as usize;
    let particles = get_u64(r)? as usize;
    let dt = get_f64(r)?;
    let mut frames = Vec::new();
    loop {
        let mut tb = [0u8; 8];
        match r.read(&mut tb[..1])? {
            0 => break,
            _ => r.read_exact(&mut tb[1..]).map_err(|_| LabError::Format("truncated frame".into()))?,
        }
        let t = f64::from_le_bytes(tb);
        let pos = get_f64s(r, particles * dims)?;
        let wts = get_f64s(r, particles)?;
        frames.push((t, pos, wts));
    }
    Ok(ParticleFile { dims, particles, dt, frames })
}

pub fn write_trajectory(w: &mut impl Write, traj: &DensityTrajectory) -> Result<()> {
    let g = traj.geometry;
    w.write_all(FPE_MAGIC)?;
    put_u32(w, g.dims as u32)?;
    put_u64(w, g.resolution as u64)?;
    put_f64s(w, &[g.half_width])?;
    put_u64(w, traj.frames.len() as u64)?;
    for (t, f) in traj.times.iter().zip(&traj.frames) {
        put_f64s(w, &[*t])?;
        put_f64s(w, &f.values)?;
    }
    Ok(())
}

/// Frames of an `FPE1` file.
pub fn read_trajectory(r: &mut impl Read) -> Result<Vec<(f64, SampledField)>> {
    expect_magic(r, FPE_MAGIC)?;
    let dims = get_u32(r)? as usize;
    let m = get_u64(r)? as usize;
    let l = get_f64(r)?;
    let n = get_u64(r)? as usize;
    let g = GridGeometry::new(dims, l, m).map_err(|e| LabError::Format(e.to_string()))?;
    (0..n)
        .map(|_| {
            let t = get_f64(r)?;
            Ok((t, SampledField::from_values(g, 1, get_f64s(r, g.len())?)?))
        })
        .collect()
}

/// `x_0, …, x_{d-1}, value` per cell center, in flat order.
pub fn field_csv(f: &SampledField) -> String {
    let g = f.geometry;
    let mut out = String::new();
    let cols: Vec<String> = (0..g.dims).map(|a| format!("x{a}")).chain(["value".to_string()]).collect();
    out.push_str(&cols.join(","));
    out.push('\n');
    let mut x = vec![0.0; g.dims];
    for i in 0..g.len() {
        g.center(i, &mut x);
        let row: Vec<String> =
            x.iter().copied().chain(f.values[i * f.components..(i + 1) * f.components].iter().copied()).map(crate::report::fmt_f64).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
