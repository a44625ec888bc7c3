//! Spatial mollification `bⁿ = b * ϱ_n` with the unit-mass bump
//! `ϱ(x) = c_d exp(-1/(1 - |x|²))` on the unit ball and `ϱ_n(x) = nᵈ ϱ(nx)`.
//!
//! Three routes are available: a closed form for the planar Biot-Savart
//! kernel (radial bump, so only the mass inside `|x|` matters), a grid table
//! built by fast convolution, and pointwise midpoint quadrature.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use super::{biot_savart_blob, DriftField, DriftKind};
use crate::error::{invalid, LabError, Result};
use crate::field::{GridGeometry, SampledField};
use crate::spectral::linear_convolution;

#[inline]
fn profile(s2: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s2)).exp()
    }
}

const TABLE_N: usize = 4096;

/// Cumulative radial integrals `∫_0^s profile(ρ²) ρ^{d-1} dρ` on a uniform
/// grid of `[0, 1]`, by Simpson's rule on 16 sub-panels per cell.
fn radial_table(d: usize) -> &'static [f64] {
    static TABLES: [OnceLock<Vec<f64>>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[d - 1].get_or_init(|| {
        let f = |r: f64| profile(r * r) * r.powi(d as i32 - 1);
        let mut out = vec![0.0; TABLE_N + 1];
        let h = 1.0 / TABLE_N as f64;
        let sub = 16;
        for i in 0..TABLE_N {
            let a = i as f64 * h;
            let hs = h / sub as f64;
            let mut acc = 0.0;
            for k in 0..sub {
                let x0 = a + k as f64 * hs;
                acc += hs / 6.0 * (f(x0) + 4.0 * f(x0 + hs / 2.0) + f(x0 + hs));
            }
            out[i + 1] = out[i] + acc;
        }
        out
    })
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => unreachable!("mollifier supports d ≤ 4"),
    }
}

/// Normalization `c_d` of the unit bump.
fn bump_constant(d: usize) -> f64 {
    1.0 / (sphere_area(d) * radial_table(d)[TABLE_N])
}

/// Fraction of the mass of `ϱ` inside the ball of radius `s`.
pub fn mollifier_mass_within(d: usize, s: f64) -> f64 {
    if s >= 1.0 {
        return 1.0;
    }
    if s <= 0.0 {
        return 0.0;
    }
    let t = radial_table(d);
    let u = s * TABLE_N as f64;
    let i = (u as usize).min(TABLE_N - 1);
    let w = u - i as f64;
    ((1.0 - w) * t[i] + w * t[i + 1]) / t[TABLE_N]
}

/// Scaled bump `ϱ_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    pub dims: usize,
    pub level: u32,
}

impl MollifierSpec {
    pub fn new(dims: usize, level: u32) -> Result<Self> {
        if level < 1 {
            return Err(invalid("mollification level must be ≥ 1"));
        }
        if !(1..=4).contains(&dims) {
            return Err(invalid("mollifier supports 1 ≤ d ≤ 4"));
        }
        Ok(Self { dims, level })
    }

    pub fn radius(&self) -> f64 {
        1.0 / self.level as f64
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let n = self.level as f64;
        let s2: f64 = x.iter().map(|v| v * v).sum::<f64>() * n * n;
        n.powi(self.dims as i32) * bump_constant(self.dims) * profile(s2)
    }
}

/// Mollified drift sampled on a grid; points outside the valid region fall
/// back to the base drift.
#[derive(Clone, Debug)]
pub struct GridTable {
    pub table: SampledField,
    pub valid_half_width: f64,
}

#[derive(Clone, Debug)]
pub enum MollifiedRoute {
    /// `K_BS(x) · Φ(n|x|)` with `Φ` the bump mass inside radius `n|x|`.
    RadialClosedForm,
    Grid(Arc<GridTable>),
    /// Midpoint rule with `nodes` points per axis on the bump's cube.
    Quadrature { nodes: usize },
}

impl MollifiedRoute {
    pub fn name(&self) -> &'static str {
        match self {
            MollifiedRoute::RadialClosedForm => "radial",
            MollifiedRoute::Grid(_) => "grid",
            MollifiedRoute::Quadrature { .. } => "quadrature",
        }
    }

    pub(super) fn eval(&self, base: &DriftField, n: u32, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = base.dims;
        match self {
            MollifiedRoute::RadialClosedForm => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 == 0.0 {
                    out[0] = 0.0;
                    out[1] = 0.0;
                    return Ok(());
                }
                let phi = mollifier_mass_within(2, n as f64 * r2.sqrt());
                let v = biot_savart_blob(x[0], x[1], 0.0);
                out[0] = v[0] * phi;
                out[1] = v[1] * phi;
                Ok(())
            }
            MollifiedRoute::Grid(g) => {
                if x.iter().all(|v| v.abs() <= g.valid_half_width) && g.table.interpolate(x, out).is_some() {
                    return Ok(());
                }
                base.eval(t, x, out)
            }
            MollifiedRoute::Quadrature { nodes } => {
                let m = MollifierSpec { dims: d, level: n };
                let r = m.radius();
                let h = 2.0 * r / *nodes as f64;
                let total = nodes.pow(d as u32);
                let mut idx = vec![0usize; d];
                let mut y = vec![0.0; d];
                let mut xy = vec![0.0; d];
                let mut b = vec![0.0; d];
                let mut acc = vec![0.0; d];
                let mut wsum = 0.0;
                for k in 0..total {
                    let mut rem = k;
                    for a in (0..d).rev() {
                        idx[a] = rem % nodes;
                        rem /= nodes;
                    }
                    for a in 0..d {
                        y[a] = -r + (idx[a] as f64 + 0.5) * h;
                    }
                    let w = m.density(&y);
                    if w == 0.0 {
                        continue;
                    }
                    wsum += w;
                    for a in 0..d {
                        xy[a] = x[a] - y[a];
                    }
                    match base.eval(t, &xy, &mut b) {
                        Ok(()) => acc.iter_mut().zip(&b).for_each(|(s, v)| *s += w * v),
                        Err(LabError::SingularPoint(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                for a in 0..d {
                    out[a] = acc[a] / wsum;
                }
                Ok(())
            }
        }
    }
}

fn grid_table(base: &DriftField, n: u32, grid: GridGeometry) -> Result<GridTable> {
    let d = base.dims;
    let m = MollifierSpec::new(d, n)?;
    let h = grid.spacing();
    let k = (m.radius() / h).ceil() as usize;
    if k < 2 || 2 * k + 1 >= grid.resolution {
        return Err(LabError::Coverage(format!(
            "stencil radius 1/n = {} spans {} cells of width {h}; need between 2 and M/2",
            m.radius(),
            m.radius() / h
        )));
    }
    let (sampled, _) = base.sample(0.0, grid)?;
    let km = 2 * k + 1;
    let mut weights = vec![0.0; km.pow(d as u32)];
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    for (i, w) in weights.iter_mut().enumerate() {
        let mut rem = i;
        for a in (0..d).rev() {
            idx[a] = rem % km;
            rem /= km;
        }
        for a in 0..d {
            y[a] = (idx[a] as f64 - k as f64) * h;
        }
        *w = m.density(&y);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let mres = grid.resolution;
    let mut table = vec![0.0; grid.len() * d];
    for c in 0..d {
        let comp = sampled.component(c);
        let (conv, out_m) = linear_convolution(&comp.values, mres, &weights, km, d);
        for (flat, chunk) in table.chunks_mut(d).enumerate() {
            let mut rem = flat;
            let mut src = 0usize;
            let mut stride = 1usize;
            for _ in 0..d {
                src += (rem % mres + k) * stride;
                rem /= mres;
                stride *= out_m;
            }
            chunk[c] = conv[src];
        }
    }
    Ok(GridTable {
        table: SampledField::from_values(grid, d, table)?,
        valid_half_width: grid.half_width - (k as f64 + 0.5) * h,
    })
}

/// `b * ϱ_n` for a time-independent base drift.
///
/// The zero and constant drifts are returned unchanged and the planar
/// Biot-Savart kernel uses its closed form. Other bases use a grid table when
/// `grid` is given and pointwise quadrature otherwise.
pub fn mollify_drift(base: &DriftField, n: u32, grid: Option<GridGeometry>) -> Result<DriftField> {
    MollifierSpec::new(base.dims, n)?;
    let route = match (&base.kind, grid) {
        (DriftKind::Zero, _) | (DriftKind::Constant(_), _) => return Ok(base.clone()),
        (DriftKind::BiotSavart, _) => MollifiedRoute::RadialClosedForm,
        (_, Some(g)) => {
            if g.dims != base.dims {
                return Err(LabError::GeometryMismatch("mollification grid dimension".into()));
            }
            MollifiedRoute::Grid(Arc::new(grid_table(base, n, g)?))
        }
        (_, None) => MollifiedRoute::Quadrature { nodes: if base.dims <= 2 { 32 } else { 16 } },
    };
    Ok(DriftField {
        dims: base.dims,
        kind: DriftKind::Mollified { base: Box::new(base.clone()), n, route },
        divergence_free: base.divergence_free,
        singular_points: vec![],
    })
}
