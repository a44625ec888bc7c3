//! Uniform box grids and the fields sampled on them.
//!
//! A [`GridGeometry`] is the box `[-L, L]^d` split into `M^d` cells of side
//! `h = 2L/M`. Samples live at cell centers `-L + (i + 1/2) h`, so for even
//! `M` the origin is a cell corner and never a sample point. Flat indices are
//! row-major with axis 0 slowest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub dims: usize,
    pub half_width: f64,
    pub resolution: usize,
}

impl GridGeometry {
    pub fn new(dims: usize, half_width: f64, resolution: usize) -> Result<Self> {
        if dims == 0 {
            return Err(invalid("grid dimension must be positive"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(invalid(format!("half width must be positive, got {half_width}")));
        }
        if resolution < 2 {
            return Err(invalid("grid resolution must be at least 2"));
        }
        Ok(Self { dims, half_width, resolution })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    #[inline]
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.resolution.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of the `i`-th cell center along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.resolution).map(|i| self.coord(i)).collect()
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dims).rev() {
            out[a] = flat % self.resolution;
            flat /= self.resolution;
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.resolution + i)
    }

    pub fn center(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for a in (0..self.dims).rev() {
            out[a] = self.coord(rem % self.resolution);
            rem /= self.resolution;
        }
    }

    /// Cell containing `x`, or `None` outside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let h = self.spacing();
        let mut flat = 0usize;
        for &xa in x.iter().take(self.dims) {
            let u = (xa + self.half_width) / h;
            if !(u >= 0.0 && u < self.resolution as f64) {
                return None;
            }
            flat = flat * self.resolution + u as usize;
        }
        Some(flat)
    }

    /// Geometry of `x ↦ f(λx)` when the samples are kept: the box shrinks by `λ`.
    pub fn dilated(&self, lambda: f64) -> Self {
        Self { half_width: self.half_width / lambda, ..*self }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.resolution == other.resolution
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }
}

/// Scalar or vector samples on a [`GridGeometry`]. Vector samples are stored
/// interleaved, `values[cell * components + c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub geometry: GridGeometry,
    pub components: usize,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn from_values(geometry: GridGeometry, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(invalid("field needs at least one component"));
        }
        if values.len() != geometry.len() * components {
            return Err(LabError::GeometryMismatch(format!(
                "expected {} samples, got {}",
                geometry.len() * components,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite(i));
        }
        Ok(Self { geometry, components, values })
    }

    pub fn zeros(geometry: GridGeometry, components: usize) -> Self {
        Self { geometry, components, values: vec![0.0; geometry.len() * components] }
    }

    pub fn from_fn(geometry: GridGeometry, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; geometry.dims];
        let values = (0..geometry.len())
            .map(|i| {
                geometry.center(i, &mut x);
                f(&x)
            })
            .collect();
        Self { geometry, components: 1, values }
    }

    pub fn from_vector_fn(
        geometry: GridGeometry,
        components: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> Self {
        let mut x = vec![0.0; geometry.dims];
        let mut values = vec![0.0; geometry.len() * components];
        for (i, chunk) in values.chunks_mut(components).enumerate() {
            geometry.center(i, &mut x);
            f(&x, chunk);
        }
        Self { geometry, components, values }
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    /// Pointwise Euclidean magnitude; the identity (up to sign) for scalars.
    pub fn magnitude(&self) -> SampledField {
        let values = self
            .values
            .chunks(self.components)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        SampledField { geometry: self.geometry, components: 1, values }
    }

    pub fn component(&self, c: usize) -> SampledField {
        let values = self.values.iter().skip(c).step_by(self.components).copied().collect();
        SampledField { geometry: self.geometry, components: 1, values }
    }

    pub fn scaled(&self, c: f64) -> SampledField {
        SampledField {
            geometry: self.geometry,
            components: self.components,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geometry.cell_measure()
    }

    /// Discrete `L^p` norm of the magnitude, `p ∈ (0, ∞]`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mag = self.magnitude();
        if p.is_infinite() {
            return mag.values.iter().fold(0.0, |m: f64, v| m.max(*v));
        }
        let s: f64 = mag.values.iter().map(|v| v.powf(p)).sum();
        (s * self.geometry.cell_measure()).powf(1.0 / p)
    }

    pub fn l1_distance(&self, other: &SampledField) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum();
        Ok(s * self.geometry.cell_measure())
    }

    pub fn check_compatible(&self, other: &SampledField) -> Result<()> {
        if !self.geometry.same_as(&other.geometry) || self.components != other.components {
            return Err(LabError::GeometryMismatch(format!(
                "{:?}x{} vs {:?}x{}",
                self.geometry, self.components, other.geometry, other.components
            )));
        }
        Ok(())
    }

    /// The field `x ↦ f(λx)`: identical samples on a box shrunk by `λ`.
    pub fn dilate(&self, lambda: f64) -> SampledField {
        SampledField {
            geometry: self.geometry.dilated(lambda),
            components: self.components,
            values: self.values.clone(),
        }
    }

    /// Multilinear interpolation between cell centers. Points inside the box
    /// but beyond the outermost centers use the nearest edge cell; points
    /// outside the box return `None`.
    pub fn interpolate(&self, x: &[f64], out: &mut [f64]) -> Option<()> {
        let g = &self.geometry;
        let d = g.dims;
        let h = g.spacing();
        let m = g.resolution;
        let mut base = [0usize; 4];
        let mut frac = [0.0f64; 4];
        if d > 4 {
            return None;
        }
        for a in 0..d {
            let xa = x[a];
            if !(xa >= -g.half_width && xa <= g.half_width) {
                return None;
            }
            let u = ((xa + g.half_width) / h - 0.5).clamp(0.0, (m - 1) as f64);
            let i0 = (u.floor() as usize).min(m - 2);
            base[a] = i0;
            frac[a] = u - i0 as f64;
        }
        out[..self.components].iter_mut().for_each(|v| *v = 0.0);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                flat = flat * m + base[a] + bit;
            }
            if w == 0.0 {
                continue;
            }
            let off = flat * self.components;
            for c in 0..self.components {
                out[c] += w * self.values[off + c];
            }
        }
        Some(())
    }

    pub fn interpolate_scalar(&self, x: &[f64]) -> Option<f64> {
        let mut v = [0.0];
        self.interpolate(x, &mut v).map(|_| v[0])
    }
}

/// Snapshots of a scalar field on a uniform time grid.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    pub times: Vec<f64>,
    pub frames: Vec<SampledField>,
}

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, frames: Vec<SampledField>) -> Result<Self> {
        if times.is_empty() || times.len() != frames.len() {
            return Err(invalid("time grid and frame count must match and be non-empty"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("time grid must be strictly increasing"));
        }
        let g = frames[0].geometry;
        for f in &frames {
            if !f.geometry.same_as(&g) {
                return Err(LabError::GeometryMismatch("frames do not share a grid".into()));
            }
        }
        Ok(Self { times, frames })
    }

    /// Samples `f(t, x)` on `K + 1` uniform instants of `[0, horizon]`.
    pub fn from_fn(
        geometry: GridGeometry,
        horizon: f64,
        steps: usize,
        f: impl Fn(f64, &[f64]) -> f64,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("need at least one time step"));
        }
        let times: Vec<f64> = (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect();
        let frames = times.iter().map(|&t| SampledField::from_fn(geometry, |x| f(t, x))).collect();
        Self::new(times, frames)
    }

    pub fn geometry(&self) -> GridGeometry {
        self.frames[0].geometry
    }

    pub fn scaled(&self, c: f64) -> SpaceTimeField {
        SpaceTimeField {
            times: self.times.clone(),
            frames: self.frames.iter().map(|f| f.scaled(c)).collect(),
        }
    }

    /// Nearest frame in time, multilinear in space. `None` outside the box.
    pub fn eval(&self, t: f64, x: &[f64]) -> Option<f64> {
        let k = self.nearest_frame(t);
        self.frames[k].interpolate_scalar(x)
    }

    pub fn nearest_frame(&self, t: f64) -> usize {
        let n = self.times.len();
        if n == 1 {
            return 0;
        }
        let t0 = self.times[0];
        let step = (self.times[n - 1] - t0) / (n - 1) as f64;
        let k = ((t - t0) / step).round();
        (k.max(0.0) as usize).min(n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_centers_avoid_origin_for_even_resolution() {
        let g = GridGeometry::new(2, 1.0, 8).unwrap();
        let mut x = [0.0; 2];
        for i in 0..g.len() {
            g.center(i, &mut x);
            assert!(x[0] != 0.0 && x[1] != 0.0);
        }
        assert_eq!(g.locate(&[-0.99, 0.99]), Some(7));
        assert_eq!(g.locate(&[1.5, 0.0]), None);
    }

    #[test]
    fn field_rejects_bad_lengths_and_nan() {
        let g = GridGeometry::new(1, 1.0, 4).unwrap();
        assert!(SampledField::from_values(g, 1, vec![0.0; 3]).is_err());
        assert!(matches!(
            SampledField::from_values(g, 1, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(LabError::NonFinite(1))
        ));
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let g = GridGeometry::new(2, 2.0, 16).unwrap();
        let f = SampledField::from_fn(g, |x| 3.0 * x[0] - 2.0 * x[1] + 1.0);
        let v = f.interpolate_scalar(&[0.3, -0.77]).unwrap();
        assert!((v - (3.0 * 0.3 + 2.0 * 0.77 + 1.0)).abs() < 1e-12);
        assert!(f.interpolate_scalar(&[2.5, 0.0]).is_none());
    }

    #[test]
    fn nearest_frame_rounds() {
        let g = GridGeometry::new(1, 1.0, 4).unwrap();
        let st = SpaceTimeField::from_fn(g, 1.0, 4, |t, _| t).unwrap();
        assert_eq!(st.nearest_frame(0.26), 1);
        assert_eq!(st.nearest_frame(0.9), 4);
        assert_eq!(st.nearest_frame(7.0), 4);
    }
}
