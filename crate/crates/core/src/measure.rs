//! Signed initial measures `ζ = ζ_c + ζ_a`: point masses, Gaussians,
//! mixtures and grid densities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::field::{GridGeometry, SampledField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    PointMass { location: Vec<f64>, weight: f64 },
    /// `mass · N(center, scale² I)`.
    Gaussian { center: Vec<f64>, scale: f64, mass: f64 },
    Mixture { parts: Vec<MeasureSpec> },
    /// Density sampled at cell centers.
    GridDensity { field: SampledField },
}

/// How atoms are put on a grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomRealization {
    /// Gaussian with standard deviation one cell.
    #[default]
    OneCell,
    /// The trigonometric interpolant of `δ_x` on the grid's modes (below
    /// Nyquist). Heat flow of it reproduces `h(t, · - x)` at the sample points
    /// up to `exp(-(π/h)² t)`.
    BandLimited,
}

impl MeasureSpec {
    pub fn delta(location: Vec<f64>) -> Self {
        MeasureSpec::PointMass { location, weight: 1.0 }
    }

    pub fn gaussian(center: Vec<f64>, scale: f64, mass: f64) -> Self {
        MeasureSpec::Gaussian { center, scale, mass }
    }

    pub fn dims(&self) -> Result<usize> {
        let d = match self {
            MeasureSpec::PointMass { location, .. } => location.len(),
            MeasureSpec::Gaussian { center, .. } => center.len(),
            MeasureSpec::GridDensity { field } => field.geometry.dims,
            MeasureSpec::Mixture { parts } => {
                let dims: Vec<usize> = parts.iter().map(|p| p.dims()).collect::<Result<_>>()?;
                match dims.first() {
                    Some(&d) if dims.iter().all(|&e| e == d) => d,
                    Some(_) => return Err(invalid("mixture parts have different dimensions")),
                    None => return Err(invalid("empty mixture")),
                }
            }
        };
        if d == 0 {
            return Err(invalid("measure needs d ≥ 1"));
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims()?;
        for leaf in self.leaves() {
            let ok = match leaf {
                MeasureSpec::PointMass { location, weight } => location.iter().all(|v| v.is_finite()) && weight.is_finite(),
                MeasureSpec::Gaussian { center, scale, mass } => {
                    center.iter().all(|v| v.is_finite()) && *scale > 0.0 && scale.is_finite() && mass.is_finite()
                }
                MeasureSpec::GridDensity { field } => field.is_scalar() && field.values.iter().all(|v| v.is_finite()),
                MeasureSpec::Mixture { .. } => true,
            };
            if !ok {
                return Err(invalid(format!("bad measure component {leaf:?}")));
            }
        }
        if self.total_variation() == 0.0 {
            return Err(invalid("measure has zero total variation"));
        }
        Ok(())
    }

    /// Non-mixture components in order.
    pub fn leaves(&self) -> Vec<&MeasureSpec> {
        match self {
            MeasureSpec::Mixture { parts } => parts.iter().flat_map(|p| p.leaves()).collect(),
            other => vec![other],
        }
    }

    /// `(positive mass, negative mass)` of the leaves, both ≥ 0.
    pub fn mass_split(&self) -> (f64, f64) {
        let (mut pos, mut neg) = (0.0, 0.0);
        for leaf in self.leaves() {
            match leaf {
                MeasureSpec::PointMass { weight: m, .. } | MeasureSpec::Gaussian { mass: m, .. } => {
                    if *m >= 0.0 {
                        pos += m
                    } else {
                        neg -= m
                    }
                }
                MeasureSpec::GridDensity { field } => {
                    let c = field.geometry.cell_measure();
                    for v in &field.values {
                        if *v >= 0.0 {
                            pos += v * c
                        } else {
                            neg -= v * c
                        }
                    }
                }
                MeasureSpec::Mixture { .. } => unreachable!(),
            }
        }
        (pos, neg)
    }

    pub fn total_mass(&self) -> f64 {
        let (p, n) = self.mass_split();
        p - n
    }

    pub fn total_variation(&self) -> f64 {
        let (p, n) = self.mass_split();
        p + n
    }

    /// `|ζ_a|`: sum of the absolute atomic weights.
    pub fn atomic_mass(&self) -> f64 {
        self.leaves()
            .iter()
            .map(|l| match l {
                MeasureSpec::PointMass { weight, .. } => weight.abs(),
                _ => 0.0,
            })
            .sum()
    }

    /// Density of `ζ` sampled at the grid's cell centers.
    pub fn realize(&self, grid: GridGeometry, atoms: AtomRealization) -> Result<SampledField> {
        self.validate()?;
        if self.dims()? != grid.dims {
            return Err(LabError::GeometryMismatch("measure and grid dimensions differ".into()));
        }
        let mut out = SampledField::zeros(grid, 1);
        let h = grid.spacing();
        for leaf in self.leaves() {
            match leaf {
                MeasureSpec::Gaussian { center, scale, mass } => add_gaussian(&mut out, center, *scale, *mass),
                MeasureSpec::PointMass { location, weight } => match atoms {
                    AtomRealization::OneCell => add_gaussian(&mut out, location, h, *weight),
                    AtomRealization::BandLimited => add_band_limited(&mut out, location, *weight),
                },
                MeasureSpec::GridDensity { field } => {
                    if !field.geometry.same_as(&grid) {
                        return Err(LabError::GeometryMismatch("grid density lives on a different grid".into()));
                    }
                    out.values.iter_mut().zip(&field.values).for_each(|(o, v)| *o += v);
                }
                MeasureSpec::Mixture { .. } => unreachable!(),
            }
        }
        Ok(out)
    }
}

fn add_gaussian(out: &mut SampledField, center: &[f64], scale: f64, mass: f64) {
    let g = out.geometry;
    let d = g.dims;
    let norm = mass * (2.0 * PI * scale * scale).powf(-(d as f64) / 2.0);
    let axis = g.axis_coords();
    let per_axis: Vec<Vec<f64>> =
        (0..d).map(|a| axis.iter().map(|x| (-(x - center[a]).powi(2) / (2.0 * scale * scale)).exp()).collect()).collect();
    add_separable(out, &per_axis, norm);
}

/// `D(u) = (1/2L) [1 + 2 Σ_{n=1}^{M/2-1} cos(π n u / L)]` per axis.
fn add_band_limited(out: &mut SampledField, location: &[f64], weight: f64) {
    let g = out.geometry;
    let l = g.half_width;
    let axis = g.axis_coords();
    let per_axis: Vec<Vec<f64>> = (0..g.dims)
        .map(|a| {
            axis.iter()
                .map(|x| {
                    let u = x - location[a];
                    let s: f64 = (1..g.resolution / 2).map(|n| (PI * n as f64 * u / l).cos()).sum();
                    (1.0 + 2.0 * s) / (2.0 * l)
                })
                .collect()
        })
        .collect();
    add_separable(out, &per_axis, weight);
}

fn add_separable(out: &mut SampledField, per_axis: &[Vec<f64>], scale: f64) {
    let g = out.geometry;
    let d = g.dims;
    let mut idx = vec![0usize; d];
    for (i, v) in out.values.iter_mut().enumerate() {
        g.multi_index(i, &mut idx);
        let mut p = scale;
        for a in 0..d {
            p *= per_axis[a][idx[a]];
        }
        *v += p;
    }
}
