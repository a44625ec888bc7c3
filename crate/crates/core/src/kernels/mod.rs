//! Kernels and drift fields: heat kernel, Biot-Savart law, the supercritical
//! drift and their mollified or regularized variants.

mod cutoff;
mod divergence;
mod mollify;
mod supercritical;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cutoff::CutoffSpec;
pub use divergence::{divergence_check, divergence_check_with, DivergenceCheck, DivergenceOptions};
pub use mollify::{mollify_drift, mollifier_mass_within, GridTable, MollifiedRoute, MollifierSpec};
pub use supercritical::{supercritical_drift, SupercriticalSpec};

use crate::error::{invalid, LabError, Result};
use crate::field::{GridGeometry, SampledField};

/// `(4πt)^{-d/2} exp(-|x|²/4t)` with `d = x.len()`.
pub fn heat_kernel(t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("heat kernel needs t > 0, got {t}")));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((4.0 * PI * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// `K_BS(x) = (-x₂, x₁) / (2π|x|²)`.
pub fn biot_savart(x: &[f64]) -> Result<[f64; 2]> {
    if x.len() != 2 {
        return Err(invalid("Biot-Savart kernel is planar"));
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(LabError::SingularPoint(x.to_vec()));
    }
    let c = 1.0 / (2.0 * PI * r2);
    Ok([-x[1] * c, x[0] * c])
}

/// Vortex-blob kernel `K_BS(x) |x|² / (|x|² + ε²)`.
#[inline]
pub fn biot_savart_blob(x0: f64, x1: f64, eps2: f64) -> [f64; 2] {
    let c = 1.0 / (2.0 * PI * (x0 * x0 + x1 * x1 + eps2));
    [-x1 * c, x0 * c]
}

/// Sampled velocity frames, e.g. Biot-Savart of a solver trajectory.
#[derive(Clone, Debug)]
pub struct FrozenVelocity {
    pub times: Vec<f64>,
    pub frames: Vec<SampledField>,
    /// Mass used for the point-vortex far field outside the box (planar
    /// Biot-Savart only); zero disables it.
    pub far_mass: f64,
}

impl FrozenVelocity {
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let k = if self.times.len() == 1 {
            0
        } else {
            let pos = self.times.partition_point(|&s| s < t);
            if pos == 0 {
                0
            } else if pos >= self.times.len() {
                self.times.len() - 1
            } else if t - self.times[pos - 1] <= self.times[pos] - t {
                pos - 1
            } else {
                pos
            }
        };
        if self.frames[k].interpolate(x, out).is_none() {
            if self.far_mass != 0.0 && x.len() == 2 {
                let v = biot_savart_blob(x[0], x[1], 0.0);
                out[0] = self.far_mass * v[0];
                out[1] = self.far_mass * v[1];
            } else {
                out.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
}

pub type CustomDrift = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync>;

#[derive(Clone)]
pub enum DriftKind {
    Zero,
    Constant(Vec<f64>),
    BiotSavart,
    BiotSavartBlob { epsilon: f64 },
    Supercritical(SupercriticalSpec),
    Mollified { base: Box<DriftField>, n: u32, route: MollifiedRoute },
    FrozenConvolution(Arc<FrozenVelocity>),
    Custom(CustomDrift),
}

impl fmt::Debug for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftKind::Zero => write!(f, "Zero"),
            DriftKind::Constant(c) => write!(f, "Constant({c:?})"),
            DriftKind::BiotSavart => write!(f, "BiotSavart"),
            DriftKind::BiotSavartBlob { epsilon } => write!(f, "BiotSavartBlob({epsilon})"),
            DriftKind::Supercritical(s) => write!(f, "Supercritical({s:?})"),
            DriftKind::Mollified { base, n, route } => write!(f, "Mollified({:?}, n={n}, {})", base.kind, route.name()),
            DriftKind::FrozenConvolution(v) => write!(f, "FrozenConvolution({} frames)", v.frames.len()),
            DriftKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// An evaluable, time-dependent vector field with metadata.
#[derive(Clone, Debug)]
pub struct DriftField {
    pub dims: usize,
    pub kind: DriftKind,
    pub divergence_free: bool,
    pub singular_points: Vec<Vec<f64>>,
}

impl DriftField {
    pub fn zero(dims: usize) -> Self {
        Self { dims, kind: DriftKind::Zero, divergence_free: true, singular_points: vec![] }
    }

    pub fn constant(c: Vec<f64>) -> Self {
        Self { dims: c.len(), kind: DriftKind::Constant(c), divergence_free: true, singular_points: vec![] }
    }

    pub fn biot_savart() -> Self {
        Self { dims: 2, kind: DriftKind::BiotSavart, divergence_free: true, singular_points: vec![vec![0.0, 0.0]] }
    }

    pub fn blob(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(invalid("blob radius must be positive"));
        }
        Ok(Self { dims: 2, kind: DriftKind::BiotSavartBlob { epsilon }, divergence_free: true, singular_points: vec![] })
    }

    pub fn supercritical(spec: SupercriticalSpec) -> Result<Self> {
        spec.validate()?;
        let singular = if spec.epsilon == 0.0 { vec![vec![0.0; spec.d]] } else { vec![] };
        Ok(Self { dims: spec.d, kind: DriftKind::Supercritical(spec), divergence_free: true, singular_points: singular })
    }

    pub fn frozen(velocity: FrozenVelocity, divergence_free: bool) -> Result<Self> {
        let dims = velocity.frames.first().map(|f| f.geometry.dims).ok_or_else(|| invalid("no velocity frames"))?;
        if velocity.frames.iter().any(|f| f.components != dims) || velocity.times.len() != velocity.frames.len() {
            return Err(invalid("velocity frames must be d-vector fields, one per time"));
        }
        Ok(Self { dims, kind: DriftKind::FrozenConvolution(Arc::new(velocity)), divergence_free, singular_points: vec![] })
    }

    pub fn custom(dims: usize, divergence_free: bool, f: CustomDrift) -> Self {
        Self { dims, kind: DriftKind::Custom(f), divergence_free, singular_points: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, DriftKind::Zero)
    }

    /// True when the field has no point singularity.
    pub fn is_regular(&self) -> bool {
        self.singular_points.is_empty()
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            DriftKind::Zero => {
                out[..self.dims].iter_mut().for_each(|v| *v = 0.0);
                Ok(())
            }
            DriftKind::Constant(c) => {
                out[..c.len()].copy_from_slice(c);
                Ok(())
            }
            DriftKind::BiotSavart => {
                let v = biot_savart(x)?;
                out[..2].copy_from_slice(&v);
                Ok(())
            }
            DriftKind::BiotSavartBlob { epsilon } => {
                let v = biot_savart_blob(x[0], x[1], epsilon * epsilon);
                out[..2].copy_from_slice(&v);
                Ok(())
            }
            DriftKind::Supercritical(spec) => supercritical_drift(x, spec, out),
            DriftKind::Mollified { base, n, route } => route.eval(base, *n, t, x, out),
            DriftKind::FrozenConvolution(v) => {
                v.eval(t, x, out);
                Ok(())
            }
            DriftKind::Custom(f) => f(t, x, out),
        }
    }

    /// Local length over which the drift changes appreciably, used to cap
    /// the step so that `|b| h ≤ guard · ℓ(x)`. `None` for fields with no
    /// intrinsic scale.
    pub fn length_scale(&self, x: &[f64]) -> Option<f64> {
        let half_r = 0.5 * x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match &self.kind {
            DriftKind::Zero | DriftKind::Constant(_) | DriftKind::Custom(_) => None,
            DriftKind::BiotSavart => Some(half_r),
            DriftKind::BiotSavartBlob { epsilon } => Some(half_r.max(*epsilon)),
            DriftKind::Supercritical(s) => Some(half_r.max(s.epsilon)),
            DriftKind::Mollified { n, .. } => Some(half_r.max(1.0 / *n as f64)),
            DriftKind::FrozenConvolution(v) => Some(v.frames[0].geometry.spacing()),
        }
    }

    /// Samples the field on a grid at time `t`; singular cells are set to
    /// zero and counted.
    pub fn sample(&self, t: f64, geometry: GridGeometry) -> Result<(SampledField, usize)> {
        if geometry.dims != self.dims {
            return Err(LabError::GeometryMismatch(format!("drift is {}-dimensional", self.dims)));
        }
        let d = self.dims;
        let mut x = vec![0.0; d];
        let mut values = vec![0.0; geometry.len() * d];
        let mut singular = 0;
        for (i, chunk) in values.chunks_mut(d).enumerate() {
            geometry.center(i, &mut x);
            if let Err(e) = self.eval(t, &x, chunk) {
                match e {
                    LabError::SingularPoint(_) => {
                        chunk.iter_mut().for_each(|v| *v = 0.0);
                        singular += 1;
                    }
                    other => return Err(other),
                }
            }
        }
        Ok((SampledField::from_values(geometry, d, values)?, singular))
    }
}

/// Declarative drift description used in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero {
        d: usize,
    },
    Constant {
        c: Vec<f64>,
    },
    BiotSavart,
    Blob {
        epsilon: f64,
    },
    Supercritical {
        d: usize,
        p: f64,
        #[serde(rename = "N")]
        amplitude: f64,
        #[serde(default)]
        epsilon: f64,
    },
    Mollified {
        base: Box<DriftSpec>,
        n: u32,
        #[serde(default)]
        grid: Option<GridGeometry>,
    },
}

impl DriftSpec {
    pub fn build(&self) -> Result<DriftField> {
        match self {
            DriftSpec::Zero { d } => Ok(DriftField::zero(*d)),
            DriftSpec::Constant { c } => Ok(DriftField::constant(c.clone())),
            DriftSpec::BiotSavart => Ok(DriftField::biot_savart()),
            DriftSpec::Blob { epsilon } => DriftField::blob(*epsilon),
            DriftSpec::Supercritical { d, p, amplitude, epsilon } => {
                DriftField::supercritical(SupercriticalSpec::new(*d, *p, *amplitude, *epsilon)?)
            }
            DriftSpec::Mollified { base, n, grid } => mollify_drift(&base.build()?, *n, *grid),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            DriftSpec::Zero { d } | DriftSpec::Supercritical { d, .. } => *d,
            DriftSpec::Constant { c } => c.len(),
            DriftSpec::BiotSavart | DriftSpec::Blob { .. } => 2,
            DriftSpec::Mollified { base, .. } => base.dims(),
        }
    }
}
