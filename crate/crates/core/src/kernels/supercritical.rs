//! The divergence-free supercritical drift built from the stream quantity
//! `H(x) = r^{d-1} φ(x_d) g(x_d / r)`, `r = |x̂|`, `φ(z) = z^{-α}`.
//!
//! For `x_d > 0`:
//!
//! ```text
//! b_d = N r^{2-d} ∂_r H  = N φ(z) [(d-1) g(u) - u g'(u)],          u = z / r
//! b_i = -N x_i r^{1-d} ∂_z H = -N x_i [φ'(z) g(u) + φ(z) g'(u) / r]
//! ```
//!
//! The lower half-space uses the mirror image `b(Rx) = R b(x)` with `R` the
//! reflection `x_d ↦ -x_d`, so `b_d` is odd and `b_i` even in `x_d`. This is
//! the extension that keeps `div b = 0` across the plane.

use serde::{Deserialize, Serialize};

use super::cutoff::CutoffSpec;
use crate::error::{invalid, LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupercriticalSpec {
    pub d: usize,
    pub p: f64,
    #[serde(rename = "N")]
    pub amplitude: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl SupercriticalSpec {
    pub fn new(d: usize, p: f64, amplitude: f64, epsilon: f64) -> Result<Self> {
        let s = Self { d, p, amplitude, epsilon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d as f64;
        if self.d < 3 {
            return Err(invalid(format!("supercritical drift needs d ≥ 3, got {}", self.d)));
        }
        if !(self.p > d / 2.0 && self.p < d) {
            return Err(invalid(format!("need p ∈ (d/2, d), got p = {}", self.p)));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude N must be positive"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon must be non-negative"));
        }
        Ok(())
    }

    /// `α = d / p ∈ (1, 2)`.
    pub fn alpha(&self) -> f64 {
        self.d as f64 / self.p
    }

    /// Largest admissible cone aperture parameter `(d - 1) / α`.
    pub fn kappa_max(&self) -> f64 {
        (self.d as f64 - 1.0) / self.alpha()
    }

    /// `(φ(z), φ'(z))` for `z > 0`, regularized as `z (z² + ε²)^{-(α+1)/2}`.
    #[inline]
    fn phi(&self, z: f64) -> (f64, f64) {
        let a = self.alpha();
        if self.epsilon == 0.0 {
            let v = z.powf(-a);
            return (v, -a * v / z);
        }
        let s = z * z + self.epsilon * self.epsilon;
        let base = s.powf(-(a + 1.0) / 2.0);
        (z * base, base - (a + 1.0) * z * z * base / s)
    }
}

/// Evaluates the supercritical drift at `x`, writing `d` components.
pub fn supercritical_drift(x: &[f64], spec: &SupercriticalSpec, out: &mut [f64]) -> Result<()> {
    let d = spec.d;
    if x.len() != d || out.len() < d {
        return Err(invalid(format!("expected a point in ℝ^{d}")));
    }
    let z_signed = x[d - 1];
    let r2: f64 = x[..d - 1].iter().map(|v| v * v).sum();
    out[..d].iter_mut().for_each(|v| *v = 0.0);
    if z_signed == 0.0 {
        if r2 == 0.0 && spec.epsilon == 0.0 {
            return Err(LabError::SingularPoint(x.to_vec()));
        }
        return Ok(());
    }
    let z = z_signed.abs();
    let r = r2.sqrt();
    let n = spec.amplitude;
    let g = CutoffSpec;
    let (phi, dphi) = spec.phi(z);
    let (gv, dgv, u) = if r == 0.0 { (1.0, 0.0, f64::INFINITY) } else { (g.g(z / r), g.dg(z / r), z / r) };
    if gv == 0.0 && dgv == 0.0 {
        return Ok(());
    }
    let ug = if dgv == 0.0 { 0.0 } else { u * dgv };
    let bd = n * phi * ((d as f64 - 1.0) * gv - ug);
    out[d - 1] = bd * z_signed.signum();
    if r > 0.0 {
        let radial = -n * (dphi * gv + phi * dgv / r);
        for i in 0..d - 1 {
            out[i] = radial * x[i];
        }
    }
    Ok(())
}
