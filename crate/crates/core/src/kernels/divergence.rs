//! Pointwise and weak divergence diagnostics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DriftField;
use crate::error::{invalid, LabError, Result};
use crate::field::GridGeometry;
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceOptions {
    /// Number of compactly supported test bumps for the weak form.
    pub tests: usize,
    pub seed: u64,
    /// Midpoint nodes per axis on each test bump's cube.
    pub nodes: usize,
    /// Upper bound on the central-difference step; the step used is
    /// `min(h, max_step)`.
    pub max_step: f64,
    pub time: f64,
}

impl Default for DivergenceOptions {
    fn default() -> Self {
        Self { tests: 20, seed: 0x5eed, nodes: 0, max_step: 1e-4, time: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCheck {
    pub max_divergence: f64,
    pub admitted_points: usize,
    /// `|∫ b·∇φ|` per test bump.
    pub weak_residuals: Vec<f64>,
    /// `|∫ b·∇φ| / ‖∇φ‖₁` per test bump.
    pub relative_weak_residuals: Vec<f64>,
}

impl DivergenceCheck {
    pub fn max_weak_residual(&self) -> f64 {
        self.weak_residuals.iter().fold(0.0, |a: f64, v| a.max(*v))
    }

    pub fn max_relative_weak_residual(&self) -> f64 {
        self.relative_weak_residuals.iter().fold(0.0, |a: f64, v| a.max(*v))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// [`divergence_check_with`] using default options.
pub fn divergence_check(b: &DriftField, region: GridGeometry, exclusion_radius: f64) -> Result<DivergenceCheck> {
    divergence_check_with(b, region, exclusion_radius, &DivergenceOptions::default())
}

/// Max central-difference divergence over grid points farther than
/// `exclusion_radius` from every singular point (the origin is always
/// treated as singular when a positive radius is given), and the weak
/// residual `∫ b·∇φ` for random smooth bumps supported in the admitted
/// region.
pub fn divergence_check_with(
    b: &DriftField,
    region: GridGeometry,
    exclusion_radius: f64,
    opts: &DivergenceOptions,
) -> Result<DivergenceCheck> {
    if region.dims != b.dims {
        return Err(LabError::GeometryMismatch("region and drift dimensions differ".into()));
    }
    if !(exclusion_radius >= 0.0) {
        return Err(invalid("exclusion radius must be non-negative"));
    }
    let d = b.dims;
    let mut excluded: Vec<Vec<f64>> = b.singular_points.clone();
    if exclusion_radius > 0.0 && excluded.is_empty() {
        excluded.push(vec![0.0; d]);
    }
    let admitted = |x: &[f64], margin: f64| excluded.iter().all(|s| dist(x, s) > exclusion_radius + margin);

    let eta = region.spacing().min(opts.max_step);
    let mut x = vec![0.0; d];
    let mut xp = vec![0.0; d];
    let (mut bp, mut bm) = (vec![0.0; d], vec![0.0; d]);
    let mut max_div = 0.0f64;
    let mut count = 0usize;
    'points: for i in 0..region.len() {
        region.center(i, &mut x);
        if !admitted(&x, eta) {
            continue;
        }
        let mut div = 0.0;
        for a in 0..d {
            xp.copy_from_slice(&x);
            xp[a] = x[a] + eta;
            if b.eval(opts.time, &xp, &mut bp).is_err() {
                continue 'points;
            }
            xp[a] = x[a] - eta;
            if b.eval(opts.time, &xp, &mut bm).is_err() {
                continue 'points;
            }
            div += (bp[a] - bm[a]) / (2.0 * eta);
        }
        count += 1;
        max_div = max_div.max(div.abs());
    }

    let nodes = if opts.nodes > 0 { opts.nodes } else if d <= 2 { 96 } else { 40 };
    let mut rng = stream(opts.seed, 0);
    let l = region.half_width;
    let mut weak = Vec::with_capacity(opts.tests);
    let mut rel = Vec::with_capacity(opts.tests);
    for _ in 0..opts.tests {
        let mut placed = None;
        for attempt in 0..10_000 {
            let shrink = 1.0 / (1.0 + attempt as f64 / 1000.0);
            let rho = rng.random_range(0.15..0.35) * l * shrink;
            let c: Vec<f64> = (0..d).map(|_| rng.random_range(-(l - rho)..(l - rho))).collect();
            if admitted(&c, rho) {
                placed = Some((c, rho));
                break;
            }
        }
        let (c, rho) = placed.ok_or_else(|| invalid("no room for test bumps in the admitted region"))?;
        let h = 2.0 * rho / nodes as f64;
        let cell = h.powi(d as i32);
        let total = nodes.pow(d as u32);
        let (mut acc, mut norm) = (0.0, 0.0);
        let mut bv = vec![0.0; d];
        for k in 0..total {
            let mut rem = k;
            for a in (0..d).rev() {
                x[a] = c[a] - rho + ((rem % nodes) as f64 + 0.5) * h;
                rem /= nodes;
            }
            let s2 = dist(&x, &c).powi(2) / (rho * rho);
            if s2 >= 1.0 {
                continue;
            }
            // ∇φ = φ · (-2 / (ρ² (1 - s²)²)) (x - c)
            let phi = (-1.0 / (1.0 - s2)).exp();
            let f = phi * (-2.0 / (rho * rho * (1.0 - s2).powi(2)));
            b.eval(opts.time, &x, &mut bv)?;
            let mut dot = 0.0;
            let mut gn = 0.0;
            for a in 0..d {
                let ga = f * (x[a] - c[a]);
                dot += bv[a] * ga;
                gn += ga * ga;
            }
            acc += dot * cell;
            norm += gn.sqrt() * cell;
        }
        weak.push(acc.abs());
        rel.push(acc.abs() / norm);
    }
    Ok(DivergenceCheck { max_divergence: max_div, admitted_points: count, weak_residuals: weak, relative_weak_residuals: rel })
}

#[cfg(test)]
mod tests {
    use super::super::{mollify_drift, SupercriticalSpec};
    use super::*;

    #[test]
    fn constant_drift_is_exactly_divergence_free() {
        let b = DriftField::constant(vec![0.7, -1.3]);
        let g = GridGeometry::new(2, 2.0, 32).unwrap();
        let r = divergence_check(&b, g, 0.0).unwrap();
        assert_eq!(r.max_divergence, 0.0);
        assert_eq!(r.admitted_points, g.len());
        assert!(r.max_relative_weak_residual() < 1e-12);
    }

    #[test]
    fn biot_savart_on_annulus() {
        let g = GridGeometry::new(2, 5.0, 512).unwrap();
        let r = divergence_check(&DriftField::biot_savart(), g, 0.5).unwrap();
        assert!(r.max_divergence < 1e-4, "{}", r.max_divergence);
        assert!(r.max_relative_weak_residual() < 1e-6);
    }

    #[test]
    fn supercritical_on_shell() {
        let spec = SupercriticalSpec::new(3, 2.0, 1.0, 0.0).unwrap();
        let b = DriftField::supercritical(spec).unwrap();
        let g = GridGeometry::new(3, 4.0, 48).unwrap();
        let r = divergence_check(&b, g, 0.5).unwrap();
        assert!(r.max_relative_weak_residual() < 1e-3, "{:?}", r.relative_weak_residuals);
        assert!(r.max_divergence < 1e-3, "{}", r.max_divergence);
    }

    #[test]
    fn whole_vector_odd_extension_fails_the_weak_check() {
        // Negating the whole vector in the lower half-space breaks the
        // divergence-free property across the plane.
        let spec = SupercriticalSpec::new(3, 2.0, 1.0, 0.0).unwrap();
        let b = DriftField::custom(
            3,
            false,
            std::sync::Arc::new(move |_t, x: &[f64], out: &mut [f64]| {
                let xm = [x[0], x[1], x[2].abs()];
                super::super::supercritical_drift(&xm, &spec, out)?;
                if x[2] < 0.0 {
                    out.iter_mut().for_each(|v| *v = -*v);
                }
                Ok(())
            }),
        );
        let g = GridGeometry::new(3, 4.0, 24).unwrap();
        let r = divergence_check(&b, g, 0.5).unwrap();
        assert!(r.max_relative_weak_residual() > 1e-2);
    }

    #[test]
    fn mollified_supercritical_stays_near_divergence_free() {
        let spec = SupercriticalSpec::new(3, 2.0, 1.0, 0.0).unwrap();
        let base = DriftField::supercritical(spec).unwrap();
        let grid = GridGeometry::new(3, 2.0, 64).unwrap();
        let m = mollify_drift(&base, 4, Some(grid)).unwrap();
        let region = GridGeometry::new(3, 1.2, 16).unwrap();
        let r = divergence_check_with(&m, region, 0.0, &DivergenceOptions { nodes: 24, tests: 6, ..Default::default() }).unwrap();
        assert!(r.max_relative_weak_residual() < 2e-2, "{:?}", r.relative_weak_residuals);
    }
}
