//! Two-sided Gaussian envelopes `(1/C) h(t/C, y - x₀) ≤ p(y) ≤ C h(Ct, y - x₀)`
//! fitted to a transition density.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::SampledField;
use crate::fpe::{solve_linear_fpe, PeriodicGrid, SolverOptions};
use crate::kernels::{heat_kernel, mollify_drift, DriftField};
use crate::measure::{AtomRealization, MeasureSpec};
use crate::report::{ExperimentReport, Table};

const C_MAX: f64 = 1e6;
const BISECTIONS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AronsonFit {
    /// `None` when infeasible at `C = 10⁶`.
    pub c_upper: Option<f64>,
    pub c_lower: Option<f64>,
    /// Fraction of cells with `p > floor`.
    pub coverage: f64,
    pub t: f64,
    pub x0: Vec<f64>,
}

/// `log h(t, r²)` without the exponential underflow.
fn log_heat(t: f64, r2: f64, d: usize) -> f64 {
    -(d as f64) / 2.0 * (4.0 * std::f64::consts::PI * t).ln() - r2 / (4.0 * t)
}

fn bisect(feasible: impl Fn(f64) -> bool) -> Option<f64> {
    if feasible(1.0) {
        return Some(1.0);
    }
    if !feasible(C_MAX) {
        return None;
    }
    // Geometric bisection: the range spans six decades.
    let (mut lo, mut hi) = (1.0f64, C_MAX);
    for _ in 0..BISECTIONS {
        let mid = (lo * hi).sqrt();
        if feasible(mid) {
            hi = mid
        } else {
            lo = mid
        }
    }
    Some(hi)
}

/// Minimal constants of the Gaussian sandwich on `{p > floor}`.
pub fn aronson_fit(density: &SampledField, t: f64, x0: &[f64], floor: f64) -> Result<AronsonFit> {
    let g = density.geometry;
    let d = g.dims;
    if !(floor > 0.0) || !(t > 0.0) || x0.len() != d || !density.is_scalar() {
        return Err(invalid("aronson fit needs floor > 0, t > 0 and a scalar density matching x0"));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut x = vec![0.0; d];
    for (i, &p) in density.values.iter().enumerate() {
        if p > floor {
            g.center(i, &mut x);
            let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
            pts.push((p.ln(), r2));
        }
    }
    if pts.is_empty() {
        return Err(invalid("no cell exceeds the floor"));
    }
    let ln_c = |c: f64| c.ln();
    let upper = |c: f64| pts.iter().all(|&(lp, r2)| lp <= ln_c(c) + log_heat(c * t, r2, d));
    let lower = |c: f64| pts.iter().all(|&(lp, r2)| -ln_c(c) + log_heat(t / c, r2, d) <= lp);
    Ok(AronsonFit {
        c_upper: bisect(upper),
        c_lower: bisect(lower),
        coverage: pts.len() as f64 / g.len() as f64,
        t,
        x0: x0.to_vec(),
    })
}

fn default_levels() -> Vec<u32> {
    vec![2, 4, 8]
}
fn default_t() -> f64 {
    0.5
}
fn default_x0() -> Vec<f64> {
    vec![0.5, 0.0]
}
fn default_l() -> f64 {
    8.0
}
fn default_m() -> usize {
    256
}
fn default_dt() -> f64 {
    0.005
}
fn default_floor() -> f64 {
    1e-4
}

/// Aronson stability across mollification levels of the Biot-Savart drift
/// of a fixed vorticity `ω` (default `δ₀`), with densities from the linear
/// Fokker-Planck solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AronsonConfig {
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_x0")]
    pub x0: Vec<f64>,
    #[serde(default)]
    pub vorticity: Option<MeasureSpec>,
    #[serde(default = "default_l")]
    pub half_width: f64,
    #[serde(default = "default_m")]
    pub modes: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Floor relative to the density's maximum.
    #[serde(default = "default_floor")]
    pub relative_floor: f64,
}

impl Default for AronsonConfig {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            t: default_t(),
            x0: default_x0(),
            vorticity: None,
            half_width: default_l(),
            modes: default_m(),
            dt: default_dt(),
            relative_floor: default_floor(),
        }
    }
}

/// Velocity of a point vortex of unit mass at `center`, mollified at level `n`.
fn vortex_drift(center: &[f64], weight: f64, n: u32) -> Result<DriftField> {
    let base = mollify_drift(&DriftField::biot_savart(), n, None)?;
    let c = center.to_vec();
    Ok(DriftField::custom(2, true, std::sync::Arc::new(move |t, x, out| {
        base.eval(t, &[x[0] - c[0], x[1] - c[1]], out)?;
        out[0] *= weight;
        out[1] *= weight;
        Ok(())
    })))
}

/// `K^n * ω` for an atomic vorticity.
pub fn mollified_vortex_drift(vorticity: &MeasureSpec, n: u32) -> Result<DriftField> {
    let atoms: Vec<(Vec<f64>, f64)> = vorticity
        .leaves()
        .into_iter()
        .map(|l| match l {
            MeasureSpec::PointMass { location, weight } => Ok((location.clone(), *weight)),
            _ => Err(invalid("vortex drift supports point vortices only")),
        })
        .collect::<Result<_>>()?;
    if let [(c, w)] = atoms.as_slice() {
        if c.iter().all(|v| *v == 0.0) && *w == 1.0 {
            return mollify_drift(&DriftField::biot_savart(), n, None);
        }
    }
    let parts: Vec<DriftField> = atoms.iter().map(|(c, w)| vortex_drift(c, *w, n)).collect::<Result<_>>()?;
    Ok(DriftField::custom(2, true, std::sync::Arc::new(move |t, x, out| {
        let mut tmp = [0.0; 2];
        out[..2].iter_mut().for_each(|v| *v = 0.0);
        for p in &parts {
            p.eval(t, x, &mut tmp)?;
            out[0] += tmp[0];
            out[1] += tmp[1];
        }
        Ok(())
    })))
}

fn fit_for(cfg: &AronsonConfig, grid: &PeriodicGrid, b: &DriftField) -> Result<AronsonFit> {
    let zeta = MeasureSpec::delta(cfg.x0.clone()).realize(grid.geometry, AtomRealization::BandLimited)?;
    let traj = solve_linear_fpe(grid, b, &zeta, &SolverOptions::new(cfg.t, cfg.dt))?;
    let p = traj.last();
    let max = p.values.iter().fold(0.0f64, |a, v| a.max(*v));
    aronson_fit(p, cfg.t, &cfg.x0, cfg.relative_floor * max)
}

fn spread(v: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = v.iter().copied().collect::<Option<_>>()?;
    let max = v.iter().fold(0.0f64, |a, b| a.max(*b));
    let min = v.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    Some(max / min)
}

pub fn aronson_experiment(cfg: &AronsonConfig) -> Result<ExperimentReport> {
    if cfg.levels.is_empty() || cfg.x0.len() != 2 {
        return Err(invalid("aronson experiment needs mollification levels and a planar start"));
    }
    let grid = PeriodicGrid::new(2, cfg.half_width, cfg.modes)?;
    let vorticity = cfg.vorticity.clone().unwrap_or_else(|| MeasureSpec::delta(vec![0.0, 0.0]));
    let baseline = fit_for(cfg, &grid, &DriftField::zero(2))?;
    let fits: Vec<(u32, AronsonFit)> =
        cfg.levels.iter().map(|&n| Ok((n, fit_for(cfg, &grid, &mollified_vortex_drift(&vorticity, n)?)?))).collect::<Result<_>>()?;

    let mut rep = ExperimentReport::new("aronson");
    let mut table = Table::new("aronson_fits", &["n", "C_upper", "C_lower", "coverage"]);
    let show = |c: Option<f64>| c.map(crate::report::fmt_f64).unwrap_or_else(|| "unbounded".into());
    table.push(vec!["0".into(), show(baseline.c_upper), show(baseline.c_lower), crate::report::fmt_f64(baseline.coverage)]);
    for (n, f) in &fits {
        table.push(vec![n.to_string(), show(f.c_upper), show(f.c_lower), crate::report::fmt_f64(f.coverage)]);
        for (name, c) in [("C_upper", f.c_upper), ("C_lower", f.c_lower)] {
            match c {
                Some(c) => rep.exact(format!("{name}[n={n}]"), c),
                None => rep.note(format!("{name} unbounded at n = {n}")),
            };
        }
    }
    let exact = |c: Option<f64>| c.is_some_and(|c| c <= 1.01);
    let up = spread(&fits.iter().map(|(_, f)| f.c_upper).collect::<Vec<_>>());
    let lo = spread(&fits.iter().map(|(_, f)| f.c_lower).collect::<Vec<_>>());
    rep.exact("C_upper[b=0]", baseline.c_upper.unwrap_or(f64::INFINITY))
        .exact("C_lower[b=0]", baseline.c_lower.unwrap_or(f64::INFINITY))
        .flag("zero_drift_exact", exact(baseline.c_upper) && exact(baseline.c_lower))
        .flag("upper_stable", up.is_some_and(|s| s < 2.0))
        .flag("lower_stable", lo.is_some_and(|s| s < 2.0));
    if let Some(s) = up {
        rep.exact("C_upper_spread", s);
    }
    if let Some(s) = lo {
        rep.exact("C_lower_spread", s);
    }
    rep.table(table);
    Ok(rep)
}

/// Exact heat kernel on the grid, for oracles.
pub fn heat_density(grid: &PeriodicGrid, t: f64, x0: &[f64]) -> Result<SampledField> {
    let mut y = vec![0.0; x0.len()];
    let vals = (0..grid.len())
        .map(|i| {
            grid.geometry.center(i, &mut y);
            let z: Vec<f64> = y.iter().zip(x0).map(|(a, b)| a - b).collect();
            heat_kernel(t, &z)
        })
        .collect::<Result<Vec<f64>>>()?;
    SampledField::from_values(grid.geometry, 1, vals)
}
