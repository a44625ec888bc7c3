//! Picard iteration of the mild formulation
//! `ρ(t) = h(t) * ζ - ∫_0^t ∇h(t - s) * ((K * ρ(s)) ρ(s)) ds`.
//!
//! Iterates live on a graded time grid `t_i = T (i/n)²`. The time integral
//! freezes the dealiased integrand at the trapezoid average on each
//! subinterval and integrates the heat factor exactly, so the `s → t`
//! singularity of `∇h(t - s)` is never sampled.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{decay_weight, lr_norm, nonlinear_velocity, transport_term, NfpeKernel, PeriodicGrid};
use crate::error::{invalid, Result};
use crate::field::SampledField;
use crate::report::{fmt_f64, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelOptions {
    pub horizon: f64,
    /// Number of time intervals of the graded grid.
    #[serde(default = "default_nodes")]
    pub intervals: usize,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_r")]
    pub r: f64,
    /// Stop once `D_k ≤ tol · D_0`.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_nodes() -> usize {
    32
}
fn default_iterations() -> usize {
    12
}
fn default_r() -> f64 {
    4.0 / 3.0
}
fn default_tol() -> f64 {
    1e-10
}

impl DuhamelOptions {
    pub fn new(horizon: f64) -> Self {
        Self { horizon, intervals: default_nodes(), max_iterations: default_iterations(), r: default_r(), tol: default_tol() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionLog {
    pub iteration: usize,
    /// `‖ρ^{k+1} - ρ^k‖_{r,T}`.
    pub increment: f64,
    /// `D_k / D_{k-1}`, absent for the first step.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct DuhamelResult {
    pub times: Vec<f64>,
    /// Last iterate at the horizon.
    pub terminal: SampledField,
    pub log: Vec<ContractionLog>,
    /// Largest logged ratio above the round-off floor; 0 when the first
    /// increment already vanishes.
    pub contraction_ratio: f64,
    pub converged: bool,
    /// Increments grew three times in a row.
    pub diverged: bool,
}

impl DuhamelResult {
    pub fn log_table(&self) -> Table {
        let mut t = Table::new("contraction", &["iteration", "increment", "ratio"]);
        for l in &self.log {
            t.push(vec![l.iteration.to_string(), fmt_f64(l.increment), l.ratio.map(fmt_f64).unwrap_or_default()]);
        }
        t
    }
}

/// `sup_{t_i > 0} t_i^{d/(2r')} ‖f(t_i)‖_{L^r}` over spectral frames.
pub fn weighted_norm(grid: &PeriodicGrid, times: &[f64], frames: &[Vec<Complex64>], r: f64) -> f64 {
    let cell = grid.geometry.cell_measure();
    times
        .iter()
        .zip(frames)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, f)| decay_weight(*t, grid.dims(), r) * lr_norm(&grid.inverse(f), cell, r))
        .fold(0.0, f64::max)
}

/// `∫_a^b exp(-k²(t - s)) ds`.
fn heat_weight(k2: f64, t: f64, a: f64, b: f64) -> f64 {
    if k2 == 0.0 {
        return b - a;
    }
    (-k2 * (t - b)).exp() * -(-k2 * (b - a)).exp_m1() / k2
}

pub fn duhamel_picard(grid: &PeriodicGrid, kernel: &NfpeKernel, zeta: &SampledField, opts: &DuhamelOptions) -> Result<DuhamelResult> {
    grid.check(zeta)?;
    if !(opts.horizon > 0.0 && opts.intervals >= 1 && opts.r > 1.0 && opts.max_iterations >= 1) {
        return Err(invalid("need horizon > 0, intervals ≥ 1, r > 1 and at least one iteration"));
    }
    let velocity = nonlinear_velocity(grid, kernel)?;
    let n = opts.intervals;
    let times: Vec<f64> = (0..=n).map(|i| opts.horizon * (i as f64 / n as f64).powi(2)).collect();
    let z = grid.forward(&zeta.values);
    let free: Vec<Vec<Complex64>> = times
        .iter()
        .map(|t| z.iter().zip(&grid.k2).map(|(v, k2)| v * (-k2 * t).exp()).collect())
        .collect();

    let mut iterate = free.clone();
    let mut log: Vec<ContractionLog> = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut growth = 0;
    for k in 0..opts.max_iterations {
        let forcing: Vec<Vec<Complex64>> = iterate.iter().map(|f| transport_term(grid, &velocity.induced(grid, f), f).0).collect();
        let mut next = free.clone();
        for i in 1..=n {
            let ti = times[i];
            let out = &mut next[i];
            for j in 0..i {
                let (a, b) = (times[j], times[j + 1]);
                for m in 0..out.len() {
                    let w = heat_weight(grid.k2[m], ti, a, b);
                    out[m] += 0.5 * w * (forcing[j][m] + forcing[j + 1][m]);
                }
            }
        }
        let diff: Vec<Vec<Complex64>> = next.iter().zip(&iterate).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        let increment = weighted_norm(grid, &times, &diff, opts.r);
        let ratio = log.last().map(|l| increment / l.increment);
        log.push(ContractionLog { iteration: k, increment, ratio });
        iterate = next;
        if !increment.is_finite() {
            diverged = true;
            break;
        }
        if ratio.is_some_and(|q| q > 1.0) {
            growth += 1;
        } else {
            growth = 0;
        }
        if growth >= 3 {
            diverged = true;
            break;
        }
        if increment <= opts.tol * log[0].increment || increment == 0.0 {
            converged = true;
            break;
        }
    }
    // Ratios between increments that sit at round-off are noise.
    let floor = 1e-13 * weighted_norm(grid, &times, &free, opts.r).max(f64::MIN_POSITIVE);
    let contraction_ratio = log
        .windows(2)
        .filter(|w| w[0].increment > floor && w[1].increment > floor)
        .map(|w| w[1].increment / w[0].increment)
        .fold(0.0, f64::max);
    let terminal = SampledField::from_values(grid.geometry, 1, grid.inverse(&iterate[n]))?;
    Ok(DuhamelResult { times, terminal, log, contraction_ratio, converged, diverged })
}
