//! Pseudospectral solvers on a periodic box for the linear Fokker-Planck
//! equation `∂_t ρ = Δρ - div(bρ)`, the nonlinear one with `b = K * ρ`
//! (2D vorticity Navier-Stokes for the Biot-Savart kernel), and the
//! Duhamel-Picard iteration.
//!
//! Time stepping is Strang splitting: half heat step (exact multiplier),
//! Heun step for the transport term with 2/3 dealiasing of the product
//! `bρ`, half heat step.

mod diagnostics;
mod duhamel;

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use diagnostics::{decay_diagnostic, flow_property_check, DecayRow, FlowCheck};
pub use duhamel::{duhamel_picard, weighted_norm, ContractionLog, DuhamelOptions, DuhamelResult};

use crate::error::{invalid, LabError, Result};
use crate::field::{GridGeometry, SampledField};
use crate::kernels::{DriftField, DriftKind};
use crate::report::{fmt_f64, Table};
use crate::spectral::{wavenumbers, FftNd};

/// Periodic box `[-L, L)^d` with `M` modes per axis.
#[derive(Clone)]
pub struct PeriodicGrid {
    pub geometry: GridGeometry,
    fft: Arc<FftNd>,
    /// `|k|²` per flat index.
    k2: Vec<f64>,
    /// Derivative wavenumbers per axis and flat index (Nyquist set to 0).
    kd: Vec<Vec<f64>>,
    /// 2/3-rule mask per flat index.
    mask: Vec<bool>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PeriodicGrid({:?})", self.geometry)
    }
}

impl PeriodicGrid {
    pub fn new(dims: usize, half_width: f64, modes: usize) -> Result<Self> {
        if !modes.is_power_of_two() || modes < 4 {
            return Err(invalid(format!("modes per axis must be a power of two ≥ 4, got {modes}")));
        }
        let geometry = GridGeometry::new(dims, half_width, modes)?;
        let k = wavenumbers(modes, half_width);
        let kmax = k.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let n = geometry.len();
        let mut k2 = vec![0.0; n];
        let mut kd = vec![vec![0.0; n]; dims];
        let mut mask = vec![true; n];
        let mut idx = vec![0usize; dims];
        for flat in 0..n {
            geometry.multi_index(flat, &mut idx);
            for a in 0..dims {
                let ka = k[idx[a]];
                k2[flat] += ka * ka;
                kd[a][flat] = if idx[a] == modes / 2 { 0.0 } else { ka };
                if ka.abs() > 2.0 / 3.0 * kmax {
                    mask[flat] = false;
                }
            }
        }
        Ok(Self { geometry, fft: Arc::new(FftNd::new(dims, modes)), k2, kd, mask })
    }

    pub fn from_geometry(g: GridGeometry) -> Result<Self> {
        Self::new(g.dims, g.half_width, g.resolution)
    }

    pub fn dims(&self) -> usize {
        self.geometry.dims
    }

    pub fn len(&self) -> usize {
        self.geometry.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut data);
        data
    }

    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut data = spec.to_vec();
        self.fft.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    fn heat_multiply(&self, spec: &mut [Complex64], dt: f64) {
        if dt == 0.0 {
            return;
        }
        spec.iter_mut().zip(&self.k2).for_each(|(v, k2)| *v *= (-k2 * dt).exp());
    }

    /// `-div` of a vector field given in physical space, dealiased.
    fn neg_divergence(&self, flux: &[Vec<f64>]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.len()];
        for (a, comp) in flux.iter().enumerate() {
            let f = self.forward(comp);
            for i in 0..out.len() {
                if self.mask[i] {
                    out[i] -= Complex64::new(0.0, self.kd[a][i]) * f[i];
                }
            }
        }
        out
    }

    /// Spectral Biot-Savart velocity `û = i(k₂, -k₁) ρ̂ / |k|²`, `û(0) = 0`.
    fn biot_savart_spectral(&self, rho_hat: &[Complex64]) -> [Vec<f64>; 2] {
        let n = self.len();
        let mut u0 = vec![Complex64::default(); n];
        let mut u1 = vec![Complex64::default(); n];
        for i in 0..n {
            if self.k2[i] == 0.0 {
                continue;
            }
            let s = rho_hat[i] / self.k2[i];
            u0[i] = Complex64::new(0.0, self.kd[1][i]) * s;
            u1[i] = Complex64::new(0.0, -self.kd[0][i]) * s;
        }
        [self.inverse(&u0), self.inverse(&u1)]
    }

    fn check(&self, f: &SampledField) -> Result<()> {
        if !f.geometry.same_as(&self.geometry) || !f.is_scalar() {
            return Err(LabError::GeometryMismatch("density does not live on the solver grid".into()));
        }
        Ok(())
    }
}

/// Heat flow by the exact multiplier `exp(-|k|² dt)`.
pub fn heat_propagate(grid: &PeriodicGrid, rho: &SampledField, dt: f64) -> Result<SampledField> {
    if !(dt >= 0.0) {
        return Err(invalid("dt must be non-negative"));
    }
    grid.check(rho)?;
    if dt == 0.0 {
        return Ok(rho.clone());
    }
    let mut s = grid.forward(&rho.values);
    grid.heat_multiply(&mut s, dt);
    SampledField::from_values(grid.geometry, 1, grid.inverse(&s))
}

/// Planar Biot-Savart velocity `K_BS * ρ` of a periodic density (mean
/// removed), as a 2-component field.
pub fn biot_savart_velocity(grid: &PeriodicGrid, rho: &SampledField) -> Result<SampledField> {
    if grid.dims() != 2 {
        return Err(invalid("Biot-Savart velocity needs d = 2"));
    }
    grid.check(rho)?;
    let [u0, u1] = grid.biot_savart_spectral(&grid.forward(&rho.values));
    let mut values = Vec::with_capacity(2 * u0.len());
    for (a, b) in u0.into_iter().zip(u1) {
        values.push(a);
        values.push(b);
    }
    SampledField::from_values(grid.geometry, 2, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// `(t - s)^{d/(2r')} ‖ρ(t)‖_{L^r}`.
    pub weighted_r_norm: f64,
}

fn lr_norm(values: &[f64], cell: f64, r: f64) -> f64 {
    (values.iter().map(|v| v.abs().powf(r)).sum::<f64>() * cell).powf(1.0 / r)
}

/// `t^{d/(2r')}` with `1/r' = 1 - 1/r`.
pub fn decay_weight(t: f64, dims: usize, r: f64) -> f64 {
    t.powf(dims as f64 / 2.0 * (1.0 - 1.0 / r))
}

impl NormRow {
    fn measure(t: f64, elapsed: f64, values: &[f64], g: GridGeometry, r: f64) -> Self {
        let cell = g.cell_measure();
        Self {
            t,
            mass: values.iter().sum::<f64>() * cell,
            l1: values.iter().map(|v| v.abs()).sum::<f64>() * cell,
            l2: lr_norm(values, cell, 2.0),
            linf: values.iter().fold(0.0, |a, v| a.max(v.abs())),
            weighted_r_norm: if elapsed > 0.0 { decay_weight(elapsed, g.dims, r) * lr_norm(values, cell, r) } else { 0.0 },
        }
    }
}

/// Snapshots of `ρ(t)` with per-step norms.
#[derive(Clone, Debug)]
pub struct DensityTrajectory {
    pub geometry: GridGeometry,
    pub times: Vec<f64>,
    pub frames: Vec<SampledField>,
    /// One row per step, starting at the initial time.
    pub norms: Vec<NormRow>,
    pub r: f64,
}

impl DensityTrajectory {
    pub fn last(&self) -> &SampledField {
        self.frames.last().expect("trajectory has frames")
    }

    /// Frame recorded at `t` (within `1e-9`).
    pub fn frame_at(&self, t: f64) -> Option<&SampledField> {
        self.times.iter().position(|s| (s - t).abs() <= 1e-9).map(|k| &self.frames[k])
    }

    /// Largest `|mass(t) - mass(s)|` over the steps.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.norms[0].mass;
        self.norms.iter().fold(0.0, |a, n| a.max((n.mass - m0).abs()))
    }

    pub fn norms_table(&self) -> Table {
        let mut t = Table::new("norms", &["t", "mass", "L1", "L2", "Linf", "weighted_r_norm"]);
        for n in &self.norms {
            t.push(vec![fmt_f64(n.t), fmt_f64(n.mass), fmt_f64(n.l1), fmt_f64(n.l2), fmt_f64(n.linf), fmt_f64(n.weighted_r_norm)]);
        }
        t
    }
}

fn default_r() -> f64 {
    4.0 / 3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default)]
    pub start_time: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Store every `record_every`-th step; 0 keeps only the first and last.
    #[serde(default)]
    pub record_every: usize,
    /// Exponent of the weighted norm in the norm ladder.
    #[serde(default = "default_r")]
    pub r: f64,
}

impl SolverOptions {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self { start_time: 0.0, horizon, dt, record_every: 0, r: default_r() }
    }

    fn steps(&self) -> Result<usize> {
        let span = self.horizon - self.start_time;
        if !(self.dt > 0.0 && span >= 0.0 && self.r > 1.0) {
            return Err(invalid("need dt > 0, horizon ≥ start time and r > 1"));
        }
        let k = (span / self.dt).round();
        if (k * self.dt - span).abs() > 1e-9 * self.dt.max(span) {
            return Err(invalid(format!("dt = {} does not divide the span {span}", self.dt)));
        }
        Ok(k as usize)
    }
}

/// Interaction kernel of the nonlinear equation.
#[derive(Clone, Debug)]
pub enum NfpeKernel {
    Zero,
    /// Spectral Biot-Savart (d = 2).
    BiotSavart,
    /// Periodic grid convolution with a regular kernel field, `K(0) := 0`.
    Field(DriftField),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NfpeKernelSpec {
    Zero,
    BiotSavart,
}

impl NfpeKernelSpec {
    pub fn build(self) -> NfpeKernel {
        match self {
            NfpeKernelSpec::Zero => NfpeKernel::Zero,
            NfpeKernelSpec::BiotSavart => NfpeKernel::BiotSavart,
        }
    }
}

/// How the velocity of a stage is produced.
enum Velocity<'a> {
    None,
    Fixed { b: &'a DriftField, cached: Option<Vec<Vec<f64>>> },
    BiotSavart,
    Convolution(Vec<Vec<Complex64>>),
}

impl Velocity<'_> {
    fn is_none(&self) -> bool {
        matches!(self, Velocity::None)
    }
}

fn split_components(f: &SampledField) -> Vec<Vec<f64>> {
    let d = f.components;
    (0..d).map(|a| f.values.iter().skip(a).step_by(d).copied().collect()).collect()
}

fn sample_drift(b: &DriftField, t: f64, g: GridGeometry) -> Result<Vec<Vec<f64>>> {
    let (field, singular) = b.sample(t, g)?;
    if singular > 0 {
        return Err(invalid(format!("drift is singular at {singular} grid points; regularize it")));
    }
    Ok(split_components(&field))
}

/// `K` sampled on the lattice `n h` (periodically wrapped), transformed.
fn kernel_spectrum(grid: &PeriodicGrid, k: &DriftField) -> Result<Vec<Vec<Complex64>>> {
    let g = grid.geometry;
    let d = g.dims;
    let m = g.resolution;
    let h = g.spacing();
    let mut comps = vec![vec![0.0; g.len()]; d];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut v = vec![0.0; d];
    for flat in 0..g.len() {
        g.multi_index(flat, &mut idx);
        for a in 0..d {
            let s = if idx[a] < m / 2 { idx[a] as f64 } else { idx[a] as f64 - m as f64 };
            x[a] = s * h;
        }
        if x.iter().all(|c| *c == 0.0) {
            continue;
        }
        k.eval(0.0, &x, &mut v)?;
        for a in 0..d {
            comps[a][flat] = v[a] * g.cell_measure();
        }
    }
    Ok(comps.iter().map(|c| grid.forward(c)).collect())
}

impl Velocity<'_> {
    /// Velocity generated by `ρ̂` for the nonlinear variants.
    fn induced(&self, grid: &PeriodicGrid, rho_hat: &[Complex64]) -> Vec<Vec<f64>> {
        match self {
            Velocity::BiotSavart => grid.biot_savart_spectral(rho_hat).to_vec(),
            Velocity::Convolution(kh) => kh
                .iter()
                .map(|kc| {
                    let prod: Vec<Complex64> = kc.iter().zip(rho_hat).map(|(a, b)| a * b).collect();
                    grid.inverse(&prod)
                })
                .collect(),
            _ => vec![],
        }
    }
}

fn nonlinear_velocity<'a>(grid: &PeriodicGrid, kernel: &NfpeKernel) -> Result<Velocity<'a>> {
    Ok(match kernel {
        NfpeKernel::Zero => Velocity::None,
        NfpeKernel::BiotSavart => {
            if grid.dims() != 2 {
                return Err(invalid("Biot-Savart kernel needs d = 2"));
            }
            Velocity::BiotSavart
        }
        NfpeKernel::Field(k) => {
            if k.dims != grid.dims() {
                return Err(LabError::GeometryMismatch("kernel and grid dimensions differ".into()));
            }
            Velocity::Convolution(kernel_spectrum(grid, k)?)
        }
    })
}

/// `-div(uρ)` in spectral space, dealiased, and `max|u|`.
fn transport_term(grid: &PeriodicGrid, u: &[Vec<f64>], rho_hat: &[Complex64]) -> (Vec<Complex64>, f64) {
    let rho = grid.inverse(rho_hat);
    let mut speed = 0.0f64;
    for i in 0..rho.len() {
        speed = speed.max(u.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt());
    }
    let flux: Vec<Vec<f64>> = u.iter().map(|c| c.iter().zip(&rho).map(|(a, b)| a * b).collect()).collect();
    (grid.neg_divergence(&flux), speed)
}

struct Stepper<'a> {
    grid: &'a PeriodicGrid,
    velocity: Velocity<'a>,
}

impl Stepper<'_> {
    fn velocity(&mut self, t: f64, rho_hat: &[Complex64]) -> Result<Vec<Vec<f64>>> {
        match &self.velocity {
            Velocity::Fixed { b, cached } => match cached {
                Some(c) => Ok(c.clone()),
                None => sample_drift(b, t, self.grid.geometry),
            },
            other => Ok(other.induced(self.grid, rho_hat)),
        }
    }

    fn transport(&mut self, t: f64, rho_hat: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
        let u = self.velocity(t, rho_hat)?;
        Ok(transport_term(self.grid, &u, rho_hat))
    }

    fn step(&mut self, t: f64, dt: f64, rho_hat: &mut Vec<Complex64>) -> Result<()> {
        self.grid.heat_multiply(rho_hat, 0.5 * dt);
        if !self.velocity.is_none() {
            let h = self.grid.geometry.spacing();
            let (r0, speed) = self.transport(t, rho_hat)?;
            if speed * dt > h {
                return Err(LabError::Cfl { dt, limit: h / speed });
            }
            let stage: Vec<Complex64> = rho_hat.iter().zip(&r0).map(|(a, b)| a + b * dt).collect();
            let (r1, _) = self.transport(t + dt, &stage)?;
            for i in 0..rho_hat.len() {
                rho_hat[i] += 0.5 * dt * (r0[i] + r1[i]);
            }
        }
        self.grid.heat_multiply(rho_hat, 0.5 * dt);
        Ok(())
    }
}

fn run(grid: &PeriodicGrid, velocity: Velocity<'_>, zeta: &SampledField, opts: &SolverOptions) -> Result<DensityTrajectory> {
    grid.check(zeta)?;
    let steps = opts.steps()?;
    let g = grid.geometry;
    let s = opts.start_time;
    let mut stepper = Stepper { grid, velocity };
    let mut rho_hat = grid.forward(&zeta.values);
    let mut traj = DensityTrajectory {
        geometry: g,
        times: vec![s],
        frames: vec![zeta.clone()],
        norms: vec![NormRow::measure(s, 0.0, &zeta.values, g, opts.r)],
        r: opts.r,
    };
    for k in 0..steps {
        let t = s + k as f64 * opts.dt;
        stepper.step(t, opts.dt, &mut rho_hat)?;
        let t1 = s + (k + 1) as f64 * opts.dt;
        let values = grid.inverse(&rho_hat);
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite(i));
        }
        traj.norms.push(NormRow::measure(t1, t1 - s, &values, g, opts.r));
        let record = k + 1 == steps || (opts.record_every > 0 && (k + 1) % opts.record_every == 0);
        if record {
            traj.times.push(t1);
            traj.frames.push(SampledField::from_values(g, 1, values)?);
        }
    }
    Ok(traj)
}

fn time_independent(b: &DriftField) -> bool {
    !matches!(b.kind, DriftKind::FrozenConvolution(_) | DriftKind::Custom(_))
}

/// Solves `∂_t ρ = Δρ - div(bρ)` from `ζ` (a density on the solver grid).
///
/// Rejects steps with `dt · max|b| > h`.
pub fn solve_linear_fpe(grid: &PeriodicGrid, b: &DriftField, zeta: &SampledField, opts: &SolverOptions) -> Result<DensityTrajectory> {
    if b.dims != grid.dims() {
        return Err(LabError::GeometryMismatch("drift and grid dimensions differ".into()));
    }
    let velocity = if b.is_zero() {
        Velocity::None
    } else {
        let cached = if time_independent(b) { Some(sample_drift(b, opts.start_time, grid.geometry)?) } else { None };
        Velocity::Fixed { b, cached }
    };
    run(grid, velocity, zeta, opts)
}

/// Solves `∂_t ρ = Δρ - div((K * ρ) ρ)` from `ζ`.
pub fn solve_nfpe(grid: &PeriodicGrid, kernel: &NfpeKernel, zeta: &SampledField, opts: &SolverOptions) -> Result<DensityTrajectory> {
    let velocity = nonlinear_velocity(grid, kernel)?;
    run(grid, velocity, zeta, opts)
}
