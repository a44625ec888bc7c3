//! Weighted interacting particle systems for the McKean-Vlasov equation
//! `dX = (K * ρ)(t, X) dt + √2 dW`, `ρ = law(X)`.
//!
//! With the Biot-Savart blob kernel this is the random vortex method. All
//! drifts of a step are computed from the pre-step snapshot.

mod cells;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cells::CellList;

use crate::density::{estimate_density, DensityEstimate, DensityMethod};
use crate::error::{invalid, LabError, Result};
use crate::field::GridGeometry;
use crate::kernels::{biot_savart_blob, DriftField};
use crate::measure::MeasureSpec;
use crate::rng::{derive_seed, keyed_stream, normal, stream};

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    pub dims: usize,
    /// Row-major `N × d`.
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub blob_scale: f64,
    pub time: f64,
}

impl ParticleState {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dims..(i + 1) * self.dims]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i X_i`.
    pub fn weighted_centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dims];
        for (i, w) in self.weights.iter().enumerate() {
            for a in 0..self.dims {
                c[a] += w * self.positions[i * self.dims + a];
            }
        }
        c
    }
}

/// `ε = c · N^{-1/(d+2)}`.
pub fn blob_scale(c: f64, n: usize, dims: usize) -> f64 {
    c * (n as f64).powf(-1.0 / (dims as f64 + 2.0))
}

/// Splits `n` among `masses` proportionally by largest remainders.
fn allocate(n: usize, masses: &[f64]) -> Vec<usize> {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return vec![0; masses.len()];
    }
    let exact: Vec<f64> = masses.iter().map(|m| n as f64 * m / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        if masses[i] > 0.0 {
            counts[i] += 1;
            rest -= 1;
        }
    }
    counts
}

/// Samples `N` particles from `ζ`: the positive and negative parts get
/// particle counts proportional to their masses, with weights
/// `±(part mass)/(part count)`.
pub fn init_particles(zeta: &MeasureSpec, n: usize, seed: u64, blob_c: f64) -> Result<ParticleState> {
    if n == 0 {
        return Err(invalid("need at least one particle"));
    }
    zeta.validate()?;
    let d = zeta.dims()?;
    let (pos_mass, neg_mass) = zeta.mass_split();
    let [n_pos, n_neg] = <[usize; 2]>::try_from(allocate(n, &[pos_mass, neg_mass])).unwrap();
    let mut rng = stream(derive_seed(seed, 0x696e_6974), 0);
    let mut positions = Vec::with_capacity(n * d);
    let mut weights = Vec::with_capacity(n);
    for (sign, count, part_mass) in [(1.0, n_pos, pos_mass), (-1.0, n_neg, neg_mass)] {
        if count == 0 {
            continue;
        }
        let w = sign * part_mass / count as f64;
        // Leaves restricted to this sign, with their masses.
        let mut pieces: Vec<(&MeasureSpec, f64)> = Vec::new();
        for leaf in zeta.leaves() {
            let m = match leaf {
                MeasureSpec::PointMass { weight: m, .. } | MeasureSpec::Gaussian { mass: m, .. } => {
                    if sign * m > 0.0 {
                        m.abs()
                    } else {
                        0.0
                    }
                }
                MeasureSpec::GridDensity { field } => {
                    field.values.iter().filter(|v| sign * **v > 0.0).map(|v| v.abs()).sum::<f64>() * field.geometry.cell_measure()
                }
                MeasureSpec::Mixture { .. } => unreachable!(),
            };
            pieces.push((leaf, m));
        }
        let counts = allocate(count, &pieces.iter().map(|p| p.1).collect::<Vec<_>>());
        for ((leaf, _), k) in pieces.into_iter().zip(counts) {
            let mut x = vec![0.0; d];
            match leaf {
                MeasureSpec::PointMass { location, .. } => {
                    for _ in 0..k {
                        positions.extend_from_slice(location);
                    }
                }
                MeasureSpec::Gaussian { center, scale, .. } => {
                    for _ in 0..k {
                        for a in 0..d {
                            x[a] = center[a] + scale * normal(&mut rng);
                        }
                        positions.extend_from_slice(&x);
                    }
                }
                MeasureSpec::GridDensity { field } => {
                    let g = field.geometry;
                    let mut cdf = Vec::with_capacity(field.values.len());
                    let mut acc = 0.0;
                    for v in &field.values {
                        if sign * v > 0.0 {
                            acc += v.abs();
                        }
                        cdf.push(acc);
                    }
                    let h = g.spacing();
                    for _ in 0..k {
                        let u = rng.random::<f64>() * acc;
                        let cell = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1);
                        g.center(cell, &mut x);
                        for xa in x.iter_mut() {
                            *xa += h * (rng.random::<f64>() - 0.5);
                        }
                        positions.extend_from_slice(&x);
                    }
                }
                MeasureSpec::Mixture { .. } => unreachable!(),
            }
            weights.extend(std::iter::repeat_n(w, k));
        }
    }
    Ok(ParticleState { dims: d, positions, weights, blob_scale: blob_scale(blob_c, n, d), time: 0.0 })
}

/// Pairwise interaction kernel `K_ε`.
#[derive(Clone, Debug)]
pub enum ParticleKernel {
    Zero,
    /// `K_BS(x)|x|²/(|x|² + ε²)` with `ε` the state's blob scale.
    BiotSavartBlob,
    /// Any regular field, evaluated at `x - X_j`.
    Field(DriftField),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Zero,
    BiotSavartBlob,
}

impl KernelSpec {
    pub fn build(self) -> ParticleKernel {
        match self {
            KernelSpec::Zero => ParticleKernel::Zero,
            KernelSpec::BiotSavartBlob => ParticleKernel::BiotSavartBlob,
        }
    }
}

impl ParticleKernel {
    fn check(&self, dims: usize) -> Result<()> {
        match self {
            ParticleKernel::BiotSavartBlob if dims != 2 => Err(invalid("Biot-Savart blobs are planar")),
            ParticleKernel::Field(f) if f.dims != dims => Err(LabError::GeometryMismatch("kernel dimension".into())),
            ParticleKernel::Field(f) if !f.is_regular() => Err(invalid("particle kernel must be regularized")),
            _ => Ok(()),
        }
    }

    /// Adds `w K(dx)` to `out`.
    #[inline]
    fn accumulate(&self, t: f64, dx: &[f64], w: f64, eps2: f64, out: &mut [f64], scratch: &mut [f64]) -> Result<()> {
        match self {
            ParticleKernel::Zero => {}
            ParticleKernel::BiotSavartBlob => {
                let v = biot_savart_blob(dx[0], dx[1], eps2);
                out[0] += w * v[0];
                out[1] += w * v[1];
            }
            ParticleKernel::Field(f) => {
                f.eval(t, dx, scratch)?;
                for a in 0..dx.len() {
                    out[a] += w * scratch[a];
                }
            }
        }
        Ok(())
    }
}

/// `Σ_j w_j K_ε(at - X_j)` over particles with non-zero displacement.
pub fn interaction_drift(state: &ParticleState, kernel: &ParticleKernel, at: &[f64]) -> Result<Vec<f64>> {
    kernel.check(state.dims)?;
    let mut out = vec![0.0; state.dims];
    drift_at(state, kernel, None, at, &mut out)?;
    Ok(out)
}

fn drift_at(state: &ParticleState, kernel: &ParticleKernel, cells: Option<&CellList>, at: &[f64], out: &mut [f64]) -> Result<()> {
    let d = state.dims;
    let eps2 = state.blob_scale * state.blob_scale;
    let mut dx = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    out.iter_mut().for_each(|v| *v = 0.0);
    if matches!(kernel, ParticleKernel::Zero) {
        return Ok(());
    }
    if let (ParticleKernel::BiotSavartBlob, None) = (kernel, cells) {
        let (mut u0, mut u1) = (0.0, 0.0);
        for (xj, w) in state.positions.chunks_exact(2).zip(&state.weights) {
            let (d0, d1) = (at[0] - xj[0], at[1] - xj[1]);
            if d0 == 0.0 && d1 == 0.0 {
                continue;
            }
            let c = w / (d0 * d0 + d1 * d1 + eps2);
            u0 -= d1 * c;
            u1 += d0 * c;
        }
        out[0] = u0 / (2.0 * std::f64::consts::PI);
        out[1] = u1 / (2.0 * std::f64::consts::PI);
        return Ok(());
    }
    let mut visit = |j: usize| -> Result<()> {
        let xj = state.position(j);
        let mut zero = true;
        for a in 0..d {
            dx[a] = at[a] - xj[a];
            zero &= dx[a] == 0.0;
        }
        if zero {
            return Ok(());
        }
        kernel.accumulate(state.time, &dx, state.weights[j], eps2, out, &mut scratch)
    };
    match cells {
        None => (0..state.len()).try_for_each(visit),
        Some(c) => c.for_each_neighbor(at, &mut visit),
    }
}

/// Drifts of all particles from the current snapshot.
pub fn all_drifts(state: &ParticleState, kernel: &ParticleKernel, cutoff: Option<f64>) -> Result<Vec<f64>> {
    kernel.check(state.dims)?;
    let d = state.dims;
    let cells = cutoff.map(|r| CellList::build(state, r)).transpose()?;
    let mut drifts = vec![0.0; state.positions.len()];
    drifts
        .par_chunks_mut(d * 64)
        .enumerate()
        .try_for_each(|(c, chunk)| -> Result<()> {
            for (k, out) in chunk.chunks_mut(d).enumerate() {
                let i = c * 64 + k;
                drift_at(state, kernel, cells.as_ref(), state.position(i), out)?;
            }
            Ok(())
        })?;
    Ok(drifts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub max_speed: f64,
    /// `Σ_i w_i b_i` from the snapshot; zero for antisymmetric kernels.
    pub drift_centroid: Vec<f64>,
}

/// One synchronous Euler-Maruyama step. The noise of particle `i` at step
/// `step` comes from the stream keyed `(step, i)` under `seed`.
///
/// Rejects the step when `max|b| dt` exceeds the blob scale.
pub fn step_particles(
    state: &ParticleState,
    kernel: &ParticleKernel,
    dt: f64,
    seed: u64,
    step: u64,
    cutoff: Option<f64>,
) -> Result<(ParticleState, StepDiagnostics)> {
    if !(dt > 0.0) {
        return Err(invalid("dt must be positive"));
    }
    let d = state.dims;
    let drifts = all_drifts(state, kernel, cutoff)?;
    let max_speed = drifts.chunks(d).map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    if !matches!(kernel, ParticleKernel::Zero) && max_speed * dt > state.blob_scale {
        return Err(LabError::Stability(format!(
            "max|b| dt = {:.3e} exceeds the blob scale {:.3e}; use dt ≤ {:.3e}",
            max_speed * dt,
            state.blob_scale,
            state.blob_scale / max_speed
        )));
    }
    let mut centroid = vec![0.0; d];
    for (i, w) in state.weights.iter().enumerate() {
        for a in 0..d {
            centroid[a] += w * drifts[i * d + a];
        }
    }
    let sq = (2.0 * dt).sqrt();
    let mut positions = vec![0.0; state.positions.len()];
    positions.par_chunks_mut(d).enumerate().for_each(|(i, out)| {
        let mut rng = keyed_stream(seed, &[step, i as u64]);
        for a in 0..d {
            out[a] = state.positions[i * d + a] + drifts[i * d + a] * dt + sq * normal(&mut rng);
        }
    });
    if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
        return Err(LabError::Stability(format!("particle {} left the finite range", i / d)));
    }
    let next = ParticleState { positions, weights: state.weights.clone(), time: state.time + dt, ..state.clone() };
    Ok((next, StepDiagnostics { max_speed, drift_centroid: centroid }))
}

/// Density of the weighted empirical measure on `grid`.
pub fn empirical_density(state: &ParticleState, grid: GridGeometry, method: DensityMethod) -> Result<DensityEstimate> {
    if grid.dims != state.dims {
        return Err(LabError::GeometryMismatch("grid and particle dimensions differ".into()));
    }
    estimate_density(&state.positions, &state.weights, grid, method)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub particles: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    /// `c` in `ε = c N^{-1/(d+2)}`.
    #[serde(default = "default_blob_c")]
    pub blob_c: f64,
    /// Far-field cutoff for the cell list; `None` sums all pairs.
    #[serde(default)]
    pub cutoff: Option<f64>,
    pub kernel: KernelSpec,
    /// Keep every `record_every`-th state (the last one always).
    #[serde(default = "default_record")]
    pub record_every: usize,
}

fn default_blob_c() -> f64 {
    1.0
}

fn default_record() -> usize {
    1
}

#[derive(Clone, Debug)]
pub struct ParticleRun {
    pub frames: Vec<ParticleState>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub dt: f64,
}

/// Runs `horizon / dt` synchronous steps from `ζ`.
pub fn simulate_particles(zeta: &MeasureSpec, cfg: &ParticleConfig) -> Result<ParticleRun> {
    if !(cfg.dt > 0.0 && cfg.horizon > 0.0) {
        return Err(invalid("need positive dt and horizon"));
    }
    let steps = (cfg.horizon / cfg.dt).round();
    if steps < 1.0 || (steps * cfg.dt - cfg.horizon).abs() > 1e-12 {
        return Err(invalid(format!("dt = {} does not divide the horizon {}", cfg.dt, cfg.horizon)));
    }
    let steps = steps as u64;
    let kernel = cfg.kernel.build();
    let mut state = init_particles(zeta, cfg.particles, cfg.seed, cfg.blob_c)?;
    let noise_seed = derive_seed(cfg.seed, 0x6e6f_6973_65);
    let every = cfg.record_every.max(1) as u64;
    let mut frames = vec![state.clone()];
    let mut diagnostics = Vec::with_capacity(steps as usize);
    for k in 0..steps {
        let (next, diag) = step_particles(&state, &kernel, cfg.dt, noise_seed, k, cfg.cutoff)?;
        state = next;
        state.time = (k + 1) as f64 * cfg.dt;
        diagnostics.push(diag);
        if (k + 1) % every == 0 || k + 1 == steps {
            frames.push(state.clone());
        }
    }
    Ok(ParticleRun { frames, diagnostics, dt: cfg.dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SampledField;
    use crate::kernels::heat_kernel;

    #[test]
    fn delta_initialization() {
        let s = init_particles(&MeasureSpec::delta(vec![0.0, 0.0]), 100, 1, 1.0).unwrap();
        assert!(s.positions.iter().all(|v| *v == 0.0));
        assert!(s.weights.iter().all(|w| *w == 0.01));
    }

    #[test]
    fn two_atoms_split_evenly() {
        let z = MeasureSpec::Mixture {
            parts: vec![
                MeasureSpec::PointMass { location: vec![1.0, 0.0], weight: 0.5 },
                MeasureSpec::PointMass { location: vec![-1.0, 0.0], weight: 0.5 },
            ],
        };
        let s = init_particles(&z, 101, 2, 1.0).unwrap();
        let at_a = (0..101).filter(|&i| s.position(i)[0] == 1.0).count();
        assert!(at_a == 50 || at_a == 51);
        assert!((s.total_weight() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_moments_within_clt_bounds() {
        let n = 20_000;
        let s = init_particles(&MeasureSpec::gaussian(vec![0.0, 0.0], 1.0, 1.0), n, 3, 1.0).unwrap();
        let c = s.weighted_centroid();
        for a in 0..2 {
            assert!(c[a].abs() < 3.0 / (n as f64).sqrt());
            for b in 0..2 {
                let cov: f64 = (0..n).map(|i| s.position(i)[a] * s.position(i)[b]).sum::<f64>() / n as f64;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((cov - want).abs() < 5.0 / (n as f64).sqrt(), "{a}{b} {cov}");
            }
        }
    }

    #[test]
    fn signed_measure_weights() {
        let z = MeasureSpec::Mixture {
            parts: vec![MeasureSpec::gaussian(vec![0.5, 0.0], 0.3, 1.0), MeasureSpec::gaussian(vec![-0.5, 0.0], 0.3, -0.5)],
        };
        let s = init_particles(&z, 300, 4, 1.0).unwrap();
        let pos = s.weights.iter().filter(|w| **w > 0.0).count();
        assert_eq!(pos, 200);
        assert!((s.total_weight() - 0.5).abs() < 1e-12);
        assert!(s.weights.iter().all(|w| (w.abs() - 1.0 / 200.0).abs() < 1e-15 || (w.abs() - 0.5 / 100.0).abs() < 1e-15));
    }

    #[test]
    fn grid_density_sampling() {
        let g = GridGeometry::new(1, 1.0, 4).unwrap();
        let f = SampledField::from_values(g, 1, vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        let s = init_particles(&MeasureSpec::GridDensity { field: f }, 50, 5, 1.0).unwrap();
        assert!(s.positions.iter().all(|x| (-0.5..=0.0).contains(x)));
        assert!((s.total_weight() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn self_interaction_vanishes_and_two_body_closed_form() {
        let one = ParticleState { dims: 2, positions: vec![0.3, 0.4], weights: vec![1.0], blob_scale: 0.1, time: 0.0 };
        assert_eq!(interaction_drift(&one, &ParticleKernel::BiotSavartBlob, &[0.3, 0.4]).unwrap(), vec![0.0, 0.0]);
        let two = ParticleState { dims: 2, positions: vec![0.0, 0.0, 1.0, 0.0], weights: vec![0.5, 0.5], blob_scale: 0.2, time: 0.0 };
        let b = all_drifts(&two, &ParticleKernel::BiotSavartBlob, None).unwrap();
        // Particle 0 feels 0.5 K_ε(-e₁) = 0.5 (0, -1)/(2π(1 + ε²)).
        let v = 0.5 / (2.0 * std::f64::consts::PI * 1.04);
        assert!((b[0]).abs() < 1e-15 && (b[1] + v).abs() < 1e-15);
        assert!((b[2]).abs() < 1e-15 && (b[3] - v).abs() < 1e-15);
    }

    #[test]
    fn symmetric_cloud_has_small_central_drift() {
        let n = 4000;
        let s = init_particles(&MeasureSpec::gaussian(vec![0.0, 0.0], 1.0, 1.0), n, 6, 1.0).unwrap();
        let b = interaction_drift(&s, &ParticleKernel::BiotSavartBlob, &[0.0, 0.0]).unwrap();
        // Each term is at most 1/(4πε) per unit weight.
        let bound = 3.0 / (4.0 * std::f64::consts::PI * s.blob_scale) / (n as f64).sqrt();
        assert!(b[0].abs() < bound && b[1].abs() < bound, "{b:?} {bound}");
    }

    #[test]
    fn zero_kernel_is_brownian_and_weights_are_conserved() {
        let cfg = ParticleConfig {
            particles: 5000,
            horizon: 0.5,
            dt: 0.1,
            seed: 7,
            blob_c: 1.0,
            cutoff: None,
            kernel: KernelSpec::Zero,
            record_every: 1,
        };
        let run = simulate_particles(&MeasureSpec::delta(vec![0.0, 0.0]), &cfg).unwrap();
        assert_eq!(run.frames.len(), 6);
        for (k, f) in run.frames.iter().enumerate() {
            let var: f64 = (0..f.len()).map(|i| f.position(i)[0].powi(2)).sum::<f64>() / f.len() as f64;
            let want = 2.0 * 0.1 * k as f64;
            assert!((var - want).abs() < 4.0 * want * (2.0 / f.len() as f64).sqrt() + 1e-15, "{k}: {var}");
            assert_eq!(f.total_weight().to_bits(), run.frames[0].total_weight().to_bits());
        }
    }

    #[test]
    fn antisymmetric_kernel_centroid_drift_is_zero() {
        let z = MeasureSpec::Mixture {
            parts: vec![MeasureSpec::gaussian(vec![0.5, 0.0], 0.4, 0.7), MeasureSpec::gaussian(vec![-0.5, 0.2], 0.3, -0.3)],
        };
        let cfg = ParticleConfig {
            particles: 1500,
            horizon: 0.2,
            dt: 0.05,
            seed: 8,
            blob_c: 0.5,
            cutoff: None,
            kernel: KernelSpec::BiotSavartBlob,
            record_every: 1,
        };
        let run = simulate_particles(&z, &cfg).unwrap();
        for d in &run.diagnostics {
            assert!(d.drift_centroid.iter().all(|c| c.abs() < 1e-12), "{:?}", d.drift_centroid);
        }
        let w0 = run.frames[0].total_weight();
        assert!(run.frames.iter().all(|f| f.total_weight() == w0));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = ParticleConfig {
            particles: 700,
            horizon: 0.1,
            dt: 0.05,
            seed: 9,
            blob_c: 1.0,
            cutoff: None,
            kernel: KernelSpec::BiotSavartBlob,
            record_every: 1,
        };
        let z = MeasureSpec::gaussian(vec![0.2, 0.0], 0.5, 1.0);
        let run = |t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| simulate_particles(&z, &cfg).unwrap());
        let (a, b) = (run(1), run(3));
        assert_eq!(a.frames.last().unwrap().positions, b.frames.last().unwrap().positions);
    }

    #[test]
    fn stability_guard_rejects_large_steps() {
        let s = ParticleState { dims: 2, positions: vec![0.0, 0.0, 0.01, 0.0], weights: vec![50.0, 50.0], blob_scale: 0.01, time: 0.0 };
        let err = step_particles(&s, &ParticleKernel::BiotSavartBlob, 0.1, 0, 0, None).unwrap_err();
        assert!(matches!(err, LabError::Stability(_)));
    }

    #[test]
    fn oseen_vortex_particles_follow_the_heat_kernel() {
        let g = GridGeometry::new(2, 6.0, 64).unwrap();
        let exact = SampledField::from_fn(g, |x| heat_kernel(0.5, x).unwrap());
        let runs = 4;
        let mut pooled = SampledField::zeros(g, 1);
        for r in 0..runs {
            let cfg = ParticleConfig {
                particles: 10_000,
                horizon: 0.5,
                dt: 0.1,
                seed: 100 + r,
                blob_c: 1.0,
                cutoff: Some(1.5),
                kernel: KernelSpec::BiotSavartBlob,
                record_every: 5,
            };
            let run = simulate_particles(&MeasureSpec::delta(vec![0.0, 0.0]), &cfg).unwrap();
            let e = empirical_density(run.frames.last().unwrap(), g, DensityMethod::Kde { bandwidth: None }).unwrap();
            pooled.values.iter_mut().zip(&e.field.values).for_each(|(p, v)| *p += v / runs as f64);
        }
        let l1 = pooled.l1_distance(&exact).unwrap();
        assert!(l1 < 0.05, "{l1}");
    }
}
