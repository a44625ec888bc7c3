//! Solver-level checks with known answers: Brownian variance, heat flow,
//! the radial Oseen reduction, particle/PDE agreement, weighted decay,
//! Duhamel contraction and the flow property.

use serde::{Deserialize, Serialize};

use crate::density::{estimate_density, DensityMethod};
use crate::error::{invalid, Result};
use crate::field::SampledField;
use crate::fpe::{
    decay_diagnostic, duhamel_picard, flow_property_check, heat_propagate, solve_linear_fpe, solve_nfpe, DuhamelOptions, NfpeKernel,
    PeriodicGrid, SolverOptions,
};
use crate::kernels::DriftField;
use crate::lorentz::{inequality_suite, InequalityKind, SuiteConfig};
use crate::measure::{AtomRealization, MeasureSpec};
use crate::particles::{simulate_particles, KernelSpec, ParticleConfig};
use crate::report::{fmt_f64, ExperimentReport, Table};
use crate::sde::{simulate, InitialLaw, SdeConfig};

/// Co-rotating pair of Gaussian vortices, total mass one.
pub fn vortex_pair() -> MeasureSpec {
    MeasureSpec::Mixture {
        parts: vec![MeasureSpec::gaussian(vec![0.8, 0.0], 0.5, 0.5), MeasureSpec::gaussian(vec![-0.8, 0.0], 0.5, 0.5)],
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianConfig {
    #[serde(default = "BrownianConfig::default_dims")]
    pub dims: usize,
    #[serde(default = "BrownianConfig::default_paths")]
    pub paths: usize,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "BrownianConfig::default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub master_seed: u64,
}

fn one() -> f64 {
    1.0
}

impl BrownianConfig {
    fn default_dims() -> usize {
        2
    }
    fn default_paths() -> usize {
        100_000
    }
    fn default_dt() -> f64 {
        0.01
    }
}

impl Default for BrownianConfig {
    fn default() -> Self {
        Self { dims: 2, paths: Self::default_paths(), horizon: 1.0, dt: Self::default_dt(), master_seed: 0 }
    }
}

/// `X_T` for zero drift from the origin: per-coordinate variance `2T`
/// within three standard errors.
pub fn brownian_baseline(cfg: &BrownianConfig) -> Result<ExperimentReport> {
    let mut sde = SdeConfig::new(cfg.horizon, cfg.dt, cfg.paths, cfg.master_seed);
    sde.record_every = 0;
    sde.stopping = false;
    let ens = simulate(&DriftField::zero(cfg.dims), &InitialLaw::Point { x: vec![0.0; cfg.dims] }, &sde)?;
    let k = ens.records() - 1;
    let mut rep = ExperimentReport::new("brownian-baseline");
    let mut ok = true;
    let want = 2.0 * cfg.horizon;
    for a in 0..cfg.dims {
        let xs: Vec<f64> = (0..ens.paths()).map(|p| ens.state(p, k)[a]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let se = ((m4 - var * var) / n).sqrt();
        rep.ci(format!("variance[{a}]"), var, var - 3.0 * se, var + 3.0 * se, 0.997);
        ok &= (var - want).abs() <= 3.0 * se;
    }
    rep.exact("expected_variance", want).flag("variance_matches", ok);
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    #[serde(default = "HeatConfig::default_l")]
    pub half_width: f64,
    #[serde(default = "HeatConfig::default_m")]
    pub modes: usize,
    #[serde(default = "HeatConfig::default_t")]
    pub horizon: f64,
    #[serde(default = "HeatConfig::default_dt")]
    pub dt: f64,
    /// Variance of the Gaussian initial density.
    #[serde(default = "HeatConfig::default_var")]
    pub variance: f64,
}

impl HeatConfig {
    fn default_l() -> f64 {
        8.0
    }
    fn default_m() -> usize {
        128
    }
    fn default_t() -> f64 {
        0.5
    }
    fn default_dt() -> f64 {
        0.05
    }
    fn default_var() -> f64 {
        0.3
    }
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self { half_width: 8.0, modes: 128, horizon: 0.5, dt: 0.05, variance: 0.3 }
    }
}

fn gaussian_field(grid: &PeriodicGrid, center: &[f64], var: f64) -> SampledField {
    SampledField::from_fn(grid.geometry, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        (2.0 * std::f64::consts::PI * var).powf(-(x.len() as f64) / 2.0) * (-r2 / (2.0 * var)).exp()
    })
}

/// Zero-drift solver against the closed-form Gaussian heat flow.
pub fn heat_sanity(cfg: &HeatConfig) -> Result<ExperimentReport> {
    let grid = PeriodicGrid::new(2, cfg.half_width, cfg.modes)?;
    let c = [0.5, -0.25];
    let z = gaussian_field(&grid, &c, cfg.variance);
    let traj = solve_linear_fpe(&grid, &DriftField::zero(2), &z, &SolverOptions::new(cfg.horizon, cfg.dt))?;
    let exact = gaussian_field(&grid, &c, cfg.variance + 2.0 * cfg.horizon);
    let l1 = traj.last().l1_distance(&exact)?;
    let mut rep = ExperimentReport::new("heat-sanity");
    rep.exact("l1_vs_analytic", l1)
        .exact("mass_drift", traj.mass_drift())
        .flag("heat_identity", l1 <= 1e-10)
        .flag("mass_conserved", traj.mass_drift() <= 1e-12)
        .table(traj.norms_table());
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OseenConfig {
    #[serde(default = "OseenConfig::default_l")]
    pub half_width: f64,
    #[serde(default = "OseenConfig::default_m")]
    pub modes: usize,
    #[serde(default = "OseenConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "OseenConfig::default_times")]
    pub times: Vec<f64>,
    #[serde(default = "OseenConfig::default_var")]
    pub variance: f64,
}

impl OseenConfig {
    fn default_l() -> f64 {
        16.0
    }
    fn default_m() -> usize {
        512
    }
    fn default_dt() -> f64 {
        0.01
    }
    fn default_times() -> Vec<f64> {
        vec![0.25, 0.5, 1.0]
    }
    fn default_var() -> f64 {
        0.2
    }
}

impl Default for OseenConfig {
    fn default() -> Self {
        Self { half_width: 16.0, modes: 512, dt: 0.01, times: Self::default_times(), variance: 0.2 }
    }
}

/// Biot-Savart evolution of a radial density against pure heat flow.
pub fn oseen_reduction(cfg: &OseenConfig) -> Result<ExperimentReport> {
    if cfg.times.is_empty() || cfg.times.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("oseen times must be positive and non-empty"));
    }
    let grid = PeriodicGrid::new(2, cfg.half_width, cfg.modes)?;
    let z = gaussian_field(&grid, &[0.0, 0.0], cfg.variance);
    // Split the run at the output times rather than storing every frame.
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    let mut rep = ExperimentReport::new("oseen");
    let mut ok = true;
    let mut start = 0.0;
    let mut current = z.clone();
    for &t in &times {
        let mut seg = SolverOptions::new(t, cfg.dt);
        seg.start_time = start;
        let traj = solve_nfpe(&grid, &NfpeKernel::BiotSavart, &current, &seg)?;
        current = traj.last().clone();
        let heat = heat_propagate(&grid, &z, t)?;
        let l1 = current.l1_distance(&heat)?;
        rep.exact(format!("l1[t={}]", fmt_f64(t)), l1);
        ok &= l1 <= 1e-5;
        start = t;
    }
    rep.flag("radial_reduction", ok);
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlePdeConfig {
    #[serde(default = "ParticlePdeConfig::default_ladder")]
    pub particle_counts: Vec<usize>,
    #[serde(default = "ParticlePdeConfig::default_seeds")]
    pub seeds: u64,
    #[serde(default = "ParticlePdeConfig::default_t")]
    pub horizon: f64,
    #[serde(default = "ParticlePdeConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "one")]
    pub blob_c: f64,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default = "ParticlePdeConfig::default_l")]
    pub half_width: f64,
    #[serde(default = "ParticlePdeConfig::default_m")]
    pub modes: usize,
    #[serde(default = "ParticlePdeConfig::default_pde_dt")]
    pub pde_dt: f64,
    #[serde(default)]
    pub master_seed: u64,
}

impl ParticlePdeConfig {
    fn default_ladder() -> Vec<usize> {
        vec![1000, 4000, 16_000]
    }
    fn default_seeds() -> u64 {
        8
    }
    fn default_t() -> f64 {
        0.5
    }
    fn default_dt() -> f64 {
        0.05
    }
    fn default_l() -> f64 {
        6.0
    }
    fn default_m() -> usize {
        128
    }
    fn default_pde_dt() -> f64 {
        0.005
    }
}

impl Default for ParticlePdeConfig {
    fn default() -> Self {
        Self {
            particle_counts: Self::default_ladder(),
            seeds: 8,
            horizon: 0.5,
            dt: 0.05,
            blob_c: 1.0,
            cutoff: None,
            half_width: 6.0,
            modes: 128,
            pde_dt: 0.005,
            master_seed: 0,
        }
    }
}

/// Random vortex method against the pseudospectral vorticity solver for a
/// smooth initial vorticity. The density at the horizon pools the particle
/// clouds of all seeds into one kernel estimate; the per-seed distances
/// give the noise scale for the monotonicity check.
pub fn particle_pde_consistency(cfg: &ParticlePdeConfig) -> Result<ExperimentReport> {
    if cfg.particle_counts.is_empty() || cfg.seeds == 0 {
        return Err(invalid("need particle counts and at least one seed"));
    }
    let zeta = vortex_pair();
    let grid = PeriodicGrid::new(2, cfg.half_width, cfg.modes)?;
    let g = grid.geometry;
    let z = zeta.realize(g, AtomRealization::OneCell)?;
    let reference = solve_nfpe(&grid, &NfpeKernel::BiotSavart, &z, &SolverOptions::new(cfg.horizon, cfg.pde_dt))?;
    let reference = reference.last();
    let kde = DensityMethod::Kde { bandwidth: None };

    let mut table = Table::new("particle_pde", &["N", "pooled_l1", "seed_mean_l1", "seed_se"]);
    let mut pooled_l1 = Vec::new();
    let mut seed_se = Vec::new();
    let mut rep = ExperimentReport::new("particle-pde");
    for &n in &cfg.particle_counts {
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        let mut per_seed = Vec::new();
        for s in 0..cfg.seeds {
            let pc = ParticleConfig {
                particles: n,
                horizon: cfg.horizon,
                dt: cfg.dt,
                seed: crate::rng::derive_seed(cfg.master_seed, s),
                blob_c: cfg.blob_c,
                cutoff: cfg.cutoff,
                kernel: KernelSpec::BiotSavartBlob,
                record_every: 0,
            };
            let run = simulate_particles(&zeta, &pc)?;
            let last = run.frames.last().expect("particle run has frames");
            per_seed.push(estimate_density(&last.positions, &last.weights, g, kde)?.field.l1_distance(reference)?);
            pts.extend_from_slice(&last.positions);
            wts.extend(last.weights.iter().map(|w| w / cfg.seeds as f64));
        }
        let pooled = estimate_density(&pts, &wts, g, kde)?.field.l1_distance(reference)?;
        let m = crate::stats::MeanEstimate::from_samples(&per_seed);
        table.push_f64(&[n as f64, pooled, m.mean, m.std_error]);
        rep.exact(format!("pooled_l1[N={n}]"), pooled).mean(format!("seed_l1[N={n}]"), &m);
        pooled_l1.push(pooled);
        seed_se.push(m.std_error);
    }
    let finest = *pooled_l1.last().unwrap();
    let monotone = pooled_l1.windows(2).zip(seed_se.windows(2)).all(|(l, s)| l[1] <= l[0] + 2.0 * (s[0] * s[0] + s[1] * s[1]).sqrt());
    rep.flag("finest_below_0.05", finest < 0.05).flag("monotone_in_N", monotone).table(table);
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "DecayConfig::default_r")]
    pub r: f64,
    #[serde(default = "DecayConfig::default_times")]
    pub times: Vec<f64>,
    #[serde(default = "DecayConfig::default_l")]
    pub half_width: f64,
    #[serde(default = "DecayConfig::default_m")]
    pub modes: usize,
}

impl DecayConfig {
    fn default_r() -> f64 {
        4.0
    }
    fn default_times() -> Vec<f64> {
        (0..=8).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect()
    }
    fn default_l() -> f64 {
        2.0
    }
    fn default_m() -> usize {
        512
    }
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { r: 4.0, times: Self::default_times(), half_width: 2.0, modes: 512 }
    }
}

/// Weighted heat decay for an atom, a smooth density and their half-half
/// mixture. Atoms are band-limited so heat flow of them is exact on the
/// grid.
pub fn decay_experiment(cfg: &DecayConfig) -> Result<ExperimentReport> {
    if cfg.times.len() < 2 {
        return Err(invalid("decay experiment needs at least two times"));
    }
    let grid = PeriodicGrid::new(2, cfg.half_width, cfg.modes)?;
    let g = grid.geometry;
    let atom = MeasureSpec::delta(vec![0.0, 0.0]);
    let smooth = MeasureSpec::gaussian(vec![0.0, 0.0], 0.5, 1.0);
    let mixed = MeasureSpec::Mixture {
        parts: vec![MeasureSpec::PointMass { location: vec![0.0, 0.0], weight: 0.5 }, MeasureSpec::gaussian(vec![0.0, 0.0], 0.5, 0.5)],
    };
    let mut table = Table::new("decay", &["t", "atom", "smooth", "mixed"]);
    let rows: Vec<Vec<f64>> = [&atom, &smooth, &mixed]
        .iter()
        .map(|z| {
            let f = z.realize(g, AtomRealization::BandLimited)?;
            Ok(decay_diagnostic(&grid, &f, cfg.r, &cfg.times)?.into_iter().map(|r| r.weighted).collect())
        })
        .collect::<Result<_>>()?;
    for (k, t) in cfg.times.iter().enumerate() {
        table.push_f64(&[*t, rows[0][k], rows[1][k], rows[2][k]]);
    }
    let (amax, amin) = rows[0].iter().fold((0.0f64, f64::INFINITY), |(hi, lo), v| (hi.max(*v), lo.min(*v)));
    let flatness = amax / amin - 1.0;
    let smooth_factor = rows[1].last().unwrap() / rows[1][0];
    let half = rows[2][0] / (0.5 * rows[0][0]);
    let mut rep = ExperimentReport::new("decay");
    rep.exact("atom_flatness", flatness)
        .exact("smooth_decay_factor", smooth_factor)
        .exact("mixed_over_half_atom", half)
        .flag("atom_flat", flatness <= 0.05)
        .flag("smooth_decays", smooth_factor >= 10.0)
        .flag("mixed_half_atom", (half - 1.0).abs() <= 0.1)
        .table(table);
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelConfig {
    #[serde(default = "DuhamelConfig::default_masses")]
    pub masses: Vec<f64>,
    #[serde(default = "DuhamelConfig::default_r")]
    pub r: f64,
    #[serde(default = "DuhamelConfig::default_t0")]
    pub horizon: f64,
    #[serde(default = "DuhamelConfig::default_intervals")]
    pub intervals: usize,
    #[serde(default = "DuhamelConfig::default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "DuhamelConfig::default_l")]
    pub half_width: f64,
    #[serde(default = "DuhamelConfig::default_m")]
    pub modes: usize,
}

impl DuhamelConfig {
    fn default_masses() -> Vec<f64> {
        vec![0.05, 0.1, 0.2]
    }
    fn default_r() -> f64 {
        4.0 / 3.0
    }
    fn default_t0() -> f64 {
        0.25
    }
    fn default_intervals() -> usize {
        32
    }
    fn default_iterations() -> usize {
        12
    }
    fn default_l() -> f64 {
        4.0
    }
    fn default_m() -> usize {
        64
    }
}

impl Default for DuhamelConfig {
    fn default() -> Self {
        Self {
            masses: Self::default_masses(),
            r: Self::default_r(),
            horizon: 0.25,
            intervals: 32,
            max_iterations: 12,
            half_width: 4.0,
            modes: 64,
        }
    }
}

/// Two atoms of equal weight, total mass `m`.
pub fn atom_pair(m: f64) -> MeasureSpec {
    MeasureSpec::Mixture {
        parts: vec![
            MeasureSpec::PointMass { location: vec![0.3, 0.0], weight: 0.5 * m },
            MeasureSpec::PointMass { location: vec![-0.3, 0.1], weight: 0.5 * m },
        ],
    }
}

/// Picard contraction of the mild Biot-Savart equation as the atomic mass
/// grows.
pub fn duhamel_experiment(cfg: &DuhamelConfig) -> Result<ExperimentReport> {
    if cfg.masses.is_empty() || cfg.masses.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("masses must be increasing"));
    }
    let grid = PeriodicGrid::new(2, cfg.half_width, cfg.modes)?;
    let opts = DuhamelOptions { horizon: cfg.horizon, intervals: cfg.intervals, max_iterations: cfg.max_iterations, r: cfg.r, tol: 1e-10 };
    let mut rep = ExperimentReport::new("duhamel");
    let mut table = Table::new("duhamel", &["mass", "contraction_ratio", "iterations", "converged", "diverged"]);
    let mut ratios = Vec::new();
    for &m in &cfg.masses {
        let z = atom_pair(m).realize(grid.geometry, AtomRealization::OneCell)?;
        let res = duhamel_picard(&grid, &NfpeKernel::BiotSavart, &z, &opts)?;
        table.push(vec![
            fmt_f64(m),
            fmt_f64(res.contraction_ratio),
            res.log.len().to_string(),
            res.converged.to_string(),
            res.diverged.to_string(),
        ]);
        rep.exact(format!("contraction_ratio[m={}]", fmt_f64(m)), res.contraction_ratio);
        let mut log = res.log_table();
        log.name = format!("contraction_m{}", fmt_f64(m));
        rep.table(log);
        ratios.push(res.contraction_ratio);
    }
    rep.flag("smallest_mass_contracts", ratios[0] < 1.0)
        .flag("monotone_in_mass", ratios.windows(2).all(|w| w[1] > w[0]))
        .table(table);
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "FlowConfig::default_mid")]
    pub r_mid: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "FlowConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "FlowConfig::default_l")]
    pub half_width: f64,
    #[serde(default = "FlowConfig::default_m")]
    pub modes: usize,
}

impl FlowConfig {
    fn default_mid() -> f64 {
        0.5
    }
    fn default_dt() -> f64 {
        0.01
    }
    fn default_l() -> f64 {
        8.0
    }
    fn default_m() -> usize {
        256
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { r_mid: 0.5, horizon: 1.0, dt: 0.01, half_width: 8.0, modes: 256 }
    }
}

/// Restart test for the Biot-Savart flow of the smooth vortex pair, and the
/// zero-kernel control.
pub fn flow_experiment(cfg: &FlowConfig) -> Result<ExperimentReport> {
    let grid = PeriodicGrid::new(2, cfg.half_width, cfg.modes)?;
    let z = vortex_pair().realize(grid.geometry, AtomRealization::OneCell)?;
    let bs = flow_property_check(&grid, &NfpeKernel::BiotSavart, &z, cfg.r_mid, cfg.horizon, cfg.dt)?;
    let zero = flow_property_check(&grid, &NfpeKernel::Zero, &z, cfg.r_mid, cfg.horizon, cfg.dt)?;
    let mut rep = ExperimentReport::new("flow");
    rep.exact("distance", bs.distance)
        .exact("splitting_error", bs.splitting_error)
        .exact("distance[K=0]", zero.distance)
        .flag("restart_distance_below_1e-4", bs.distance < 1e-4)
        .flag("within_splitting_error", bs.holds())
        .flag("zero_kernel_roundoff", zero.distance < 1e-10);
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalitiesConfig {
    #[serde(default = "InequalitiesConfig::default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Kinds to run; all when absent.
    #[serde(default)]
    pub kinds: Option<Vec<InequalityKind>>,
}

impl InequalitiesConfig {
    fn default_trials() -> usize {
        200
    }
}

impl Default for InequalitiesConfig {
    fn default() -> Self {
        Self { trials: 200, seed: 0, kinds: None }
    }
}

/// All inequality suites merged into one report.
pub fn inequalities_experiment(cfg: &InequalitiesConfig) -> Result<ExperimentReport> {
    let kinds = cfg.kinds.clone().unwrap_or_else(|| InequalityKind::ALL.to_vec());
    let mut rep = ExperimentReport::new("inequalities");
    for (i, kind) in kinds.into_iter().enumerate() {
        let out = inequality_suite(&SuiteConfig::new(kind, cfg.trials, crate::rng::derive_seed(cfg.seed, i as u64)))?;
        rep.merge(kind.name(), out.to_report());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_brownian_and_heat_checks_pass() {
        let rep = brownian_baseline(&BrownianConfig { paths: 5000, dt: 0.1, ..Default::default() }).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let rep = heat_sanity(&HeatConfig { modes: 64, ..Default::default() }).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn small_solver_checks_pass() {
        let rep = oseen_reduction(&OseenConfig { modes: 256, times: vec![0.1, 0.2], ..Default::default() }).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let rep = decay_experiment(&DecayConfig { modes: 256, ..Default::default() }).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let rep = flow_experiment(&FlowConfig { modes: 64, half_width: 6.0, horizon: 0.2, r_mid: 0.1, dt: 0.02 }).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let rep = duhamel_experiment(&DuhamelConfig { modes: 32, intervals: 16, ..Default::default() }).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn decay_atom_values_match_the_closed_form() {
        let rep = decay_experiment(&DecayConfig { modes: 256, times: vec![1e-2, 1e-1], ..Default::default() }).unwrap();
        let t = &rep.tables[0];
        // ‖h(t)‖_{L^4} t^{3/4} = (4π)^{-3/4} 4^{-1/4} in d = 2.
        let exact = (4.0 * std::f64::consts::PI).powf(-0.75) * 4f64.powf(-0.25);
        for row in &t.rows {
            let v: f64 = row[1].parse().unwrap();
            assert!((v / exact - 1.0).abs() < 1e-6);
        }
    }
}
