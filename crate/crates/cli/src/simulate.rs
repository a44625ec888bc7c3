//! Direct simulation commands: SDE paths, particle systems and the
//! Fokker-Planck solver.

use serde::{Deserialize, Serialize};

use sdl_core::density::DensityMethod;
use sdl_core::error::{LabError, Result};
use sdl_core::field::GridGeometry;
use sdl_core::fpe::{solve_linear_fpe, solve_nfpe, NfpeKernelSpec, PeriodicGrid, SolverOptions};
use sdl_core::io;
use sdl_core::kernels::DriftSpec;
use sdl_core::measure::{AtomRealization, MeasureSpec};
use sdl_core::particles::{empirical_density, simulate_particles, ParticleConfig};
use sdl_core::report::{fmt_f64, ExperimentReport, Table};
use sdl_core::sde::{simulate, InitialLaw, SdeConfig};
use sdl_core::stats::MeanEstimate;

/// Named binary artifacts produced next to the report.
pub type Artifacts = Vec<(String, Vec<u8>)>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeRun {
    pub drift: DriftSpec,
    pub initial: InitialLaw,
    pub sde: SdeConfig,
}

pub fn simulate_sde(cfg: &SdeRun) -> Result<(ExperimentReport, Artifacts)> {
    let b = cfg.drift.build()?;
    let ens = simulate(&b, &cfg.initial, &cfg.sde)?;
    let k = ens.records() - 1;
    let mut rep = ExperimentReport::new("simulate-sde");
    let mut table = Table::new("terminal_moments", &["axis", "mean", "std_error", "variance"]);
    let valid: Vec<usize> = (0..ens.paths()).filter(|&p| ens.valid[p]).collect();
    for a in 0..ens.dims {
        let xs: Vec<f64> = valid.iter().map(|&p| ens.state(p, k)[a]).collect();
        let m = MeanEstimate::from_samples(&xs);
        let var = xs.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (xs.len().max(2) - 1) as f64;
        table.push(vec![a.to_string(), fmt_f64(m.mean), fmt_f64(m.std_error), fmt_f64(var)]);
        rep.mean(format!("terminal_mean[{a}]"), &m).exact(format!("terminal_variance[{a}]"), var);
    }
    rep.exact("paths", ens.paths() as f64)
        .exact("invalid_paths", (ens.paths() - valid.len()) as f64)
        .exact("substeps", ens.substeps as f64)
        .flag("finite", valid.iter().all(|&p| ens.state(p, k).iter().all(|v| v.is_finite())))
        .table(table);
    let mut buf = Vec::new();
    io::write_paths(&mut buf, &ens)?;
    Ok((rep, vec![("paths.sde".into(), buf)]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityGrid {
    pub half_width: f64,
    pub modes: usize,
    #[serde(default = "default_kde")]
    pub method: DensityMethod,
}

fn default_kde() -> DensityMethod {
    DensityMethod::Kde { bandwidth: None }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleRunConfig {
    pub initial: MeasureSpec,
    pub particles: ParticleConfig,
    /// Grid for the terminal density estimate, if wanted.
    #[serde(default)]
    pub density: Option<DensityGrid>,
}

pub fn simulate_particle_system(cfg: &ParticleRunConfig) -> Result<(ExperimentReport, Artifacts)> {
    let run = simulate_particles(&cfg.initial, &cfg.particles)?;
    let last = run.frames.last().ok_or_else(|| LabError::InvalidParameter("particle run produced no frames".into()))?;
    let mut rep = ExperimentReport::new("simulate-particles");
    let mut diag = Table::new("step_diagnostics", &["step", "max_speed"]);
    for (i, d) in run.diagnostics.iter().enumerate() {
        diag.push(vec![(i + 1).to_string(), fmt_f64(d.max_speed)]);
    }
    let max_speed = run.diagnostics.iter().fold(0.0f64, |m, d| m.max(d.max_speed));
    rep.exact("particles", last.len() as f64)
        .exact("blob_scale", last.blob_scale)
        .exact("max_speed", max_speed)
        .flag("finite", last.positions.iter().all(|v| v.is_finite()))
        .table(diag);
    let mut buf = Vec::new();
    io::write_particle_frames(&mut buf, &run.frames, run.dt)?;
    let mut files = vec![("frames.ptc".to_string(), buf)];
    if let Some(dg) = &cfg.density {
        let g = GridGeometry::new(last.dims, dg.half_width, dg.modes)?;
        let est = empirical_density(last, g, dg.method)?;
        rep.exact("outside_mass", est.outside_mass);
        files.push(("terminal_density.csv".into(), io::field_csv(&est.field).into_bytes()));
    }
    Ok((rep, files))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpeRun {
    pub initial: MeasureSpec,
    #[serde(default = "default_dims")]
    pub dims: usize,
    pub half_width: f64,
    pub modes: usize,
    #[serde(default)]
    pub realization: AtomRealization,
    /// Nonlinear kernel; mutually exclusive with `drift`.
    #[serde(default)]
    pub kernel: Option<NfpeKernelSpec>,
    /// Given drift for the linear equation.
    #[serde(default)]
    pub drift: Option<DriftSpec>,
    pub solver: SolverOptions,
}

fn default_dims() -> usize {
    2
}

pub fn solve_fpe(cfg: &FpeRun) -> Result<(ExperimentReport, Artifacts)> {
    let grid = PeriodicGrid::new(cfg.dims, cfg.half_width, cfg.modes)?;
    let zeta = cfg.initial.realize(grid.geometry, cfg.realization)?;
    let traj = match (&cfg.kernel, &cfg.drift) {
        (Some(k), None) => solve_nfpe(&grid, &k.build(), &zeta, &cfg.solver)?,
        (None, Some(d)) => solve_linear_fpe(&grid, &d.build()?, &zeta, &cfg.solver)?,
        _ => return Err(LabError::InvalidParameter("give exactly one of `kernel` (nonlinear) or `drift` (linear)".into())),
    };
    let mut rep = ExperimentReport::new("solve-fpe");
    let drift = traj.mass_drift();
    rep.exact("frames", traj.frames.len() as f64).exact("mass_drift", drift).flag("mass_conserved", drift <= 1e-9).table(traj.norms_table());
    let mut buf = Vec::new();
    io::write_trajectory(&mut buf, &traj)?;
    let density = io::field_csv(traj.last()).into_bytes();
    Ok((rep, vec![("trajectory.fpe".into(), buf), ("terminal_density.csv".into(), density)]))
}
