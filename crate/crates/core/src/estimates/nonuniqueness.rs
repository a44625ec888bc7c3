//! Two-start experiment for the supercritical drift: the `𝒯` functional
//! from an axis start `(0, …, 0, δ)` stays bounded away from zero while the
//! plane start `(δ, 0, …, 0)` gives zero by antisymmetry, for a ladder of
//! `δ → 0` with regularization `ε = δ / 10`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::kernels::{DriftField, SupercriticalSpec};
use crate::report::{fmt_f64, ExperimentReport, Table};
use crate::rng::derive_seed;
use crate::sde::{simulate, t_functional, ConeStatistics, InitialLaw, SdeConfig, StepControl};
use crate::stats::{wilson_interval, MeanEstimate};

fn default_d() -> usize {
    3
}
fn default_p() -> f64 {
    2.0
}
fn default_kappa() -> f64 {
    1.2
}
fn default_deltas() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}
fn default_paths() -> usize {
    200_000
}
fn default_pilot_paths() -> usize {
    20_000
}
fn default_ladder() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
}
fn default_horizon() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    0.01
}
fn default_eps_ratio() -> f64 {
    0.1
}
fn default_target() -> f64 {
    0.3
}
fn default_gap() -> f64 {
    5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonuniquenessConfig {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Fixed amplitude; when absent it is chosen by the pilot.
    #[serde(default, rename = "N")]
    pub amplitude: Option<f64>,
    #[serde(default = "default_pilot_paths")]
    pub pilot_paths: usize,
    /// Candidate amplitudes tried in order by the pilot.
    #[serde(default = "default_ladder")]
    pub pilot_ladder: Vec<f64>,
    /// Cone-event probability the pilot must certify (lower 99% bound).
    #[serde(default = "default_target")]
    pub target_probability: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_eps_ratio")]
    pub epsilon_ratio: f64,
    #[serde(default)]
    pub step_control: StepControl,
    /// Required `(axis - plane) / combined standard error` at every rung.
    #[serde(default = "default_gap")]
    pub gap_threshold: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Flip the axis start to `(0, …, 0, -δ)`.
    #[serde(default)]
    pub flip_axis: bool,
}

impl Default for NonuniquenessConfig {
    fn default() -> Self {
        Self {
            d: default_d(),
            p: default_p(),
            kappa: default_kappa(),
            deltas: default_deltas(),
            paths: default_paths(),
            amplitude: None,
            pilot_paths: default_pilot_paths(),
            pilot_ladder: default_ladder(),
            target_probability: default_target(),
            horizon: default_horizon(),
            dt: default_dt(),
            epsilon_ratio: default_eps_ratio(),
            step_control: StepControl::default(),
            gap_threshold: default_gap(),
            master_seed: 0,
            flip_axis: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotRow {
    pub amplitude: f64,
    pub probability: f64,
    pub interval: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub delta: f64,
    pub epsilon: f64,
    pub axis: MeanEstimate,
    pub plane: MeanEstimate,
    /// `(axis - plane) / sqrt(se_axis² + se_plane²)`.
    pub gap: f64,
    pub cone_probability: f64,
    pub cone_interval: (f64, f64),
    pub invalid_paths: usize,
}

impl Rung {
    /// Plane arm within three standard errors of zero.
    pub fn plane_vanishes(&self) -> bool {
        self.plane.mean.abs() <= 3.0 * self.plane.std_error
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonuniquenessReport {
    pub amplitude: f64,
    pub kappa: f64,
    pub truncation_bound: f64,
    pub pilot: Vec<PilotRow>,
    pub rungs: Vec<Rung>,
    pub gap_threshold: f64,
}

impl NonuniquenessReport {
    pub fn gap_persists(&self) -> bool {
        self.rungs.iter().all(|r| r.gap >= self.gap_threshold)
    }

    pub fn plane_vanishes(&self) -> bool {
        self.rungs.iter().all(Rung::plane_vanishes)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(
            "nonuniqueness",
            &["delta", "epsilon", "axis_T", "axis_se", "plane_T", "plane_se", "gap", "cone_p", "cone_lo", "cone_hi"],
        );
        for r in &self.rungs {
            t.push_f64(&[
                r.delta,
                r.epsilon,
                r.axis.mean,
                r.axis.std_error,
                r.plane.mean,
                r.plane.std_error,
                r.gap,
                r.cone_probability,
                r.cone_interval.0,
                r.cone_interval.1,
            ]);
        }
        t
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut rep = ExperimentReport::new("nonuniqueness");
        rep.exact("N", self.amplitude).exact("kappa", self.kappa).exact("truncation_bound", self.truncation_bound);
        for r in &self.rungs {
            let tag = fmt_f64(r.delta);
            rep.mean(format!("axis_T[{tag}]"), &r.axis)
                .mean(format!("plane_T[{tag}]"), &r.plane)
                .exact(format!("gap[{tag}]"), r.gap)
                .ci(format!("cone_probability[{tag}]"), r.cone_probability, r.cone_interval.0, r.cone_interval.1, 0.99);
        }
        rep.flag("plane_vanishes", self.plane_vanishes()).flag("gap_persists", self.gap_persists());
        let mut pilot = Table::new("pilot", &["N", "probability", "lower", "upper"]);
        for row in &self.pilot {
            pilot.push_f64(&[row.amplitude, row.probability, row.interval.0, row.interval.1]);
        }
        rep.table(self.table()).table(pilot);
        rep.payload = serde_json::to_value(self).unwrap_or_default();
        rep
    }
}

impl NonuniquenessConfig {
    pub fn validate(&self) -> Result<()> {
        let probe = SupercriticalSpec::new(self.d, self.p, 1.0, 0.0)?;
        if !(self.kappa > 1.0 && self.kappa < probe.kappa_max()) {
            return Err(invalid(format!("need κ ∈ (1, {}), got {}", probe.kappa_max(), self.kappa)));
        }
        if self.deltas.is_empty() || self.deltas.windows(2).any(|w| !(w[1] < w[0])) || self.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(invalid("delta ladder must be positive and decreasing"));
        }
        if !(self.epsilon_ratio > 0.0) || self.paths == 0 {
            return Err(invalid("need ε/δ > 0 and at least one path"));
        }
        if self.amplitude.is_none() && (self.pilot_ladder.is_empty() || self.pilot_paths == 0) {
            return Err(invalid("pilot needs a non-empty amplitude ladder and paths"));
        }
        Ok(())
    }

    fn drift(&self, amplitude: f64, delta: f64) -> Result<DriftField> {
        DriftField::supercritical(SupercriticalSpec::new(self.d, self.p, amplitude, self.epsilon_ratio * delta)?)
    }

    fn axis_start(&self, delta: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        x[self.d - 1] = if self.flip_axis { -delta } else { delta };
        x
    }

    fn plane_start(&self, delta: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        x[0] = delta;
        x
    }

    fn sde(&self, horizon: f64, paths: usize, seed: u64, t_integral: bool) -> SdeConfig {
        let mut c = SdeConfig::new(horizon, self.dt, paths, seed);
        c.record_every = 0;
        c.step_control = self.step_control;
        c.t_integral = t_integral;
        c
    }
}

/// Cone-event probability at `delta` from the axis start.
fn cone_probability(cfg: &NonuniquenessConfig, amplitude: f64, delta: f64, horizon: f64, paths: usize, seed: u64) -> Result<ConeStatistics> {
    let b = cfg.drift(amplitude, delta)?;
    let ens = simulate(&b, &InitialLaw::Point { x: cfg.axis_start(delta) }, &cfg.sde(horizon, paths, seed, false))?;
    ConeStatistics::from_ensemble(&ens, cfg.kappa)
}

/// Smallest ladder amplitude whose cone-event probability at the first
/// rung has a 99% lower bound at or above the target.
pub fn pilot_amplitude(cfg: &NonuniquenessConfig) -> Result<(f64, Vec<PilotRow>)> {
    let delta = cfg.deltas[0];
    let seed = derive_seed(cfg.master_seed, 0x7069_6c6f_74);
    let mut rows = Vec::new();
    for &n in &cfg.pilot_ladder {
        // The event is decided by time 2 (τ̄ < 1 and σ₁ > 1 + τ̄).
        let stats = cone_probability(cfg, n, delta, 2.0, cfg.pilot_paths, seed)?;
        let (lo, hi) = wilson_interval(stats.successes, stats.trials, 0.99);
        rows.push(PilotRow { amplitude: n, probability: stats.probability, interval: (lo, hi) });
        log::info!("pilot N = {n}: cone probability {:.4} [{lo:.4}, {hi:.4}]", stats.probability);
        if lo >= cfg.target_probability {
            return Ok((n, rows));
        }
    }
    Err(LabError::Stability(format!(
        "no pilot amplitude reached cone probability {} at delta = {delta}; extend the ladder",
        cfg.target_probability
    )))
}

pub fn nonuniqueness_experiment(cfg: &NonuniquenessConfig) -> Result<NonuniquenessReport> {
    cfg.validate()?;
    let (amplitude, pilot) = match cfg.amplitude {
        Some(n) => (n, vec![]),
        None => pilot_amplitude(cfg)?,
    };
    let mut rungs = Vec::new();
    for (i, &delta) in cfg.deltas.iter().enumerate() {
        let b = cfg.drift(amplitude, delta)?;
        // Both arms share the noise streams.
        let seed = derive_seed(cfg.master_seed, i as u64 + 1);
        let sde = cfg.sde(cfg.horizon, cfg.paths, seed, true);
        let axis_ens = simulate(&b, &InitialLaw::Point { x: cfg.axis_start(delta) }, &sde)?;
        let plane_ens = simulate(&b, &InitialLaw::Point { x: cfg.plane_start(delta) }, &sde)?;
        let (axis, _) = t_functional(&axis_ens, cfg.horizon)?;
        let (plane, _) = t_functional(&plane_ens, cfg.horizon)?;
        let cone = ConeStatistics::from_ensemble(&axis_ens, cfg.kappa)?;
        let se = (axis.std_error.powi(2) + plane.std_error.powi(2)).sqrt();
        let gap = if se > 0.0 { (axis.mean - plane.mean) / se } else { f64::NAN };
        log::info!("delta = {delta}: axis {:.4} ± {:.4}, plane {:.4} ± {:.4}, gap {gap:.1}", axis.mean, axis.std_error, plane.mean, plane.std_error);
        rungs.push(Rung {
            delta,
            epsilon: cfg.epsilon_ratio * delta,
            axis,
            plane,
            gap,
            cone_probability: cone.probability,
            cone_interval: cone.interval,
            invalid_paths: axis_ens.invalid_count() + plane_ens.invalid_count(),
        });
    }
    Ok(NonuniquenessReport {
        amplitude,
        kappa: cfg.kappa,
        truncation_bound: (-cfg.horizon).exp(),
        pilot,
        rungs,
        gap_threshold: cfg.gap_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NonuniquenessConfig {
        NonuniquenessConfig {
            deltas: vec![0.5, 0.25],
            paths: 2000,
            pilot_paths: 1000,
            horizon: 4.0,
            dt: 0.02,
            master_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        assert!(small().validate().is_ok());
        let bad = NonuniquenessConfig { kappa: 1.5, ..small() };
        assert!(bad.validate().is_err());
        let bad = NonuniquenessConfig { deltas: vec![0.25, 0.5], ..small() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn axis_start_separates_from_plane_start() {
        let rep = nonuniqueness_experiment(&small()).unwrap();
        assert!(rep.amplitude > 0.0 && !rep.pilot.is_empty());
        assert!(rep.plane_vanishes(), "{:?}", rep.rungs);
        assert!(rep.gap_persists(), "{:?}", rep.rungs);
        let flipped = nonuniqueness_experiment(&NonuniquenessConfig { flip_axis: true, amplitude: Some(rep.amplitude), ..small() }).unwrap();
        for (a, b) in rep.rungs.iter().zip(&flipped.rungs) {
            let se = (a.axis.std_error.powi(2) + b.axis.std_error.powi(2)).sqrt();
            assert!((a.axis.mean + b.axis.mean).abs() <= 4.0 * se, "{a:?} {b:?}");
        }
    }

    /// `∫_0^T e^{-t} E f(δ + √2 W_t) dt` for Brownian motion, by quadrature.
    fn brownian_t_value(delta: f64, horizon: f64) -> f64 {
        let g = crate::kernels::CutoffSpec;
        let (nt, nz) = (2000, 4000);
        let ht = horizon / nt as f64;
        let mut acc = 0.0;
        for i in 0..nt {
            let t = (i as f64 + 0.5) * ht;
            let sd = (2.0 * t).sqrt();
            let hz = 16.0 * sd / nz as f64;
            let mut e = 0.0;
            for j in 0..nz {
                let z = delta - 8.0 * sd + (j as f64 + 0.5) * hz;
                let w = (-(z - delta).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
                e += z.signum() * g.g(z.abs()) * w * hz;
            }
            acc += (-t).exp() * e * ht;
        }
        acc
    }

    #[test]
    fn weak_drift_reproduces_the_brownian_values() {
        let cfg = NonuniquenessConfig { amplitude: Some(1e-9), ..small() };
        let rep = nonuniqueness_experiment(&cfg).unwrap();
        for r in &rep.rungs {
            let exact = brownian_t_value(r.delta, cfg.horizon);
            assert!((r.axis.mean - exact).abs() <= 4.0 * r.axis.std_error, "{r:?} vs {exact}");
            assert!(r.plane_vanishes(), "{r:?}");
        }
        // Without drift the axis value is odd in δ and vanishes with it.
        assert!(brownian_t_value(0.01, 4.0).abs() < 0.1 * brownian_t_value(0.5, 4.0));
    }
}
