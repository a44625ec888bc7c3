//! Euler-Maruyama path ensembles for `dX = b(t, X) dt + √2 dW`.
//!
//! Every path owns a ChaCha stream keyed by `(master_seed, path)`, so the
//! ensemble is bit-identical for any number of worker threads. Paths are
//! advanced on the nominal grid `s + k·dt`; near a regularized singularity
//! a step is split into substeps with `|b(x)| h ≤ guard · ℓ(x)`, where `ℓ`
//! is the drift's local length scale.

mod functionals;
mod stopping;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use functionals::{
    cone_statistics, krylov_functional, krylov_samples, t_functional, t_functional_integrand, transition_density, ConeStatistics,
};
pub use stopping::{ConeTracker, StoppingRecord};

use crate::error::{invalid, LabError, Result};
use crate::kernels::{CutoffSpec, DriftField, DriftKind};
use crate::rng::{normal, stream, StreamRng};

const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EulerMaruyama,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepControl {
    /// One Euler step per grid interval. Regularized singular drifts are
    /// rejected unless `dt ≤ guard · ε / sup|b_ε|`.
    Fixed { guard: f64 },
    /// Local substeps with `|b(x)| h ≤ guard · ℓ(x)`, floored at `min_step`.
    Adaptive { guard: f64, min_step: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive { guard: 0.1, min_step: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    Point { x: Vec<f64> },
    /// Independent normals per axis; a zero scale pins that coordinate.
    Gaussian { center: Vec<f64>, scale: Vec<f64> },
}

impl InitialLaw {
    pub fn dims(&self) -> usize {
        match self {
            InitialLaw::Point { x } => x.len(),
            InitialLaw::Gaussian { center, .. } => center.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::Point { x } if x.iter().all(|v| v.is_finite()) => Ok(()),
            InitialLaw::Gaussian { center, scale }
                if center.len() == scale.len()
                    && center.iter().all(|v| v.is_finite())
                    && scale.iter().all(|v| *v >= 0.0 && v.is_finite()) =>
            {
                Ok(())
            }
            _ => Err(invalid("initial law must be finite with non-negative scales of matching length")),
        }
    }

    fn sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
        match self {
            InitialLaw::Point { x } => out.copy_from_slice(x),
            InitialLaw::Gaussian { center, scale } => {
                for a in 0..out.len() {
                    out[a] = center[a] + scale[a] * normal(rng);
                }
            }
        }
    }
}

fn default_record() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeConfig {
    #[serde(default)]
    pub start_time: f64,
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    #[serde(default)]
    pub scheme: Scheme,
    pub master_seed: u64,
    /// Store every `record_every`-th grid state; 0 keeps only the initial
    /// and terminal states.
    #[serde(default = "default_record")]
    pub record_every: usize,
    #[serde(default)]
    pub step_control: StepControl,
    /// Track cone exit and hyperplane hitting times.
    #[serde(default = "default_true")]
    pub stopping: bool,
    /// Accumulate `∫ e^{-(t-s)} f(X_t) dt` with `f(x) = sgn(x_d) g(|x_d|)`
    /// at substep resolution.
    #[serde(default)]
    pub t_integral: bool,
}

impl SdeConfig {
    pub fn new(horizon: f64, dt: f64, paths: usize, master_seed: u64) -> Self {
        Self {
            start_time: 0.0,
            horizon,
            dt,
            paths,
            scheme: Scheme::EulerMaruyama,
            master_seed,
            record_every: 1,
            step_control: StepControl::default(),
            stopping: true,
            t_integral: false,
        }
    }

    /// Noise coefficient of the equation.
    pub const NOISE: f64 = std::f64::consts::SQRT_2;

    /// Number of grid steps `K` with `K·dt = T - s`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.start_time >= 0.0 && self.horizon > self.start_time && self.horizon.is_finite()) {
            return Err(invalid(format!("need 0 ≤ s < T, got s = {}, T = {}", self.start_time, self.horizon)));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        if self.paths == 0 {
            return Err(invalid("need at least one path"));
        }
        let span = self.horizon - self.start_time;
        let k = (span / self.dt).round();
        if k < 1.0 || (k * self.dt - span).abs() > 1e-12 {
            return Err(invalid(format!("dt = {} does not divide T - s = {span}", self.dt)));
        }
        Ok(k as usize)
    }

    /// Grid indices at which states are stored.
    pub fn record_indices(&self) -> Result<Vec<usize>> {
        let k = self.steps()?;
        if self.record_every == 0 {
            return Ok(vec![0, k]);
        }
        let mut idx: Vec<usize> = (0..=k).step_by(self.record_every).collect();
        if *idx.last().unwrap() != k {
            idx.push(k);
        }
        Ok(idx)
    }
}

/// Simulated trajectories: `states[path][record][axis]`, flattened.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub config: SdeConfig,
    pub dims: usize,
    /// Recorded times, absolute.
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub valid: Vec<bool>,
    pub events: Vec<StoppingRecord>,
    /// Per-path `∫ e^{-(t-s)} f(X_t) dt` when requested, else empty.
    pub t_integrals: Vec<f64>,
    /// Per-path Lévy-type modulus `max |√2 ΔW| / √(2h log(1/h))`.
    pub noise_modulus: Vec<f64>,
    pub substeps: u64,
    pub floored_steps: u64,
}

impl PathEnsemble {
    pub fn paths(&self) -> usize {
        self.valid.len()
    }

    pub fn records(&self) -> usize {
        self.times.len()
    }

    pub fn state(&self, path: usize, record: usize) -> &[f64] {
        let base = (path * self.records() + record) * self.dims;
        &self.states[base..base + self.dims]
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    /// Index of the recorded time closest to `t`, if within `1e-9`.
    pub fn record_at(&self, t: f64) -> Option<usize> {
        let k = self.times.iter().enumerate().min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?.0;
        ((self.times[k] - t).abs() <= 1e-9).then_some(k)
    }

    /// States of valid paths at record `k`, row-major.
    pub fn valid_states_at(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.paths() * self.dims);
        for p in 0..self.paths() {
            if self.valid[p] {
                out.extend_from_slice(self.state(p, k));
            }
        }
        out
    }
}

fn regularized_scale(b: &DriftField) -> Option<f64> {
    match &b.kind {
        DriftKind::BiotSavartBlob { epsilon } => Some(*epsilon),
        DriftKind::Supercritical(s) if s.epsilon > 0.0 => Some(s.epsilon),
        DriftKind::Mollified { n, .. } => Some(1.0 / *n as f64),
        _ => None,
    }
}

/// Largest `|b|` on a `33^d` lattice of `[-4ε, 4ε]^d`.
fn sup_near_origin(b: &DriftField, eps: f64) -> f64 {
    let d = b.dims;
    let m = if d <= 2 { 33usize } else { 17 };
    let mut x = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut sup = 0.0f64;
    for k in 0..m.pow(d as u32) {
        let mut rem = k;
        for a in 0..d {
            x[a] = -4.0 * eps + 8.0 * eps * (rem % m) as f64 / (m - 1) as f64;
            rem /= m;
        }
        if b.eval(0.0, &x, &mut v).is_ok() {
            sup = sup.max(v.iter().map(|c| c * c).sum::<f64>().sqrt());
        }
    }
    sup
}

/// `dt ≤ guard · ε / sup|b_ε|` for regularized singular drifts; `None` when
/// the drift has no regularization scale.
pub fn stability_limit(b: &DriftField, guard: f64) -> Option<f64> {
    let eps = regularized_scale(b)?;
    let sup = sup_near_origin(b, eps);
    (sup > 0.0).then(|| guard * eps / sup)
}

struct PathOutcome {
    states: Vec<f64>,
    valid: bool,
    record: StoppingRecord,
    t_integral: f64,
    modulus: f64,
    substeps: u64,
    floored: u64,
}

struct Engine<'a> {
    b: &'a DriftField,
    init: &'a InitialLaw,
    cfg: &'a SdeConfig,
    steps: usize,
    record_mask: Vec<Option<usize>>,
    records: usize,
    cutoff: CutoffSpec,
}

impl Engine<'_> {
    fn run_path(&self, path: usize) -> PathOutcome {
        let d = self.b.dims;
        let cfg = self.cfg;
        let mut rng = stream(cfg.master_seed, path as u64);
        let mut states = vec![f64::NAN; self.records * d];
        let mut x = vec![0.0; d];
        self.init.sample(&mut rng, &mut x);
        states[..d].copy_from_slice(&x);
        let mut xn = vec![0.0; d];
        let mut bv = vec![0.0; d];
        let mut tracker = cfg.stopping.then(|| ConeTracker::new(&x));
        let f = |y: &[f64]| t_functional_integrand(&self.cutoff, y);
        let mut integral = 0.0;
        let mut f_prev = if cfg.t_integral { f(&x) } else { 0.0 };
        let mut modulus = 0.0f64;
        let (mut substeps, mut floored) = (0u64, 0u64);
        let s = cfg.start_time;
        let mut t = s;
        let mut valid = true;
        'grid: for k in 0..self.steps {
            let t_end = s + (k + 1) as f64 * cfg.dt;
            loop {
                if self.b.eval(t, &x, &mut bv).is_err() || bv.iter().any(|v| !v.is_finite()) {
                    valid = false;
                    break 'grid;
                }
                let mut h = t_end - t;
                if let StepControl::Adaptive { guard, min_step } = cfg.step_control {
                    if let Some(l) = self.b.length_scale(&x) {
                        let speed = bv.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if speed > 0.0 && speed * h > guard * l {
                            let hl = guard * l / speed;
                            if hl < min_step {
                                floored += 1;
                            }
                            h = hl.max(min_step).min(h);
                        }
                    }
                }
                let last = t + h >= t_end - 1e-12 * cfg.dt;
                if last {
                    h = t_end - t;
                }
                let sq = (2.0 * h).sqrt();
                let mut dw2 = 0.0;
                for a in 0..d {
                    let xi = normal(&mut rng);
                    dw2 += xi * xi;
                    xn[a] = x[a] + bv[a] * h + sq * xi;
                }
                if xn.iter().any(|v| !v.is_finite()) {
                    valid = false;
                    break 'grid;
                }
                if h < 1.0 {
                    modulus = modulus.max((2.0 * h * dw2).sqrt() / (2.0 * h * (1.0 / h).ln()).sqrt());
                }
                let t_next = if last { t_end } else { t + h };
                if let Some(tr) = tracker.as_mut() {
                    tr.update(t - s, &x, t_next - s, &xn);
                }
                if cfg.t_integral {
                    let f_next = f(&xn);
                    integral += 0.5 * h * ((-(t - s)).exp() * f_prev + (-(t_next - s)).exp() * f_next);
                    f_prev = f_next;
                }
                substeps += 1;
                std::mem::swap(&mut x, &mut xn);
                t = t_next;
                if last {
                    break;
                }
            }
            if let Some(r) = self.record_mask[k + 1] {
                states[r * d..(r + 1) * d].copy_from_slice(&x);
            }
        }
        let record = match tracker {
            Some(tr) => tr.finish(),
            None => StoppingRecord::default(),
        };
        PathOutcome { states, valid, record, t_integral: integral, modulus, substeps, floored }
    }
}

/// Simulates `cfg.paths` trajectories of `dX = b dt + √2 dW` from `init`.
///
/// Drifts with a point singularity are rejected; use a regularized or
/// mollified field. A path whose drift evaluation fails or whose state
/// becomes non-finite is flagged invalid and excluded downstream.
pub fn simulate(b: &DriftField, init: &InitialLaw, cfg: &SdeConfig) -> Result<PathEnsemble> {
    let steps = cfg.steps()?;
    init.validate()?;
    if init.dims() != b.dims {
        return Err(LabError::GeometryMismatch(format!("initial law is {}-d, drift is {}-d", init.dims(), b.dims)));
    }
    if !b.is_regular() {
        return Err(invalid("drift has a point singularity; regularize it (epsilon > 0 or mollification)"));
    }
    match cfg.step_control {
        StepControl::Fixed { guard } => {
            if let Some(limit) = stability_limit(b, guard) {
                if cfg.dt > limit {
                    return Err(LabError::Stability(format!(
                        "dt = {} exceeds the guard {limit:.3e} near the regularized singularity; \
                         use dt ≤ {limit:.3e} or adaptive step control",
                        cfg.dt
                    )));
                }
            }
        }
        StepControl::Adaptive { guard, min_step } => {
            if !(guard > 0.0 && min_step > 0.0) {
                return Err(invalid("adaptive step control needs positive guard and min_step"));
            }
        }
    }
    let indices = cfg.record_indices()?;
    let mut record_mask = vec![None; steps + 1];
    for (r, &k) in indices.iter().enumerate() {
        record_mask[k] = Some(r);
    }
    let engine = Engine { b, init, cfg, steps, record_mask, records: indices.len(), cutoff: CutoffSpec };
    let chunks: Vec<Vec<PathOutcome>> = (0..cfg.paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(cfg.paths)).map(|p| engine.run_path(p)).collect())
        .collect();

    let d = b.dims;
    let mut ens = PathEnsemble {
        config: cfg.clone(),
        dims: d,
        times: indices.iter().map(|&k| cfg.start_time + k as f64 * cfg.dt).collect(),
        states: Vec::with_capacity(cfg.paths * indices.len() * d),
        valid: Vec::with_capacity(cfg.paths),
        events: Vec::with_capacity(cfg.paths),
        t_integrals: Vec::new(),
        noise_modulus: Vec::with_capacity(cfg.paths),
        substeps: 0,
        floored_steps: 0,
    };
    for o in chunks.into_iter().flatten() {
        ens.states.extend_from_slice(&o.states);
        ens.valid.push(o.valid);
        ens.events.push(o.record);
        if cfg.t_integral {
            ens.t_integrals.push(o.t_integral);
        }
        ens.noise_modulus.push(o.modulus);
        ens.substeps += o.substeps;
        ens.floored_steps += o.floored;
    }
    let bad = ens.invalid_count();
    if bad > 0 {
        log::warn!("{bad} of {} paths invalid (singular drift evaluation or non-finite state)", cfg.paths);
    }
    if ens.floored_steps > 0 {
        log::warn!("{} substeps hit the minimum step", ens.floored_steps);
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SupercriticalSpec;
    use crate::stats::{ks_distance, MeanEstimate};

    fn terminal_coord(ens: &PathEnsemble, a: usize) -> Vec<f64> {
        let k = ens.records() - 1;
        (0..ens.paths()).filter(|&p| ens.valid[p]).map(|p| ens.state(p, k)[a]).collect()
    }

    #[test]
    fn brownian_variance_is_two_t() {
        let mut cfg = SdeConfig::new(1.0, 0.05, 20_000, 1);
        cfg.record_every = 0;
        let ens = simulate(&DriftField::zero(2), &InitialLaw::Point { x: vec![0.0, 0.0] }, &cfg).unwrap();
        for a in 0..2 {
            let xs = terminal_coord(&ens, a);
            let sq: Vec<f64> = xs.iter().map(|v| v * v).collect();
            let m = MeanEstimate::from_samples(&sq);
            assert!((m.mean - 2.0).abs() < 3.0 * m.std_error, "{m:?}");
        }
        assert_eq!(ens.records(), 2);
    }

    #[test]
    fn constant_drift_translates_the_mean() {
        let cfg = SdeConfig::new(0.8, 0.1, 10_000, 2);
        let c = vec![1.5, -0.5];
        let ens = simulate(&DriftField::constant(c.clone()), &InitialLaw::Point { x: vec![0.3, 0.1] }, &cfg).unwrap();
        for a in 0..2 {
            let m = MeanEstimate::from_samples(&terminal_coord(&ens, a));
            let want = [0.3, 0.1][a] + c[a] * 0.8;
            assert!((m.mean - want).abs() < 3.0 * m.std_error);
        }
    }

    #[test]
    fn ensemble_shape_and_initial_states() {
        let mut cfg = SdeConfig::new(1.0, 0.1, 7, 3);
        cfg.start_time = 0.5;
        cfg.horizon = 1.5;
        cfg.record_every = 3;
        let init = InitialLaw::Gaussian { center: vec![1.0, 2.0], scale: vec![0.0, 1.0] };
        let ens = simulate(&DriftField::zero(2), &init, &cfg).unwrap();
        assert_eq!(ens.times.len(), 5);
        assert!((ens.times[4] - 1.5).abs() < 1e-12);
        for p in 0..7 {
            assert_eq!(ens.state(p, 0)[0], 1.0);
        }
        assert!(SdeConfig { dt: 0.3, ..cfg.clone() }.steps().is_err());
        assert!(SdeConfig { start_time: 2.0, ..cfg.clone() }.steps().is_err());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let spec = SupercriticalSpec::new(3, 2.0, 1.0, 0.05).unwrap();
        let b = DriftField::supercritical(spec).unwrap();
        let mut cfg = SdeConfig::new(0.5, 0.05, 600, 9);
        cfg.t_integral = true;
        let init = InitialLaw::Point { x: vec![0.0, 0.0, 0.3] };
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| simulate(&b, &init, &cfg).unwrap())
        };
        let (a, b4) = (run(1), run(4));
        assert_eq!(a.states.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b4.states.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.t_integrals, b4.t_integrals);
        assert_eq!(a.events, b4.events);
    }

    #[test]
    fn singular_drifts_are_rejected() {
        let init = InitialLaw::Point { x: vec![1.0, 0.0] };
        let cfg = SdeConfig::new(1.0, 0.1, 4, 0);
        assert!(simulate(&DriftField::biot_savart(), &init, &cfg).is_err());
        assert!(simulate(&DriftField::blob(0.1).unwrap(), &init, &cfg).is_ok());
        assert!(simulate(&DriftField::zero(3), &init, &cfg).is_err());
    }

    #[test]
    fn fixed_step_guard_rejects_coarse_dt() {
        let spec = SupercriticalSpec::new(3, 2.0, 1.0, 0.01).unwrap();
        let b = DriftField::supercritical(spec).unwrap();
        let mut cfg = SdeConfig::new(0.1, 0.01, 4, 0);
        cfg.step_control = StepControl::Fixed { guard: 0.1 };
        let init = InitialLaw::Point { x: vec![0.0, 0.0, 0.1] };
        let err = simulate(&b, &init, &cfg).unwrap_err();
        assert!(matches!(err, LabError::Stability(_)), "{err}");
        let limit = stability_limit(&b, 0.1).unwrap();
        assert!(limit < 1e-3);
    }

    #[test]
    fn invalid_paths_are_counted_not_fatal() {
        let b = DriftField::custom(
            1,
            true,
            std::sync::Arc::new(|_t, x: &[f64], out: &mut [f64]| {
                if x[0] > 0.5 {
                    return Err(LabError::SingularPoint(x.to_vec()));
                }
                out[0] = 0.0;
                Ok(())
            }),
        );
        let cfg = SdeConfig::new(1.0, 0.1, 500, 4);
        let ens = simulate(&b, &InitialLaw::Point { x: vec![0.0] }, &cfg).unwrap();
        let bad = ens.invalid_count();
        assert!(bad > 100 && bad < 500, "{bad}");
        assert!(ens.state(ens.valid.iter().position(|v| !v).unwrap(), 10)[0].is_nan());
    }

    #[test]
    fn antisymmetric_drift_preserves_reflection_symmetry() {
        let spec = SupercriticalSpec::new(3, 2.0, 0.5, 0.05).unwrap();
        let b = DriftField::supercritical(spec).unwrap();
        let mut cfg = SdeConfig::new(0.5, 0.05, 4000, 5);
        cfg.record_every = 0;
        let init = InitialLaw::Gaussian { center: vec![0.0; 3], scale: vec![0.3, 0.3, 0.0] };
        let ens = simulate(&b, &init, &cfg).unwrap();
        let z = terminal_coord(&ens, 2);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let ks = ks_distance(&z, &neg);
        assert!(ks < 3.0 / (z.len() as f64).sqrt(), "{ks}");
    }
}
