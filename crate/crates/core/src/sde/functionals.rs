//! Path functionals: Krylov / Feynman-Kac integrals, the 𝒯 functional,
//! cone event statistics and transition densities.

use super::{PathEnsemble, StoppingRecord};
use crate::density::{estimate_density, DensityEstimate, DensityMethod};
use crate::error::{invalid, Result};
use crate::field::{GridGeometry, SpaceTimeField};
use crate::kernels::CutoffSpec;
use crate::report::{fmt_f64, ExperimentReport, Table};
use crate::stats::{wilson_interval, MeanEstimate};

/// `f(x) = sgn(x_d) g(|x_d|)`.
#[inline]
pub fn t_functional_integrand(g: &CutoffSpec, x: &[f64]) -> f64 {
    let z = x[x.len() - 1];
    if z == 0.0 {
        0.0
    } else {
        z.signum() * g.g(z.abs())
    }
}

fn eval_or_zero(f: &SpaceTimeField, t: f64, x: &[f64], misses: &mut usize) -> f64 {
    match f.eval(t, x) {
        Some(v) => v,
        None => {
            *misses += 1;
            0.0
        }
    }
}

/// Per-path values of `∫_s^T f(t, X_t) exp(-∫_s^t c(r, X_r) dr) dt` by the
/// trapezoid rule on the recorded times; `None` for invalid paths. Values
/// outside the frames' box count as zero.
pub fn krylov_samples(ens: &PathEnsemble, f: &SpaceTimeField, c: Option<&SpaceTimeField>) -> Result<Vec<Option<f64>>> {
    if f.geometry().dims != ens.dims || c.is_some_and(|c| c.geometry().dims != ens.dims) {
        return Err(invalid("functional and ensemble dimensions differ"));
    }
    if ens.records() < 2 {
        return Err(invalid("need at least two recorded times"));
    }
    let times = &ens.times;
    let mut misses = 0usize;
    let mut samples = Vec::with_capacity(ens.paths());
    for p in 0..ens.paths() {
        if !ens.valid[p] {
            samples.push(None);
            continue;
        }
        let mut acc = 0.0;
        let mut weight_log = 0.0f64;
        let mut prev_c = c.map(|c| eval_or_zero(c, times[0], ens.state(p, 0), &mut misses)).unwrap_or(0.0);
        let mut prev = eval_or_zero(f, times[0], ens.state(p, 0), &mut misses);
        for k in 1..ens.records() {
            let h = times[k] - times[k - 1];
            let x = ens.state(p, k);
            let w_prev = (-weight_log).exp();
            if let Some(c) = c {
                let ck = eval_or_zero(c, times[k], x, &mut misses);
                weight_log += 0.5 * h * (prev_c + ck);
                prev_c = ck;
            }
            let fk = eval_or_zero(f, times[k], x, &mut misses);
            acc += 0.5 * h * (prev * w_prev + fk * (-weight_log).exp());
            prev = fk;
        }
        samples.push(Some(acc));
    }
    if misses > 0 {
        log::warn!("{misses} evaluations fell outside the functional's box and were taken as zero");
    }
    Ok(samples)
}

/// Monte Carlo estimate of `E ∫_s^T f(t, X_t) exp(-∫_s^t c(r, X_r) dr) dt`
/// over the valid paths.
pub fn krylov_functional(ens: &PathEnsemble, f: &SpaceTimeField, c: Option<&SpaceTimeField>) -> Result<MeanEstimate> {
    let samples: Vec<f64> = krylov_samples(ens, f, c)?.into_iter().flatten().collect();
    Ok(MeanEstimate::from_samples(&samples))
}

/// Estimate of `E ∫_0^{horizon} e^{-t} f(X_t) dt` with
/// `f(x) = sgn(x_d) g(|x_d|)`, and the truncation bound `e^{-horizon}`.
///
/// Uses the substep-resolution accumulator when the ensemble carries it and
/// `horizon` is its full span, else the recorded states.
pub fn t_functional(ens: &PathEnsemble, horizon: f64) -> Result<(MeanEstimate, f64)> {
    let s = ens.config.start_time;
    let span = ens.config.horizon - s;
    if !(horizon > 0.0 && horizon <= span + 1e-12) {
        return Err(invalid(format!("horizon {horizon} not within the simulated span {span}")));
    }
    let bound = (-horizon).exp();
    if !ens.t_integrals.is_empty() && (horizon - span).abs() <= 1e-12 {
        let v: Vec<f64> = (0..ens.paths()).filter(|&p| ens.valid[p]).map(|p| ens.t_integrals[p]).collect();
        return Ok((MeanEstimate::from_samples(&v), bound));
    }
    let g = CutoffSpec;
    let mut samples = Vec::with_capacity(ens.paths());
    for p in (0..ens.paths()).filter(|&p| ens.valid[p]) {
        let mut acc = 0.0;
        let mut prev = t_functional_integrand(&g, ens.state(p, 0));
        for k in 1..ens.records() {
            let (t0, t1) = (ens.times[k - 1] - s, ens.times[k] - s);
            if t0 >= horizon - 1e-12 {
                break;
            }
            let cur = t_functional_integrand(&g, ens.state(p, k));
            let t1c = t1.min(horizon);
            let cur_c = if t1 > horizon { prev + (cur - prev) * (t1c - t0) / (t1 - t0) } else { cur };
            acc += 0.5 * (t1c - t0) * ((-t0).exp() * prev + (-t1c).exp() * cur_c);
            prev = cur;
        }
        samples.push(acc);
    }
    Ok((MeanEstimate::from_samples(&samples), bound))
}

/// Counts for the cone event `{τ̄ < 1 ∧ τ, σ₁ > 1 + τ̄}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeStatistics {
    pub kappa: f64,
    pub successes: usize,
    pub trials: usize,
    /// Valid paths whose horizon was too short to decide.
    pub undecided: usize,
    /// Valid paths that did not start in `C_{κ,1}`.
    pub started_outside: usize,
    pub probability: f64,
    pub interval: (f64, f64),
    pub marginals: Table,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

impl ConeStatistics {
    pub fn from_ensemble(ens: &PathEnsemble, kappa: f64) -> Result<Self> {
        if !(kappa > 1.0 && kappa.is_finite()) {
            return Err(invalid(format!("cone aperture needs κ > 1, got {kappa}")));
        }
        if ens.events.len() != ens.paths() || !ens.config.stopping {
            return Err(invalid("ensemble was simulated without stopping-time tracking"));
        }
        let span = ens.config.horizon - ens.config.start_time;
        let (mut successes, mut trials, mut undecided, mut outside) = (0, 0, 0, 0);
        for p in (0..ens.paths()).filter(|&p| ens.valid[p]) {
            let x0 = ens.state(p, 0);
            let d = x0.len();
            let z = x0[d - 1];
            let r = x0[..d - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(kappa * r < z && z < 1.0) {
                outside += 1;
            }
            match ens.events[p].cone_event(span) {
                Some(hit) => {
                    trials += 1;
                    successes += hit as usize;
                }
                None => undecided += 1,
            }
        }
        let probability = if trials > 0 { successes as f64 / trials as f64 } else { f64::NAN };
        let interval = wilson_interval(successes, trials, 0.99);
        let mut marginals = Table::new("stopping_marginals", &["time", "observed_fraction", "mean", "q10", "q50", "q90"]);
        let pick: [(&str, fn(&StoppingRecord) -> Option<f64>); 4] =
            [("tau_bar", |r| r.tau_bar), ("tau", |r| r.tau), ("sigma0", |r| r.sigma0), ("sigma1", |r| r.sigma1)];
        let valid = ens.valid.iter().filter(|v| **v).count().max(1);
        for (name, get) in pick {
            let mut v: Vec<f64> = (0..ens.paths()).filter(|&p| ens.valid[p]).filter_map(|p| get(&ens.events[p])).collect();
            v.sort_by(f64::total_cmp);
            let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            marginals.push(vec![
                name.to_string(),
                fmt_f64(v.len() as f64 / valid as f64),
                fmt_f64(mean),
                fmt_f64(quantile(&v, 0.1)),
                fmt_f64(quantile(&v, 0.5)),
                fmt_f64(quantile(&v, 0.9)),
            ]);
        }
        Ok(Self { kappa, successes, trials, undecided, started_outside: outside, probability, interval, marginals })
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new("cone-statistics");
        r.ci("event_probability", self.probability, self.interval.0, self.interval.1, 0.99)
            .exact("kappa", self.kappa)
            .exact("trials", self.trials as f64)
            .exact("undecided", self.undecided as f64)
            .exact("started_outside", self.started_outside as f64)
            .table(self.marginals.clone());
        if self.started_outside > 0 {
            r.note(format!("{} paths did not start in the cone C_(kappa,1)", self.started_outside));
        }
        r
    }
}

/// Empirical probability of the cone event with a 99% Wilson interval and
/// the marginals of `τ̄, τ, σ₀, σ₁`.
pub fn cone_statistics(ens: &PathEnsemble, kappa: f64) -> Result<ExperimentReport> {
    Ok(ConeStatistics::from_ensemble(ens, kappa)?.to_report())
}

/// Density of `X_t` from the valid paths, each weighted `1/M` so the total
/// mass is the valid fraction.
pub fn transition_density(ens: &PathEnsemble, t: f64, grid: GridGeometry, method: DensityMethod) -> Result<DensityEstimate> {
    let k = ens.record_at(t).ok_or_else(|| invalid(format!("t = {t} is not a recorded time")))?;
    if grid.dims != ens.dims {
        return Err(invalid("grid and ensemble dimensions differ"));
    }
    let pts = ens.valid_states_at(k);
    let n = pts.len() / ens.dims;
    let w = vec![1.0 / ens.paths() as f64; n];
    estimate_density(&pts, &w, grid, method)
}
