//! Randomized checks of the Lorentz-space inequalities.
//!
//! Each trial draws random Gaussian-bump fields, evaluates both sides of the
//! chosen inequality and records the ratio. The dilation check reuses the
//! same samples on a box shrunk by `λ`, which is exactly the field
//! `x ↦ f(λx)` at the corresponding resolution, so ratios must agree to
//! rounding whenever the exponents satisfy the scaling relation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lorentz_norm_sorted, sorted_positive, weak_norm_sorted, LorentzIndex};
use crate::error::{invalid, LabError, Result};
use crate::field::{GridGeometry, SampledField};
use crate::report::{fmt_f64, ExperimentReport, Table};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::spectral::{fractional_laplacian, linear_convolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Holder,
    Young,
    Interpolation,
    Ladyzhenskaya,
    GagliardoNirenberg,
    Poincare,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 6] = [
        InequalityKind::Holder,
        InequalityKind::Young,
        InequalityKind::Interpolation,
        InequalityKind::Ladyzhenskaya,
        InequalityKind::GagliardoNirenberg,
        InequalityKind::Poincare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::Holder => "holder",
            InequalityKind::Young => "young",
            InequalityKind::Interpolation => "interpolation",
            InequalityKind::Ladyzhenskaya => "ladyzhenskaya",
            InequalityKind::GagliardoNirenberg => "gagliardo_nirenberg",
            InequalityKind::Poincare => "poincare",
        }
    }
}

/// Exponents for one inequality. Interpolation derives `θ` from
/// `1/p = θ/p1 + (1-θ)/p2`; Ladyzhenskaya is fixed by the dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InequalityParams {
    Holder { p1: f64, q1: f64, p2: f64, q2: f64, p: f64, q: f64 },
    Young { p1: f64, q1: f64, p2: f64, q2: f64, p: f64, q: f64 },
    Interpolation { p1: f64, p2: f64, p: f64, q: f64 },
    Ladyzhenskaya,
    GagliardoNirenberg { alpha: f64, s: f64, sigma: f64, p1: f64, q1: f64, p: f64, q: f64 },
    Poincare { q: f64 },
}

const REL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL * a.abs().max(b.abs()).max(1.0)
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

impl InequalityParams {
    pub fn default_for(kind: InequalityKind) -> Self {
        match kind {
            InequalityKind::Holder => Self::Holder { p1: 4.0, q1: 2.0, p2: 4.0, q2: 2.0, p: 2.0, q: 1.0 },
            InequalityKind::Young => {
                Self::Young { p1: 4.0 / 3.0, q1: 2.0, p2: 4.0 / 3.0, q2: 2.0, p: 2.0, q: 2.0 }
            }
            InequalityKind::Interpolation => Self::Interpolation { p1: 1.5, p2: 6.0, p: 3.0, q: 2.0 },
            InequalityKind::Ladyzhenskaya => Self::Ladyzhenskaya,
            InequalityKind::GagliardoNirenberg => {
                Self::GagliardoNirenberg { alpha: 0.5, s: 2.0, sigma: 1.25, p1: 2.0, q1: 2.0, p: 4.0, q: 4.0 }
            }
            InequalityKind::Poincare => Self::Poincare { q: 2.0 },
        }
    }

    pub fn kind(&self) -> InequalityKind {
        match self {
            Self::Holder { .. } => InequalityKind::Holder,
            Self::Young { .. } => InequalityKind::Young,
            Self::Interpolation { .. } => InequalityKind::Interpolation,
            Self::Ladyzhenskaya => InequalityKind::Ladyzhenskaya,
            Self::GagliardoNirenberg { .. } => InequalityKind::GagliardoNirenberg,
            Self::Poincare { .. } => InequalityKind::Poincare,
        }
    }

    /// Rejects exponent tuples outside the inequality's hypotheses.
    pub fn validate(&self, dims: usize) -> Result<()> {
        let bad = |m: String| Err(LabError::ScalingRelation(m));
        match *self {
            Self::Holder { p1, q1, p2, q2, p, q } => {
                if [p1, p2, p, q1, q2].iter().any(|&v| !(v >= 1.0)) || !(q > 0.0) {
                    return bad("Hölder needs p1, p2, p, q1, q2 ≥ 1".into());
                }
                if !close(inv(p), inv(p1) + inv(p2)) || !close(inv(q), inv(q1) + inv(q2)) {
                    return bad(format!("Hölder needs 1/p = 1/p1 + 1/p2 and 1/q = 1/q1 + 1/q2, got {self:?}"));
                }
            }
            Self::Young { p1, q1, p2, q2, p, q } => {
                if [p1, p2, p].iter().any(|&v| !(v > 1.0 && v.is_finite())) || q1 < 1.0 || q2 < 1.0 || !(q > 0.0) {
                    return bad("Young needs 1 < p1, p2, p < ∞ and q1, q2 ≥ 1".into());
                }
                if !close(1.0 + 1.0 / p, 1.0 / p1 + 1.0 / p2) || inv(q) > inv(q1) + inv(q2) + REL {
                    return bad(format!("Young needs 1 + 1/p = 1/p1 + 1/p2 and 1/q ≤ 1/q1 + 1/q2, got {self:?}"));
                }
            }
            Self::Interpolation { p1, p2, p, q } => {
                if !(1.0 <= p1 && p1 < p && p < p2 && p2.is_finite() && q >= 1.0) {
                    return bad("interpolation needs 1 ≤ p1 < p < p2 < ∞ and q ≥ 1".into());
                }
            }
            Self::Ladyzhenskaya => {
                if dims < 2 {
                    return bad("Ladyzhenskaya needs d ≥ 2".into());
                }
            }
            Self::GagliardoNirenberg { alpha, s, sigma, p1, q1, p, q } => {
                if !(p > 1.0 && p1 > 1.0 && p.is_finite() && p1.is_finite() && q >= 1.0 && q1 >= 1.0) {
                    return bad("Gagliardo-Nirenberg needs 1 < p, p1 < ∞ and q, q1 ≥ 1".into());
                }
                if !(0.0 < alpha && alpha < sigma && sigma <= s) {
                    return bad("Gagliardo-Nirenberg needs 0 < α < σ ≤ s".into());
                }
                let theta = (sigma - alpha) / (s - alpha);
                if !close(theta, p1 / p) || !close(theta, q1 / q) || !(theta > 0.0 && theta <= 1.0) {
                    return bad(format!("Gagliardo-Nirenberg needs (σ-α)/(s-α) = p1/p = q1/q ∈ (0,1], got {self:?}"));
                }
            }
            Self::Poincare { q } => {
                if !(q >= 1.0 && q.is_finite()) {
                    return bad("Poincaré needs q ∈ [1, ∞)".into());
                }
            }
        }
        Ok(())
    }

    fn fields_needed(&self) -> usize {
        match self {
            Self::Holder { .. } | Self::Young { .. } => 2,
            _ => 1,
        }
    }
}

/// One anisotropic Gaussian bump `a · exp(-Σ (x_i - c_i)² / (2 w_i²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub widths: Vec<f64>,
    pub amplitude: f64,
}

/// A sum of Gaussian bumps, sampled lazily on any geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpField {
    pub bumps: Vec<Bump>,
}

impl BumpField {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let e: f64 = x
                    .iter()
                    .zip(&b.center)
                    .zip(&b.widths)
                    .map(|((xi, ci), wi)| (xi - ci) * (xi - ci) / (2.0 * wi * wi))
                    .sum();
                b.amplitude * (-e).exp()
            })
            .sum()
    }

    pub fn sample(&self, geometry: GridGeometry) -> SampledField {
        SampledField::from_fn(geometry, |x| self.eval(x))
    }
}

/// 1–8 bumps, centers uniform in `[-L/2, L/2]^d`, widths log-uniform in
/// `[L/64, L/8]` per axis, amplitudes of random sign with modulus in
/// `[0.2, 1]`.
pub fn random_bump_field(dims: usize, half_width: f64, rng: &mut StreamRng) -> BumpField {
    let n = rng.random_range(1..=8);
    let (lo, hi) = ((half_width / 64.0).ln(), (half_width / 8.0).ln());
    let bumps = (0..n)
        .map(|_| {
            let center = (0..dims).map(|_| rng.random_range(-0.5..0.5) * half_width).collect();
            let widths = (0..dims).map(|_| rng.random_range(lo..hi).exp()).collect();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Bump { center, widths, amplitude: sign * rng.random_range(0.2..1.0) }
        })
        .collect();
    BumpField { bumps }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub params: InequalityParams,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_dims")]
    pub dims: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_dilation")]
    pub dilation: f64,
    /// Trials of the calibration run; defaults to `max(trials, 20)`.
    #[serde(default)]
    pub pilot_trials: Option<usize>,
    /// Safety factor between the pilot maximum and the fitted constant.
    #[serde(default = "default_safety")]
    pub safety: f64,
}

fn default_dims() -> usize {
    2
}
fn default_half_width() -> f64 {
    8.0
}
fn default_resolutions() -> Vec<usize> {
    vec![256, 128]
}
fn default_dilation() -> f64 {
    2.5
}
fn default_safety() -> f64 {
    2.0
}

impl SuiteConfig {
    pub fn new(kind: InequalityKind, trials: usize, seed: u64) -> Self {
        Self {
            params: InequalityParams::default_for(kind),
            trials,
            seed,
            dims: default_dims(),
            half_width: default_half_width(),
            resolutions: default_resolutions(),
            dilation: default_dilation(),
            pilot_trials: None,
            safety: default_safety(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub resolution: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub dilated_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub kind: InequalityKind,
    pub trials: usize,
    pub pilot_max_ratio: f64,
    pub fitted_c: f64,
    pub max_ratio: f64,
    /// Maximum ratio per resolution, in config order.
    pub max_ratio_by_resolution: Vec<(usize, f64)>,
    pub violations: usize,
    pub max_dilation_deviation: f64,
    pub pass: bool,
    pub records: Vec<TrialRecord>,
}

impl SuiteOutcome {
    pub fn table(&self) -> Table {
        let mut t = Table::new(format!("inequality_{}", self.kind.name()), &["kind", "trial", "resolution", "lhs", "rhs", "ratio"]);
        for r in &self.records {
            t.push(vec![
                self.kind.name().to_string(),
                r.trial.to_string(),
                r.resolution.to_string(),
                fmt_f64(r.lhs),
                fmt_f64(r.rhs),
                fmt_f64(r.ratio),
            ]);
        }
        t
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut rep = ExperimentReport::new(format!("inequalities.{}", self.kind.name()));
        rep.exact("max_ratio", self.max_ratio)
            .exact("fitted_C", self.fitted_c)
            .exact("pilot_max_ratio", self.pilot_max_ratio)
            .exact("violations", self.violations as f64)
            .exact("max_dilation_deviation", self.max_dilation_deviation);
        for (m, r) in &self.max_ratio_by_resolution {
            rep.exact(format!("max_ratio_M{m}"), *r);
        }
        rep.flag("no_violations", self.violations == 0)
            .flag("dilation_invariant", self.max_dilation_deviation <= DILATION_TOL)
            .flag("finite", self.max_ratio.is_finite() && self.fitted_c.is_finite());
        rep.table(self.table());
        rep.payload = serde_json::json!({
            "kind": self.kind.name(),
            "max_ratio": self.max_ratio,
            "fitted_C": self.fitted_c,
            "pass": self.pass,
        });
        rep
    }
}

/// Relative agreement required between a ratio and its dilated twin.
pub const DILATION_TOL: f64 = 1e-8;

fn sorted_abs(values: &[f64]) -> Vec<f64> {
    sorted_positive(values.iter().map(|v| v.abs()).collect())
}

fn lorentz_of(values: &[f64], cell: f64, p: f64, q: f64) -> f64 {
    lorentz_norm_sorted(&sorted_abs(values), cell, LorentzIndex { p, q })
}

/// Central-difference gradient magnitude, one-sided at the faces.
fn gradient_magnitude(f: &SampledField) -> Vec<f64> {
    let g = f.geometry;
    let (m, d, h) = (g.resolution, g.dims, g.spacing());
    let mut idx = vec![0usize; d];
    let mut out = vec![0.0; g.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        g.multi_index(flat, &mut idx);
        let mut s = 0.0;
        let mut stride = 1usize;
        for a in (0..d).rev() {
            let i = idx[a];
            let der = if i == 0 {
                (f.values[flat + stride] - f.values[flat]) / h
            } else if i == m - 1 {
                (f.values[flat] - f.values[flat - stride]) / h
            } else {
                (f.values[flat + stride] - f.values[flat - stride]) / (2.0 * h)
            };
            s += der * der;
            stride *= m;
        }
        *o = s.sqrt();
    }
    out
}

/// Lattice offsets for the Hölder seminorm: the full `‖o‖_∞ ≤ 4` block
/// (one representative of each `±o` pair) plus dyadic multiples of the
/// axis and main-diagonal directions.
fn holder_offsets(dims: usize, m: usize) -> Vec<Vec<isize>> {
    let mut out = Vec::new();
    let span = 9usize.pow(dims as u32);
    for code in 0..span {
        let mut o = vec![0isize; dims];
        let mut c = code;
        for v in o.iter_mut() {
            *v = (c % 9) as isize - 4;
            c /= 9;
        }
        if o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(o);
        }
    }
    let mut step = 8isize;
    while (step as usize) < m {
        for a in 0..dims {
            let mut o = vec![0isize; dims];
            o[a] = step;
            out.push(o);
        }
        out.push(vec![step; dims]);
        step *= 2;
    }
    out
}

/// `max |u(x+o) - u(x)| / |o h|^α` over the offset set, non-periodic.
fn holder_seminorm(f: &SampledField, alpha: f64) -> f64 {
    let g = f.geometry;
    let (m, d, h) = (g.resolution as isize, g.dims, g.spacing());
    let mut idx = vec![0usize; d];
    let mut best = 0.0f64;
    for o in holder_offsets(d, g.resolution) {
        let len = o.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt() * h;
        let denom = len.powf(alpha);
        let shift: isize = o.iter().fold(0isize, |acc, &v| acc * m + v);
        let mut local = 0.0f64;
        for flat in 0..g.len() {
            g.multi_index(flat, &mut idx);
            if idx.iter().zip(&o).any(|(&i, &v)| {
                let j = i as isize + v;
                j < 0 || j >= m
            }) {
                continue;
            }
            let other = (flat as isize + shift) as usize;
            local = local.max((f.values[other] - f.values[flat]).abs());
        }
        best = best.max(local / denom);
    }
    best
}

fn poincare_sides(f: &SampledField, q: f64) -> (f64, f64) {
    let g = f.geometry;
    let r = g.half_width / 2.0;
    let grad = gradient_magnitude(f);
    let mut x = vec![0.0; g.dims];
    let (mut wsum, mut wu) = (0.0, 0.0);
    let mut inside = Vec::new();
    for i in 0..g.len() {
        g.center(i, &mut x);
        let rr = x.iter().map(|v| v * v).sum::<f64>() / (r * r);
        if rr < 1.0 {
            let w = (-1.0 / (1.0 - rr)).exp();
            wsum += w;
            wu += w * f.values[i];
            inside.push(i);
        }
    }
    let mean = wu / wsum;
    let n = inside.len() as f64;
    let lhs = (inside.iter().map(|&i| (f.values[i] - mean).abs().powf(q)).sum::<f64>() / n).powf(1.0 / q);
    let rhs = r * (inside.iter().map(|&i| grad[i].powf(q)).sum::<f64>() / n).powf(1.0 / q);
    (lhs, rhs)
}

/// Both sides of the inequality for the given sampled fields.
fn sides(params: &InequalityParams, fields: &[SampledField]) -> (f64, f64) {
    let g = fields[0].geometry;
    let cell = g.cell_measure();
    match *params {
        InequalityParams::Holder { p1, q1, p2, q2, p, q } => {
            let prod: Vec<f64> = fields[0].values.iter().zip(&fields[1].values).map(|(a, b)| a * b).collect();
            let lhs = lorentz_of(&prod, cell, p, q);
            let rhs = lorentz_of(&fields[0].values, cell, p1, q1) * lorentz_of(&fields[1].values, cell, p2, q2);
            (lhs, rhs)
        }
        InequalityParams::Young { p1, q1, p2, q2, p, q } => {
            let m = g.resolution;
            let (conv, _) = linear_convolution(&fields[0].values, m, &fields[1].values, m, g.dims);
            let conv: Vec<f64> = conv.into_iter().map(|v| v * cell).collect();
            let lhs = lorentz_of(&conv, cell, p, q);
            let rhs = lorentz_of(&fields[0].values, cell, p1, q1) * lorentz_of(&fields[1].values, cell, p2, q2);
            (lhs, rhs)
        }
        InequalityParams::Interpolation { p1, p2, p, q } => {
            let theta = (1.0 / p - 1.0 / p2) / (1.0 / p1 - 1.0 / p2);
            let v = sorted_abs(&fields[0].values);
            let lhs = lorentz_norm_sorted(&v, cell, LorentzIndex { p, q });
            let rhs = weak_norm_sorted(&v, cell, p1).powf(theta) * weak_norm_sorted(&v, cell, p2).powf(1.0 - theta);
            (lhs, rhs)
        }
        InequalityParams::Ladyzhenskaya => {
            let d = g.dims as f64;
            let lhs = lorentz_of(&fields[0].values, cell, 2.0 * d / (d - 1.0), 2.0);
            let grad = gradient_magnitude(&fields[0]);
            let gn = (grad.iter().map(|v| v * v).sum::<f64>() * cell).sqrt();
            let un = fields[0].lp_norm(2.0);
            (lhs, gn.sqrt() * un.sqrt())
        }
        InequalityParams::GagliardoNirenberg { alpha, s, sigma, p1, q1, p, q } => {
            let theta = (sigma - alpha) / (s - alpha);
            let f = &fields[0];
            let ls = fractional_laplacian(&f.values, g.dims, g.resolution, g.half_width, sigma);
            let lhs = lorentz_of(&ls, cell, p, q);
            let lss = fractional_laplacian(&f.values, g.dims, g.resolution, g.half_width, s);
            let rhs = lorentz_of(&lss, cell, p1, q1).powf(theta) * holder_seminorm(f, alpha).powf(1.0 - theta);
            (lhs, rhs)
        }
        InequalityParams::Poincare { q } => poincare_sides(&fields[0], q),
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

fn run_trials(cfg: &SuiteConfig, seed: u64, trials: usize, resolution: usize) -> Result<Vec<TrialRecord>> {
    let geometry = GridGeometry::new(cfg.dims, cfg.half_width, resolution)?;
    let dilated = geometry.dilated(cfg.dilation);
    let nf = cfg.params.fields_needed();
    Ok((0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, trial as u64);
            let fields: Vec<SampledField> =
                (0..nf).map(|_| random_bump_field(cfg.dims, cfg.half_width, &mut rng).sample(geometry)).collect();
            let (lhs, rhs) = sides(&cfg.params, &fields);
            let dil: Vec<SampledField> = fields.iter().map(|f| f.dilate(cfg.dilation)).collect();
            debug_assert!(dil[0].geometry.same_as(&dilated));
            let (dl, dr) = sides(&cfg.params, &dil);
            TrialRecord { trial, resolution, lhs, rhs, ratio: ratio(lhs, rhs), dilated_ratio: ratio(dl, dr) }
        })
        .collect())
}

fn max_ratio(records: &[TrialRecord]) -> f64 {
    records.iter().fold(0.0, |m: f64, r| if r.ratio.is_nan() { f64::NAN } else { m.max(r.ratio) })
}

/// Runs the randomized check for one inequality.
///
/// The constant is fitted as `safety × (max pilot ratio)` from an
/// independent calibration run at the first resolution. The suite passes
/// when every ratio is finite and at most the fitted constant at every
/// resolution, and every ratio agrees with its dilated twin to
/// [`DILATION_TOL`].
pub fn inequality_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    cfg.params.validate(cfg.dims)?;
    if cfg.trials == 0 || cfg.resolutions.is_empty() {
        return Err(invalid("inequality suite needs trials ≥ 1 and at least one resolution"));
    }
    if !(cfg.dilation > 0.0 && cfg.dilation.is_finite()) || !(cfg.safety >= 1.0) {
        return Err(invalid("dilation must be positive and safety ≥ 1"));
    }
    let pilot_trials = cfg.pilot_trials.unwrap_or(cfg.trials.max(20));
    let pilot = run_trials(cfg, derive_seed(cfg.seed, 0x7069_6c6f_74), pilot_trials, cfg.resolutions[0])?;
    let pilot_max = max_ratio(&pilot);
    let fitted_c = cfg.safety * pilot_max;

    let mut records = Vec::new();
    let mut by_res = Vec::new();
    for &m in &cfg.resolutions {
        let recs = run_trials(cfg, cfg.seed, cfg.trials, m)?;
        by_res.push((m, max_ratio(&recs)));
        records.extend(recs);
    }
    let max_ratio = by_res.iter().fold(0.0, |a: f64, (_, r)| a.max(*r));
    let violations = records.iter().filter(|r| !(r.ratio.is_finite() && r.ratio <= fitted_c)).count();
    let max_dev = records
        .iter()
        .map(|r| {
            if r.ratio == 0.0 && r.dilated_ratio == 0.0 {
                0.0
            } else {
                ((r.ratio - r.dilated_ratio) / r.ratio).abs()
            }
        })
        .fold(0.0, |a: f64, v| if v.is_nan() { f64::INFINITY } else { a.max(v) });
    let pass = fitted_c.is_finite() && violations == 0 && max_dev <= DILATION_TOL;
    Ok(SuiteOutcome {
        kind: cfg.params.kind(),
        trials: cfg.trials,
        pilot_max_ratio: pilot_max,
        fitted_c,
        max_ratio,
        max_ratio_by_resolution: by_res,
        violations,
        max_dilation_deviation: max_dev,
        pass,
        records,
    })
}
