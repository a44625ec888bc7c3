//! Cone exit and hyperplane hitting times along a path.
//!
//! Cones are `C_{k,h} = {k|x̂| < x_d < h}` with `x̂ = (x_1, …, x_{d-1})`;
//! the tracker watches `C_{1,2}` and `C_1`. Crossing times are refined by
//! linear interpolation of the signed boundary distance between the two
//! bracketing (sub)steps.

use serde::{Deserialize, Serialize};

/// Times relative to the path's start time; `None` when not observed
/// within the horizon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StoppingRecord {
    /// First exit from `C_{1,2}`.
    pub tau_bar: Option<f64>,
    /// First exit from `C_1`.
    pub tau: Option<f64>,
    /// First hit of `{x_d = 0}`.
    pub sigma0: Option<f64>,
    /// First hit of `{x_d = 1}` after `tau_bar`.
    pub sigma1: Option<f64>,
    /// `tau_bar` happened through the top face `{x_d = 2}` inside `C_1`.
    pub exit_top: bool,
}

fn hat_norm(x: &[f64]) -> f64 {
    x[..x.len() - 1].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Signed distance-like margin to the side of `C_1`: positive inside.
fn cone_margin(x: &[f64]) -> f64 {
    x[x.len() - 1] - hat_norm(x)
}

fn crossing(t0: f64, g0: f64, t1: f64, g1: f64) -> f64 {
    if g0 == g1 {
        return t1;
    }
    let s = (g0 / (g0 - g1)).clamp(0.0, 1.0);
    t0 + s * (t1 - t0)
}

#[derive(Clone, Debug)]
pub struct ConeTracker {
    rec: StoppingRecord,
}

impl ConeTracker {
    pub fn new(x0: &[f64]) -> Self {
        let mut rec = StoppingRecord::default();
        let z = x0[x0.len() - 1];
        if cone_margin(x0) <= 0.0 {
            rec.tau = Some(0.0);
            rec.tau_bar = Some(0.0);
        } else if z >= 2.0 {
            rec.tau_bar = Some(0.0);
            rec.exit_top = true;
        }
        if z == 0.0 {
            rec.sigma0 = Some(0.0);
        }
        Self { rec }
    }

    /// Advances over the (sub)step `(t0, x0) → (t1, x1)`.
    pub fn update(&mut self, t0: f64, x0: &[f64], t1: f64, x1: &[f64]) {
        let d = x0.len();
        let (z0, z1) = (x0[d - 1], x1[d - 1]);
        let r = &mut self.rec;
        let tau_bar_was_set = r.tau_bar.is_some();
        if r.tau.is_none() {
            let (m0, m1) = (cone_margin(x0), cone_margin(x1));
            if m1 <= 0.0 {
                let tc = crossing(t0, m0, t1, m1);
                r.tau = Some(tc);
                if r.tau_bar.is_none() {
                    // Leaving C_1 leaves C_{1,2}; the top face may have come first.
                    let tt = if z1 >= 2.0 { Some(crossing(t0, 2.0 - z0, t1, 2.0 - z1)) } else { None };
                    match tt {
                        Some(tt) if tt < tc => {
                            r.tau_bar = Some(tt);
                            r.exit_top = true;
                        }
                        _ => r.tau_bar = Some(tc),
                    }
                }
            }
        }
        if r.tau_bar.is_none() && z1 >= 2.0 {
            r.tau_bar = Some(crossing(t0, 2.0 - z0, t1, 2.0 - z1));
            r.exit_top = true;
        }
        if r.sigma0.is_none() && (z1 == 0.0 || (z0 > 0.0) != (z1 > 0.0)) {
            r.sigma0 = Some(crossing(t0, z0, t1, z1));
        }
        if tau_bar_was_set && r.sigma1.is_none() && (z0 - 1.0) * (z1 - 1.0) <= 0.0 && z0 != 1.0 {
            r.sigma1 = Some(crossing(t0, z0 - 1.0, t1, z1 - 1.0));
        }
    }

    pub fn finish(self) -> StoppingRecord {
        self.rec
    }
}

impl StoppingRecord {
    /// `{τ̄ < 1 ∧ τ, σ₁ > 1 + τ̄}` observed on a horizon `horizon` (relative).
    /// `None` when the horizon is too short to decide.
    pub fn cone_event(&self, horizon: f64) -> Option<bool> {
        let Some(tb) = self.tau_bar else {
            return Some(false);
        };
        let before_exit = self.exit_top && tb < 1.0 && self.tau.is_none_or(|t| tb < t);
        if !before_exit {
            return Some(false);
        }
        match self.sigma1 {
            Some(s1) => Some(s1 > 1.0 + tb),
            None if horizon >= 1.0 + tb => Some(true),
            None => None,
        }
    }
}
