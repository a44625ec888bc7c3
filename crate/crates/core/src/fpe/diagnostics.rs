//! Decay of the heat semigroup in weighted norms and the flow property of
//! the nonlinear solver.

use serde::{Deserialize, Serialize};

use super::{decay_weight, heat_propagate, lr_norm, solve_nfpe, NfpeKernel, PeriodicGrid, SolverOptions};
use crate::error::{invalid, Result};
use crate::field::SampledField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    /// `‖h(t) * ζ‖_{L^r}`.
    pub lr_norm: f64,
    /// `t^{d/(2r')} ‖h(t) * ζ‖_{L^r}`.
    pub weighted: f64,
}

/// `t ↦ t^{d/(2r')} ‖h(t) * ζ‖_{L^r}` on the given times.
///
/// For an atom the weighted quantity is constant; for an absolutely
/// continuous `ζ` it tends to zero as `t → 0`.
pub fn decay_diagnostic(grid: &PeriodicGrid, zeta: &SampledField, r: f64, times: &[f64]) -> Result<Vec<DecayRow>> {
    if !(r > 1.0) {
        return Err(invalid("decay diagnostic needs r > 1"));
    }
    let cell = grid.geometry.cell_measure();
    times
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(invalid("decay times must be positive"));
            }
            let f = heat_propagate(grid, zeta, t)?;
            let n = lr_norm(&f.values, cell, r);
            Ok(DecayRow { t, lr_norm: n, weighted: decay_weight(t, grid.dims(), r) * n })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowCheck {
    pub r_mid: f64,
    /// `‖μ_T - μ_T^{restart}‖_{L^1}`.
    pub distance: f64,
    /// `‖μ_T^{dt} - μ_T^{dt/2}‖_{L^1}`, the scale of the time-stepping error.
    pub splitting_error: f64,
}

impl FlowCheck {
    pub fn holds(&self) -> bool {
        self.distance <= 2.0 * self.splitting_error
    }
}

/// Solves on `[0, T]`, restarts from `μ_{r_mid}` and solves on `[r_mid, T]`
/// with the same step, and compares the terminal densities.
pub fn flow_property_check(
    grid: &PeriodicGrid,
    kernel: &NfpeKernel,
    zeta: &SampledField,
    r_mid: f64,
    horizon: f64,
    dt: f64,
) -> Result<FlowCheck> {
    if !(0.0..=horizon).contains(&r_mid) {
        return Err(invalid("restart time must lie in [0, T]"));
    }
    let k_mid = (r_mid / dt).round();
    if (k_mid * dt - r_mid).abs() > 1e-9 {
        return Err(invalid("restart time must lie on the step grid"));
    }
    let mut o = SolverOptions::new(horizon, dt);
    o.record_every = k_mid as usize;
    let full = solve_nfpe(grid, kernel, zeta, &o)?;
    let mid = full.frame_at(r_mid).ok_or_else(|| invalid("restart frame was not recorded"))?;
    let mut ro = SolverOptions::new(horizon, dt);
    ro.start_time = r_mid;
    let restart = solve_nfpe(grid, kernel, mid, &ro)?;
    let fine = solve_nfpe(grid, kernel, zeta, &SolverOptions::new(horizon, dt / 2.0))?;
    Ok(FlowCheck {
        r_mid,
        distance: full.last().l1_distance(restart.last())?,
        splitting_error: full.last().l1_distance(fine.last())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{AtomRealization, MeasureSpec};

    #[test]
    fn atom_is_flat_and_smooth_data_decays() {
        let grid = PeriodicGrid::new(2, 2.0, 256).unwrap();
        let g = grid.geometry;
        let times = [1e-3, 1e-2, 1e-1];
        let atom = MeasureSpec::delta(vec![0.0, 0.0]).realize(g, AtomRealization::BandLimited).unwrap();
        let rows = decay_diagnostic(&grid, &atom, 4.0, &times).unwrap();
        // ‖h(t)‖_{L^r} = (4πt)^{-d/2 (1-1/r)} r^{-d/(2r)}.
        let exact = (4.0 * std::f64::consts::PI).powf(-0.75) * 4f64.powf(-0.25);
        for row in &rows {
            assert!((row.weighted / exact - 1.0).abs() < 1e-6, "{row:?}");
        }
        let smooth = MeasureSpec::gaussian(vec![0.0, 0.0], 0.5, 1.0).realize(g, AtomRealization::BandLimited).unwrap();
        let rows = decay_diagnostic(&grid, &smooth, 4.0, &times).unwrap();
        assert!(rows[2].weighted / rows[0].weighted >= 10.0, "{rows:?}");
        assert!(decay_diagnostic(&grid, &smooth, 1.0, &times).is_err());
    }

    #[test]
    fn restart_at_zero_is_exact() {
        let grid = PeriodicGrid::new(2, 4.0, 32).unwrap();
        let z = MeasureSpec::gaussian(vec![0.2, 0.0], 0.4, 1.0).realize(grid.geometry, AtomRealization::OneCell).unwrap();
        let c = flow_property_check(&grid, &NfpeKernel::BiotSavart, &z, 0.0, 0.2, 0.02).unwrap();
        assert_eq!(c.distance, 0.0);
        let mid = flow_property_check(&grid, &NfpeKernel::BiotSavart, &z, 0.1, 0.2, 0.02).unwrap();
        assert!(mid.holds(), "{mid:?}");
        assert!(flow_property_check(&grid, &NfpeKernel::BiotSavart, &z, 0.105, 0.2, 0.02).is_err());
    }
}
