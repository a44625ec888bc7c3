//! Experiments that turn the a-priori estimates into pass/fail checks.

mod aronson;
mod checks;
mod holder;
mod krylov;
mod nonuniqueness;

use serde::{Deserialize, Serialize};

pub use aronson::{aronson_experiment, aronson_fit, heat_density, mollified_vortex_drift, AronsonConfig, AronsonFit};
pub use checks::{
    atom_pair, brownian_baseline, decay_experiment, duhamel_experiment, flow_experiment, heat_sanity, inequalities_experiment,
    oseen_reduction, particle_pde_consistency, vortex_pair, BrownianConfig, DecayConfig, DuhamelConfig, FlowConfig, HeatConfig,
    InequalitiesConfig, OseenConfig, ParticlePdeConfig,
};
pub use holder::{holder_experiment, holder_probe, HolderConfig, HolderFit, PairRow};
pub use krylov::{krylov_scan, test_family, KrylovConfig};
pub use nonuniqueness::{nonuniqueness_experiment, pilot_amplitude, NonuniquenessConfig, NonuniquenessReport, PilotRow, Rung};

use crate::error::Result;
use crate::kernels::{DriftField, SupercriticalSpec};
use crate::measure::MeasureSpec;

/// Drifts indexed by a regularization level `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftFamily {
    /// The same zero drift at every level.
    Zero { dims: usize },
    /// `K^n * ω` for the Biot-Savart kernel; `ω = δ₀` when absent.
    MollifiedVortex {
        #[serde(default)]
        vorticity: Option<MeasureSpec>,
    },
    /// The supercritical drift with `ε = 1/n`.
    Supercritical {
        d: usize,
        p: f64,
        #[serde(rename = "N")]
        amplitude: f64,
    },
}

impl DriftFamily {
    pub fn dims(&self) -> usize {
        match self {
            DriftFamily::Zero { dims } => *dims,
            DriftFamily::MollifiedVortex { .. } => 2,
            DriftFamily::Supercritical { d, .. } => *d,
        }
    }

    pub fn at_level(&self, n: u32) -> Result<DriftField> {
        match self {
            DriftFamily::Zero { dims } => Ok(DriftField::zero(*dims)),
            DriftFamily::MollifiedVortex { vorticity } => {
                mollified_vortex_drift(vorticity.as_ref().unwrap_or(&MeasureSpec::delta(vec![0.0, 0.0])), n)
            }
            DriftFamily::Supercritical { d, p, amplitude } => {
                DriftField::supercritical(SupercriticalSpec::new(*d, *p, *amplitude, 1.0 / n as f64)?)
            }
        }
    }
}
