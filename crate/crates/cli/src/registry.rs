//! Experiment registry: id, parameter block, expected runtime and runner.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use sdl_core::error::Result as CoreResult;
use sdl_core::estimates::*;
use sdl_core::report::ExperimentReport;

use crate::config::CliError;

/// A validated experiment ready to run.
pub struct Prepared {
    /// Fully resolved parameter block, defaults filled in.
    pub resolved: Value,
    pub exec: Box<dyn FnOnce() -> CoreResult<ExperimentReport>>,
}

pub struct Entry {
    pub id: &'static str,
    /// Name of the parameter block in a run config.
    pub block: &'static str,
    /// Field of the block that receives the top-level `master_seed`.
    pub seed_field: Option<&'static str>,
    pub runtime: &'static str,
    pub summary: &'static str,
    pub prepare: fn(Value) -> Result<Prepared, CliError>,
}

fn typed<C>(block: Value, run: fn(&C) -> CoreResult<ExperimentReport>) -> Result<Prepared, CliError>
where
    C: DeserializeOwned + Serialize + 'static,
{
    let cfg: C = serde_json::from_value(block).map_err(|e| CliError::Schema(e.to_string()))?;
    let resolved = serde_json::to_value(&cfg).map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(Prepared { resolved, exec: Box::new(move || run(&cfg)) })
}

pub const REGISTRY: &[Entry] = &[
    Entry {
        id: "heat-sanity",
        block: "heat",
        seed_field: None,
        runtime: "< 1 s",
        summary: "zero-drift solver against the analytic heat flow of a Gaussian",
        prepare: |b| typed(b, heat_sanity),
    },
    Entry {
        id: "brownian-baseline",
        block: "brownian",
        seed_field: Some("master_seed"),
        runtime: "~1 s",
        summary: "terminal variance of the zero-drift SDE",
        prepare: |b| typed(b, brownian_baseline),
    },
    Entry {
        id: "oseen",
        block: "oseen",
        seed_field: None,
        runtime: "~10 s",
        summary: "Biot-Savart flow of a radial density equals heat flow",
        prepare: |b| typed(b, oseen_reduction),
    },
    Entry {
        id: "particle-pde",
        block: "particles",
        seed_field: Some("master_seed"),
        runtime: "~1 min",
        summary: "random vortex method against the vorticity solver",
        prepare: |b| typed(b, particle_pde_consistency),
    },
    Entry {
        id: "aronson",
        block: "aronson",
        seed_field: None,
        runtime: "~5 s",
        summary: "two-sided Gaussian bounds across mollification levels",
        prepare: |b| typed(b, aronson_experiment),
    },
    Entry {
        id: "krylov-scan",
        block: "krylov",
        seed_field: Some("master_seed"),
        runtime: "~10 s",
        summary: "occupation-functional ratios over a test family",
        prepare: |b| typed(b, krylov_scan),
    },
    Entry {
        id: "holder",
        block: "holder",
        seed_field: Some("master_seed"),
        runtime: "~20 s",
        summary: "Hölder exponent of x ↦ E∫f(X^x) from paired paths",
        prepare: |b| typed(b, holder_experiment),
    },
    Entry {
        id: "nonuniqueness",
        block: "nonuniqueness",
        seed_field: Some("master_seed"),
        runtime: "~4 min",
        summary: "axis/plane gap of the odd functional for the supercritical drift",
        prepare: |b| typed(b, |c: &NonuniquenessConfig| Ok(nonuniqueness_experiment(c)?.to_report())),
    },
    Entry {
        id: "decay",
        block: "decay",
        seed_field: None,
        runtime: "< 1 s",
        summary: "weighted heat decay for atoms and smooth data",
        prepare: |b| typed(b, decay_experiment),
    },
    Entry {
        id: "duhamel",
        block: "duhamel",
        seed_field: None,
        runtime: "~1 s",
        summary: "Picard contraction of the mild equation against atomic mass",
        prepare: |b| typed(b, duhamel_experiment),
    },
    Entry {
        id: "flow",
        block: "flow",
        seed_field: None,
        runtime: "~10 s",
        summary: "restart consistency of the nonlinear solver",
        prepare: |b| typed(b, flow_experiment),
    },
    Entry {
        id: "inequalities",
        block: "inequalities",
        seed_field: Some("seed"),
        runtime: "~2 min",
        summary: "randomized Lorentz and Sobolev inequality suites",
        prepare: |b| typed(b, inequalities_experiment),
    },
];

pub fn lookup(id: &str) -> Option<&'static Entry> {
    REGISTRY.iter().find(|e| e.id == id)
}
