//! Run configs: parsing, validation, seeding and hashing.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::registry::{lookup, Prepared};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_SCHEMA: u8 = 64;
pub const EXIT_MISSING: u8 = 66;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {msg}")]
    Json { path: String, line: usize, column: usize, msg: String },
    #[error("config: {0}")]
    Schema(String),
    #[error("{0}: {1}")]
    Missing(String, std::io::Error),
    #[error(transparent)]
    Lab(#[from] sdl_core::error::LabError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Json { .. } | CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Missing(..) => EXIT_MISSING,
            CliError::Lab(sdl_core::error::LabError::InvalidParameter(_)) => EXIT_SCHEMA,
            _ => EXIT_FAILED,
        }
    }
}

const TOP_LEVEL: [&str; 4] = ["experiment", "master_seed", "workers", "output_dir"];

/// A parsed and validated run config.
pub struct RunConfig {
    pub experiment: &'static str,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub prepared: Prepared,
}

impl RunConfig {
    /// Hex sha256 of the canonical JSON of `{experiment, <block>: resolved}`.
    /// Worker count and output directory do not enter the hash.
    pub fn hash(&self) -> String {
        let block = lookup(self.experiment).expect("registered").block;
        let mut m = Map::new();
        m.insert("experiment".into(), Value::String(self.experiment.into()));
        m.insert(block.into(), self.prepared.resolved.clone());
        config_hash(&Value::Object(m))
    }
}

/// serde_json maps are ordered by key, so `to_string` is canonical.
pub fn config_hash(v: &Value) -> String {
    let digest = Sha256::digest(serde_json::to_string(v).expect("json values serialize").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Missing(path.display().to_string(), e))?;
    parse_json(&text, &path.display().to_string())
}

pub fn parse_json(text: &str, origin: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let mut msg = e.to_string();
        if let Some(i) = msg.rfind(" at line ") {
            msg.truncate(i);
        }
        CliError::Json { path: origin.into(), line: e.line(), column: e.column(), msg }
    })
}

fn take_u64(m: &mut Map<String, Value>, key: &str) -> Result<Option<u64>, CliError> {
    match m.remove(key) {
        None => Ok(None),
        Some(v) => v.as_u64().map(Some).ok_or_else(|| CliError::Schema(format!("{key} must be a non-negative integer"))),
    }
}

/// Validates a run config. Exactly the keys `experiment`, `master_seed`,
/// `workers`, `output_dir` and the experiment's parameter block are
/// accepted.
pub fn parse_run_config(v: Value) -> Result<RunConfig, CliError> {
    let Value::Object(mut m) = v else {
        return Err(CliError::Schema("run config must be a JSON object".into()));
    };
    let id = match m.remove("experiment") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(CliError::Schema("experiment must be a string".into())),
        None => return Err(CliError::Schema("missing key `experiment`".into())),
    };
    let entry = lookup(&id).ok_or_else(|| CliError::Schema(format!("unknown experiment `{id}`; see `sdl-lab list`")))?;
    let seed = take_u64(&mut m, "master_seed")?;
    let workers = take_u64(&mut m, "workers")?.map(|w| w as usize);
    if workers == Some(0) {
        return Err(CliError::Schema("workers must be positive".into()));
    }
    let output_dir = match m.remove("output_dir") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(CliError::Schema("output_dir must be a string".into())),
    };
    let mut block = m.remove(entry.block).unwrap_or_else(|| Value::Object(Map::new()));
    if let Some(k) = m.keys().next() {
        let allowed: Vec<&str> = TOP_LEVEL.iter().copied().chain([entry.block]).collect();
        return Err(CliError::Schema(format!("unknown key `{k}` for experiment `{id}` (allowed: {})", allowed.join(", "))));
    }
    apply_seed(&mut block, entry.seed_field, seed)?;
    Ok(RunConfig { experiment: entry.id, workers, output_dir, prepared: (entry.prepare)(block)? })
}

/// Moves the top-level seed into the block; setting it in both places is
/// ambiguous and rejected.
pub fn apply_seed(block: &mut Value, field: Option<&str>, seed: Option<u64>) -> Result<(), CliError> {
    let Some(seed) = seed else { return Ok(()) };
    let Some(field) = field else {
        return Err(CliError::Schema("this experiment is deterministic and takes no master_seed".into()));
    };
    let Value::Object(b) = block else {
        return Err(CliError::Schema("parameter block must be a JSON object".into()));
    };
    if b.contains_key(field) {
        return Err(CliError::Schema(format!("seed given both as master_seed and as block field `{field}`")));
    }
    b.insert(field.into(), Value::from(seed));
    Ok(())
}
