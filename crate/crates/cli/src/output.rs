//! Artifact emission. `report.json` and the CSV tables depend only on the
//! resolved config; wall-clock data goes to `header.json`.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sdl_core::report::ExperimentReport;

use crate::config::{CliError, EXIT_FAILED, EXIT_INCONCLUSIVE, EXIT_OK};

#[derive(Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub workers: usize,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Table names become file names.
fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' }).collect()
}

/// Writes binary artifacts, one CSV per table, `report.json` and
/// `header.json`; returns the exit code implied by the report.
pub fn emit(dir: &Path, mut report: ExperimentReport, binaries: Vec<(String, Vec<u8>)>, header: Header) -> Result<u8, CliError> {
    std::fs::create_dir_all(dir)?;
    report.config_hash = Some(header.config_hash.clone());
    let mut files = Vec::new();
    for (name, bytes) in &binaries {
        std::fs::write(dir.join(name), bytes)?;
        files.push(name.clone());
    }
    for t in &report.tables {
        let name = format!("{}.csv", file_stem(&t.name));
        std::fs::write(dir.join(&name), t.to_csv())?;
        files.push(name);
    }
    files.sort();
    files.dedup();
    report.files = files;
    let mut json = serde_json::to_string_pretty(&report).expect("reports serialize");
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    let mut h = serde_json::to_string_pretty(&header).expect("headers serialize");
    h.push('\n');
    std::fs::write(dir.join("header.json"), h)?;
    Ok(exit_code(&report))
}

pub fn exit_code(report: &ExperimentReport) -> u8 {
    if report.inconclusive {
        EXIT_INCONCLUSIVE
    } else if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}
