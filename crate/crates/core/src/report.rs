//! Structured experiment results.
//!
//! A report carries only deterministic content. Wall-clock data belongs in
//! a separate header written by the runner, so that re-running a config
//! reproduces the report byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::stats::MeanEstimate;

/// Every numeric result is either exact (deterministic computation) or a
/// Monte Carlo estimate with a confidence interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum ResultValue {
    Exact { value: f64 },
    Ci { estimate: f64, lower: f64, upper: f64, level: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedResult {
    pub name: String,
    #[serde(flatten)]
    pub value: ResultValue,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip representation, so CSV output is reproducible.
pub fn fmt_f64(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v:?}").unwrap();
    s
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub results: Vec<NamedResult>,
    pub flags: BTreeMap<String, bool>,
    pub inconclusive: bool,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub tables: Vec<Table>,
    #[serde(default)]
    pub files: Vec<String>,
    #[serde(default)]
    pub payload: serde_json::Value,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), ..Default::default() }
    }

    pub fn exact(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.results.push(NamedResult { name: name.into(), value: ResultValue::Exact { value } });
        self
    }

    pub fn ci(&mut self, name: impl Into<String>, estimate: f64, lower: f64, upper: f64, level: f64) -> &mut Self {
        self.results.push(NamedResult { name: name.into(), value: ResultValue::Ci { estimate, lower, upper, level } });
        self
    }

    /// Normal 99% interval from a mean estimate.
    pub fn mean(&mut self, name: impl Into<String>, m: &MeanEstimate) -> &mut Self {
        let (lo, hi) = m.interval(0.99);
        self.ci(name, m.mean, lo, hi, 0.99)
    }

    pub fn flag(&mut self, name: impl Into<String>, ok: bool) -> &mut Self {
        self.flags.insert(name.into(), ok);
        self
    }

    pub fn note(&mut self, msg: impl Into<String>) -> &mut Self {
        self.notes.push(msg.into());
        self
    }

    pub fn table(&mut self, t: Table) -> &mut Self {
        self.tables.push(t);
        self
    }

    pub fn passed(&self) -> bool {
        !self.flags.is_empty() && self.flags.values().all(|&v| v)
    }

    pub fn result(&self, name: &str) -> Option<&ResultValue> {
        self.results.iter().find(|r| r.name == name).map(|r| &r.value)
    }

    /// Point value of a result regardless of its tag.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.result(name).map(|v| match v {
            ResultValue::Exact { value } => *value,
            ResultValue::Ci { estimate, .. } => *estimate,
        })
    }

    /// Appends another report's results, flags and tables under a prefix.
    pub fn merge(&mut self, prefix: &str, other: ExperimentReport) {
        for mut r in other.results {
            r.name = format!("{prefix}.{}", r.name);
            self.results.push(r);
        }
        for (k, v) in other.flags {
            self.flags.insert(format!("{prefix}.{k}"), v);
        }
        for mut t in other.tables {
            t.name = format!("{prefix}.{}", t.name);
            self.tables.push(t);
        }
        self.notes.extend(other.notes.into_iter().map(|n| format!("{prefix}: {n}")));
        self.inconclusive |= other.inconclusive;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips_and_tags() {
        let mut r = ExperimentReport::new("demo");
        r.exact("mass", 1.0).ci("var", 2.0, 1.9, 2.1, 0.99).flag("ok", true);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"tag\":\"exact\"") && s.contains("\"tag\":\"ci\""));
        let back: ExperimentReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(r.passed());
        assert_eq!(r.value("var"), Some(2.0));
    }

    #[test]
    fn csv_is_shortest_round_trip() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push_f64(&[0.1, 1e-20]);
        assert_eq!(t.to_csv(), "a,b\n0.1,1e-20\n");
    }

    #[test]
    fn empty_flags_do_not_pass() {
        assert!(!ExperimentReport::new("x").passed());
    }
}
