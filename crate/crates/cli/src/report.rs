//! Output envelope and verification report types.

use phylonet::analytics::CertifiedValue;
use phylonet::stats::{Estimate, TestResult};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// The single JSON object written per run.
#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub schema_version: u32,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub result: Value,
}

impl<'a> Envelope<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig, result: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            result,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable for this configuration; does not fail the suite.
    Skip,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Acceptance criterion this check contributes to.
    pub criterion: Option<u8>,
    pub status: Status,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(suite: &str, checks: Vec<Check>) -> Self {
        Self {
            suite: suite.into(),
            passed: checks.iter().all(|c| c.status != Status::Fail),
            checks,
        }
    }

    pub fn for_criterion(&self, c: u8) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |x| x.criterion == Some(c))
    }
}

/// Monte Carlo estimate with provenance.
pub fn estimate(method: &str, e: &Estimate) -> Value {
    json!({
        "method": method,
        "value": e.value,
        "error": e.std_error,
        "n_samples": e.n_samples,
        "flags": e.flags,
    })
}

/// Certified enclosure with provenance.
pub fn enclosure(method: &str, v: &CertifiedValue) -> Value {
    json!({
        "method": method,
        "value": v.mid(),
        "lower": v.lower,
        "upper": v.upper,
        "error": v.width(),
        "depth": v.depth,
        "certified": v.certified,
    })
}

/// A value from a root solve, with the solver tolerance as its error.
pub fn solved(method: &str, value: f64, error: f64) -> Value {
    json!({
        "method": method,
        "value": value,
        "error": error,
        "depth": Value::Null,
    })
}

pub fn test_result(t: &TestResult) -> Value {
    json!({"statistic": t.statistic, "p_value": t.p_value, "df": t.df})
}
