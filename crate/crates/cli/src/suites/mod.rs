//! Verification suites. Each check is a statistical or exact comparison
//! against an independent oracle and records its statistics in the report.

mod analytics;
mod crt;
mod local;
mod model;
mod network;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{Check, Status, SuiteReport};

/// Significance level of every hypothesis test.
pub const ALPHA: f64 = 0.01;
/// Standard errors allowed between an estimate and its target.
pub const Z_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Model,
    Analytics,
    Network,
    Crt,
    Local,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Model => "model",
            Suite::Analytics => "analytics",
            Suite::Network => "network",
            Suite::Crt => "crt",
            Suite::Local => "local",
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &RunConfig) -> SuiteReport {
    let checks = match suite {
        Suite::Model => model::run(cfg),
        Suite::Analytics => analytics::run(cfg),
        Suite::Network => network::run(cfg),
        Suite::Crt => crt::run(cfg),
        Suite::Local => local::run(cfg),
    };
    SuiteReport::new(suite.name(), checks)
}

pub(crate) struct Outcome {
    status: Status,
    detail: Value,
}

pub(crate) fn pass_if(ok: bool, detail: Value) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

pub(crate) fn skip(reason: &str) -> Outcome {
    Outcome {
        status: Status::Skip,
        detail: json!({ "reason": reason }),
    }
}

/// Runs one check. Errors become failures carrying the message.
pub(crate) fn check(name: &str, criterion: Option<u8>, f: impl FnOnce() -> phylonet::Result<Outcome>) -> Check {
    let (status, detail) = match f() {
        Ok(o) => (o.status, o.detail),
        Err(e) => (Status::Fail, json!({ "error": e.to_string(), "numeric": e.is_numeric() })),
    };
    eprintln!("check {name}: {}", status.as_str());
    Check {
        name: name.into(),
        criterion,
        status,
        detail,
    }
}
